//! Data-parallel helpers.
//!
//! With the `parallel` feature the helpers dispatch to rayon; without it they
//! run as plain iterators. Results are always collected in index order, so the
//! output of every helper is independent of scheduling.
//!
//! [`Sequential`] forces the sequential path on the current thread even when
//! the feature is enabled; the benches use it to compare both paths from one
//! binary.

use std::cell::Cell;

thread_local! {
    static FORCE_SEQUENTIAL: Cell<bool> = const { Cell::new(false) };
}

/// Guard that forces sequential execution on this thread until dropped.
pub struct Sequential {
    previous: bool,
}

impl Sequential {
    pub fn enter() -> Self {
        let previous = FORCE_SEQUENTIAL.with(|f| f.replace(true));
        Sequential { previous }
    }
}

impl Drop for Sequential {
    fn drop(&mut self) {
        FORCE_SEQUENTIAL.with(|f| f.set(self.previous));
    }
}

/// Whether helpers called from this thread will run in parallel.
pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && !FORCE_SEQUENTIAL.with(|f| f.get())
}

/// `(0..n).map(f).collect()`, possibly in parallel.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}

/// `items.iter().map(f).collect()`, possibly in parallel.
pub fn map_slice<S, T, F>(items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    items.iter().map(f).collect()
}

/// Fills `out` in chunks of `chunk` elements; `f(chunk_index, chunk)`.
pub fn for_each_chunk_mut<T, F>(out: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        out.par_chunks_mut(chunk)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
        return;
    }
    out.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_guard_restores_state() {
        let before = is_parallel();
        {
            let _g = Sequential::enter();
            assert!(!is_parallel());
            {
                let _inner = Sequential::enter();
                assert!(!is_parallel());
            }
            assert!(!is_parallel());
        }
        assert_eq!(is_parallel(), before);
    }

    #[test]
    fn both_paths_agree() {
        let par = map_range(1000, |i| (i as f64).sqrt());
        let seq = {
            let _g = Sequential::enter();
            map_range(1000, |i| (i as f64).sqrt())
        };
        assert_eq!(par, seq);

        let mut a = vec![0usize; 37];
        for_each_chunk_mut(&mut a, 5, |ci, c| {
            for (k, v) in c.iter_mut().enumerate() {
                *v = ci * 5 + k;
            }
        });
        assert_eq!(a, (0..37).collect::<Vec<_>>());
    }
}
