//! CSV tables written into the run's output directory.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use bohmlab::bohm::Trajectory;
use bohmlab::RealField;

/// Writes files into one directory and remembers their names, in order.
pub struct Sink {
    dir: PathBuf,
    files: Vec<String>,
}

impl Sink {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Sink {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn writer(&mut self, name: &str) -> Result<csv::Writer<std::fs::File>> {
        let path = self.dir.join(name);
        let w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(w)
    }

    /// `scenario,traj_id,t,x`, one row per stored sample.
    pub fn trajectories<'a, I>(&mut self, name: &str, scenario: &str, rows: I) -> Result<()>
    where
        I: IntoIterator<Item = (String, &'a [(f64, f64)])>,
    {
        let mut w = self.writer(name)?;
        w.write_record(["scenario", "traj_id", "t", "x"])?;
        for (id, samples) in rows {
            for &(t, x) in samples {
                w.serialize((scenario, &id, t, x))?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn bohm_trajectories(&mut self, name: &str, scenario: &str, trs: &[Trajectory]) -> Result<()> {
        self.trajectories(
            name,
            scenario,
            trs.iter().enumerate().map(|(i, tr)| (i.to_string(), tr.samples.as_slice())),
        )
    }

    /// `t,x,value` over the defined points of every field.
    pub fn fields<'a, I>(&mut self, name: &str, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = &'a RealField>,
    {
        let mut w = self.writer(name)?;
        w.write_record(["t", "x", "value"])?;
        for f in fields {
            let g = f.grid();
            for j in 0..g.len() {
                if let Some(v) = f.get(j) {
                    w.serialize((f.t(), g.x(j), v))?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// One serialized row per record, under the given header.
    pub fn table<R: serde::Serialize>(&mut self, name: &str, header: &[&str], rows: &[R]) -> Result<()> {
        let mut w = self.writer(name)?;
        w.write_record(header)?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn text(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }
}
