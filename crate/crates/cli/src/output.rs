//! Output files are built in memory and written together at the end, so a
//! failed run leaves nothing behind and the manifest lists every file.

use std::fs;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;

#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.files.push((name.to_string(), bytes));
        Ok(())
    }

    pub fn csv(
        &mut self,
        name: &str,
        header: &[&str],
        rows: impl IntoIterator<Item = Vec<String>>,
    ) -> anyhow::Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        self.files.push((name.to_string(), w.into_inner()?));
        Ok(())
    }

    pub fn names(&self) -> Vec<String> {
        self.files.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn write_all(&self, dir: &Path) -> anyhow::Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut out = Outputs::default();
        out.csv("a.csv", &["x", "y"], vec![vec![num(0.1), num(2.0)]]).unwrap();
        assert_eq!(out.files[0].1, b"x,y\n0.1,2.0\n");
        assert_eq!(out.names(), vec!["a.csv".to_string()]);
    }

    #[test]
    fn nothing_written_until_asked() {
        let dir = tempfile::tempdir().unwrap();
        let target = dir.path().join("run");
        let mut out = Outputs::default();
        out.json("s.json", &[1, 2]).unwrap();
        assert!(!target.exists());
        out.write_all(&target).unwrap();
        assert_eq!(fs::read_to_string(target.join("s.json")).unwrap(), "[\n  1,\n  2\n]\n");
    }
}
