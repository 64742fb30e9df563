//! Tab-separated list of `input<TAB>target` image paths.
//!
//! Relative paths resolve against the manifest's directory. Blank lines and
//! lines starting with `#` are skipped.

use std::path::{Path, PathBuf};

use latop::{Boundary, Dataset, Error, SamplePair};

use crate::error::{read_text, CliError, CliResult};
use crate::pbm::read_pbm;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub pairs: Vec<(PathBuf, PathBuf)>,
}

impl Manifest {
    pub fn parse(text: &str, base: &Path) -> latop::Result<Manifest> {
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 2 || fields.iter().any(|f| f.trim().is_empty()) {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: "expected input<TAB>target".into(),
                });
            }
            pairs.push((base.join(fields[0].trim()), base.join(fields[1].trim())));
        }
        if pairs.is_empty() {
            return Err(Error::Parse {
                line: 1,
                msg: "manifest lists no pairs".into(),
            });
        }
        Ok(Manifest { pairs })
    }

    pub fn read(path: &Path) -> CliResult<Manifest> {
        let base = path.parent().unwrap_or(Path::new(""));
        Manifest::parse(&read_text(path)?, base).map_err(|e| CliError::in_file(path, e))
    }

    /// Loads every pair; shapes must match within each pair.
    pub fn load(&self, boundary: Boundary) -> CliResult<Dataset> {
        let mut pairs = Vec::with_capacity(self.pairs.len());
        for (input, target) in &self.pairs {
            let x = read_pbm(input, boundary)?;
            let y = read_pbm(target, boundary)?;
            pairs.push(SamplePair::new(x, y).map_err(|e| CliError::in_file(target, e))?);
        }
        Ok(Dataset::new(pairs)?)
    }

    pub fn to_text(names: &[(String, String)]) -> String {
        names.iter().map(|(a, b)| format!("{a}\t{b}\n")).collect()
    }
}

pub fn load_dataset(path: &Path, boundary: Boundary) -> CliResult<Dataset> {
    Manifest::read(path)?.load(boundary)
}
