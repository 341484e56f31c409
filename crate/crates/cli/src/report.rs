//! Run reports and CSV artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use coarselab_core::profile::fmt_f64;
use coarselab_core::Verdict;

use crate::run::RunError;

/// How a row's value is judged against its bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    /// Pass when `value < bound`.
    Below,
    /// Pass when `value >= bound`.
    AtLeast,
}

impl Comparison {
    pub fn as_str(self) -> &'static str {
        match self {
            Comparison::Below => "below",
            Comparison::AtLeast => "at-least",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub name: String,
    pub parameters: String,
    pub value: f64,
    pub bound: f64,
    pub comparison: Comparison,
    pub verdict: Verdict,
}

impl CheckRow {
    /// The verdict follows from `value` and `bound`; a non-finite value is
    /// inconclusive.
    pub fn new(
        name: impl Into<String>,
        parameters: impl Into<String>,
        value: f64,
        bound: f64,
        comparison: Comparison,
    ) -> Self {
        let verdict = if !value.is_finite() {
            Verdict::Inconclusive
        } else {
            Verdict::from_bool(match comparison {
                Comparison::Below => value < bound,
                Comparison::AtLeast => value >= bound,
            })
        };
        CheckRow {
            name: name.into(),
            parameters: parameters.into().replace(',', ";"),
            value,
            bound,
            comparison,
            verdict,
        }
    }
}

/// Build identification written into every report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fingerprint {
    pub version: &'static str,
    pub os: &'static str,
    pub arch: &'static str,
}

impl Fingerprint {
    pub fn current() -> Self {
        Fingerprint {
            version: env!("CARGO_PKG_VERSION"),
            os: std::env::consts::OS,
            arch: std::env::consts::ARCH,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub name: String,
    pub kind: &'static str,
    pub spec_hash: String,
    pub rows: Vec<CheckRow>,
    pub artifacts: Vec<PathBuf>,
    pub fingerprint: Fingerprint,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.verdict == Verdict::Pass)
    }

    pub fn to_csv(&self) -> String {
        let f = &self.fingerprint;
        let mut s = format!(
            "# spec-hash: {}\n# experiment: {} ({})\n# build: coarselab {} {}-{}\nname,parameters,value,bound,comparison,verdict\n",
            self.spec_hash, self.name, self.kind, f.version, f.os, f.arch
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.name,
                r.parameters,
                fmt_f64(r.value),
                fmt_f64(r.bound),
                r.comparison.as_str(),
                r.verdict
            );
        }
        s
    }

    /// Human-readable table for the terminal.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "{} ({}), spec {}\n",
            self.name,
            self.kind,
            &self.spec_hash[..12]
        );
        for r in &self.rows {
            let op = match r.comparison {
                Comparison::Below => "<",
                Comparison::AtLeast => ">=",
            };
            let _ = writeln!(
                s,
                "  {:<13} {} = {:.6e} {op} {:.3e}  {}",
                r.verdict.as_str(),
                r.name,
                r.value,
                r.bound,
                r.parameters
            );
        }
        for a in &self.artifacts {
            let _ = writeln!(s, "  wrote {}", a.display());
        }
        s
    }
}

/// Writes CSV files into one directory, each prefixed with the spec hash.
pub struct ArtifactWriter {
    dir: PathBuf,
    hash: String,
    pub written: Vec<PathBuf>,
}

impl ArtifactWriter {
    pub fn new(dir: &Path, hash: &str) -> Result<Self, RunError> {
        fs::create_dir_all(dir).map_err(|source| RunError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(ArtifactWriter {
            dir: dir.to_path_buf(),
            hash: hash.to_string(),
            written: Vec::new(),
        })
    }

    /// Writes `# spec-hash: <hash>` followed by `body` to `<dir>/<name>.csv`.
    pub fn write(&mut self, name: &str, body: &str) -> Result<PathBuf, RunError> {
        let path = self.dir.join(format!("{}.csv", sanitize(name)));
        let text = format!("# spec-hash: {}\n{body}", self.hash);
        fs::write(&path, text).map_err(|source| RunError::Io {
            path: path.clone(),
            source,
        })?;
        self.written.push(path.clone());
        Ok(path)
    }
}

/// Keeps `[A-Za-z0-9.-]`, maps everything else to `_`.
pub fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}
