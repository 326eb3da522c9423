//! CSV artifacts with JSON sidecars.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{LabError, Result};

/// Version of the artifact layout, recorded in every sidecar.
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// A file written by a study, reported one per line by the CLI.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Emitted {
    pub path: PathBuf,
    pub detail: String,
}

impl fmt::Display for Emitted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "wrote {} ({})", self.path.display(), self.detail)
    }
}

/// Writes `<dir>/<name>.csv` plus `<dir>/<name>.meta.json`.
#[derive(Debug, Clone)]
pub struct ArtifactWriter {
    dir: PathBuf,
    study: String,
    config_hash: String,
    seed: u64,
}

impl ArtifactWriter {
    pub fn new(root: &Path, study: &str, config_hash: &str, seed: u64) -> Result<Self> {
        let dir = root.join(study);
        fs::create_dir_all(&dir).map_err(|e| LabError::io(&dir, e))?;
        Ok(ArtifactWriter {
            dir,
            study: study.to_owned(),
            config_hash: config_hash.to_owned(),
            seed,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Writes the rows and a sidecar; `extra` is merged into the sidecar
    /// under `summary`. Only the CSV is reported.
    pub fn write_csv<R: Serialize>(&self, name: &str, rows: &[R], extra: Option<Value>) -> Result<Emitted> {
        let path = self.dir.join(format!("{name}.csv"));
        let csv_err = |source| LabError::Csv {
            path: path.clone(),
            source,
        };
        let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
        for r in rows {
            w.serialize(r).map_err(csv_err)?;
        }
        w.flush().map_err(|e| LabError::io(&path, e))?;
        drop(w);
        if rows.is_empty() {
            // csv only emits headers alongside the first record
            fs::write(&path, "").map_err(|e| LabError::io(&path, e))?;
        }
        let mut meta = json!({
            "artifact": format!("{name}.csv"),
            "study": self.study,
            "version": ARTIFACT_VERSION,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "rows": rows.len(),
        });
        if let Some(x) = extra {
            meta["summary"] = x;
        }
        self.write_json(&format!("{name}.meta.json"), &meta)?;
        Ok(Emitted {
            path,
            detail: format!("{} rows", rows.len()),
        })
    }

    pub fn write_json<T: Serialize>(&self, file: &str, value: &T) -> Result<Emitted> {
        let path = self.dir.join(file);
        let mut text = serde_json::to_string_pretty(value).map_err(|source| LabError::Json {
            path: path.clone(),
            source,
        })?;
        text.push('\n');
        fs::write(&path, &text).map_err(|e| LabError::io(&path, e))?;
        Ok(Emitted {
            path,
            detail: format!("{} bytes", text.len()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        a: f64,
        b: &'static str,
    }

    #[test]
    fn writes_csv_and_sidecar() {
        let tmp = tempfile::tempdir().unwrap();
        let w = ArtifactWriter::new(tmp.path(), "demo", "abc", 9).unwrap();
        let p = w
            .write_csv("t", &[Row { a: 0.5, b: "Hp" }], Some(json!({"x": 1})))
            .unwrap();
        assert_eq!(p.detail, "1 rows");
        assert_eq!(fs::read_to_string(&p.path).unwrap(), "a,b\n0.5,Hp\n");
        let meta: Value = serde_json::from_str(&fs::read_to_string(w.dir().join("t.meta.json")).unwrap()).unwrap();
        assert_eq!(meta["config_hash"], "abc");
        assert_eq!(meta["seed"], 9);
        assert_eq!(meta["summary"]["x"], 1);
    }
}
