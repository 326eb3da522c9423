//! Versioned forest documents and KDE dumps.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use slr_core::density::Kde;
use slr_core::forest::Forest;

use crate::error::{LabError, Result};

pub const FOREST_FORMAT: &str = "slr-forest";
pub const FOREST_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ForestDocument {
    format: String,
    version: u32,
    forest: Forest,
}

pub fn forest_to_json(forest: &Forest) -> String {
    let doc = json!({
        "format": FOREST_FORMAT,
        "version": FOREST_VERSION,
        "forest": forest,
    });
    serde_json::to_string(&doc).expect("forests serialize")
}

/// Parses a document written by [`forest_to_json`], checking the header and
/// every tree's structure.
pub fn forest_from_json(text: &str) -> Result<Forest> {
    let doc: ForestDocument =
        serde_json::from_str(text).map_err(|e| LabError::config("forest", format!("invalid forest document: {e}")))?;
    if doc.format != FOREST_FORMAT {
        return Err(LabError::config("format", format!("expected `{FOREST_FORMAT}`")));
    }
    if doc.version != FOREST_VERSION {
        return Err(LabError::config("version", format!("unsupported version {}", doc.version)));
    }
    let f = doc.forest;
    Ok(Forest::from_trees(f.params, f.n_features, f.trees)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KdePointRow {
    pub point: f64,
}

pub fn kde_rows(k: &Kde) -> Vec<KdePointRow> {
    k.points().iter().map(|&point| KdePointRow { point }).collect()
}

/// Everything besides the points needed to rebuild the estimate.
pub fn kde_header(k: &Kde) -> Value {
    json!({
        "bandwidth": k.bandwidth(),
        "support": k.support().as_str(),
        "log_floor": k.log_floor(),
        "n": k.len(),
    })
}
