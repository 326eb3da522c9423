//! Flat JSON study configuration.
//!
//! Model fields follow the core model names exactly (`family`, `mu_x`,
//! `mu_b`, `sigma_w`, `sigma_b`, `Sigma_w`, `Sigma_b`, `alpha_x`, `beta_x`,
//! `alpha_y`, `beta_y`, `d`). Study fields (`seed`, `n_train`, `n_eval`,
//! `score`, `density`, `sampling`, `out`, `grid_step`, `threads`, `name`) sit
//! next to them. Command line flags override file values, which override
//! study defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use slr_core::{BetaVectorPairModel, MvnPairModel, PairModel, SamplingMode, UnivariateGaussianPairModel};

use crate::error::{LabError, Result};

pub const DEFAULT_SEED: u64 = 42;

const MODEL_KEYS: [&str; 12] = [
    "family", "mu_x", "mu_b", "sigma_w", "sigma_b", "Sigma_w", "Sigma_b", "alpha_x", "beta_x", "alpha_y", "beta_y", "d",
];
const STUDY_KEYS: [&str; 11] = [
    "seed",
    "n_train",
    "n_eval",
    "score",
    "density",
    "sampling",
    "out",
    "grid_step",
    "threads",
    "name",
    "description",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    SquaredDiff,
    Euclidean,
    Rf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityKind {
    Analytic,
    Kde,
}

impl ScoreKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScoreKind::SquaredDiff => "squared_diff",
            ScoreKind::Euclidean => "euclidean",
            ScoreKind::Rf => "rf",
        }
    }
}

impl DensityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DensityKind::Analytic => "analytic",
            DensityKind::Kde => "kde",
        }
    }
}

/// Values given on the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub n_train: Option<usize>,
    pub n_eval: Option<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct StudyConfig {
    pub model: Option<PairModel>,
    pub seed: Option<u64>,
    pub n_train: Option<usize>,
    pub n_eval: Option<usize>,
    pub score: Option<ScoreKind>,
    pub density: Option<DensityKind>,
    pub sampling: SamplingMode,
    pub out: Option<PathBuf>,
    pub grid_step: Option<f64>,
    pub threads: Option<usize>,
    pub name: Option<String>,
    raw: Map<String, Value>,
}

impl StudyConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            LabError::config(path.display().to_string(), format!("cannot read config file: {e}"))
        })?;
        Self::from_json_str(&text).map_err(|e| match e {
            LabError::Config { field, message } => {
                LabError::config(field, format!("{message} (in {})", path.display()))
            }
            other => other,
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| LabError::config("$", format!("invalid JSON: {e}")))?;
        Self::from_value(value)
    }

    pub fn from_value(value: Value) -> Result<Self> {
        let Value::Object(raw) = value else {
            return Err(LabError::config("$", "expected a JSON object"));
        };
        for key in raw.keys() {
            if !MODEL_KEYS.contains(&key.as_str()) && !STUDY_KEYS.contains(&key.as_str()) {
                return Err(LabError::config(key, "unknown field"));
            }
        }
        let f = Fields(&raw);
        let model = match raw.get("family") {
            None => {
                if let Some(k) = MODEL_KEYS.iter().find(|k| raw.contains_key(**k)) {
                    return Err(LabError::config(*k, "model fields require `family`"));
                }
                None
            }
            Some(_) => Some(parse_model(&f)?),
        };
        let parse_enum = |key: &str, allowed: &str| -> Result<Option<String>> {
            match raw.get(key) {
                None => Ok(None),
                Some(Value::String(s)) => Ok(Some(s.clone())),
                Some(_) => Err(LabError::config(key, format!("expected one of {allowed}"))),
            }
        };
        let score = match parse_enum("score", "squared_diff, euclidean, rf")?.as_deref() {
            None => None,
            Some("squared_diff") => Some(ScoreKind::SquaredDiff),
            Some("euclidean") => Some(ScoreKind::Euclidean),
            Some("rf") => Some(ScoreKind::Rf),
            Some(other) => return Err(LabError::config("score", format!("unknown score kind `{other}`"))),
        };
        let density = match parse_enum("density", "analytic, kde")?.as_deref() {
            None => None,
            Some("analytic") => Some(DensityKind::Analytic),
            Some("kde") => Some(DensityKind::Kde),
            Some(other) => return Err(LabError::config("density", format!("unknown density kind `{other}`"))),
        };
        let sampling = match parse_enum("sampling", "marginal, hierarchical")?.as_deref() {
            None | Some("marginal") => SamplingMode::Marginal,
            Some("hierarchical") => SamplingMode::Hierarchical,
            Some(other) => return Err(LabError::config("sampling", format!("unknown sampling mode `{other}`"))),
        };
        let cfg = StudyConfig {
            model,
            seed: f.opt_u64("seed")?,
            n_train: f.opt_count("n_train")?,
            n_eval: f.opt_count("n_eval")?,
            score,
            density,
            sampling,
            out: f.opt_str("out")?.map(PathBuf::from),
            grid_step: f.opt_positive("grid_step")?,
            threads: f.opt_count("threads")?,
            name: f.opt_str("name")?,
            raw: raw.clone(),
        };
        if cfg.density == Some(DensityKind::Analytic) {
            let univariate = matches!(cfg.model, None | Some(PairModel::Univariate(_)));
            if !univariate || cfg.score.is_some_and(|s| s != ScoreKind::SquaredDiff) {
                return Err(LabError::config(
                    "density",
                    "analytic densities need the squared_diff score on the univariate_gaussian family",
                ));
            }
        }
        f.opt_str("description")?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = Some(s);
        }
        if let Some(p) = &o.out {
            self.out = Some(p.clone());
        }
        if let Some(t) = o.threads {
            self.threads = Some(t);
        }
        if let Some(n) = o.n_train {
            self.n_train = Some(n);
        }
        if let Some(n) = o.n_eval {
            self.n_eval = Some(n);
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn has_model_fields(&self) -> Option<&'static str> {
        MODEL_KEYS.iter().copied().find(|k| self.raw.contains_key(*k))
    }

    /// Hex SHA-256 of the effective settings that influence results, i.e.
    /// everything except `out`, `threads` and `description`.
    pub fn hash(&self) -> String {
        let mut m = self.raw.clone();
        for k in ["out", "threads", "description"] {
            m.remove(k);
        }
        m.insert("seed".into(), Value::from(self.seed()));
        if let Some(n) = self.n_train {
            m.insert("n_train".into(), Value::from(n));
        }
        if let Some(n) = self.n_eval {
            m.insert("n_eval".into(), Value::from(n));
        }
        let text = serde_json::to_string(&Value::Object(m)).expect("JSON values serialize");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

struct Fields<'a>(&'a Map<String, Value>);

impl Fields<'_> {
    fn get(&self, key: &str) -> Option<&Value> {
        self.0.get(key)
    }

    fn require(&self, key: &str) -> Result<&Value> {
        self.get(key).ok_or_else(|| LabError::config(key, "missing field"))
    }

    fn f64_at(v: &Value, path: &str) -> Result<f64> {
        v.as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| LabError::config(path, "expected a finite number"))
    }

    fn number(&self, key: &str) -> Result<f64> {
        Self::f64_at(self.require(key)?, key)
    }

    fn vector(&self, key: &str) -> Result<Vec<f64>> {
        match self.require(key)? {
            Value::Array(items) => items
                .iter()
                .enumerate()
                .map(|(i, v)| Self::f64_at(v, &format!("{key}[{i}]")))
                .collect(),
            _ => Err(LabError::config(key, "expected an array of numbers")),
        }
    }

    fn matrix(&self, key: &str) -> Result<Vec<Vec<f64>>> {
        match self.require(key)? {
            Value::Array(rows) => rows
                .iter()
                .enumerate()
                .map(|(i, row)| match row {
                    Value::Array(items) => items
                        .iter()
                        .enumerate()
                        .map(|(j, v)| Self::f64_at(v, &format!("{key}[{i}][{j}]")))
                        .collect(),
                    _ => Err(LabError::config(format!("{key}[{i}]"), "expected an array of numbers")),
                })
                .collect(),
            _ => Err(LabError::config(key, "expected an array of rows")),
        }
    }

    fn opt_u64(&self, key: &str) -> Result<Option<u64>> {
        self.get(key)
            .map(|v| v.as_u64().ok_or_else(|| LabError::config(key, "expected a non-negative integer")))
            .transpose()
    }

    fn opt_count(&self, key: &str) -> Result<Option<usize>> {
        match self.opt_u64(key)? {
            Some(0) => Err(LabError::config(key, "must be positive")),
            other => Ok(other.map(|v| v as usize)),
        }
    }

    fn opt_positive(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| {
                Self::f64_at(v, key)
                    .and_then(|x| if x > 0.0 { Ok(x) } else { Err(LabError::config(key, "must be positive")) })
            })
            .transpose()
    }

    fn opt_str(&self, key: &str) -> Result<Option<String>> {
        self.get(key)
            .map(|v| v.as_str().map(str::to_owned).ok_or_else(|| LabError::config(key, "expected a string")))
            .transpose()
    }

    fn reject(&self, keys: &[&str], family: &str) -> Result<()> {
        match keys.iter().find(|k| self.0.contains_key(**k)) {
            Some(k) => Err(LabError::config(*k, format!("not used by family `{family}`"))),
            None => Ok(()),
        }
    }
}

fn core_to_config(e: slr_core::Error) -> LabError {
    use slr_core::Error as E;
    let field = match &e {
        E::NonPositiveVariance(f) | E::NotPositiveDefinite(f) | E::NonPositiveShape(f) | E::NonFinite(f) => {
            f.to_string()
        }
        E::DimensionMismatch { field, .. } => field.to_string(),
        _ => "family".into(),
    };
    LabError::config(field, e.to_string())
}

fn parse_model(f: &Fields) -> Result<PairModel> {
    let family = f
        .require("family")?
        .as_str()
        .ok_or_else(|| LabError::config("family", "expected a string"))?;
    match family {
        "univariate_gaussian" => {
            f.reject(&["Sigma_w", "Sigma_b", "alpha_x", "beta_x", "alpha_y", "beta_y", "d"], family)?;
            let m = UnivariateGaussianPairModel::new(
                f.number("mu_x")?,
                f.number("mu_b")?,
                f.number("sigma_w")?,
                f.number("sigma_b")?,
            )
            .map_err(core_to_config)?;
            Ok(m.into())
        }
        "mvn" => {
            f.reject(&["sigma_w", "sigma_b", "alpha_x", "beta_x", "alpha_y", "beta_y"], family)?;
            let mu_x = f.vector("mu_x")?;
            if let Some(d) = f.opt_count("d")? {
                if d != mu_x.len() {
                    return Err(LabError::config("d", format!("`mu_x` has length {}", mu_x.len())));
                }
            }
            let m = MvnPairModel::new(mu_x, f.vector("mu_b")?, &f.matrix("Sigma_w")?, &f.matrix("Sigma_b")?)
                .map_err(core_to_config)?;
            Ok(m.into())
        }
        "beta" => {
            f.reject(&["mu_x", "mu_b", "sigma_w", "sigma_b", "Sigma_w", "Sigma_b"], family)?;
            let d = f.opt_count("d")?.ok_or_else(|| LabError::config("d", "missing field"))?;
            let m = BetaVectorPairModel::new(
                f.number("alpha_x")?,
                f.number("beta_x")?,
                f.number("alpha_y")?,
                f.number("beta_y")?,
                d,
            )
            .map_err(core_to_config)?;
            Ok(m.into())
        }
        other => Err(LabError::config(
            "family",
            format!("unknown family `{other}` (expected univariate_gaussian, mvn or beta)"),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field_of(e: LabError) -> String {
        match e {
            LabError::Config { field, .. } => field,
            other => panic!("not a config error: {other}"),
        }
    }

    #[test]
    fn parses_each_family() {
        let u = StudyConfig::from_json_str(
            r#"{"family":"univariate_gaussian","mu_x":0,"mu_b":0,"sigma_w":0.2,"sigma_b":1,"seed":7}"#,
        )
        .unwrap();
        assert!(matches!(u.model, Some(PairModel::Univariate(_))));
        assert_eq!(u.seed(), 7);
        let m = StudyConfig::from_json_str(
            r#"{"family":"mvn","mu_x":[0.5,0.5],"mu_b":[0,0],"Sigma_w":[[0.5,0],[0,0.5]],"Sigma_b":[[1,0],[0,1]]}"#,
        )
        .unwrap();
        assert_eq!(m.model.unwrap().dim(), 2);
        let b = StudyConfig::from_json_str(
            r#"{"family":"beta","alpha_x":2,"beta_x":1,"alpha_y":1,"beta_y":2,"d":5,"n_eval":100}"#,
        )
        .unwrap();
        assert_eq!(b.n_eval, Some(100));
        assert_eq!(StudyConfig::from_json_str("{}").unwrap().seed(), DEFAULT_SEED);
    }

    #[test]
    fn errors_name_the_field() {
        let cases = [
            (r#"{"family":"mvn","mu_x":[0],"mu_b":[0],"Sigma_w":[["a"]],"Sigma_b":[[1]]}"#, "Sigma_w[0][0]"),
            (r#"{"family":"univariate_gaussian","mu_x":0,"mu_b":0,"sigma_w":0,"sigma_b":1}"#, "sigma_w"),
            (r#"{"family":"univariate_gaussian","mu_x":0,"mu_b":0,"sigma_w":1}"#, "sigma_b"),
            (r#"{"family":"beta","alpha_x":2,"beta_x":-1,"alpha_y":1,"beta_y":2,"d":5}"#, "beta_x"),
            (r#"{"family":"beta","alpha_x":2,"beta_x":1,"alpha_y":1,"beta_y":2,"d":5,"mu_x":1}"#, "mu_x"),
            (r#"{"family":"cubic"}"#, "family"),
            (r#"{"seed":-1}"#, "seed"),
            (r#"{"n_eval":0}"#, "n_eval"),
            (r#"{"colour":"red"}"#, "colour"),
            (r#"{"sigma_w":1}"#, "sigma_w"),
            (r#"{"density":"analytic","score":"rf"}"#, "density"),
            ("[1]", "$"),
            ("{", "$"),
        ];
        for (text, field) in cases {
            assert_eq!(field_of(StudyConfig::from_json_str(text).unwrap_err()), field, "{text}");
        }
    }

    #[test]
    fn overrides_win_and_feed_the_hash() {
        let mut c = StudyConfig::from_json_str(r#"{"seed":1,"out":"a"}"#).unwrap();
        let h1 = c.hash();
        c.apply(&Overrides {
            out: Some("b".into()),
            threads: Some(3),
            ..Default::default()
        });
        assert_eq!(c.hash(), h1);
        assert_eq!(c.out_dir(), PathBuf::from("b"));
        c.apply(&Overrides {
            seed: Some(2),
            ..Default::default()
        });
        assert_ne!(c.hash(), h1);
        assert_eq!(c.seed(), 2);
    }
}
