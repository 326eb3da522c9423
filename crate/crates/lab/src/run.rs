//! Subcommand drivers: validate the configuration, run studies and write
//! their artifacts.

use std::fmt;
use std::path::PathBuf;

use serde_json::json;
use slr_core::{PairModel, UnivariateGaussianPairModel};

use crate::config::{DensityKind, ScoreKind, StudyConfig};
use crate::error::{LabError, Result};
use crate::output::{ArtifactWriter, Emitted};
use crate::persist::{forest_to_json, kde_header, kde_rows};
use crate::studies::rf::{run_rf_study, RfStudy, REFERENCE_ALPHA};
use crate::studies::suite::{bound_checks, kl_checks, univariate_settings, Setting};
use crate::studies::{bins, beta_default_model, contour, hist, mvn_default_model, oracle, rf, simple_model};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Contour,
    Hist,
    Bins,
    RfStudy,
    Bounds,
    Kl,
    All,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Contour => "contour",
            Command::Hist => "hist",
            Command::Bins => "bins",
            Command::RfStudy => "rf-study",
            Command::Bounds => "bounds",
            Command::Kl => "kl",
            Command::All => "all",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One invocation: the effective configuration plus the files written so far.
#[derive(Debug)]
pub struct Run {
    cfg: StudyConfig,
    root: PathBuf,
    hash: String,
    save_forest: bool,
    pub emitted: Vec<Emitted>,
}

impl Run {
    pub fn new(cfg: StudyConfig, save_forest: bool) -> Self {
        Run {
            root: cfg.out_dir(),
            hash: cfg.hash(),
            cfg,
            save_forest,
            emitted: Vec::new(),
        }
    }

    pub fn execute(&mut self, cmd: Command) -> Result<()> {
        self.validate(cmd)?;
        match cmd {
            Command::Contour => self.contour(),
            Command::Hist => self.hist(),
            Command::Bins => self.bins(),
            Command::RfStudy => {
                let model = self.cfg.model.clone().unwrap_or_else(|| mvn_default_model().into());
                let name = self.cfg.name.clone().unwrap_or_else(|| rf_study_name(&model));
                self.rf_study(&name, &model).map(drop)
            }
            Command::Bounds => {
                let settings = self.suite_settings(&[])?;
                self.bounds(&settings)
            }
            Command::Kl => {
                let settings = self.suite_settings(&[])?;
                self.kl(&settings)
            }
            Command::All => self.all(),
        }
    }

    /// Score and density kinds each subcommand can honour.
    fn validate(&self, cmd: Command) -> Result<()> {
        let (scores, densities, families): (&[ScoreKind], &[DensityKind], &[&str]) = match cmd {
            Command::Contour | Command::Hist | Command::Bins => {
                (&[ScoreKind::SquaredDiff], &[DensityKind::Analytic], &["univariate_gaussian"])
            }
            Command::RfStudy => (&[ScoreKind::Rf], &[DensityKind::Kde], &["univariate_gaussian", "mvn", "beta"]),
            Command::Bounds | Command::Kl => (&[], &[], &["univariate_gaussian", "mvn", "beta"]),
            Command::All => (&[], &[], &[]),
        };
        if let Some(m) = &self.cfg.model {
            if !families.contains(&m.family()) {
                let field = self.cfg.has_model_fields().unwrap_or("family");
                return Err(LabError::config(field, format!("`{cmd}` does not take the {} family", m.family())));
            }
        }
        if let Some(s) = self.cfg.score.filter(|s| !scores.contains(s)) {
            return Err(LabError::config("score", format!("`{cmd}` does not support the `{}` score", s.as_str())));
        }
        if let Some(d) = self.cfg.density.filter(|d| !densities.contains(d)) {
            return Err(LabError::config("density", format!("`{cmd}` does not support `{}` densities", d.as_str())));
        }
        Ok(())
    }

    fn writer(&self, study: &str) -> Result<ArtifactWriter> {
        ArtifactWriter::new(&self.root, study, &self.hash, self.cfg.seed())
    }

    fn univariate(&self) -> UnivariateGaussianPairModel {
        match &self.cfg.model {
            Some(PairModel::Univariate(m)) => *m,
            _ => simple_model(),
        }
    }

    fn contour(&mut self) -> Result<()> {
        let step = self.cfg.grid_step.unwrap_or(contour::DEFAULT_STEP);
        let rows = contour::contour_grid(&self.univariate(), step)?;
        let w = self.writer("contour")?;
        let e = w.write_csv("contour", &rows, Some(json!({ "grid_step": step })))?;
        self.emitted.push(e);
        Ok(())
    }

    fn hist(&mut self) -> Result<()> {
        let n = self.cfg.n_eval.unwrap_or(hist::DEFAULT_N);
        let (rows, summary) = hist::discrepancy_hist(&self.univariate(), n, self.cfg.seed(), self.cfg.sampling)?;
        let w = self.writer("hist")?;
        let summary = serde_json::to_value(summary).expect("summary serializes");
        let e = w.write_csv("disc_hist", &rows, Some(summary))?;
        self.emitted.push(e);
        Ok(())
    }

    /// A configured model gives one setting; otherwise all four are swept.
    fn bins(&mut self) -> Result<()> {
        let models = match &self.cfg.model {
            Some(PairModel::Univariate(m)) => vec![*m],
            _ => {
                let m = simple_model();
                bins::table1_settings(m.mu_b, m.sigma_b)?
            }
        };
        let n = self.cfg.n_eval.unwrap_or(bins::DEFAULT_N);
        let (heat, table) = bins::bin_agreement(&models, n, self.cfg.seed(), self.cfg.sampling)?;
        let w = self.writer("bins")?;
        let params = json!({ "n_per_hypothesis": n });
        self.emitted.push(w.write_csv("heatmap", &heat, Some(params.clone()))?);
        self.emitted.push(w.write_csv("table1", &table, Some(params))?);
        Ok(())
    }

    fn rf_study(&mut self, name: &str, model: &PairModel) -> Result<RfStudy> {
        let n_train = self.cfg.n_train.unwrap_or(rf::DEFAULT_N_TRAIN);
        let n_eval = self.cfg.n_eval.unwrap_or(rf::DEFAULT_N_EVAL);
        let study = run_rf_study(model, n_train, n_eval, self.cfg.seed(), self.cfg.sampling)?;
        let w = self.writer(name)?;
        let sizes = json!({
            "family": model.family(),
            "n_train": n_train,
            "n_eval_per_hypothesis": n_eval,
        });
        self.emitted.push(w.write_csv("scores_hist", &study.score_rows(), Some(sizes.clone()))?);
        let scatter = study.scatter_rows();
        let hd: Vec<_> = scatter.iter().filter(|r| r.hypothesis == slr_core::Hypothesis::Hd).collect();
        let log_alpha = REFERENCE_ALPHA.ln();
        let above = hd.iter().filter(|r| r.log_lr > r.log_slr + log_alpha).count();
        let reference = json!({
            "reference_alpha": REFERENCE_ALPHA,
            "reference_offset": log_alpha,
            "hd_fraction_lr_above_slr_times_alpha": above as f64 / hd.len() as f64,
        });
        self.emitted.push(w.write_csv("scatter", &scatter, Some(reference))?);
        self.emitted.push(w.write_csv("table2", &study.table2()?, Some(sizes))?);
        self.emitted.push(w.write_csv("kde_hp", &kde_rows(&study.kde_p), Some(kde_header(&study.kde_p)))?);
        self.emitted.push(w.write_csv("kde_hd", &kde_rows(&study.kde_d), Some(kde_header(&study.kde_d)))?);
        if self.save_forest {
            let path = w.dir().join("forest.json");
            let text = forest_to_json(&study.forest);
            std::fs::write(&path, &text).map_err(|e| LabError::io(&path, e))?;
            self.emitted.push(Emitted {
                path,
                detail: format!("{} trees", study.forest.trees.len()),
            });
        }
        Ok(study)
    }

    /// Univariate squared-difference settings followed by one forest setting
    /// per family. Forest studies in `cached` are reused; the rest are run
    /// here without writing their artifacts. A configured model replaces the
    /// default of its family.
    fn suite_settings(&self, cached: &[(&str, &RfStudy)]) -> Result<Vec<Setting>> {
        let (n_train, n_eval) = (
            self.cfg.n_train.unwrap_or(rf::DEFAULT_N_TRAIN),
            self.cfg.n_eval.unwrap_or(rf::DEFAULT_N_EVAL),
        );
        let uni = self.univariate();
        let mut models: Vec<PairModel> = vec![uni.into(), mvn_default_model().into(), beta_default_model().into()];
        if let Some(m) = &self.cfg.model {
            for slot in models.iter_mut().filter(|s| s.family() == m.family()) {
                *slot = m.clone();
            }
        }
        let mut out: Vec<Setting> = univariate_settings(&uni, n_eval, self.cfg.seed(), self.cfg.sampling)?.into();
        for model in &models {
            let name = format!("{}_rf_kde", short_family(model));
            let study_name = rf_study_name(model);
            let setting = match cached.iter().find(|(n, _)| *n == study_name) {
                Some((_, s)) => Setting::from_rf(&name, s),
                None => {
                    let s = run_rf_study(model, n_train, n_eval, self.cfg.seed(), self.cfg.sampling)?;
                    Setting::from_rf(&name, &s)
                }
            };
            out.push(setting);
        }
        Ok(out)
    }

    fn bounds(&mut self, settings: &[Setting]) -> Result<()> {
        let mut rows = Vec::new();
        for s in settings {
            rows.extend(bound_checks(s)?);
        }
        let failed = rows.iter().filter(|r| !r.pass && !r.informational).count();
        let w = self.writer("bounds")?;
        self.emitted.push(w.write_csv("bounds_report", &rows, Some(json!({ "failed": failed })))?);
        let (orows, summary) = oracle::oracle_equivalence(
            &self.univariate(),
            oracle::DEFAULT_N_FIT,
            self.cfg.seed(),
            self.cfg.sampling,
        )?;
        let summary = serde_json::to_value(summary).expect("summary serializes");
        self.emitted.push(w.write_csv("oracle", &orows, Some(summary))?);
        Ok(())
    }

    fn kl(&mut self, settings: &[Setting]) -> Result<()> {
        let mut rows = Vec::new();
        for s in settings {
            rows.extend(kl_checks(s)?);
        }
        let failed = rows.iter().filter(|r| !r.pass && !r.informational).count();
        let w = self.writer("kl")?;
        self.emitted.push(w.write_csv("kl_report", &rows, Some(json!({ "failed": failed })))?);
        Ok(())
    }

    fn all(&mut self) -> Result<()> {
        if let Some(field) = self.cfg.has_model_fields() {
            return Err(LabError::config(field, "`all` runs the built-in models; drop the model fields"));
        }
        if self.cfg.name.is_some() {
            return Err(LabError::config("name", "`all` names its own studies"));
        }
        self.contour()?;
        self.hist()?;
        self.bins()?;
        let mut studies = Vec::new();
        for model in [
            PairModel::from(simple_model()),
            mvn_default_model().into(),
            beta_default_model().into(),
        ] {
            let name = rf_study_name(&model);
            let s = self.rf_study(&name, &model)?;
            studies.push((name, s));
        }
        let cached: Vec<(&str, &RfStudy)> = studies.iter().map(|(n, s)| (n.as_str(), s)).collect();
        let settings = self.suite_settings(&cached)?;
        self.bounds(&settings)?;
        self.kl(&settings)
    }
}

fn short_family(m: &PairModel) -> &'static str {
    match m {
        PairModel::Univariate(_) => "univariate",
        PairModel::Mvn(_) => "mvn",
        PairModel::Beta(_) => "beta",
    }
}

/// Output directory of a forest study, e.g. `rf_mvn`.
pub fn rf_study_name(m: &PairModel) -> String {
    format!("rf_{}", short_family(m))
}
