use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::bayes::{
    blr_posterior, blr_predictive, bma_predict, sghmc_sample, vi_fit_and_sample, GaussianPosterior, Likelihood, PosteriorSamples,
    SghmcConfig, ViConfig,
};
use crate::datagen::{generate, Dataset, GeneratorSpec, TaskKind};
use crate::error::{Error, Result};
use crate::models::{
    accuracy, cross_entropy, frequentist_risk, gaussian_log_density, mse, write_metrics_csv, Link, MetricsRecord, DEFAULT_NOISE_STD,
};
use crate::moe::{moe_predict, train_moe, GateMode, MoeModel, TrainConfig};
use crate::numerics::{derive_seed, Rng, Stream};

use super::config::{ExperimentConfig, ModelId, Suite};
use super::persist::Checkpoint;

pub fn cell_seed(master: u64, model: ModelId, degree: usize) -> u64 {
    derive_seed(master, &model.to_string(), degree as u64)
}

/// Dataset seed; independent of the roster.
pub fn data_seed(master: u64, degree: usize) -> u64 {
    derive_seed(master, "data", degree as u64)
}

/// Risk seed, shared by every model at one degree so their risk
/// estimates see the same fresh draws.
pub fn risk_seed(master: u64, degree: usize) -> u64 {
    derive_seed(master, "risk", degree as u64)
}

/// Train/test pair and generator of one suite degree.
pub fn suite_data(cfg: &ExperimentConfig, kind: TaskKind, degree: usize) -> Result<(Dataset, Dataset, GeneratorSpec)> {
    generate(kind, degree, cfg.n_train, cfg.n_test, data_seed(cfg.master_seed, degree))
}

/// A trained model of any roster entry.
#[derive(Debug, Clone, PartialEq)]
pub enum Fitted {
    Blr(GaussianPosterior),
    Moe(MoeModel),
    Bma(PosteriorSamples),
}

impl Fitted {
    /// Point prediction: mean (regression) or probability of label 1.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        match self {
            Fitted::Blr(p) => Ok(blr_predictive(p, x)?.0),
            Fitted::Moe(m) => Ok(moe_predict(m, x, GateMode::Eval)?.value),
            Fitted::Bma(s) => bma_predict(s, x),
        }
    }

    /// Predictive log-density of a regression target.
    pub fn log_density(&self, x: &[f64], y: f64) -> Result<f64> {
        match self {
            Fitted::Blr(p) => {
                let (m, v) = blr_predictive(p, x)?;
                Ok(gaussian_log_density(y, m, v.sqrt()))
            }
            Fitted::Moe(m) => m.mixture_log_density(x, y),
            Fitted::Bma(_) => Err(Error::Config("sample averages are only used for classification".into())),
        }
    }

    pub fn into_checkpoint(self) -> Checkpoint {
        match self {
            Fitted::Blr(p) => Checkpoint::Blr(p),
            Fitted::Moe(m) => Checkpoint::Moe(m),
            Fitted::Bma(s) => Checkpoint::Samples(s),
        }
    }

    pub fn from_checkpoint(ck: Checkpoint) -> Self {
        match ck {
            Checkpoint::Blr(p) => Fitted::Blr(p),
            Checkpoint::Moe(m) => Fitted::Moe(m),
            Checkpoint::Samples(s) => Fitted::Bma(s),
        }
    }
}

/// Fits one roster entry with the cell's seed.
pub fn fit_model(cfg: &ExperimentConfig, model: ModelId, seed: u64, train: &Dataset) -> Result<Fitted> {
    let kind = train.kind();
    match model {
        ModelId::Blr => {
            let prior = GaussianPosterior::standard_prior(train.dim(), DEFAULT_NOISE_STD)?;
            Ok(Fitted::Blr(blr_posterior(&prior, train)?))
        }
        ModelId::Moe(e) => {
            let link = Link::for_task(kind);
            let init = MoeModel::init(e, train.dim(), cfg.top_k, link, DEFAULT_NOISE_STD, &mut Rng::new(seed).substream(Stream::Init))?;
            let tc = TrainConfig { seed, ..cfg.moe.clone() };
            Ok(Fitted::Moe(train_moe(&init, train, &tc)?.0))
        }
        ModelId::SghmcLr => {
            let sc = SghmcConfig { seed, ..cfg.sghmc.clone() };
            Ok(Fitted::Bma(sghmc_sample(&Likelihood::logistic(), train, &sc)?))
        }
        ModelId::ViLr => {
            let vc = ViConfig { seed, ..cfg.vi.clone() };
            Ok(Fitted::Bma(vi_fit_and_sample(&Likelihood::logistic(), train, &vc)?.1))
        }
    }
}

/// Test metrics and frequentist risk of a fitted model.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub mse: Option<f64>,
    pub nll: f64,
    pub accuracy: Option<f64>,
    pub risk: f64,
    pub risk_std_err: f64,
}

pub fn evaluate(fitted: &Fitted, test: &Dataset, spec: &GeneratorSpec, risk_samples: usize, risk_seed: u64) -> Result<Evaluation> {
    let preds = test.iter().map(|(x, _)| fitted.predict(x)).collect::<Result<Vec<_>>>()?;
    let (mse_v, nll, acc) = match test.kind() {
        TaskKind::Regression => {
            let ll = test.iter().map(|(x, y)| fitted.log_density(x, y)).sum::<Result<f64>>()?;
            (Some(mse(&preds, test.targets())?), -ll / test.len() as f64, None)
        }
        TaskKind::Classification => (None, cross_entropy(&preds, test.targets())?, Some(accuracy(&preds, test.targets())?)),
    };
    // a prediction error shows up as a non-finite risk
    let est = frequentist_risk(|x| fitted.predict(x).unwrap_or(f64::NAN), spec, risk_samples, risk_seed);
    Ok(Evaluation { mse: mse_v, nll, accuracy: acc, risk: est.risk, risk_std_err: est.std_err })
}

/// One (model, degree) result.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub model: ModelId,
    pub record: MetricsRecord,
    pub risk_std_err: f64,
    /// Wall-clock seconds for fit plus evaluation.
    pub seconds: f64,
}

/// Fits and evaluates one cell. `data` must be the suite data of `degree`.
pub fn run_cell(cfg: &ExperimentConfig, model: ModelId, degree: usize, data: &(Dataset, Dataset, GeneratorSpec)) -> Result<CellResult> {
    let start = Instant::now();
    let seed = cell_seed(cfg.master_seed, model, degree);
    let (train, test, spec) = data;
    let fitted = fit_model(cfg, model, seed, train)?;
    let ev = evaluate(&fitted, test, spec, cfg.risk_samples, risk_seed(cfg.master_seed, degree))?;
    let seconds = start.elapsed().as_secs_f64();
    let record = MetricsRecord {
        model: model.to_string(),
        degree,
        mse: ev.mse,
        nll: Some(ev.nll),
        accuracy: ev.accuracy,
        risk: Some(ev.risk),
        seconds: cfg.timing.then_some(seconds),
        seed,
    };
    if !record.is_finite() {
        return Err(Error::Config(format!("non-finite metric in {record:?}")));
    }
    Ok(CellResult { model, record, risk_std_err: ev.risk_std_err, seconds })
}

/// Results of a suite, in (model, degree) roster order.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub cells: Vec<CellResult>,
}

impl SuiteReport {
    pub fn records(&self) -> Vec<MetricsRecord> {
        self.cells.iter().map(|c| c.record.clone()).collect()
    }

    pub fn cell(&self, model: ModelId, degree: usize) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.model == model && c.record.degree == degree)
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        write_metrics_csv(out, &self.records())
    }

    /// `model,degree,seconds` wall-clock sidecar.
    pub fn write_timings<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["model", "degree", "seconds"])?;
        for c in &self.cells {
            w.write_record([c.record.model.clone(), c.record.degree.to_string(), c.seconds.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs every cell in parallel. Returns the successful cells in roster
/// order together with the first failure, if any.
pub fn run_cells(cfg: &ExperimentConfig) -> Result<(SuiteReport, Option<Error>)> {
    cfg.validate()?;
    let kind = cfg.suite.task().ok_or_else(|| Error::Config("the proposition suite has no model cells".into()))?;
    let data = cfg.degrees.par_iter().map(|&d| suite_data(cfg, kind, d)).collect::<Result<Vec<_>>>()?;
    let grid: Vec<(ModelId, usize)> = cfg.roster.iter().flat_map(|&m| (0..cfg.degrees.len()).map(move |i| (m, i))).collect();
    let results: Vec<Result<CellResult>> = grid
        .par_iter()
        .map(|&(m, i)| {
            let degree = cfg.degrees[i];
            run_cell(cfg, m, degree, &data[i]).map_err(|e| Error::Cell { model: m.to_string(), degree, source: Box::new(e) })
        })
        .collect();
    let mut cells = Vec::new();
    let mut failure = None;
    for r in results {
        match r {
            Ok(c) => cells.push(c),
            Err(e) if failure.is_none() => failure = Some(e),
            Err(_) => {}
        }
    }
    Ok((SuiteReport { cells }, failure))
}

pub fn run_suite(cfg: &ExperimentConfig) -> Result<SuiteReport> {
    match run_cells(cfg)? {
        (report, None) => Ok(report),
        (_, Some(e)) => Err(e),
    }
}

/// File names used by [`run_suite_to_dir`].
pub fn metrics_path(out_dir: &Path, suite: Suite) -> PathBuf {
    out_dir.join(format!("{suite}_metrics.csv"))
}

pub fn timings_path(out_dir: &Path, suite: Suite) -> PathBuf {
    out_dir.join(format!("{suite}_timings.csv"))
}

/// Runs a suite and writes the metrics CSV and timing sidecar into
/// `cfg.out_dir`. On a cell failure the CSV holds the completed cells and
/// the failure is returned.
pub fn run_suite_to_dir(cfg: &ExperimentConfig) -> Result<SuiteReport> {
    let (report, failure) = run_cells(cfg)?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    report.write_csv(std::fs::File::create(metrics_path(&cfg.out_dir, cfg.suite))?)?;
    report.write_timings(std::fs::File::create(timings_path(&cfg.out_dir, cfg.suite))?)?;
    match failure {
        None => Ok(report),
        Some(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(suite: Suite) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(suite);
        cfg.n_train = 300;
        cfg.n_test = 100;
        cfg.risk_samples = 500;
        cfg.degrees = vec![1, 3];
        cfg.moe.epochs = 3;
        cfg.sghmc.burn_in = 2;
        cfg.sghmc.n_samples = 3;
        cfg.vi.epochs = 3;
        cfg.master_seed = 11;
        cfg
    }

    #[test]
    fn seeds_depend_on_cell_only() {
        assert_eq!(cell_seed(1, ModelId::Moe(2), 3), cell_seed(1, ModelId::Moe(2), 3));
        assert_ne!(cell_seed(1, ModelId::Moe(2), 3), cell_seed(1, ModelId::Moe(3), 3));
        assert_ne!(cell_seed(1, ModelId::Moe(2), 3), cell_seed(1, ModelId::Moe(2), 4));
        assert_ne!(data_seed(1, 3), risk_seed(1, 3));
    }

    #[test]
    fn suite_rows_in_roster_order() {
        for suite in [Suite::Regression, Suite::Classification] {
            let cfg = tiny(suite);
            let report = run_suite(&cfg).unwrap();
            let expected: Vec<(String, usize)> =
                cfg.roster.iter().flat_map(|m| cfg.degrees.iter().map(move |&d| (m.to_string(), d))).collect();
            let got: Vec<(String, usize)> = report.records().into_iter().map(|r| (r.model, r.degree)).collect();
            assert_eq!(got, expected);
            assert!(report.records().iter().all(|r| r.seconds.is_none() && r.is_finite()));
        }
    }

    #[test]
    fn single_cell_matches_suite_cell() {
        let cfg = tiny(Suite::Classification);
        let report = run_suite(&cfg).unwrap();
        let data = suite_data(&cfg, TaskKind::Classification, 3).unwrap();
        let alone = run_cell(&cfg, ModelId::ViLr, 3, &data).unwrap();
        assert_eq!(report.cell(ModelId::ViLr, 3).unwrap().record, alone.record);
    }

    #[test]
    fn roster_change_keeps_dataset() {
        let a = tiny(Suite::Regression);
        let mut b = a.clone();
        b.roster = vec![ModelId::Moe(4)];
        let da = suite_data(&a, TaskKind::Regression, 3).unwrap();
        let db = suite_data(&b, TaskKind::Regression, 3).unwrap();
        assert_eq!(da, db);
    }

    #[test]
    fn failing_cell_is_named() {
        let mut cfg = tiny(Suite::Regression);
        cfg.roster = vec![ModelId::Blr, ModelId::Moe(2)];
        // an absurd step size overflows the parameters on the first update
        cfg.moe.lr0 = 1e300;
        let (report, failure) = run_cells(&cfg).unwrap();
        assert_eq!(report.cells.len(), 2);
        assert!(matches!(failure, Some(Error::Cell { ref model, .. }) if model == "moe-2"), "{failure:?}");
    }
}
