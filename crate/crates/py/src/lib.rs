//! Python module `moebma`: datasets, MoE models, the Bayesian baselines,
//! the proposition check and the experiment suites.

use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use moebma_core::bayes::{self, Likelihood, Provenance, SghmcConfig, ViConfig};
use moebma_core::datagen::{self, TaskKind};
use moebma_core::harness::{self, Checkpoint, ExperimentConfig, Suite};
use moebma_core::models::{self, Link};
use moebma_core::moe::{self, GateMode, TrainConfig};
use moebma_core::numerics::{Matrix, Rng};
use moebma_core::vcdim::{self, ClassifierFamily};

fn err(e: moebma_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse<T: std::str::FromStr<Err = moebma_core::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(err)
}

#[pyclass(name = "Dataset", module = "moebma", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDataset(datagen::Dataset);

#[pymethods]
impl PyDataset {
    #[new]
    fn new(features: Vec<Vec<f64>>, targets: Vec<f64>, kind: &str) -> PyResult<Self> {
        let m = Matrix::from_rows(&features).map_err(err)?;
        Ok(PyDataset(datagen::Dataset::new(m, targets, parse(kind)?).map_err(err)?))
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        harness::load_dataset(&path).map(PyDataset).map_err(err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        harness::save_dataset(&path, &self.0).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn kind(&self) -> String {
        self.0.kind().to_string()
    }

    fn features(&self) -> Vec<Vec<f64>> {
        self.0.iter().map(|(x, _)| x.to_vec()).collect()
    }

    fn targets(&self) -> Vec<f64> {
        self.0.targets().to_vec()
    }

    fn __repr__(&self) -> String {
        format!("Dataset(kind={}, n={}, dim={})", self.0.kind(), self.0.len(), self.0.dim())
    }
}

/// True data-generating process of a dataset pair.
#[pyclass(name = "GeneratorSpec", module = "moebma", frozen)]
struct PyGeneratorSpec(datagen::GeneratorSpec);

#[pymethods]
impl PyGeneratorSpec {
    #[getter]
    fn degree(&self) -> usize {
        self.0.degree
    }

    #[getter]
    fn coeffs(&self) -> Vec<f64> {
        self.0.coeffs.clone()
    }

    #[getter]
    fn noise_std(&self) -> f64 {
        self.0.noise_std
    }

    fn __str__(&self) -> String {
        harness::spec_to_string(&self.0)
    }
}

/// Returns `(train, test, spec)`.
#[pyfunction]
#[pyo3(signature = (kind, degree, n_train = datagen::DEFAULT_N_TRAIN, n_test = datagen::DEFAULT_N_TEST, seed = 0))]
fn generate(kind: &str, degree: usize, n_train: usize, n_test: usize, seed: u64) -> PyResult<(PyDataset, PyDataset, PyGeneratorSpec)> {
    let (tr, te, spec) = datagen::generate(parse(kind)?, degree, n_train, n_test, seed).map_err(err)?;
    Ok((PyDataset(tr), PyDataset(te), PyGeneratorSpec(spec)))
}

#[pyfunction]
fn keep_top_k(values: Vec<f64>, k: usize) -> PyResult<Vec<f64>> {
    moe::keep_top_k(&values, k).map_err(err)
}

#[pyclass(name = "MoeModel", module = "moebma", skip_from_py_object)]
#[derive(Clone)]
struct PyMoeModel(moe::MoeModel);

#[pymethods]
impl PyMoeModel {
    /// Gate and expert weights drawn from `N(0, 0.1²)`.
    #[new]
    #[pyo3(signature = (n_experts, dim, k = 2, link = "identity", noise_std = models::DEFAULT_NOISE_STD, seed = 0))]
    fn new(n_experts: usize, dim: usize, k: usize, link: &str, noise_std: f64, seed: u64) -> PyResult<Self> {
        let link: Link = parse(link)?;
        moe::MoeModel::init(n_experts, dim, k, link, noise_std, &mut Rng::new(seed)).map(PyMoeModel).map_err(err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        match harness::load_model(&path).map_err(err)? {
            Checkpoint::Moe(m) => Ok(PyMoeModel(m)),
            other => Err(PyValueError::new_err(format!("{} checkpoint is not a mixture model", other.kind()))),
        }
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        harness::save_model(&path, &Checkpoint::Moe(self.0.clone())).map_err(err)
    }

    #[getter]
    fn n_experts(&self) -> usize {
        self.0.n_experts()
    }

    #[getter]
    fn k(&self) -> usize {
        self.0.gating.k
    }

    /// Deterministic gated prediction: mean or probability of label 1.
    fn predict(&self, x: Vec<f64>) -> PyResult<f64> {
        Ok(moe::moe_predict(&self.0, &x, GateMode::Eval).map_err(err)?.value)
    }

    /// Gate weights at `x`; pass `noise_seed` to sample training noise.
    #[pyo3(signature = (x, noise_seed = None))]
    fn gate(&self, x: Vec<f64>, noise_seed: Option<u64>) -> PyResult<Vec<f64>> {
        match noise_seed {
            None => moe::gate_forward(&self.0.gating, &x, GateMode::Eval),
            Some(s) => moe::gate_forward(&self.0.gating, &x, GateMode::Train(&mut Rng::new(s))),
        }
        .map_err(err)
    }

    fn params(&self) -> Vec<f64> {
        self.0.params_flat()
    }

    /// Trains in place with the suite defaults for the dataset's task, then
    /// applies any keyword overrides. Returns per-epoch mean loss.
    #[pyo3(signature = (data, seed = 0, epochs = None, lr0 = None, batch_size = None, noise = None))]
    fn train(&mut self, data: &PyDataset, seed: u64, epochs: Option<usize>, lr0: Option<f64>, batch_size: Option<usize>, noise: Option<bool>) -> PyResult<Vec<f64>> {
        let mut cfg = match data.0.kind() {
            TaskKind::Regression => TrainConfig::regression(seed),
            TaskKind::Classification => TrainConfig::classification(seed),
        };
        cfg.epochs = epochs.unwrap_or(cfg.epochs);
        cfg.lr0 = lr0.unwrap_or(cfg.lr0);
        cfg.batch_size = batch_size.unwrap_or(cfg.batch_size);
        cfg.noise = noise.unwrap_or(cfg.noise);
        cfg.validate().map_err(err)?;
        let (m, history) = moe::train_moe(&self.0, &data.0, &cfg).map_err(err)?;
        self.0 = m;
        Ok(history)
    }

    fn __repr__(&self) -> String {
        format!("MoeModel(n_experts={}, k={}, dim={}, link={})", self.0.n_experts(), self.0.gating.k, self.0.dim(), self.0.link())
    }
}

/// Conjugate Gaussian posterior over linear-regression coefficients.
#[pyclass(name = "BlrPosterior", module = "moebma", frozen)]
struct PyBlrPosterior(bayes::GaussianPosterior);

#[pymethods]
impl PyBlrPosterior {
    #[getter]
    fn mean(&self) -> Vec<f64> {
        self.0.mean.clone()
    }

    #[getter]
    fn cov(&self) -> Vec<Vec<f64>> {
        self.0.cov.row_iter().map(|r| r.to_vec()).collect()
    }

    /// `(mean, variance)` of the posterior predictive at `x`.
    fn predictive(&self, x: Vec<f64>) -> PyResult<(f64, f64)> {
        bayes::blr_predictive(&self.0, &x).map_err(err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        harness::save_model(&path, &Checkpoint::Blr(self.0.clone())).map_err(err)
    }
}

/// `N(0, I)` prior updated with a regression dataset.
#[pyfunction]
#[pyo3(signature = (data, noise_std = models::DEFAULT_NOISE_STD))]
fn blr_fit(data: &PyDataset, noise_std: f64) -> PyResult<PyBlrPosterior> {
    let prior = bayes::GaussianPosterior::standard_prior(data.0.dim(), noise_std).map_err(err)?;
    bayes::blr_posterior(&prior, &data.0).map(PyBlrPosterior).map_err(err)
}

#[pyclass(name = "PosteriorSamples", module = "moebma", frozen)]
struct PyPosteriorSamples(bayes::PosteriorSamples);

#[pymethods]
impl PyPosteriorSamples {
    fn __len__(&self) -> usize {
        self.0.len()
    }

    #[getter]
    fn provenance(&self) -> String {
        self.0.provenance.to_string()
    }

    fn samples(&self) -> Vec<Vec<f64>> {
        self.0.samples().to_vec()
    }

    /// Model-averaged probability of label 1.
    fn predict(&self, x: Vec<f64>) -> PyResult<f64> {
        bayes::bma_predict(&self.0, &x).map_err(err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        harness::save_model(&path, &Checkpoint::Samples(self.0.clone())).map_err(err)
    }
}

/// SGHMC over logistic-regression coefficients with the default schedule.
#[pyfunction]
#[pyo3(signature = (data, seed = 0, burn_in = None, n_samples = None, lr0 = None))]
fn sghmc_sample(data: &PyDataset, seed: u64, burn_in: Option<usize>, n_samples: Option<usize>, lr0: Option<f64>) -> PyResult<PyPosteriorSamples> {
    let d = SghmcConfig::new(seed);
    let cfg = SghmcConfig { burn_in: burn_in.unwrap_or(d.burn_in), n_samples: n_samples.unwrap_or(d.n_samples), lr0: lr0.unwrap_or(d.lr0), ..d };
    bayes::sghmc_sample(&Likelihood::logistic(), &data.0, &cfg).map(PyPosteriorSamples).map_err(err)
}

/// Mean-field VI over logistic-regression coefficients, then draws samples.
#[pyfunction]
#[pyo3(signature = (data, seed = 0, temperature = 0.1, epochs = None, n_samples = None))]
fn vi_sample(data: &PyDataset, seed: u64, temperature: f64, epochs: Option<usize>, n_samples: Option<usize>) -> PyResult<PyPosteriorSamples> {
    let d = ViConfig::new(seed);
    let cfg = ViConfig { temperature, epochs: epochs.unwrap_or(d.epochs), n_samples: n_samples.unwrap_or(d.n_samples), ..d };
    Ok(PyPosteriorSamples(bayes::vi_fit_and_sample(&Likelihood::logistic(), &data.0, &cfg).map_err(err)?.1))
}

/// Loads any checkpoint and returns the matching Python object.
#[pyfunction]
fn load_checkpoint(py: Python<'_>, path: PathBuf) -> PyResult<Py<PyAny>> {
    Ok(match harness::load_model(&path).map_err(err)? {
        Checkpoint::Moe(m) => Py::new(py, PyMoeModel(m))?.into_any(),
        Checkpoint::Blr(p) => Py::new(py, PyBlrPosterior(p))?.into_any(),
        Checkpoint::Samples(s) => Py::new(py, PyPosteriorSamples(s))?.into_any(),
    })
}

/// Returns `(ok, summary_line, report_text)`.
#[pyfunction]
fn verify_proposition(n: usize, family: &str) -> PyResult<(bool, String, String)> {
    let f: ClassifierFamily = parse(family)?;
    let r = vcdim::verify_proposition(n, f).map_err(err)?;
    Ok((r.ok(), r.summary_line(), r.to_string()))
}

/// Runs a suite with `key=value` overrides and returns one dict per row.
#[pyfunction]
#[pyo3(signature = (suite, seed = 0, overrides = None))]
fn run_suite<'py>(py: Python<'py>, suite: &str, seed: u64, overrides: Option<Vec<(String, String)>>) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let suite: Suite = parse(suite)?;
    let mut cfg = ExperimentConfig::new(suite);
    cfg.master_seed = seed;
    for (k, v) in overrides.unwrap_or_default() {
        cfg.set(&k, &v).map_err(err)?;
    }
    let report = py.detach(|| harness::run_suite(&cfg)).map_err(err)?;
    report
        .cells
        .iter()
        .map(|c| {
            let d = PyDict::new(py);
            let r = &c.record;
            d.set_item("model", &r.model)?;
            d.set_item("degree", r.degree)?;
            d.set_item("mse", r.mse)?;
            d.set_item("nll", r.nll)?;
            d.set_item("accuracy", r.accuracy)?;
            d.set_item("risk", r.risk)?;
            d.set_item("risk_std_err", c.risk_std_err)?;
            d.set_item("seconds", c.seconds)?;
            d.set_item("seed", r.seed)?;
            Ok(d)
        })
        .collect()
}

#[pyfunction]
fn provenances() -> Vec<String> {
    [Provenance::Sghmc, Provenance::Vi].iter().map(|p| p.to_string()).collect()
}

#[pymodule]
fn moebma(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyGeneratorSpec>()?;
    m.add_class::<PyMoeModel>()?;
    m.add_class::<PyBlrPosterior>()?;
    m.add_class::<PyPosteriorSamples>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(keep_top_k, m)?)?;
    m.add_function(wrap_pyfunction!(blr_fit, m)?)?;
    m.add_function(wrap_pyfunction!(sghmc_sample, m)?)?;
    m.add_function(wrap_pyfunction!(vi_sample, m)?)?;
    m.add_function(wrap_pyfunction!(load_checkpoint, m)?)?;
    m.add_function(wrap_pyfunction!(verify_proposition, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    m.add_function(wrap_pyfunction!(provenances, m)?)?;
    Ok(())
}
