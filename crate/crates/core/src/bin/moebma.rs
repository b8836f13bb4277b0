use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use moebma_core::bayes::Provenance;
use moebma_core::datagen::{generate, TaskKind};
use moebma_core::harness::{
    cell_seed, evaluate, fit_model, load_dataset, load_model, load_spec, metrics_path, risk_seed, run_proposition_suite,
    run_suite_to_dir, save_dataset, save_model, save_spec, suite_data, svg_line_chart, Checkpoint, ExperimentConfig, Fitted, ModelId,
    Suite, OUT_DIR_ENV,
};
use moebma_core::models::{read_metrics_csv, write_metrics_csv, MetricsRecord};
use moebma_core::vcdim::ClassifierFamily;
use moebma_core::Error;

#[derive(Parser)]
#[command(name = "moebma", version, about = "Mixture-of-experts vs Bayesian model averaging experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one train/test pair and its generator sidecar.
    GenData(GenData),
    /// Fit one model and write its checkpoint.
    Train(Train),
    /// Evaluate a checkpoint and print one metrics row.
    Eval(Eval),
    /// Run a full suite and write the metrics CSV.
    RunSuite(RunSuite),
    /// Constructively check the piecewise VC lower bound.
    VerifyProposition(Verify),
    /// Render a metrics CSV as an SVG line chart.
    Plot(Plot),
}

/// Options shared by everything that builds an [`ExperimentConfig`].
#[derive(Args)]
struct Common {
    /// key=value configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = OUT_DIR_ENV)]
    out: Option<PathBuf>,
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    n_test: Option<usize>,
    /// Extra `key=value` overrides, same keys as the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn build(&self, suite: Suite) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_file(p, suite)?,
            None => ExperimentConfig::new(suite),
        };
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out_dir = o.clone();
        }
        if let Some(n) = self.n_train {
            cfg.n_train = n;
        }
        if let Some(n) = self.n_test {
            cfg.n_test = n;
        }
        for kv in &self.overrides {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::Config(format!("expected KEY=VALUE, got `{kv}`")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct GenData {
    #[arg(long)]
    kind: TaskKind,
    #[arg(long)]
    degree: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Train {
    #[arg(long)]
    kind: TaskKind,
    #[arg(long)]
    degree: usize,
    /// Roster entry such as `blr`, `moe-3`, `sghmc-lr`, `vi-lr`.
    #[arg(long, conflicts_with = "experts")]
    model: Option<ModelId>,
    /// Shorthand for `--model moe-N`.
    #[arg(long)]
    experts: Option<usize>,
    /// Train on this CSV instead of the suite dataset for the degree.
    #[arg(long)]
    data: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Eval {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    kind: TaskKind,
    #[arg(long)]
    degree: usize,
    /// Test CSV and generator sidecar; both default to the suite data.
    #[arg(long, requires = "generator")]
    test: Option<PathBuf>,
    #[arg(long, requires = "test")]
    generator: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct RunSuite {
    #[arg(long)]
    suite: Suite,
    /// Comma-separated degrees.
    #[arg(long)]
    degrees: Option<String>,
    /// Comma-separated roster.
    #[arg(long)]
    roster: Option<String>,
    #[arg(long)]
    risk_samples: Option<usize>,
    /// Write wall-clock seconds into the metrics CSV (breaks byte-identical reruns).
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Verify {
    /// Number of experts; all three standard cases run when omitted.
    #[arg(long, requires = "family")]
    n: Option<usize>,
    #[arg(long, requires = "n")]
    family: Option<ClassifierFamily>,
}

#[derive(Args)]
struct Plot {
    #[arg(long)]
    metrics: PathBuf,
    #[arg(long)]
    metric: String,
    #[arg(long)]
    out: PathBuf,
}

fn suite_for(kind: TaskKind) -> Suite {
    match kind {
        TaskKind::Regression => Suite::Regression,
        TaskKind::Classification => Suite::Classification,
    }
}

fn file_stem(kind: TaskKind, degree: usize) -> String {
    format!("{kind}-d{degree}")
}

fn model_of(ck: &Checkpoint) -> ModelId {
    match ck {
        Checkpoint::Moe(m) => ModelId::Moe(m.n_experts()),
        Checkpoint::Blr(_) => ModelId::Blr,
        Checkpoint::Samples(s) => match s.provenance {
            Provenance::Sghmc => ModelId::SghmcLr,
            Provenance::Vi => ModelId::ViLr,
        },
    }
}

fn gen_data(a: &GenData) -> Result<(), Error> {
    let cfg = a.common.build(suite_for(a.kind))?;
    let (train, test, spec) = generate(a.kind, a.degree, cfg.n_train, cfg.n_test, moebma_core::harness::data_seed(cfg.master_seed, a.degree))?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let stem = file_stem(a.kind, a.degree);
    let out = |suffix: &str| cfg.out_dir.join(format!("{stem}-{suffix}"));
    save_dataset(&out("train.csv"), &train)?;
    save_dataset(&out("test.csv"), &test)?;
    save_spec(&out("generator.txt"), &spec)?;
    println!("wrote {} and {}", out("train.csv").display(), out("test.csv").display());
    Ok(())
}

fn train(a: &Train) -> Result<(), Error> {
    let cfg = a.common.build(suite_for(a.kind))?;
    let model = match (a.model, a.experts) {
        (Some(m), _) => m,
        (None, Some(e)) => ModelId::Moe(e),
        (None, None) => return Err(Error::Config("pass --model or --experts".into())),
    };
    let check = ExperimentConfig { roster: vec![model], degrees: vec![a.degree], ..cfg.clone() };
    check.validate()?;
    let train = match &a.data {
        Some(p) => load_dataset(p)?,
        None => suite_data(&cfg, a.kind, a.degree)?.0,
    };
    if train.kind() != a.kind {
        return Err(Error::Config(format!("--kind {} does not match the {} dataset", a.kind, train.kind())));
    }
    let fitted = fit_model(&cfg, model, cell_seed(cfg.master_seed, model, a.degree), &train)?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let path = cfg.out_dir.join(format!("{model}-d{}.ckpt", a.degree));
    save_model(&path, &fitted.into_checkpoint())?;
    println!("wrote {}", path.display());
    Ok(())
}

fn eval(a: &Eval) -> Result<(), Error> {
    let cfg = a.common.build(suite_for(a.kind))?;
    let ck = load_model(&a.checkpoint)?;
    let model = model_of(&ck);
    let (test, spec) = match (&a.test, &a.generator) {
        (Some(t), Some(g)) => (load_dataset(t)?, load_spec(g)?),
        _ => {
            let (_, test, spec) = suite_data(&cfg, a.kind, a.degree)?;
            (test, spec)
        }
    };
    let ev = evaluate(&Fitted::from_checkpoint(ck), &test, &spec, cfg.risk_samples, risk_seed(cfg.master_seed, a.degree))?;
    let record = MetricsRecord {
        model: model.to_string(),
        degree: a.degree,
        mse: ev.mse,
        nll: Some(ev.nll),
        accuracy: ev.accuracy,
        risk: Some(ev.risk),
        seconds: None,
        seed: cell_seed(cfg.master_seed, model, a.degree),
    };
    write_metrics_csv(std::io::stdout().lock(), &[record])
}

fn run_suite(a: &RunSuite) -> Result<ExitCode, Error> {
    let mut cfg = a.common.build(a.suite)?;
    if let Some(d) = &a.degrees {
        cfg.set("degrees", d)?;
    }
    if let Some(r) = &a.roster {
        cfg.set("roster", r)?;
    }
    if let Some(n) = a.risk_samples {
        cfg.risk_samples = n;
    }
    cfg.timing |= a.timing;
    cfg.validate()?;
    if cfg.suite == Suite::Proposition {
        let reports = run_proposition_suite(&cfg)?;
        let all_ok = reports.iter().all(|r| r.ok());
        for r in reports {
            println!("{}", r.summary_line());
        }
        return Ok(if all_ok { ExitCode::SUCCESS } else { ExitCode::from(1) });
    }
    match run_suite_to_dir(&cfg) {
        Ok(report) => {
            println!("wrote {} rows to {}", report.cells.len(), metrics_path(&cfg.out_dir, cfg.suite).display());
            Ok(ExitCode::SUCCESS)
        }
        Err(e @ Error::Cell { .. }) => {
            eprintln!("error: {e}");
            eprintln!("partial results in {}", metrics_path(&cfg.out_dir, cfg.suite).display());
            Ok(ExitCode::from(1))
        }
        Err(e) => Err(e),
    }
}

fn verify(a: &Verify) -> Result<ExitCode, Error> {
    let cases = match (a.n, a.family) {
        (Some(n), Some(f)) => vec![(n, f)],
        _ => vec![(2, ClassifierFamily::AffineThreshold), (3, ClassifierFamily::AffineThreshold), (2, ClassifierFamily::Interval)],
    };
    let mut all_ok = true;
    for (n, f) in cases {
        let report = moebma_core::vcdim::verify_proposition(n, f)?;
        println!("{report}");
        println!("{}", report.summary_line());
        all_ok &= report.ok();
    }
    Ok(if all_ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn plot(a: &Plot) -> Result<(), Error> {
    let records = read_metrics_csv(std::fs::File::open(&a.metrics)?)?;
    let svg = svg_line_chart(&records, &a.metric)?;
    write_file(&a.out, &svg)
}

fn write_file(path: &Path, text: &str) -> Result<(), Error> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::GenData(a) => gen_data(a).map(|_| ExitCode::SUCCESS),
        Command::Train(a) => train(a).map(|_| ExitCode::SUCCESS),
        Command::Eval(a) => eval(a).map(|_| ExitCode::SUCCESS),
        Command::RunSuite(a) => run_suite(a),
        Command::VerifyProposition(a) => verify(a),
        Command::Plot(a) => plot(a).map(|_| ExitCode::SUCCESS),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Cell { .. } => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
