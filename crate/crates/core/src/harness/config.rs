use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::bayes::{SghmcConfig, ViConfig};
use crate::datagen::{TaskKind, CLASSIFICATION_DEGREES, DEFAULT_N_TEST, DEFAULT_N_TRAIN, REGRESSION_DEGREES};
use crate::error::{Error, Result};
use crate::models::DEFAULT_RISK_SAMPLES;
use crate::moe::{Optimizer, TrainConfig};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "MOEBMA_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Suite {
    Regression,
    Classification,
    Proposition,
}

impl Suite {
    pub fn task(&self) -> Option<TaskKind> {
        match self {
            Suite::Regression => Some(TaskKind::Regression),
            Suite::Classification => Some(TaskKind::Classification),
            Suite::Proposition => None,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Regression => "regression",
            Suite::Classification => "classification",
            Suite::Proposition => "proposition",
        })
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regression" => Ok(Suite::Regression),
            "classification" => Ok(Suite::Classification),
            "proposition" => Ok(Suite::Proposition),
            other => Err(Error::Config(format!("unknown suite `{other}`"))),
        }
    }
}

/// One column of the experiment grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelId {
    Blr,
    Moe(usize),
    SghmcLr,
    ViLr,
}

impl ModelId {
    pub fn allowed_in(&self, suite: Suite) -> bool {
        match self {
            ModelId::Blr => suite == Suite::Regression,
            ModelId::Moe(_) => suite != Suite::Proposition,
            ModelId::SghmcLr | ModelId::ViLr => suite == Suite::Classification,
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelId::Blr => f.write_str("blr"),
            ModelId::Moe(e) => write!(f, "moe-{e}"),
            ModelId::SghmcLr => f.write_str("sghmc-lr"),
            ModelId::ViLr => f.write_str("vi-lr"),
        }
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "blr" => Ok(ModelId::Blr),
            "sghmc-lr" => Ok(ModelId::SghmcLr),
            "vi-lr" => Ok(ModelId::ViLr),
            _ => {
                let e = s
                    .strip_prefix("moe-")
                    .and_then(|n| n.parse::<usize>().ok())
                    .filter(|&n| n >= 1)
                    .ok_or_else(|| Error::Config(format!("unknown model `{s}`")))?;
                Ok(ModelId::Moe(e))
            }
        }
    }
}

/// Everything a suite run needs. Built from suite defaults, then overridden
/// by a `key=value` file and finally by command-line flags.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub suite: Suite,
    pub degrees: Vec<usize>,
    pub roster: Vec<ModelId>,
    pub n_train: usize,
    pub n_test: usize,
    pub master_seed: u64,
    pub out_dir: PathBuf,
    pub risk_samples: usize,
    /// Fill the `seconds` column with wall-clock time. Off by default so
    /// reruns produce byte-identical CSVs.
    pub timing: bool,
    pub top_k: usize,
    /// Seeds are replaced per cell.
    pub moe: TrainConfig,
    pub sghmc: SghmcConfig,
    pub vi: ViConfig,
    /// Experts in the proposition check.
    pub proposition_n: Vec<usize>,
    pub families: Vec<crate::vcdim::ClassifierFamily>,
}

impl ExperimentConfig {
    pub fn new(suite: Suite) -> Self {
        let (degrees, roster, moe) = match suite {
            Suite::Regression => (
                REGRESSION_DEGREES.collect(),
                vec![ModelId::Blr, ModelId::Moe(2), ModelId::Moe(3), ModelId::Moe(4)],
                TrainConfig::regression(0),
            ),
            Suite::Classification => (
                CLASSIFICATION_DEGREES.collect(),
                vec![ModelId::SghmcLr, ModelId::ViLr, ModelId::Moe(2), ModelId::Moe(3), ModelId::Moe(4)],
                TrainConfig::classification(0),
            ),
            Suite::Proposition => (Vec::new(), Vec::new(), TrainConfig::regression(0)),
        };
        ExperimentConfig {
            suite,
            degrees,
            roster,
            n_train: DEFAULT_N_TRAIN,
            n_test: DEFAULT_N_TEST,
            master_seed: 0,
            out_dir: std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out")),
            risk_samples: DEFAULT_RISK_SAMPLES,
            timing: false,
            top_k: 2,
            moe,
            sghmc: SghmcConfig::new(0),
            vi: ViConfig::new(0),
            proposition_n: vec![2, 3],
            families: vec![crate::vcdim::ClassifierFamily::AffineThreshold, crate::vcdim::ClassifierFamily::Interval],
        }
    }

    /// Parses `key=value` lines. `#` starts a comment. The `suite` key, if
    /// present, picks the defaults the other keys override.
    pub fn from_text(text: &str, fallback: Suite) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::parse(i + 1, format!("expected key=value, got `{line}`")))?;
            pairs.push((i + 1, k.trim().to_string(), v.trim().to_string()));
        }
        let suite = match pairs.iter().find(|(_, k, _)| k == "suite") {
            Some((line, _, v)) => v.parse().map_err(|e: Error| Error::parse(*line, e.to_string()))?,
            None => fallback,
        };
        let mut cfg = ExperimentConfig::new(suite);
        for (line, k, v) in &pairs {
            cfg.set(k, v).map_err(|e| match e {
                Error::UnknownKey(_) => e,
                other => Error::parse(*line, other.to_string()),
            })?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path, fallback: Suite) -> Result<Self> {
        ExperimentConfig::from_text(&std::fs::read_to_string(path)?, fallback)
    }

    /// Applies one override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::Config(format!("bad value `{v}` for {key}")))
        }
        fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
            v.split(',').map(|s| s.trim()).filter(|s| !s.is_empty()).map(|s| num(key, s)).collect()
        }
        match key {
            "suite" => {
                let s: Suite = value.parse()?;
                if s != self.suite {
                    *self = ExperimentConfig { master_seed: self.master_seed, out_dir: self.out_dir.clone(), ..ExperimentConfig::new(s) };
                }
            }
            "degrees" => self.degrees = list(key, value)?,
            "roster" => self.roster = value.split(',').map(|s| s.trim().parse()).collect::<Result<_>>()?,
            "n_train" => self.n_train = num(key, value)?,
            "n_test" => self.n_test = num(key, value)?,
            "seed" => self.master_seed = num(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "risk_samples" => self.risk_samples = num(key, value)?,
            "timing" => self.timing = num(key, value)?,
            "top_k" => self.top_k = num(key, value)?,
            "moe.optimizer" => self.moe.optimizer = value.parse()?,
            "moe.epochs" => self.moe.epochs = num(key, value)?,
            "moe.lr0" => self.moe.lr0 = num(key, value)?,
            "moe.decay" => self.moe.decay = num(key, value)?,
            "moe.fixed_lr" => self.moe.fixed_lr = num(key, value)?,
            "moe.batch_size" => self.moe.batch_size = num(key, value)?,
            "moe.noise" => self.moe.noise = num(key, value)?,
            "sghmc.friction" => self.sghmc.friction = num(key, value)?,
            "sghmc.noise_estimate" => self.sghmc.noise_estimate = num(key, value)?,
            "sghmc.lr0" => self.sghmc.lr0 = num(key, value)?,
            "sghmc.decay" => self.sghmc.decay = num(key, value)?,
            "sghmc.burn_in" => self.sghmc.burn_in = num(key, value)?,
            "sghmc.samples" => self.sghmc.n_samples = num(key, value)?,
            "sghmc.batch_size" => self.sghmc.batch_size = num(key, value)?,
            "sghmc.temperature" => self.sghmc.temperature = num(key, value)?,
            "vi.temperature" => self.vi.temperature = num(key, value)?,
            "vi.epochs" => self.vi.epochs = num(key, value)?,
            "vi.lr" => self.vi.lr = num(key, value)?,
            "vi.batch_size" => self.vi.batch_size = num(key, value)?,
            "vi.mc_samples" => self.vi.mc_samples = num(key, value)?,
            "vi.samples" => self.vi.n_samples = num(key, value)?,
            "proposition.n" => self.proposition_n = list(key, value)?,
            "proposition.families" => self.families = value.split(',').map(|s| s.trim().parse()).collect::<Result<_>>()?,
            other => return Err(Error::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let range = match self.suite {
            Suite::Regression => REGRESSION_DEGREES,
            Suite::Classification => CLASSIFICATION_DEGREES,
            Suite::Proposition => {
                if self.proposition_n.is_empty() || self.families.is_empty() {
                    return Err(Error::Config("proposition suite needs expert counts and families".into()));
                }
                return Ok(());
            }
        };
        if self.degrees.is_empty() || self.roster.is_empty() {
            return Err(Error::Config("degrees and roster must be nonempty".into()));
        }
        for &d in &self.degrees {
            if !range.contains(&d) {
                return Err(Error::InvalidDegree { degree: d, min: *range.start(), max: *range.end() });
            }
        }
        for m in &self.roster {
            if !m.allowed_in(self.suite) {
                return Err(Error::Config(format!("model {m} is not part of the {} suite", self.suite)));
            }
            if let ModelId::Moe(e) = m {
                if self.top_k > *e {
                    return Err(Error::TopKOutOfRange { k: self.top_k, n: *e });
                }
            }
        }
        if self.n_train == 0 || self.n_test == 0 || self.risk_samples < 2 {
            return Err(Error::Config("dataset sizes must be positive and risk samples at least 2".into()));
        }
        if self.top_k == 0 {
            return Err(Error::Config("top_k must be at least 1".into()));
        }
        self.moe.validate()?;
        self.sghmc.validate()?;
        self.vi.validate()?;
        if self.moe.optimizer == Optimizer::Sgd && self.moe.lr0 > 1.0 {
            return Err(Error::Config("plain SGD with a learning rate above 1 diverges on these tasks".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_ids_round_trip() {
        for s in ["blr", "moe-2", "moe-4", "sghmc-lr", "vi-lr"] {
            assert_eq!(s.parse::<ModelId>().unwrap().to_string(), s);
        }
        assert!("moe-0".parse::<ModelId>().is_err());
        assert!("moe".parse::<ModelId>().is_err());
    }

    #[test]
    fn suite_defaults_match_the_experiment_grid() {
        let r = ExperimentConfig::new(Suite::Regression);
        assert_eq!(r.degrees, vec![1, 2, 3, 4, 5]);
        assert_eq!(r.roster.iter().map(|m| m.to_string()).collect::<Vec<_>>(), ["blr", "moe-2", "moe-3", "moe-4"]);
        assert_eq!((r.moe.lr0, r.moe.decay, r.moe.epochs), (0.2, 0.75, 30));
        let c = ExperimentConfig::new(Suite::Classification);
        assert_eq!(c.degrees, (1..=8).collect::<Vec<_>>());
        assert_eq!(c.top_k, 2);
        assert!(c.moe.fixed_lr && c.moe.lr0 == 0.001);
        assert_eq!((c.sghmc.burn_in, c.sghmc.n_samples, c.vi.n_samples), (84, 16, 16));
        r.validate().unwrap();
        c.validate().unwrap();
    }

    #[test]
    fn file_overrides_and_comments() {
        let text = "# quick run\nsuite = classification\nn_train=500\nroster=vi-lr, moe-3\nvi.epochs=3 # short\n";
        let cfg = ExperimentConfig::from_text(text, Suite::Regression).unwrap();
        assert_eq!(cfg.suite, Suite::Classification);
        assert_eq!(cfg.n_train, 500);
        assert_eq!(cfg.roster, vec![ModelId::ViLr, ModelId::Moe(3)]);
        assert_eq!(cfg.vi.epochs, 3);
    }

    #[test]
    fn unknown_keys_are_named() {
        match ExperimentConfig::from_text("n_train=5\nbogus_key=1\n", Suite::Regression) {
            Err(Error::UnknownKey(k)) => assert_eq!(k, "bogus_key"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_values_report_their_line() {
        match ExperimentConfig::from_text("n_train=5\n\nn_test=lots\n", Suite::Regression) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rosters_checked_against_the_suite() {
        let mut cfg = ExperimentConfig::new(Suite::Regression);
        cfg.roster.push(ModelId::SghmcLr);
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::new(Suite::Classification);
        cfg.roster = vec![ModelId::Blr];
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::new(Suite::Regression);
        cfg.degrees = vec![6];
        assert!(matches!(cfg.validate(), Err(Error::InvalidDegree { .. })));
        let mut cfg = ExperimentConfig::new(Suite::Regression);
        cfg.roster = vec![ModelId::Moe(1)];
        assert!(matches!(cfg.validate(), Err(Error::TopKOutOfRange { .. })));
    }
}
