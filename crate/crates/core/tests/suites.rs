use moebma_core::datagen::TaskKind;
use moebma_core::harness::{evaluate, fit_model, cell_seed, risk_seed, suite_data, ExperimentConfig, ModelId, Suite};
use moebma_core::numerics::mean_and_stderr;

/// Test MSE and frequentist risk estimate the same expectation on
/// independent draws, so they agree within their combined standard error.
#[test]
fn risk_and_test_mse_agree_within_three_standard_errors() {
    let mut cfg = ExperimentConfig::new(Suite::Regression);
    cfg.master_seed = 5;
    for degree in [1, 3, 5] {
        let data = suite_data(&cfg, TaskKind::Regression, degree).unwrap();
        let (train, test, spec) = &data;
        for &model in &cfg.roster {
            let fitted = fit_model(&cfg, model, cell_seed(cfg.master_seed, model, degree), train).unwrap();
            let sq: Vec<f64> = test.iter().map(|(x, y)| (fitted.predict(x).unwrap() - y).powi(2)).collect();
            let (m, m_se) = mean_and_stderr(&sq);
            let ev = evaluate(&fitted, test, spec, cfg.risk_samples, risk_seed(cfg.master_seed, degree)).unwrap();
            assert_eq!(ev.mse.unwrap(), m);
            let combined = (m_se * m_se + ev.risk_std_err * ev.risk_std_err).sqrt();
            assert!((ev.risk - m).abs() < 3.0 * combined, "{model} degree {degree}: risk {} vs mse {m} (se {combined})", ev.risk);
        }
    }
}

#[test]
fn classification_roster_uses_top_two_and_sixteen_samples() {
    let cfg = ExperimentConfig::new(Suite::Classification);
    let (train, _, _) = suite_data(&ExperimentConfig { n_train: 200, ..cfg.clone() }, TaskKind::Classification, 2).unwrap();
    let quick = ExperimentConfig { moe: moebma_core::moe::TrainConfig { epochs: 1, ..cfg.moe.clone() }, ..cfg.clone() };
    match fit_model(&quick, ModelId::Moe(4), 1, &train).unwrap() {
        moebma_core::harness::Fitted::Moe(m) => assert_eq!(m.gating.k, 2),
        other => panic!("{other:?}"),
    }
    for model in [ModelId::SghmcLr, ModelId::ViLr] {
        let quick = ExperimentConfig {
            sghmc: moebma_core::bayes::SghmcConfig { burn_in: 1, ..cfg.sghmc.clone() },
            vi: moebma_core::bayes::ViConfig { epochs: 1, ..cfg.vi.clone() },
            ..cfg.clone()
        };
        match fit_model(&quick, model, 1, &train).unwrap() {
            moebma_core::harness::Fitted::Bma(s) => assert_eq!(s.len(), 16),
            other => panic!("{other:?}"),
        }
    }
}
