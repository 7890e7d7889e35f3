use debm::data::load_dataset;
use debm::eval::{
    bootstrap_positional_variance, run_method, run_sweep, staging_auc_cv, BootstrapOptions, ExperimentResult,
    GridCell, Method, MethodOptions, SweepConfig,
};
use debm::models::{debm_fit, DebmOptions, FittedModel};
use debm::ordering::normalized_kendall_tau;
use debm::sim::{default_config, simulate};

fn cohort(sigma_beta: f64, mult: f64, seed: u64) -> debm::SimResult {
    simulate(&default_config(7, (60, 80, 50), sigma_beta, mult, seed).unwrap()).unwrap()
}

#[test]
fn debm_recovers_low_noise_cascade() {
    let s = cohort(1.0, 0.0, 11);
    let fit = debm_fit(&s.dataset, &DebmOptions::default()).unwrap();
    assert_eq!(fit.central, s.ground_truth);
    assert!(fit.objective >= 0.0);
}

#[test]
fn csv_round_trip_preserves_fit() {
    let s = cohort(1.0, 2.0, 3);
    let text = s.dataset.to_csv_string();
    let back = load_dataset(text.as_bytes()).unwrap();
    assert_eq!(back, s.dataset);
    let a = run_method(&s.dataset, Method::DebmProb, 1, &MethodOptions::default()).unwrap();
    let b = run_method(&back, Method::DebmProb, 1, &MethodOptions::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn fitted_model_json_round_trip_stages_identically() {
    let s = cohort(1.0, 2.0, 5);
    for m in Method::ALL {
        let fit = run_method(&s.dataset, m, 2, &MethodOptions::default()).unwrap();
        let model = fit.to_model(s.dataset.biomarker_names());
        let json = serde_json::to_string(&model).unwrap();
        let back: FittedModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.stage(&s.dataset).unwrap(), model.stage(&s.dataset).unwrap());
    }
}

#[test]
fn staging_survives_column_reordering() {
    let s = cohort(1.0, 0.0, 6);
    let fit = run_method(&s.dataset, Method::DebmProb, 0, &MethodOptions::default()).unwrap();
    let model = fit.to_model(s.dataset.biomarker_names());
    let shuffled = s.dataset.select_columns(&[3, 0, 6, 1, 5, 2, 4]).unwrap();
    assert_eq!(model.stage(&shuffled).unwrap(), model.stage(&s.dataset).unwrap());
    let missing = s.dataset.select_columns(&[0, 1, 2]).unwrap();
    assert!(model.stage(&missing).is_err());
}

fn small_sweep(methods: Vec<Method>) -> SweepConfig {
    let mut c = SweepConfig::new(
        methods,
        vec![
            GridCell {
                sigma_beta: 1.0,
                sigma_xi_mult: 0.0,
            },
            GridCell {
                sigma_beta: 2.0,
                sigma_xi_mult: 2.0,
            },
        ],
        3,
        5,
    );
    c.counts = (40, 40, 40);
    c.record_timing = false;
    c
}

#[test]
fn sweep_is_deterministic_and_order_free() {
    let cfg = small_sweep(Method::ALL.to_vec());
    let a = run_sweep(&cfg).unwrap();
    let b = run_sweep(&cfg).unwrap();
    assert_eq!(a, b);

    let mut rev = Method::ALL.to_vec();
    rev.reverse();
    let c = run_sweep(&small_sweep(rev)).unwrap();
    for (ca, cc) in a.cells.iter().zip(&c.cells) {
        for m in Method::ALL {
            assert_eq!(ca.method(m).unwrap().inaccuracies, cc.method(m).unwrap().inaccuracies);
        }
    }
    for cell in &a.cells {
        for mc in &cell.methods {
            assert_eq!(mc.inaccuracies.len(), 3);
            assert!(mc.values().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}

#[test]
fn sweep_matches_direct_runs() {
    let cfg = small_sweep(vec![Method::DebmProb]);
    let res = run_sweep(&cfg).unwrap();
    for (c, cell) in cfg.grid.iter().enumerate() {
        for r in 0..cfg.repetitions {
            let seed = debm::eval::sweep_seed(cfg.seed, c, r);
            let s = simulate(&default_config(5, cfg.counts, cell.sigma_beta, cell.sigma_xi_mult, seed).unwrap()).unwrap();
            let fit = run_method(&s.dataset, Method::DebmProb, debm::seed::derive(seed, &[1]), &cfg.method_options)
                .unwrap();
            let expected = normalized_kendall_tau(&s.ground_truth, &fit.ordering).unwrap();
            assert_eq!(res.cells[c].methods[0].inaccuracies[r], Some(expected));
        }
    }
}

#[test]
fn sweep_records_failures_without_aborting() {
    let mut cfg = small_sweep(vec![Method::DebmProb, Method::EbmPlainGmm]);
    cfg.counts = (1, 10, 1);
    let res = run_sweep(&cfg).unwrap();
    for cell in &res.cells {
        for mc in &cell.methods {
            assert_eq!(mc.failures.len(), 3);
            assert!(mc.values().is_empty());
            assert!(mc.mean.is_nan());
        }
    }
    let json = serde_json::to_string(&res).unwrap();
    let back: ExperimentResult = serde_json::from_str(&json).unwrap();
    assert_eq!(back.cells[0].methods[0].failures, res.cells[0].methods[0].failures);
    assert!(back.cells[0].methods[0].mean.is_nan());
}

#[test]
fn sweep_rejects_bad_configs_up_front() {
    let mut cfg = small_sweep(vec![Method::DebmProb]);
    cfg.repetitions = 0;
    assert!(run_sweep(&cfg).is_err());
    let mut cfg = small_sweep(vec![Method::DebmProb]);
    cfg.grid.clear();
    assert!(run_sweep(&cfg).is_err());
    let mut cfg = small_sweep(vec![Method::DebmProb]);
    cfg.grid[1].sigma_xi_mult = -1.0;
    assert!(run_sweep(&cfg).is_err());
}

#[test]
fn tidy_csv_layout() {
    let res = run_sweep(&small_sweep(vec![Method::DebmProb, Method::DebmPlain])).unwrap();
    let mut buf = Vec::new();
    res.write_tidy_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "method,sigma_beta,sigma_xi_mult,repetition,inaccuracy,seconds");
    assert_eq!(lines.len(), 1 + 2 * 2 * 3);
    assert!(lines[1].starts_with("DEBM-prob,1,0,0,"));
    assert!(lines[1].ends_with(",0"));
}

#[test]
fn timings_are_positive_when_recorded() {
    let mut cfg = small_sweep(vec![Method::DebmProb, Method::EbmRobust]);
    cfg.record_timing = true;
    let res = run_sweep(&cfg).unwrap();
    let report = res.summary().runtime;
    assert_eq!(report.methods.len(), 2);
    assert!(report.methods.iter().all(|r| r.mean_seconds > 0.0 && r.runs == 6));
    assert!(!report.hardware.is_empty());
}

#[test]
fn bootstrap_sums_and_determinism() {
    let s = cohort(2.0, 2.0, 8);
    for stratified in [true, false] {
        let opts = BootstrapOptions {
            resamples: 12,
            seed: 4,
            stratified,
            ..Default::default()
        };
        let pv = bootstrap_positional_variance(&s.dataset, &opts).unwrap();
        assert!(pv.row_sums().iter().all(|&r| r == 12));
        assert!(pv.column_sums().iter().all(|&c| c == 12));
        assert_eq!(pv, bootstrap_positional_variance(&s.dataset, &opts).unwrap());
    }
    let one = bootstrap_positional_variance(
        &s.dataset,
        &BootstrapOptions {
            resamples: 1,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(one.counts.iter().all(|r| r.iter().filter(|&&c| c == 1).count() == 1));
    assert!(bootstrap_positional_variance(
        &s.dataset,
        &BootstrapOptions {
            resamples: 0,
            ..Default::default()
        }
    )
    .is_err());
}

#[test]
fn cv_auc_is_high_on_low_noise_data() {
    let s = cohort(1.0, 0.0, 9);
    for m in [Method::DebmProb, Method::EbmRobust] {
        let aucs = staging_auc_cv(&s.dataset, m, 5, 3, &MethodOptions::default()).unwrap();
        assert_eq!(aucs.len(), 5);
        assert!(aucs.iter().all(|&a| a >= 0.95), "{m}: {aucs:?}");
    }
    assert!(staging_auc_cv(&s.dataset, Method::DebmProb, 1, 0, &MethodOptions::default()).is_err());
}
