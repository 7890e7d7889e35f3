//! Experiment harness.
//!
//! Every task (sweep repetition, bootstrap resample, CV fold) draws from its
//! own seed derived from the base seed and the task's indices, and writes
//! into a pre-indexed slot. Serial and parallel runs therefore produce the
//! same numbers; only the recorded wall-clock times differ.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{BiomarkerDataset, DiagnosticLabel};
use crate::error::{Error, Result};
use crate::mixture::{self, BiomarkerMixture, FitMethod, NamedMixture};
use crate::models::{
    self, debm_from_mixtures, ebm_fit, DebmDistance, DebmOptions, EbmOptions,
    EventLikelihoodMatrices, FittedModel,
};
use crate::ordering::{normalized_kendall_tau, EventOrdering, WeightReading};
use crate::seed;
use crate::sim;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "DEBM-prob")]
    DebmProb,
    #[serde(rename = "DEBM-plain")]
    DebmPlain,
    #[serde(rename = "EBM-plain-gmm")]
    EbmPlainGmm,
    #[serde(rename = "EBM-robust-bounded")]
    EbmRobust,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::DebmProb,
        Method::DebmPlain,
        Method::EbmPlainGmm,
        Method::EbmRobust,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::DebmProb => "DEBM-prob",
            Method::DebmPlain => "DEBM-plain",
            Method::EbmPlainGmm => "EBM-plain-gmm",
            Method::EbmRobust => "EBM-robust-bounded",
        }
    }

    /// Short command-line spelling.
    pub fn cli_name(self) -> &'static str {
        match self {
            Method::DebmProb => "debm-prob",
            Method::DebmPlain => "debm-plain",
            Method::EbmPlainGmm => "ebm",
            Method::EbmRobust => "ebm-modified",
        }
    }

    pub fn fit_method(self) -> FitMethod {
        match self {
            Method::EbmPlainGmm => FitMethod::PlainGmm,
            _ => FitMethod::RobustBounded,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s) || m.cli_name() == s)
            .ok_or_else(|| Error::config(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodOptions {
    pub ebm_restarts: usize,
    pub consensus_restarts: usize,
    pub reading: WeightReading,
}

impl Default for MethodOptions {
    fn default() -> Self {
        Self {
            ebm_restarts: EbmOptions::default().restarts,
            consensus_restarts: 0,
            reading: WeightReading::Displaced,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodFit {
    pub method: Method,
    pub mixtures: Vec<BiomarkerMixture>,
    pub ordering: EventOrdering,
    /// Consensus objective (DEBM, lower is better) or log-likelihood (EBM).
    pub objective: f64,
}

impl MethodFit {
    pub fn to_model(&self, names: &[String]) -> FittedModel {
        FittedModel {
            method: self.method.name().to_string(),
            biomarkers: names.to_vec(),
            mixtures: names
                .iter()
                .zip(&self.mixtures)
                .map(|(n, m)| NamedMixture::new(n.clone(), m))
                .collect(),
            ordering: self.ordering.to_names(names),
            objective: self.objective,
        }
    }
}

/// Fit one method end to end.
pub fn run_method(
    dataset: &BiomarkerDataset,
    method: Method,
    seed: u64,
    options: &MethodOptions,
) -> Result<MethodFit> {
    let mixtures = mixture::fit_all_biomarkers(dataset, method.fit_method())?;
    match method {
        Method::DebmProb | Method::DebmPlain => {
            let distance = if method == Method::DebmProb {
                DebmDistance::Probabilistic
            } else {
                DebmDistance::Plain
            };
            let fit = debm_from_mixtures(
                dataset,
                mixtures,
                &DebmOptions {
                    distance,
                    reading: options.reading,
                    restarts: options.consensus_restarts,
                    seed,
                },
            )?;
            Ok(MethodFit {
                method,
                mixtures: fit.mixtures,
                ordering: fit.central,
                objective: fit.objective,
            })
        }
        Method::EbmPlainGmm | Method::EbmRobust => {
            let matrices = EventLikelihoodMatrices::from_mixtures(dataset, &mixtures)?;
            let fit = ebm_fit(
                &matrices,
                &EbmOptions {
                    restarts: options.ebm_restarts,
                    seed,
                },
            )?;
            Ok(MethodFit {
                method,
                mixtures,
                ordering: fit.ordering,
                objective: fit.log_likelihood,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub sigma_beta: f64,
    pub sigma_xi_mult: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub methods: Vec<Method>,
    pub grid: Vec<GridCell>,
    pub repetitions: usize,
    pub n_biomarkers: usize,
    pub counts: (usize, usize, usize),
    pub seed: u64,
    pub method_options: MethodOptions,
    /// When false every recorded time is zero, making results reproducible
    /// byte for byte.
    pub record_timing: bool,
}

impl SweepConfig {
    pub fn new(methods: Vec<Method>, grid: Vec<GridCell>, repetitions: usize, n_biomarkers: usize) -> Self {
        Self {
            methods,
            grid,
            repetitions,
            n_biomarkers,
            counts: sim::DEFAULT_COUNTS,
            seed: seed::DEFAULT_SEED,
            method_options: MethodOptions::default(),
            record_timing: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepFailure {
    pub repetition: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodCell {
    pub method: Method,
    /// One slot per repetition; `None` where the method failed.
    pub inaccuracies: Vec<Option<f64>>,
    pub seconds: Vec<f64>,
    #[serde(deserialize_with = "null_as_nan")]
    pub mean: f64,
    #[serde(deserialize_with = "null_as_nan")]
    pub sd: f64,
    pub failures: Vec<RepFailure>,
}

impl MethodCell {
    pub fn values(&self) -> Vec<f64> {
        self.inaccuracies.iter().flatten().copied().collect()
    }

    /// Standard error of the mean inaccuracy.
    pub fn std_error(&self) -> f64 {
        let n = self.values().len() as f64;
        if n > 0.0 {
            self.sd / n.sqrt()
        } else {
            f64::NAN
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub cell: GridCell,
    pub methods: Vec<MethodCell>,
}

impl CellResult {
    pub fn method(&self, m: Method) -> Option<&MethodCell> {
        self.methods.iter().find(|c| c.method == m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub n_biomarkers: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub cells: Vec<CellResult>,
}

// JSON has no NaN; serde_json writes it as null
fn null_as_nan<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

/// Seed of the simulated dataset for one grid cell and repetition.
pub fn sweep_seed(base: u64, cell: usize, repetition: usize) -> u64 {
    seed::derive(base, &[cell as u64, repetition as u64])
}

/// Simulate every (cell, repetition), run each method on the shared
/// dataset and record the normalised Kendall distance to ground truth.
pub fn run_sweep(config: &SweepConfig) -> Result<ExperimentResult> {
    if config.repetitions == 0 {
        return Err(Error::config("repetitions must be at least 1"));
    }
    if config.grid.is_empty() {
        return Err(Error::config("sweep grid is empty"));
    }
    // validate the whole grid before any work starts
    for cell in &config.grid {
        sim::default_config(
            config.n_biomarkers,
            config.counts,
            cell.sigma_beta,
            cell.sigma_xi_mult,
            0,
        )?;
    }

    let tasks: Vec<(usize, usize)> = (0..config.grid.len())
        .flat_map(|c| (0..config.repetitions).map(move |r| (c, r)))
        .collect();

    let outcomes: Vec<Vec<(Result<f64>, f64)>> = tasks
        .par_iter()
        .map(|&(c, r)| {
            let cell = config.grid[c];
            let data_seed = sweep_seed(config.seed, c, r);
            let sim_cfg = sim::default_config(
                config.n_biomarkers,
                config.counts,
                cell.sigma_beta,
                cell.sigma_xi_mult,
                data_seed,
            )
            .expect("grid validated above");
            let simulated = sim::simulate(&sim_cfg);
            let method_seed = seed::derive(data_seed, &[1]);
            config
                .methods
                .iter()
                .map(|&m| {
                    let started = Instant::now();
                    let res = simulated.as_ref().map_err(|e| Error::Fit(e.to_string())).and_then(|s| {
                        let fit = run_method(&s.dataset, m, method_seed, &config.method_options)?;
                        normalized_kendall_tau(&s.ground_truth, &fit.ordering)
                    });
                    let secs = if config.record_timing {
                        started.elapsed().as_secs_f64()
                    } else {
                        0.0
                    };
                    (res, secs)
                })
                .collect()
        })
        .collect();

    let mut cells = Vec::with_capacity(config.grid.len());
    for (c, &cell) in config.grid.iter().enumerate() {
        let mut methods = Vec::with_capacity(config.methods.len());
        for (k, &m) in config.methods.iter().enumerate() {
            let mut inaccuracies = Vec::with_capacity(config.repetitions);
            let mut seconds = Vec::with_capacity(config.repetitions);
            let mut failures = Vec::new();
            for r in 0..config.repetitions {
                let (res, secs) = &outcomes[c * config.repetitions + r][k];
                seconds.push(*secs);
                match res {
                    Ok(v) => inaccuracies.push(Some(*v)),
                    Err(e) => {
                        inaccuracies.push(None);
                        failures.push(RepFailure {
                            repetition: r,
                            error: e.to_string(),
                        });
                    }
                }
            }
            let vals: Vec<f64> = inaccuracies.iter().flatten().copied().collect();
            let (mean, sd) = mean_sd(&vals);
            methods.push(MethodCell {
                method: m,
                inaccuracies,
                seconds,
                mean,
                sd,
                failures,
            });
        }
        cells.push(CellResult { cell, methods });
    }
    Ok(ExperimentResult {
        n_biomarkers: config.n_biomarkers,
        repetitions: config.repetitions,
        seed: config.seed,
        cells,
    })
}

impl ExperimentResult {
    /// Tidy CSV: `method,sigma_beta,sigma_xi_mult,repetition,inaccuracy,seconds`.
    /// Failed repetitions are omitted; they appear in the JSON summary.
    pub fn write_tidy_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "method,sigma_beta,sigma_xi_mult,repetition,inaccuracy,seconds")?;
        for cell in &self.cells {
            for mc in &cell.methods {
                for (r, v) in mc.inaccuracies.iter().enumerate() {
                    if let Some(v) = v {
                        writeln!(
                            out,
                            "{},{},{},{},{},{}",
                            mc.method,
                            cell.cell.sigma_beta,
                            cell.cell.sigma_xi_mult,
                            r,
                            v,
                            mc.seconds[r]
                        )?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn summary(&self) -> SweepSummary {
        SweepSummary {
            n_biomarkers: self.n_biomarkers,
            repetitions: self.repetitions,
            seed: self.seed,
            cells: self
                .cells
                .iter()
                .map(|c| CellSummary {
                    sigma_beta: c.cell.sigma_beta,
                    sigma_xi_mult: c.cell.sigma_xi_mult,
                    methods: c
                        .methods
                        .iter()
                        .map(|m| MethodSummary {
                            method: m.method,
                            mean: m.mean,
                            sd: m.sd,
                            n: m.values().len(),
                            failures: m.failures.clone(),
                        })
                        .collect(),
                })
                .collect(),
            runtime: runtime_report(self),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    #[serde(deserialize_with = "null_as_nan")]
    pub mean: f64,
    #[serde(deserialize_with = "null_as_nan")]
    pub sd: f64,
    pub n: usize,
    pub failures: Vec<RepFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub sigma_beta: f64,
    pub sigma_xi_mult: f64,
    pub methods: Vec<MethodSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub n_biomarkers: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub cells: Vec<CellSummary>,
    pub runtime: RuntimeReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRuntime {
    pub method: Method,
    pub mean_seconds: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeReport {
    pub hardware: String,
    pub methods: Vec<MethodRuntime>,
}

pub fn hardware_description() -> String {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    format!(
        "{}-{}, {} hardware thread(s)",
        std::env::consts::ARCH,
        std::env::consts::OS,
        threads
    )
}

/// Mean wall-clock seconds per method over every recorded run.
pub fn runtime_report(result: &ExperimentResult) -> RuntimeReport {
    let mut methods: Vec<MethodRuntime> = Vec::new();
    for cell in &result.cells {
        for mc in &cell.methods {
            let total: f64 = mc.seconds.iter().sum();
            match methods.iter_mut().find(|r| r.method == mc.method) {
                Some(r) => {
                    r.mean_seconds += total;
                    r.runs += mc.seconds.len();
                }
                None => methods.push(MethodRuntime {
                    method: mc.method,
                    mean_seconds: total,
                    runs: mc.seconds.len(),
                }),
            }
        }
    }
    for r in &mut methods {
        if r.runs > 0 {
            r.mean_seconds /= r.runs as f64;
        }
    }
    RuntimeReport {
        hardware: hardware_description(),
        methods,
    }
}

/// Event-by-position counts over bootstrap central orderings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionalVariance {
    pub biomarkers: Vec<String>,
    /// `counts[e][p]`: resamples placing event `e` at position `p`.
    pub counts: Vec<Vec<usize>>,
    pub resamples: usize,
}

impl PositionalVariance {
    pub fn row_sums(&self) -> Vec<usize> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn column_sums(&self) -> Vec<usize> {
        let n = self.counts.len();
        (0..n).map(|p| self.counts.iter().map(|r| r[p]).sum()).collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "biomarker")?;
        for p in 1..=self.counts.len() {
            write!(out, ",pos{p}")?;
        }
        writeln!(out)?;
        for (name, row) in self.biomarkers.iter().zip(&self.counts) {
            write!(out, "{name}")?;
            for c in row {
                write!(out, ",{c}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapOptions {
    pub resamples: usize,
    pub seed: u64,
    /// Resample within each diagnostic class, preserving class counts.
    pub stratified: bool,
    pub debm: DebmOptions,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        Self {
            resamples: 100,
            seed: seed::DEFAULT_SEED,
            stratified: true,
            debm: DebmOptions::default(),
        }
    }
}

const MAX_REDRAWS: usize = 10;

fn class_indices(dataset: &BiomarkerDataset) -> [Vec<usize>; 3] {
    let mut out = [Vec::new(), Vec::new(), Vec::new()];
    for (j, l) in dataset.labels().iter().enumerate() {
        let k = match l {
            DiagnosticLabel::CN => 0,
            DiagnosticLabel::MCI => 1,
            DiagnosticLabel::AD => 2,
        };
        out[k].push(j);
    }
    out
}

fn resample_rows(dataset: &BiomarkerDataset, options: &BootstrapOptions, b: usize) -> Result<Vec<usize>> {
    let mut rng = seed::rng(options.seed, &[b as u64]);
    let m = dataset.n_subjects();
    if options.stratified {
        let mut rows = Vec::with_capacity(m);
        for class in class_indices(dataset) {
            for _ in 0..class.len() {
                rows.push(class[rng.random_range(0..class.len())]);
            }
        }
        return Ok(rows);
    }
    for _ in 0..=MAX_REDRAWS {
        let rows: Vec<usize> = (0..m).map(|_| rng.random_range(0..m)).collect();
        let count = |l| rows.iter().filter(|&&j| dataset.labels()[j] == l).count();
        if count(DiagnosticLabel::CN) >= 2 && count(DiagnosticLabel::AD) >= 2 {
            return Ok(rows);
        }
    }
    Err(Error::Fit(format!(
        "bootstrap resample {b} lacks 2 CN and 2 AD after {MAX_REDRAWS} redraws"
    )))
}

/// Refit the DEBM central ordering on bootstrap resamples and count where
/// each event lands.
pub fn bootstrap_positional_variance(
    dataset: &BiomarkerDataset,
    options: &BootstrapOptions,
) -> Result<PositionalVariance> {
    if options.resamples == 0 {
        return Err(Error::config("need at least one bootstrap resample"));
    }
    dataset.require_fittable()?;
    let orderings: Vec<EventOrdering> = (0..options.resamples)
        .into_par_iter()
        .map(|b| {
            let rows = resample_rows(dataset, options, b)?;
            let sample = dataset.select_rows(&rows);
            Ok(models::debm_fit(&sample, &options.debm)?.central)
        })
        .collect::<Result<_>>()?;
    let n = dataset.n_biomarkers();
    let mut counts = vec![vec![0usize; n]; n];
    for o in &orderings {
        for (p, &e) in o.as_slice().iter().enumerate() {
            counts[e][p] += 1;
        }
    }
    Ok(PositionalVariance {
        biomarkers: dataset.biomarker_names().to_vec(),
        counts,
        resamples: options.resamples,
    })
}

/// Area under the ROC curve via the Mann-Whitney statistic with midranks.
/// `positive` scores are expected to be larger.
pub fn mann_whitney_auc(negative: &[f64], positive: &[f64]) -> Result<f64> {
    if negative.is_empty() || positive.is_empty() {
        return Err(Error::precondition("AUC needs at least one score per class"));
    }
    let mut all: Vec<(f64, bool)> = negative
        .iter()
        .map(|&s| (s, false))
        .chain(positive.iter().map(|&s| (s, true)))
        .collect();
    if all.iter().any(|(s, _)| s.is_nan()) {
        return Err(Error::precondition("NaN score"));
    }
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        // ranks i+1..=j+1 share their average
        let mid = (i + j + 2) as f64 / 2.0;
        rank_sum_pos += mid * all[i..=j].iter().filter(|(_, p)| *p).count() as f64;
        i = j + 1;
    }
    let (np, nn) = (positive.len() as f64, negative.len() as f64);
    Ok((rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn))
}

/// Stratified fold assignment: each class is shuffled with its own stream
/// and dealt round-robin.
pub fn stratified_folds(dataset: &BiomarkerDataset, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::config(format!("need at least 2 folds, got {k}")));
    }
    let classes = class_indices(dataset);
    for (label, idx) in [("CN", &classes[0]), ("AD", &classes[2])] {
        // every held-out fold needs one of each; every training split two
        let largest_fold = idx.len().div_ceil(k);
        if idx.len() < k || idx.len() - largest_fold < 2 {
            return Err(Error::precondition(format!(
                "{} {label} subjects cannot fill {k} stratified folds",
                idx.len()
            )));
        }
    }
    let mut fold = vec![0usize; dataset.n_subjects()];
    for (c, idx) in classes.iter().enumerate() {
        let mut idx = idx.clone();
        idx.shuffle(&mut seed::rng(seed, &[c as u64]));
        for (r, &j) in idx.iter().enumerate() {
            fold[j] = r % k;
        }
    }
    Ok(fold)
}

/// Cross-validated staging AUC for CN versus AD.
///
/// Each fold fits mixtures and the ordering on the training rows (MCI
/// included), stages the held-out CN and AD subjects, and scores the hard
/// stage with AD as the positive class.
pub fn staging_auc_cv(
    dataset: &BiomarkerDataset,
    method: Method,
    k: usize,
    seed: u64,
    options: &MethodOptions,
) -> Result<Vec<f64>> {
    let fold = stratified_folds(dataset, k, seed)?;
    (0..k)
        .into_par_iter()
        .map(|f| {
            let train: Vec<usize> = (0..fold.len()).filter(|&j| fold[j] != f).collect();
            let test: Vec<usize> = (0..fold.len())
                .filter(|&j| fold[j] == f && dataset.labels()[j] != DiagnosticLabel::MCI)
                .collect();
            let train_ds = dataset.select_rows(&train);
            let fit = run_method(&train_ds, method, seed::derive(seed, &[100, f as u64]), options)?;
            let test_ds = dataset.select_rows(&test);
            let matrices = EventLikelihoodMatrices::from_mixtures(&test_ds, &fit.mixtures)?;
            let stages = models::stage_all(&matrices, &fit.ordering)?;
            let (mut neg, mut pos) = (Vec::new(), Vec::new());
            for (s, l) in stages.iter().zip(test_ds.labels()) {
                if *l == DiagnosticLabel::AD {
                    pos.push(*s as f64);
                } else {
                    neg.push(*s as f64);
                }
            }
            mann_whitney_auc(&neg, &pos)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auc_examples() {
        assert_eq!(mann_whitney_auc(&[0.0, 1.0], &[5.0, 6.0]).unwrap(), 1.0);
        assert_eq!(mann_whitney_auc(&[3.0; 4], &[3.0; 5]).unwrap(), 0.5);
        assert_eq!(mann_whitney_auc(&[5.0, 6.0], &[0.0, 1.0]).unwrap(), 0.0);
        // one tie between classes counts half: pairs (1,2)>, (1,1)=, (0,2)>, (0,1)>
        assert_eq!(mann_whitney_auc(&[0.0, 1.0], &[1.0, 2.0]).unwrap(), 0.875);
        assert!(mann_whitney_auc(&[], &[1.0]).is_err());
    }

    #[test]
    fn auc_negation_complements() {
        let neg = [0.0, 2.0, 2.0, 3.0, 5.0];
        let pos = [2.0, 4.0, 5.0, 5.0];
        let a = mann_whitney_auc(&neg, &pos).unwrap();
        let flip = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<_>>();
        let b = mann_whitney_auc(&flip(&neg), &flip(&pos)).unwrap();
        assert!((a + b - 1.0).abs() < 1e-15);
    }

    #[test]
    fn method_names_parse() {
        for m in Method::ALL {
            assert_eq!(m.cli_name().parse::<Method>().unwrap(), m);
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("huang".parse::<Method>().is_err());
    }

    #[test]
    fn runtime_report_of_nothing_is_empty() {
        let r = ExperimentResult {
            n_biomarkers: 3,
            repetitions: 1,
            seed: 0,
            cells: vec![],
        };
        assert!(runtime_report(&r).methods.is_empty());
    }

    #[test]
    fn folds_are_stratified() {
        let cfg = sim::default_config(3, (20, 5, 20), 1.0, 0.0, 1).unwrap();
        let ds = sim::simulate(&cfg).unwrap().dataset;
        let fold = stratified_folds(&ds, 10, 4).unwrap();
        for f in 0..10 {
            let in_fold = |l| (0..45).filter(|&j| fold[j] == f && ds.labels()[j] == l).count();
            assert_eq!(in_fold(DiagnosticLabel::CN), 2);
            assert_eq!(in_fold(DiagnosticLabel::AD), 2);
        }
        assert!(stratified_folds(&ds, 1, 0).is_err());
        let small = ds.select_rows(&[0, 1, 2, 3, 40, 41, 42, 43]);
        assert!(stratified_folds(&small, 10, 0).is_err());
    }
}
