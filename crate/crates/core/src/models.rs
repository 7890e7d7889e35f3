//! Model pipelines: DEBM, the generative EBM baseline and patient staging.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::BiomarkerDataset;
use crate::error::{Error, Result};
use crate::mixture::{self, BiomarkerMixture, FitMethod, NamedMixture};
use crate::ordering::{
    central_ordering, subject_ordering, ConsensusOptions, Distance, EventOrdering, PosteriorVector,
    WeightReading,
};
use crate::seed;

/// Per-subject, per-biomarker event likelihoods `p(x | E)` and `p(x | not E)`.
///
/// Values are held as natural logarithms so that far-tail measurements do
/// not underflow; [`EventLikelihoodMatrices::density_abnormal`] and
/// [`EventLikelihoodMatrices::density_normal`] return the densities.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLikelihoodMatrices {
    n_subjects: usize,
    n_biomarkers: usize,
    ln_abnormal: Vec<f64>,
    ln_normal: Vec<f64>,
}

impl EventLikelihoodMatrices {
    /// From density values (each finite and non-negative), row-major M x N.
    pub fn from_densities(abnormal: &[Vec<f64>], normal: &[Vec<f64>]) -> Result<Self> {
        let to_ln = |rows: &[Vec<f64>]| -> Result<Vec<Vec<f64>>> {
            rows.iter()
                .map(|r| {
                    r.iter()
                        .map(|&v| {
                            if v.is_finite() && v >= 0.0 {
                                Ok(v.ln())
                            } else {
                                Err(Error::precondition(format!("invalid likelihood {v}")))
                            }
                        })
                        .collect()
                })
                .collect()
        };
        Self::from_log(&to_ln(abnormal)?, &to_ln(normal)?)
    }

    pub fn from_log(ln_abnormal: &[Vec<f64>], ln_normal: &[Vec<f64>]) -> Result<Self> {
        let m = ln_abnormal.len();
        if ln_normal.len() != m {
            return Err(Error::LengthMismatch {
                expected: m,
                got: ln_normal.len(),
            });
        }
        let n = ln_abnormal.first().map_or(0, Vec::len);
        let mut a = Vec::with_capacity(m * n);
        let mut b = Vec::with_capacity(m * n);
        for (ra, rb) in ln_abnormal.iter().zip(ln_normal) {
            if ra.len() != n || rb.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: ra.len().min(rb.len()),
                });
            }
            if ra.iter().chain(rb).any(|v| v.is_nan() || *v == f64::INFINITY) {
                return Err(Error::precondition("log-likelihood is NaN or +inf"));
            }
            a.extend_from_slice(ra);
            b.extend_from_slice(rb);
        }
        Ok(Self {
            n_subjects: m,
            n_biomarkers: n,
            ln_abnormal: a,
            ln_normal: b,
        })
    }

    /// Evaluate fitted component densities at every measurement.
    pub fn from_mixtures(dataset: &BiomarkerDataset, mixtures: &[BiomarkerMixture]) -> Result<Self> {
        let n = dataset.n_biomarkers();
        if mixtures.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: mixtures.len(),
            });
        }
        let m = dataset.n_subjects();
        let mut a = Vec::with_capacity(m * n);
        let mut b = Vec::with_capacity(m * n);
        for j in 0..m {
            for (x, mix) in dataset.row(j).iter().zip(mixtures) {
                a.push(mix.abnormal.ln_pdf(*x));
                b.push(mix.normal.ln_pdf(*x));
            }
        }
        Ok(Self {
            n_subjects: m,
            n_biomarkers: n,
            ln_abnormal: a,
            ln_normal: b,
        })
    }

    pub fn n_subjects(&self) -> usize {
        self.n_subjects
    }

    pub fn n_biomarkers(&self) -> usize {
        self.n_biomarkers
    }

    pub fn ln_abnormal_row(&self, j: usize) -> &[f64] {
        &self.ln_abnormal[j * self.n_biomarkers..(j + 1) * self.n_biomarkers]
    }

    pub fn ln_normal_row(&self, j: usize) -> &[f64] {
        &self.ln_normal[j * self.n_biomarkers..(j + 1) * self.n_biomarkers]
    }

    pub fn density_abnormal(&self, j: usize, i: usize) -> f64 {
        self.ln_abnormal[j * self.n_biomarkers + i].exp()
    }

    pub fn density_normal(&self, j: usize, i: usize) -> f64 {
        self.ln_normal[j * self.n_biomarkers + i].exp()
    }
}

/// Evaluate the fitted densities for a dataset.
pub fn likelihood_matrices(
    dataset: &BiomarkerDataset,
    method: FitMethod,
) -> Result<(Vec<BiomarkerMixture>, EventLikelihoodMatrices)> {
    let mixtures = mixture::fit_all_biomarkers(dataset, method)?;
    let matrices = EventLikelihoodMatrices::from_mixtures(dataset, &mixtures)?;
    Ok((mixtures, matrices))
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Log-scores `sum_{i<k} ln p(x|E) + sum_{i>=k} ln p(x|not E)` along
/// `sigma` for k = 0..=N, written into `out`.
fn stage_scores(ln_ab: &[f64], ln_no: &[f64], sigma: &[usize], out: &mut Vec<f64>) {
    out.clear();
    let mut s: f64 = sigma.iter().map(|&e| ln_no[e]).sum();
    out.push(s);
    for &e in sigma {
        s += ln_ab[e] - ln_no[e];
        out.push(s);
    }
}

fn check_sigma(matrices: &EventLikelihoodMatrices, sigma: &EventOrdering) -> Result<()> {
    if sigma.len() != matrices.n_biomarkers {
        return Err(Error::LengthMismatch {
            expected: matrices.n_biomarkers,
            got: sigma.len(),
        });
    }
    Ok(())
}

/// Log-likelihood of the data under `sigma` with a uniform stage prior
/// over the N + 1 positions.
pub fn ebm_log_likelihood(matrices: &EventLikelihoodMatrices, sigma: &EventOrdering) -> Result<f64> {
    check_sigma(matrices, sigma)?;
    let ln_prior = -((matrices.n_biomarkers + 1) as f64).ln();
    let mut scores = Vec::with_capacity(matrices.n_biomarkers + 1);
    let mut total = 0.0;
    for j in 0..matrices.n_subjects {
        stage_scores(
            matrices.ln_abnormal_row(j),
            matrices.ln_normal_row(j),
            sigma.as_slice(),
            &mut scores,
        );
        let row = log_sum_exp(&scores);
        if !row.is_finite() {
            return Err(Error::Likelihood { subject: j });
        }
        total += ln_prior + row;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EbmOptions {
    pub restarts: usize,
    pub seed: u64,
}

impl Default for EbmOptions {
    fn default() -> Self {
        Self {
            restarts: 10,
            seed: seed::DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EbmFit {
    pub ordering: EventOrdering,
    pub log_likelihood: f64,
}

/// Per-subject stage scores kept as `m + ln(sum_k exp(S_k - m))`.
/// Transposing positions `a < b` shifts `S_k` by the same amount for every
/// `k` in `a+1..=b` and leaves the rest alone. The untouched mass comes from
/// prefix and suffix sums and the moved mass is summed directly, so no sum
/// involves cancellation.
struct StageSums<'a> {
    matrices: &'a EventLikelihoodMatrices,
    scores: Vec<f64>,
    exps: Vec<Vec<f64>>,
    max: Vec<f64>,
    prefix: Vec<Vec<f64>>,
    suffix: Vec<Vec<f64>>,
    ln_total: Vec<f64>,
}

impl<'a> StageSums<'a> {
    fn new(matrices: &'a EventLikelihoodMatrices) -> Self {
        let (m, n) = (matrices.n_subjects, matrices.n_biomarkers);
        Self {
            matrices,
            scores: Vec::with_capacity(n + 1),
            exps: vec![vec![0.0; n + 1]; m],
            max: vec![0.0; m],
            prefix: vec![vec![0.0; n + 2]; m],
            suffix: vec![vec![0.0; n + 2]; m],
            ln_total: vec![0.0; m],
        }
    }

    /// Rebuild for `sigma`; returns the log-likelihood without the prior.
    fn reset(&mut self, sigma: &[usize]) -> Result<f64> {
        let mut total = 0.0;
        for j in 0..self.matrices.n_subjects {
            stage_scores(
                self.matrices.ln_abnormal_row(j),
                self.matrices.ln_normal_row(j),
                sigma,
                &mut self.scores,
            );
            let m = self.scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if !m.is_finite() {
                return Err(Error::Likelihood { subject: j });
            }
            self.max[j] = m;
            let (exps, prefix, suffix) = (&mut self.exps[j], &mut self.prefix[j], &mut self.suffix[j]);
            for (e, sc) in exps.iter_mut().zip(&self.scores) {
                *e = (sc - m).exp();
            }
            // prefix[k] = sum of exps[..k]; suffix[k] = sum of exps[k..]
            for k in 0..exps.len() {
                prefix[k + 1] = prefix[k] + exps[k];
            }
            for k in (0..exps.len()).rev() {
                suffix[k] = suffix[k + 1] + exps[k];
            }
            self.ln_total[j] = prefix[exps.len()].ln();
            total += m + self.ln_total[j];
        }
        Ok(total)
    }

    /// Log-likelihood change from transposing positions `a < b`.
    fn delta(&self, sigma: &[usize], a: usize, b: usize) -> f64 {
        let (ea, eb) = (sigma[a], sigma[b]);
        let mut total = 0.0;
        for j in 0..self.matrices.n_subjects {
            let la = self.matrices.ln_abnormal_row(j);
            let ln = self.matrices.ln_normal_row(j);
            let shift = (la[eb] - ln[eb]) - (la[ea] - ln[ea]);
            let d = if shift.is_finite() {
                let moved: f64 = self.exps[j][a + 1..=b].iter().sum();
                let rest = self.prefix[j][a + 1] + self.suffix[j][b + 1];
                mixture::log_add_exp(rest.ln(), moved.ln() + shift) - self.ln_total[j]
            } else {
                let mut t = sigma.to_vec();
                t.swap(a, b);
                let mut sc = Vec::with_capacity(t.len() + 1);
                stage_scores(la, ln, &t, &mut sc);
                log_sum_exp(&sc) - self.max[j] - self.ln_total[j]
            };
            if d.is_nan() {
                return f64::NEG_INFINITY;
            }
            total += d;
        }
        total
    }
}

fn ascend(
    matrices: &EventLikelihoodMatrices,
    start: EventOrdering,
) -> Result<(EventOrdering, f64)> {
    let mut s = start;
    let mut sums = StageSums::new(matrices);
    let mut current = sums.reset(s.as_slice())?;
    let n = s.len();
    loop {
        let mut candidate: Option<(f64, usize, usize)> = None;
        for a in 0..n {
            for b in a + 1..n {
                let d = sums.delta(s.as_slice(), a, b);
                if candidate.is_none_or(|(c, _, _)| d > c) {
                    candidate = Some((d, a, b));
                }
            }
        }
        match candidate {
            Some((d, a, b)) if d > 1e-12 * (1.0 + current.abs()) => {
                s.swap(a, b);
                current = sums.reset(s.as_slice())?;
            }
            _ => {
                let ll = ebm_log_likelihood(matrices, &s)?;
                return Ok((s, ll));
            }
        }
    }
}

/// Multi-start best-improvement transposition ascent on the EBM
/// log-likelihood. Restart `r` starts from a random permutation drawn from
/// the stream keyed by `(seed, r)`; the first best local optimum wins.
pub fn ebm_fit(matrices: &EventLikelihoodMatrices, options: &EbmOptions) -> Result<EbmFit> {
    if options.restarts == 0 {
        return Err(Error::config("EBM search needs at least one restart"));
    }
    let n = matrices.n_biomarkers;
    let mut best: Option<EbmFit> = None;
    for r in 0..options.restarts {
        let mut rng = seed::rng(options.seed, &[r as u64]);
        let mut v: Vec<usize> = (0..n).collect();
        v.shuffle(&mut rng);
        let (ordering, ll) = ascend(matrices, EventOrdering::new(v)?)?;
        if best.as_ref().is_none_or(|b| ll > b.log_likelihood + 1e-12 * (1.0 + b.log_likelihood.abs())) {
            best = Some(EbmFit {
                ordering,
                log_likelihood: ll,
            });
        }
    }
    Ok(best.expect("at least one restart ran"))
}

/// Most likely stage k in 0..=N for one subject, from log-likelihood rows.
/// Ties go to the smallest k.
pub fn stage_from_log_rows(ln_abnormal: &[f64], ln_normal: &[f64], sigma: &EventOrdering) -> Result<usize> {
    if ln_abnormal.len() != sigma.len() || ln_normal.len() != sigma.len() {
        return Err(Error::LengthMismatch {
            expected: sigma.len(),
            got: ln_abnormal.len().min(ln_normal.len()),
        });
    }
    if ln_abnormal.iter().chain(ln_normal).any(|v| v.is_nan()) {
        return Err(Error::precondition("NaN log-likelihood in staging"));
    }
    let mut scores = Vec::with_capacity(sigma.len() + 1);
    stage_scores(ln_abnormal, ln_normal, sigma.as_slice(), &mut scores);
    let mut best = 0;
    for k in 1..scores.len() {
        if scores[k] > scores[best] {
            best = k;
        }
    }
    if !scores[best].is_finite() {
        return Err(Error::precondition("every stage has zero likelihood"));
    }
    Ok(best)
}

/// Stage from density rows.
pub fn stage_subject(like_abnormal: &[f64], like_normal: &[f64], sigma: &EventOrdering) -> Result<usize> {
    let ln = |r: &[f64]| r.iter().map(|v| v.ln()).collect::<Vec<_>>();
    stage_from_log_rows(&ln(like_abnormal), &ln(like_normal), sigma)
}

pub fn stage_all(matrices: &EventLikelihoodMatrices, sigma: &EventOrdering) -> Result<Vec<usize>> {
    check_sigma(matrices, sigma)?;
    (0..matrices.n_subjects)
        .map(|j| stage_from_log_rows(matrices.ln_abnormal_row(j), matrices.ln_normal_row(j), sigma))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DebmDistance {
    Probabilistic,
    Plain,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DebmOptions {
    pub distance: DebmDistance,
    pub reading: WeightReading,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for DebmOptions {
    fn default() -> Self {
        Self {
            distance: DebmDistance::Probabilistic,
            reading: WeightReading::Displaced,
            restarts: 0,
            seed: seed::DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DebmFit {
    pub mixtures: Vec<BiomarkerMixture>,
    /// One posterior vector per subject.
    pub posteriors: Vec<PosteriorVector>,
    pub subject_orderings: Vec<EventOrdering>,
    pub central: EventOrdering,
    pub objective: f64,
}

/// Posterior matrix for a dataset under fitted mixtures.
pub fn posterior_matrix(dataset: &BiomarkerDataset, mixtures: &[BiomarkerMixture]) -> Result<Vec<PosteriorVector>> {
    if mixtures.len() != dataset.n_biomarkers() {
        return Err(Error::LengthMismatch {
            expected: dataset.n_biomarkers(),
            got: mixtures.len(),
        });
    }
    (0..dataset.n_subjects())
        .map(|j| {
            PosteriorVector::new(
                dataset
                    .row(j)
                    .iter()
                    .zip(mixtures)
                    .map(|(&x, m)| mixture::posterior(m, x))
                    .collect(),
            )
        })
        .collect()
}

/// Central ordering from fitted mixtures.
pub fn debm_from_mixtures(
    dataset: &BiomarkerDataset,
    mixtures: Vec<BiomarkerMixture>,
    options: &DebmOptions,
) -> Result<DebmFit> {
    let posteriors = posterior_matrix(dataset, &mixtures)?;
    let subject_orderings: Vec<EventOrdering> = posteriors.iter().map(subject_ordering).collect();
    let subjects: Vec<(EventOrdering, PosteriorVector)> = subject_orderings
        .iter()
        .cloned()
        .zip(posteriors.iter().cloned())
        .collect();
    let distance = match options.distance {
        DebmDistance::Probabilistic => Distance::Probabilistic(options.reading),
        DebmDistance::Plain => Distance::Plain,
    };
    let consensus = central_ordering(
        &subjects,
        &ConsensusOptions {
            distance,
            restarts: options.restarts,
            seed: options.seed,
        },
    )?;
    Ok(DebmFit {
        mixtures,
        posteriors,
        subject_orderings,
        central: consensus.ordering,
        objective: consensus.objective,
    })
}

/// Robust mixture fits, posterior-sorted subject orderings, and their
/// central ordering.
pub fn debm_fit(dataset: &BiomarkerDataset, options: &DebmOptions) -> Result<DebmFit> {
    let mixtures = mixture::fit_all_biomarkers(dataset, FitMethod::RobustBounded)?;
    debm_from_mixtures(dataset, mixtures, options)
}

/// A model ready for staging: fitted densities plus an ordering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub method: String,
    pub biomarkers: Vec<String>,
    pub mixtures: Vec<NamedMixture>,
    /// Central (DEBM) or maximum-likelihood (EBM) ordering, by name.
    pub ordering: Vec<String>,
    pub objective: f64,
}

impl FittedModel {
    pub fn ordering_indices(&self) -> Result<EventOrdering> {
        EventOrdering::from_names(&self.ordering, &self.biomarkers)
    }

    pub fn plain_mixtures(&self) -> Result<Vec<BiomarkerMixture>> {
        self.mixtures.iter().map(NamedMixture::mixture).collect()
    }

    /// Stage every subject of `dataset`, matching columns by name.
    pub fn stage(&self, dataset: &BiomarkerDataset) -> Result<Vec<usize>> {
        let columns = self
            .biomarkers
            .iter()
            .map(|name| {
                dataset
                    .biomarker_index(name)
                    .ok_or_else(|| Error::Schema(format!("dataset lacks biomarker `{name}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let view = dataset.select_columns(&columns)?;
        let matrices = EventLikelihoodMatrices::from_mixtures(&view, &self.plain_mixtures()?)?;
        stage_all(&matrices, &self.ordering_indices()?)
    }
}
