//! Per-biomarker normal/abnormal density estimation.
//!
//! The robust estimator works in three steps:
//!
//! 1. [`initial_fit`]: one Gaussian per class from CN and AD values, then
//!    drop values a class-size-weighted Bayes classifier gets wrong and refit.
//! 2. [`confidence_bounds`]: 95% intervals on the surviving fits.
//! 3. [`refine_gmm`]: a two-component mixture over every subject (MCI and
//!    the dropped values included), with means and standard deviations kept
//!    inside those intervals.
//!
//! The `plain-gmm` path skips step 1's removal and uses data-range boxes.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::data::{BiomarkerDataset, DiagnosticLabel};
use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Two-sided 95% normal quantile used for the mean interval.
pub const Z_95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub mu: f64,
    pub sigma: f64,
}

impl GaussianParams {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() || !sigma.is_finite() || sigma <= 0.0 {
            return Err(Error::Fit(format!(
                "invalid Gaussian parameters mu={mu}, sigma={sigma}"
            )));
        }
        Ok(Self { mu, sigma })
    }

    /// Sample mean and standard deviation (n - 1 denominator).
    pub fn from_sample(xs: &[f64]) -> Result<Self> {
        if xs.len() < 2 {
            return Err(Error::precondition(format!(
                "need at least 2 values to fit a Gaussian, got {}",
                xs.len()
            )));
        }
        let n = xs.len() as f64;
        let mu = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1.0);
        if !(var > 0.0) {
            return Err(Error::Fit("zero variance in class".into()));
        }
        Self::new(mu, var.sqrt())
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        let z = (x - self.mu) / self.sigma;
        -0.5 * z * z - self.sigma.ln() - LN_SQRT_2PI
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let z = (x - self.mu) / self.sigma;
        (-0.5 * z * z).exp() / (self.sigma * (2.0 * PI).sqrt())
    }
}

/// Box constraints for one Gaussian component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitBounds {
    pub mu_lo: f64,
    pub mu_hi: f64,
    pub sigma_lo: f64,
    pub sigma_hi: f64,
}

impl FitBounds {
    pub fn new(mu_lo: f64, mu_hi: f64, sigma_lo: f64, sigma_hi: f64) -> Result<Self> {
        let ok = [mu_lo, mu_hi, sigma_lo, sigma_hi].iter().all(|v| v.is_finite())
            && mu_lo <= mu_hi
            && sigma_lo > 0.0
            && sigma_lo <= sigma_hi;
        if !ok {
            return Err(Error::Fit(format!(
                "invalid bounds mu [{mu_lo}, {mu_hi}], sigma [{sigma_lo}, {sigma_hi}]"
            )));
        }
        Ok(Self {
            mu_lo,
            mu_hi,
            sigma_lo,
            sigma_hi,
        })
    }

    pub fn project(&self, g: GaussianParams) -> GaussianParams {
        GaussianParams {
            mu: g.mu.clamp(self.mu_lo, self.mu_hi),
            sigma: g.sigma.clamp(self.sigma_lo, self.sigma_hi),
        }
    }

    pub fn contains(&self, g: &GaussianParams) -> bool {
        (self.mu_lo..=self.mu_hi).contains(&g.mu)
            && (self.sigma_lo..=self.sigma_hi).contains(&g.sigma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiomarkerMixture {
    pub normal: GaussianParams,
    pub abnormal: GaussianParams,
    /// Fraction of abnormal measurements; the prior in [`posterior`].
    pub theta: f64,
}

impl BiomarkerMixture {
    pub fn new(normal: GaussianParams, abnormal: GaussianParams, theta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::Fit(format!("theta {theta} outside [0, 1]")));
        }
        GaussianParams::new(normal.mu, normal.sigma)?;
        GaussianParams::new(abnormal.mu, abnormal.sigma)?;
        Ok(Self {
            normal,
            abnormal,
            theta,
        })
    }

    /// Components exchanged and theta mirrored.
    pub fn swapped(&self) -> Self {
        Self {
            normal: self.abnormal,
            abnormal: self.normal,
            theta: 1.0 - self.theta,
        }
    }

    /// log(theta f_ab(x) + (1 - theta) f_norm(x)).
    pub fn ln_density(&self, x: f64) -> f64 {
        let a = ln_weight(self.theta) + self.abnormal.ln_pdf(x);
        let b = ln_weight(1.0 - self.theta) + self.normal.ln_pdf(x);
        log_add_exp(a, b)
    }
}

fn ln_weight(w: f64) -> f64 {
    if w <= 0.0 {
        f64::NEG_INFINITY
    } else {
        w.ln()
    }
}

pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Posterior probability that `x` comes from the abnormal component, with
/// theta as the prior. Evaluated in log space so it never underflows.
pub fn posterior(mixture: &BiomarkerMixture, x: f64) -> f64 {
    let theta = mixture.theta;
    if theta <= 0.0 {
        return 0.0;
    }
    if theta >= 1.0 {
        return 1.0;
    }
    let z = theta.ln() + mixture.abnormal.ln_pdf(x)
        - (1.0 - theta).ln()
        - mixture.normal.ln_pdf(x);
    logistic(z)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialFit {
    pub normal: GaussianParams,
    pub abnormal: GaussianParams,
    /// Indices into the CN input that were dropped.
    pub removed_normal: Vec<usize>,
    /// Indices into the AD input that were dropped.
    pub removed_abnormal: Vec<usize>,
    /// Number of values each returned Gaussian was fitted on.
    pub n_normal: usize,
    pub n_abnormal: usize,
}

/// Fit class Gaussians on CN and AD values, drop the values a Bayes
/// classifier with class-size priors misassigns, and refit.
///
/// `passes` repeats the drop/refit step; one pass is the standard setting.
/// A class keeps its previous fit if the removal would leave it with fewer
/// than two values or zero spread.
pub fn initial_fit(cn: &[f64], ad: &[f64]) -> Result<InitialFit> {
    initial_fit_with_passes(cn, ad, 1)
}

pub fn initial_fit_with_passes(cn: &[f64], ad: &[f64], passes: usize) -> Result<InitialFit> {
    let class_fit = |xs: &[f64], label: &str| {
        GaussianParams::from_sample(xs).map_err(|e| match e {
            Error::Fit(_) => Error::Fit(format!("zero variance in {label} values")),
            other => other,
        })
    };
    let mut normal = class_fit(cn, "CN")?;
    let mut abnormal = class_fit(ad, "AD")?;
    let total = (cn.len() + ad.len()) as f64;
    let ln_prior_n = (cn.len() as f64 / total).ln();
    let ln_prior_a = (ad.len() as f64 / total).ln();

    let mut keep_n: Vec<usize> = (0..cn.len()).collect();
    let mut keep_a: Vec<usize> = (0..ad.len()).collect();

    for _ in 0..passes {
        let score = |x: f64| {
            (
                ln_prior_n + normal.ln_pdf(x),
                ln_prior_a + abnormal.ln_pdf(x),
            )
        };
        let next_n: Vec<usize> = (0..cn.len())
            .filter(|&k| {
                let (sn, sa) = score(cn[k]);
                sa <= sn
            })
            .collect();
        let next_a: Vec<usize> = (0..ad.len())
            .filter(|&k| {
                let (sn, sa) = score(ad[k]);
                sn <= sa
            })
            .collect();
        let refit = |idx: &[usize], xs: &[f64]| -> Option<GaussianParams> {
            let vals: Vec<f64> = idx.iter().map(|&k| xs[k]).collect();
            GaussianParams::from_sample(&vals).ok()
        };
        let mut changed = false;
        if next_n != keep_n {
            if let Some(g) = refit(&next_n, cn) {
                normal = g;
                keep_n = next_n;
                changed = true;
            }
        }
        if next_a != keep_a {
            if let Some(g) = refit(&next_a, ad) {
                abnormal = g;
                keep_a = next_a;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let removed = |keep: &[usize], len: usize| -> Vec<usize> {
        (0..len).filter(|k| keep.binary_search(k).is_err()).collect()
    };
    Ok(InitialFit {
        normal,
        abnormal,
        removed_normal: removed(&keep_n, cn.len()),
        removed_abnormal: removed(&keep_a, ad.len()),
        n_normal: keep_n.len(),
        n_abnormal: keep_a.len(),
    })
}

/// 95% intervals for a Gaussian fitted on `n` values: normal-theory for the
/// mean, chi-square for the standard deviation.
pub fn confidence_bounds(params: GaussianParams, n: usize) -> Result<FitBounds> {
    if n < 2 {
        return Err(Error::precondition(format!(
            "confidence bounds need n >= 2, got {n}"
        )));
    }
    let nf = n as f64;
    let half = Z_95 * params.sigma / nf.sqrt();
    let chi = ChiSquared::new(nf - 1.0).map_err(|e| Error::Fit(e.to_string()))?;
    let upper_q = chi.inverse_cdf(0.975);
    let lower_q = chi.inverse_cdf(0.025);
    FitBounds::new(
        params.mu - half,
        params.mu + half,
        params.sigma * ((nf - 1.0) / upper_q).sqrt(),
        params.sigma * ((nf - 1.0) / lower_q).sqrt(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmOptions {
    /// Stop when the objective changes by less than this between iterations.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iterations: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineOutcome {
    pub mixture: BiomarkerMixture,
    /// Objective after initialisation and after every iteration.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
}

impl RefineOutcome {
    pub fn objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace is never empty")
    }

    /// True when no iteration lowered the objective by more than a
    /// floating-point tolerance.
    pub fn is_monotone(&self) -> bool {
        self.objective_trace
            .windows(2)
            .all(|w| w[1] >= w[0] - 1e-9 * (1.0 + w[0].abs()))
    }
}

/// Sum over values of the log mixture density.
pub fn mixture_objective(mixture: &BiomarkerMixture, values: &[f64]) -> f64 {
    values.iter().map(|&x| mixture.ln_density(x)).sum()
}

/// Box-constrained EM for a two-component 1-D mixture.
///
/// Each M-step maximises the expected complete-data log-likelihood inside
/// the boxes: the mean is the clamped weighted average, the standard
/// deviation the clamped weighted spread around that mean. Both are exact
/// constrained maximisers, so the objective never decreases.
pub fn refine_gmm(
    values: &[f64],
    init_normal: GaussianParams,
    init_abnormal: GaussianParams,
    bounds_normal: &FitBounds,
    bounds_abnormal: &FitBounds,
    theta_init: f64,
    options: &EmOptions,
) -> Result<RefineOutcome> {
    if values.len() < 4 {
        return Err(Error::precondition(format!(
            "mixture refinement needs >= 4 values, got {}",
            values.len()
        )));
    }
    let mut mix = BiomarkerMixture::new(
        bounds_normal.project(init_normal),
        bounds_abnormal.project(init_abnormal),
        theta_init.clamp(0.0, 1.0),
    )?;
    let mut objective = mixture_objective(&mix, values);
    if !objective.is_finite() {
        return Err(Error::Fit(
            "mixture objective is not finite at initialisation".into(),
        ));
    }
    let mut trace = vec![objective];
    let mut converged = false;
    let mut resp = vec![0.0; values.len()];

    for _ in 0..options.max_iterations {
        for (r, &x) in resp.iter_mut().zip(values) {
            *r = posterior(&mix, x);
        }
        let w_ab: f64 = resp.iter().sum();
        let w_no = values.len() as f64 - w_ab;
        let theta = (w_ab / values.len() as f64).clamp(0.0, 1.0);

        let m_step = |weights: &mut dyn Iterator<Item = (f64, f64)>,
                      total: f64,
                      prev: GaussianParams,
                      bounds: &FitBounds|
         -> GaussianParams {
            if !(total > 0.0) {
                return prev;
            }
            let pairs: Vec<(f64, f64)> = weights.collect();
            let mean = pairs.iter().map(|(w, x)| w * x).sum::<f64>() / total;
            let mu = mean.clamp(bounds.mu_lo, bounds.mu_hi);
            let var = pairs.iter().map(|(w, x)| w * (x - mu).powi(2)).sum::<f64>() / total;
            let sigma = var.sqrt().clamp(bounds.sigma_lo, bounds.sigma_hi);
            GaussianParams { mu, sigma }
        };
        let abnormal = m_step(
            &mut resp.iter().zip(values).map(|(&r, &x)| (r, x)),
            w_ab,
            mix.abnormal,
            bounds_abnormal,
        );
        let normal = m_step(
            &mut resp.iter().zip(values).map(|(&r, &x)| (1.0 - r, x)),
            w_no,
            mix.normal,
            bounds_normal,
        );
        let next = BiomarkerMixture {
            normal,
            abnormal,
            theta,
        };
        let next_objective = mixture_objective(&next, values);
        if !next_objective.is_finite() {
            break;
        }
        mix = next;
        trace.push(next_objective);
        let delta = (next_objective - objective).abs();
        objective = next_objective;
        if delta < options.tolerance {
            converged = true;
            break;
        }
    }

    Ok(RefineOutcome {
        mixture: mix,
        objective_trace: trace,
        converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FitMethod {
    /// Misclassification removal, confidence-interval boxes, bounded EM.
    RobustBounded,
    /// Labelled class fits refined by EM over data-range boxes.
    PlainGmm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiomarkerFit {
    pub name: String,
    pub mixture: BiomarkerMixture,
    pub refine: RefineOutcome,
    pub bounds_normal: FitBounds,
    pub bounds_abnormal: FitBounds,
}

/// Fit one biomarker column.
pub fn fit_biomarker(
    dataset: &BiomarkerDataset,
    biomarker: usize,
    method: FitMethod,
    options: &EmOptions,
) -> Result<BiomarkerFit> {
    let name = &dataset.biomarker_names()[biomarker];
    fit_column(dataset, biomarker, method, options).map_err(|e| e.for_biomarker(name))
}

fn fit_column(
    dataset: &BiomarkerDataset,
    biomarker: usize,
    method: FitMethod,
    options: &EmOptions,
) -> Result<BiomarkerFit> {
    let cn = dataset.column_for(biomarker, DiagnosticLabel::CN);
    let ad = dataset.column_for(biomarker, DiagnosticLabel::AD);
    let all = dataset.column(biomarker);
    let theta_init = ad.len() as f64 / (cn.len() + ad.len()) as f64;

    let (init_n, init_a, bounds_n, bounds_a) = match method {
        FitMethod::RobustBounded => {
            let init = initial_fit(&cn, &ad)?;
            let bn = confidence_bounds(init.normal, init.n_normal)?;
            let ba = confidence_bounds(init.abnormal, init.n_abnormal)?;
            (init.normal, init.abnormal, bn, ba)
        }
        FitMethod::PlainGmm => {
            let gn = GaussianParams::from_sample(&cn)
                .map_err(|_| Error::Fit("zero variance in CN values".into()))?;
            let ga = GaussianParams::from_sample(&ad)
                .map_err(|_| Error::Fit("zero variance in AD values".into()))?;
            let lo = all.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = all.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let range = hi - lo;
            let b = FitBounds::new(lo, hi, 1e-6 * range, range)?;
            (gn, ga, b, b)
        }
    };
    let refine = refine_gmm(
        &all, init_n, init_a, &bounds_n, &bounds_a, theta_init, options,
    )?;
    Ok(BiomarkerFit {
        name: dataset.biomarker_names()[biomarker].clone(),
        mixture: refine.mixture,
        refine,
        bounds_normal: bounds_n,
        bounds_abnormal: bounds_a,
    })
}

/// Fit every biomarker with full diagnostics.
pub fn fit_all_biomarkers_detailed(
    dataset: &BiomarkerDataset,
    method: FitMethod,
    options: &EmOptions,
) -> Result<Vec<BiomarkerFit>> {
    dataset.require_fittable()?;
    (0..dataset.n_biomarkers())
        .map(|i| fit_biomarker(dataset, i, method, options))
        .collect()
}

pub fn fit_all_biomarkers(
    dataset: &BiomarkerDataset,
    method: FitMethod,
) -> Result<Vec<BiomarkerMixture>> {
    Ok(
        fit_all_biomarkers_detailed(dataset, method, &EmOptions::default())?
            .into_iter()
            .map(|f| f.mixture)
            .collect(),
    )
}

/// Serialised form of a fitted biomarker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedMixture {
    pub name: String,
    pub normal: GaussianParams,
    pub abnormal: GaussianParams,
    pub theta: f64,
}

impl NamedMixture {
    pub fn new(name: impl Into<String>, mixture: &BiomarkerMixture) -> Self {
        Self {
            name: name.into(),
            normal: mixture.normal,
            abnormal: mixture.abnormal,
            theta: mixture.theta,
        }
    }

    pub fn mixture(&self) -> Result<BiomarkerMixture> {
        BiomarkerMixture::new(self.normal, self.abnormal, self.theta)
    }
}

pub fn mixtures_to_json(names: &[String], mixtures: &[BiomarkerMixture]) -> Result<String> {
    let doc: Vec<NamedMixture> = names
        .iter()
        .zip(mixtures)
        .map(|(n, m)| NamedMixture::new(n.clone(), m))
        .collect();
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn mixtures_from_json(text: &str) -> Result<Vec<NamedMixture>> {
    let doc: Vec<NamedMixture> = serde_json::from_str(text)?;
    for m in &doc {
        m.mixture().map_err(|e| e.for_biomarker(&m.name))?;
    }
    Ok(doc)
}
