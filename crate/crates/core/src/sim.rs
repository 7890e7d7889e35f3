//! Synthetic cross-sectional biomarker cascades.
//!
//! Each subject has a latent disease state `psi` in (0, 1). Biomarker `i`
//! follows a sigmoid in `psi` centred on an onset state `xi`, offset by a
//! healthy baseline `beta`:
//!
//! ```text
//! x = 1 / (1 + exp(-rho * (psi - xi))) + beta
//! ```
//!
//! `xi` and `beta` are drawn per subject and biomarker, so `sigma_xi`
//! perturbs the event order and `sigma_beta_rel` scales measurement noise.
//! Labels come from `psi` blocks: lowest values are CN, highest AD.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{BiomarkerDataset, DiagnosticLabel};
use crate::error::{Error, Result};
use crate::ordering::EventOrdering;
use crate::seed;

/// Subject counts matching the reference cohort: 162 CN, 210 MCI, 137 AD.
pub const DEFAULT_COUNTS: (usize, usize, usize) = (162, 210, 137);

/// Baseline standard deviation of `beta` at `sigma_beta_rel = 1`, relative
/// to the unit sigmoid range.
pub const DEFAULT_BETA_SD: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_biomarkers: usize,
    /// (CN, MCI, AD)
    pub counts: (usize, usize, usize),
    pub rho: f64,
    pub xi_means: Vec<f64>,
    pub sigma_xi: f64,
    pub sigma_beta_rel: f64,
    pub beta_mean: Vec<f64>,
    pub beta_base_sd: Vec<f64>,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let n = self.n_biomarkers;
        if n < 2 {
            return Err(Error::config(format!("need at least 2 biomarkers, got {n}")));
        }
        if self.xi_means.len() != n || self.beta_mean.len() != n || self.beta_base_sd.len() != n {
            return Err(Error::config("per-biomarker vectors must have length n_biomarkers"));
        }
        if self.xi_means.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::config("xi_means must be strictly increasing"));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::config(format!("rho must be positive, got {}", self.rho)));
        }
        if !(self.sigma_xi >= 0.0 && self.sigma_xi.is_finite())
            || !(self.sigma_beta_rel >= 0.0 && self.sigma_beta_rel.is_finite())
        {
            return Err(Error::config("noise scales must be finite and non-negative"));
        }
        if self.beta_base_sd.iter().any(|&s| !(s > 0.0 && s.is_finite()))
            || self.beta_mean.iter().any(|m| !m.is_finite())
            || self.xi_means.iter().any(|m| !m.is_finite())
        {
            return Err(Error::config("beta_base_sd must be positive; means finite"));
        }
        let (cn, mci, ad) = self.counts;
        if cn + mci + ad == 0 {
            return Err(Error::config("at least one subject is required"));
        }
        Ok(())
    }

    pub fn n_subjects(&self) -> usize {
        self.counts.0 + self.counts.1 + self.counts.2
    }

    /// Spacing between adjacent onset means for the default layout.
    pub fn xi_spacing(n_biomarkers: usize) -> f64 {
        1.0 / (n_biomarkers as f64 + 1.0)
    }

    pub fn biomarker_names(&self) -> Vec<String> {
        let width = self.n_biomarkers.to_string().len().max(2);
        (1..=self.n_biomarkers)
            .map(|i| format!("BM{i:0width$}"))
            .collect()
    }
}

/// Equi-spaced onsets at `i / (N + 1)`, `sigma_xi` in multiples of
/// `spacing / N`, `rho = 3 (N + 1)`, zero-mean `beta`.
pub fn default_config(
    n_biomarkers: usize,
    counts: (usize, usize, usize),
    sigma_beta_rel: f64,
    sigma_xi_multiplier: f64,
    seed: u64,
) -> Result<SimConfig> {
    if n_biomarkers < 2 {
        return Err(Error::config(format!(
            "need at least 2 biomarkers, got {n_biomarkers}"
        )));
    }
    if !(sigma_xi_multiplier >= 0.0) {
        return Err(Error::config("sigma_xi multiplier must be non-negative"));
    }
    let n = n_biomarkers as f64;
    let spacing = SimConfig::xi_spacing(n_biomarkers);
    let config = SimConfig {
        n_biomarkers,
        counts,
        rho: 3.0 * (n + 1.0),
        xi_means: (1..=n_biomarkers).map(|i| i as f64 * spacing).collect(),
        sigma_xi: sigma_xi_multiplier * spacing / n,
        sigma_beta_rel,
        beta_mean: vec![0.0; n_biomarkers],
        beta_base_sd: vec![DEFAULT_BETA_SD; n_biomarkers],
        seed,
    };
    config.validate()?;
    Ok(config)
}

/// Sigmoid biomarker value at disease state `psi`.
pub fn biomarker_value(psi: f64, rho: f64, xi: f64, beta: f64) -> f64 {
    1.0 / (1.0 + (-rho * (psi - xi)).exp()) + beta
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub dataset: BiomarkerDataset,
    pub ground_truth: EventOrdering,
    pub psi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthSidecar {
    pub ground_truth: Vec<String>,
    pub config: SimConfig,
}

impl SimResult {
    pub fn sidecar(&self, config: &SimConfig) -> TruthSidecar {
        TruthSidecar {
            ground_truth: self.ground_truth.to_names(self.dataset.biomarker_names()),
            config: config.clone(),
        }
    }
}

/// Draw a dataset. Subject `j` uses the random stream keyed by
/// `(seed, j)`, so output does not depend on generation order.
pub fn simulate(config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    let m = config.n_subjects();
    let n = config.n_biomarkers;
    let mut psi = Vec::with_capacity(m);
    let mut rows = Vec::with_capacity(m);
    for j in 0..m {
        let mut rng = seed::rng(config.seed, &[j as u64]);
        let p: f64 = rng.random();
        let row: Vec<f64> = (0..n)
            .map(|i| {
                let z_xi: f64 = rng.sample(StandardNormal);
                let z_beta: f64 = rng.sample(StandardNormal);
                let xi = config.xi_means[i] + config.sigma_xi * z_xi;
                let beta = config.beta_mean[i]
                    + config.sigma_beta_rel * config.beta_base_sd[i] * z_beta;
                biomarker_value(p, config.rho, xi, beta)
            })
            .collect();
        psi.push(p);
        rows.push(row);
    }

    let mut rank: Vec<usize> = (0..m).collect();
    rank.sort_by(|&a, &b| psi[a].total_cmp(&psi[b]).then(a.cmp(&b)));
    let mut labels = vec![DiagnosticLabel::MCI; m];
    let (cn, mci, _) = config.counts;
    for (r, &j) in rank.iter().enumerate() {
        labels[j] = if r < cn {
            DiagnosticLabel::CN
        } else if r < cn + mci {
            DiagnosticLabel::MCI
        } else {
            DiagnosticLabel::AD
        };
    }

    let width = m.to_string().len().max(4);
    let ids = (1..=m).map(|j| format!("SIM{j:0width$}")).collect();
    let dataset = BiomarkerDataset::new(ids, labels, rows, config.biomarker_names())?;

    let mut truth: Vec<usize> = (0..n).collect();
    truth.sort_by(|&a, &b| config.xi_means[a].total_cmp(&config.xi_means[b]));
    Ok(SimResult {
        dataset,
        ground_truth: EventOrdering::new(truth)?,
        psi,
    })
}
