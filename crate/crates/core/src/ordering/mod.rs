//! Event orderings and the distances between them.
//!
//! Orderings are zero-based: `ordering[p]` is the biomarker whose event
//! occupies position `p`, position 0 being the earliest event.

mod consensus;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use consensus::{central_ordering, consensus_objective, Consensus, ConsensusOptions, Distance};

/// A permutation of biomarker indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct EventOrdering(Vec<usize>);

impl EventOrdering {
    pub fn new(events: Vec<usize>) -> Result<Self> {
        let n = events.len();
        let mut seen = vec![false; n];
        for &e in &events {
            if e >= n || seen[e] {
                return Err(Error::precondition(format!(
                    "{events:?} is not a permutation of 0..{n}"
                )));
            }
            seen[e] = true;
        }
        Ok(Self(events))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    /// `positions()[e]` is the position of biomarker `e`.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.0.len()];
        for (p, &e) in self.0.iter().enumerate() {
            pos[e] = p;
        }
        pos
    }

    pub fn swap(&mut self, a: usize, b: usize) {
        self.0.swap(a, b);
    }

    pub fn to_names(&self, names: &[String]) -> Vec<String> {
        self.0.iter().map(|&e| names[e].clone()).collect()
    }

    pub fn from_names(ordered: &[String], names: &[String]) -> Result<Self> {
        if ordered.len() != names.len() {
            return Err(Error::LengthMismatch {
                expected: names.len(),
                got: ordered.len(),
            });
        }
        let events = ordered
            .iter()
            .map(|o| {
                names
                    .iter()
                    .position(|n| n == o)
                    .ok_or_else(|| Error::Schema(format!("unknown biomarker `{o}` in ordering")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(events)
    }
}

impl TryFrom<Vec<usize>> for EventOrdering {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<EventOrdering> for Vec<usize> {
    fn from(o: EventOrdering) -> Self {
        o.0
    }
}

impl std::ops::Index<usize> for EventOrdering {
    type Output = usize;

    fn index(&self, p: usize) -> &usize {
        &self.0[p]
    }
}

/// Per-biomarker abnormality posteriors for one subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorVector(Vec<f64>);

impl PosteriorVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::precondition(format!("posterior {v} outside [0, 1]")));
        }
        Ok(Self(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::Index<usize> for PosteriorVector {
    type Output = f64;

    fn index(&self, e: usize) -> &f64 {
        &self.0[e]
    }
}

/// Biomarkers by descending posterior; ties go to the lower index.
pub fn subject_ordering(posteriors: &PosteriorVector) -> EventOrdering {
    let p = posteriors.as_slice();
    let mut idx: Vec<usize> = (0..p.len()).collect();
    idx.sort_by(|&a, &b| p[b].total_cmp(&p[a]).then(a.cmp(&b)));
    EventOrdering(idx)
}

fn check_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch {
            expected: a,
            got: b,
        });
    }
    Ok(())
}

/// Number of discordant pairs between two orderings.
pub fn kendall_tau(a: &EventOrdering, b: &EventOrdering) -> Result<usize> {
    check_len(a.len(), b.len())?;
    let pos_b = b.positions();
    let seq: Vec<usize> = a.0.iter().map(|&e| pos_b[e]).collect();
    let mut count = 0;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] > seq[j] {
                count += 1;
            }
        }
    }
    Ok(count)
}

/// Kendall's tau divided by N choose 2.
pub fn normalized_kendall_tau(a: &EventOrdering, b: &EventOrdering) -> Result<f64> {
    let n = a.len();
    if n < 2 {
        return Err(Error::precondition(
            "normalised Kendall tau needs at least 2 events",
        ));
    }
    let pairs = (n * (n - 1) / 2) as f64;
    Ok(kendall_tau(a, b)? as f64 / pairs)
}

/// Which posterior weights a displacement in the probabilistic distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum WeightReading {
    /// `V_i = p(sigma0[k]) - p(sigma0[i])`, with `k` the position of
    /// `sigma0[i]` in the working copy of the subject ordering. Terms can be
    /// negative, so the sum is not a distance in general.
    Literal,
    /// `V_i = p(w[i]) - p(sigma0[i])`, weighting by the subject-ordering
    /// event that the move displaces. Every term is non-negative.
    #[default]
    Displaced,
}

/// Check that `sigma_j` lists events by non-increasing posterior.
pub fn check_posterior_sorted(sigma_j: &EventOrdering, posteriors: &PosteriorVector) -> Result<()> {
    check_len(sigma_j.len(), posteriors.len())?;
    for w in sigma_j.0.windows(2) {
        if posteriors[w[0]] < posteriors[w[1]] {
            return Err(Error::precondition(format!(
                "subject ordering places biomarker {} (p={}) before {} (p={})",
                w[0], posteriors[w[0]], w[1], posteriors[w[1]]
            )));
        }
    }
    Ok(())
}

/// Per-position terms `V_i` of the probabilistic Kendall's tau distance,
/// following the sequential move-to-front procedure on a working copy of
/// `sigma_j`.
pub fn prob_kendall_tau_terms(
    sigma0: &EventOrdering,
    sigma_j: &EventOrdering,
    posteriors: &PosteriorVector,
    reading: WeightReading,
) -> Result<Vec<f64>> {
    check_len(sigma0.len(), sigma_j.len())?;
    check_posterior_sorted(sigma_j, posteriors)?;
    Ok(terms_unchecked(sigma0.as_slice(), sigma_j.as_slice(), posteriors.as_slice(), reading))
}

pub(crate) fn terms_unchecked(
    sigma0: &[usize],
    sigma_j: &[usize],
    p: &[f64],
    reading: WeightReading,
) -> Vec<f64> {
    let n = sigma0.len();
    let mut work = sigma_j.to_vec();
    let mut terms = Vec::with_capacity(n.saturating_sub(1));
    for i in 0..n.saturating_sub(1) {
        let target = sigma0[i];
        let k = work[i..]
            .iter()
            .position(|&e| e == target)
            .map(|off| i + off)
            .expect("orderings are permutations of the same set");
        if k > i {
            let v = match reading {
                WeightReading::Literal => p[sigma0[k]] - p[target],
                WeightReading::Displaced => p[work[i]] - p[target],
            };
            terms.push(v);
            let e = work.remove(k);
            work.insert(i, e);
        } else {
            terms.push(0.0);
        }
    }
    terms
}

/// Probabilistic Kendall's tau distance from the central ordering `sigma0`
/// to a subject ordering `sigma_j` sorted by `posteriors`.
pub fn prob_kendall_tau(
    sigma0: &EventOrdering,
    sigma_j: &EventOrdering,
    posteriors: &PosteriorVector,
) -> Result<f64> {
    prob_kendall_tau_with(sigma0, sigma_j, posteriors, WeightReading::Literal)
}

pub fn prob_kendall_tau_with(
    sigma0: &EventOrdering,
    sigma_j: &EventOrdering,
    posteriors: &PosteriorVector,
    reading: WeightReading,
) -> Result<f64> {
    Ok(prob_kendall_tau_terms(sigma0, sigma_j, posteriors, reading)?
        .iter()
        .sum())
}
