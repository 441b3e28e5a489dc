//! Probability mass functions over a constellation (or its n-fold product).

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on |sum - 1| accepted by [`Pmf::new`].
pub const PMF_SUM_TOL: f64 = 1e-12;

/// A validated probability vector: nonnegative entries summing to 1
/// within [`PMF_SUM_TOL`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Pmf(Vec<f64>);

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidPmf("empty probability vector".into()));
        }
        if let Some(&bad) = probs.iter().find(|&&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidPmf(format!("entry {bad} is not in [0, 1]")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PMF_SUM_TOL {
            return Err(Error::InvalidPmf(format!(
                "entries sum to {sum}, expected 1 within {PMF_SUM_TOL:e}"
            )));
        }
        Ok(Self(probs))
    }

    /// Normalizes an arbitrary nonnegative vector to a PMF.
    pub fn normalized(mut weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(Error::InvalidPmf(format!("weights sum to {sum}")));
        }
        for w in &mut weights {
            *w /= sum;
        }
        Self::new(weights)
    }

    pub fn uniform(m: usize) -> Self {
        Self(vec![1.0 / m as f64; m])
    }

    pub fn point_mass(m: usize, at: usize) -> Self {
        let mut v = vec![0.0; m];
        v[at] = 1.0;
        Self(v)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn support_size(&self) -> usize {
        self.0.iter().filter(|&&x| x > 0.0).count()
    }

    /// True when all mass sits on a single symbol.
    pub fn is_degenerate(&self) -> bool {
        self.support_size() == 1
    }

    /// Input entropy H(p) in nats, with 0 ln 0 = 0.
    pub fn entropy(&self) -> f64 {
        -self
            .0
            .iter()
            .filter(|&&x| x > 0.0)
            .map(|&x| x * x.ln())
            .sum::<f64>()
    }

    /// Average energy w^T p for an aligned energy vector.
    pub fn mean_energy(&self, energies: &[f64]) -> f64 {
        assert_eq!(energies.len(), self.0.len(), "energy vector misaligned");
        self.0.iter().zip(energies).map(|(p, w)| p * w).sum()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Pmf {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Pmf {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Pmf> for Vec<f64> {
    fn from(p: Pmf) -> Vec<f64> {
        p.0
    }
}

/// KL divergence D(d || p) in nats with 0 ln 0 = 0; +inf when d puts mass
/// where p has none.
pub fn kl_pmf(d: &[f64], p: &[f64]) -> f64 {
    assert_eq!(d.len(), p.len(), "PMFs must have the same length");
    let mut acc = 0.0;
    for (&di, &pi) in d.iter().zip(p) {
        if di > 0.0 {
            if pi <= 0.0 {
                return f64::INFINITY;
            }
            acc += di * (di / pi).ln();
        }
    }
    acc
}
