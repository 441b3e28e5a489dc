//! Numerical integration settings and Gauss-Hermite rules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    GaussHermite,
    MonteCarlo,
}

/// How integrals over the complex output plane are evaluated.
///
/// Gauss-Hermite uses a `nodes_per_axis`² tensor grid per complex
/// dimension after whitening by the noise standard deviation. Monte Carlo
/// draws `mc_samples` seeded samples and reports a standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub scheme: Scheme,
    pub nodes_per_axis: usize,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            scheme: Scheme::GaussHermite,
            nodes_per_axis: 48,
            mc_samples: 1_000_000,
            seed: 0,
        }
    }
}

impl QuadratureSpec {
    pub fn gauss_hermite(nodes_per_axis: usize) -> Self {
        Self {
            scheme: Scheme::GaussHermite,
            nodes_per_axis,
            ..Self::default()
        }
    }

    pub fn monte_carlo(mc_samples: usize, seed: u64) -> Self {
        Self {
            scheme: Scheme::MonteCarlo,
            mc_samples,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.scheme {
            Scheme::GaussHermite => {
                if self.nodes_per_axis < 4 {
                    return Err(Error::InvalidQuadrature(format!(
                        "gauss-hermite needs at least 4 nodes per axis, got {}",
                        self.nodes_per_axis
                    )));
                }
            }
            Scheme::MonteCarlo => {
                if self.mc_samples < 10_000 {
                    return Err(Error::InvalidQuadrature(format!(
                        "monte-carlo needs at least 10^4 samples, got {}",
                        self.mc_samples
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Nodes and weights of the n-point Gauss-Hermite rule for
/// ∫ e^(-t²) f(t) dt ≈ Σ w_k f(t_k).
///
/// Zeros of H_n are bracketed by a sign scan of the orthonormal recurrence
/// and polished by bisection; weights are the Christoffel numbers
/// 1 / Σ_{j<n} p_j(t_k)². Nodes are exactly symmetric about 0.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    // orthonormal Hermite values p_0..p_n at t
    let eval = |t: f64| -> (f64, f64) {
        // returns (p_{n-1}(t), p_n(t))
        let mut pk_1 = 0.0f64;
        let mut pk = std::f64::consts::PI.powf(-0.25);
        for k in 0..n {
            let kf = k as f64;
            let next = t * (2.0 / (kf + 1.0)).sqrt() * pk - (kf / (kf + 1.0)).sqrt() * pk_1;
            pk_1 = pk;
            pk = next;
        }
        (pk_1, pk)
    };
    let pn = |t: f64| eval(t).1;

    let bound = (2.0 * n as f64 + 1.0).sqrt() + 1.0;
    let half = n / 2;
    let mut pos = Vec::with_capacity(half + 1);
    // scan the positive half-line for sign changes of p_n
    let start = if n % 2 == 1 { 1e-12 } else { 0.0 };
    let steps = 80 * n;
    let dt = bound / steps as f64;
    let mut t_prev = start;
    let mut f_prev = pn(t_prev);
    for s in 1..=steps {
        let t = start + s as f64 * dt;
        let f = pn(t);
        if f_prev == 0.0 {
            pos.push(t_prev);
        } else if f_prev.signum() != f.signum() {
            // bisect [t_prev, t]
            let (mut a, mut b, mut fa) = (t_prev, t, f_prev);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m == a || m == b {
                    break;
                }
                let fm = pn(m);
                if fm == 0.0 {
                    a = m;
                    b = m;
                    break;
                }
                if fa.signum() != fm.signum() {
                    b = m;
                } else {
                    a = m;
                    fa = fm;
                }
            }
            pos.push(0.5 * (a + b));
        }
        t_prev = t;
        f_prev = f;
    }
    assert_eq!(pos.len(), half, "missed Hermite zeros for n = {n}");

    let mut nodes = Vec::with_capacity(n);
    if n % 2 == 1 {
        nodes.push(0.0);
    }
    for &t in &pos {
        nodes.push(t);
        nodes.push(-t);
    }
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let weights: Vec<f64> = nodes
        .iter()
        .map(|&t| {
            // Christoffel number: 1 / sum_{j=0}^{n-1} p_j(t)^2
            let mut sum = 0.0f64;
            let mut pk_1 = 0.0f64;
            let mut pk = std::f64::consts::PI.powf(-0.25);
            for k in 0..n {
                sum += pk * pk;
                let kf = k as f64;
                let next =
                    t * (2.0 / (kf + 1.0)).sqrt() * pk - (kf / (kf + 1.0)).sqrt() * pk_1;
                pk_1 = pk;
                pk = next;
            }
            1.0 / sum
        })
        .collect();
    (nodes, weights)
}
