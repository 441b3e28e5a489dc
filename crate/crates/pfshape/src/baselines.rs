//! Sampled-Gaussian (Maxwell-Boltzmann) input family and Huffman shaping,
//! the classical baselines the dyadic designs are measured against.

use serde::{Deserialize, Serialize};

use crate::analysis::{operating_point_with, OperatingPoint};
use crate::constellation::Constellation;
use crate::dyadic::huffman_lengths;
use crate::error::{Error, Result};
use crate::mi::{MiEngine, NoiseModel};
use crate::pmf::Pmf;
use crate::quadrature::QuadratureSpec;

/// One point of the I_SG(E) curve.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SgCurvePoint {
    /// Gibbs parameter of the exponential family (1/energy units).
    pub lambda: f64,
    pub energy: f64,
    /// Mutual information of the sampled-Gaussian PMF, nats.
    pub mi: f64,
}

/// The maximum-entropy PMF at its average energy: p_i proportional to
/// exp(-lambda w_i), computed with max-shift for stability.
///
/// lambda = 0 gives the uniform PMF; E is strictly decreasing in lambda.
/// Negative lambda (boosting high-energy points) covers average energies
/// above the uniform PMF's, which the capacity-achieving family reaches.
pub fn sampled_gaussian_pmf(c: &Constellation, lambda: f64) -> Pmf {
    let w = c.energies();
    let mut ex: Vec<f64> = w.iter().map(|&wi| -lambda * wi).collect();
    let max = ex.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for v in &mut ex {
        *v = (*v - max).exp();
    }
    Pmf::normalized(ex).expect("softmax weights are positive and finite")
}

/// Inverts E(lambda) = e by bisection on the strictly monotone map;
/// 1e-12 energy tolerance.
pub fn lambda_for_energy(c: &Constellation, e: f64) -> Result<f64> {
    let (min_w, max_w) = c.feasible_energy_range();
    if !(e > min_w && e < max_w) {
        return Err(Error::InfeasibleGridPoint(e, min_w, max_w));
    }
    let energy_at = |lambda: f64| sampled_gaussian_pmf(c, lambda).mean_energy(c.energies());
    let mut lo = -1.0f64; // energies above uniform
    let mut hi = 1.0f64;
    let mut grow = 0;
    while energy_at(lo) < e {
        lo *= 2.0;
        grow += 1;
        if grow > 200 {
            return Err(Error::InfeasibleGridPoint(e, min_w, max_w));
        }
    }
    while energy_at(hi) > e {
        hi *= 2.0;
        grow += 1;
        if grow > 200 {
            return Err(Error::InfeasibleGridPoint(e, min_w, max_w));
        }
    }
    // E decreasing in lambda: invariant E(lo) >= e >= E(hi)
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let em = energy_at(mid);
        if (em - e).abs() <= 1e-12 {
            return Ok(mid);
        }
        if em > e {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The I_SG(E) curve over an energy grid.
pub fn sg_curve(
    c: &Constellation,
    noise: &NoiseModel,
    energy_grid: &[f64],
    quad: &QuadratureSpec,
) -> Result<Vec<SgCurvePoint>> {
    let engine = MiEngine::new(c, *noise, quad)?;
    sg_curve_with(&engine, c, energy_grid)
}

/// Same as [`sg_curve`] reusing a built engine.
pub fn sg_curve_with(
    engine: &MiEngine,
    c: &Constellation,
    energy_grid: &[f64],
) -> Result<Vec<SgCurvePoint>> {
    let mut out = Vec::with_capacity(energy_grid.len());
    for &e in energy_grid {
        let lambda = lambda_for_energy(c, e)?;
        let p = sampled_gaussian_pmf(c, lambda);
        out.push(SgCurvePoint {
            lambda,
            energy: e,
            mi: engine.mutual_information(&p),
        });
    }
    Ok(out)
}

/// Operating point of the dyadic PMF induced by the classical Huffman
/// code of the sampled-Gaussian PMF at `lambda`.
pub fn huffman_shaping_point(
    c: &Constellation,
    noise: &NoiseModel,
    lambda: f64,
    quad: &QuadratureSpec,
) -> Result<OperatingPoint> {
    let engine = MiEngine::new(c, *noise, quad)?;
    huffman_shaping_point_with(&engine, c, lambda)
}

/// Same as [`huffman_shaping_point`] reusing a built engine.
pub fn huffman_shaping_point_with(
    engine: &MiEngine,
    c: &Constellation,
    lambda: f64,
) -> Result<OperatingPoint> {
    let p = sampled_gaussian_pmf(c, lambda);
    let dyadic = huffman_lengths(&p)?;
    Ok(operating_point_with(
        engine,
        &dyadic.to_pmf(),
        format!("huffman(sg, lambda={lambda})"),
    ))
}
