//! Operating points in the (E, I) plane and numerical verification of the
//! operating-point identity
//!
//!   I~ = I* + nu* (E~ - E*) - D(q~ || q*)
//!
//! which ties any support-respecting input PMF to the capacity-achieving
//! one, plus the slope consistency nu* = C'(E*).

use serde::{Deserialize, Serialize};

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::mi::{block_mutual_information, block_output_kl, MiEngine, NoiseModel};
use crate::pmf::Pmf;
use crate::quadrature::QuadratureSpec;
use crate::solver::{CapacitySolution, CapacitySolver, SUPPORT_EPS};

/// A design located in the capacity plane.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatingPoint {
    /// Average energy per channel use, exact.
    pub energy: f64,
    /// Mutual information in nats per channel use.
    pub mi: f64,
    pub label: String,
}

/// Exact energy and quadrature mutual information of a PMF.
pub fn operating_point(
    p: &Pmf,
    c: &Constellation,
    noise: &NoiseModel,
    quad: &QuadratureSpec,
) -> Result<OperatingPoint> {
    let engine = MiEngine::new(c, *noise, quad)?;
    Ok(operating_point_with(&engine, p, String::new()))
}

/// Same as [`operating_point`] but reusing a built engine.
pub fn operating_point_with(engine: &MiEngine, p: &Pmf, label: String) -> OperatingPoint {
    OperatingPoint {
        energy: p.mean_energy(engine.energies()),
        mi: engine.mutual_information(p),
        label,
    }
}

/// The verdict of one identity evaluation. The three main terms come from
/// three independent code paths (MI quadrature, exact energy arithmetic,
/// output-KL quadrature), so a small residual is a genuine cross-check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Prop1Report {
    /// I~ - [I* + nu*(E~ - E*) - D(q~ || q*)].
    pub residual: f64,
    /// 3 x root-sum-square of the component error estimates.
    pub tolerance: f64,
    pub i_tilde: f64,
    pub e_tilde: f64,
    pub output_kl: f64,
    /// Whether p~ is zero wherever p* is zero; when false only the
    /// one-sided bound residual <= +tolerance is guaranteed.
    pub support_respected: bool,
}

impl Prop1Report {
    pub fn holds(&self) -> bool {
        if self.support_respected {
            self.residual.abs() <= self.tolerance
        } else {
            self.residual <= self.tolerance
        }
    }
}

/// Evaluate the identity for an arbitrary PMF against a solved design.
///
/// Component quadrature errors are estimated Richardson-style by
/// re-evaluating on a grid with 16 more nodes per axis; the solver's own
/// KKT residual enters the error budget since the identity assumes exact
/// stationarity.
pub fn prop1_residual(
    p_tilde: &Pmf,
    sol: &CapacitySolution,
    c: &Constellation,
    noise: &NoiseModel,
    quad: &QuadratureSpec,
) -> Result<Prop1Report> {
    let engine = MiEngine::new(c, *noise, quad)?;
    let fine = engine.refined(quad.nodes_per_axis + 16)?;
    prop1_residual_with(&engine, &fine, p_tilde, sol)
}

/// Same as [`prop1_residual`] reusing a built engine pair (the second on
/// a denser grid for the error estimate).
pub fn prop1_residual_with(
    engine: &MiEngine,
    fine: &MiEngine,
    p_tilde: &Pmf,
    sol: &CapacitySolution,
) -> Result<Prop1Report> {
    let support_respected = p_tilde
        .iter()
        .zip(sol.pmf.probs())
        .all(|(&pt, &ps)| ps > 0.0 || pt == 0.0);

    let e_tilde = p_tilde.mean_energy(engine.energies());
    let i_tilde = engine.mutual_information(p_tilde);
    let kl = engine.output_kl(p_tilde, &sol.pmf)?;
    let i_err = (fine.mutual_information(p_tilde) - i_tilde).abs();
    let kl_err = (fine.output_kl(p_tilde, &sol.pmf)? - kl).abs();
    let i_star_err = (fine.mutual_information(&sol.pmf) - sol.mi).abs();

    let residual = i_tilde - (sol.mi + sol.nu * (e_tilde - sol.energy) - kl);
    let err_terms = [i_err, kl_err, i_star_err, sol.kkt_residual];
    let rss = err_terms.iter().map(|e| e * e).sum::<f64>().sqrt();
    Ok(Prop1Report {
        residual,
        tolerance: (3.0 * rss).max(1e-9),
        i_tilde,
        e_tilde,
        output_kl: kl,
        support_respected,
    })
}

/// Block form of the identity for the n-symbol design (per channel use):
/// I~_n = I* + nu*(E~_n - E*) - D(q~^(n) || q^(n)*)/n, with nu* from the
/// n = 1 solve. Block quantities are Monte Carlo estimates.
pub fn prop1_block_residual(
    joint_tilde: &Pmf,
    sol: &CapacitySolution,
    c: &Constellation,
    noise: &NoiseModel,
    n: u32,
    quad: &QuadratureSpec,
) -> Result<Prop1Report> {
    let joint_star = crate::block::product_pmf(&sol.pmf, n)?;
    let support_respected = joint_tilde
        .iter()
        .zip(joint_star.probs())
        .all(|(&pt, &ps)| ps > 0.0 || pt == 0.0);
    let nf = n as f64;
    let e_tilde = crate::block::block_energy(joint_tilde.probs(), c, n)? / nf;
    let mi = block_mutual_information(joint_tilde, c, noise, n, quad.mc_samples, quad.seed)?;
    let kl = block_output_kl(
        joint_tilde,
        &joint_star,
        c,
        noise,
        n,
        quad.mc_samples,
        quad.seed.wrapping_add(1),
    )?;
    let i_tilde = mi.value / nf;
    let kl_per_use = kl.value / nf;
    let residual = i_tilde - (sol.mi + sol.nu * (e_tilde - sol.energy) - kl_per_use);
    let err_terms = [
        mi.std_error / nf,
        kl.std_error / nf,
        sol.kkt_residual,
    ];
    let rss = err_terms.iter().map(|e| e * e).sum::<f64>().sqrt();
    Ok(Prop1Report {
        residual,
        tolerance: (3.0 * rss).max(1e-9),
        i_tilde,
        e_tilde,
        output_kl: kl_per_use,
        support_respected,
    })
}

/// Relative mismatch between the reported shadow price nu* and the
/// central-difference slope of the traced capacity curve at E*.
///
/// At a plateau point (inactive constraint) the slope is undefined as a
/// ratio; 0 is returned when the central difference is itself below the
/// tolerance, and the raw mismatch otherwise.
pub fn slope_consistency(
    solver: &CapacitySolver,
    sol: &CapacitySolution,
    delta: f64,
    tol: f64,
) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::InvalidInput(format!(
            "delta must be positive, got {delta}"
        )));
    }
    let up = solver.solve(sol.energy + delta, tol)?;
    let dn = solver.solve(sol.energy - delta, tol)?;
    let cd = (up.mi - dn.mi) / (2.0 * delta);
    if sol.nu <= tol {
        if cd.abs() <= 10.0 * tol / delta {
            return Ok(0.0);
        }
        return Ok(cd.abs());
    }
    Ok((sol.nu - cd).abs() / sol.nu)
}

/// True when the point sits on or below the curve within `tol`, using
/// linear interpolation between traced grid points.
pub fn below_curve(
    point: &OperatingPoint,
    curve: &[crate::solver::CapacityCurvePoint],
    tol: f64,
) -> bool {
    let e = point.energy;
    if curve.is_empty() {
        return true;
    }
    let cap = if e <= curve[0].energy {
        curve[0].capacity
    } else if e >= curve[curve.len() - 1].energy {
        curve[curve.len() - 1].capacity
    } else {
        let k = curve.partition_point(|p| p.energy <= e) - 1;
        let (a, b) = (&curve[k], &curve[k + 1]);
        let t = (e - a.energy) / (b.energy - a.energy);
        a.capacity + t * (b.capacity - a.capacity)
    };
    point.mi <= cap + tol
}

/// Support condition of the identity: p~ must vanish wherever p* does.
pub fn support_condition_holds(p_tilde: &[f64], p_star: &[f64]) -> bool {
    p_tilde
        .iter()
        .zip(p_star)
        .all(|(&pt, &ps)| ps > SUPPORT_EPS || pt == 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn operating_point_of_point_mass() {
        let c = Constellation::square_qam(16, 10.0).unwrap();
        let noise = NoiseModel::new(1.0).unwrap();
        let (min_w, _) = c.feasible_energy_range();
        let at = c
            .energies()
            .iter()
            .position(|&w| (w - min_w).abs() < 1e-12)
            .unwrap();
        let p = Pmf::point_mass(16, at);
        let op = operating_point(&p, &c, &noise, &QuadratureSpec::gauss_hermite(16)).unwrap();
        assert_eq!(op.mi, 0.0);
        assert!((op.energy - min_w).abs() < 1e-15);
    }

    #[test]
    fn prop1_identity_at_p_star_is_zero() {
        let c = Constellation::square_qam(16, 10.0).unwrap();
        let noise = NoiseModel::new(1.0).unwrap();
        let quad = QuadratureSpec::gauss_hermite(32);
        let solver = CapacitySolver::new(&c, noise, &quad).unwrap();
        let sol = solver.solve(3.0, 1e-8).unwrap();
        let rep = prop1_residual(&sol.pmf, &sol, &c, &noise, &quad).unwrap();
        assert!(rep.support_respected);
        assert!(
            rep.residual.abs() <= rep.tolerance.max(1e-8),
            "residual {} tolerance {}",
            rep.residual,
            rep.tolerance
        );
    }

    #[test]
    fn prop1_identity_for_shifted_pmf() {
        let c = Constellation::square_qam(16, 10.0).unwrap();
        let noise = NoiseModel::new(1.0).unwrap();
        let quad = QuadratureSpec::gauss_hermite(32);
        let solver = CapacitySolver::new(&c, noise, &quad).unwrap();
        let sol = solver.solve(3.0, 1e-8).unwrap();
        // a clearly different support-respecting PMF
        let mut v = sol.pmf.probs().to_vec();
        for (k, x) in v.iter_mut().enumerate() {
            *x = 0.7 * *x + 0.3 / 16.0 * ((k % 3) as f64 + 0.5);
        }
        let p = Pmf::normalized(v).unwrap();
        let rep = prop1_residual(&p, &sol, &c, &noise, &quad).unwrap();
        assert!(rep.support_respected);
        assert!(
            rep.residual.abs() <= rep.tolerance,
            "residual {} tolerance {}",
            rep.residual,
            rep.tolerance
        );
        assert!(rep.output_kl > 1e-4, "the KL term should be active");
    }

    #[test]
    fn slope_matches_on_strictly_convex_toy() {
        // 3-point constellation with distinct energies
        let c = Constellation::new(vec![
            Complex64::new(0.3, 0.0),
            Complex64::new(-1.0, 0.5),
            Complex64::new(1.4, -1.2),
        ])
        .unwrap();
        let noise = NoiseModel::new(1.0).unwrap();
        let quad = QuadratureSpec::gauss_hermite(32);
        let solver = CapacitySolver::new(&c, noise, &quad).unwrap();
        let sol = solver.solve(1.2, 1e-8).unwrap();
        assert!(sol.power_constraint_active);
        let mis = slope_consistency(&solver, &sol, 0.05, 1e-8).unwrap();
        assert!(mis <= 0.05, "slope mismatch {mis}");
    }
}
