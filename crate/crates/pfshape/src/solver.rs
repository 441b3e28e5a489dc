//! Capacity-achieving PMFs under an average power constraint.
//!
//! The convex program max I(p) s.t. 1ᵀp = 1, p >= 0, wᵀp <= E is solved by
//! dual decomposition: for fixed price nu >= 0 the penalized objective
//! I(p) - nu wᵀp is maximized over the simplex by a Blahut-Arimoto-type
//! multiplicative fixed point (with periodic vector extrapolation), and nu
//! is driven to meet wᵀp = E by safeguarded bracketing. Every returned
//! solution is certified against the KKT conditions.

use serde::{Deserialize, Serialize};

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::mi::{MiEngine, NoiseModel};
use crate::pmf::Pmf;
use crate::quadrature::{QuadratureSpec, Scheme};

/// Probabilities below this after convergence are truncated to exactly 0
/// and the PMF renormalized; the same threshold separates the equality and
/// inequality branches of the KKT residual.
pub const SUPPORT_EPS: f64 = 1e-10;

/// Default bound on the KKT residual.
pub const DEFAULT_TOL: f64 = 1e-7;

/// Complementary slackness |nu (wᵀp - E)| is driven below this.
const CS_TOL: f64 = 5.0e-7;

/// Feasibility slack on wᵀp <= E.
const FEAS_EPS: f64 = 1e-9;

const INNER_EVAL_CAP: u64 = 10_000;
const OUTER_STEP_CAP: u32 = 100;
const EXTRAPOLATE_EVERY: u32 = 6;

/// Energies from the half-resolution engine classify a bracket side only
/// outside this band around the target; it must dominate the coarse
/// grid's quadrature bias on wᵀp.
const COARSE_GUARD_BAND: f64 = 1e-2;

/// A certified solution of the power-constrained capacity problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CapacitySolution {
    /// Capacity-achieving PMF p*.
    pub pmf: Pmf,
    /// Shadow price nu* of the power constraint (nats per energy unit).
    pub nu: f64,
    /// Multiplier lambda* of the normalization constraint.
    pub lambda: f64,
    /// Multipliers mu* of the nonnegativity constraints; exactly 0 on the
    /// support.
    pub mu: Vec<f64>,
    /// E* = wᵀp*.
    pub energy: f64,
    /// I* = I(p*) in nats per channel use.
    pub mi: f64,
    /// Max KKT violation of the returned tuple.
    pub kkt_residual: f64,
    pub power_constraint_active: bool,
    /// The constraint value this was solved for.
    pub e_bar: f64,
    /// Engine evaluations spent.
    pub evaluations: u64,
}

/// One traced point of the capacity curve C(E).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CapacityCurvePoint {
    /// Constraint value E of this grid point.
    pub energy: f64,
    /// C(E) in nats.
    pub capacity: f64,
    /// Slope nu = C'(E); zero once the constraint goes inactive.
    pub nu: f64,
    pub constraint_active: bool,
}

/// Max KKT violation of (candidate, nu, lambda): the one-sided condition
/// dI/dp_i <= lambda + nu w_i everywhere, two-sided on the support.
pub fn kkt_residual(candidate: &Pmf, nu: f64, lambda: f64, engine: &MiEngine) -> f64 {
    let d = engine.per_symbol_divergence(candidate);
    let w = engine.energies();
    let mut resid = 0.0f64;
    for i in 0..candidate.len() {
        let slack = d[i] - 1.0 - lambda - nu * w[i];
        if candidate[i] > SUPPORT_EPS {
            resid = resid.max(slack.abs());
        } else {
            resid = resid.max(slack.max(0.0));
        }
    }
    resid
}

struct Inner {
    p: Vec<f64>,
    d: Vec<f64>,
    residual: f64,
    energy: f64,
}

/// Solver context holding the (possibly two-resolution) engines for one
/// constellation/noise/quadrature triple.
pub struct CapacitySolver {
    engine: MiEngine,
    coarse: Option<MiEngine>,
    unconstrained: std::sync::OnceLock<Vec<f64>>,
}

impl CapacitySolver {
    pub fn new(c: &Constellation, noise: NoiseModel, quad: &QuadratureSpec) -> Result<Self> {
        if c.size() < 2 {
            return Err(Error::InvalidConstellation(
                "capacity needs at least 2 signal points".into(),
            ));
        }
        if quad.scheme != Scheme::GaussHermite {
            return Err(Error::InvalidQuadrature(
                "the capacity solver requires the gauss-hermite scheme".into(),
            ));
        }
        let engine = MiEngine::new(c, noise, quad)?;
        let coarse = if quad.nodes_per_axis >= 32 {
            Some(engine.refined(quad.nodes_per_axis / 2)?)
        } else {
            None
        };
        Ok(Self {
            engine,
            coarse,
            unconstrained: std::sync::OnceLock::new(),
        })
    }

    pub fn engine(&self) -> &MiEngine {
        &self.engine
    }

    pub fn solve(&self, e_bar: f64, tol: f64) -> Result<CapacitySolution> {
        self.solve_warm(e_bar, tol, None)
    }

    /// Solve with an optional warm-start PMF (used when tracing curves).
    pub fn solve_warm(
        &self,
        e_bar: f64,
        tol: f64,
        init: Option<&Pmf>,
    ) -> Result<CapacitySolution> {
        if !(tol > 0.0) {
            return Err(Error::InvalidInput(format!(
                "tol must be positive, got {tol}"
            )));
        }
        let (min_w, _) = energy_range(self.engine.energies());
        if e_bar < min_w - 1e-12 {
            return Err(Error::Infeasible {
                e_bar,
                min_energy: min_w,
            });
        }
        let m = self.engine.constellation_size();
        let mut evals: u64 = 0;

        // unconstrained optimum first: if it meets the budget, the
        // constraint is inactive and nu* = 0
        let p_unc = self.unconstrained_pmf();
        let e_unc = mean_energy(&p_unc, self.engine.energies());
        if e_unc <= e_bar + FEAS_EPS {
            let start = init.map(|p| p.probs().to_vec()).unwrap_or(p_unc);
            let inner = self.converge(0.0, start, tol, e_bar, &mut evals)?;
            return self.finalize(inner, 0.0, e_bar, tol, evals);
        }

        // bracket nu: E(nu) is continuous and nonincreasing
        let start = init
            .map(|p| p.probs().to_vec())
            .unwrap_or(vec![1.0 / m as f64; m]);
        let mut lo = 0.0f64;
        let mut e_lo = e_unc;
        let mut hi = 0.25f64;
        let mut p = start;
        let mut e_hi;
        let mut grow = 0u32;
        let mut fine_phase = self.coarse.is_none();
        loop {
            if fine_phase {
                let inner = self.inner_solve(&self.engine, hi, p, tight_tol(tol));
                evals += 1;
                p = inner.p;
                e_hi = inner.energy;
                if e_hi <= e_bar {
                    break;
                }
            } else {
                let inner = self.inner_solve(self.work_engine(), hi, p, coarse_tol(tol));
                evals += 1;
                p = inner.p;
                e_hi = inner.energy;
                if e_hi <= e_bar - COARSE_GUARD_BAND {
                    break;
                }
                if e_hi <= e_bar {
                    // too close to call on the coarse grid; confirm at
                    // full resolution
                    let inner = self.inner_solve(&self.engine, hi, p, tight_tol(tol));
                    evals += 1;
                    p = inner.p;
                    e_hi = inner.energy;
                    fine_phase = true;
                    if e_hi <= e_bar {
                        break;
                    }
                }
            }
            lo = hi;
            e_lo = e_hi;
            hi *= 2.0;
            grow += 1;
            if hi > 1e9 || grow > 60 {
                let best = self.certify(p, hi, e_bar, tol, evals);
                return Err(Error::NoConvergence {
                    residual: f64::INFINITY,
                    tol,
                    best: Box::new(best),
                });
            }
        }

        // safeguarded bracketing: secant proposals, bisection fallback.
        // every full-resolution evaluation runs at the tight residual so
        // the E(nu) map is consistent; warm starts keep them cheap. the
        // coarse phase only shrinks the bracket until a proposal lands
        // inside the guard band.
        let mut p_hi = p;
        for step in 0..OUTER_STEP_CAP {
            let width = hi - lo;
            if !fine_phase && width <= 1e-2 * hi.max(1e-3) {
                // switch to the full-resolution engine and re-anchor the
                // feasible endpoint there
                fine_phase = true;
                let inner = self.inner_solve(&self.engine, hi, p_hi, tight_tol(tol));
                evals += 1;
                e_hi = inner.energy;
                p_hi = inner.p;
                if e_hi > e_bar {
                    // refinement moved E across the target; re-grow by the
                    // bracket's own slope estimate
                    let slope = ((e_lo - e_hi) / width.max(1e-300)).max(1e-12);
                    lo = hi;
                    e_lo = e_hi;
                    hi += 2.0 * (e_hi - e_bar) / slope;
                    continue;
                }
            }
            if fine_phase && hi * (e_bar - e_hi).abs() <= CS_TOL {
                let inner = self.converge(hi, p_hi, tol, e_bar, &mut evals)?;
                if hi * (e_bar - inner.energy).abs() <= CS_TOL
                    && inner.energy <= e_bar + FEAS_EPS
                {
                    return self.finalize(inner, hi, e_bar, tol, evals);
                }
                // re-seeding changed the support enough to move E; fold
                // the new point back into the bracket
                if inner.energy > e_bar {
                    let slope = ((e_lo - inner.energy) / (hi - lo).max(1e-300)).max(1e-12);
                    lo = hi;
                    e_lo = inner.energy;
                    hi += 2.0 * (inner.energy - e_bar) / slope;
                } else {
                    e_hi = inner.energy;
                }
                p_hi = inner.p;
                if hi - lo <= 1e-14 * hi {
                    break;
                }
                continue;
            }
            let secant = lo + (e_lo - e_bar) * (hi - lo) / (e_lo - e_hi).max(1e-300);
            let mid = if step % 2 == 0 && secant.is_finite() && secant > lo && secant < hi {
                secant
            } else {
                0.5 * (lo + hi)
            };
            let mut inner;
            if fine_phase {
                inner = self.inner_solve(&self.engine, mid, p_hi.clone(), tight_tol(tol));
                evals += 1;
            } else {
                inner = self.inner_solve(self.work_engine(), mid, p_hi.clone(), coarse_tol(tol));
                evals += 1;
                // a coarse evaluation may only classify a bracket side
                // with a guard band covering its quadrature bias; inside
                // the band, hand over to the full-resolution engine
                if (inner.energy - e_bar).abs() <= COARSE_GUARD_BAND {
                    fine_phase = true;
                    inner = self.inner_solve(&self.engine, mid, inner.p, tight_tol(tol));
                    evals += 1;
                }
            }
            log::trace!(
                "outer step {step}: fine={fine_phase} nu={mid:.12} E={:.9} resid={:.2e} bracket=[{lo:.9}, {hi:.9}]",
                inner.energy,
                inner.residual
            );
            if inner.energy > e_bar {
                lo = mid;
                e_lo = inner.energy;
            } else {
                hi = mid;
                e_hi = inner.energy;
                p_hi = inner.p;
            }
            if fine_phase && hi - lo <= 1e-14 * hi && hi * (e_bar - e_hi).abs() > CS_TOL {
                break;
            }
        }
        let best = self.certify(p_hi, hi, e_bar, tol, evals);
        Err(Error::NoConvergence {
            residual: best.kkt_residual.max(hi * (e_bar - best.energy).abs()),
            tol,
            best: Box::new(best),
        })
    }

    /// One certified solve per grid value, warm-started along the grid.
    /// The traced curve's shape (monotone C, nonincreasing slope,
    /// concavity) is verified before returning.
    pub fn capacity_curve(&self, grid: &[f64], tol: f64) -> Result<Vec<CapacityCurvePoint>> {
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "energy grid must be strictly increasing".into(),
            ));
        }
        let mut points = Vec::with_capacity(grid.len());
        let mut warm: Option<Pmf> = None;
        for (index, &e) in grid.iter().enumerate() {
            let sol = self
                .solve_warm(e, tol, warm.as_ref())
                .map_err(|err| Error::CurvePoint {
                    index,
                    energy: e,
                    source: Box::new(err),
                })?;
            warm = Some(sol.pmf.clone());
            points.push(CapacityCurvePoint {
                energy: e,
                capacity: sol.mi,
                nu: sol.nu,
                constraint_active: sol.power_constraint_active,
            });
        }
        for k in 1..points.len() {
            if points[k].capacity < points[k - 1].capacity - 1e-9 {
                return Err(Error::CurveShape(format!(
                    "monotonicity at E = {}: C drops from {} to {}",
                    points[k].energy,
                    points[k - 1].capacity,
                    points[k].capacity
                )));
            }
            if points[k].nu > points[k - 1].nu + 1e-6 {
                return Err(Error::CurveShape(format!(
                    "slope at E = {}: nu rises from {} to {}",
                    points[k].energy,
                    points[k - 1].nu,
                    points[k].nu
                )));
            }
        }
        for k in 2..points.len() {
            let s0 = (points[k - 1].capacity - points[k - 2].capacity)
                / (points[k - 1].energy - points[k - 2].energy);
            let s1 = (points[k].capacity - points[k - 1].capacity)
                / (points[k].energy - points[k - 1].energy);
            if s1 > s0 + 1e-6 {
                return Err(Error::CurveShape(format!(
                    "concavity at E = {}: slope rises from {s0} to {s1}",
                    points[k].energy
                )));
            }
        }
        Ok(points)
    }

    fn work_engine(&self) -> &MiEngine {
        self.coarse.as_ref().unwrap_or(&self.engine)
    }

    fn unconstrained_pmf(&self) -> Vec<f64> {
        self.unconstrained
            .get_or_init(|| {
                let m = self.engine.constellation_size();
                let rough = self.inner_solve(
                    self.work_engine(),
                    0.0,
                    vec![1.0 / m as f64; m],
                    1e-6,
                );
                self.inner_solve(&self.engine, 0.0, rough.p, 1e-9).p
            })
            .clone()
    }

    /// Run the inner solve at full resolution until the official KKT
    /// residual meets `tol`, re-seeding zeroed components whose inequality
    /// condition is violated.
    fn converge(
        &self,
        nu: f64,
        start: Vec<f64>,
        tol: f64,
        e_bar: f64,
        evals: &mut u64,
    ) -> Result<Inner> {
        let w = self.engine.energies();
        let mut p = start;
        for _round in 0..4 {
            let inner = self.inner_solve(&self.engine, nu, p, tight_tol(tol));
            *evals += 1;
            let supp: Vec<usize> = (0..inner.p.len())
                .filter(|&i| inner.p[i] > SUPPORT_EPS)
                .collect();
            let lam = supp
                .iter()
                .map(|&i| inner.d[i] - 1.0 - nu * w[i])
                .sum::<f64>()
                / supp.len().max(1) as f64;
            let viol: Vec<usize> = (0..inner.p.len())
                .filter(|&i| inner.p[i] == 0.0 && inner.d[i] - 1.0 - nu * w[i] > lam + 0.5 * tol)
                .collect();
            if viol.is_empty() {
                if inner.residual <= tol {
                    return Ok(inner);
                }
                let best = self.certify(inner.p, nu, e_bar, tol, *evals);
                return Err(Error::NoConvergence {
                    residual: best.kkt_residual,
                    tol,
                    best: Box::new(best),
                });
            }
            p = inner.p;
            let seed = 1e-6 / viol.len() as f64;
            for &i in &viol {
                p[i] = seed;
            }
            let sum: f64 = p.iter().sum();
            for v in &mut p {
                *v /= sum;
            }
        }
        let best = self.certify(p, nu, e_bar, tol, *evals);
        Err(Error::NoConvergence {
            residual: best.kkt_residual,
            tol,
            best: Box::new(best),
        })
    }

    /// Blahut-Arimoto fixed point for max I(p) - nu wᵀp with periodic
    /// vector extrapolation; stops at the KKT-style residual `tol` or the
    /// evaluation cap.
    fn inner_solve(&self, engine: &MiEngine, nu: f64, mut p: Vec<f64>, tol: f64) -> Inner {
        let w = engine.energies();
        let m = p.len();
        let mut d = engine.per_symbol_divergence(&p);
        let mut hist: Vec<Vec<f64>> = Vec::new();
        let mut since_jump = 0u32;
        let mut local_evals = 1u64;
        loop {
            let mut lam = 0.0f64;
            let mut nsupp = 0usize;
            for i in 0..m {
                if p[i] > SUPPORT_EPS {
                    lam += d[i] - nu * w[i];
                    nsupp += 1;
                }
            }
            lam /= nsupp.max(1) as f64;
            let mut residual = 0.0f64;
            let mut fval = 0.0f64;
            for i in 0..m {
                if p[i] == 0.0 {
                    continue;
                }
                let g = d[i] - nu * w[i];
                fval += p[i] * g;
                let dev = g - lam;
                if p[i] > SUPPORT_EPS {
                    residual = residual.max(dev.abs());
                } else {
                    residual = residual.max(dev.max(0.0));
                }
            }
            if residual <= tol || local_evals >= INNER_EVAL_CAP {
                let energy = mean_energy(&p, w);
                return Inner {
                    p,
                    d,
                    residual,
                    energy,
                };
            }

            since_jump += 1;
            if since_jump >= EXTRAPOLATE_EVERY && hist.len() >= 2 {
                let pm2 = &hist[hist.len() - 2];
                let pm1 = &hist[hist.len() - 1];
                if let Some(cand) = extrapolate(pm2, pm1, &p) {
                    let d_c = engine.per_symbol_divergence(&cand);
                    local_evals += 1;
                    let f_c: f64 = cand
                        .iter()
                        .zip(&d_c)
                        .zip(w)
                        .filter(|((&c, _), _)| c > 0.0)
                        .map(|((&c, &dc), &wi)| c * (dc - nu * wi))
                        .sum();
                    if f_c > fval {
                        p = cand;
                        d = d_c;
                        hist.clear();
                        since_jump = 0;
                        continue;
                    }
                }
                since_jump = 0;
            }

            let mut gmax = f64::NEG_INFINITY;
            for i in 0..m {
                if p[i] > 0.0 {
                    gmax = gmax.max(d[i] - nu * w[i]);
                }
            }
            let mut next = vec![0.0f64; m];
            let mut sum = 0.0f64;
            for i in 0..m {
                if p[i] > 0.0 {
                    let v = p[i] * (d[i] - nu * w[i] - gmax).exp();
                    next[i] = v;
                    sum += v;
                }
            }
            for v in &mut next {
                *v /= sum;
            }
            hist.push(std::mem::replace(&mut p, next));
            if hist.len() > 2 {
                hist.remove(0);
            }
            d = engine.per_symbol_divergence(&p);
            local_evals += 1;
        }
    }

    fn finalize(
        &self,
        inner: Inner,
        nu: f64,
        e_bar: f64,
        tol: f64,
        evals: u64,
    ) -> Result<CapacitySolution> {
        // truncate sub-threshold probabilities to exactly 0
        let mut p = inner.p;
        let mut truncated = false;
        for v in &mut p {
            if *v < SUPPORT_EPS && *v != 0.0 {
                *v = 0.0;
                truncated = true;
            }
        }
        if truncated {
            let sum: f64 = p.iter().sum();
            for v in &mut p {
                *v /= sum;
            }
        }
        let sol = self.certify(p, nu, e_bar, tol, evals);
        if sol.kkt_residual > tol {
            return Err(Error::NoConvergence {
                residual: sol.kkt_residual,
                tol,
                best: Box::new(sol),
            });
        }
        Ok(sol)
    }

    /// Evaluate all KKT quantities of (p, nu) on the full-resolution
    /// engine and assemble the solution record.
    fn certify(&self, p: Vec<f64>, nu: f64, e_bar: f64, tol: f64, evals: u64) -> CapacitySolution {
        let w = self.engine.energies();
        let pmf = Pmf::new(p).expect("solver iterates stay on the simplex");
        let d = self.engine.per_symbol_divergence(&pmf);
        let supp: Vec<usize> = (0..pmf.len()).filter(|&i| pmf[i] > SUPPORT_EPS).collect();
        let lambda = supp
            .iter()
            .map(|&i| d[i] - 1.0 - nu * w[i])
            .sum::<f64>()
            / supp.len().max(1) as f64;
        let mu: Vec<f64> = (0..pmf.len())
            .map(|i| {
                if pmf[i] > SUPPORT_EPS {
                    0.0
                } else {
                    (lambda + nu * w[i] - (d[i] - 1.0)).max(0.0)
                }
            })
            .collect();
        let mut residual = 0.0f64;
        for i in 0..pmf.len() {
            let slack = d[i] - 1.0 - lambda - nu * w[i];
            if pmf[i] > SUPPORT_EPS {
                residual = residual.max(slack.abs());
            } else {
                residual = residual.max(slack.max(0.0));
            }
        }
        let energy = pmf.mean_energy(w);
        let mi = pmf
            .iter()
            .zip(&d)
            .filter(|(&p, _)| p > 0.0)
            .map(|(&p, &di)| p * di)
            .sum::<f64>()
            .max(0.0);
        CapacitySolution {
            pmf,
            nu,
            lambda,
            mu,
            energy,
            mi,
            kkt_residual: residual,
            power_constraint_active: nu > tol,
            e_bar,
            evaluations: evals + 1,
        }
    }
}

fn coarse_tol(tol: f64) -> f64 {
    (tol * 100.0).clamp(1e-8, 1e-5)
}

/// Residual target for the endgame. The energy of an iterate is a linear
/// functional amplified along the objective's flat directions, so pinning
/// wᵀp to the complementary-slackness tolerance needs residuals well
/// below the reporting tolerance.
fn tight_tol(tol: f64) -> f64 {
    (tol * 1e-2).clamp(1e-10, 1e-9)
}

fn mean_energy(p: &[f64], w: &[f64]) -> f64 {
    p.iter().zip(w).map(|(p, w)| p * w).sum()
}

fn energy_range(w: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &x in w {
        lo = lo.min(x);
        hi = hi.max(x);
    }
    (lo, hi)
}

/// Vector extrapolation (squared-iterate scheme) from three consecutive
/// fixed-point iterates; returns a clipped, renormalized candidate.
fn extrapolate(p0: &[f64], p1: &[f64], p2: &[f64]) -> Option<Vec<f64>> {
    let n = p0.len();
    let mut rr = 0.0f64;
    let mut vv = 0.0f64;
    for i in 0..n {
        let r = p1[i] - p0[i];
        let v = p2[i] - 2.0 * p1[i] + p0[i];
        rr += r * r;
        vv += v * v;
    }
    if vv <= 1e-300 || rr <= 1e-300 {
        return None;
    }
    let alpha = -(rr / vv).sqrt().clamp(1.0, 1e6);
    let mut cand = vec![0.0f64; n];
    let mut sum = 0.0f64;
    for i in 0..n {
        let r = p1[i] - p0[i];
        let v = p2[i] - 2.0 * p1[i] + p0[i];
        let x = (p0[i] - 2.0 * alpha * r + alpha * alpha * v).max(0.0);
        // never revive an exact zero through extrapolation noise
        let x = if p2[i] == 0.0 { 0.0 } else { x };
        cand[i] = x;
        sum += x;
    }
    if !(sum > 0.0) || !sum.is_finite() {
        return None;
    }
    for v in &mut cand {
        *v /= sum;
    }
    Some(cand)
}

/// Convenience one-shot form of [`CapacitySolver::solve`].
pub fn solve_capacity(
    c: &Constellation,
    noise: NoiseModel,
    e_bar: f64,
    quad: &QuadratureSpec,
    tol: f64,
) -> Result<CapacitySolution> {
    CapacitySolver::new(c, noise, quad)?.solve(e_bar, tol)
}

/// Convenience one-shot form of [`CapacitySolver::capacity_curve`].
pub fn capacity_curve(
    c: &Constellation,
    noise: NoiseModel,
    grid: &[f64],
    quad: &QuadratureSpec,
    tol: f64,
) -> Result<Vec<CapacityCurvePoint>> {
    CapacitySolver::new(c, noise, quad)?.capacity_curve(grid, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn noise() -> NoiseModel {
        NoiseModel::new(1.0).unwrap()
    }

    #[test]
    fn binary_antipodal_unconstrained_is_uniform() {
        let c = Constellation::new(vec![Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)])
            .unwrap();
        let solver = CapacitySolver::new(&c, noise(), &QuadratureSpec::gauss_hermite(24)).unwrap();
        let sol = solver.solve(1.5, 1e-7).unwrap();
        assert!(!sol.power_constraint_active);
        assert!((sol.pmf[0] - 0.5).abs() < 1e-7, "pmf {:?}", sol.pmf.probs());
        assert!(sol.kkt_residual <= 1e-7);
        assert!((sol.energy - 1.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_budget_rejected() {
        let c = Constellation::square_qam(4, 2.0).unwrap();
        let solver = CapacitySolver::new(&c, noise(), &QuadratureSpec::gauss_hermite(16)).unwrap();
        assert!(matches!(
            solver.solve(1.0, 1e-7),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn active_constraint_certified() {
        // 16-QAM with a binding power budget
        let c = Constellation::square_qam(16, 10.0).unwrap();
        let solver = CapacitySolver::new(&c, noise(), &QuadratureSpec::gauss_hermite(32)).unwrap();
        let sol = solver.solve(2.5, 1e-7).unwrap();
        assert!(sol.power_constraint_active);
        assert!(sol.nu > 0.0);
        assert!(sol.kkt_residual <= 1e-7, "residual {}", sol.kkt_residual);
        assert!(
            (sol.nu * (sol.energy - 2.5)).abs() <= 1e-6,
            "cs violated: nu {} energy {}",
            sol.nu,
            sol.energy
        );
        assert!(sol.energy <= 2.5 + 1e-9);
        for (i, &mu) in sol.mu.iter().enumerate() {
            assert!(mu * sol.pmf[i] <= 1e-9);
            assert!(mu >= 0.0);
        }
    }

    #[test]
    fn uniform_pmf_fails_kkt_at_tight_budget() {
        let c = Constellation::square_qam(16, 10.0).unwrap();
        let solver = CapacitySolver::new(&c, noise(), &QuadratureSpec::gauss_hermite(32)).unwrap();
        let sol = solver.solve(2.5, 1e-7).unwrap();
        let uni = Pmf::uniform(16);
        let r = kkt_residual(&uni, sol.nu, sol.lambda, solver.engine());
        assert!(r > 1e-3, "uniform PMF should be far from optimal, r = {r}");
    }

    #[test]
    fn perturbed_optimum_residual_grows() {
        let c = Constellation::square_qam(16, 10.0).unwrap();
        let solver = CapacitySolver::new(&c, noise(), &QuadratureSpec::gauss_hermite(32)).unwrap();
        let sol = solver.solve(2.5, 1e-7).unwrap();
        let mut moved = sol.pmf.probs().to_vec();
        let (a, b) = (0usize, 5usize);
        let shift = 0.01 * moved[a];
        moved[a] -= shift;
        moved[b] += shift;
        let moved = Pmf::new(moved).unwrap();
        let r = kkt_residual(&moved, sol.nu, sol.lambda, solver.engine());
        assert!(r > sol.kkt_residual * 10.0);
    }

    #[test]
    fn curve_shapes_on_small_grid() {
        let c = Constellation::square_qam(16, 10.0).unwrap();
        let solver = CapacitySolver::new(&c, noise(), &QuadratureSpec::gauss_hermite(32)).unwrap();
        let grid: Vec<f64> = (0..8).map(|k| 2.0 + 0.5 * k as f64).collect();
        let pts = solver.capacity_curve(&grid, 1e-7).unwrap();
        assert_eq!(pts.len(), 8);
        for w in pts.windows(2) {
            assert!(w[1].capacity >= w[0].capacity - 1e-9);
            assert!(w[1].nu <= w[0].nu + 1e-6);
        }
    }

    #[test]
    fn constant_energy_constellation_curve_is_flat() {
        // two-point equal-energy constellation: the constraint never shapes
        let c = Constellation::new(vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)])
            .unwrap();
        let solver = CapacitySolver::new(&c, noise(), &QuadratureSpec::gauss_hermite(24)).unwrap();
        let pts = solver.capacity_curve(&[1.0, 1.5, 2.0], 1e-7).unwrap();
        for p in &pts {
            assert!((p.capacity - pts[0].capacity).abs() < 1e-9);
            assert!(!p.constraint_active);
        }
    }

    #[test]
    fn solving_with_huge_budget_equals_unconstrained() {
        let c = Constellation::square_qam(16, 10.0).unwrap();
        let solver = CapacitySolver::new(&c, noise(), &QuadratureSpec::gauss_hermite(32)).unwrap();
        let a = solver.solve(1e18, 1e-7).unwrap();
        let b = solver.solve(8.0, 1e-7).unwrap(); // saturation for max 10 is below 8
        assert!((a.mi - b.mi).abs() < 1e-7);
        assert!(!a.power_constraint_active && !b.power_constraint_active);
    }
}
