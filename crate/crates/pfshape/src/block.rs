//! Block shaping: n-fold product PMFs, their dyadic approximation, and
//! per-channel-use operating points.
//!
//! Jointly modulating n consecutive symbols with the dyadic approximation
//! of the product PMF drives the per-use operating point to the target as
//! n grows; the n = 1 and n = 2 designs already show most of the gain.

use serde::{Deserialize, Serialize};

use crate::constellation::Constellation;
use crate::dyadic::{ghc, DyadicPmf};
use crate::error::{Error, Result};
use crate::mi::{block_mutual_information, MiEngine, NoiseModel, BLOCK_ENTRY_CAP};
use crate::pmf::Pmf;
use crate::quadrature::QuadratureSpec;
use crate::solver::CapacitySolution;

/// A joint dyadic design over m^n block symbols with its per-channel-use
/// operating point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockDesign {
    /// Symbols per codeword.
    pub n: u32,
    /// GHC approximation of the joint capacity-achieving PMF.
    pub joint_dyadic: DyadicPmf,
    /// E_n = E(joint)/n, exact finite sum (energy per channel use).
    pub per_symbol_energy: f64,
    /// I_n = I(joint)/n in nats per channel use.
    pub per_symbol_mi: f64,
    /// Standard error of `per_symbol_mi` when Monte Carlo was used.
    pub per_symbol_mi_std_error: f64,
    /// D(joint dyadic || joint product)/n in nats per channel use.
    pub per_symbol_kl: f64,
}

fn checked_len(m: usize, n: u32) -> Result<usize> {
    if n == 0 {
        return Err(Error::InvalidInput("block length n must be >= 1".into()));
    }
    let required = (m as u128).checked_pow(n).unwrap_or(u128::MAX);
    if required > BLOCK_ENTRY_CAP as u128 {
        return Err(Error::BlockTooLarge {
            required,
            cap: BLOCK_ENTRY_CAP,
        });
    }
    Ok(required as usize)
}

/// The n-fold product PMF over m^n tuples; index order is base-m
/// positional with symbol 1 as the most significant digit.
pub fn product_pmf(p: &Pmf, n: u32) -> Result<Pmf> {
    let m = p.len();
    let len = checked_len(m, n)?;
    let mut out = vec![1.0f64; 1];
    for _ in 0..n {
        let mut next = Vec::with_capacity(out.len() * m);
        for &v in &out {
            for &pi in p.probs() {
                next.push(v * pi);
            }
        }
        out = next;
    }
    debug_assert_eq!(out.len(), len);
    // exact products can drift from sum 1 by rounding; renormalize
    Pmf::normalized(out)
}

/// Total block energy E(p^(n)) = sum_x p(x) ||x||^2 of a joint
/// distribution (dyadic or not), exact finite sum.
pub fn block_energy(joint: &[f64], c: &Constellation, n: u32) -> Result<f64> {
    let m = c.size();
    let len = checked_len(m, n)?;
    if joint.len() != len {
        return Err(Error::InvalidInput(format!(
            "joint distribution has {} entries, expected {len}",
            joint.len()
        )));
    }
    let w = c.energies();
    let mut acc = 0.0f64;
    for (idx, &p) in joint.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let mut rest = idx;
        let mut e = 0.0f64;
        for _ in 0..n {
            e += w[rest % m];
            rest /= m;
        }
        acc += p * e;
    }
    Ok(acc)
}

/// Build the n-symbol block design for a capacity solution: GHC of the
/// product PMF, exact per-use energy, Monte Carlo (n >= 2) or quadrature
/// (n = 1) per-use mutual information, and the per-use input KL.
pub fn design_block(
    sol: &CapacitySolution,
    c: &Constellation,
    noise: &NoiseModel,
    n: u32,
    quad: &QuadratureSpec,
) -> Result<BlockDesign> {
    let joint = product_pmf(&sol.pmf, n)?;
    let dyadic = ghc(&joint)?;
    let nf = n as f64;
    let per_symbol_energy = block_energy(dyadic.probs(), c, n)? / nf;
    let per_symbol_kl = dyadic.kl_to(&joint) / nf;
    let dyadic_pmf = dyadic.to_pmf();
    let (mi, se) = if n == 1 {
        let engine = MiEngine::new(c, *noise, quad)?;
        (engine.mutual_information(&dyadic_pmf), 0.0)
    } else {
        let est = block_mutual_information(&dyadic_pmf, c, noise, n, quad.mc_samples, quad.seed)?;
        (est.value, est.std_error)
    };
    Ok(BlockDesign {
        n,
        joint_dyadic: dyadic,
        per_symbol_energy,
        per_symbol_mi: mi / nf,
        per_symbol_mi_std_error: se / nf,
        per_symbol_kl,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn product_base_cases() {
        let p = Pmf::new(vec![0.25, 0.75]).unwrap();
        let one = product_pmf(&p, 1).unwrap();
        assert_eq!(one.probs(), p.probs());

        let p = Pmf::new(vec![0.5, 0.5]).unwrap();
        let two = product_pmf(&p, 2).unwrap();
        assert_eq!(two.probs(), &[0.25, 0.25, 0.25, 0.25]);
    }

    #[test]
    fn product_index_order_is_positional() {
        let p = Pmf::new(vec![0.7, 0.3]).unwrap();
        let two = product_pmf(&p, 2).unwrap();
        // index = i1 * m + i2 with symbol 1 most significant
        assert!((two[1] - 0.7 * 0.3).abs() < 1e-15);
        assert!((two[2] - 0.3 * 0.7).abs() < 1e-15);
    }

    #[test]
    fn block_energy_matches_linearity() {
        let c = Constellation::square_qam(4, 2.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for n in [2u32, 3] {
            let raw: Vec<f64> = (0..4).map(|_| rng.gen_range(0.01..1.0)).collect();
            let p = Pmf::normalized(raw).unwrap();
            let joint = product_pmf(&p, n).unwrap();
            let total = block_energy(joint.probs(), &c, n).unwrap();
            let per_use = p.mean_energy(c.energies());
            assert!(
                (total / n as f64 - per_use).abs() < 1e-12,
                "n = {n}: {total} vs {per_use}"
            );
        }
    }

    #[test]
    fn cap_is_enforced() {
        let p = Pmf::uniform(64);
        assert!(matches!(
            product_pmf(&p, 5),
            Err(Error::BlockTooLarge { .. })
        ));
        assert!(product_pmf(&p, 4).is_ok());
        assert!(matches!(
            product_pmf(&p, 0),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn degenerate_zero_energy_design() {
        use num_complex::Complex64;
        // point mass on a zero-energy symbol maps to (0, 0) for all n
        let c = Constellation::new(vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        ])
        .unwrap();
        let noise = NoiseModel::new(1.0).unwrap();
        let sol = CapacitySolution {
            pmf: Pmf::point_mass(2, 0),
            nu: 0.0,
            lambda: 0.0,
            mu: vec![0.0, 0.0],
            energy: 0.0,
            mi: 0.0,
            kkt_residual: 0.0,
            power_constraint_active: false,
            e_bar: 0.0,
            evaluations: 0,
        };
        for n in [1u32, 2] {
            let d = design_block(&sol, &c, &noise, n, &QuadratureSpec::gauss_hermite(16))
                .unwrap();
            assert_eq!(d.per_symbol_energy, 0.0);
            assert_eq!(d.per_symbol_mi, 0.0);
            assert_eq!(d.per_symbol_kl, 0.0);
        }
    }
}
