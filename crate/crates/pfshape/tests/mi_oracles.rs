//! Independent numerical oracles for the information engine: brute-force
//! 1D/2D grid integration, Monte Carlo cross-checks, and closed forms.

use num_complex::Complex64;
use pfshape::mi::{block_mutual_information, MiEngine, NoiseModel};
use pfshape::pmf::Pmf;
use pfshape::quadrature::QuadratureSpec;
use pfshape::Constellation;

fn noise_unit() -> NoiseModel {
    NoiseModel::new(1.0).unwrap()
}

/// Brute-force 1D oracle for the binary antipodal constellation {-1, +1}
/// with uniform input: only the in-phase axis carries information, so
/// I = h(Y_r) - h(Z_r) with Z_r ~ N(0, sigma^2/2), by trapezoidal
/// integration on a fine grid.
fn antipodal_mi_oracle(sigma2: f64) -> f64 {
    let var = sigma2 / 2.0;
    let g = |y: f64, mu: f64| {
        (-(y - mu) * (y - mu) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
    };
    let (a, b, n) = (-12.0f64, 12.0f64, 2_400_000usize);
    let h = (b - a) / n as f64;
    let mut acc = 0.0f64;
    for k in 0..=n {
        let y = a + k as f64 * h;
        let f = 0.5 * (g(y, -1.0) + g(y, 1.0));
        let v = if f > 0.0 { -f * f.ln() } else { 0.0 };
        acc += if k == 0 || k == n { 0.5 * v } else { v };
    }
    let h_y = acc * h;
    let h_z = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * var).ln();
    h_y - h_z
}

#[test]
fn antipodal_mi_matches_1d_oracle() {
    let oracle = antipodal_mi_oracle(1.0);
    // frozen from the oracle itself; pins regressions in either path
    assert!(
        (oracle - 0.5000721).abs() < 1e-6,
        "oracle drifted: {oracle}"
    );
    let c = Constellation::new(vec![Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)])
        .unwrap();
    let engine = MiEngine::new(&c, noise_unit(), &QuadratureSpec::gauss_hermite(48)).unwrap();
    let mi = engine.mutual_information(&Pmf::uniform(2));
    assert!(
        (mi - oracle).abs() < 1e-6,
        "engine {mi} vs oracle {oracle}"
    );
}

/// Full 2D trapezoidal oracle on an asymmetric 3-point constellation;
/// slow but entirely independent of the Gauss-Hermite machinery.
#[test]
fn three_point_mi_matches_2d_grid_oracle() {
    let pts = [
        Complex64::new(0.4, 0.1),
        Complex64::new(-0.9, 0.6),
        Complex64::new(0.2, -1.1),
    ];
    let c = Constellation::new(pts.to_vec()).unwrap();
    let sigma2 = 0.8;
    let noise = NoiseModel::new(sigma2).unwrap();
    let p = Pmf::new(vec![0.5, 0.2, 0.3]).unwrap();

    let (lo, hi, n) = (-7.0f64, 7.0f64, 700usize);
    let h = (hi - lo) / n as f64;
    let dens = |y: Complex64| -> f64 {
        p.iter()
            .zip(&pts)
            .map(|(&pi, &x)| {
                pi * (-(y - x).norm_sqr() / sigma2).exp() / (std::f64::consts::PI * sigma2)
            })
            .sum()
    };
    let mut h_y = 0.0f64;
    for i in 0..=n {
        for j in 0..=n {
            let y = Complex64::new(lo + i as f64 * h, lo + j as f64 * h);
            let q = dens(y);
            if q > 0.0 {
                let mut v = -q * q.ln();
                if i == 0 || i == n {
                    v *= 0.5;
                }
                if j == 0 || j == n {
                    v *= 0.5;
                }
                h_y += v;
            }
        }
    }
    h_y *= h * h;
    let oracle = h_y - noise.conditional_entropy();

    let engine = MiEngine::new(&c, noise, &QuadratureSpec::gauss_hermite(48)).unwrap();
    let mi = engine.mutual_information(&p);
    assert!(
        (mi - oracle).abs() < 1e-5,
        "engine {mi} vs 2d oracle {oracle}"
    );
}

#[test]
fn mc_and_quadrature_agree_on_16qam() {
    let c = Constellation::square_qam(16, 10.0).unwrap();
    let noise = noise_unit();
    let engine = MiEngine::new(&c, noise, &QuadratureSpec::gauss_hermite(40)).unwrap();
    let p = Pmf::new(vec![
        0.10, 0.05, 0.05, 0.10, 0.05, 0.10, 0.10, 0.05, 0.05, 0.10, 0.10, 0.05, 0.10, 0.05,
        0.05, 0.10 - 1e-17,
    ])
    .unwrap();
    let exact = engine.mutual_information(&p);
    let est = block_mutual_information(&p, &c, &noise, 1, 400_000, 42).unwrap();
    assert!(
        (est.value - exact).abs() <= 4.0 * est.std_error,
        "mc {} ± {} vs quadrature {exact}",
        est.value,
        est.std_error
    );
}

#[test]
fn block_mi_of_product_is_additive() {
    let c = Constellation::square_qam(4, 2.0).unwrap();
    let noise = noise_unit();
    let engine = MiEngine::new(&c, noise, &QuadratureSpec::gauss_hermite(32)).unwrap();
    let p = Pmf::new(vec![0.4, 0.3, 0.2, 0.1]).unwrap();
    let single = engine.mutual_information(&p);
    let joint = pfshape::product_pmf(&p, 2).unwrap();
    let est = block_mutual_information(&joint, &c, &noise, 2, 300_000, 9).unwrap();
    assert!(
        (est.value - 2.0 * single).abs() <= 3.0 * est.std_error.max(1e-3),
        "block {} ± {} vs 2 x {single}",
        est.value,
        est.std_error
    );
}

#[test]
fn gradient_matches_finite_differences_of_raw_functional() {
    let c = Constellation::square_qam(4, 2.0).unwrap();
    let engine = MiEngine::new(&c, noise_unit(), &QuadratureSpec::gauss_hermite(48)).unwrap();
    let p = Pmf::new(vec![0.37, 0.23, 0.21, 0.19]).unwrap();
    let grad = engine.gradient(&p);
    let eps = 1e-5;
    for i in 0..4 {
        let mut up = p.probs().to_vec();
        let mut dn = p.probs().to_vec();
        up[i] += eps;
        dn[i] -= eps;
        let fd = (engine.mi_functional(&up) - engine.mi_functional(&dn)) / (2.0 * eps);
        assert!(
            (grad[i] - fd).abs() < 1e-7,
            "component {i}: analytic {} vs fd {fd}",
            grad[i]
        );
    }
}

#[test]
fn output_kl_upper_bounded_by_input_kl() {
    use rand::{Rng, SeedableRng};
    let c = Constellation::square_qam(4, 2.0).unwrap();
    let engine = MiEngine::new(&c, noise_unit(), &QuadratureSpec::gauss_hermite(32)).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
    for _ in 0..50 {
        let a: Vec<f64> = (0..4).map(|_| rng.gen_range(0.01..1.0)).collect();
        let b: Vec<f64> = (0..4).map(|_| rng.gen_range(0.01..1.0)).collect();
        let p1 = Pmf::normalized(a).unwrap();
        let p2 = Pmf::normalized(b).unwrap();
        let dq = engine.output_kl(&p1, &p2).unwrap();
        let dp = pfshape::kl_pmf(&p1, &p2);
        assert!(dq <= dp + 1e-9, "D(q1||q2) = {dq} > D(p1||p2) = {dp}");
        assert!(dq >= 0.0);
    }
}
