//! Mutual information, its gradient, output densities, and KL divergences
//! between output densities for additive circularly symmetric complex
//! Gaussian noise.
//!
//! All quantities are in nats. Integrals over the complex output plane use
//! a whitened Gauss-Hermite tensor grid with a cached mixture kernel, or
//! seeded Monte Carlo with deterministic chunked reduction.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::pmf::Pmf;
use crate::quadrature::{gauss_hermite, QuadratureSpec, Scheme};

/// Densities are floored here before logarithms; only reachable at extreme
/// tail nodes.
pub const DENSITY_FLOOR: f64 = 1e-300;

/// Block PMFs are capped at 2^24 entries.
pub const BLOCK_ENTRY_CAP: u64 = 1 << 24;

const MC_CHUNK: usize = 8192;

/// Zero-mean circularly symmetric complex Gaussian noise with total
/// variance E|Z|^2 (0.5 per real dimension when variance is 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    variance: f64,
}

impl NoiseModel {
    pub fn new(variance: f64) -> Result<Self> {
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(Error::InvalidInput(format!(
                "noise variance must be positive, got {variance}"
            )));
        }
        Ok(Self { variance })
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// H(Y|X) = ln(pi e sigma^2) nats per channel use, closed form for the
    /// circular complex Gaussian.
    pub fn conditional_entropy(&self) -> f64 {
        (std::f64::consts::PI * std::f64::consts::E * self.variance).ln()
    }

    /// Density h(z) of the noise at z.
    pub fn density(&self, z: Complex64) -> f64 {
        (-z.norm_sqr() / self.variance).exp() / (std::f64::consts::PI * self.variance)
    }

    fn log_density(&self, z: Complex64) -> f64 {
        -z.norm_sqr() / self.variance - (std::f64::consts::PI * self.variance).ln()
    }
}

/// Spec-facing alias for [`NoiseModel::conditional_entropy`].
pub fn conditional_entropy(noise: &NoiseModel) -> f64 {
    noise.conditional_entropy()
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// Evaluator for information quantities of a fixed (constellation, noise,
/// quadrature) triple.
///
/// For the Gauss-Hermite scheme the Gaussian mixture kernel
/// h(x_i + z_k - x_j) is precomputed once, so every subsequent evaluation
/// is a dense mat-vec. All operations are pure; parallel loops reduce in a
/// fixed order, so results are deterministic for a fixed seed.
pub struct MiEngine {
    points: Vec<Complex64>,
    energies: Vec<f64>,
    noise: NoiseModel,
    spec: QuadratureSpec,
    /// z_kl = sigma (t_k + i t_l), length K (Gauss-Hermite only).
    node_offsets: Vec<Complex64>,
    /// w_k w_l / pi, length K.
    node_weights: Vec<f64>,
    /// Row-major (m*K) x m: kernel[(i*K + k)*m + j] = h(x_i + z_k - x_j).
    kernel: Vec<f64>,
}

impl MiEngine {
    pub fn new(c: &Constellation, noise: NoiseModel, spec: &QuadratureSpec) -> Result<Self> {
        spec.validate()?;
        let mut engine = Self {
            points: c.points().to_vec(),
            energies: c.energies().to_vec(),
            noise,
            spec: *spec,
            node_offsets: Vec::new(),
            node_weights: Vec::new(),
            kernel: Vec::new(),
        };
        if spec.scheme == Scheme::GaussHermite {
            engine.build_grid_and_kernel();
        }
        Ok(engine)
    }

    /// Same constellation and noise on a different Gauss-Hermite grid;
    /// used for node-doubling error estimates.
    pub fn refined(&self, nodes_per_axis: usize) -> Result<Self> {
        let spec = QuadratureSpec {
            scheme: Scheme::GaussHermite,
            nodes_per_axis,
            ..self.spec
        };
        spec.validate()?;
        let mut engine = Self {
            points: self.points.clone(),
            energies: self.energies.clone(),
            noise: self.noise,
            spec,
            node_offsets: Vec::new(),
            node_weights: Vec::new(),
            kernel: Vec::new(),
        };
        engine.build_grid_and_kernel();
        Ok(engine)
    }

    fn build_grid_and_kernel(&mut self) {
        let (t, w) = gauss_hermite(self.spec.nodes_per_axis);
        let sigma = self.noise.variance.sqrt();
        let n = t.len();
        let mut offsets = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for k in 0..n {
            for l in 0..n {
                offsets.push(Complex64::new(sigma * t[k], sigma * t[l]));
                weights.push(w[k] * w[l] / std::f64::consts::PI);
            }
        }
        let m = self.points.len();
        let big_k = offsets.len();
        let mut kernel = vec![0.0f64; m * big_k * m];
        let points = &self.points;
        let noise = self.noise;
        kernel
            .par_chunks_mut(big_k * m)
            .enumerate()
            .for_each(|(i, rows)| {
                for (k, row) in rows.chunks_mut(m).enumerate() {
                    let y = points[i] + offsets[k];
                    for (j, cell) in row.iter_mut().enumerate() {
                        *cell = noise.density(y - points[j]);
                    }
                }
            });
        self.node_offsets = offsets;
        self.node_weights = weights;
        self.kernel = kernel;
    }

    pub fn constellation_size(&self) -> usize {
        self.points.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn quadrature(&self) -> &QuadratureSpec {
        &self.spec
    }

    pub fn conditional_entropy(&self) -> f64 {
        self.noise.conditional_entropy()
    }

    /// Gaussian-mixture output density q(y) = sum_i p_i h(y - x_i).
    pub fn output_density(&self, weights: &[f64], y: Complex64) -> f64 {
        assert_eq!(weights.len(), self.points.len());
        weights
            .iter()
            .zip(&self.points)
            .filter(|(&w, _)| w != 0.0)
            .map(|(&w, &x)| w * self.noise.density(y - x))
            .sum()
    }

    /// E_Z[ln q(x_i + Z)] for each requested row, by the cached grid.
    /// Rows not requested come back as 0.0 and must not be read.
    fn expected_log_q(&self, weights: &[f64], rows: &[bool]) -> Vec<f64> {
        let m = self.points.len();
        let big_k = self.node_weights.len();
        assert!(!self.kernel.is_empty(), "gauss-hermite scheme required");
        let mut out = vec![0.0f64; m];
        out.par_iter_mut().enumerate().for_each(|(i, acc)| {
            if !rows[i] {
                return;
            }
            let base = i * big_k * m;
            let mut local = 0.0f64;
            for k in 0..big_k {
                let row = &self.kernel[base + k * m..base + (k + 1) * m];
                let mut q = 0.0f64;
                for (g, &wj) in row.iter().zip(weights) {
                    q += g * wj;
                }
                local += self.node_weights[k] * q.max(DENSITY_FLOOR).ln();
            }
            *acc = local;
        });
        out
    }

    /// Per-symbol divergences d_i = D(h_i || q_w) for a (possibly
    /// unnormalized) mixture weight vector; this is the building block of
    /// both the mutual information and its gradient.
    pub fn per_symbol_divergence(&self, weights: &[f64]) -> Vec<f64> {
        let rows = vec![true; self.points.len()];
        self.divergences_masked(weights, &rows)
    }

    fn divergences_masked(&self, weights: &[f64], rows: &[bool]) -> Vec<f64> {
        let h_yx = self.noise.conditional_entropy();
        let mut d = self.expected_log_q(weights, rows);
        for v in &mut d {
            *v = -h_yx - *v;
        }
        d
    }

    /// I(p) = H(Y) - H(Y|X) in nats per channel use.
    ///
    /// A degenerate PMF (single nonzero entry) returns 0 exactly with no
    /// integration. Monte Carlo engines return the seeded estimate.
    pub fn mutual_information(&self, p: &Pmf) -> f64 {
        assert_eq!(p.len(), self.points.len(), "PMF misaligned");
        if p.is_degenerate() {
            return 0.0;
        }
        match self.spec.scheme {
            Scheme::GaussHermite => self.mi_functional(p),
            Scheme::MonteCarlo => self.mutual_information_mc(p).value,
        }
    }

    /// Monte Carlo estimate of I(p) with standard error, sampling (X, Z).
    pub fn mutual_information_mc(&self, p: &Pmf) -> McEstimate {
        if p.is_degenerate() {
            return McEstimate {
                value: 0.0,
                std_error: 0.0,
            };
        }
        let c = Constellation::new(self.points.clone()).expect("points already validated");
        block_mutual_information(
            p,
            &c,
            &self.noise,
            1,
            self.spec.mc_samples,
            self.spec.seed,
        )
        .expect("n = 1 block arguments are always valid")
    }

    /// The mutual information functional extended off the simplex
    /// (entries nonnegative, any positive sum); its partial derivatives
    /// are d_i - 1, which is what finite-difference checks probe.
    pub fn mi_functional(&self, weights: &[f64]) -> f64 {
        let rows: Vec<bool> = weights.iter().map(|&w| w != 0.0).collect();
        let d = self.divergences_masked(weights, &rows);
        weights
            .iter()
            .zip(&d)
            .filter(|(&w, _)| w != 0.0)
            .map(|(&w, &di)| w * di)
            .sum()
    }

    /// Gradient of I at p: component i is D(h_i || q) - 1 nats.
    pub fn gradient(&self, p: &Pmf) -> Vec<f64> {
        assert_eq!(p.len(), self.points.len(), "PMF misaligned");
        let mut d = match self.spec.scheme {
            Scheme::GaussHermite => self.per_symbol_divergence(p),
            Scheme::MonteCarlo => self.per_symbol_divergence_mc(p),
        };
        for v in &mut d {
            *v -= 1.0;
        }
        d
    }

    fn per_symbol_divergence_mc(&self, weights: &[f64]) -> Vec<f64> {
        // shared noise draws across symbols: d_i = E[ln h(Z) - ln q(x_i + Z)]
        let m = self.points.len();
        let samples = self.spec.mc_samples;
        let chunks = samples.div_ceil(MC_CHUNK);
        let sums: Vec<Vec<f64>> = (0..chunks)
            .into_par_iter()
            .map(|chunk| {
                let mut rng = chunk_rng(self.spec.seed, chunk as u64);
                let count = MC_CHUNK.min(samples - chunk * MC_CHUNK);
                let mut acc = vec![0.0f64; m];
                for _ in 0..count {
                    let z = sample_noise(&mut rng, self.noise.variance);
                    let ln_h = self.noise.log_density(z);
                    for (i, a) in acc.iter_mut().enumerate() {
                        let q = self.output_density(weights, self.points[i] + z);
                        *a += ln_h - q.max(DENSITY_FLOOR).ln();
                    }
                }
                acc
            })
            .collect();
        let mut d = vec![0.0f64; m];
        for s in &sums {
            for (a, b) in d.iter_mut().zip(s) {
                *a += b;
            }
        }
        for v in &mut d {
            *v /= samples as f64;
        }
        d
    }

    /// KL divergence D(q1 || q2) >= 0 between the output densities of two
    /// input PMFs on this constellation. Tiny negative quadrature results
    /// are clamped to 0 (their magnitude is asserted small).
    pub fn output_kl(&self, p1: &Pmf, p2: &Pmf) -> Result<f64> {
        assert_eq!(p1.len(), self.points.len(), "PMF misaligned");
        assert_eq!(p2.len(), self.points.len(), "PMF misaligned");
        if p2.support_size() == 0 {
            return Err(Error::InvalidInput(
                "second PMF has empty support".into(),
            ));
        }
        let v = match self.spec.scheme {
            Scheme::GaussHermite => {
                let m = self.points.len();
                let big_k = self.node_weights.len();
                let per_row: Vec<f64> = (0..m)
                    .into_par_iter()
                    .map(|i| {
                        if p1[i] == 0.0 {
                            return 0.0;
                        }
                        let base = i * big_k * m;
                        let mut acc = 0.0f64;
                        for k in 0..big_k {
                            let row = &self.kernel[base + k * m..base + (k + 1) * m];
                            let mut q1 = 0.0f64;
                            let mut q2 = 0.0f64;
                            for ((g, &a), &b) in row.iter().zip(p1.probs()).zip(p2.probs()) {
                                q1 += g * a;
                                q2 += g * b;
                            }
                            acc += self.node_weights[k]
                                * (q1.max(DENSITY_FLOOR).ln() - q2.max(DENSITY_FLOOR).ln());
                        }
                        p1[i] * acc
                    })
                    .collect();
                per_row.iter().sum::<f64>()
            }
            Scheme::MonteCarlo => {
                let c =
                    Constellation::new(self.points.clone()).expect("points already validated");
                block_output_kl(
                    p1,
                    p2,
                    &c,
                    &self.noise,
                    1,
                    self.spec.mc_samples,
                    self.spec.seed,
                )?
                .value
            }
        };
        if self.spec.scheme == Scheme::GaussHermite {
            debug_assert!(v > -1e-6, "output KL below -1e-6: {v}");
        }
        Ok(v.max(0.0))
    }
}

fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut s = [0u8; 32];
    s[..8].copy_from_slice(&seed.to_le_bytes());
    s[8..16].copy_from_slice(&chunk.to_le_bytes());
    ChaCha8Rng::from_seed(s)
}

fn sample_noise(rng: &mut ChaCha8Rng, variance: f64) -> Complex64 {
    let half = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(half * re, half * im)
}

fn checked_block_len(m: usize, n: u32) -> Result<usize> {
    let required = (m as u128).checked_pow(n).unwrap_or(u128::MAX);
    if required > BLOCK_ENTRY_CAP as u128 {
        return Err(Error::BlockTooLarge {
            required,
            cap: BLOCK_ENTRY_CAP,
        });
    }
    Ok(required as usize)
}

struct BlockSampler<'a> {
    joint: &'a [f64],
    cdf: Vec<f64>,
    points: &'a [Complex64],
    noise: NoiseModel,
    n: usize,
    m: usize,
}

impl<'a> BlockSampler<'a> {
    fn new(joint: &'a [f64], points: &'a [Complex64], noise: NoiseModel, n: usize) -> Self {
        let mut cdf = Vec::with_capacity(joint.len());
        let mut acc = 0.0f64;
        for &p in joint {
            acc += p;
            cdf.push(acc);
        }
        Self {
            joint,
            cdf,
            points,
            noise,
            n,
            m: points.len(),
        }
    }

    fn draw_index(&self, rng: &mut ChaCha8Rng) -> usize {
        let u: f64 = rng.gen();
        let idx = self.cdf.partition_point(|&c| c <= u);
        idx.min(self.joint.len() - 1)
    }

    /// ln q^(n)(y) by contracting the joint tensor one axis at a time.
    fn log_q(&self, y: &[Complex64], scratch: &mut Vec<f64>, scratch2: &mut Vec<f64>) -> f64 {
        let m = self.m;
        // per-position likelihood tables H_t[j] = h(y_t - x_j)
        let mut tables = Vec::with_capacity(self.n);
        for t in 0..self.n {
            let mut h = Vec::with_capacity(m);
            for j in 0..m {
                h.push(self.noise.density(y[t] - self.points[j]));
            }
            tables.push(h);
        }
        // contract trailing axes: position n-1 first (least significant digit)
        scratch.clear();
        scratch.extend_from_slice(self.joint);
        for t in (0..self.n).rev() {
            let h = &tables[t];
            let rows = scratch.len() / m;
            scratch2.clear();
            scratch2.reserve(rows);
            for r in 0..rows {
                let row = &scratch[r * m..(r + 1) * m];
                let mut acc = 0.0f64;
                for (v, hj) in row.iter().zip(h) {
                    acc += v * hj;
                }
                scratch2.push(acc);
            }
            std::mem::swap(scratch, scratch2);
        }
        debug_assert_eq!(scratch.len(), 1);
        scratch[0].max(DENSITY_FLOOR).ln()
    }
}

/// Mutual information of a joint PMF over m^n block symbols, in nats per
/// block, estimated by seeded Monte Carlo: sample (X, Z), average
/// -ln q(y) + ln h(z). H(Y^n|X^n) = n ln(pi e sigma^2) enters exactly.
pub fn block_mutual_information(
    pn: &Pmf,
    c: &Constellation,
    noise: &NoiseModel,
    n: u32,
    mc_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    let len = checked_block_len(c.size(), n)?;
    if pn.len() != len {
        return Err(Error::InvalidInput(format!(
            "joint PMF has {} entries, expected {}^{} = {}",
            pn.len(),
            c.size(),
            n,
            len
        )));
    }
    if pn.is_degenerate() {
        return Ok(McEstimate {
            value: 0.0,
            std_error: 0.0,
        });
    }
    let nu = n as usize;
    let sampler = BlockSampler::new(pn.probs(), c.points(), *noise, nu);
    let variance = noise.variance();
    let est = run_block_mc_seeded(seed, mc_samples, "block mutual information", |rng, s1, s2| {
        let idx = sampler.draw_index(rng);
        let mut y = Vec::with_capacity(nu);
        let mut ln_h = 0.0f64;
        let mut rest = idx;
        // symbol 1 is the most significant base-m digit
        let mut digits = vec![0usize; nu];
        for t in (0..nu).rev() {
            digits[t] = rest % sampler.m;
            rest /= sampler.m;
        }
        for &digit in digits.iter() {
            let z = sample_noise(rng, variance);
            ln_h += NoiseModel { variance }.log_density(z);
            y.push(sampler.points[digit] + z);
        }
        -sampler.log_q(&y, s1, s2) + ln_h
    });
    Ok(est)
}

/// Monte Carlo estimate of D(q1^(n) || q2^(n)) between block output
/// densities, sampling Y from the first mixture.
pub fn block_output_kl(
    p1: &Pmf,
    p2: &Pmf,
    c: &Constellation,
    noise: &NoiseModel,
    n: u32,
    mc_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    let len = checked_block_len(c.size(), n)?;
    if p1.len() != len || p2.len() != len {
        return Err(Error::InvalidInput(format!(
            "joint PMFs must have {}^{} = {} entries",
            c.size(),
            n,
            len
        )));
    }
    if p2.support_size() == 0 {
        return Err(Error::InvalidInput("second PMF has empty support".into()));
    }
    let nu = n as usize;
    let s1 = BlockSampler::new(p1.probs(), c.points(), *noise, nu);
    let s2 = BlockSampler::new(p2.probs(), c.points(), *noise, nu);
    let variance = noise.variance();
    let est = run_block_mc_seeded(seed, mc_samples, "block output KL", |rng, b1, b2| {
        let idx = s1.draw_index(rng);
        let mut y = Vec::with_capacity(nu);
        let mut rest = idx;
        let mut digits = vec![0usize; nu];
        for t in (0..nu).rev() {
            digits[t] = rest % s1.m;
            rest /= s1.m;
        }
        for &digit in digits.iter() {
            let z = sample_noise(rng, variance);
            y.push(s1.points[digit] + z);
        }
        s1.log_q(&y, b1, b2) - s2.log_q(&y, b1, b2)
    });
    Ok(McEstimate {
        value: est.value.max(0.0),
        std_error: est.std_error,
    })
}

fn run_block_mc_seeded<F>(seed: u64, samples: usize, label: &str, per_sample: F) -> McEstimate
where
    F: Fn(&mut ChaCha8Rng, &mut Vec<f64>, &mut Vec<f64>) -> f64 + Sync,
{
    use std::sync::atomic::{AtomicUsize, Ordering};
    let chunks = samples.div_ceil(MC_CHUNK);
    let done = AtomicUsize::new(0);
    let partials: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = chunk_rng(seed, chunk as u64);
            let count = MC_CHUNK.min(samples - chunk * MC_CHUNK);
            let mut scratch = Vec::new();
            let mut scratch2 = Vec::new();
            let mut sum = 0.0f64;
            let mut sumsq = 0.0f64;
            for _ in 0..count {
                let s = per_sample(&mut rng, &mut scratch, &mut scratch2);
                sum += s;
                sumsq += s * s;
            }
            let prev = done.fetch_add(count, Ordering::Relaxed);
            if samples >= 100_000 {
                let decile = |x: usize| 10 * x / samples;
                if decile(prev + count) > decile(prev) {
                    log::info!("{label}: {}0% of {samples} samples", decile(prev + count));
                }
            }
            (sum, sumsq)
        })
        .collect();
    let mut sum = 0.0f64;
    let mut sumsq = 0.0f64;
    for (s, s2) in partials {
        sum += s;
        sumsq += s2;
    }
    let nf = samples as f64;
    let mean = sum / nf;
    let var = ((sumsq - sum * sum / nf) / (nf - 1.0)).max(0.0);
    McEstimate {
        value: mean,
        std_error: (var / nf).sqrt(),
    }
}
