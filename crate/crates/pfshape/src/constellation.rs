//! Signal constellations and their energy vectors.

use num_complex::Complex64;
use serde::Deserialize;

use crate::error::{Error, Result};

/// A finite set of complex signal amplitudes with cached per-point
/// energies w_i = |x_i|^2. Immutable after construction.
#[derive(Debug, Clone)]
pub struct Constellation {
    points: Vec<Complex64>,
    energies: Vec<f64>,
    label: Option<String>,
}

#[derive(Deserialize)]
struct ConstellationFile {
    points: Vec<[f64; 2]>,
    #[serde(default)]
    label: Option<String>,
}

impl Constellation {
    pub fn new(points: Vec<Complex64>) -> Result<Self> {
        Self::with_label(points, None)
    }

    pub fn with_label(points: Vec<Complex64>, label: Option<String>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidConstellation("no signal points".into()));
        }
        if points.iter().any(|p| !p.re.is_finite() || !p.im.is_finite()) {
            return Err(Error::InvalidConstellation(
                "points must have finite coordinates".into(),
            ));
        }
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                if points[i] == points[j] {
                    return Err(Error::InvalidConstellation(format!(
                        "points {i} and {j} coincide at {}",
                        points[i]
                    )));
                }
            }
        }
        let energies = points.iter().map(|p| p.norm_sqr()).collect();
        Ok(Self {
            points,
            energies,
            label,
        })
    }

    /// Square QAM grid with `order` points, scaled so the corner points
    /// have energy exactly `max_energy`.
    ///
    /// Indexing is row-major over the grid: rows run from the largest to
    /// the smallest imaginary part, columns from the most negative to the
    /// most positive real part. PMF vectors align to this order.
    pub fn square_qam(order: usize, max_energy: f64) -> Result<Self> {
        let k = (order as f64).sqrt().round() as usize;
        if order < 4 || k * k != order {
            return Err(Error::InvalidOrder(order));
        }
        if !(max_energy > 0.0) || !max_energy.is_finite() {
            return Err(Error::InvalidScale(max_energy));
        }
        // corner coordinate is (k-1)*s on each axis: 2*((k-1)*s)^2 = max_energy
        let s = (max_energy / (2.0 * ((k - 1) as f64).powi(2))).sqrt();
        let mut points = Vec::with_capacity(order);
        for row in 0..k {
            let im = ((k - 1) as f64 - 2.0 * row as f64) * s;
            for col in 0..k {
                let re = (2.0 * col as f64 - (k - 1) as f64) * s;
                points.push(Complex64::new(re, im));
            }
        }
        Self::with_label(points, Some(format!("{order}-QAM max|x|^2={max_energy}")))
    }

    /// Parses the JSON constellation file format:
    /// `{"points": [[re, im], ...], "label": "..."}` (label optional).
    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: ConstellationFile = serde_json::from_str(s)?;
        let points = file
            .points
            .into_iter()
            .map(|[re, im]| Complex64::new(re, im))
            .collect();
        Self::with_label(points, file.label)
    }

    pub fn from_json_file(path: &std::path::Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn size(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Cached energy vector w with w_i = |x_i|^2.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    /// (min, max) of the energy vector. Any average power constraint below
    /// the minimum is infeasible for a PMF on this constellation.
    pub fn feasible_energy_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &w in &self.energies {
            lo = lo.min(w);
            hi = hi.max(w);
        }
        (lo, hi)
    }
}

/// Spec-facing alias for [`Constellation::square_qam`].
pub fn make_square_qam(order: usize, max_energy: f64) -> Result<Constellation> {
    Constellation::square_qam(order, max_energy)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qam64_max20_energies() {
        let c = Constellation::square_qam(64, 20.0).unwrap();
        assert_eq!(c.size(), 64);
        let (lo, hi) = c.feasible_energy_range();
        assert!((hi - 20.0).abs() < 1e-12);
        assert!((lo - 20.0 / 49.0).abs() < 1e-12);
    }

    #[test]
    fn qpsk_all_energies_equal() {
        let c = Constellation::square_qam(4, 2.0).unwrap();
        for &w in c.energies() {
            assert!((w - 2.0).abs() < 1e-15);
        }
        let (lo, hi) = c.feasible_energy_range();
        assert_eq!(lo, hi);
    }

    #[test]
    fn invalid_orders_and_scales() {
        assert!(matches!(
            Constellation::square_qam(8, 10.0),
            Err(Error::InvalidOrder(8))
        ));
        assert!(matches!(
            Constellation::square_qam(2, 10.0),
            Err(Error::InvalidOrder(2))
        ));
        assert!(matches!(
            Constellation::square_qam(64, 0.0),
            Err(Error::InvalidScale(_))
        ));
        assert!(matches!(
            Constellation::square_qam(64, -3.0),
            Err(Error::InvalidScale(_))
        ));
    }

    #[test]
    fn two_point_range() {
        let c = Constellation::new(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)])
            .unwrap();
        assert_eq!(c.feasible_energy_range(), (0.0, 1.0));
    }

    #[test]
    fn scaling_points_scales_energies_quadratically() {
        let c = Constellation::square_qam(16, 5.0).unwrap();
        let s = 3.0;
        let scaled =
            Constellation::new(c.points().iter().map(|p| p * s).collect()).unwrap();
        for (a, b) in c.energies().iter().zip(scaled.energies()) {
            assert!((b - a * s * s).abs() < 1e-12 * b.max(1.0));
        }
    }

    #[test]
    fn qam_rotation_symmetry() {
        // rotating the grid by 90 degrees permutes the point set
        let c = Constellation::square_qam(16, 8.0).unwrap();
        let rot = Complex64::new(0.0, 1.0);
        for p in c.points() {
            let q = p * rot;
            assert!(
                c.points().iter().any(|r| (r - q).norm() < 1e-12),
                "rotated point {q} missing"
            );
        }
    }

    #[test]
    fn grid_mean_energy_matches_brute_force() {
        // sum of energies equals order * (mean grid energy)
        let c = Constellation::square_qam(64, 20.0).unwrap();
        let total: f64 = c.energies().iter().sum();
        // per-axis coordinates a in {±s, ±3s, ±5s, ±7s}, s^2 = 10/49:
        // mean a^2 = (10/49)(1+9+25+49)/4 = 30/7, mean energy = 60/7
        assert!((total / 64.0 - 60.0 / 7.0).abs() < 1e-12);
        let brute: f64 = c.points().iter().map(|p| p.norm_sqr()).sum();
        assert!((total - brute).abs() < 1e-12);
    }

    #[test]
    fn json_roundtrip_and_duplicates() {
        let c =
            Constellation::from_json_str(r#"{"points": [[0,0],[1,0],[0,1]], "label": "tri"}"#)
                .unwrap();
        assert_eq!(c.size(), 3);
        assert_eq!(c.label(), Some("tri"));
        assert!(Constellation::from_json_str(r#"{"points": [[1,0],[1,0]]}"#).is_err());
    }
}
