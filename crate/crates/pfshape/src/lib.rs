//! Capacity-achieving input distributions for finite signal constellations
//! under an average power constraint in additive Gaussian noise, their
//! optimal dyadic approximations via Geometric Huffman Coding, and the
//! resulting prefix-free modulation codes.
//!
//! The pipeline:
//!
//! 1. [`solver::solve_capacity`] finds the capacity-achieving PMF p* of a
//!    [`Constellation`] for a power budget, certified by its KKT residual,
//!    with the shadow price nu* = C'(E*).
//! 2. [`dyadic::ghc`] approximates p* by the dyadic PMF minimizing
//!    D(dyadic || p*); [`dyadic::build_prefix_code`] turns it into a
//!    prefix-free modulation code that maps fair data bits to symbols.
//! 3. [`block::design_block`] applies the same construction to the n-fold
//!    product PMF, shrinking the gap to the target operating point.
//! 4. [`analysis`] locates designs in the (E, I) plane and verifies the
//!    operating-point identity tying them to the capacity curve;
//!    [`baselines`] provides the sampled-Gaussian and Huffman-shaping
//!    comparison curves.
//!
//! All information quantities are in nats.

pub mod analysis;
pub mod baselines;
pub mod block;
pub mod constellation;
pub mod dyadic;
pub mod error;
pub mod mi;
pub mod pmf;
pub mod quadrature;
pub mod solver;

pub use analysis::{
    operating_point, operating_point_with, prop1_block_residual, prop1_residual,
    prop1_residual_with, slope_consistency, OperatingPoint, Prop1Report,
};
pub use baselines::{
    huffman_shaping_point, lambda_for_energy, sampled_gaussian_pmf, sg_curve, SgCurvePoint,
};
pub use block::{design_block, product_pmf, BlockDesign};
pub use constellation::{make_square_qam, Constellation};
pub use dyadic::{
    build_prefix_code, decode, encode, ghc, ghc_bruteforce, huffman_lengths, DyadicPmf,
    PrefixCode,
};
pub use error::{Error, Result};
pub use mi::{
    block_mutual_information, block_output_kl, conditional_entropy, McEstimate, MiEngine,
    NoiseModel,
};
pub use pmf::{kl_pmf, Pmf};
pub use quadrature::{gauss_hermite, QuadratureSpec, Scheme};
pub use solver::{
    capacity_curve, kkt_residual, solve_capacity, CapacityCurvePoint, CapacitySolution,
    CapacitySolver,
};
