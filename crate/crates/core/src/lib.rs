//! Exact finite models of measure-preserving automorphisms and the diagnostic
//! functionals used to study generic extensions: mixing and rigidity
//! functionals, weak-limit detection, spectral singularity classification,
//! sequence entropy and cocycle diagnostics.
//!
//! Every system lives on a [`CellSpace`] of `n` equal-mass cells, so every
//! measure is an exact rational `k / n`. Set functionals return
//! [`Rational`] values; floating point appears only inside entropy logarithms
//! and spectral kernels.
//!
//! Koopman convention, used everywhere: `(Tf)(x) = f(T⁻¹x)`, so that
//! `⟨Tʲ1_B, 1_A⟩ = μ(A ∩ TʲB)`.

pub mod asymptotics;
pub mod cellsys;
mod error;
pub mod extlab;
pub mod rng;
pub mod seqentropy;
pub mod spectral;
pub mod zoo;

pub use cellsys::{
    build_skew, direct_product, halmos_distance, CellAutomorphism, CellFunction, CellSet,
    CellSpace, DenseFamily, HalmosDistance, SkewSystem, DEFAULT_CELL_CAP,
};
pub use error::{Error, Result};
pub use seqentropy::Partition;

/// Exact rational used for measures and set functionals.
pub type Rational = num_rational::Ratio<i128>;

/// Converts an exact rational to the nearest `f64`.
pub fn to_f64(r: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}
