//! Numerical laboratory for the convective Allen-Cahn equation
//!
//! ```text
//! ∂t c + v·∇c = m_ε (Δc − ε⁻² f(c)),   m_ε = m₀ ε^θ
//! ```
//!
//! on the unit box. The crate provides the optimal profile and surface
//! tension, stream-function velocities and divergence-free test fields,
//! characteristic flow maps with their Jacobians, an explicit
//! finite-difference solver, the transported-profile approximation `c_A`,
//! the discrete capillary functional `⟨H^ε, φ⟩` with its sharp-interface
//! limits, and Lagrangian front-tracking oracles for the interface motion
//! laws. The [`sweep`] module ties these into ε-ladders and log-log rate
//! fits.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod config;
pub mod error;
pub mod fields;
pub mod functionals;
pub mod geometry;
pub mod grid;
pub mod oracles;
pub mod profile;
pub mod scenario;
pub mod solver;
pub mod sweep;

pub use error::{Error, Result};

/// Points and vectors in the plane.
pub type Vec2 = nalgebra::Vector2<f64>;
/// 2×2 matrices (velocity gradients, flow-map Jacobians).
pub type Mat2 = nalgebra::Matrix2<f64>;
