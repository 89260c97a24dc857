//! Minimal-distortion diffeomorphisms between closed planar curves.
//!
//! The deformation energy of a diffeomorphism `h: M → N` integrates the squared
//! norm of the strain `h*g_N − g_M`. For curves it reduces, in arc-length
//! coordinates, to `Ψ(u) = ∫ (u̇² − 1)² dt`. This crate evaluates both forms,
//! minimizes `Ψ` over monotone maps, and provides the closed-form minimizers,
//! second-variation diagnostics and minimizing-sequence constructions.

pub mod analysis;
pub mod error;
pub mod functional;
pub mod geometry;
pub mod io;
pub mod optimizer;
pub mod tensor;

pub use analysis::{Diagnosis, Regime};
pub use error::{Error, Result};
pub use functional::{EnergyReport, Mode, Reparametrization};
pub use geometry::{parametrize, ArcLengthParam, Curve, Orientation};
pub use optimizer::{minimize_psi, SolveResult, SolverConfig};
