//! Verification engine for conformally invariant curvature energies of
//! immersed 4-manifolds in ℝ^m (m ≥ 5).
//!
//! The crate evaluates extrinsic differential geometry through truncated jet
//! arithmetic (exact pointwise derivatives), integrates curvature energies
//! over closed presets, and checks the conservation-law, structural-algebra
//! and return-to-geometry identities numerically to tight tolerances.

pub mod chart;
pub mod energy;
pub mod flow;
pub mod geometry;
pub mod jet;
pub mod multivector;
pub mod noether;
pub mod potential;
pub mod report;
pub mod structures;
pub mod suite;
