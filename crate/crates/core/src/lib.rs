//! Finite-dimensional operator algebras, projection lattices and
//! correlation measures for two commuting-or-not observer algebras.
//!
//! The crate is organised bottom-up:
//!
//! - [`matrix`]: complex matrices, spectral decomposition, validated
//!   [`Operator`], [`Projection`] and [`State`] types.
//! - [`lattice`]: meet, join and total coincidence of projections.
//! - [`algebra`]: generated algebras, commutants, centers and central
//!   decompositions.
//! - [`correlation`]: uncorrelated-state tests, the correlation measure of a
//!   state, the causality-violation measure, product states and CHSH.
//! - [`theorem`]: the pipeline showing that uncorrelated states in every
//!   sector force the two algebras to commute.
//! - [`presets`]: named algebra pairs used by the command-line tool.

pub mod algebra;
pub mod correlation;
pub mod error;
pub mod lattice;
pub mod matrix;
pub mod presets;
pub mod random;
pub mod theorem;

pub use algebra::{CentralDecomposition, OperatorAlgebra};
pub use correlation::{CausalityMeasureReport, CorrelationReport, MeasureBudget, SupBudget};
pub use error::{Error, Result};
pub use lattice::{Commutation, MeetMethod, MeetResult};
pub use matrix::{C64, CMatrix, CVector, Operator, Projection, SpectralDecomposition, State};
pub use presets::Preset;
pub use theorem::{Conclusion, ProofTrace, TheoremBudget};
