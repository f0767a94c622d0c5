//! Bosonic Kitaev dimer: `H = (a† + a)(b† + b) + μ(a†a + b†b)`.
//!
//! Two complementary views of the same quadratic model:
//!
//! * [`fock`] and [`dynamics`] represent `H` on a truncated two-mode Fock
//!   space and propagate states by exact diagonalization;
//! * [`core_matrix`] and [`nambu`] work with the 2×2 core matrices of the
//!   decoupled modes `d± = (a ± b)/√2`, which fix the phase diagram, the
//!   exceptional points at `μ ∈ {−2, 0, 2}` and the exact linear dynamics of
//!   the ladder operators.
//!
//! [`coherence`] builds second-order coherence functions and the `D_μ`
//! witness on top of either engine.

pub mod coherence;
pub mod core_matrix;
pub mod dynamics;
pub mod error;
pub mod fock;
pub mod grid;
pub mod nambu;
pub mod oracle;
pub mod output;
pub mod sparse;
pub mod validate;

pub use coherence::{
    coherence_series, dmu_study, extrapolate_t, g2, time_average, CoherenceSeries, DmuConfig, DmuCurve, DmuStudy,
    Engine, ExtrapolationFit, G2Kind, MinimumSample,
};
pub use core_matrix::{
    classify, core_matrix, core_spectrum, ep_locus, normal_mode_form, CoreMatrix, ModeKind, ModeSign, PhaseRegion,
};
pub use dynamics::{diagonalize, occupation_series, quasiparticle_vacuum, QuasiparticleVacuum, SpectralDecomposition};
pub use error::{Error, Result};
pub use fock::{build_dimer_hamiltonian, initial_state, BosonOperator, StateVector, Truncation};
pub use grid::{MuGrid, TimeGrid};
pub use nambu::NambuEngine;
pub use sparse::{CsrMatrix, C64};
