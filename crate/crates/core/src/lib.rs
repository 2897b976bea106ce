//! Cooper-pair box coupled to a single cavity mode, evolving under
//! intrinsic (Milburn) decoherence.
//!
//! The Hamiltonian is block diagonal in `{|e,n>, |g,n+k>}` pairs, so the
//! master equation is solved exactly in its eigenbasis. Everything else
//! (Kraus ensembles, entanglement measures, Wigner functions, the scenario
//! runner) builds on that.

pub mod analysis;
pub mod error;
pub mod evolve;
pub mod hilbert;
pub mod linalg;
pub mod measures;
pub mod model;
pub mod oracle;
pub mod runner;
pub mod wigner;

pub use error::{Error, Result};
pub use evolve::{ensemble_branches, evolve_closed_form, evolve_kraus, Ensemble, KrausSet, PreparedState, Propagator};
pub use hilbert::{
    make_initial_state, CompositeIndex, DensityMatrix, FieldStateSpec, FockBasis, InvariantReport, Qubit,
    QubitStateSpec,
};
pub use linalg::{CMat, C64};
pub use measures::TimeSeries;
pub use model::{block_eigensystem, build_hamiltonian, BlockEigensystem, DeviceParams, ModelParams};
pub use runner::{run_scenario, Observable, RunOutput, Scenario};
pub use wigner::{GridSpec, WignerGrid};
