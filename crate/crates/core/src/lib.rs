//! Continuous measurement of a double quantum dot by a weakly coupled point
//! contact.
//!
//! The observer who follows the detector current assigns the dot a
//! *conditioned* density matrix that evolves stochastically with the record;
//! averaging over records recovers the usual dephasing master equation.
//!
//! * [`model`]: states, Hamiltonian, detector, grids and validity checks.
//! * [`bayes`]: the finite-window Bayes update.
//! * [`trajectory`]: conditioned trajectories and record-driven reconstruction.
//! * [`master`]: the ensemble-averaged equation, used as an oracle.
//! * [`analysis`]: ensembles, record filters, jump counting, steering pulses.
//! * [`io`]: CSV layouts.

pub mod analysis;
pub mod bayes;
pub mod error;
pub mod io;
pub mod master;
pub mod model;
pub mod trajectory;

pub use analysis::{EnsembleSummary, Histogram, LocalizationFit, SteeringPulse};
pub use bayes::WindowOutcome;
pub use error::{Error, Result};
pub use master::{MasterSolution, MasterState};
pub use model::{
    ConditionedState, DetectorModel, Dot, MeasurementRecord, QubitHamiltonian, SimulationGrid,
    ValidityReport,
};
pub use trajectory::{TrajectoryOptions, TrajectoryResult};
