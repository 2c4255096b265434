//! Simulation and analysis of the even n-cycle noncontextuality test with
//! two photons encoding which-slit qubits.
//!
//! * [`quantum`]: two-qubit states, equatorial-plane observables, expectations.
//! * [`cycle`]: the n-cycle scenario, quantum and noncontextual bounds.
//! * [`optics`]: far-field detection operators and Poisson-sampled scans.
//! * [`estimator`]: settings selection, four-count correlations, Ω ± σ.
//! * [`report`] and [`io`]: run configuration, reports and file formats.
//!
//! The exact algebra is generic over [`Real`] (`f32`/`f64`); the aliases
//! below fix it to `f64`, which everything downstream of the detectors uses.

pub mod cycle;
pub mod error;
pub mod estimator;
pub mod io;
pub mod optics;
pub mod quantum;
pub mod report;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type ComplexMatrix = quantum::ComplexMatrix<f64>;
pub type TwoQubitState = quantum::TwoQubitState<f64>;
pub type CycleScenario = cycle::CycleScenario<f64>;
pub type ObservableSetting = cycle::ObservableSetting<f64>;

pub use cycle::{AssignmentValue, Party};
pub use estimator::{ContextMeasurement, OmegaResult};
pub use optics::{CoincidenceGrid, OpticsConfig};
pub use report::RunConfig;
