//! Scenario assembly, the synchronous simulation loop, synchronization
//! metrics and the frequency-sweep certificate.

mod certificate;
mod metrics;
pub mod random;
mod scenario;
mod simulate;
mod transformed;

pub use certificate::{
    certificate_matrix, certificate_sweep, uniform_grid, CertificatePoint, CertificateReport,
    DEFAULT_GRID,
};
pub use metrics::{delayed_sync_errors, pairwise_error, regulated_error, PairSeries, SyncErrors};
pub use scenario::{
    GainSpec, HeterogeneousSpec, InitialStates, PreCompensatorSpec, PreparedScenario, RunSettings,
    Scenario, SynthesisWeights, TargetSpec,
};
pub use simulate::{run, simulate, SimResult};
pub use transformed::{transformed_matrix, transformed_state};
