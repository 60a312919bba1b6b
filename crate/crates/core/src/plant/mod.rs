//! Agent, exosystem and target-model dynamics, and pre-compensators that
//! homogenize heterogeneous agents.

mod agent;
mod exosystem;
mod precompensator;

pub use agent::{observability_rank, step_agent, AgentModel, AgentStep, STRUCTURE_TOL};
pub use exosystem::{
    characteristic_polynomial, remodel_exosystem, step_exosystem, ExoStep, Exosystem, TargetModel,
};
pub use precompensator::{
    check_contract, dynamic_design, homogenize, static_design, CascadeMaps, ContractReport,
    PreCompensator, PreCompensatorKind,
};
