//! Scheduling analysis for full-duplex wireless-powered IoT networks.
//!
//! A hybrid access point broadcasts energy while receiving data; each block it
//! schedules one battery-powered IoD to transmit while the others harvest.
//! The crate provides
//!
//! * the throughput-oriented and fairness-oriented scheduling rules as coupled
//!   per-IoD Markov chains ([`throughput`], [`fairness`]) solved by fixed-point
//!   iteration ([`solver`]),
//! * closed-form outage, throughput, access and fairness metrics ([`metrics`]),
//! * a block-level Monte Carlo simulator that also covers round-robin and
//!   random selection ([`sim`]).
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! unsuffixed aliases below fix `f64`.

// `!(x > 0)` is the NaN-rejecting form.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod error;
pub mod fairness;
pub mod harvest;
pub mod metrics;
pub mod numerics;
pub mod policy;
pub mod scalar;
pub mod sim;
pub mod solver;
pub mod system;
pub mod throughput;

pub use error::{Error, Result};
pub use fairness::{
    build_chain_fair, normalized_energy, selection_prob_fair, selection_profile_fair, FairnessModel, JointState,
};
pub use harvest::{eh_increment_prob, HarvestLaw};
pub use metrics::{
    access_probabilities, analyze, analyze_with, charging_rounds, fairness_index, fairness_index_raw,
    outage_fairness_oriented, outage_throughput_oriented, throughput, OutageBreakdown,
};
pub use numerics::{marcum_q1, solve_stationary_direct, solve_stationary_renewal, ToleranceConfig};
pub use policy::PolicyKind;
pub use scalar::Scalar;
pub use sim::{run, run_replications, run_with, BatteryMode, BlockOutcome, SimOptions, SimReport, Simulator};
pub use solver::{contraction_estimate, solve_coupled, solve_coupled_with, ChainModel, SolverOptions};
pub use system::{Preset, DEFAULT_HAP_POWER_W};
pub use throughput::{
    build_chain_throughput, selection_prob_throughput, selection_profile_throughput, ThroughputModel,
};

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type SystemConfig = system::SystemConfig<f64>;
pub type SystemConfigF32 = system::SystemConfig<f32>;
pub type RicianChannel = numerics::RicianChannel<f64>;
pub type RicianChannelF32 = numerics::RicianChannel<f32>;
pub type TransitionMatrix = chain::TransitionMatrix<f64>;
pub type TransitionMatrixF32 = chain::TransitionMatrix<f32>;
pub type SelectionProfile = throughput::SelectionProfile<f64>;
pub type SelectionProfileF32 = throughput::SelectionProfile<f32>;
pub type CoupledSolution = solver::CoupledSolution<f64>;
pub type CoupledSolutionF32 = solver::CoupledSolution<f32>;
pub type AnalysisReport = metrics::AnalysisReport<f64>;
pub type AnalysisReportF32 = metrics::AnalysisReport<f32>;
/// One IoD's stationary law over its chain states.
pub type StationaryDistribution = Vec<f64>;
pub type StationaryDistributionF32 = Vec<f32>;
