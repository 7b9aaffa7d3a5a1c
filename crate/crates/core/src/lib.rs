//! Trace-driven simulator for datacenter schedulers built from the stages of
//! a reference scheduling architecture, plus the scorer for mapping published
//! schedulers onto those stages.
//!
//! The usual flow is [`workload::parse_trace`] and [`topology::parse_setup`]
//! to load inputs, [`engine::simulate`] per [`pipeline::SchedulerConfig`], then
//! [`metrics::compute_metrics`] and the CSV emitters.

pub mod engine;
pub mod mapping;
pub mod metrics;
pub mod pipeline;
pub mod policies;
pub mod synth;
pub mod time;
pub mod topology;
pub mod workload;

pub use engine::{create_simulation, simulate, SimError, SimState, SimulationResult, TaskRecord};
pub use pipeline::{SchedulerConfig, StageId, StageTiming};
pub use time::SimTime;
pub use topology::{CpuSpec, Topology};
pub use workload::{Task, WorkloadTrace};
