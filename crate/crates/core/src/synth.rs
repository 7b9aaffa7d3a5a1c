//! Seeded synthetic workflow workloads.
//!
//! Workflows arrive as a Poisson process. Each is either a small random DAG
//! whose edges only point from lower to higher task ids, or a layered
//! fork-join graph where every task depends on all tasks of the previous
//! layer. Runtimes are Pareto-distributed and most tasks need one core.
//!
//! Tasks are submitted either all at the workflow's arrival or each when it
//! would become ready if nothing ever waited, the way a workflow engine hands
//! tasks to the cluster scheduler.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Pareto};

use crate::time::SimTime;
use crate::workload::{Task, WorkloadTrace};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WorkflowShape {
    /// 1 to `max_tasks` tasks; each earlier task is a parent with
    /// probability `edge_probability`.
    RandomDag {
        max_tasks: usize,
        edge_probability: f64,
    },
    /// 1 to `max_layers` layers of 1 to `max_width` tasks each.
    Layered { max_layers: usize, max_width: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Submission {
    /// Every task at the workflow's arrival.
    AtArrival,
    /// Each task at arrival plus the longest runtime path of its ancestors.
    WhenReady,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub workflows: usize,
    /// Mean time between workflow arrivals, in seconds.
    pub mean_interarrival_secs: f64,
    pub shape: WorkflowShape,
    pub submission: Submission,
    /// Pareto scale (minimum runtime) in seconds.
    pub runtime_scale_secs: f64,
    /// Pareto shape; smaller is heavier-tailed.
    pub runtime_shape: f64,
    /// Runtimes are capped here, in seconds.
    pub runtime_cap_secs: f64,
    /// Probability that a task needs more than one core.
    pub multicore_probability: f64,
    /// Upper bound for multi-core requests.
    pub max_cores: u32,
    /// Stops generating once this many tasks exist, truncating the last
    /// workflow.
    pub task_limit: Option<usize>,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            workflows: 100,
            mean_interarrival_secs: 2.0,
            shape: WorkflowShape::RandomDag {
                max_tasks: 6,
                edge_probability: 0.4,
            },
            submission: Submission::AtArrival,
            runtime_scale_secs: 1.0,
            runtime_shape: 1.5,
            runtime_cap_secs: 600.0,
            multicore_probability: 0.1,
            max_cores: 2,
            task_limit: None,
        }
    }
}

/// Generates a workload; equal parameters and seeds give equal traces.
/// Runtimes and arrival times are whole milliseconds.
pub fn generate(params: &SynthParams, seed: u64) -> WorkloadTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let arrivals = Exp::new(1.0 / params.mean_interarrival_secs).expect("positive arrival rate");
    let runtimes =
        Pareto::new(params.runtime_scale_secs, params.runtime_shape).expect("valid Pareto");
    let millis = |secs: f64| SimTime::from_micros((secs * 1000.0).round().max(1.0) as u64 * 1000);

    let mut tasks = Vec::new();
    let mut now = 0.0;
    for job_id in 0..params.workflows as u64 {
        if job_id > 0 {
            now += arrivals.sample(&mut rng);
        }
        let submit = SimTime::from_micros((now * 1000.0).round() as u64 * 1000);
        // Parent lists by position within the workflow.
        let mut graph: Vec<Vec<usize>> = Vec::new();
        match params.shape {
            WorkflowShape::RandomDag {
                max_tasks,
                edge_probability,
            } => {
                for i in 0..rng.random_range(1..=max_tasks.max(1)) {
                    graph.push(
                        (0..i)
                            .filter(|_| rng.random_bool(edge_probability))
                            .collect(),
                    );
                }
            }
            WorkflowShape::Layered {
                max_layers,
                max_width,
            } => {
                let mut previous = Vec::new();
                for _ in 0..rng.random_range(1..=max_layers.max(1)) {
                    let start = graph.len();
                    for _ in 0..rng.random_range(1..=max_width.max(1)) {
                        graph.push(previous.clone());
                    }
                    previous = (start..graph.len()).collect();
                }
            }
        }
        if let Some(limit) = params.task_limit {
            graph.truncate(limit.saturating_sub(tasks.len()));
            if graph.is_empty() {
                break;
            }
        }

        let first = tasks.len();
        for parents in graph {
            let runtime = millis(runtimes.sample(&mut rng).min(params.runtime_cap_secs));
            let cores = if params.max_cores > 1 && rng.random_bool(params.multicore_probability) {
                rng.random_range(2..=params.max_cores)
            } else {
                1
            };
            let ready = match params.submission {
                Submission::AtArrival => submit,
                Submission::WhenReady => parents
                    .iter()
                    .map(|&p| {
                        let parent: &Task = &tasks[first + p];
                        parent.submit_time + parent.runtime
                    })
                    .max()
                    .unwrap_or(submit),
            };
            tasks.push(Task {
                task_id: tasks.len() as u64,
                job_id,
                submit_time: ready,
                runtime,
                cores,
                parents: parents.iter().map(|&p| (first + p) as u64).collect(),
            });
        }
    }
    WorkloadTrace::from_tasks(format!("synthetic-{seed}"), tasks)
        .expect("generated parents are in-job and earlier")
}
