//! Workflow traces: tasks grouped into jobs, with precedence constraints.
//!
//! The canonical trace format is line oriented. Every data line holds six
//! whitespace-separated fields:
//!
//! ```text
//! # task_id submit_time runtime cores job_id parents
//! 0 0 10 1 0 -1
//! 1 0 5.5 2 0 0
//! 2 3 1 1 0 0,1
//! ```
//!
//! Times are seconds, `parents` is a comma-separated list of task ids (no
//! spaces) or `-1` for none. Files in other layouts, e.g. Grid Workload
//! Archive exports, can be read through a [`ColumnMap`].

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::time::SimTime;
use crate::topology::Topology;

pub type TaskId = u64;
pub type JobId = u64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Task {
    pub task_id: TaskId,
    pub job_id: JobId,
    pub submit_time: SimTime,
    /// Execution time on a reference-speed machine.
    pub runtime: SimTime,
    pub cores: u32,
    pub parents: BTreeSet<TaskId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Job {
    pub job_id: JobId,
    /// Member tasks in ascending id order.
    pub task_ids: Vec<TaskId>,
    /// Earliest submit time over the member tasks.
    pub submit_time: SimTime,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WorkloadTrace {
    pub tasks: BTreeMap<TaskId, Task>,
    pub jobs: BTreeMap<JobId, Job>,
    pub source_name: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate task id {0}")]
    DuplicateTask(TaskId),
    #[error("task {task} depends on unknown task {parent}")]
    UnknownParent { task: TaskId, parent: TaskId },
    #[error("task {task} (job {job}) depends on task {parent} of another job")]
    CrossJobParent {
        task: TaskId,
        job: JobId,
        parent: TaskId,
    },
    #[error("job {0} contains a dependency cycle")]
    Cycle(JobId),
    #[error("invalid column map: {0}")]
    ColumnMap(String),
}

/// A problem found by [`validate_workload`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Violation {
    Cycle(JobId),
    Unschedulable(TaskId),
    /// Warning only: a task was submitted before one of its parents.
    SubmitBeforeParent {
        task: TaskId,
        parent: TaskId,
    },
}

impl Violation {
    /// Blocking violations prevent a simulation from being created.
    pub fn is_blocking(&self) -> bool {
        !matches!(self, Violation::SubmitBeforeParent { .. })
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Cycle(job) => write!(f, "CYCLE(job {job})"),
            Violation::Unschedulable(task) => write!(f, "UNSCHEDULABLE(task {task})"),
            Violation::SubmitBeforeParent { task, parent } => {
                write!(f, "SUBMIT_BEFORE_PARENT(task {task}, parent {parent})")
            }
        }
    }
}

/// Source column index of each canonical field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColumnMap {
    pub task_id: usize,
    pub submit_time: usize,
    pub runtime: usize,
    pub cores: usize,
    pub job_id: usize,
    pub parents: usize,
}

impl ColumnMap {
    pub const CANONICAL: ColumnMap = ColumnMap {
        task_id: 0,
        submit_time: 1,
        runtime: 2,
        cores: 3,
        job_id: 4,
        parents: 5,
    };

    fn max_index(&self) -> usize {
        [
            self.task_id,
            self.submit_time,
            self.runtime,
            self.cores,
            self.job_id,
            self.parents,
        ]
        .into_iter()
        .max()
        .unwrap_or(0)
    }
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self::CANONICAL
    }
}

/// Parses `task,submit,runtime,cores,job,parents` as six zero-based column
/// indices.
impl FromStr for ColumnMap {
    type Err = TraceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let idx: Vec<usize> = s
            .split(',')
            .map(|f| f.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|e| TraceError::ColumnMap(format!("{s:?}: {e}")))?;
        if idx.len() != 6 {
            return Err(TraceError::ColumnMap(format!(
                "expected 6 column indices, got {}",
                idx.len()
            )));
        }
        let distinct: BTreeSet<_> = idx.iter().collect();
        if distinct.len() != 6 {
            return Err(TraceError::ColumnMap(format!("{s:?} repeats a column")));
        }
        Ok(ColumnMap {
            task_id: idx[0],
            submit_time: idx[1],
            runtime: idx[2],
            cores: idx[3],
            job_id: idx[4],
            parents: idx[5],
        })
    }
}

impl WorkloadTrace {
    /// Links tasks into jobs, checking id uniqueness and that every parent
    /// exists within the same job. Cycles are accepted here and reported by
    /// [`validate_workload`].
    pub fn from_tasks(
        source_name: impl Into<String>,
        tasks: impl IntoIterator<Item = Task>,
    ) -> Result<Self, TraceError> {
        let mut by_id = BTreeMap::new();
        for task in tasks {
            let id = task.task_id;
            if by_id.insert(id, task).is_some() {
                return Err(TraceError::DuplicateTask(id));
            }
        }

        let mut jobs: BTreeMap<JobId, Job> = BTreeMap::new();
        for task in by_id.values() {
            for &parent in &task.parents {
                match by_id.get(&parent) {
                    None => {
                        return Err(TraceError::UnknownParent {
                            task: task.task_id,
                            parent,
                        })
                    }
                    Some(p) if p.job_id != task.job_id => {
                        return Err(TraceError::CrossJobParent {
                            task: task.task_id,
                            job: task.job_id,
                            parent,
                        })
                    }
                    Some(_) => {}
                }
            }
            let job = jobs.entry(task.job_id).or_insert_with(|| Job {
                job_id: task.job_id,
                task_ids: Vec::new(),
                submit_time: task.submit_time,
            });
            job.task_ids.push(task.task_id);
            job.submit_time = job.submit_time.min(task.submit_time);
        }

        Ok(WorkloadTrace {
            tasks: by_id,
            jobs,
            source_name: source_name.into(),
        })
    }

    pub fn task(&self, id: TaskId) -> Option<&Task> {
        self.tasks.get(&id)
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }
}

/// Parses a trace in the canonical layout.
pub fn parse_trace(source_name: &str, text: &str) -> Result<WorkloadTrace, TraceError> {
    parse_trace_with(source_name, text, &ColumnMap::CANONICAL)
}

/// Parses a trace whose fields sit at the columns given by `columns`. With the
/// canonical map every data line must have exactly six fields; with any other
/// map a line needs at least enough fields to cover the highest index.
pub fn parse_trace_with(
    source_name: &str,
    text: &str,
    columns: &ColumnMap,
) -> Result<WorkloadTrace, TraceError> {
    let strict = *columns == ColumnMap::CANONICAL;
    let needed = columns.max_index() + 1;
    let mut tasks = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if (strict && fields.len() != 6) || fields.len() < needed {
            return Err(TraceError::Parse {
                line,
                message: format!("expected {needed} fields, found {}", fields.len()),
            });
        }
        let err = |what: &str, value: &str| TraceError::Parse {
            line,
            message: format!("invalid {what} {value:?}"),
        };

        let task_id: TaskId = fields[columns.task_id]
            .parse()
            .map_err(|_| err("task id", fields[columns.task_id]))?;
        let job_id: JobId = fields[columns.job_id]
            .parse()
            .map_err(|_| err("job id", fields[columns.job_id]))?;
        let submit_time = SimTime::parse_secs(fields[columns.submit_time])
            .ok_or_else(|| err("submit time", fields[columns.submit_time]))?;
        let runtime = SimTime::parse_secs(fields[columns.runtime])
            .filter(|r| *r > SimTime::ZERO)
            .ok_or_else(|| err("runtime", fields[columns.runtime]))?;
        let cores: u32 = fields[columns.cores]
            .parse()
            .ok()
            .filter(|c| *c >= 1)
            .ok_or_else(|| err("core count", fields[columns.cores]))?;
        let parents = parse_parents(fields[columns.parents])
            .ok_or_else(|| err("parent list", fields[columns.parents]))?;

        tasks.push(Task {
            task_id,
            job_id,
            submit_time,
            runtime,
            cores,
            parents,
        });
    }

    WorkloadTrace::from_tasks(source_name, tasks)
}

fn parse_parents(field: &str) -> Option<BTreeSet<TaskId>> {
    if field == "-1" {
        return Some(BTreeSet::new());
    }
    field.split(',').map(|p| p.parse().ok()).collect()
}

/// Serializes a trace in the canonical layout, one line per task in id order.
pub fn emit_trace(trace: &WorkloadTrace) -> String {
    let mut out = String::from("# task_id submit_time runtime cores job_id parents\n");
    for t in trace.tasks.values() {
        let parents = if t.parents.is_empty() {
            "-1".to_string()
        } else {
            t.parents
                .iter()
                .map(|p| p.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        out.push_str(&format!(
            "{} {} {} {} {} {}\n",
            t.task_id, t.submit_time, t.runtime, t.cores, t.job_id, parents
        ));
    }
    out
}

/// Checks a trace against a topology. Violations are sorted; only
/// [`Violation::is_blocking`] entries prevent simulation.
pub fn validate_workload(trace: &WorkloadTrace, topology: &Topology) -> Vec<Violation> {
    let max_cores = topology.max_machine_cores();
    let mut out = Vec::new();
    for job in trace.jobs.values() {
        if topological_order(job, trace).is_none() {
            out.push(Violation::Cycle(job.job_id));
        }
    }
    for task in trace.tasks.values() {
        if task.cores > max_cores {
            out.push(Violation::Unschedulable(task.task_id));
        }
        for parent in &task.parents {
            if let Some(p) = trace.tasks.get(parent) {
                if task.submit_time < p.submit_time {
                    out.push(Violation::SubmitBeforeParent {
                        task: task.task_id,
                        parent: *parent,
                    });
                }
            }
        }
    }
    out.sort();
    out
}

/// Kahn's algorithm over the job's tasks; `None` if the job has a cycle.
fn topological_order(job: &Job, trace: &WorkloadTrace) -> Option<Vec<TaskId>> {
    let mut indegree: BTreeMap<TaskId, usize> = BTreeMap::new();
    let mut children: BTreeMap<TaskId, Vec<TaskId>> = BTreeMap::new();
    for &id in &job.task_ids {
        let task = &trace.tasks[&id];
        indegree.insert(id, task.parents.len());
        for &p in &task.parents {
            children.entry(p).or_default().push(id);
        }
    }
    let mut ready: VecDeque<TaskId> = indegree
        .iter()
        .filter(|(_, d)| **d == 0)
        .map(|(id, _)| *id)
        .collect();
    let mut order = Vec::with_capacity(job.task_ids.len());
    while let Some(id) = ready.pop_front() {
        order.push(id);
        for child in children.get(&id).into_iter().flatten() {
            let d = indegree.get_mut(child).expect("child is a job member");
            *d -= 1;
            if *d == 0 {
                ready.push_back(*child);
            }
        }
    }
    (order.len() == job.task_ids.len()).then_some(order)
}

/// Longest root-to-leaf path of summed reference runtimes: the job's
/// execution time with unlimited reference-speed machines and no waiting.
pub fn critical_path_length(job: &Job, trace: &WorkloadTrace) -> Result<SimTime, TraceError> {
    let order = topological_order(job, trace).ok_or(TraceError::Cycle(job.job_id))?;
    let mut finish: BTreeMap<TaskId, SimTime> = BTreeMap::new();
    let mut longest = SimTime::ZERO;
    for id in order {
        let task = &trace.tasks[&id];
        let ready = task
            .parents
            .iter()
            .map(|p| finish[p])
            .max()
            .unwrap_or(SimTime::ZERO);
        let end = ready + task.runtime;
        longest = longest.max(end);
        finish.insert(id, end);
    }
    Ok(longest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{CpuSpec, Topology};

    fn task(id: TaskId, job: JobId, runtime_s: u64, parents: &[TaskId]) -> Task {
        Task {
            task_id: id,
            job_id: job,
            submit_time: SimTime::ZERO,
            runtime: SimTime::from_secs(runtime_s),
            cores: 1,
            parents: parents.iter().copied().collect(),
        }
    }

    fn four_core_topology() -> Topology {
        Topology::uniform(2, CpuSpec::I7)
    }

    #[test]
    fn comments_only_is_empty() {
        let trace = parse_trace("t", "# header\n\n   \n# more\n").unwrap();
        assert!(trace.is_empty());
        assert!(trace.jobs.is_empty());
    }

    #[test]
    fn single_task_line() {
        let trace = parse_trace("t", "0 0 10 1 0 -1\n").unwrap();
        assert_eq!(trace.len(), 1);
        assert_eq!(trace.jobs.len(), 1);
        let t = &trace.tasks[&0];
        assert_eq!(t.runtime, SimTime::from_secs(10));
        assert!(t.parents.is_empty());
        assert_eq!(trace.jobs[&0].task_ids, vec![0]);
    }

    #[test]
    fn chain_links_parents() {
        let trace = parse_trace("t", "0 0 1 1 0 -1\n1 0 1 1 0 0\n2 0 1 1 0 1\n").unwrap();
        assert!(trace.tasks[&0].parents.is_empty());
        assert_eq!(trace.tasks[&1].parents, BTreeSet::from([0]));
        assert_eq!(trace.tasks[&2].parents, BTreeSet::from([1]));
    }

    #[test]
    fn job_submit_is_min_over_tasks() {
        let trace = parse_trace("t", "0 5 1 1 3 -1\n1 2 1 1 3 -1\n").unwrap();
        assert_eq!(trace.jobs[&3].submit_time, SimTime::from_secs(2));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let e = parse_trace("t", "# c\n0 0 10 1 0\n").unwrap_err();
        assert!(matches!(e, TraceError::Parse { line: 2, .. }), "{e}");
        let e = parse_trace("t", "0 0 ten 1 0 -1\n").unwrap_err();
        assert!(matches!(e, TraceError::Parse { line: 1, .. }), "{e}");
        let e = parse_trace("t", "0 0 10 0 0 -1\n").unwrap_err();
        assert!(matches!(e, TraceError::Parse { line: 1, .. }), "{e}");
        let e = parse_trace("t", "0 0 0 1 0 -1\n").unwrap_err();
        assert!(matches!(e, TraceError::Parse { line: 1, .. }), "{e}");
        let e = parse_trace("t", "0 0 1 1 0 1, 2\n").unwrap_err();
        assert!(matches!(e, TraceError::Parse { line: 1, .. }), "{e}");
    }

    #[test]
    fn duplicate_and_unknown_ids_rejected() {
        assert_eq!(
            parse_trace("t", "0 0 1 1 0 -1\n0 0 1 1 0 -1\n").unwrap_err(),
            TraceError::DuplicateTask(0)
        );
        assert_eq!(
            parse_trace("t", "0 0 1 1 0 7\n").unwrap_err(),
            TraceError::UnknownParent { task: 0, parent: 7 }
        );
        assert!(matches!(
            parse_trace("t", "0 0 1 1 0 -1\n1 0 1 1 1 0\n").unwrap_err(),
            TraceError::CrossJobParent { .. }
        ));
    }

    #[test]
    fn column_map_reads_wider_files() {
        // job, task, junk, submit, runtime, cores, parents
        let text = "5 0 x 0 10 2 -1\n5 1 x 1 4 1 0\n";
        let map: ColumnMap = "1,3,4,5,0,6".parse().unwrap();
        let trace = parse_trace_with("gwf", text, &map).unwrap();
        assert_eq!(trace.tasks[&1].job_id, 5);
        assert_eq!(trace.tasks[&0].cores, 2);
        assert_eq!(trace.tasks[&1].parents, BTreeSet::from([0]));
        assert!("1,2,3".parse::<ColumnMap>().is_err());
        assert!("0,0,1,2,3,4".parse::<ColumnMap>().is_err());
    }

    #[test]
    fn emit_then_parse_round_trips() {
        let text = "0 0 10 1 0 -1\n1 0.5 2.25 2 0 0\n2 1 3 1 0 0,1\n7 100 0.000001 4 9 -1\n";
        let trace = parse_trace("t", text).unwrap();
        let again = parse_trace("t", &emit_trace(&trace)).unwrap();
        assert_eq!(trace, again);
    }

    #[test]
    fn validate_clean_trace() {
        let trace =
            WorkloadTrace::from_tasks("t", vec![task(0, 0, 1, &[]), task(1, 0, 1, &[0])]).unwrap();
        assert!(validate_workload(&trace, &four_core_topology()).is_empty());
    }

    #[test]
    fn validate_reports_unschedulable() {
        let mut big = task(0, 0, 1, &[]);
        big.cores = 8;
        let trace = WorkloadTrace::from_tasks("t", vec![big]).unwrap();
        assert_eq!(
            validate_workload(&trace, &four_core_topology()),
            vec![Violation::Unschedulable(0)]
        );
    }

    #[test]
    fn validate_reports_two_cycle() {
        let trace =
            WorkloadTrace::from_tasks("t", vec![task(0, 4, 1, &[1]), task(1, 4, 1, &[0])]).unwrap();
        assert_eq!(
            validate_workload(&trace, &four_core_topology()),
            vec![Violation::Cycle(4)]
        );
    }

    #[test]
    fn validate_warns_on_submit_before_parent() {
        let mut child = task(1, 0, 1, &[0]);
        let mut parent = task(0, 0, 1, &[]);
        parent.submit_time = SimTime::from_secs(5);
        child.submit_time = SimTime::from_secs(1);
        let trace = WorkloadTrace::from_tasks("t", vec![parent, child]).unwrap();
        let v = validate_workload(&trace, &four_core_topology());
        assert_eq!(
            v,
            vec![Violation::SubmitBeforeParent { task: 1, parent: 0 }]
        );
        assert!(!v[0].is_blocking());
    }

    #[test]
    fn critical_path_examples() {
        let single = WorkloadTrace::from_tasks("t", vec![task(0, 0, 10, &[])]).unwrap();
        assert_eq!(
            critical_path_length(&single.jobs[&0], &single).unwrap(),
            SimTime::from_secs(10)
        );

        let chain = WorkloadTrace::from_tasks(
            "t",
            vec![task(0, 0, 2, &[]), task(1, 0, 3, &[0]), task(2, 0, 5, &[1])],
        )
        .unwrap();
        assert_eq!(
            critical_path_length(&chain.jobs[&0], &chain).unwrap(),
            SimTime::from_secs(10)
        );
    }

    /// Diamond A(2) -> {B(3), C(7)} -> D(1). Paths: A-B-D = 6, A-C-D = 10.
    #[test]
    fn critical_path_diamond() {
        let diamond = WorkloadTrace::from_tasks(
            "t",
            vec![
                task(0, 0, 2, &[]),
                task(1, 0, 3, &[0]),
                task(2, 0, 7, &[0]),
                task(3, 0, 1, &[1, 2]),
            ],
        )
        .unwrap();
        assert_eq!(
            critical_path_length(&diamond.jobs[&0], &diamond).unwrap(),
            SimTime::from_secs(10)
        );
    }

    #[test]
    fn critical_path_rejects_cycles() {
        let trace =
            WorkloadTrace::from_tasks("t", vec![task(0, 4, 1, &[1]), task(1, 4, 1, &[0])]).unwrap();
        assert_eq!(
            critical_path_length(&trace.jobs[&4], &trace),
            Err(TraceError::Cycle(4))
        );
    }
}
