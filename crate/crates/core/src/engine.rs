//! Discrete-event simulation core.
//!
//! The engine pops every event that shares the earliest timestamp, applies
//! them (completions first, then arrivals, each in insertion order), and then
//! runs exactly one scheduling cycle. It stops when no events remain and the
//! queue is empty.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};

use serde::Serialize;
use thiserror::Error;

use crate::pipeline::{run_cycle, SchedulerConfig, StageTiming};
use crate::policies::{seeded_rng, SimRng};
use crate::time::SimTime;
use crate::topology::{Machine, MachineId, Topology};
use crate::workload::{validate_workload, JobId, TaskId, Violation, WorkloadTrace};

/// A task as the scheduler sees it. `parents` and `job` are indices into the
/// simulation's task and job tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimTask {
    pub task_id: TaskId,
    pub job: usize,
    pub submit_time: SimTime,
    pub runtime: SimTime,
    pub cores: u32,
    pub parents: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimJob {
    pub job_id: JobId,
    pub submit_time: SimTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    TaskArrival(TaskId),
    TaskCompletion(TaskId),
}

/// Events order by `(time, seq)`; `seq` grows with every insertion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimEvent {
    pub time: SimTime,
    pub seq: u64,
    pub kind: EventKind,
}

impl Ord for SimEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.time, self.seq).cmp(&(other.time, other.seq))
    }
}

impl PartialOrd for SimEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TaskRecord {
    pub task_id: TaskId,
    pub job_id: JobId,
    pub submit_time: SimTime,
    pub start_time: SimTime,
    pub finish_time: SimTime,
    pub machine_id: MachineId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimulationResult {
    pub config: SchedulerConfig,
    pub seed: u64,
    /// One record per task, ascending task id.
    pub records: Vec<TaskRecord>,
    pub timings: Vec<StageTiming>,
    pub cycle_count: u64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("workload cannot be simulated: {}", list(.0))]
    Setup(Vec<Violation>),
    #[error("simulation stuck at {time} s with {} queued tasks and nothing running (first: {:?})", .blocked.len(), .blocked.first())]
    Stuck { time: SimTime, blocked: Vec<TaskId> },
}

fn list(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, Copy)]
struct Running {
    machine: MachineId,
    start: SimTime,
}

/// State of one simulation run. Owned by a single thread; only the trace and
/// topology it was built from are shared.
pub struct SimState<'a> {
    trace: &'a WorkloadTrace,
    config: SchedulerConfig,
    seed: u64,
    reference_clock_mhz: u32,
    clock: SimTime,
    events: BinaryHeap<Reverse<SimEvent>>,
    next_seq: u64,
    pub(crate) tasks: Vec<SimTask>,
    pub(crate) jobs: Vec<SimJob>,
    /// Arrived, not started; arrival order.
    pub(crate) queued: Vec<usize>,
    started: Vec<bool>,
    pub(crate) finished: Vec<bool>,
    running: BTreeMap<usize, Running>,
    records: Vec<Option<TaskRecord>>,
    pub(crate) machines: Vec<Machine>,
    pub(crate) rng: SimRng,
    cycle_count: u64,
    timings: Vec<StageTiming>,
}

/// Builds a simulation with one arrival event per task, inserted in task-id
/// order. Fails if the workload has cycles or tasks no machine can hold.
pub fn create_simulation<'a>(
    trace: &'a WorkloadTrace,
    topology: &Topology,
    config: SchedulerConfig,
    seed: u64,
) -> Result<SimState<'a>, SimError> {
    let blocking: Vec<Violation> = validate_workload(trace, topology)
        .into_iter()
        .filter(Violation::is_blocking)
        .collect();
    if !blocking.is_empty() {
        return Err(SimError::Setup(blocking));
    }

    let job_index: BTreeMap<JobId, usize> = trace
        .jobs
        .keys()
        .enumerate()
        .map(|(i, id)| (*id, i))
        .collect();
    let jobs = trace
        .jobs
        .values()
        .map(|j| SimJob {
            job_id: j.job_id,
            submit_time: j.submit_time,
        })
        .collect();
    let task_index: BTreeMap<TaskId, usize> = trace
        .tasks
        .keys()
        .enumerate()
        .map(|(i, id)| (*id, i))
        .collect();
    let tasks: Vec<SimTask> = trace
        .tasks
        .values()
        .map(|t| SimTask {
            task_id: t.task_id,
            job: job_index[&t.job_id],
            submit_time: t.submit_time,
            runtime: t.runtime,
            cores: t.cores,
            parents: t.parents.iter().map(|p| task_index[p]).collect(),
        })
        .collect();

    let n = tasks.len();
    let mut state = SimState {
        trace,
        config,
        seed,
        reference_clock_mhz: topology.reference_clock_mhz,
        clock: SimTime::ZERO,
        events: BinaryHeap::with_capacity(n),
        next_seq: 0,
        tasks,
        jobs,
        queued: Vec::new(),
        started: vec![false; n],
        finished: vec![false; n],
        running: BTreeMap::new(),
        records: vec![None; n],
        machines: topology.machines.clone(),
        rng: seeded_rng(seed, &config.name()),
        cycle_count: 0,
        timings: Vec::new(),
    };
    for t in trace.tasks.values() {
        state.push_event(t.submit_time, EventKind::TaskArrival(t.task_id));
    }
    Ok(state)
}

impl<'a> SimState<'a> {
    pub fn clock(&self) -> SimTime {
        self.clock
    }

    pub fn config(&self) -> SchedulerConfig {
        self.config
    }

    pub fn cycle_count(&self) -> u64 {
        self.cycle_count
    }

    pub fn pending_events(&self) -> usize {
        self.events.len()
    }

    /// Pending events in the order they will be applied.
    pub fn pending_event_list(&self) -> Vec<SimEvent> {
        let mut v: Vec<SimEvent> = self.events.iter().map(|e| e.0).collect();
        v.sort();
        v
    }

    pub fn queued_task_ids(&self) -> Vec<TaskId> {
        self.queued.iter().map(|&t| self.tasks[t].task_id).collect()
    }

    pub fn running_count(&self) -> usize {
        self.running.len()
    }

    pub fn machines(&self) -> &[Machine] {
        &self.machines
    }

    pub fn trace(&self) -> &'a WorkloadTrace {
        self.trace
    }

    /// Stage timings collected so far.
    pub fn timings(&self) -> &[StageTiming] {
        &self.timings
    }

    fn push_event(&mut self, time: SimTime, kind: EventKind) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.events.push(Reverse(SimEvent { time, seq, kind }));
    }

    fn index_of(&self, id: TaskId) -> usize {
        self.tasks
            .binary_search_by_key(&id, |t| t.task_id)
            .expect("event refers to a known task")
    }

    /// Applies the next batch of same-time events and runs one cycle.
    /// Returns `Ok(false)` once the simulation is complete.
    pub fn step(&mut self) -> Result<bool, SimError> {
        let Some(Reverse(first)) = self.events.pop() else {
            if self.queued.is_empty() {
                return Ok(false);
            }
            return Err(SimError::Stuck {
                time: self.clock,
                blocked: self.queued_task_ids(),
            });
        };
        self.clock = first.time;
        let mut batch = vec![first];
        while let Some(Reverse(next)) = self.events.peek() {
            if next.time != first.time {
                break;
            }
            batch.push(self.events.pop().expect("peeked").0);
        }

        // Completions free capacity before co-timed arrivals are queued.
        for event in &batch {
            if let EventKind::TaskCompletion(id) = event.kind {
                self.complete(id);
            }
        }
        for event in &batch {
            if let EventKind::TaskArrival(id) = event.kind {
                let t = self.index_of(id);
                self.queued.push(t);
            }
        }

        let outcome = run_cycle(self);
        self.timings.extend(outcome.timings);
        self.cycle_count += 1;
        Ok(true)
    }

    /// T7/T8: marks the task finished and releases its cores.
    fn complete(&mut self, id: TaskId) {
        let t = self.index_of(id);
        let run = self
            .running
            .remove(&t)
            .expect("completion for a running task");
        self.machines[run.machine].available_cores += self.tasks[t].cores;
        debug_assert!(
            self.machines[run.machine].available_cores <= self.machines[run.machine].cores
        );
        self.finished[t] = true;
        let task = &self.tasks[t];
        self.records[t] = Some(TaskRecord {
            task_id: task.task_id,
            job_id: self.jobs[task.job].job_id,
            submit_time: task.submit_time,
            start_time: run.start,
            finish_time: self.clock,
            machine_id: run.machine,
        });
    }

    /// T4: reserves the task's cores on `machine` and schedules its
    /// completion after the clock-scaled runtime.
    pub(crate) fn submit(&mut self, task: usize, machine: MachineId) {
        let cores = self.tasks[task].cores;
        let m = &mut self.machines[machine];
        assert!(m.available_cores >= cores, "submit beyond machine capacity");
        m.available_cores -= cores;
        let duration = crate::topology::scale_runtime(
            self.tasks[task].runtime,
            m.clock_mhz,
            self.reference_clock_mhz,
        );
        self.started[task] = true;
        self.running.insert(
            task,
            Running {
                machine,
                start: self.clock,
            },
        );
        let id = self.tasks[task].task_id;
        self.push_event(self.clock + duration, EventKind::TaskCompletion(id));
    }

    /// J5 job setup. No side effects in this simulator.
    pub(crate) fn job_setup(&mut self, _job: usize) {}

    pub(crate) fn drop_started_from_queue(&mut self) {
        let started = &self.started;
        self.queued.retain(|&t| !started[t]);
    }

    pub fn run_to_completion(mut self) -> Result<SimulationResult, SimError> {
        while self.step()? {}
        Ok(self.into_result())
    }

    fn into_result(self) -> SimulationResult {
        SimulationResult {
            config: self.config,
            seed: self.seed,
            records: self
                .records
                .into_iter()
                .map(|r| r.expect("every task completes"))
                .collect(),
            timings: self.timings,
            cycle_count: self.cycle_count,
        }
    }
}

/// Convenience wrapper: create and run a simulation.
pub fn simulate(
    trace: &WorkloadTrace,
    topology: &Topology,
    config: SchedulerConfig,
    seed: u64,
) -> Result<SimulationResult, SimError> {
    create_simulation(trace, topology, config, seed)?.run_to_completion()
}
