//! One scheduling cycle through the staged pipeline.
//!
//! A cycle walks the queued jobs and tasks through the job stages (J1-J5), the
//! task stages (T1-T3), the monolithic management passthrough (M1, M2) and
//! the resource stages (R1-R5), submitting each placed task at T4. Every
//! stage is timed separately; the timers are adjacent laps of one monotonic
//! clock, so no two stages share any measured interval.

mod stage;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::engine::SimState;
use crate::policies::{self, Allocation, DynamicFilter, Eligibility, TaskSort, UnknownPolicy};
use crate::topology::MachineId;
use crate::workload::TaskId;

pub use stage::{stage_order, StageGroup, StageId, StageTiming, UnknownStage, CYCLE_STAGES};

/// The scheduler variant under test: a task-sort policy and an allocation
/// policy. T1 and R4 default to the only policies the experiments use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SchedulerConfig {
    pub task_sort: TaskSort,
    pub allocation: Allocation,
    pub eligibility: Eligibility,
    pub dynamic_filter: DynamicFilter,
}

impl SchedulerConfig {
    pub fn new(task_sort: TaskSort, allocation: Allocation) -> Self {
        SchedulerConfig {
            task_sort,
            allocation,
            eligibility: Eligibility::default(),
            dynamic_filter: DynamicFilter::default(),
        }
    }

    /// `SORT-ALLOCATION`, e.g. `SRTF-BESTFIT`.
    pub fn name(&self) -> String {
        format!("{}-{}", self.task_sort, self.allocation)
    }

    /// All nine combinations: SRTF, FIFO, RANDOM, each with BESTFIT,
    /// FIRSTFIT, WORSTFIT.
    pub fn all() -> Vec<SchedulerConfig> {
        TaskSort::ALL
            .into_iter()
            .flat_map(|s| Allocation::ALL.into_iter().map(move |a| Self::new(s, a)))
            .collect()
    }
}

impl fmt::Display for SchedulerConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.task_sort, self.allocation)
    }
}

impl FromStr for SchedulerConfig {
    type Err = UnknownPolicy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (sort, alloc) = s
            .split_once('-')
            .ok_or_else(|| UnknownPolicy(s.to_string()))?;
        Ok(Self::new(sort.parse()?, alloc.parse()?))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CycleOutcome {
    pub placements: Vec<(TaskId, MachineId)>,
    /// One row per reached stage, in [`stage_order`].
    pub timings: Vec<StageTiming>,
}

struct StageClock {
    lap: Instant,
    ns: [u64; 33],
    entered: [u64; 33],
    reached: [bool; 33],
}

impl StageClock {
    fn start() -> Self {
        StageClock {
            lap: Instant::now(),
            ns: [0; 33],
            entered: [0; 33],
            reached: [false; 33],
        }
    }

    /// Charges the time since the previous lap to `stage`.
    fn lap(&mut self, stage: StageId, tasks_in: usize) {
        let now = Instant::now();
        let i = stage.index();
        self.ns[i] += now.duration_since(self.lap).as_nanos() as u64;
        self.entered[i] += tasks_in as u64;
        self.reached[i] = true;
        self.lap = now;
    }

    fn rows(&self, cycle_index: u64, state: &SimState<'_>) -> Vec<StageTiming> {
        stage_order()
            .iter()
            .filter(|s| self.reached[s.index()])
            .map(|&stage| StageTiming {
                cycle_index,
                sim_time: state.clock(),
                stage,
                duration_ns: self.ns[stage.index()],
                queue_length: self.entered[stage.index()],
            })
            .collect()
    }
}

/// Runs one scheduling cycle on `state` at its current clock.
///
/// Tasks that find no machine stay queued until a later cycle. Placement
/// changes machine capacity immediately, so later tasks in the same cycle see
/// the reduced capacity at R4.
pub fn run_cycle(state: &mut SimState<'_>) -> CycleOutcome {
    let config = state.config();
    let cycle_index = state.cycle_count();
    let mut clock = StageClock::start();
    let queued = state.queued.len();

    // J1: jobs with at least one queued task, member tasks in arrival order.
    let mut by_job: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &t in &state.queued {
        by_job.entry(state.tasks[t].job).or_default().push(t);
    }
    let mut jobs: Vec<(usize, Vec<usize>)> = by_job.into_iter().collect();
    clock.lap(StageId::J1, queued);

    // J2: every job is eligible.
    jobs.retain(|_| true);
    clock.lap(StageId::J2, queued);

    // J3: oldest job first.
    jobs.sort_by_key(|(j, _)| (state.jobs[*j].submit_time, state.jobs[*j].job_id));
    clock.lap(StageId::J3, queued);

    if jobs.is_empty() {
        return CycleOutcome {
            placements: Vec::new(),
            timings: clock.rows(cycle_index, state),
        };
    }

    // J4 iterates the jobs, J5 is the per-job setup hook.
    let mut candidates = Vec::with_capacity(queued);
    for (job, tasks) in &jobs {
        clock.lap(StageId::J4, tasks.len());
        state.job_setup(*job);
        clock.lap(StageId::J5, tasks.len());
        candidates.extend_from_slice(tasks);
    }

    let mut eligible = policies::filter_eligible(
        config.eligibility,
        &candidates,
        &state.tasks,
        &state.finished,
    );
    clock.lap(StageId::T1, candidates.len());

    policies::sort_tasks(
        &mut eligible,
        &state.tasks,
        config.task_sort,
        &mut state.rng,
    );
    clock.lap(StageId::T2, eligible.len());

    let machine_count = state.machines.len();
    let mut enumerated = Vec::with_capacity(machine_count);
    let mut authorized = Vec::with_capacity(machine_count);
    let mut static_ok = Vec::with_capacity(machine_count);
    let mut dynamic_ok = Vec::with_capacity(machine_count);
    let mut placements = Vec::new();

    for &task in &eligible {
        clock.lap(StageId::T3, 1);
        // Monolithic mode: the single scheduler handles every task itself.
        clock.lap(StageId::M1, 1);
        clock.lap(StageId::M2, 1);

        let cores = state.tasks[task].cores;
        enumerated.clear();
        enumerated.extend(0..machine_count);
        clock.lap(StageId::R1, 1);

        authorized.clear();
        authorized.extend_from_slice(&enumerated);
        clock.lap(StageId::R2, 1);

        static_ok.clear();
        static_ok.extend(
            authorized
                .iter()
                .copied()
                .filter(|&m| state.machines[m].cores >= cores),
        );
        clock.lap(StageId::R3, 1);

        dynamic_ok.clear();
        policies::filter_dynamic(
            config.dynamic_filter,
            &static_ok,
            &state.machines,
            cores,
            &mut dynamic_ok,
        );
        clock.lap(StageId::R4, 1);

        let chosen =
            policies::select_machine(&dynamic_ok, &state.machines, cores, config.allocation);
        clock.lap(StageId::R5, 1);

        if let Some(machine) = chosen {
            state.submit(task, machine);
            placements.push((state.tasks[task].task_id, machine));
            clock.lap(StageId::T4, 1);
        }
    }

    if !placements.is_empty() {
        state.drop_started_from_queue();
    }

    CycleOutcome {
        placements,
        timings: clock.rows(cycle_index, state),
    }
}

pub fn config_names() -> Vec<String> {
    SchedulerConfig::all().iter().map(|c| c.name()).collect()
}
