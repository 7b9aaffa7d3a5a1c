//! Policies for the configurable stages: task eligibility (T1), task sorting
//! (T2), dynamic machine filtering (R4) and machine selection (R5).
//!
//! Task lists are slices of indices into the simulation's task table; machine
//! lists are machine ids in enumeration order.

use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::SimTask;
use crate::topology::{Machine, MachineId};

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskSort {
    Fifo,
    Srtf,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Allocation {
    FirstFit,
    BestFit,
    WorstFit,
}

/// T1 policies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Eligibility {
    /// A task is eligible once all of its parents have finished.
    #[default]
    DependenciesFinished,
}

/// R4 policies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DynamicFilter {
    /// Keep machines with at least as many free cores as the task needs.
    #[default]
    SufficientCapacity,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownPolicy(pub String);

impl fmt::Display for UnknownPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown policy {:?}", self.0)
    }
}

impl std::error::Error for UnknownPolicy {}

impl TaskSort {
    pub const ALL: [TaskSort; 3] = [TaskSort::Srtf, TaskSort::Fifo, TaskSort::Random];

    pub const fn as_str(self) -> &'static str {
        match self {
            TaskSort::Fifo => "FIFO",
            TaskSort::Srtf => "SRTF",
            TaskSort::Random => "RANDOM",
        }
    }
}

impl Allocation {
    pub const ALL: [Allocation; 3] = [
        Allocation::BestFit,
        Allocation::FirstFit,
        Allocation::WorstFit,
    ];

    pub const fn as_str(self) -> &'static str {
        match self {
            Allocation::FirstFit => "FIRSTFIT",
            Allocation::BestFit => "BESTFIT",
            Allocation::WorstFit => "WORSTFIT",
        }
    }
}

impl FromStr for TaskSort {
    type Err = UnknownPolicy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TaskSort::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| UnknownPolicy(s.to_string()))
    }
}

impl FromStr for Allocation {
    type Err = UnknownPolicy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Allocation::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| UnknownPolicy(s.to_string()))
    }
}

impl fmt::Display for TaskSort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Allocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// T1: the subsequence of `queue` whose parents have all finished.
pub fn dependencies_finished(queue: &[usize], tasks: &[SimTask], finished: &[bool]) -> Vec<usize> {
    queue
        .iter()
        .copied()
        .filter(|&t| tasks[t].parents.iter().all(|&p| finished[p]))
        .collect()
}

pub fn filter_eligible(
    policy: Eligibility,
    queue: &[usize],
    tasks: &[SimTask],
    finished: &[bool],
) -> Vec<usize> {
    match policy {
        Eligibility::DependenciesFinished => dependencies_finished(queue, tasks, finished),
    }
}

/// T2: reorders `queue` in place.
///
/// FIFO orders by `(submit_time, task_id)`, SRTF by `(runtime, submit_time,
/// task_id)` with the trace runtime as the remaining-time estimate. RANDOM
/// draws a uniform permutation with [`shuffle`].
pub fn sort_tasks(queue: &mut [usize], tasks: &[SimTask], policy: TaskSort, rng: &mut SimRng) {
    match policy {
        TaskSort::Fifo => queue.sort_unstable_by_key(|&t| (tasks[t].submit_time, tasks[t].task_id)),
        TaskSort::Srtf => queue.sort_unstable_by_key(|&t| {
            let task = &tasks[t];
            (task.runtime, task.submit_time, task.task_id)
        }),
        TaskSort::Random => shuffle(queue, rng),
    }
}

/// R4: machines from `candidates` whose free cores cover `cores`, appended to
/// `out` in input order.
pub fn sufficient_capacity(
    candidates: &[MachineId],
    machines: &[Machine],
    cores: u32,
    out: &mut Vec<MachineId>,
) {
    out.extend(
        candidates
            .iter()
            .copied()
            .filter(|&m| machines[m].available_cores >= cores),
    );
}

pub fn filter_dynamic(
    policy: DynamicFilter,
    candidates: &[MachineId],
    machines: &[Machine],
    cores: u32,
    out: &mut Vec<MachineId>,
) {
    match policy {
        DynamicFilter::SufficientCapacity => sufficient_capacity(candidates, machines, cores, out),
    }
}

/// R5: picks a machine from `candidates`, all of which must fit the task.
///
/// FIRSTFIT takes the first candidate, BESTFIT the least leftover capacity and
/// WORSTFIT the most free cores. Ties go to the lowest machine id.
pub fn select_machine(
    candidates: &[MachineId],
    machines: &[Machine],
    cores: u32,
    policy: Allocation,
) -> Option<MachineId> {
    debug_assert!(candidates
        .iter()
        .all(|&m| machines[m].available_cores >= cores));
    match policy {
        Allocation::FirstFit => candidates.first().copied(),
        Allocation::BestFit => candidates
            .iter()
            .copied()
            .min_by_key(|&m| (machines[m].available_cores - cores, m)),
        Allocation::WorstFit => candidates
            .iter()
            .copied()
            .min_by_key(|&m| (std::cmp::Reverse(machines[m].available_cores), m)),
    }
}

/// Seeds the per-simulation generator from the run seed and the scheduler
/// name: `ChaCha8Rng::seed_from_u64(seed ^ fnv1a64(name))`.
pub fn seeded_rng(seed: u64, config_name: &str) -> SimRng {
    SimRng::seed_from_u64(seed ^ fnv1a64(config_name.as_bytes()))
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}

/// Uniform integer in `0..bound` from one 64-bit draw, `(x * bound) >> 64`.
pub fn uniform_below(rng: &mut SimRng, bound: u64) -> u64 {
    ((u128::from(rng.next_u64()) * u128::from(bound)) >> 64) as u64
}

/// Fisher-Yates: for `i` from `len-1` down to 1, swap `i` with
/// `uniform_below(i + 1)`.
pub fn shuffle<T>(items: &mut [T], rng: &mut SimRng) {
    for i in (1..items.len()).rev() {
        let j = uniform_below(rng, i as u64 + 1) as usize;
        items.swap(i, j);
    }
}
