use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::time::SimTime;

macro_rules! stages {
    ($($name:ident),* $(,)?) => {
        /// The 33 stages of the reference scheduling architecture, in catalog
        /// order: job processing, task processing, broker and scheduler
        /// management, resource management.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum StageId { $($name),* }

        impl StageId {
            pub const ALL: [StageId; 33] = [$(StageId::$name),*];

            pub const fn as_str(self) -> &'static str {
                match self { $(StageId::$name => stringify!($name)),* }
            }
        }
    };
}

stages!(
    J1, J2, J3, J4, J5, J6, J7, //
    T1, T2, T3, T4, T5, T6, T7, T8, T9, T10, T11, T12, //
    B, M1, M2, M3, M4, M5, M6, //
    R1, R2, R3, R4, R5, R6, R7,
);

/// The four responsibility groups. The management group includes the broker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StageGroup {
    Job,
    Task,
    Management,
    Resource,
}

impl StageGroup {
    pub const ALL: [StageGroup; 4] = [
        StageGroup::Job,
        StageGroup::Task,
        StageGroup::Management,
        StageGroup::Resource,
    ];

    pub fn stages(self) -> impl Iterator<Item = StageId> {
        StageId::ALL.into_iter().filter(move |s| s.group() == self)
    }

    pub const fn letter(self) -> &'static str {
        match self {
            StageGroup::Job => "J",
            StageGroup::Task => "T",
            StageGroup::Management => "M",
            StageGroup::Resource => "R",
        }
    }
}

impl StageId {
    pub const fn index(self) -> usize {
        self as usize
    }

    pub fn group(self) -> StageGroup {
        match self.as_str().as_bytes()[0] {
            b'J' => StageGroup::Job,
            b'T' => StageGroup::Task,
            b'R' => StageGroup::Resource,
            _ => StageGroup::Management,
        }
    }
}

impl fmt::Display for StageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownStage(pub String);

impl fmt::Display for UnknownStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown stage {:?}", self.0)
    }
}

impl std::error::Error for UnknownStage {}

impl FromStr for StageId {
    type Err = UnknownStage;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StageId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| UnknownStage(s.to_string()))
    }
}

/// Stages executed by one scheduling cycle, in execution order. A cycle may
/// stop early (nothing queued, nothing eligible, nothing placed) but never
/// reorders these. T5-T8 run on the engine side around task start and
/// completion; the remaining stages have no dynamic behavior here.
pub const CYCLE_STAGES: [StageId; 16] = [
    StageId::J1,
    StageId::J2,
    StageId::J3,
    StageId::J4,
    StageId::J5,
    StageId::T1,
    StageId::T2,
    StageId::T3,
    StageId::M1,
    StageId::M2,
    StageId::R1,
    StageId::R2,
    StageId::R3,
    StageId::R4,
    StageId::R5,
    StageId::T4,
];

pub fn stage_order() -> &'static [StageId] {
    &CYCLE_STAGES
}

/// Wall-clock duration of one stage within one scheduling cycle. Iterated
/// stages are summed over their iterations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageTiming {
    pub cycle_index: u64,
    pub sim_time: SimTime,
    pub stage: StageId,
    pub duration_ns: u64,
    /// Number of tasks that entered the stage during the cycle.
    pub queue_length: u64,
}
