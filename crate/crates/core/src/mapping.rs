//! Scheduler-to-architecture mapping matrices and their aggregate scores.
//!
//! Each cell rates how completely a published scheduler specifies one stage:
//! full (100), partial (50) or none (0). Group scores, partition means and
//! difference rankings are computed with exact integer arithmetic and only
//! rounded (half-up) for display.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::pipeline::{StageGroup, StageId};

const BUNDLED: &str = include_str!("../../../data/mapping_sc18.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MatchLevel {
    None,
    Partial,
    Full,
}

impl MatchLevel {
    pub const fn rating(self) -> u32 {
        match self {
            MatchLevel::Full => 100,
            MatchLevel::Partial => 50,
            MatchLevel::None => 0,
        }
    }

    fn parse(code: &str) -> Option<Self> {
        match code {
            "F" => Some(MatchLevel::Full),
            "P" => Some(MatchLevel::Partial),
            "N" => Some(MatchLevel::None),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Origin {
    Academia,
    Industry,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Era {
    Pre2010,
    Post2010,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Deployment {
    Single,
    Multi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SchedulerFeatures {
    pub origin: Origin,
    pub era: Era,
    pub deployment: Deployment,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchedulerRow {
    pub name: String,
    pub features: SchedulerFeatures,
    /// Indexed by [`StageId::index`].
    pub cells: [MatchLevel; 33],
}

impl SchedulerRow {
    pub fn cell(&self, stage: StageId) -> MatchLevel {
        self.cells[stage.index()]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MappingMatrix {
    pub schedulers: Vec<SchedulerRow>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MappingError {
    #[error("mapping CSV: {0}")]
    Csv(String),
    #[error("mapping header: unknown column {0:?}")]
    UnknownStage(String),
    #[error("mapping header: missing column for stage {0}")]
    MissingColumn(StageId),
    #[error("mapping line {line}: missing cell for {column}")]
    MissingCell { line: u64, column: String },
    #[error("mapping line {line}: bad cell {value:?} for {column} (expected F, P or N)")]
    BadCell {
        line: u64,
        column: String,
        value: String,
    },
    #[error("mapping line {line}: unknown {feature} code {value:?}")]
    UnknownFeature {
        line: u64,
        feature: &'static str,
        value: String,
    },
    #[error("mapping line {line}: duplicate scheduler {name:?}")]
    DuplicateScheduler { line: u64, name: String },
    #[error("unknown scheduler {0:?}")]
    UnknownScheduler(String),
    #[error("no scheduler matches the selection")]
    EmptySelection,
    #[error("percentage {0} is outside [0, 100]")]
    OutOfRange(f64),
}

const FEATURE_COLUMNS: [&str; 4] = ["scheduler", "origin", "era", "deployment"];

/// Parses a mapping CSV: `scheduler,origin,era,deployment` followed by one
/// column per stage (any order, all 33 required) with cells `F`, `P` or `N`.
pub fn parse_mapping(text: &str) -> Result<MappingMatrix, MappingError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| MappingError::Csv(e.to_string()))?
        .clone();
    if headers.len() < 4 || headers.iter().take(4).ne(FEATURE_COLUMNS) {
        return Err(MappingError::Csv(format!(
            "header must start with {}",
            FEATURE_COLUMNS.join(",")
        )));
    }
    let mut stage_columns = Vec::with_capacity(33);
    for name in headers.iter().skip(4) {
        let stage: StageId = name
            .parse()
            .map_err(|_| MappingError::UnknownStage(name.to_string()))?;
        stage_columns.push(stage);
    }
    if let Some(missing) = StageId::ALL
        .into_iter()
        .find(|s| !stage_columns.contains(s))
    {
        return Err(MappingError::MissingColumn(missing));
    }

    let mut matrix = MappingMatrix::default();
    for record in reader.records() {
        let record = record.map_err(|e| MappingError::Csv(e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| -> Result<&str, MappingError> {
            record
                .get(i)
                .filter(|v| !v.is_empty())
                .ok_or_else(|| MappingError::MissingCell {
                    line,
                    column: headers[i].to_string(),
                })
        };
        let unknown = |feature: &'static str, value: &str| MappingError::UnknownFeature {
            line,
            feature,
            value: value.to_string(),
        };

        let name = field(0)?.to_string();
        let origin = match field(1)? {
            "A" => Origin::Academia,
            "I" => Origin::Industry,
            v => return Err(unknown("origin", v)),
        };
        let era = match field(2)? {
            "O" => Era::Pre2010,
            "N" => Era::Post2010,
            v => return Err(unknown("era", v)),
        };
        let deployment = match field(3)? {
            "S" => Deployment::Single,
            "M" => Deployment::Multi,
            v => return Err(unknown("deployment", v)),
        };

        let mut cells = [MatchLevel::None; 33];
        for (offset, stage) in stage_columns.iter().enumerate() {
            let i = offset + 4;
            let value = field(i)?;
            cells[stage.index()] =
                MatchLevel::parse(value).ok_or_else(|| MappingError::BadCell {
                    line,
                    column: headers[i].to_string(),
                    value: value.to_string(),
                })?;
        }
        if record.len() > headers.len() {
            return Err(MappingError::Csv(format!("line {line}: too many fields")));
        }
        if matrix.schedulers.iter().any(|s| s.name == name) {
            return Err(MappingError::DuplicateScheduler { line, name });
        }
        matrix.schedulers.push(SchedulerRow {
            name,
            features: SchedulerFeatures {
                origin,
                era,
                deployment,
            },
            cells,
        });
    }
    Ok(matrix)
}

/// The bundled transcription of the 14 surveyed schedulers.
pub fn bundled() -> MappingMatrix {
    parse_mapping(BUNDLED).expect("bundled mapping data is valid")
}

/// An exact mean of ratings, `sum / count`.
#[derive(Debug, Clone, Copy)]
pub struct Mean {
    pub sum: u64,
    pub count: u64,
}

impl Mean {
    fn of(ratings: impl Iterator<Item = u32>) -> Option<Mean> {
        let (sum, count) = ratings.fold((0u64, 0u64), |(s, c), r| (s + r as u64, c + 1));
        (count > 0).then_some(Mean { sum, count })
    }

    pub fn value(self) -> f64 {
        self.sum as f64 / self.count as f64
    }

    /// Rounded half-up to an integer percentage.
    pub fn rounded(self) -> u32 {
        ((2 * self.sum + self.count) / (2 * self.count)) as u32
    }

    /// `|self - other|` compared exactly against another difference.
    fn abs_diff_cmp(a: (Mean, Mean), b: (Mean, Mean)) -> Ordering {
        // |x/y - u/v| = |xv - uy| / yv; compare the two fractions by cross
        // multiplication.
        let diff = |(p, q): (Mean, Mean)| {
            let num = (p.sum * q.count).abs_diff(q.sum * p.count) as u128;
            (num, (p.count * q.count) as u128)
        };
        let (an, ad) = diff(a);
        let (bn, bd) = diff(b);
        (an * bd).cmp(&(bn * ad))
    }
}

impl PartialEq for Mean {
    fn eq(&self, other: &Self) -> bool {
        self.sum * other.count == other.sum * self.count
    }
}

impl MappingMatrix {
    pub fn scheduler(&self, name: &str) -> Result<&SchedulerRow, MappingError> {
        self.schedulers
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| MappingError::UnknownScheduler(name.to_string()))
    }
}

pub fn group_mean(row: &SchedulerRow, group: StageGroup) -> Mean {
    Mean::of(group.stages().map(|s| row.cell(s).rating())).expect("groups are non-empty")
}

/// Mean rating of a scheduler over one stage group, in integer percent.
pub fn group_score(
    matrix: &MappingMatrix,
    scheduler: &str,
    group: StageGroup,
) -> Result<u32, MappingError> {
    Ok(group_mean(matrix.scheduler(scheduler)?, group).rounded())
}

pub fn feature_mean_exact(
    matrix: &MappingMatrix,
    stage: StageId,
    select: impl Fn(&SchedulerFeatures) -> bool,
) -> Result<Mean, MappingError> {
    Mean::of(
        matrix
            .schedulers
            .iter()
            .filter(|s| select(&s.features))
            .map(|s| s.cell(stage).rating()),
    )
    .ok_or(MappingError::EmptySelection)
}

/// Mean rating of one stage over the schedulers matching `select`, in
/// integer percent.
pub fn feature_mean(
    matrix: &MappingMatrix,
    stage: StageId,
    select: impl Fn(&SchedulerFeatures) -> bool,
) -> Result<u32, MappingError> {
    feature_mean_exact(matrix, stage, select).map(Mean::rounded)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Partition {
    /// Academia first, industry second.
    Origin,
    /// Pre-2010 first, post-2010 second.
    Era,
}

impl Partition {
    fn sides(self, f: &SchedulerFeatures) -> bool {
        match self {
            Partition::Origin => f.origin == Origin::Academia,
            Partition::Era => f.era == Era::Pre2010,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageDiff {
    pub stage: StageId,
    pub mean_a: Mean,
    pub mean_b: Mean,
}

impl StageDiff {
    pub fn difference(&self) -> f64 {
        (self.mean_a.value() - self.mean_b.value()).abs()
    }
}

/// The `k` stages whose mean rating differs most between the two sides of
/// `partition`. Differences are compared exactly before rounding; equal
/// differences keep catalog stage order.
pub fn top_k_diff(
    matrix: &MappingMatrix,
    partition: Partition,
    k: usize,
) -> Result<Vec<StageDiff>, MappingError> {
    let mut diffs = Vec::with_capacity(StageId::ALL.len());
    for stage in StageId::ALL {
        diffs.push(StageDiff {
            stage,
            mean_a: feature_mean_exact(matrix, stage, |f| partition.sides(f))?,
            mean_b: feature_mean_exact(matrix, stage, |f| !partition.sides(f))?,
        });
    }
    diffs.sort_by(|x, y| {
        Mean::abs_diff_cmp((y.mean_a, y.mean_b), (x.mean_a, x.mean_b)).then(x.stage.cmp(&y.stage))
    });
    diffs.truncate(k);
    Ok(diffs)
}

/// Heat-map bucket of a percentage: `[0,25)`, `[25,50)`, `[50,75)`, `[75,100]`.
pub fn bucketize(percent: f64) -> Result<usize, MappingError> {
    if !(0.0..=100.0).contains(&percent) {
        return Err(MappingError::OutOfRange(percent));
    }
    Ok(((percent / 25.0) as usize).min(3))
}

fn level_code(level: MatchLevel) -> &'static str {
    match level {
        MatchLevel::Full => "F",
        MatchLevel::Partial => "P",
        MatchLevel::None => "N",
    }
}

/// Per-scheduler group scores plus the T1, T2, R4 and R5 ratings.
pub fn groups_report(matrix: &MappingMatrix) -> String {
    let mut out = String::from("scheduler,origin,era,deployment,J,T,M,R,T1,T2,R4,R5\n");
    for row in &matrix.schedulers {
        let f = row.features;
        let origin = if f.origin == Origin::Academia {
            "A"
        } else {
            "I"
        };
        let era = if f.era == Era::Pre2010 { "O" } else { "N" };
        let deployment = if f.deployment == Deployment::Single {
            "S"
        } else {
            "M"
        };
        write!(out, "{},{origin},{era},{deployment}", row.name).unwrap();
        for group in StageGroup::ALL {
            write!(out, ",{}", group_mean(row, group).rounded()).unwrap();
        }
        for stage in [StageId::T1, StageId::T2, StageId::R4, StageId::R5] {
            write!(out, ",{}", level_code(row.cell(stage))).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Top-`k` stage differences for a partition as CSV.
pub fn diff_report(
    matrix: &MappingMatrix,
    partition: Partition,
    k: usize,
) -> Result<String, MappingError> {
    let mut out = match partition {
        Partition::Origin => String::from("rank,stage,academia,industry\n"),
        Partition::Era => String::from("rank,stage,pre2010,post2010\n"),
    };
    for (rank, d) in top_k_diff(matrix, partition, k)?.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{}",
            rank + 1,
            d.stage,
            d.mean_a.rounded(),
            d.mean_b.rounded()
        )
        .unwrap();
    }
    Ok(out)
}

/// Per-scheduler group scores keyed by name, for programmatic checks.
pub fn group_table(matrix: &MappingMatrix) -> BTreeMap<String, [u32; 4]> {
    matrix
        .schedulers
        .iter()
        .map(|row| {
            let scores = StageGroup::ALL.map(|g| group_mean(row, g).rounded());
            (row.name.clone(), scores)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header() -> String {
        let stages: Vec<&str> = StageId::ALL.iter().map(|s| s.as_str()).collect();
        format!("scheduler,origin,era,deployment,{}", stages.join(","))
    }

    fn uniform_row(name: &str, code: &str) -> String {
        format!("{name},A,O,S,{}", vec![code; 33].join(","))
    }

    #[test]
    fn bundled_has_14_complete_rows() {
        let m = bundled();
        assert_eq!(m.schedulers.len(), 14);
    }

    #[test]
    fn condor_job_cells() {
        let m = bundled();
        let condor = m.scheduler("Condor").unwrap();
        let j: Vec<MatchLevel> = StageGroup::Job.stages().map(|s| condor.cell(s)).collect();
        use MatchLevel::*;
        assert_eq!(j, vec![Full, None, None, Partial, Full, Full, Full]);
    }

    #[test]
    fn sparrow_management_cells() {
        let m = bundled();
        let sparrow = m.scheduler("Sparrow").unwrap();
        for stage in StageGroup::Management.stages() {
            let full = matches!(stage, StageId::M2 | StageId::M3 | StageId::M5 | StageId::M6);
            let expected = if full {
                MatchLevel::Full
            } else {
                MatchLevel::None
            };
            assert_eq!(sparrow.cell(stage), expected, "{stage}");
        }
    }

    #[test]
    fn malformed_inputs() {
        let bad_cell = format!("{}\n{}", header(), uniform_row("X", "X"));
        assert!(matches!(
            parse_mapping(&bad_cell),
            Err(MappingError::BadCell { .. })
        ));

        let short = format!("{}\nS,A,O,S,F,F\n", header());
        assert!(matches!(
            parse_mapping(&short),
            Err(MappingError::MissingCell { .. })
        ));

        let unknown_stage = header().replace("R7", "R8");
        assert_eq!(
            parse_mapping(&unknown_stage),
            Err(MappingError::UnknownStage("R8".into()))
        );

        let missing_stage = header().replace(",R7", "");
        assert_eq!(
            parse_mapping(&missing_stage),
            Err(MappingError::MissingColumn(StageId::R7))
        );

        let bad_origin = format!(
            "{}\n{}",
            header(),
            uniform_row("X", "F").replace(",A,", ",Q,")
        );
        assert!(matches!(
            parse_mapping(&bad_origin),
            Err(MappingError::UnknownFeature {
                feature: "origin",
                ..
            })
        ));
    }

    #[test]
    fn condor_group_scores() {
        let m = bundled();
        assert_eq!(group_score(&m, "Condor", StageGroup::Job), Ok(64));
        assert_eq!(group_score(&m, "Condor", StageGroup::Task), Ok(88));
        assert_eq!(group_score(&m, "Condor", StageGroup::Resource), Ok(71));
        assert_eq!(group_score(&m, "Apollo", StageGroup::Management), Ok(100));
        assert!(group_score(&m, "Nobody", StageGroup::Job).is_err());
    }

    #[test]
    fn all_none_scheduler_scores_zero() {
        let m = parse_mapping(&format!("{}\n{}", header(), uniform_row("Z", "N"))).unwrap();
        for g in StageGroup::ALL {
            assert_eq!(group_score(&m, "Z", g), Ok(0));
        }
    }

    #[test]
    fn feature_means() {
        let m = bundled();
        let academia = |f: &SchedulerFeatures| f.origin == Origin::Academia;
        let industry = |f: &SchedulerFeatures| f.origin == Origin::Industry;
        assert_eq!(feature_mean(&m, StageId::T11, academia), Ok(13));
        assert_eq!(feature_mean(&m, StageId::T11, industry), Ok(83));
        assert_eq!(
            feature_mean(&m, StageId::R4, |f| f.era == Era::Post2010),
            Ok(71)
        );
        assert_eq!(
            feature_mean(&m, StageId::R4, |_| false),
            Err(MappingError::EmptySelection)
        );
    }

    #[test]
    fn top_diffs() {
        let m = bundled();
        let origin = top_k_diff(&m, Partition::Origin, 10).unwrap();
        let find = |d: &[StageDiff], s| {
            let d = d.iter().find(|d| d.stage == s).expect("stage in top 10");
            (d.mean_a.rounded(), d.mean_b.rounded())
        };
        assert_eq!(find(&origin, StageId::T11), (13, 83));
        assert_eq!(find(&origin, StageId::T10), (31, 92));
        let era = top_k_diff(&m, Partition::Era, 10).unwrap();
        assert_eq!(find(&era, StageId::R4), (21, 71));

        let single = format!(
            "scheduler,origin,era,deployment,{}\n",
            StageId::ALL.map(|s| s.as_str()).join(",")
        );
        let m = parse_mapping(
            &(single
                + &uniform_row("A1", "F")
                + "\n"
                + &uniform_row("I1", "N").replace(",A,", ",I,")),
        )
        .unwrap();
        let top = top_k_diff(&m, Partition::Origin, 1).unwrap();
        assert_eq!(top.len(), 1);
        // All stages tie at 100, so catalog order decides.
        assert_eq!(top[0].stage, StageId::J1);
    }

    #[test]
    fn buckets() {
        assert_eq!(bucketize(0.0), Ok(0));
        assert_eq!(bucketize(24.9), Ok(0));
        assert_eq!(bucketize(25.0), Ok(1));
        assert_eq!(bucketize(50.0), Ok(2));
        assert_eq!(bucketize(100.0), Ok(3));
        assert!(bucketize(100.5).is_err());
        assert!(bucketize(-1.0).is_err());
    }

    #[test]
    fn reports_have_expected_shape() {
        let m = bundled();
        let groups = groups_report(&m);
        assert_eq!(groups.lines().count(), 15);
        assert!(groups.contains("\nCondor,A,O,M,64,88,29,71,"));
        let diff = diff_report(&m, Partition::Era, 10).unwrap();
        assert_eq!(diff.lines().count(), 11);
        assert!(diff.starts_with("rank,stage,pre2010,post2010\n1,"));
    }
}
