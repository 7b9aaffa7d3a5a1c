//! Task and job metrics, per-run averages, and the CSV outputs.
//!
//! Per task: waiting time, execution time and response time (TRT). Per job:
//! makespan (JMS, last finish minus first submit), waiting time (JWT, first
//! start minus first submit) and normalized schedule length (NJSL, makespan
//! over critical-path length).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::engine::{SimulationResult, TaskRecord};
use crate::pipeline::{stage_order, StageTiming};
use crate::time::SimTime;
use crate::workload::{critical_path_length, JobId, TaskId, TraceError, WorkloadTrace};

pub const TASK_CSV_HEADER: &str =
    "config,repetition,task_id,job_id,submit_us,start_us,finish_us,wait_us,exec_us,trt_us";
pub const JOB_CSV_HEADER: &str = "config,repetition,job_id,jms_us,njsl,jwt_us";
pub const STAGE_CSV_HEADER: &str =
    "config,repetition,cycle_index,sim_time_us,stage,duration_ns,queue_length";
pub const SUMMARY_CSV_HEADER: &str = "config,repetitions,avg_jms_s,avg_njsl,avg_jwt_s,avg_trt_s";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskMetrics {
    pub record: TaskRecord,
    pub wait: SimTime,
    pub exec: SimTime,
    pub trt: SimTime,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JobMetrics {
    pub job_id: JobId,
    pub jms: SimTime,
    pub njsl: f64,
    pub jwt: SimTime,
    pub critical_path: SimTime,
}

/// Arithmetic means in seconds (NJSL is dimensionless). Zero when there is
/// nothing to average.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Averages {
    pub avg_trt: f64,
    pub avg_jms: f64,
    pub avg_njsl: f64,
    pub avg_jwt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub config: String,
    pub repetition: u32,
    /// Warm-up runs are computed like any other but refused by [`summarize`].
    pub warm_up: bool,
    pub tasks: Vec<TaskMetrics>,
    pub jobs: Vec<JobMetrics>,
    pub averages: Averages,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("run is incomplete: task {0} has no completion record")]
    Incomplete(TaskId),
    #[error("run has a record for task {0} which is not in the trace")]
    UnknownTask(TaskId),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("cannot summarize an empty list of reports")]
    NoReports,
    #[error("cannot summarize reports of different configurations ({0} and {1})")]
    MixedConfigs(String, String),
    #[error("report for {config} repetition {repetition} is a warm-up run")]
    WarmUp { config: String, repetition: u32 },
}

fn mean(values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    values.sum::<f64>() / n as f64
}

pub fn compute_metrics(
    result: &SimulationResult,
    trace: &WorkloadTrace,
    repetition: u32,
) -> Result<MetricsReport, MetricsError> {
    let by_task: BTreeMap<TaskId, &TaskRecord> =
        result.records.iter().map(|r| (r.task_id, r)).collect();
    if let Some(extra) = by_task.keys().find(|id| !trace.tasks.contains_key(id)) {
        return Err(MetricsError::UnknownTask(*extra));
    }

    let mut tasks = Vec::with_capacity(trace.tasks.len());
    for id in trace.tasks.keys() {
        let record = **by_task.get(id).ok_or(MetricsError::Incomplete(*id))?;
        tasks.push(TaskMetrics {
            record,
            wait: record.start_time - record.submit_time,
            exec: record.finish_time - record.start_time,
            trt: record.finish_time - record.submit_time,
        });
    }

    let mut jobs = Vec::with_capacity(trace.jobs.len());
    for job in trace.jobs.values() {
        let records = job.task_ids.iter().map(|id| by_task[id]);
        let first_submit = records
            .clone()
            .map(|r| r.submit_time)
            .min()
            .expect("non-empty job");
        let first_start = records
            .clone()
            .map(|r| r.start_time)
            .min()
            .expect("non-empty job");
        let last_finish = records.map(|r| r.finish_time).max().expect("non-empty job");
        let critical_path = critical_path_length(job, trace)?;
        let jms = last_finish - first_submit;
        jobs.push(JobMetrics {
            job_id: job.job_id,
            jms,
            njsl: jms.as_micros() as f64 / critical_path.as_micros() as f64,
            jwt: first_start - first_submit,
            critical_path,
        });
    }

    let averages = Averages {
        avg_trt: mean(tasks.iter().map(|t| t.trt.as_secs_f64())),
        avg_jms: mean(jobs.iter().map(|j| j.jms.as_secs_f64())),
        avg_njsl: mean(jobs.iter().map(|j| j.njsl)),
        avg_jwt: mean(jobs.iter().map(|j| j.jwt.as_secs_f64())),
    };

    Ok(MetricsReport {
        config: result.config.name(),
        repetition,
        warm_up: false,
        tasks,
        jobs,
        averages,
    })
}

/// Data rows of the task CSV for one report, ascending task id, no header.
pub fn task_csv_rows(report: &MetricsReport) -> String {
    let mut out = String::new();
    for t in &report.tasks {
        let r = &t.record;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            report.config,
            report.repetition,
            r.task_id,
            r.job_id,
            r.submit_time.as_micros(),
            r.start_time.as_micros(),
            r.finish_time.as_micros(),
            t.wait.as_micros(),
            t.exec.as_micros(),
            t.trt.as_micros()
        )
        .expect("writing to a String");
    }
    out
}

pub fn job_csv_rows(report: &MetricsReport) -> String {
    let mut out = String::new();
    for j in &report.jobs {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            report.config,
            report.repetition,
            j.job_id,
            j.jms.as_micros(),
            j.njsl,
            j.jwt.as_micros()
        )
        .expect("writing to a String");
    }
    out
}

/// Stage rows ordered by cycle, then by position in the cycle.
pub fn stage_csv_rows(timings: &[StageTiming], config: &str, repetition: u32) -> String {
    let position = |t: &StageTiming| stage_order().iter().position(|s| *s == t.stage);
    let mut rows: Vec<&StageTiming> = timings.iter().collect();
    rows.sort_by_key(|t| (t.cycle_index, position(t)));
    let mut out = String::new();
    for t in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            config,
            repetition,
            t.cycle_index,
            t.sim_time.as_micros(),
            t.stage,
            t.duration_ns,
            t.queue_length
        )
        .expect("writing to a String");
    }
    out
}

pub fn emit_task_csv(report: &MetricsReport) -> String {
    format!("{TASK_CSV_HEADER}\n{}", task_csv_rows(report))
}

pub fn emit_job_csv(report: &MetricsReport) -> String {
    format!("{JOB_CSV_HEADER}\n{}", job_csv_rows(report))
}

pub fn emit_stage_csv(timings: &[StageTiming], config: &str, repetition: u32) -> String {
    format!(
        "{STAGE_CSV_HEADER}\n{}",
        stage_csv_rows(timings, config, repetition)
    )
}

/// Means over repetitions of one configuration's per-run averages.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub config: String,
    pub repetitions: usize,
    pub averages: Averages,
}

pub fn summarize(reports: &[MetricsReport]) -> Result<Summary, MetricsError> {
    let first = reports.first().ok_or(MetricsError::NoReports)?;
    for r in reports {
        if r.warm_up {
            return Err(MetricsError::WarmUp {
                config: r.config.clone(),
                repetition: r.repetition,
            });
        }
        if r.config != first.config {
            return Err(MetricsError::MixedConfigs(
                first.config.clone(),
                r.config.clone(),
            ));
        }
    }
    let avg = |f: fn(&Averages) -> f64| mean(reports.iter().map(|r| f(&r.averages)));
    Ok(Summary {
        config: first.config.clone(),
        repetitions: reports.len(),
        averages: Averages {
            avg_trt: avg(|a| a.avg_trt),
            avg_jms: avg(|a| a.avg_jms),
            avg_njsl: avg(|a| a.avg_njsl),
            avg_jwt: avg(|a| a.avg_jwt),
        },
    })
}

pub fn emit_summary_csv(summaries: &[Summary]) -> String {
    let mut out = format!("{SUMMARY_CSV_HEADER}\n");
    for s in summaries {
        let a = &s.averages;
        writeln!(
            out,
            "{},{},{:.3},{:.3},{:.3},{:.3}",
            s.config, s.repetitions, a.avg_jms, a.avg_njsl, a.avg_jwt, a.avg_trt
        )
        .expect("writing to a String");
    }
    out
}
