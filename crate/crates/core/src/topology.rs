//! Datacenter machines and the setup file that describes them.
//!
//! A setup file lists clusters of machines, each machine given by the CPU
//! type identifiers it contains:
//!
//! ```json
//! {"clusters": [{"name": "fast", "machines": [{"cpus": [1]}, {"cpus": [1]}]}]}
//! ```
//!
//! A machine's core count is the sum over its CPUs and its clock is the
//! slowest CPU's clock.

use serde::Deserialize;
use thiserror::Error;

use crate::time::SimTime;
use crate::workload::Task;

pub type MachineId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CpuSpec {
    pub cpu_type_id: u32,
    pub cores: u32,
    pub clock_mhz: u32,
}

impl CpuSpec {
    /// Intel i7, 4 cores at 4100 MHz.
    pub const I7: CpuSpec = CpuSpec {
        cpu_type_id: 1,
        cores: 4,
        clock_mhz: 4100,
    };
    /// Intel i5, 2 cores at 3500 MHz.
    pub const I5: CpuSpec = CpuSpec {
        cpu_type_id: 2,
        cores: 2,
        clock_mhz: 3500,
    };

    pub fn builtin(cpu_type_id: u32) -> Option<CpuSpec> {
        [Self::I7, Self::I5]
            .into_iter()
            .find(|c| c.cpu_type_id == cpu_type_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Machine {
    pub machine_id: MachineId,
    pub cluster_name: String,
    pub cores: u32,
    pub clock_mhz: u32,
    /// Free cores; only changes inside a running simulation.
    pub available_cores: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    /// Ordered by id; this is also the machine enumeration order.
    pub machines: Vec<Machine>,
    /// Fastest clock in the topology. Trace runtimes are durations at this
    /// clock.
    pub reference_clock_mhz: u32,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("malformed setup file: {0}")]
    Malformed(String),
    #[error("unknown CPU type {cpu_type_id} in cluster {cluster:?}")]
    UnknownCpu { cluster: String, cpu_type_id: u32 },
    #[error("machine {index} of cluster {cluster:?} has no CPUs")]
    EmptyMachine { cluster: String, index: usize },
    #[error("topology has no machines")]
    NoMachines,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SetupFile {
    clusters: Vec<ClusterEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ClusterEntry {
    name: String,
    machines: Vec<MachineEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MachineEntry {
    cpus: Vec<u32>,
}

/// Parses a setup file. Machines are numbered cluster by cluster in file
/// order.
pub fn parse_setup(text: &str) -> Result<Topology, ConfigError> {
    let setup: SetupFile =
        serde_json::from_str(text).map_err(|e| ConfigError::Malformed(e.to_string()))?;
    let mut specs = Vec::new();
    for cluster in &setup.clusters {
        for (index, machine) in cluster.machines.iter().enumerate() {
            if machine.cpus.is_empty() {
                return Err(ConfigError::EmptyMachine {
                    cluster: cluster.name.clone(),
                    index,
                });
            }
            let cpus = machine
                .cpus
                .iter()
                .map(|&id| {
                    CpuSpec::builtin(id).ok_or_else(|| ConfigError::UnknownCpu {
                        cluster: cluster.name.clone(),
                        cpu_type_id: id,
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            let cores = cpus.iter().map(|c| c.cores).sum();
            let clock = cpus.iter().map(|c| c.clock_mhz).min().unwrap_or(0);
            specs.push((cluster.name.clone(), cores, clock));
        }
    }
    Topology::from_machines(specs)
}

impl Topology {
    /// Builds a topology from `(cluster, cores, clock_mhz)` triples.
    pub fn from_machines(
        specs: impl IntoIterator<Item = (String, u32, u32)>,
    ) -> Result<Topology, ConfigError> {
        let machines: Vec<Machine> = specs
            .into_iter()
            .enumerate()
            .map(|(machine_id, (cluster_name, cores, clock_mhz))| Machine {
                machine_id,
                cluster_name,
                cores,
                clock_mhz,
                available_cores: cores,
            })
            .collect();
        let reference_clock_mhz = machines
            .iter()
            .map(|m| m.clock_mhz)
            .max()
            .ok_or(ConfigError::NoMachines)?;
        Ok(Topology {
            machines,
            reference_clock_mhz,
        })
    }

    /// `count` single-CPU machines of one type in a single cluster.
    pub fn uniform(count: usize, cpu: CpuSpec) -> Topology {
        Self::from_machines((0..count).map(|_| ("default".to_string(), cpu.cores, cpu.clock_mhz)))
            .expect("uniform topology needs at least one machine")
    }

    /// 16 i7 machines followed by 16 i5 machines.
    pub fn reference_cluster() -> Topology {
        let fast = (0..16).map(|_| ("i7".to_string(), CpuSpec::I7.cores, CpuSpec::I7.clock_mhz));
        let slow = (0..16).map(|_| ("i5".to_string(), CpuSpec::I5.cores, CpuSpec::I5.clock_mhz));
        Self::from_machines(fast.chain(slow)).expect("non-empty")
    }

    pub fn total_cores(&self) -> u32 {
        self.machines.iter().map(|m| m.cores).sum()
    }

    pub fn max_machine_cores(&self) -> u32 {
        self.machines.iter().map(|m| m.cores).max().unwrap_or(0)
    }

    /// Runtime of `task` on `machine`, see [`scale_runtime`].
    pub fn effective_duration(&self, task: &Task, machine: &Machine) -> SimTime {
        scale_runtime(task.runtime, machine.clock_mhz, self.reference_clock_mhz)
    }
}

/// Dilates a reference-clock runtime to a machine running at `clock_mhz`:
/// `runtime * reference / clock`, rounded half-up to the microsecond.
pub fn scale_runtime(runtime: SimTime, clock_mhz: u32, reference_clock_mhz: u32) -> SimTime {
    let num = u128::from(runtime.as_micros()) * u128::from(reference_clock_mhz);
    let den = u128::from(clock_mhz);
    SimTime::from_micros(((2 * num + den) / (2 * den)) as u64)
}
