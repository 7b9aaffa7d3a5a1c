//! Prints a synthetic workflow trace.
//!
//! Usage: `synth_trace <workflows> <seed> [task-limit]`

use schedsim_core::synth::{generate, SynthParams};
use schedsim_core::workload::emit_trace;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize| {
        args.get(i)
            .map(|a| a.parse::<u64>().expect("numeric argument"))
    };
    let params = SynthParams {
        workflows: arg(0).unwrap_or(100) as usize,
        task_limit: arg(2).map(|n| n as usize),
        ..SynthParams::default()
    };
    print!("{}", emit_trace(&generate(&params, arg(1).unwrap_or(0))));
}
