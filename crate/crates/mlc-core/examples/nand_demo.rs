//! Settle a NAND gate at each input state and print the classified outputs.

use mlc_core::analysis::truth_table;
use mlc_core::dynamics::SimParams;
use mlc_core::geometry::{solve_core, CoreSpec};
use mlc_core::model::{build_gate, GateKind, SignalMode};

fn main() {
    let core = solve_core(CoreSpec::paper_default(), 1e-12).unwrap();
    let gate =
        build_gate(GateKind::Nand, SignalMode::Expand, SignalMode::Expand, &core).unwrap();
    let params = SimParams { seed: 1, record_every: 500, ..Default::default() };
    let rows = truth_table(&gate, &["in1", "in2"], 10.0, 1, params).unwrap();
    println!("in1 in2 | out  (length, margin)");
    for r in rows {
        println!(
            "  {}   {} |  {}   ({:.3} sigma, {:.3})",
            r.inputs[0], r.inputs[1], r.output_state, r.mean_length, r.min_margin
        );
    }
}
