//! Browser bindings: an interactive logic-core design explorer and live
//! Brownian-dynamics gate/circuit simulations for a single static page.
//!
//! Build with `wasm-pack build --target web crates/mlc-wasm` and serve
//! `crates/mlc-wasm/www/`.

use mlc_core::analysis::classify_state;
use mlc_core::dynamics::{ActuationSchedule, Engine, SimParams};
use mlc_core::geometry::{solve_core, sweep_core, CoreSpec};
use mlc_core::model::{build_gate, Assembly, GateKind, SignalMode};
use mlc_core::netlist;
use wasm_bindgen::prelude::*;

fn err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn parse_kind(kind: &str) -> Result<GateKind, JsValue> {
    kind.parse::<GateKind>().map_err(|e| JsValue::from_str(&e))
}

/// Logic-core design explorer: sweep curves and the solved linkage.
#[wasm_bindgen]
pub struct CoreExplorer;

#[wasm_bindgen]
impl CoreExplorer {
    /// Sweep delta_out against delta_in for one core height. Returns
    /// interleaved `[delta_in, delta_out, ...]` with NaN marking infeasible
    /// points.
    pub fn sweep(h: f64, delta_in_max: f64, points: usize) -> Result<Vec<f64>, JsValue> {
        let dins: Vec<f64> =
            (0..points).map(|i| delta_in_max * i as f64 / (points - 1).max(1) as f64).collect();
        let rows = sweep_core(&dins, &[h]).map_err(err)?;
        Ok(rows
            .iter()
            .flat_map(|r| [r.delta_in_frac, r.delta_out_frac.unwrap_or(f64::NAN)])
            .collect())
    }

    /// Solved geometry as JSON for the given design point.
    pub fn solve(delta_in: f64, h: f64) -> Result<String, JsValue> {
        let spec = CoreSpec::new(delta_in, h).map_err(err)?;
        let g = solve_core(spec, 1e-12).map_err(err)?;
        Ok(serde_json::to_string(&g).unwrap())
    }

    /// Planar linkage coordinates at an actuation fraction in [0, 1] of the
    /// design stroke: `[ax, ay, bx, by, cx, cy, dx, dy]`. Both muscle links
    /// expand together, so the apex rides the perpendicular bisector.
    pub fn linkage(delta_in: f64, h: f64, fraction: f64) -> Result<Vec<f64>, JsValue> {
        let spec = CoreSpec::new(delta_in, h).map_err(err)?;
        let g = solve_core(spec, 1e-12).map_err(err)?;
        let s = g.phi.sin();
        let len = 1.0 + delta_in * fraction.clamp(0.0, 1.0);
        let cy = (len * len - s * s).max(0.0).sqrt();
        let dy = cy + (g.x_frac * g.x_frac).max(0.0).sqrt();
        Ok(vec![-s, 0.0, s, 0.0, 0.0, cy, 0.0, dy])
    }
}

/// A live Brownian-dynamics simulation of one gate.
#[wasm_bindgen]
pub struct GateSim {
    engine: Engine,
    assembly: Assembly,
    inputs: [bool; 2],
    kbt: f64,
}

#[wasm_bindgen]
impl GateSim {
    /// Build a gate at the paper design point. `kind` is AND/OR/NAND/NOR;
    /// modes are "expand"/"contract" or empty for the family default.
    #[wasm_bindgen(constructor)]
    pub fn new(kind: &str, muscle_mode: &str, output_mode: &str, kbt: f64, seed: u64) -> Result<GateSim, JsValue> {
        let kind = parse_kind(kind)?;
        let mode = |s: &str, default: SignalMode| match s {
            "expand" => Ok(SignalMode::Expand),
            "contract" => Ok(SignalMode::Contract),
            "" => Ok(default),
            other => Err(JsValue::from_str(&format!("unknown mode {other}"))),
        };
        let muscle = mode(muscle_mode, kind.default_muscle_mode())?;
        let output = mode(output_mode, kind.default_output_mode())?;
        let core = solve_core(CoreSpec::paper_default(), 1e-12).map_err(err)?;
        let assembly = build_gate(kind, muscle, output, &core).map_err(err)?;
        let params = SimParams { kbt, seed, record_every: 1000, ..SimParams::default() };
        let schedule = ActuationSchedule::constant(&[("in1", false), ("in2", false)]);
        let engine = Engine::new(&assembly, params, &schedule).map_err(err)?;
        Ok(GateSim { engine, assembly, inputs: [false, false], kbt })
    }

    pub fn set_input(&mut self, index: usize, on: bool) -> Result<(), JsValue> {
        if index > 1 {
            return Err(JsValue::from_str("input index must be 0 or 1"));
        }
        self.inputs[index] = on;
        let schedule =
            ActuationSchedule::constant(&[("in1", self.inputs[0]), ("in2", self.inputs[1])]);
        self.engine.set_schedule(&schedule).map_err(err)
    }

    /// Advance `n` integration steps.
    pub fn step(&mut self, n: usize) -> Result<(), JsValue> {
        for _ in 0..n {
            self.engine.step().map_err(err)?;
        }
        Ok(())
    }

    /// Elapsed simulated time in t0 units.
    pub fn time(&self) -> f64 {
        self.engine.time_t0()
    }

    pub fn kbt(&self) -> f64 {
        self.kbt
    }

    /// Slab axis segments for drawing: 6 floats per slab
    /// `[x0,y0,z0, x1,y1,z1]` in sigma units.
    pub fn slab_segments(&self) -> Vec<f64> {
        let states = self.engine.body_states();
        let mut out = Vec::with_capacity(states.len() * 6);
        for (slab, st) in self.assembly.slabs.iter().zip(&states) {
            let h = slab.half_extents[0];
            let a = st.position + st.orientation.rotate(mlc_core::math::Vec3::new(-h, 0.0, 0.0));
            let b = st.position + st.orientation.rotate(mlc_core::math::Vec3::new(h, 0.0, 0.0));
            out.extend_from_slice(&[a.x, a.y, a.z, b.x, b.y, b.z]);
        }
        out
    }

    /// Muscle bond segments (current endpoints), 6 floats per muscle.
    pub fn muscle_segments(&self) -> Vec<f64> {
        let states = self.engine.body_states();
        let world = |at: &mlc_core::model::AttachmentPoint| {
            let idx = self.assembly.slabs.iter().position(|s| s.id == at.body).unwrap();
            let st = &states[idx];
            st.position
                + st.orientation.rotate(mlc_core::math::Vec3::new(at.local[0], at.local[1], at.local[2]))
        };
        let mut out = Vec::new();
        for m in &self.assembly.muscles {
            let a = world(&m.endpoints.0);
            let b = world(&m.endpoints.1);
            out.extend_from_slice(&[a.x, a.y, a.z, b.x, b.y, b.z]);
        }
        out
    }

    /// Probe readouts as JSON: id, length, state and margin per probe.
    pub fn probes_json(&self) -> String {
        let lengths = self.engine.probe_lengths();
        let readings: Vec<_> = self
            .assembly
            .probes
            .iter()
            .zip(&lengths)
            .map(|(p, &len)| classify_state(len, p))
            .collect();
        serde_json::to_string(&readings).unwrap()
    }
}

/// The two-gate chain of the frequency-response experiment, actuated by a
/// square wave.
#[wasm_bindgen]
pub struct ChainSim {
    engine: Engine,
    assembly: Assembly,
    out_index: usize,
    period: f64,
}

#[wasm_bindgen]
impl ChainSim {
    #[wasm_bindgen(constructor)]
    pub fn new(units: usize, period_t0: f64, kbt: f64, seed: u64) -> Result<ChainSim, JsValue> {
        let core = solve_core(CoreSpec::paper_default(), 1e-12).map_err(err)?;
        let text = mlc_core::analysis::two_gate_chain_netlist(units.max(1), period_t0);
        let spec = netlist::parse(&text).map_err(err)?;
        let (assembly, schedule) = netlist::elaborate(&spec, &core).map_err(err)?;
        let params = SimParams { kbt, seed, record_every: 1000, ..SimParams::default() };
        let engine = Engine::new(&assembly, params, &schedule).map_err(err)?;
        let out_index =
            assembly.probes.iter().position(|p| p.id == "g2.out").expect("chain exposes g2.out");
        Ok(ChainSim { engine, assembly, out_index, period: period_t0 })
    }

    pub fn step(&mut self, n: usize) -> Result<(), JsValue> {
        for _ in 0..n {
            self.engine.step().map_err(err)?;
        }
        Ok(())
    }

    pub fn time(&self) -> f64 {
        self.engine.time_t0()
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Normalized output response in [0, 1] plus the ideal drive state:
    /// `[response, ideal]`.
    pub fn response(&self) -> Vec<f64> {
        let len = self.engine.probe_lengths()[self.out_index];
        let probe = &self.assembly.probes[self.out_index];
        let normalized = (len - probe.rest_length) / probe.signal;
        let ideal = f64::from(self.engine.schedule_state("sig").unwrap_or(false));
        vec![normalized, ideal]
    }

    /// Slab axis segments, as in [`GateSim::slab_segments`].
    pub fn slab_segments(&self) -> Vec<f64> {
        let states = self.engine.body_states();
        let mut out = Vec::with_capacity(states.len() * 6);
        for (slab, st) in self.assembly.slabs.iter().zip(&states) {
            let h = slab.half_extents[0];
            let a = st.position + st.orientation.rotate(mlc_core::math::Vec3::new(-h, 0.0, 0.0));
            let b = st.position + st.orientation.rotate(mlc_core::math::Vec3::new(h, 0.0, 0.0));
            out.extend_from_slice(&[a.x, a.y, a.z, b.x, b.y, b.z]);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explorer_sweep_hits_the_design_point() {
        let pts = CoreExplorer::sweep(2.0, 0.6, 31).unwrap();
        assert_eq!(pts.len(), 62);
        // delta_in = 0.5 lands at index 25 (0.02 grid): delta_out ~ 0.557.
        let i = pts.chunks(2).position(|c| (c[0] - 0.5).abs() < 1e-9).unwrap();
        assert!((pts[2 * i + 1] - 0.557).abs() < 0.01);
    }

    #[test]
    fn gate_sim_steps_and_reports_probes() {
        let mut sim = GateSim::new("NAND", "", "", 0.0, 1).unwrap();
        sim.set_input(0, true).unwrap();
        sim.set_input(1, true).unwrap();
        sim.step(40_000).unwrap();
        let probes: Vec<serde_json::Value> = serde_json::from_str(&sim.probes_json()).unwrap();
        let out = probes.iter().find(|p| p["probe"] == "out").unwrap();
        // NAND(1,1) = 0: the expanding output returns to rest.
        assert_eq!(out["state"], 0);
        assert_eq!(sim.slab_segments().len(), 8 * 6);
        assert_eq!(sim.muscle_segments().len(), 2 * 6);
    }

    #[test]
    fn chain_sim_tracks_the_drive() {
        let mut sim = ChainSim::new(1, 4.0, 0.0, 1).unwrap();
        // Drive goes high in the second half-period.
        sim.step(60_000).unwrap();
        let r = sim.response();
        assert_eq!(r[1], 1.0);
        assert!(r[0] > 0.8, "response {r:?}");
    }
}
