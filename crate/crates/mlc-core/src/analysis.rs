//! Trajectory reduction: binary state classification, truth tables,
//! frequency-response RMSD, attenuation statistics, shape classification and
//! the thermal-scale estimates.

use crate::dynamics::{run, ActuationSchedule, DynamicsError, SimParams, Trajectory};
use crate::geometry::CoreGeometry;
use crate::model::{Assembly, ModelError, Probe, TetrisCircuit};
use crate::netlist;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    /// A classified state differed across trials: the settle time is too
    /// short or the noise too large.
    #[error("Unsettled: {0}")]
    Unsettled(String),
    #[error("NoCycles: trajectory shorter than one actuation period ({0})")]
    NoCycles(String),
    #[error("InvalidSpec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Netlist(#[from] netlist::NetlistError),
}

pub type Result<T> = std::result::Result<T, AnalysisError>;

/// A probe length classified against the midpoint threshold
/// `rest + signal/2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateReading {
    pub probe: String,
    pub length: f64,
    pub state: u8,
    /// Distance from the classification threshold, in sigma.
    pub margin: f64,
}

/// Classify a probe length into a binary state. For a positive signal,
/// state 1 requires the length to reach past the midpoint threshold; for a
/// negative signal, to fall below it.
pub fn classify_state(length: f64, probe: &Probe) -> StateReading {
    let threshold = probe.rest_length + probe.signal / 2.0;
    let state = if probe.signal > 0.0 {
        u8::from(length >= threshold)
    } else {
        u8::from(length <= threshold)
    };
    StateReading { probe: probe.id.clone(), length, state, margin: (length - threshold).abs() }
}

/// Mean of the final 20% of a series (the settled window).
pub fn settled_mean(series: &[f64]) -> f64 {
    let n = series.len();
    let tail = &series[n - (n / 5).max(1)..];
    tail.iter().sum::<f64>() / tail.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruthTableRow {
    pub inputs: Vec<u8>,
    pub output_state: u8,
    /// Worst-case classification margin across trials, in sigma.
    pub min_margin: f64,
    pub mean_length: f64,
}

/// Simulate every input combination and classify the settled output.
///
/// Each of the `2^N` rows runs `trials` independent simulations (per-trial
/// seeds derived from `params.seed`) with a constant schedule for `settle`
/// t0 units; the output is the time-averaged length over the final 20% of
/// samples. A row whose state differs across trials is `Unsettled`.
pub fn truth_table(
    assembly: &Assembly,
    input_channels: &[&str],
    settle_t0: f64,
    trials: usize,
    params: SimParams,
) -> Result<Vec<TruthTableRow>> {
    if trials < 1 {
        return Err(AnalysisError::InvalidSpec("trials must be >= 1".into()));
    }
    let out_port = assembly
        .port("out")
        .or_else(|| {
            let outs: Vec<_> = assembly
                .ports
                .iter()
                .filter(|p| p.direction == crate::model::PortDirection::Output)
                .collect();
            if outs.len() == 1 {
                Some(outs[0])
            } else {
                None
            }
        })
        .ok_or_else(|| AnalysisError::InvalidSpec("assembly exposes no `out` port".into()))?;
    let out_probe = assembly.probe(&out_port.probe).unwrap().clone();

    let n = input_channels.len();
    let combos: Vec<Vec<bool>> = (0..1usize << n)
        .map(|m| (0..n).map(|i| (m >> i) & 1 == 1).collect())
        .collect();

    let jobs: Vec<(usize, usize)> = (0..combos.len())
        .flat_map(|c| (0..trials).map(move |t| (c, t)))
        .collect();
    let readings: Vec<Result<(usize, StateReading)>> = jobs
        .par_iter()
        .map(|&(c, t)| {
            let combo = &combos[c];
            let settings: Vec<(&str, bool)> =
                input_channels.iter().copied().zip(combo.iter().copied()).collect();
            let sched = ActuationSchedule::constant(&settings);
            let p = SimParams {
                seed: params.seed.wrapping_add(7919 * t as u64).wrapping_add(104_729 * c as u64),
                ..params
            };
            let traj = run(assembly, p, &sched, settle_t0)?;
            let series = traj.probe_series(&out_probe.id).unwrap();
            Ok((c, classify_state(settled_mean(&series), &out_probe)))
        })
        .collect();

    let mut results = Vec::new();
    for r in readings {
        match r {
            Ok(v) => results.push(v),
            Err(e) => return Err(e),
        }
    }
    let mut rows = Vec::new();
    for (c, combo) in combos.iter().enumerate() {
        let mut state: Option<u8> = None;
        let mut min_margin = f64::INFINITY;
        let mut mean_length = 0.0;
        let mut count = 0usize;
        for (rc, reading) in &results {
            if *rc != c {
                continue;
            }
            match state {
                None => state = Some(reading.state),
                Some(s) if s != reading.state => {
                    return Err(AnalysisError::Unsettled(format!(
                        "inputs {combo:?}: state flips across trials"
                    )))
                }
                _ => {}
            }
            min_margin = min_margin.min(reading.margin);
            mean_length += reading.length;
            count += 1;
        }
        rows.push(TruthTableRow {
            inputs: combo.iter().map(|&b| u8::from(b)).collect(),
            output_state: state.unwrap(),
            min_margin,
            mean_length: mean_length / count as f64,
        });
    }
    Ok(rows)
}

pub fn truth_table_csv(rows: &[TruthTableRow], input_names: &[&str]) -> String {
    let mut out = String::new();
    for name in input_names {
        out.push_str(name);
        out.push(',');
    }
    out.push_str("output,min_margin,mean_length\n");
    for r in rows {
        for v in &r.inputs {
            out.push_str(&format!("{v},"));
        }
        out.push_str(&format!("{},{},{}\n", r.output_state, r.min_margin, r.mean_length));
    }
    out
}

/// Root-mean-square deviation of a probe's response from the ideal 0/1
/// trace of `channel`, over whole actuation cycles.
///
/// The raw lengths are first mapped affinely to [0, 1] (rest -> 0, fully
/// actuated -> 1), which makes the result invariant under affine rescaling
/// of the raw probe lengths. `period_t0 = None` evaluates the whole trace
/// (constant schedules).
pub fn rmsd_response(
    traj: &Trajectory,
    probe: &Probe,
    channel: &str,
    period_t0: Option<f64>,
) -> Result<f64> {
    let series = traj
        .probe_series(&probe.id)
        .ok_or_else(|| AnalysisError::InvalidSpec(format!("no probe {}", probe.id)))?;
    let ideal = traj
        .channel_trace(channel)
        .ok_or_else(|| AnalysisError::InvalidSpec(format!("no channel {channel} in trace")))?;
    let t_end = *traj.times.last().unwrap();
    let cutoff = match period_t0 {
        Some(p) => {
            let cycles = (t_end / p).floor();
            if cycles < 1.0 {
                return Err(AnalysisError::NoCycles(format!(
                    "duration {t_end} t0 < period {p} t0"
                )));
            }
            cycles * p
        }
        None => t_end,
    };
    let mut sum = 0.0;
    let mut count = 0usize;
    for (i, &t) in traj.times.iter().enumerate() {
        if t > cutoff + 1e-12 {
            break;
        }
        let normalized = (series[i] - probe.rest_length) / probe.signal;
        let d = normalized - ideal[i] as f64;
        sum += d * d;
        count += 1;
    }
    Ok((sum / count as f64).sqrt())
}

/// The canonical two-gate chain: the output of the first AND gate runs
/// through a connector into the second gate's first input. All muscles sit
/// on one channel and are expanded simultaneously, so the second output
/// tracks the cycle with the transmission lag of the chain. `period_t0`
/// sets the square-wave actuation cycle on channel `sig`.
pub fn two_gate_chain_netlist(units: usize, period_t0: f64) -> String {
    format!(
        "muscle my mode expand channel sig\n\
         muscle mb mode expand channel sig\n\
         muscle mc mode expand channel sig\n\
         gate g1 kind AND out_mode expand\n\
         gate g2 kind AND out_mode expand\n\
         connector c1 units {units}\n\
         wire my.out -> g1.in1\n\
         wire mb.out -> g1.in2\n\
         wire g1.out -> c1.in\n\
         wire c1.out -> g2.in1\n\
         wire mc.out -> g2.in2\n\
         schedule sig square period {period_t0} duty 0.5\n"
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FreqResponsePoint {
    /// Actuation frequency in 1/t0.
    pub frequency: f64,
    pub rmsd: f64,
}

/// Frequency response of the two-gate chain: for each frequency, actuate
/// both first-gate muscles with a square wave and measure the RMSD of the
/// second gate's output against the ideal cycle over `cycles` whole periods.
pub fn frequency_response(
    units: usize,
    frequencies: &[f64],
    cycles: usize,
    params: SimParams,
    core: &CoreGeometry,
) -> Result<Vec<FreqResponsePoint>> {
    let points: Vec<Result<FreqResponsePoint>> = frequencies
        .par_iter()
        .map(|&freq| {
            if !(freq > 0.0) {
                return Err(AnalysisError::InvalidSpec("frequency must be > 0".into()));
            }
            let period = 1.0 / freq;
            let spec = netlist::parse(&two_gate_chain_netlist(units, period))?;
            let (asm, sched) = netlist::elaborate(&spec, core)?;
            let traj = run(&asm, params, &sched, period * cycles as f64)?;
            let out_probe = asm.probe("g2.out").unwrap();
            let rmsd = rmsd_response(&traj, out_probe, "sig", Some(period))?;
            Ok(FreqResponsePoint { frequency: freq, rmsd })
        })
        .collect();
    points.into_iter().collect()
}

pub fn freq_response_csv(points: &[FreqResponsePoint]) -> String {
    let mut out = String::from("frequency,rmsd\n");
    for p in points {
        out.push_str(&format!("{},{}\n", p.frequency, p.rmsd));
    }
    out
}

/// Per-connector-unit signal statistics over repeated settled trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttenuationStats {
    pub tolerance: f64,
    /// One entry per unit index (1-based order along the chain).
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub samples: usize,
}

/// Build an AND gate driving a connector of `units`, apply `tolerance` to
/// every joint in the system, actuate to state 1 and measure each stage's
/// settled signal length across `trials`.
pub fn signal_attenuation(
    units: usize,
    tolerance: f64,
    trials: usize,
    settle_t0: f64,
    params: SimParams,
    core: &CoreGeometry,
) -> Result<AttenuationStats> {
    if trials < 2 {
        return Err(AnalysisError::InvalidSpec("trials must be >= 2".into()));
    }
    let text = format!(
        "muscle my mode expand channel sig\n\
         muscle mb mode expand channel sig\n\
         gate g1 kind AND out_mode expand\n\
         connector c1 units {units}\n\
         wire my.out -> g1.in1\n\
         wire mb.out -> g1.in2\n\
         wire g1.out -> c1.in\n"
    );
    let spec = netlist::parse(&text)?;
    let (asm, _) = netlist::elaborate(&spec, core)?;
    // Fig 5D applies the mechanical tolerance to every joint in the system.
    let asm = asm.with_tolerance(tolerance);
    let sched = ActuationSchedule::constant(&[("sig", true)]);

    let stage_ids: Vec<String> = (1..=units).map(|u| format!("c1.stage{u}")).collect();
    let per_trial: Vec<Result<Vec<f64>>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let p = SimParams { seed: params.seed.wrapping_add(6151 * t as u64), ..params };
            let traj = run(&asm, p, &sched, settle_t0)?;
            Ok(stage_ids
                .iter()
                .map(|id| settled_mean(&traj.probe_series(id).unwrap()))
                .collect())
        })
        .collect();

    let mut rows = Vec::new();
    for r in per_trial {
        rows.push(r?);
    }
    let mut mean = vec![0.0; units];
    let mut var = vec![0.0; units];
    for row in &rows {
        for (i, v) in row.iter().enumerate() {
            mean[i] += v;
        }
    }
    for m in &mut mean {
        *m /= rows.len() as f64;
    }
    for row in &rows {
        for (i, v) in row.iter().enumerate() {
            var[i] += (v - mean[i]) * (v - mean[i]);
        }
    }
    // Population variance over the trial ensemble.
    for v in &mut var {
        *v /= rows.len() as f64;
    }
    Ok(AttenuationStats { tolerance, mean, variance: var, samples: rows.len() })
}

pub fn attenuation_csv(stats: &[AttenuationStats]) -> String {
    let mut out = String::from("tolerance,unit,mean_signal_length,variance,samples\n");
    for s in stats {
        for (i, (m, v)) in s.mean.iter().zip(&s.variance).enumerate() {
            out.push_str(&format!("{},{},{},{},{}\n", s.tolerance, i + 1, m, v, s.samples));
        }
    }
    out
}

/// Canonical shape signature of a 4-unit skeleton: one character per unit,
/// `s` straight, `u`/`d` for the unit's first/second hinge engaged, `b` for
/// both. The all-rest pattern is the straight "I" bar.
pub fn classify_tetris(dof_states: &[u8]) -> Result<String> {
    if dof_states.len() != 8 {
        return Err(AnalysisError::InvalidSpec(format!(
            "expected 8 DOF readings, got {}",
            dof_states.len()
        )));
    }
    let mut sig = String::with_capacity(4);
    for unit in 0..4 {
        let a = dof_states[2 * unit] != 0;
        let b = dof_states[2 * unit + 1] != 0;
        sig.push(match (a, b) {
            (false, false) => 's',
            (true, false) => 'u',
            (false, true) => 'd',
            (true, true) => 'b',
        });
    }
    Ok(sig)
}

/// Human-readable label for a shape signature.
pub fn tetris_label(signature: &str) -> String {
    if signature.chars().all(|c| c == 's') {
        "I".to_string()
    } else {
        signature.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TetrisOutcome {
    pub inputs: (u8, u8),
    pub dof_states: Vec<u8>,
    pub signature: String,
    pub label: String,
}

/// Simulate the robot for every (y, b) input and classify the folded shape
/// from the settled DOF probes.
pub fn tetris_shapes(
    circuit: &TetrisCircuit,
    core: &CoreGeometry,
    settle_t0: f64,
    params: SimParams,
) -> Result<Vec<TetrisOutcome>> {
    let robot = crate::model::build_tetris_robot(circuit, core)?;
    let dof_probes: Vec<Probe> = (1..=8)
        .map(|i| robot.probe(&format!("skel.dof{i}")).unwrap().clone())
        .collect();
    let inputs = [(false, false), (true, false), (false, true), (true, true)];
    let outcomes: Vec<Result<TetrisOutcome>> = inputs
        .par_iter()
        .map(|&(y, b)| {
            let sched = ActuationSchedule::constant(&[("y", y), ("b", b), ("hold", false)]);
            let traj = run(&robot, params, &sched, settle_t0)?;
            let states: Vec<u8> = dof_probes
                .iter()
                .map(|p| {
                    let series = traj.probe_series(&p.id).unwrap();
                    classify_state(settled_mean(&series), p).state
                })
                .collect();
            let signature = classify_tetris(&states)?;
            Ok(TetrisOutcome {
                inputs: (u8::from(y), u8::from(b)),
                dof_states: states,
                label: tetris_label(&signature),
                signature,
            })
        })
        .collect();
    outcomes.into_iter().collect()
}

/// One row of the thermal-energy-to-hinge-strength estimate table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleEstimate {
    pub scale: &'static str,
    pub kbt_over_k_sigma2: f64,
    /// Order of magnitude: floor(log10(ratio)).
    pub log10_order: i32,
}

/// Reproduce the hinge-strength estimates at the three fabrication scales.
///
/// 10 nm: ten DNA bonds at 15 pN nm each against kBT = 4.1 pN nm.
/// 1 um: a thousand DNA bonds at 6 kBT each.
/// 100 um: a 1 GPa hinge over (100 um)^2 pulled apart by 1 um.
pub fn scale_estimates() -> Vec<ScaleEstimate> {
    let kbt_pn_nm = 4.1;
    let dna_bond_pn_nm = 15.0;
    let ratio_10nm = kbt_pn_nm / (dna_bond_pn_nm * 10.0);
    let ratio_1um = 1.0 / 6000.0;
    let kbt_j = 4.1e-21;
    let k_sigma2_100um = 1e9 * (100e-6f64).powi(2) * 1e-6;
    let ratio_100um = kbt_j / k_sigma2_100um;
    let row = |scale, ratio: f64| ScaleEstimate {
        scale,
        kbt_over_k_sigma2: ratio,
        log10_order: ratio.log10().floor() as i32,
    };
    vec![row("10nm", ratio_10nm), row("1um", ratio_1um), row("100um", ratio_100um)]
}

pub fn estimates_csv() -> String {
    let mut out = String::from("scale,kbt_over_k_sigma2,log10_order\n");
    for e in scale_estimates() {
        out.push_str(&format!("{},{},{}\n", e.scale, e.kbt_over_k_sigma2, e.log10_order));
    }
    out
}
