//! Overdamped Brownian dynamics of rigid-slab assemblies.
//!
//! Bodies follow the non-momentum-conserving equations of motion: positions
//! move with `dt * F / gamma` plus Gaussian noise of variance
//! `2 kBT dt / gamma` per axis, orientations advance by the rotation vector
//! `tau * dt / gamma_r` with no explicit rotational noise (it arises from
//! the translational diffusion of the bonded partners). Forces come from the
//! harmonic joint bonds (zero rest length, optionally slack up to a
//! tolerance), muscle bonds at their schedule-selected equilibrium length,
//! and a WCA pair potential between slab centers.
//!
//! Internal time is measured in `gamma / k0`; durations and schedules use
//! the reduced unit `t0 = gamma / (1e-3 k0)`, i.e. `t0 = 1000` internal
//! units.

use crate::math::{Quat, Vec3};
use crate::model::{Assembly, JointKind};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Internal time units per t0.
pub const T0: f64 = 1000.0;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("NumericalBlowup: non-finite state at step {step} (dt too large?)")]
    NumericalBlowup { step: u64 },
    #[error("InvalidParams: {0}")]
    InvalidParams(String),
    #[error("UnboundChannel: {0}")]
    UnboundChannel(String),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

pub type Result<T> = std::result::Result<T, DynamicsError>;

/// Integration and environment parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    /// Time step in gamma/k0 units.
    pub dt: f64,
    /// Thermal energy in k0 sigma^2 units.
    pub kbt: f64,
    /// WCA strength in k0 sigma^2 units.
    pub eps_wca: f64,
    /// WCA core radius in sigma.
    pub r0: f64,
    pub seed: u64,
    /// Sampling stride in steps.
    pub record_every: usize,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams { dt: 0.05, kbt: 1e-5, eps_wca: 1e-4, r0: 0.1, seed: 1, record_every: 200 }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt < 1.0) {
            return Err(DynamicsError::InvalidParams(format!(
                "dt must satisfy 0 < dt*k0/gamma < 1, got {}",
                self.dt
            )));
        }
        if !(self.kbt >= 0.0) {
            return Err(DynamicsError::InvalidParams("kbt must be >= 0".into()));
        }
        if !(self.eps_wca >= 0.0) || !(self.r0 > 0.0) {
            return Err(DynamicsError::InvalidParams("bad WCA parameters".into()));
        }
        if self.record_every == 0 {
            return Err(DynamicsError::InvalidParams("record_every must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-channel actuation waveform. Times are in t0 units. Square waves are
/// off for the leading `(1 - duty)` fraction of each period and on for the
/// trailing `duty` fraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Waveform {
    Square { period: f64, duty: f64, phase: f64 },
    Step(Vec<(f64, u8)>),
    Constant(u8),
}

impl Waveform {
    pub fn validate(&self) -> Result<()> {
        match self {
            Waveform::Square { period, duty, .. } => {
                if !(*period > 0.0) {
                    return Err(DynamicsError::InvalidParams("square period must be > 0".into()));
                }
                if !(*duty > 0.0 && *duty < 1.0) {
                    return Err(DynamicsError::InvalidParams("duty must lie in (0, 1)".into()));
                }
            }
            Waveform::Step(steps) => {
                for w in steps.windows(2) {
                    if w[1].0 <= w[0].0 {
                        return Err(DynamicsError::InvalidParams(
                            "step times must be strictly increasing".into(),
                        ));
                    }
                }
                if steps.iter().any(|(_, s)| *s > 1) {
                    return Err(DynamicsError::InvalidParams("step states must be 0 or 1".into()));
                }
            }
            Waveform::Constant(s) => {
                if *s > 1 {
                    return Err(DynamicsError::InvalidParams("state must be 0 or 1".into()));
                }
            }
        }
        Ok(())
    }

    /// Ideal 0/1 state at time `t` (t0 units).
    pub fn state_at(&self, t: f64) -> bool {
        match self {
            Waveform::Square { period, duty, phase } => {
                let frac = ((t - phase).rem_euclid(*period)) / period;
                frac >= 1.0 - duty
            }
            Waveform::Step(steps) => steps
                .iter()
                .take_while(|(time, _)| *time <= t)
                .last()
                .map(|(_, s)| *s == 1)
                .unwrap_or(false),
            Waveform::Constant(s) => *s == 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub name: String,
    pub waveform: Waveform,
}

/// Per-channel time courses of muscle equilibrium states.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ActuationSchedule {
    pub channels: Vec<Channel>,
}

impl ActuationSchedule {
    pub fn constant(settings: &[(&str, bool)]) -> Self {
        ActuationSchedule {
            channels: settings
                .iter()
                .map(|(n, s)| Channel {
                    name: n.to_string(),
                    waveform: Waveform::Constant(u8::from(*s)),
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for c in &self.channels {
            if !seen.insert(c.name.as_str()) {
                return Err(DynamicsError::InvalidParams(format!("duplicate channel {}", c.name)));
            }
            c.waveform.validate()?;
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Waveform> {
        self.channels.iter().find(|c| c.name == name).map(|c| &c.waveform)
    }
}

/// One recorded rigid-body state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodyState {
    pub id: String,
    pub position: Vec3,
    pub orientation: Quat,
}

/// Time-sampled probe lengths (and optionally body states) from a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// Sample times in t0 units, strictly increasing.
    pub times: Vec<f64>,
    pub probe_ids: Vec<String>,
    /// `probe_lengths[sample][probe]`.
    pub probe_lengths: Vec<Vec<f64>>,
    pub channel_ids: Vec<String>,
    /// Ideal 0/1 state per channel per sample.
    pub schedule_trace: Vec<Vec<u8>>,
    /// Optional full body states, one inner vector per sample.
    pub body_states: Option<Vec<Vec<BodyState>>>,
}

impl Trajectory {
    pub fn probe_index(&self, id: &str) -> Option<usize> {
        self.probe_ids.iter().position(|p| p == id)
    }

    pub fn probe_series(&self, id: &str) -> Option<Vec<f64>> {
        let i = self.probe_index(id)?;
        Some(self.probe_lengths.iter().map(|row| row[i]).collect())
    }

    pub fn channel_trace(&self, name: &str) -> Option<Vec<u8>> {
        let i = self.channel_ids.iter().position(|c| c == name)?;
        Some(self.schedule_trace.iter().map(|row| row[i]).collect())
    }

    /// CSV export with header `t,<probe ids...>,<channel ids...>_ideal`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for p in &self.probe_ids {
            out.push(',');
            out.push_str(p);
        }
        for c in &self.channel_ids {
            out.push(',');
            out.push_str(c);
            out.push_str("_ideal");
        }
        out.push('\n');
        for (i, t) in self.times.iter().enumerate() {
            out.push_str(&format!("{t}"));
            for v in &self.probe_lengths[i] {
                out.push_str(&format!(",{v}"));
            }
            for s in &self.schedule_trace[i] {
                out.push_str(&format!(",{s}"));
            }
            out.push('\n');
        }
        out
    }

    /// JSON-lines dump of the recorded body states, one sample per line.
    pub fn states_jsonl(&self) -> Option<String> {
        let states = self.body_states.as_ref()?;
        let mut out = String::new();
        for (i, bodies) in states.iter().enumerate() {
            let line = serde_json::json!({ "t": self.times[i], "bodies": bodies });
            out.push_str(&line.to_string());
            out.push('\n');
        }
        Some(out)
    }
}

struct Bond {
    body_a: usize,
    local_a: Vec3,
    body_b: usize,
    local_b: Vec3,
    stiffness: f64,
    /// Slack distance: no force below this separation.
    tolerance: f64,
    /// None: joint at zero equilibrium. Some(i): muscle i sets equilibrium.
    muscle: Option<usize>,
}

struct EngineMuscle {
    rest: f64,
    actuated: f64,
    /// Index into the schedule channels, when bound.
    channel: Option<usize>,
}

struct EngineProbe {
    body_a: usize,
    local_a: Vec3,
    body_b: usize,
    local_b: Vec3,
}

/// A compiled simulation: an assembly bound to parameters and a schedule.
pub struct Engine {
    pub params: SimParams,
    ids: Vec<String>,
    pos: Vec<Vec3>,
    quat: Vec<Quat>,
    drag: Vec<f64>,
    rot_drag: Vec<f64>,
    bonds: Vec<Bond>,
    muscles: Vec<EngineMuscle>,
    probes: Vec<EngineProbe>,
    probe_ids: Vec<String>,
    channel_names: Vec<String>,
    waveforms: Vec<Waveform>,
    wca_pairs: Vec<(u32, u32)>,
    forces: Vec<Vec3>,
    torques: Vec<Vec3>,
    rngs: Vec<ChaCha8Rng>,
    step_count: u64,
}

impl Engine {
    pub fn new(assembly: &Assembly, params: SimParams, schedule: &ActuationSchedule) -> Result<Engine> {
        params.validate()?;
        schedule.validate()?;
        assembly.validate()?;

        let index: std::collections::HashMap<&str, usize> =
            assembly.slabs.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect();
        let resolve = |at: &crate::model::AttachmentPoint| -> (usize, Vec3) {
            (index[at.body.as_str()], Vec3::new(at.local[0], at.local[1], at.local[2]))
        };

        let channel_names: Vec<String> = schedule.channels.iter().map(|c| c.name.clone()).collect();
        let waveforms: Vec<Waveform> = schedule.channels.iter().map(|c| c.waveform.clone()).collect();

        let mut bonds = Vec::new();
        for j in &assembly.joints {
            let tol = match j.kind {
                JointKind::ToleranceHinge | JointKind::ToleranceUniversal => j.tolerance,
                _ => 0.0,
            };
            for (a, b) in &j.endpoints {
                let (body_a, local_a) = resolve(a);
                let (body_b, local_b) = resolve(b);
                bonds.push(Bond {
                    body_a,
                    local_a,
                    body_b,
                    local_b,
                    stiffness: j.stiffness,
                    tolerance: tol,
                    muscle: None,
                });
            }
        }
        let mut muscles = Vec::new();
        for m in &assembly.muscles {
            let channel = channel_names.iter().position(|c| *c == m.channel);
            let idx = muscles.len();
            muscles.push(EngineMuscle { rest: m.rest_length, actuated: m.actuated_length, channel });
            let (body_a, local_a) = resolve(&m.endpoints.0);
            let (body_b, local_b) = resolve(&m.endpoints.1);
            bonds.push(Bond {
                body_a,
                local_a,
                body_b,
                local_b,
                stiffness: m.stiffness,
                tolerance: 0.0,
                muscle: Some(idx),
            });
        }

        let probes = assembly
            .probes
            .iter()
            .map(|p| {
                let (body_a, local_a) = resolve(&p.endpoints.0);
                let (body_b, local_b) = resolve(&p.endpoints.1);
                EngineProbe { body_a, local_a, body_b, local_b }
            })
            .collect();

        // Volume exclusion acts between slab centers, excluding pairs that
        // share a joint or muscle bond.
        let mut wca_pairs = Vec::new();
        if params.eps_wca > 0.0 {
            let bonded = crate::model::bonded_pairs(assembly);
            let n = assembly.slabs.len();
            for i in 0..n {
                for j in (i + 1)..n {
                    if !bonded.contains(&(i, j)) {
                        wca_pairs.push((i as u32, j as u32));
                    }
                }
            }
        }

        // One counter-based stream per body, derived from (seed, body id),
        // so recording or reordering other bodies never changes the noise a
        // body sees.
        let mut seed_bytes = [0u8; 32];
        let mut x = params.seed ^ 0x9e37_79b9_7f4a_7c15;
        for chunk in seed_bytes.chunks_mut(8) {
            x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9).rotate_left(31) ^ 0x94d0_49bb_1331_11eb;
            chunk.copy_from_slice(&x.to_le_bytes());
        }
        let rngs = (0..assembly.slabs.len())
            .map(|i| {
                let mut rng = ChaCha8Rng::from_seed(seed_bytes);
                rng.set_stream(i as u64);
                rng
            })
            .collect();

        let n = assembly.slabs.len();
        Ok(Engine {
            params,
            ids: assembly.slabs.iter().map(|s| s.id.clone()).collect(),
            pos: assembly.slabs.iter().map(|s| s.position).collect(),
            quat: assembly.slabs.iter().map(|s| s.orientation).collect(),
            drag: assembly.slabs.iter().map(|s| s.drag).collect(),
            rot_drag: assembly.slabs.iter().map(|s| s.rot_drag).collect(),
            bonds,
            muscles,
            probes,
            probe_ids: assembly.probes.iter().map(|p| p.id.clone()).collect(),
            channel_names,
            waveforms,
            wca_pairs,
            forces: vec![Vec3::ZERO; n],
            torques: vec![Vec3::ZERO; n],
            rngs,
            step_count: 0,
        })
    }

    pub fn time_t0(&self) -> f64 {
        self.step_count as f64 * self.params.dt / T0
    }

    fn attachment(&self, body: usize, local: Vec3) -> Vec3 {
        self.pos[body] + self.quat[body].rotate(local)
    }

    fn muscle_equilibrium(&self, m: &EngineMuscle, t_t0: f64) -> f64 {
        match m.channel {
            Some(c) if self.waveforms[c].state_at(t_t0) => m.actuated,
            _ => m.rest,
        }
    }

    /// Accumulate forces and torques for the current state at time `t_t0`.
    pub fn accumulate_forces(&mut self, t_t0: f64) {
        self.forces.iter_mut().for_each(|f| *f = Vec3::ZERO);
        self.torques.iter_mut().for_each(|t| *t = Vec3::ZERO);

        for bond in &self.bonds {
            let pa = self.pos[bond.body_a] + self.quat[bond.body_a].rotate(bond.local_a);
            let pb = self.pos[bond.body_b] + self.quat[bond.body_b].rotate(bond.local_b);
            let d = pb - pa;
            let len = d.norm();
            let eq = match bond.muscle {
                Some(i) => self.muscle_equilibrium(&self.muscles[i], t_t0),
                None => 0.0,
            };
            // Tolerance slack: no restoring force below the slack distance.
            let stretch = if bond.tolerance > 0.0 {
                if len <= bond.tolerance {
                    continue;
                }
                len - bond.tolerance
            } else {
                len - eq
            };
            if len < 1e-12 {
                // Coincident endpoints at zero equilibrium carry no force.
                continue;
            }
            let dir = d.scaled(1.0 / len);
            let f = dir.scaled(bond.stiffness * stretch);
            self.forces[bond.body_a] += f;
            self.forces[bond.body_b] += -f;
            self.torques[bond.body_a] += (pa - self.pos[bond.body_a]).cross(f);
            self.torques[bond.body_b] += (pb - self.pos[bond.body_b]).cross(-f);
        }

        if self.params.eps_wca > 0.0 {
            let eps = self.params.eps_wca;
            let two_r0 = 2.0 * self.params.r0;
            let cutoff_sq = (two_r0 * two_r0) * 2f64.powf(1.0 / 3.0);
            for &(i, j) in &self.wca_pairs {
                let (i, j) = (i as usize, j as usize);
                let d = self.pos[j] - self.pos[i];
                let r_sq = d.norm_sq();
                if r_sq >= cutoff_sq || r_sq < 1e-20 {
                    continue;
                }
                let s2 = (two_r0 * two_r0) / r_sq;
                let s6 = s2 * s2 * s2;
                let s12 = s6 * s6;
                // F = 24 eps (2 s^12 - s^6) / r, repulsive along the center
                // line; centers carry no torque.
                let fmag_over_r = 24.0 * eps * (2.0 * s12 - s6) / r_sq;
                let f = d.scaled(fmag_over_r);
                self.forces[i] += -f;
                self.forces[j] += f;
            }
        }
    }

    /// Advance one Euler-Maruyama step.
    pub fn step(&mut self) -> Result<()> {
        let t_t0 = self.time_t0();
        self.accumulate_forces(t_t0);
        let dt = self.params.dt;
        let kbt = self.params.kbt;
        for i in 0..self.pos.len() {
            let gamma = self.drag[i];
            let mut dp = self.forces[i].scaled(dt / gamma);
            if kbt > 0.0 {
                let amp = (2.0 * kbt * dt / gamma).sqrt();
                let (n1, n2, n3) = gaussian_triple(&mut self.rngs[i]);
                dp += Vec3::new(n1, n2, n3).scaled(amp);
            }
            self.pos[i] += dp;
            let omega = self.torques[i].scaled(dt / self.rot_drag[i]);
            self.quat[i] = Quat::from_rotation_vec(omega).mul(self.quat[i]).normalized();
            if !self.pos[i].is_finite() || !self.quat[i].is_finite() {
                return Err(DynamicsError::NumericalBlowup { step: self.step_count });
            }
        }
        self.step_count += 1;
        Ok(())
    }

    pub fn probe_lengths(&self) -> Vec<f64> {
        self.probes
            .iter()
            .map(|p| (self.attachment(p.body_b, p.local_b) - self.attachment(p.body_a, p.local_a)).norm())
            .collect()
    }

    pub fn probe_ids(&self) -> &[String] {
        &self.probe_ids
    }

    pub fn body_states(&self) -> Vec<BodyState> {
        (0..self.pos.len())
            .map(|i| BodyState { id: self.ids[i].clone(), position: self.pos[i], orientation: self.quat[i] })
            .collect()
    }

    /// Total potential energy (bonds plus WCA) at the current state.
    pub fn potential_energy(&self, t_t0: f64) -> f64 {
        let mut e = 0.0;
        for bond in &self.bonds {
            let pa = self.attachment(bond.body_a, bond.local_a);
            let pb = self.attachment(bond.body_b, bond.local_b);
            let len = (pb - pa).norm();
            let eq = match bond.muscle {
                Some(i) => self.muscle_equilibrium(&self.muscles[i], t_t0),
                None => 0.0,
            };
            let stretch = if bond.tolerance > 0.0 { (len - bond.tolerance).max(0.0) } else { len - eq };
            e += 0.5 * bond.stiffness * stretch * stretch;
        }
        if self.params.eps_wca > 0.0 {
            let eps = self.params.eps_wca;
            let two_r0 = 2.0 * self.params.r0;
            let cutoff_sq = (two_r0 * two_r0) * 2f64.powf(1.0 / 3.0);
            for &(i, j) in &self.wca_pairs {
                let r_sq = (self.pos[j as usize] - self.pos[i as usize]).norm_sq();
                if r_sq >= cutoff_sq || r_sq < 1e-20 {
                    continue;
                }
                let s6 = ((two_r0 * two_r0) / r_sq).powi(3);
                e += 4.0 * eps * (s6 * s6 - s6) + eps;
            }
        }
        e
    }

    /// Largest deviation of any orientation quaternion from unit norm.
    pub fn max_quat_norm_error(&self) -> f64 {
        self.quat.iter().map(|q| (q.norm() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Largest per-body force magnitude from the most recent accumulation.
    pub fn max_force_norm(&self) -> f64 {
        self.forces.iter().map(|f| f.norm()).fold(0.0, f64::max)
    }

    /// Swap the actuation schedule mid-run (interactive steering). The new
    /// schedule must cover the same channel names.
    pub fn set_schedule(&mut self, schedule: &ActuationSchedule) -> Result<()> {
        schedule.validate()?;
        let waveforms: Result<Vec<Waveform>> = self
            .channel_names
            .iter()
            .map(|name| {
                schedule
                    .get(name)
                    .cloned()
                    .ok_or_else(|| DynamicsError::UnboundChannel(name.clone()))
            })
            .collect();
        self.waveforms = waveforms?;
        Ok(())
    }

    /// Ideal 0/1 state of a channel at the current time.
    pub fn schedule_state(&self, channel: &str) -> Option<bool> {
        let i = self.channel_names.iter().position(|c| c == channel)?;
        Some(self.waveforms[i].state_at(self.time_t0()))
    }

    /// Run for `duration` t0 units, recording every `record_every` steps
    /// (plus the initial sample).
    pub fn run(&mut self, duration_t0: f64, record_states: bool) -> Result<Trajectory> {
        if !(duration_t0 >= 0.0) {
            return Err(DynamicsError::InvalidParams("duration must be >= 0".into()));
        }
        let total_steps = (duration_t0 * T0 / self.params.dt).round() as u64;
        let mut traj = Trajectory {
            times: Vec::new(),
            probe_ids: self.probe_ids.clone(),
            probe_lengths: Vec::new(),
            channel_ids: self.channel_names.clone(),
            schedule_trace: Vec::new(),
            body_states: record_states.then(Vec::new),
        };
        self.record_sample(&mut traj);
        for s in 0..total_steps {
            self.step()?;
            if (s + 1) % self.params.record_every as u64 == 0 || s + 1 == total_steps {
                self.record_sample(&mut traj);
            }
        }
        Ok(traj)
    }

    fn record_sample(&self, traj: &mut Trajectory) {
        let t = self.time_t0();
        traj.times.push(t);
        traj.probe_lengths.push(self.probe_lengths());
        traj.schedule_trace
            .push(self.waveforms.iter().map(|w| u8::from(w.state_at(t))).collect());
        if let Some(states) = traj.body_states.as_mut() {
            states.push(self.body_states());
        }
    }
}

/// Three standard normals from fixed-consumption Box-Muller draws (four
/// uniforms per call), keeping the per-body stream layout deterministic.
fn gaussian_triple(rng: &mut ChaCha8Rng) -> (f64, f64, f64) {
    let mut uniform = || {
        // 53-bit uniform in (0, 1].
        let bits = rng.next_u64() >> 11;
        (bits + 1) as f64 * (1.0 / 9007199254740992.0)
    };
    let (u1, u2, u3, u4) = (uniform(), uniform(), uniform(), uniform());
    let r1 = (-2.0 * u1.ln()).sqrt();
    let a1 = std::f64::consts::TAU * u2;
    let r2 = (-2.0 * u3.ln()).sqrt();
    let a2 = std::f64::consts::TAU * u4;
    (r1 * a1.cos(), r1 * a1.sin(), r2 * a2.cos())
}

/// Convenience wrapper: compile and run an assembly in one call.
pub fn run(
    assembly: &Assembly,
    params: SimParams,
    schedule: &ActuationSchedule,
    duration_t0: f64,
) -> Result<Trajectory> {
    Engine::new(assembly, params, schedule)?.run(duration_t0, false)
}

/// Per-body (force, torque) for an assembly at its built configuration under
/// the schedule state at time `t_t0`.
pub fn compute_forces(
    assembly: &Assembly,
    params: SimParams,
    schedule: &ActuationSchedule,
    t_t0: f64,
) -> Result<Vec<(Vec3, Vec3)>> {
    let mut engine = Engine::new(assembly, params, schedule)?;
    engine.accumulate_forces(t_t0);
    Ok(engine.forces.iter().copied().zip(engine.torques.iter().copied()).collect())
}
