//! Mechanical logic circuits built from rigid slabs, hinges and muscle-like
//! actuators.
//!
//! The crate is organised around the life cycle of a circuit:
//!
//! * [`geometry`] solves the nonlinear design equations of the logic core and
//!   the scissor levers.
//! * [`model`] turns solved geometry into rigid-slab assemblies (gates,
//!   connectors, skeleton chains) and composes them into circuits.
//! * [`dynamics`] integrates an assembly under overdamped Brownian motion with
//!   harmonic joints, tolerance slack, muscle actuation and WCA exclusion.
//! * [`netlist`] parses the `.mlc` circuit description language and elaborates
//!   it into a simulatable assembly plus actuation schedules.
//! * [`analysis`] reduces trajectories to truth tables, frequency response,
//!   signal attenuation statistics and shape classifications.
//!
//! All lengths are in units of the muscle rest length `sigma`, energies in
//! `k0 * sigma^2`, and times in `t0 = gamma / (1e-3 k0)` unless a field says
//! otherwise.

pub mod analysis;
pub mod dynamics;
pub mod geometry;
pub mod math;
pub mod model;
pub mod netlist;

pub use dynamics::{run, ActuationSchedule, Engine, SimParams, Trajectory, Waveform};
pub use geometry::{solve_core, solve_lever, sweep_core, CoreGeometry, CoreSpec, HingeKind, LeverGeometry, LeverSpec};
pub use model::{build_connector, build_gate, build_skeleton, build_tetris_robot, compose, Assembly, GateKind, SignalMode, TetrisCircuit};
