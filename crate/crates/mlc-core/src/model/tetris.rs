//! The shape-shifting robot: a logic circuit driving a skeleton chain
//! through adaptor levers.

use super::compose::compose;
use super::lever::ElbowLever;
use super::skeleton::{build_skeleton, DOF_REST, DOF_STROKE};
use super::{
    build_gate, build_muscle_fixture, slab_spanning, Assembly, AttachmentPoint, GateKind, Joint,
    Port, PortDirection, Probe, ProbeRole, Result, RigidSlab, SignalMode, HINGE_HALF_SPAN,
    MUSCLE_REST, MUSCLE_STROKE,
};
use crate::geometry::CoreGeometry;
use crate::math::Vec3;

/// What drives one skeleton degree of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofDrive {
    /// Held at rest by an unactuated muscle.
    Hold,
    /// Driven by the yellow muscle channel.
    Y,
    /// Driven by the blue muscle channel.
    B,
    /// Driven by an AND gate over both channels.
    YandB,
}

/// Declarative mapping from the two input channels onto the eight skeleton
/// degrees of freedom of a four-unit chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TetrisCircuit {
    pub dof_drives: [DofDrive; 8],
}

impl Default for TetrisCircuit {
    /// Shipped default: unit 1 bends on y, unit 2 bends (the other way) on
    /// b, unit 3 bends on y AND b. The four input states then fold four
    /// pairwise-distinct shapes, with (0,0) leaving the chain straight.
    fn default() -> Self {
        use DofDrive::*;
        TetrisCircuit { dof_drives: [Y, Hold, Hold, B, YandB, Hold, Hold, Hold] }
    }
}

impl TetrisCircuit {
    /// Expected DOF states for the given channel inputs.
    pub fn dof_states(&self, y: bool, b: bool) -> [bool; 8] {
        let mut out = [false; 8];
        for (i, d) in self.dof_drives.iter().enumerate() {
            out[i] = match d {
                DofDrive::Hold => false,
                DofDrive::Y => y,
                DofDrive::B => b,
                DofDrive::YandB => y && b,
            };
        }
        out
    }
}

/// An adaptor lever: a floating elbow that converts the standard
/// (sigma, +0.5 sigma) expansion signal on its `in` port into the skeleton
/// (2 sigma, +sigma) drive on its `out` port.
pub fn build_adaptor() -> Result<Assembly> {
    let lever = ElbowLever::design(
        MUSCLE_REST,
        DOF_REST,
        MUSCLE_REST + MUSCLE_STROKE,
        DOF_REST + DOF_STROKE,
    )?;
    let z = Vec3::new(0.0, 0.0, 1.0);
    let m = Vec3::ZERO;
    let d = Vec3::new(0.0, MUSCLE_REST, 0.0);
    let to_world = |p: (f64, f64)| Vec3::new(p.0, p.1, 0.0);
    let elbow = to_world(lever.elbow_2d(MUSCLE_REST));
    let (o1_2d, o2_2d) = lever.free_ends_2d(MUSCLE_REST);
    let (o1, o2) = (to_world(o1_2d), to_world(o2_2d));

    let arm1 = slab_spanning("arm1", &[m, elbow, o1], z, 0.2);
    let arm2 = slab_spanning("arm2", &[d, elbow, o2], z, 0.2);
    let mk = |s: &RigidSlab, p: Vec3| AttachmentPoint::new(s.id.clone(), s.to_local(p));
    let pivot = Joint::hinge(
        mk(&arm1, elbow + z.scaled(HINGE_HALF_SPAN)),
        mk(&arm2, elbow + z.scaled(HINGE_HALF_SPAN)),
        mk(&arm1, elbow - z.scaled(HINGE_HALF_SPAN)),
        mk(&arm2, elbow - z.scaled(HINGE_HALF_SPAN)),
    );
    let probes = vec![
        Probe {
            id: "in".into(),
            endpoints: (mk(&arm1, m), mk(&arm2, d)),
            rest_length: MUSCLE_REST,
            signal: MUSCLE_STROKE,
            role: ProbeRole::GateInput,
        },
        Probe {
            id: "out".into(),
            endpoints: (mk(&arm1, o1), mk(&arm2, o2)),
            rest_length: DOF_REST,
            signal: DOF_STROKE,
            role: ProbeRole::GateOutput,
        },
    ];
    let asm = Assembly {
        slabs: vec![arm1, arm2],
        joints: vec![pivot],
        muscles: vec![],
        probes,
        ports: vec![
            Port { name: "in".into(), probe: "in".into(), direction: PortDirection::Input },
            Port { name: "out".into(), probe: "out".into(), direction: PortDirection::Output },
        ],
    };
    asm.validate()?;
    Ok(asm)
}

/// Build the full robot: a four-unit skeleton, one adaptor lever per degree
/// of freedom, muscle fixtures on channels `y` and `b` (expand mode), one
/// AND gate per `YandB` drive and hold muscles on channel `hold` for the
/// rest.
pub fn build_tetris_robot(circuit: &TetrisCircuit, core: &CoreGeometry) -> Result<Assembly> {
    let mut parts: Vec<(String, Assembly)> = vec![("skel".into(), build_skeleton(4)?)];
    let mut wires: Vec<(String, String)> = Vec::new();

    for (i, drive) in circuit.dof_drives.iter().enumerate() {
        let dof = i + 1;
        let ad = format!("ad{dof}");
        parts.push((ad.clone(), build_adaptor()?));
        wires.push((format!("{ad}.out"), format!("skel.dof{dof}")));
        match drive {
            DofDrive::Hold => {
                let m = format!("hold{dof}");
                parts.push((m.clone(), build_muscle_fixture(SignalMode::Expand, "hold")));
                wires.push((format!("{m}.out"), format!("{ad}.in")));
            }
            DofDrive::Y | DofDrive::B => {
                let ch = if *drive == DofDrive::Y { "y" } else { "b" };
                let m = format!("m_{ch}{dof}");
                parts.push((m.clone(), build_muscle_fixture(SignalMode::Expand, ch)));
                wires.push((format!("{m}.out"), format!("{ad}.in")));
            }
            DofDrive::YandB => {
                let g = format!("and{dof}");
                parts.push((
                    g.clone(),
                    build_gate(GateKind::And, SignalMode::Expand, SignalMode::Expand, core)?,
                ));
                wires.push((format!("{g}.out"), format!("{ad}.in")));
                for (ch, input) in [("y", "in1"), ("b", "in2")] {
                    let m = format!("m_{ch}{dof}");
                    parts.push((m.clone(), build_muscle_fixture(SignalMode::Expand, ch)));
                    wires.push((format!("{m}.out"), format!("{g}.{input}")));
                }
            }
        }
    }
    compose(&parts, &wires)
}
