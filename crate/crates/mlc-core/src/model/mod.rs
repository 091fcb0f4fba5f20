//! Rigid-slab assemblies: bodies, joints, muscles and probes, plus the
//! builders that turn solved geometry into gates, connectors, skeleton
//! chains and composed circuits.
//!
//! Assemblies are immutable value types once built. A scene serializes to
//! JSON with `slabs`, `joints`, `muscles`, `probes` and `ports` arrays; this
//! file format is the contract between netlist elaboration and the dynamics
//! engine. All lengths are in sigma units.

mod compose;
mod connector;
mod gate;
mod lever;
mod skeleton;
mod tetris;

pub use compose::compose;
pub use connector::build_connector;
pub use gate::{build_gate, gate_lever_specs};
pub use lever::ElbowLever;
pub use skeleton::build_skeleton;
pub use tetris::{build_adaptor, build_tetris_robot, DofDrive, TetrisCircuit};

use crate::geometry::GeometryError;
use crate::math::{Quat, Vec3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slab width used throughout the designs (sigma units).
pub const SLAB_WIDTH: f64 = 0.5;
/// Slab thickness (sigma units).
pub const SLAB_THICKNESS: f64 = 0.01;
/// Hinge bonds sit at the two width-edges of the joint, half a width apart.
pub const HINGE_HALF_SPAN: f64 = SLAB_WIDTH / 2.0;
/// Default joint and muscle stiffness in k0 units.
pub const DEFAULT_STIFFNESS: f64 = 1.0;
/// Muscle rest length (sigma) and actuation stroke (sigma).
pub const MUSCLE_REST: f64 = 1.0;
pub const MUSCLE_STROKE: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("GeometryInfeasible: {0}")]
    GeometryInfeasible(String),
    #[error("InvalidSpec: {0}")]
    InvalidSpec(String),
    #[error("PortMismatch: {0}")]
    PortMismatch(String),
    #[error("UnknownPort: {0}")]
    UnknownPort(String),
    #[error("DoubleWire: {0}")]
    DoubleWire(String),
    #[error("inconsistent assembly: {0}")]
    Inconsistent(String),
}

impl From<GeometryError> for ModelError {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::NoConvergence(m) => ModelError::GeometryInfeasible(m),
            GeometryError::InvalidSpec(m) => ModelError::InvalidSpec(m),
        }
    }
}

pub type Result<T> = std::result::Result<T, ModelError>;

/// A rigid body. The local frame has the length axis first, then width, then
/// thickness; `half_extents` follows the same order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidSlab {
    pub id: String,
    pub half_extents: [f64; 3],
    pub position: Vec3,
    pub orientation: Quat,
    /// Translational drag coefficient gamma.
    pub drag: f64,
    /// Rotational drag, set equal to the translational drag.
    pub rot_drag: f64,
}

impl RigidSlab {
    /// World position of a body-frame point.
    pub fn to_world(&self, local: [f64; 3]) -> Vec3 {
        self.position + self.orientation.rotate(Vec3::new(local[0], local[1], local[2]))
    }

    /// Body-frame coordinates of a world point.
    pub fn to_local(&self, world: Vec3) -> [f64; 3] {
        let d = world - self.position;
        let inv = Quat { w: self.orientation.w, x: -self.orientation.x, y: -self.orientation.y, z: -self.orientation.z };
        let v = inv.rotate(d);
        [v.x, v.y, v.z]
    }
}

/// A point fixed on a slab, in body-frame coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttachmentPoint {
    pub body: String,
    pub local: [f64; 3],
}

impl AttachmentPoint {
    pub fn new(body: impl Into<String>, local: [f64; 3]) -> Self {
        AttachmentPoint { body: body.into(), local }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JointKind {
    /// Two zero-rest harmonic bonds separated along the hinge axis.
    Hinge,
    /// A single zero-rest harmonic bond.
    Universal,
    /// Hinge whose bonds are slack below the tolerance distance.
    ToleranceHinge,
    /// Universal joint with slack.
    ToleranceUniversal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Joint {
    pub kind: JointKind,
    /// Bond endpoint pairs. Hinge kinds carry exactly two pairs, universal
    /// kinds exactly one. The two pairs of a hinge may bind different body
    /// pairs (the shared hinge at the core apex binds three bodies).
    pub endpoints: Vec<(AttachmentPoint, AttachmentPoint)>,
    pub stiffness: f64,
    /// Slack distance; zero for non-tolerance kinds.
    pub tolerance: f64,
}

impl Joint {
    pub fn hinge(a1: AttachmentPoint, b1: AttachmentPoint, a2: AttachmentPoint, b2: AttachmentPoint) -> Self {
        Joint {
            kind: JointKind::Hinge,
            endpoints: vec![(a1, b1), (a2, b2)],
            stiffness: DEFAULT_STIFFNESS,
            tolerance: 0.0,
        }
    }

    pub fn universal(a: AttachmentPoint, b: AttachmentPoint) -> Self {
        Joint {
            kind: JointKind::Universal,
            endpoints: vec![(a, b)],
            stiffness: DEFAULT_STIFFNESS,
            tolerance: 0.0,
        }
    }
}

/// Whether a muscle (or signal) actuates by growing or shrinking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignalMode {
    Expand,
    Contract,
}

impl SignalMode {
    /// Signed signal amplitude in sigma units.
    pub fn signal(self) -> f64 {
        match self {
            SignalMode::Expand => MUSCLE_STROKE,
            SignalMode::Contract => -MUSCLE_STROKE,
        }
    }
}

/// A muscle-like actuator: a harmonic bond whose equilibrium length switches
/// between the rest and actuated values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Muscle {
    pub id: String,
    pub endpoints: (AttachmentPoint, AttachmentPoint),
    pub stiffness: f64,
    pub rest_length: f64,
    pub actuated_length: f64,
    pub mode: SignalMode,
    /// Actuation channel this muscle listens to.
    pub channel: String,
}

impl Muscle {
    pub fn new(id: impl Into<String>, a: AttachmentPoint, b: AttachmentPoint, mode: SignalMode, channel: impl Into<String>) -> Self {
        Muscle {
            id: id.into(),
            endpoints: (a, b),
            stiffness: DEFAULT_STIFFNESS,
            rest_length: MUSCLE_REST,
            actuated_length: MUSCLE_REST + mode.signal(),
            mode,
            channel: channel.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProbeRole {
    GateInput,
    GateOutput,
    CoreOutput,
    ConnectorStage,
    SkeletonDof,
}

/// A designated pair of attachment points whose distance encodes a signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub id: String,
    pub endpoints: (AttachmentPoint, AttachmentPoint),
    pub rest_length: f64,
    /// Signed actuation stroke; state 1 sits at `rest_length + signal`.
    pub signal: f64,
    pub role: ProbeRole,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PortDirection {
    Input,
    Output,
}

/// A named connection point of an assembly, backed by a probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Port {
    pub name: String,
    pub probe: String,
    pub direction: PortDirection,
}

/// Rigid slabs, joints, muscles and probes forming a gate, connector,
/// circuit or robot.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Assembly {
    pub slabs: Vec<RigidSlab>,
    pub joints: Vec<Joint>,
    pub muscles: Vec<Muscle>,
    pub probes: Vec<Probe>,
    pub ports: Vec<Port>,
}

impl Assembly {
    pub fn slab(&self, id: &str) -> Option<&RigidSlab> {
        self.slabs.iter().find(|s| s.id == id)
    }

    pub fn probe(&self, id: &str) -> Option<&Probe> {
        self.probes.iter().find(|p| p.id == id)
    }

    pub fn port(&self, name: &str) -> Option<&Port> {
        self.ports.iter().find(|p| p.name == name)
    }

    /// World position of an attachment at the built configuration.
    pub fn attachment_world(&self, at: &AttachmentPoint) -> Option<Vec3> {
        self.slab(&at.body).map(|s| s.to_world(at.local))
    }

    /// Current length of a probe at the built configuration.
    pub fn probe_length(&self, id: &str) -> Option<f64> {
        let p = self.probe(id)?;
        let a = self.attachment_world(&p.endpoints.0)?;
        let b = self.attachment_world(&p.endpoints.1)?;
        Some((b - a).norm())
    }

    /// Count joints of the given kind.
    pub fn joint_count(&self, kind: JointKind) -> usize {
        self.joints.iter().filter(|j| j.kind == kind).count()
    }

    /// Return a copy with every joint carrying the given slack distance.
    /// Zero restores plain kinds.
    pub fn with_tolerance(&self, tolerance: f64) -> Assembly {
        let mut out = self.clone();
        for j in &mut out.joints {
            j.tolerance = tolerance;
            j.kind = match (j.kind, tolerance > 0.0) {
                (JointKind::Hinge | JointKind::ToleranceHinge, true) => JointKind::ToleranceHinge,
                (JointKind::Hinge | JointKind::ToleranceHinge, false) => JointKind::Hinge,
                (JointKind::Universal | JointKind::ToleranceUniversal, true) => JointKind::ToleranceUniversal,
                (JointKind::Universal | JointKind::ToleranceUniversal, false) => JointKind::Universal,
            };
        }
        out
    }

    /// Return a copy with every id (slabs, probes, muscles, ports and the
    /// attachment references) prefixed by `name.`.
    pub fn prefixed(&self, name: &str) -> Assembly {
        let tag = |s: &str| format!("{name}.{s}");
        let retag = |at: &AttachmentPoint| AttachmentPoint { body: tag(&at.body), local: at.local };
        let mut out = self.clone();
        for s in &mut out.slabs {
            s.id = tag(&s.id);
        }
        for j in &mut out.joints {
            for (a, b) in &mut j.endpoints {
                *a = retag(a);
                *b = retag(b);
            }
        }
        for m in &mut out.muscles {
            m.id = tag(&m.id);
            m.endpoints = (retag(&m.endpoints.0), retag(&m.endpoints.1));
            // Channels are deliberately not prefixed: they are global names
            // shared across an entire circuit.
        }
        for p in &mut out.probes {
            p.id = tag(&p.id);
            p.endpoints = (retag(&p.endpoints.0), retag(&p.endpoints.1));
        }
        for p in &mut out.ports {
            p.name = tag(&p.name);
            p.probe = tag(&p.probe);
        }
        out
    }

    /// Apply a rigid transform (rotation about the origin, then translation)
    /// to every slab.
    pub fn transformed(&self, rot: Quat, translation: Vec3) -> Assembly {
        let mut out = self.clone();
        for s in &mut out.slabs {
            s.position = rot.rotate(s.position) + translation;
            s.orientation = rot.mul(s.orientation).normalized();
        }
        out
    }

    /// Verify internal references, id uniqueness, joint arities and
    /// attachment bounds. Builders call this before returning.
    pub fn validate(&self) -> Result<()> {
        let mut ids = std::collections::HashSet::new();
        for s in &self.slabs {
            if !ids.insert(s.id.as_str()) {
                return Err(ModelError::Inconsistent(format!("duplicate slab id {}", s.id)));
            }
            if s.half_extents.iter().any(|&h| h <= 0.0) {
                return Err(ModelError::Inconsistent(format!("non-positive extents on {}", s.id)));
            }
        }
        let check_at = |at: &AttachmentPoint| -> Result<()> {
            let slab = self
                .slab(&at.body)
                .ok_or_else(|| ModelError::Inconsistent(format!("unknown body {}", at.body)))?;
            for k in 0..3 {
                if at.local[k].abs() > slab.half_extents[k] + 1e-9 {
                    return Err(ModelError::Inconsistent(format!(
                        "attachment {:?} outside body {} (axis {k})",
                        at.local, at.body
                    )));
                }
            }
            Ok(())
        };
        for j in &self.joints {
            // A hinge carries two bonds along its axis per attached body
            // pair; a plain two-body hinge has one pair, the shared apex pin
            // of a gate binds two arms to the same link.
            let body_pairs: std::collections::HashSet<(String, String)> = j
                .endpoints
                .iter()
                .map(|(a, b)| {
                    let (x, y) = (a.body.clone(), b.body.clone());
                    if x <= y {
                        (x, y)
                    } else {
                        (y, x)
                    }
                })
                .collect();
            let want = match j.kind {
                JointKind::Hinge | JointKind::ToleranceHinge => 2 * body_pairs.len(),
                JointKind::Universal | JointKind::ToleranceUniversal => 1,
            };
            if j.endpoints.len() != want {
                return Err(ModelError::Inconsistent(format!(
                    "{:?} joint carries {} bonds, expected {want}",
                    j.kind,
                    j.endpoints.len()
                )));
            }
            let tol_kind = matches!(j.kind, JointKind::ToleranceHinge | JointKind::ToleranceUniversal);
            if !tol_kind && j.tolerance != 0.0 {
                return Err(ModelError::Inconsistent("plain joint with non-zero tolerance".into()));
            }
            for (a, b) in &j.endpoints {
                check_at(a)?;
                check_at(b)?;
            }
        }
        for m in &self.muscles {
            check_at(&m.endpoints.0)?;
            check_at(&m.endpoints.1)?;
            let want = m.rest_length + m.mode.signal();
            if (m.actuated_length - want).abs() > 1e-9 {
                return Err(ModelError::Inconsistent(format!(
                    "muscle {} actuated length {} does not match mode",
                    m.id, m.actuated_length
                )));
            }
        }
        for p in &self.probes {
            check_at(&p.endpoints.0)?;
            check_at(&p.endpoints.1)?;
            if p.signal == 0.0 || p.signal.abs() > p.rest_length + 1e-9 {
                return Err(ModelError::Inconsistent(format!("probe {} has invalid signal", p.id)));
            }
        }
        for port in &self.ports {
            if self.probe(&port.probe).is_none() {
                return Err(ModelError::UnknownPort(format!(
                    "port {} references missing probe {}",
                    port.name, port.probe
                )));
            }
        }
        Ok(())
    }

    /// Serialize to the JSON scene format.
    pub fn to_scene_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("assembly serializes")
    }

    pub fn from_scene_json(text: &str) -> Result<Assembly> {
        let a: Assembly =
            serde_json::from_str(text).map_err(|e| ModelError::InvalidSpec(format!("scene: {e}")))?;
        a.validate()?;
        Ok(a)
    }
}

/// Logic gate families buildable from a single core.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateKind {
    And,
    Or,
    Nand,
    Nor,
}

impl GateKind {
    /// The boolean function the gate computes.
    pub fn eval(self, a: bool, b: bool) -> bool {
        match self {
            GateKind::And => a && b,
            GateKind::Or => a || b,
            GateKind::Nand => !(a && b),
            GateKind::Nor => !(a || b),
        }
    }

    /// NOT-integration of the levers: whether the input levers and the
    /// output lever carry the NOT mapping. The core raises its output only
    /// when both core inputs are expanded, so AND = CORE(a, b),
    /// NAND = NOT CORE(a, b), OR = NOT CORE(NOT a, NOT b) and
    /// NOR = CORE(NOT a, NOT b).
    pub fn lever_nots(self) -> (bool, bool) {
        match self {
            GateKind::And => (false, false),
            GateKind::Nand => (false, true),
            GateKind::Or => (true, true),
            GateKind::Nor => (true, false),
        }
    }

    /// Paper-default muscle mode for this gate family (the NAND of the gate
    /// family figure expands, the others contract).
    pub fn default_muscle_mode(self) -> SignalMode {
        match self {
            GateKind::Nand => SignalMode::Expand,
            _ => SignalMode::Contract,
        }
    }

    /// Paper-default output mode, matching the gate family figure.
    pub fn default_output_mode(self) -> SignalMode {
        self.default_muscle_mode()
    }
}

impl std::str::FromStr for GateKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "AND" => Ok(GateKind::And),
            "OR" => Ok(GateKind::Or),
            "NAND" => Ok(GateKind::Nand),
            "NOR" => Ok(GateKind::Nor),
            other => Err(format!("unknown gate kind {other}")),
        }
    }
}

impl std::fmt::Display for GateKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            GateKind::And => "AND",
            GateKind::Or => "OR",
            GateKind::Nand => "NAND",
            GateKind::Nor => "NOR",
        };
        f.write_str(s)
    }
}

/// Two stub slabs joined by a muscle bond: the standalone form of a declared
/// muscle before it is wired onto a lever input.
pub fn build_muscle_fixture(mode: SignalMode, channel: &str) -> Assembly {
    let stub = 0.6;
    let mk = |id: &str, y: f64, sign: f64| RigidSlab {
        id: id.into(),
        half_extents: [stub / 2.0, HINGE_HALF_SPAN, SLAB_THICKNESS / 2.0],
        position: Vec3::new(0.0, y + sign * stub / 2.0, 0.0),
        orientation: Quat::from_axis_angle(Vec3::new(0.0, 0.0, 1.0), std::f64::consts::FRAC_PI_2),
        drag: 1.0,
        rot_drag: 1.0,
    };
    // Each stub's business end sits exactly at the muscle endpoint, so the
    // bond force is unaffected by the stub's orientation.
    let slab_lo = mk("anchor_lo", 0.0, -1.0);
    let slab_hi = mk("anchor_hi", MUSCLE_REST, 1.0);
    let a = AttachmentPoint::new("anchor_lo", slab_lo.to_local(Vec3::ZERO));
    let b = AttachmentPoint::new("anchor_hi", slab_hi.to_local(Vec3::new(0.0, MUSCLE_REST, 0.0)));
    let muscle = Muscle::new("muscle", a.clone(), b.clone(), mode, channel);
    let probe = Probe {
        id: "out".into(),
        endpoints: (a, b),
        rest_length: MUSCLE_REST,
        signal: mode.signal(),
        role: ProbeRole::GateOutput,
    };
    let asm = Assembly {
        slabs: vec![slab_lo, slab_hi],
        joints: vec![],
        muscles: vec![muscle],
        probes: vec![probe],
        ports: vec![Port { name: "out".into(), probe: "out".into(), direction: PortDirection::Output }],
    };
    debug_assert!(asm.validate().is_ok());
    asm
}

/// Slab-index pairs (i < j) that share a joint or muscle bond. The dynamics
/// engine excludes these pairs from volume exclusion, like bonded pairs in a
/// molecular force field.
pub fn bonded_pairs(asm: &Assembly) -> std::collections::HashSet<(usize, usize)> {
    let index: std::collections::HashMap<&str, usize> =
        asm.slabs.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect();
    let mut set = std::collections::HashSet::new();
    let mut add = |a: &AttachmentPoint, b: &AttachmentPoint| {
        if let (Some(&i), Some(&j)) = (index.get(a.body.as_str()), index.get(b.body.as_str())) {
            if i != j {
                set.insert((i.min(j), i.max(j)));
            }
        }
    };
    for j in &asm.joints {
        for (a, b) in &j.endpoints {
            add(a, b);
        }
    }
    for m in &asm.muscles {
        add(&m.endpoints.0, &m.endpoints.1);
    }
    set
}

/// Helper constructing a slab that spans a set of collinear world points.
/// Returns the slab; callers convert world attachment points to locals via
/// [`RigidSlab::to_local`].
pub(crate) fn slab_spanning(
    id: &str,
    points: &[Vec3],
    width_dir: Vec3,
    margin: f64,
) -> RigidSlab {
    debug_assert!(points.len() >= 2);
    let dir = (points[points.len() - 1] - points[0]).normalized();
    let ts: Vec<f64> = points.iter().map(|p| (*p - points[0]).dot(dir)).collect();
    let (tmin, tmax) = ts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &t| (lo.min(t), hi.max(t)));
    let center = points[0] + dir.scaled((tmin + tmax) / 2.0);
    let half_len = (tmax - tmin) / 2.0 + margin;
    let w = width_dir.normalized();
    let t = dir.cross(w).normalized();
    let orientation = quat_from_basis(dir, w, t);
    RigidSlab {
        id: id.into(),
        half_extents: [half_len, HINGE_HALF_SPAN, SLAB_THICKNESS / 2.0],
        position: center,
        orientation,
        drag: 1.0,
        rot_drag: 1.0,
    }
}

/// Quaternion whose rotation maps the local basis to the given orthonormal
/// world axes (columns).
pub(crate) fn quat_from_basis(x: Vec3, y: Vec3, z: Vec3) -> Quat {
    // Shepperd's method over the rotation matrix trace.
    let m = [[x.x, y.x, z.x], [x.y, y.y, z.y], [x.z, y.z, z.z]];
    let trace = m[0][0] + m[1][1] + m[2][2];
    let q = if trace > 0.0 {
        let s = (trace + 1.0).sqrt() * 2.0;
        Quat {
            w: 0.25 * s,
            x: (m[2][1] - m[1][2]) / s,
            y: (m[0][2] - m[2][0]) / s,
            z: (m[1][0] - m[0][1]) / s,
        }
    } else if m[0][0] > m[1][1] && m[0][0] > m[2][2] {
        let s = (1.0 + m[0][0] - m[1][1] - m[2][2]).sqrt() * 2.0;
        Quat {
            w: (m[2][1] - m[1][2]) / s,
            x: 0.25 * s,
            y: (m[0][1] + m[1][0]) / s,
            z: (m[0][2] + m[2][0]) / s,
        }
    } else if m[1][1] > m[2][2] {
        let s = (1.0 + m[1][1] - m[0][0] - m[2][2]).sqrt() * 2.0;
        Quat {
            w: (m[0][2] - m[2][0]) / s,
            x: (m[0][1] + m[1][0]) / s,
            y: 0.25 * s,
            z: (m[1][2] + m[2][1]) / s,
        }
    } else {
        let s = (1.0 + m[2][2] - m[0][0] - m[1][1]).sqrt() * 2.0;
        Quat {
            w: (m[1][0] - m[0][1]) / s,
            x: (m[0][2] + m[2][0]) / s,
            y: (m[1][2] + m[2][1]) / s,
            z: 0.25 * s,
        }
    };
    q.normalized()
}
