//! Signal connector chain.
//!
//! Each half-unit is a rhombus of four parallelogram slabs (length 1.1
//! sigma) hinged at its four corners; the two diagonals trade length under
//! the constraint `(d1/2)^2 + (d2/2)^2 = L^2`, so the half-unit inverts the
//! actuation signal and rotates it onto the perpendicular axis, and two
//! half-units in series restore it exactly. Consecutive half-units sit in
//! parallel planes half a slab-width apart, joined by two universal joints
//! through the width offsets of the shared corner pair, which leaves a
//! floppy bending axis at every junction; the chain stacks along the plane
//! normal and alternates its bend axes.

use super::{
    slab_spanning, Assembly, AttachmentPoint, Joint, ModelError, Port, PortDirection, Probe,
    ProbeRole, Result, RigidSlab, HINGE_HALF_SPAN, MUSCLE_REST, MUSCLE_STROKE,
};
use crate::math::Vec3;

/// Parallelogram slab length (sigma).
const SLAB_LEN: f64 = 1.1;
/// Plane-to-plane spacing of consecutive half-units (one slab width).
const STACK_STEP: f64 = 2.0 * HINGE_HALF_SPAN;

const Z: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 1.0 };

/// Build a connector of `units` full units with the given joint tolerance.
/// Ports `in` and `out` carry the standard rest length sigma and +0.5 sigma
/// expansion signal; one `ConnectorStage` probe is exposed per unit.
pub fn build_connector(units: usize, tolerance: f64) -> Result<Assembly> {
    if units < 1 {
        return Err(ModelError::InvalidSpec("connector needs at least one unit".into()));
    }
    if !(tolerance >= 0.0) || !tolerance.is_finite() {
        return Err(ModelError::InvalidSpec(format!("tolerance must be >= 0, got {tolerance}")));
    }
    // Rest state: the signal diagonal spans one sigma.
    let p = MUSCLE_REST / 2.0;
    let q = (SLAB_LEN * SLAB_LEN - p * p).sqrt();

    let mut asm = Assembly::default();
    let halves = 2 * units;
    for k in 0..halves {
        let z = k as f64 * STACK_STEP;
        let tag = |s: &str| format!("h{k}_{s}");
        let s_pt = Vec3::new(0.0, -p, z);
        let n_pt = Vec3::new(0.0, p, z);
        let e_pt = Vec3::new(q, 0.0, z);
        let w_pt = Vec3::new(-q, 0.0, z);

        let se = slab_spanning(&tag("se"), &[s_pt, e_pt], Z, 0.05);
        let en = slab_spanning(&tag("en"), &[e_pt, n_pt], Z, 0.05);
        let nw = slab_spanning(&tag("nw"), &[n_pt, w_pt], Z, 0.05);
        let ws = slab_spanning(&tag("ws"), &[w_pt, s_pt], Z, 0.05);

        let mk = |slab: &RigidSlab, pnt: Vec3| AttachmentPoint::new(slab.id.clone(), slab.to_local(pnt));
        let hinge_at = |sa: &RigidSlab, sb: &RigidSlab, pnt: Vec3| {
            Joint::hinge(
                mk(sa, pnt + Z.scaled(HINGE_HALF_SPAN)),
                mk(sb, pnt + Z.scaled(HINGE_HALF_SPAN)),
                mk(sa, pnt - Z.scaled(HINGE_HALF_SPAN)),
                mk(sb, pnt - Z.scaled(HINGE_HALF_SPAN)),
            )
        };
        asm.joints.push(hinge_at(&se, &ws, s_pt));
        asm.joints.push(hinge_at(&se, &en, e_pt));
        asm.joints.push(hinge_at(&en, &nw, n_pt));
        asm.joints.push(hinge_at(&nw, &ws, w_pt));

        // Two universal joints to the previous half-unit through the width
        // offsets at the shared corner pair: the signal pair (S, N) after an
        // inverting stage, the transverse pair (E, W) after a restoring one.
        if k > 0 {
            let zp = (k - 1) as f64 * STACK_STEP + HINGE_HALF_SPAN;
            let prev = |s: &str| format!("h{}_{s}", k - 1);
            let bonds: [(&str, &RigidSlab, Vec3); 2] = if k % 2 == 1 {
                [("se", &se, e_pt), ("ws", &ws, w_pt)]
            } else {
                [("se", &se, s_pt), ("en", &en, n_pt)]
            };
            let mut new_joints = Vec::new();
            for (prev_slab, this_slab, xy) in bonds {
                let at = Vec3::new(xy.x, xy.y, zp);
                let ps = asm.slab(&prev(prev_slab)).unwrap();
                new_joints.push(Joint::universal(mk_on(ps, at), mk_on(this_slab, at)));
            }
            asm.joints.extend(new_joints);
        }

        asm.slabs.push(se);
        asm.slabs.push(en);
        asm.slabs.push(nw);
        asm.slabs.push(ws);
    }

    let axial_probe = |asm: &Assembly, k: usize| {
        let z = k as f64 * STACK_STEP;
        let se = asm.slab(&format!("h{k}_se")).unwrap();
        let en = asm.slab(&format!("h{k}_en")).unwrap();
        (
            AttachmentPoint::new(se.id.clone(), se.to_local(Vec3::new(0.0, -p, z))),
            AttachmentPoint::new(en.id.clone(), en.to_local(Vec3::new(0.0, p, z))),
        )
    };

    // Input gap: the signal diagonal of the first half-unit.
    let (in_a, in_b) = axial_probe(&asm, 0);
    asm.probes.push(Probe {
        id: "in".into(),
        endpoints: (in_a, in_b),
        rest_length: MUSCLE_REST,
        signal: MUSCLE_STROKE,
        role: ProbeRole::GateInput,
    });
    // One stage probe per unit: the restored diagonal of its second half.
    for u in 1..=units {
        let (a, b) = axial_probe(&asm, 2 * u - 1);
        asm.probes.push(Probe {
            id: format!("stage{u}"),
            endpoints: (a, b),
            rest_length: MUSCLE_REST,
            signal: MUSCLE_STROKE,
            role: ProbeRole::ConnectorStage,
        });
    }
    // Output gap: alias of the last stage.
    let last = asm.probes.iter().find(|pr| pr.id == format!("stage{units}")).unwrap().clone();
    asm.probes.push(Probe { id: "out".into(), role: ProbeRole::GateOutput, ..last });
    asm.ports.push(Port { name: "in".into(), probe: "in".into(), direction: PortDirection::Input });
    asm.ports.push(Port { name: "out".into(), probe: "out".into(), direction: PortDirection::Output });

    let asm = if tolerance > 0.0 { asm.with_tolerance(tolerance) } else { asm };
    asm.validate()?;
    Ok(asm)
}

fn mk_on(slab: &RigidSlab, world: Vec3) -> AttachmentPoint {
    AttachmentPoint::new(slab.id.clone(), slab.to_local(world))
}
