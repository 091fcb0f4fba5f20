//! Robot skeleton: a zigzag chain of rigid bars whose elbow openings are the
//! degrees of freedom.
//!
//! Bodies alternate up-slope and down-slope along the chain. Each internal
//! hinge spans a V whose opening (the distance between the two far nodes) is
//! a `SkeletonDof` probe with rest length 2 sigma; expanding it to 3 sigma
//! flattens that V and kinks the chain. Top hinges bend the chain one way,
//! bottom hinges the other, giving every unit its pair of up/down degrees of
//! freedom.

use super::{
    slab_spanning, Assembly, AttachmentPoint, Joint, ModelError, Port, PortDirection, Probe,
    ProbeRole, Result, HINGE_HALF_SPAN,
};
use crate::math::Vec3;

/// Rest length of a degree-of-freedom opening (sigma).
pub const DOF_REST: f64 = 2.0;
/// Expansion stroke of a degree of freedom (sigma).
pub const DOF_STROKE: f64 = 1.0;
/// Bar length; must exceed (DOF_REST + DOF_STROKE)/2 so the opening can
/// reach its expanded state.
const BAR_LEN: f64 = 1.55;

const Z: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 1.0 };

/// Build a skeleton chain of `units` units (two hinges and two DOF probes
/// per unit). Ports `dof1` .. `dof2n` accept the expansion drive.
pub fn build_skeleton(units: usize) -> Result<Assembly> {
    if units < 1 {
        return Err(ModelError::InvalidSpec("skeleton needs at least one unit".into()));
    }
    let n_bodies = 2 * units + 1;
    let amp = (BAR_LEN * BAR_LEN - 1.0).sqrt();
    let node = |j: usize| Vec3::new(j as f64, if j % 2 == 1 { amp } else { 0.0 }, 0.0);

    let mut asm = Assembly::default();
    for b in 0..n_bodies {
        let slab = slab_spanning(&format!("bar{b}"), &[node(b), node(b + 1)], Z, 0.1);
        asm.slabs.push(slab);
    }
    for j in 1..=2 * units {
        let p = node(j);
        let left = asm.slabs[j - 1].clone();
        let right = asm.slabs[j].clone();
        let mk = |s: &super::RigidSlab, p: Vec3| AttachmentPoint::new(s.id.clone(), s.to_local(p));
        asm.joints.push(Joint::hinge(
            mk(&left, p + Z.scaled(HINGE_HALF_SPAN)),
            mk(&right, p + Z.scaled(HINGE_HALF_SPAN)),
            mk(&left, p - Z.scaled(HINGE_HALF_SPAN)),
            mk(&right, p - Z.scaled(HINGE_HALF_SPAN)),
        ));
        let probe_id = format!("dof{j}");
        asm.probes.push(Probe {
            id: probe_id.clone(),
            endpoints: (mk(&left, node(j - 1)), mk(&right, node(j + 1))),
            rest_length: DOF_REST,
            signal: DOF_STROKE,
            role: ProbeRole::SkeletonDof,
        });
        asm.ports.push(Port {
            name: probe_id.clone(),
            probe: probe_id,
            direction: PortDirection::Input,
        });
    }
    asm.validate()?;
    Ok(asm)
}
