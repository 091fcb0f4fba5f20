//! Circuit composition: merge named assemblies and fuse wired ports with
//! universal joints.

use super::{Assembly, AttachmentPoint, Joint, ModelError, PortDirection, Result};
use crate::math::{Quat, Vec3};
use std::collections::{HashMap, HashSet};

/// Merge `parts` into one assembly, fusing each wire's output port onto the
/// matching input port with a pair of universal joints at the probe
/// endpoints.
///
/// Every part's ids are prefixed with its name. Parts are placed by rigid
/// transforms so wired probe endpoints coincide; a part reached by no wire
/// keeps its built pose but is offset out of plane to keep disjoint parts
/// from overlapping. Wiring into a lever input that carries a built-in
/// muscle replaces that muscle, so a gate input can be driven either by its
/// own muscle or by an upstream signal. Unwired ports are re-exported under
/// their prefixed names.
pub fn compose(parts: &[(String, Assembly)], wires: &[(String, String)]) -> Result<Assembly> {
    let mut names = HashSet::new();
    for (name, _) in parts {
        if name.is_empty() || name.contains('.') {
            return Err(ModelError::InvalidSpec(format!("bad part name {name:?}")));
        }
        if !names.insert(name.as_str()) {
            return Err(ModelError::InvalidSpec(format!("duplicate part name {name}")));
        }
    }
    let mut placed: Vec<Option<Assembly>> = vec![None; parts.len()];
    let by_name: HashMap<&str, usize> =
        parts.iter().enumerate().map(|(i, (n, _))| (n.as_str(), i)).collect();

    let part_of = |port: &str| -> Result<(usize, String)> {
        let (part, _local) = port
            .split_once('.')
            .ok_or_else(|| ModelError::UnknownPort(format!("port {port} is not part.port")))?;
        let idx = *by_name
            .get(part)
            .ok_or_else(|| ModelError::UnknownPort(format!("unknown part in {port}")))?;
        Ok((idx, port.to_string()))
    };

    // Validate wires against the unplaced parts first.
    let mut used_ports = HashSet::new();
    struct WirePlan {
        src_part: usize,
        dst_part: usize,
        src_port: String,
        dst_port: String,
    }
    let mut plans = Vec::new();
    for (src, dst) in wires {
        let (si, src_port) = part_of(src)?;
        let (di, dst_port) = part_of(dst)?;
        let lookup = |i: usize, port: &str| -> Result<(PortDirection, f64, f64)> {
            let local = port.split_once('.').unwrap().1;
            let asm = &parts[i].1;
            let p = asm
                .port(local)
                .ok_or_else(|| ModelError::UnknownPort(format!("no port {port}")))?;
            let probe = asm.probe(&p.probe).unwrap();
            Ok((p.direction, probe.rest_length, probe.signal))
        };
        let (sdir, srest, ssig) = lookup(si, &src_port)?;
        let (ddir, drest, dsig) = lookup(di, &dst_port)?;
        if sdir != PortDirection::Output || ddir != PortDirection::Input {
            return Err(ModelError::PortMismatch(format!(
                "{src} -> {dst} must run output -> input"
            )));
        }
        if (srest - drest).abs() > 1e-9 || (ssig - dsig).abs() > 1e-9 {
            return Err(ModelError::PortMismatch(format!(
                "{src} (rest {srest}, signal {ssig}) vs {dst} (rest {drest}, signal {dsig})"
            )));
        }
        for p in [src, dst] {
            if !used_ports.insert(p.clone()) {
                return Err(ModelError::DoubleWire(format!("port {p} wired twice")));
            }
        }
        plans.push(WirePlan { src_part: si, dst_part: di, src_port, dst_port });
    }

    // Place parts: the first one anchors the scene, wired neighbours are
    // transformed so their probe endpoints coincide, leftovers are offset.
    if let Some((name, asm)) = parts.first() {
        placed[0] = Some(asm.prefixed(name));
    }
    let mut progress = true;
    while progress {
        progress = false;
        for plan in &plans {
            let (si, di) = (plan.src_part, plan.dst_part);
            if placed[si].is_some() && placed[di].is_some() {
                continue;
            }
            let (anchor_idx, move_idx, anchor_port, move_port) = if placed[si].is_some() {
                (si, di, &plan.src_port, &plan.dst_port)
            } else if placed[di].is_some() {
                (di, si, &plan.dst_port, &plan.src_port)
            } else {
                continue;
            };
            let anchor = placed[anchor_idx].as_ref().unwrap();
            let target = probe_segment(anchor, anchor_port)?;
            let (mname, masm) = &parts[move_idx];
            let moved = masm.prefixed(mname);
            let source = probe_segment(&moved, move_port)?;
            let (rot, tr) = align_segment(source, target);
            placed[move_idx] = Some(moved.transformed(rot, tr));
            progress = true;
        }
    }
    let mut offset = 0;
    for (i, slot) in placed.iter_mut().enumerate() {
        if slot.is_none() {
            let (name, asm) = &parts[i];
            let mut moved = asm.prefixed(name);
            if i > 0 {
                offset += 1;
                moved = moved.transformed(Quat::IDENTITY, Vec3::new(0.0, 0.0, 8.0 * offset as f64));
            }
            *slot = Some(moved);
        }
    }

    // Merge everything.
    let mut out = Assembly::default();
    for slot in placed.into_iter().flatten() {
        out.slabs.extend(slot.slabs);
        out.joints.extend(slot.joints);
        out.muscles.extend(slot.muscles);
        out.probes.extend(slot.probes);
        out.ports.extend(slot.ports);
    }

    // Fuse wires and drop consumed ports; wiring into a muscle-backed input
    // replaces the muscle.
    for plan in &plans {
        let src_probe = port_probe(&out, &plan.src_port)?;
        let dst_probe = port_probe(&out, &plan.dst_port)?;
        let (s0, s1) = src_probe.clone();
        let (d0, d1) = dst_probe.clone();
        out.muscles.retain(|m| {
            !(same_attachment(&m.endpoints.0, &d0) && same_attachment(&m.endpoints.1, &d1)
                || same_attachment(&m.endpoints.0, &d1) && same_attachment(&m.endpoints.1, &d0))
        });
        out.joints.push(Joint::universal(s0, d0));
        out.joints.push(Joint::universal(s1, d1));
        out.ports.retain(|p| p.name != plan.src_port && p.name != plan.dst_port);
    }

    out.validate()?;
    Ok(out)
}

fn same_attachment(a: &AttachmentPoint, b: &AttachmentPoint) -> bool {
    a.body == b.body && a.local.iter().zip(&b.local).all(|(x, y)| (x - y).abs() < 1e-9)
}

fn port_probe(asm: &Assembly, port: &str) -> Result<(AttachmentPoint, AttachmentPoint)> {
    let p = asm.port(port).ok_or_else(|| ModelError::UnknownPort(port.into()))?;
    let probe = asm.probe(&p.probe).ok_or_else(|| ModelError::UnknownPort(p.probe.clone()))?;
    Ok((probe.endpoints.0.clone(), probe.endpoints.1.clone()))
}

fn probe_segment(asm: &Assembly, port: &str) -> Result<(Vec3, Vec3)> {
    let (a, b) = port_probe(asm, port)?;
    let pa = asm
        .attachment_world(&a)
        .ok_or_else(|| ModelError::Inconsistent(format!("dangling attachment on {port}")))?;
    let pb = asm
        .attachment_world(&b)
        .ok_or_else(|| ModelError::Inconsistent(format!("dangling attachment on {port}")))?;
    Ok((pa, pb))
}

/// Rigid transform taking segment `from` onto segment `to`: midpoints match
/// and directions align by the minimal rotation. Unequal lengths leave a
/// symmetric strain that the bonds relax away.
fn align_segment(from: (Vec3, Vec3), to: (Vec3, Vec3)) -> (Quat, Vec3) {
    let fd = (from.1 - from.0).normalized();
    let td = (to.1 - to.0).normalized();
    let dot = fd.dot(td).clamp(-1.0, 1.0);
    let rot = if dot > 1.0 - 1e-12 {
        Quat::IDENTITY
    } else {
        let axis = if dot < -1.0 + 1e-12 {
            // Antiparallel: rotate about any axis perpendicular to fd.
            let probe = if fd.x.abs() < 0.9 { Vec3::new(1.0, 0.0, 0.0) } else { Vec3::new(0.0, 1.0, 0.0) };
            fd.cross(probe).normalized()
        } else {
            fd.cross(td).normalized()
        };
        Quat::from_axis_angle(axis, dot.acos())
    };
    let from_mid = (from.0 + from.1).scaled(0.5);
    let to_mid = (to.0 + to.1).scaled(0.5);
    let tr = to_mid - rot.rotate(from_mid);
    (rot, tr)
}
