//! Gate construction: a logic core extruded into slabs with two input levers
//! and one output lever attached.
//!
//! The gate body lives in the z = 0 plane with the base slab `ab` along x
//! and the apex link `cd` on the y axis. The output lever works in the
//! x = 0 plane, which both adapts the core output and pins the apex to the
//! perpendicular bisector of `ab`. Every gate has exactly 8 slabs and 8
//! joints: 7 hinges plus the universal joint at the top of the output lever.

use super::lever::ElbowLever;
use super::{
    slab_spanning, Assembly, AttachmentPoint, GateKind, Joint, ModelError, Muscle, Port,
    PortDirection, Probe, ProbeRole, Result, RigidSlab, SignalMode, HINGE_HALF_SPAN, MUSCLE_REST,
};
use crate::geometry::{solve_lever, CoreGeometry, HingeKind, LeverSpec};
use crate::math::Vec3;

const Z: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 1.0 };
const X: Vec3 = Vec3 { x: 1.0, y: 0.0, z: 0.0 };
const Y: Vec3 = Vec3 { x: 0.0, y: 1.0, z: 0.0 };

/// Hinge mechanism type for a lever, from its NOT-integration and the signal
/// mode on its free side. An open hinge inverts the signal direction, a
/// crossed hinge retains it.
fn hinge_for(lever_not: bool, mode: SignalMode) -> HingeKind {
    match (lever_not, mode) {
        (false, SignalMode::Expand) => HingeKind::Crossed,
        (false, SignalMode::Contract) => HingeKind::Open,
        (true, SignalMode::Expand) => HingeKind::Open,
        (true, SignalMode::Contract) => HingeKind::Crossed,
    }
}

/// The lever parameter sets of a gate: `(input, output)` specs with the
/// nominal horizontal extents `l = 1.5 sigma` (inputs) and `l = 2 sigma`
/// (output).
pub fn gate_lever_specs(
    kind: GateKind,
    muscle_mode: SignalMode,
    output_mode: SignalMode,
    core: &CoreGeometry,
) -> Result<(LeverSpec, LeverSpec)> {
    let (input_not, output_not) = kind.lever_nots();
    let h = core.spec.h_frac;
    let input = LeverSpec::new(
        MUSCLE_REST,
        MUSCLE_REST,
        muscle_mode.signal(),
        core.spec.delta_in_frac,
        1.5,
        hinge_for(input_not, muscle_mode),
    )?;
    let output = LeverSpec::new(
        h,
        MUSCLE_REST,
        core.delta_out_frac,
        output_mode.signal(),
        2.0,
        hinge_for(output_not, output_mode),
    )?;
    Ok((input, output))
}

/// Build a logic gate from a solved core.
///
/// `muscle_mode` sets how the two input muscles actuate, `output_mode` how
/// the output encodes state 1. Lever hinge types follow the NOT-integration
/// rules of the gate family, so the assembly computes `kind` over the muscle
/// states. Ports: `in1`, `in2` (muscle channels of the same names) and
/// `out`.
pub fn build_gate(
    kind: GateKind,
    muscle_mode: SignalMode,
    output_mode: SignalMode,
    core: &CoreGeometry,
) -> Result<Assembly> {
    let din = core.spec.delta_in_frac;
    let h = core.spec.h_frac;
    let dout = core.delta_out_frac;
    if core.max_residual() > 1e-6 {
        return Err(ModelError::InvalidSpec("core geometry residuals too large".into()));
    }
    if din <= 0.0 {
        return Err(ModelError::GeometryInfeasible(
            "a gate needs a core with non-zero input stroke".into(),
        ));
    }
    let (input_not, output_not) = kind.lever_nots();

    // The verbatim lever systems must be solvable for this parameter set;
    // a failure here is what GeometryInfeasible reports.
    let (in_spec, out_spec) = gate_lever_specs(kind, muscle_mode, output_mode, core)?;
    solve_lever(in_spec, 1e-10)?;
    solve_lever(out_spec, 1e-10)?;

    let m_sig = muscle_mode.signal();
    let o_sig = output_mode.signal();

    // Input lever: couples the core span (sigma <-> sigma + din) to the
    // muscle gap (sigma <-> sigma + m_sig). State 0 pairs per the NOT rule.
    let (span_m0, span_m1) = if input_not { (1.0 + din, 1.0) } else { (1.0, 1.0 + din) };
    let in_lever = ElbowLever::design(span_m0, MUSCLE_REST, span_m1, MUSCLE_REST + m_sig)?;
    // Output lever: couples the apex height (h <-> h + dout) to the output
    // gap (sigma <-> sigma + o_sig).
    let (dspan_o0, dspan_o1) = if output_not { (h + dout, h) } else { (h, h + dout) };
    let out_lever = ElbowLever::design(dspan_o0, MUSCLE_REST, dspan_o1, MUSCLE_REST + o_sig)?;

    // Built configuration: muscles at rest, so the core sits expanded when
    // the input levers carry NOT.
    let core_expanded = input_not;
    let sin_phi = core.phi.sin();
    let y_c = if core_expanded { (1.0 + din) * core.zeta.cos() } else { core.phi.cos() };
    let a_pt = Vec3::new(-sin_phi, 0.0, 0.0);
    let b_pt = Vec3::new(sin_phi, 0.0, 0.0);
    let c_pt = Vec3::new(0.0, y_c, 0.0);
    let d_pt = Vec3::new(0.0, y_c + core.x_frac, 0.0);
    let m_pt = Vec3::ZERO;

    let slab_ab = slab_spanning("ab", &[a_pt, b_pt], Z, 0.3);
    let slab_cd = slab_spanning("cd", &[c_pt, d_pt], Z, 0.3);

    let mut asm = Assembly {
        slabs: vec![slab_ab, slab_cd],
        ..Default::default()
    };

    // Input levers on both sides. The span runs from the base corner to the
    // apex; the elbow bulges outboard, muscles hang on the free ends.
    let span_built_in = if core_expanded { 1.0 + din } else { 1.0 };
    let mut c_hinge_pairs = Vec::new();
    for (side, base) in [("a", a_pt), ("b", b_pt)] {
        let u_hat = (c_pt - base).scaled(1.0 / span_built_in);
        let w_hat = if side == "a" { Z.cross(u_hat) } else { u_hat.cross(Z) };
        let to_world = |p: (f64, f64)| base + u_hat.scaled(p.1) + w_hat.scaled(p.0);

        let elbow = to_world(in_lever.elbow_2d(span_built_in));
        let (o1_2d, o2_2d) = in_lever.free_ends_2d(span_built_in);
        let (o1, o2) = (to_world(o1_2d), to_world(o2_2d));

        let arm1 = slab_spanning(&format!("{side}1"), &[base, elbow, o1], Z, 0.2);
        let arm2 = slab_spanning(&format!("{side}2"), &[c_pt, elbow, o2], Z, 0.2);

        // Hinge to the base slab at the corner, axis z.
        let ab = asm.slabs[0].clone();
        let mk = |slab: &RigidSlab, p: Vec3| AttachmentPoint::new(slab.id.clone(), slab.to_local(p));
        asm.joints.push(Joint::hinge(
            mk(&ab, base + Z.scaled(HINGE_HALF_SPAN)),
            mk(&arm1, base + Z.scaled(HINGE_HALF_SPAN)),
            mk(&ab, base - Z.scaled(HINGE_HALF_SPAN)),
            mk(&arm1, base - Z.scaled(HINGE_HALF_SPAN)),
        ));
        // Elbow pivot, axis z.
        asm.joints.push(Joint::hinge(
            mk(&arm1, elbow + Z.scaled(HINGE_HALF_SPAN)),
            mk(&arm2, elbow + Z.scaled(HINGE_HALF_SPAN)),
            mk(&arm1, elbow - Z.scaled(HINGE_HALF_SPAN)),
            mk(&arm2, elbow - Z.scaled(HINGE_HALF_SPAN)),
        ));
        // The apex bonds of this side; both sides share a single hinge pin
        // on cd, with a bond at either end of the pin per attached arm (a
        // two-bond pin leaves a three-body joint one parasitic degree of
        // freedom).
        let cd = asm.slabs[1].clone();
        for z_off in [HINGE_HALF_SPAN, -HINGE_HALF_SPAN] {
            c_hinge_pairs.push((mk(&arm2, c_pt + Z.scaled(z_off)), mk(&cd, c_pt + Z.scaled(z_off))));
        }

        let muscle_id = format!("m_in{}", if side == "a" { 1 } else { 2 });
        let channel = format!("in{}", if side == "a" { 1 } else { 2 });
        let probe_id = channel.clone();
        let end1 = mk(&arm1, o1);
        let end2 = mk(&arm2, o2);
        asm.muscles.push(Muscle::new(muscle_id, end1.clone(), end2.clone(), muscle_mode, &channel));
        asm.probes.push(Probe {
            id: probe_id.clone(),
            endpoints: (end1, end2),
            rest_length: MUSCLE_REST,
            signal: m_sig,
            role: ProbeRole::GateInput,
        });
        asm.ports.push(Port { name: channel, probe: probe_id, direction: PortDirection::Input });
        asm.slabs.push(arm1);
        asm.slabs.push(arm2);
    }
    asm.joints.push(Joint {
        kind: super::JointKind::Hinge,
        endpoints: c_hinge_pairs,
        stiffness: super::DEFAULT_STIFFNESS,
        tolerance: 0.0,
    });

    // Output lever in the x = 0 plane, from the middle of ab up to the apex
    // point d. Its planar motion keeps d on the perpendicular bisector.
    let dspan_built = if core_expanded { h + dout } else { h };
    {
        let to_world = |p: (f64, f64)| m_pt + Y.scaled(p.1) + Z.scaled(p.0);
        let elbow = to_world(out_lever.elbow_2d(dspan_built));
        let (o1_2d, o2_2d) = out_lever.free_ends_2d(dspan_built);
        let (o1, o2) = (to_world(o1_2d), to_world(o2_2d));

        let arm1 = slab_spanning("o1", &[m_pt, elbow, o1], X, 0.2);
        let arm2 = slab_spanning("o2", &[d_pt, elbow, o2], X, 0.2);
        let ab = asm.slabs[0].clone();
        let cd = asm.slabs[1].clone();
        let mk = |slab: &RigidSlab, p: Vec3| AttachmentPoint::new(slab.id.clone(), slab.to_local(p));

        // Bottom hinge to ab, axis x.
        asm.joints.push(Joint::hinge(
            mk(&ab, m_pt + X.scaled(HINGE_HALF_SPAN)),
            mk(&arm1, m_pt + X.scaled(HINGE_HALF_SPAN)),
            mk(&ab, m_pt - X.scaled(HINGE_HALF_SPAN)),
            mk(&arm1, m_pt - X.scaled(HINGE_HALF_SPAN)),
        ));
        // Elbow pivot, axis x.
        asm.joints.push(Joint::hinge(
            mk(&arm1, elbow + X.scaled(HINGE_HALF_SPAN)),
            mk(&arm2, elbow + X.scaled(HINGE_HALF_SPAN)),
            mk(&arm1, elbow - X.scaled(HINGE_HALF_SPAN)),
            mk(&arm2, elbow - X.scaled(HINGE_HALF_SPAN)),
        ));
        // Universal joint at d.
        asm.joints.push(Joint::universal(mk(&arm2, d_pt), mk(&cd, d_pt)));

        let end1 = mk(&arm1, o1);
        let end2 = mk(&arm2, o2);
        asm.probes.push(Probe {
            id: "out".into(),
            endpoints: (end1, end2),
            rest_length: MUSCLE_REST,
            signal: o_sig,
            role: ProbeRole::GateOutput,
        });
        asm.probes.push(Probe {
            id: "core".into(),
            endpoints: (mk(&ab, m_pt), mk(&cd, d_pt)),
            rest_length: h,
            signal: dout,
            role: ProbeRole::CoreOutput,
        });
        asm.ports.push(Port { name: "out".into(), probe: "out".into(), direction: PortDirection::Output });
        asm.slabs.push(arm1);
        asm.slabs.push(arm2);
    }

    asm.validate()?;
    debug_assert!(joints_closed(&asm) < 1e-9);
    Ok(asm)
}

/// Largest bond-endpoint separation across all joints at the built
/// configuration; exact builds close every joint.
pub(crate) fn joints_closed(asm: &Assembly) -> f64 {
    let mut worst: f64 = 0.0;
    for j in &asm.joints {
        for (a, b) in &j.endpoints {
            let pa = asm.attachment_world(a).unwrap();
            let pb = asm.attachment_world(b).unwrap();
            worst = worst.max((pa - pb).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{solve_core, CoreSpec};
    use crate::model::JointKind;

    fn core() -> CoreGeometry {
        solve_core(CoreSpec::paper_default(), 1e-12).unwrap()
    }

    #[test]
    fn every_gate_has_eight_slabs_and_eight_joints() {
        let core = core();
        for kind in [GateKind::And, GateKind::Or, GateKind::Nand, GateKind::Nor] {
            let g = build_gate(kind, kind.default_muscle_mode(), kind.default_output_mode(), &core)
                .unwrap();
            assert_eq!(g.slabs.len(), 8, "{kind}");
            assert_eq!(g.joints.len(), 8, "{kind}");
            assert_eq!(g.joint_count(JointKind::Hinge), 7, "{kind}");
            assert_eq!(g.joint_count(JointKind::Universal), 1, "{kind}");
            assert_eq!(g.ports.len(), 3);
            assert!(joints_closed(&g) < 1e-9, "{kind} joints must close at build");
        }
    }

    #[test]
    fn expand_expand_and_gate_matches_structure() {
        let g = build_gate(GateKind::And, SignalMode::Expand, SignalMode::Expand, &core()).unwrap();
        assert_eq!(g.slabs.len(), 8);
        assert_eq!(g.joints.len(), 8);
        assert_eq!(g.ports.len(), 3);
    }

    #[test]
    fn nand_contract_uses_open_inputs_and_crossed_output() {
        let (input, output) = gate_lever_specs(
            GateKind::Nand,
            SignalMode::Contract,
            SignalMode::Contract,
            &core(),
        )
        .unwrap();
        assert_eq!(input.hinge, HingeKind::Open);
        assert_eq!(output.hinge, HingeKind::Crossed);
    }

    #[test]
    fn or_gate_levers_all_carry_not() {
        // NOT on every lever means: contracting muscles pair with crossed
        // hinges on the inputs and on the output.
        let (input, output) =
            gate_lever_specs(GateKind::Or, SignalMode::Contract, SignalMode::Contract, &core())
                .unwrap();
        assert_eq!(input.hinge, HingeKind::Crossed);
        assert_eq!(output.hinge, HingeKind::Crossed);
        let (and_in, and_out) =
            gate_lever_specs(GateKind::And, SignalMode::Contract, SignalMode::Contract, &core())
                .unwrap();
        assert_eq!(and_in.hinge, HingeKind::Open);
        assert_eq!(and_out.hinge, HingeKind::Open);
    }

    #[test]
    fn built_probe_lengths_match_the_rest_input_state() {
        let core = core();
        // NAND with contracting muscles: output state 1 (contracted) at rest
        // inputs.
        let g = build_gate(GateKind::Nand, SignalMode::Contract, SignalMode::Contract, &core)
            .unwrap();
        assert!((g.probe_length("in1").unwrap() - 1.0).abs() < 1e-9);
        assert!((g.probe_length("in2").unwrap() - 1.0).abs() < 1e-9);
        assert!((g.probe_length("out").unwrap() - 0.5).abs() < 1e-9);
        assert!((g.probe_length("core").unwrap() - 2.0).abs() < 1e-9);
        // AND with contracting muscles: output at rest.
        let g = build_gate(GateKind::And, SignalMode::Contract, SignalMode::Contract, &core)
            .unwrap();
        assert!((g.probe_length("out").unwrap() - 1.0).abs() < 1e-9);
        // OR: core built expanded (both inputs carry NOT), output rest.
        let g = build_gate(GateKind::Or, SignalMode::Contract, SignalMode::Contract, &core)
            .unwrap();
        assert!((g.probe_length("core").unwrap() - (2.0 + core.delta_out_frac)).abs() < 1e-9);
        assert!((g.probe_length("out").unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn nonbonded_slabs_stay_clear_of_the_wca_core() {
        let core = core();
        for kind in [GateKind::And, GateKind::Or, GateKind::Nand, GateKind::Nor] {
            let g = build_gate(kind, kind.default_muscle_mode(), kind.default_output_mode(), &core)
                .unwrap();
            let bonded = crate::model::bonded_pairs(&g);
            for i in 0..g.slabs.len() {
                for j in (i + 1)..g.slabs.len() {
                    if bonded.contains(&(i, j)) {
                        continue;
                    }
                    let d = (g.slabs[i].position - g.slabs[j].position).norm();
                    assert!(
                        d > 0.2,
                        "{kind}: slabs {} and {} are {d:.3} apart",
                        g.slabs[i].id,
                        g.slabs[j].id
                    );
                }
            }
        }
    }
}
