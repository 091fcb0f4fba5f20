//! The `.mlc` circuit description language: a line-oriented netlist that
//! declares muscles, gates, connectors, skeletons, wires and actuation
//! schedules, and elaborates into a simulatable assembly.
//!
//! Grammar (one declaration per line, `#` starts a comment):
//!
//! ```text
//! muscle <id> mode (expand|contract) channel <id>
//! gate <id> kind (AND|OR|NAND|NOR) [out_mode (expand|contract)]
//! connector <id> units <int> [tolerance <float>]
//! skeleton <id> units <int>
//! wire <id>.<port> -> <id>.<port>
//! schedule <channel> square period <float> duty <float>
//! schedule <channel> step (<t>:<0|1>)+
//! schedule <channel> const <0|1>
//! ```
//!
//! Gates default their output mode to the gate-family convention (NAND
//! expands, the others contract) and drive their input levers with muscles
//! of the same mode, so a circuit of expand-signal parts is declared with
//! `out_mode expand` throughout. Wires into a skeleton degree of freedom
//! pass through an automatically inserted adaptor lever that converts the
//! standard (sigma, +sigma/2) signal into the (2 sigma, +sigma) drive.

use crate::dynamics::{ActuationSchedule, Channel, Waveform};
use crate::geometry::CoreGeometry;
use crate::model::{
    build_connector, build_gate, build_muscle_fixture, build_skeleton, compose, Assembly,
    GateKind, ModelError, Muscle, PortDirection, SignalMode,
};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetlistError {
    #[error("SyntaxError at {line}:{col}: expected {expected}")]
    SyntaxError { line: usize, col: usize, expected: String },
    #[error("DuplicateId at line {line}: {id}")]
    DuplicateId { line: usize, id: String },
    #[error("UnknownReference at line {line}: {reference}")]
    UnknownReference { line: usize, reference: String },
    #[error("UnboundChannel: {0}")]
    UnboundChannel(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub type Result<T> = std::result::Result<T, NetlistError>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MuscleDecl {
    pub id: String,
    pub mode: SignalMode,
    pub channel: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateDecl {
    pub id: String,
    pub kind: GateKind,
    pub out_mode: Option<SignalMode>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConnectorDecl {
    pub id: String,
    pub units: usize,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkeletonDecl {
    pub id: String,
    pub units: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct PortRef {
    pub instance: String,
    pub port: String,
}

impl std::fmt::Display for PortRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}.{}", self.instance, self.port)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleDecl {
    pub channel: String,
    pub waveform: Waveform,
}

/// A parsed circuit description.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct CircuitSpec {
    pub muscles: Vec<MuscleDecl>,
    pub gates: Vec<GateDecl>,
    pub connectors: Vec<ConnectorDecl>,
    pub skeletons: Vec<SkeletonDecl>,
    pub wires: Vec<(PortRef, PortRef)>,
    pub schedules: Vec<ScheduleDecl>,
}

impl CircuitSpec {
    pub fn instance_count(&self) -> usize {
        self.muscles.len() + self.gates.len() + self.connectors.len() + self.skeletons.len()
    }
}

struct Tokens<'a> {
    line_no: usize,
    toks: Vec<(&'a str, usize)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(line_no: usize, line: &'a str) -> Self {
        let mut toks = Vec::new();
        let mut col = 0;
        for piece in line.split_whitespace() {
            let start = line[col..].find(piece).unwrap() + col;
            toks.push((piece, start + 1));
            col = start + piece.len();
        }
        Tokens { line_no, toks, pos: 0 }
    }

    fn err(&self, expected: &str) -> NetlistError {
        let col = self
            .toks
            .get(self.pos)
            .map(|(_, c)| *c)
            .unwrap_or_else(|| self.toks.last().map(|(t, c)| c + t.len()).unwrap_or(1));
        NetlistError::SyntaxError { line: self.line_no, col, expected: expected.to_string() }
    }

    fn next(&mut self, expected: &str) -> Result<(&'a str, usize)> {
        let t = self.toks.get(self.pos).copied().ok_or_else(|| self.err(expected))?;
        self.pos += 1;
        Ok(t)
    }

    fn keyword(&mut self, kw: &str) -> Result<()> {
        let (t, _) = self.next(kw)?;
        if t != kw {
            self.pos -= 1;
            return Err(self.err(kw));
        }
        Ok(())
    }

    fn ident(&mut self, what: &str) -> Result<String> {
        let (t, _) = self.next(what)?;
        let ok = !t.is_empty()
            && t.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
            && !t.chars().next().unwrap().is_ascii_digit();
        if !ok {
            self.pos -= 1;
            return Err(self.err(what));
        }
        Ok(t.to_string())
    }

    fn number(&mut self, what: &str) -> Result<f64> {
        let (t, _) = self.next(what)?;
        match t.parse() {
            Ok(v) => Ok(v),
            Err(_) => {
                self.pos -= 1;
                Err(self.err(what))
            }
        }
    }

    fn integer(&mut self, what: &str) -> Result<usize> {
        let (t, _) = self.next(what)?;
        match t.parse() {
            Ok(v) => Ok(v),
            Err(_) => {
                self.pos -= 1;
                Err(self.err(what))
            }
        }
    }

    fn mode(&mut self) -> Result<SignalMode> {
        let (t, _) = self.next("expand|contract")?;
        match t {
            "expand" => Ok(SignalMode::Expand),
            "contract" => Ok(SignalMode::Contract),
            _ => {
                self.pos -= 1;
                Err(self.err("expand|contract"))
            }
        }
    }

    fn port_ref(&mut self) -> Result<PortRef> {
        let (t, col) = self.next("<id>.<port>")?;
        let bad = || NetlistError::SyntaxError {
            line: self.line_no,
            col,
            expected: "<id>.<port>".into(),
        };
        let (inst, port) = t.split_once('.').ok_or_else(bad)?;
        if inst.is_empty() || port.is_empty() {
            return Err(bad());
        }
        Ok(PortRef { instance: inst.to_string(), port: port.to_string() })
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.toks.len() {
            return Err(self.err("end of line"));
        }
        Ok(())
    }

    fn peek(&self) -> Option<&'a str> {
        self.toks.get(self.pos).map(|(t, _)| *t)
    }
}

/// Parse a netlist. Errors carry line and column.
pub fn parse(text: &str) -> Result<CircuitSpec> {
    let mut spec = CircuitSpec::default();
    let mut decl_lines: Vec<(usize, String)> = Vec::new();
    let mut wire_lines: Vec<usize> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        if line.trim().is_empty() {
            continue;
        }
        let mut t = Tokens::new(line_no, line);
        let (head, col) = t.next("declaration keyword")?;
        match head {
            "muscle" => {
                let id = t.ident("muscle id")?;
                t.keyword("mode")?;
                let mode = t.mode()?;
                t.keyword("channel")?;
                let channel = t.ident("channel id")?;
                t.finish()?;
                decl_lines.push((line_no, id.clone()));
                spec.muscles.push(MuscleDecl { id, mode, channel });
            }
            "gate" => {
                let id = t.ident("gate id")?;
                t.keyword("kind")?;
                let (k, kcol) = t.next("AND|OR|NAND|NOR")?;
                let kind: GateKind = k.parse().map_err(|_| NetlistError::SyntaxError {
                    line: line_no,
                    col: kcol,
                    expected: "AND|OR|NAND|NOR".into(),
                })?;
                let out_mode = if t.peek() == Some("out_mode") {
                    t.keyword("out_mode")?;
                    Some(t.mode()?)
                } else {
                    None
                };
                t.finish()?;
                decl_lines.push((line_no, id.clone()));
                spec.gates.push(GateDecl { id, kind, out_mode });
            }
            "connector" => {
                let id = t.ident("connector id")?;
                t.keyword("units")?;
                let units = t.integer("unit count")?;
                let tolerance = if t.peek() == Some("tolerance") {
                    t.keyword("tolerance")?;
                    Some(t.number("tolerance value")?)
                } else {
                    None
                };
                t.finish()?;
                decl_lines.push((line_no, id.clone()));
                spec.connectors.push(ConnectorDecl { id, units, tolerance });
            }
            "skeleton" => {
                let id = t.ident("skeleton id")?;
                t.keyword("units")?;
                let units = t.integer("unit count")?;
                t.finish()?;
                decl_lines.push((line_no, id.clone()));
                spec.skeletons.push(SkeletonDecl { id, units });
            }
            "wire" => {
                let from = t.port_ref()?;
                t.keyword("->")?;
                let to = t.port_ref()?;
                t.finish()?;
                spec.wires.push((from, to));
                wire_lines.push(line_no);
            }
            "schedule" => {
                let channel = t.ident("channel id")?;
                let (shape, scol) = t.next("square|step|const")?;
                let waveform = match shape {
                    "square" => {
                        t.keyword("period")?;
                        let period = t.number("period value")?;
                        t.keyword("duty")?;
                        let duty = t.number("duty value")?;
                        Waveform::Square { period, duty, phase: 0.0 }
                    }
                    "step" => {
                        let mut steps = Vec::new();
                        while t.peek().is_some() {
                            let (tok, col) = t.next("t:state")?;
                            let bad = || NetlistError::SyntaxError {
                                line: line_no,
                                col,
                                expected: "<t>:<0|1>".into(),
                            };
                            let (ts, ss) = tok.split_once(':').ok_or_else(bad)?;
                            let time: f64 = ts.parse().map_err(|_| bad())?;
                            let state: u8 = ss.parse().map_err(|_| bad())?;
                            steps.push((time, state));
                        }
                        if steps.is_empty() {
                            return Err(t.err("at least one <t>:<0|1>"));
                        }
                        Waveform::Step(steps)
                    }
                    "const" => {
                        let s = t.integer("0|1")?;
                        if s > 1 {
                            return Err(t.err("0|1"));
                        }
                        Waveform::Constant(s as u8)
                    }
                    _ => {
                        return Err(NetlistError::SyntaxError {
                            line: line_no,
                            col: scol,
                            expected: "square|step|const".into(),
                        })
                    }
                };
                waveform.validate().map_err(|_| NetlistError::SyntaxError {
                    line: line_no,
                    col: scol,
                    expected: "valid waveform parameters".into(),
                })?;
                t.finish()?;
                spec.schedules.push(ScheduleDecl { channel, waveform });
            }
            _ => {
                return Err(NetlistError::SyntaxError {
                    line: line_no,
                    col,
                    expected: "muscle|gate|connector|skeleton|wire|schedule".into(),
                })
            }
        }
    }

    // Unique instance ids.
    let mut seen = std::collections::HashSet::new();
    for (line, id) in &decl_lines {
        if !seen.insert(id.clone()) {
            return Err(NetlistError::DuplicateId { line: *line, id: id.clone() });
        }
    }

    // Wires must reference declared instances and ports they expose.
    for (w, (from, to)) in spec.wires.iter().enumerate() {
        let line = wire_lines[w];
        for pr in [from, to] {
            if !port_exists(&spec, pr) {
                return Err(NetlistError::UnknownReference { line, reference: pr.to_string() });
            }
        }
    }
    Ok(spec)
}

fn port_exists(spec: &CircuitSpec, pr: &PortRef) -> bool {
    if spec.muscles.iter().any(|m| m.id == pr.instance) {
        return pr.port == "out";
    }
    if spec.gates.iter().any(|g| g.id == pr.instance) {
        return matches!(pr.port.as_str(), "in1" | "in2" | "out");
    }
    if spec.connectors.iter().any(|c| c.id == pr.instance) {
        return matches!(pr.port.as_str(), "in" | "out");
    }
    if let Some(s) = spec.skeletons.iter().find(|s| s.id == pr.instance) {
        if let Some(n) = pr.port.strip_prefix("dof") {
            if let Ok(k) = n.parse::<usize>() {
                return k >= 1 && k <= 2 * s.units;
            }
        }
        return false;
    }
    false
}

/// Render a spec back to netlist text; `parse(print(spec))` equals `spec`.
pub fn print(spec: &CircuitSpec) -> String {
    let mut out = String::new();
    for m in &spec.muscles {
        out.push_str(&format!("muscle {} mode {} channel {}\n", m.id, mode_str(m.mode), m.channel));
    }
    for g in &spec.gates {
        match g.out_mode {
            Some(m) => {
                out.push_str(&format!("gate {} kind {} out_mode {}\n", g.id, g.kind, mode_str(m)))
            }
            None => out.push_str(&format!("gate {} kind {}\n", g.id, g.kind)),
        }
    }
    for c in &spec.connectors {
        match c.tolerance {
            Some(t) => {
                out.push_str(&format!("connector {} units {} tolerance {}\n", c.id, c.units, t))
            }
            None => out.push_str(&format!("connector {} units {}\n", c.id, c.units)),
        }
    }
    for s in &spec.skeletons {
        out.push_str(&format!("skeleton {} units {}\n", s.id, s.units));
    }
    for (from, to) in &spec.wires {
        out.push_str(&format!("wire {from} -> {to}\n"));
    }
    for s in &spec.schedules {
        match &s.waveform {
            Waveform::Square { period, duty, .. } => out
                .push_str(&format!("schedule {} square period {period} duty {duty}\n", s.channel)),
            Waveform::Step(steps) => {
                out.push_str(&format!("schedule {} step", s.channel));
                for (t, st) in steps {
                    out.push_str(&format!(" {t}:{st}"));
                }
                out.push('\n');
            }
            Waveform::Constant(v) => out.push_str(&format!("schedule {} const {v}\n", s.channel)),
        }
    }
    out
}

fn mode_str(m: SignalMode) -> &'static str {
    match m {
        SignalMode::Expand => "expand",
        SignalMode::Contract => "contract",
    }
}

/// Elaborate a circuit into an assembly and its actuation schedule.
///
/// Gates are built with the paper-default conventions (output mode per the
/// gate family unless overridden; input muscles match the output mode).
/// Declared muscles that are wired onto an input port install their bond
/// directly across that port's probe, replacing any built-in muscle; an
/// unwired muscle elaborates to its standalone two-slab fixture. Wires into
/// skeleton DOF ports are routed through an inserted adaptor lever.
pub fn elaborate(spec: &CircuitSpec, core: &CoreGeometry) -> Result<(Assembly, ActuationSchedule)> {
    let mut parts: Vec<(String, Assembly)> = Vec::new();
    let mut wires: Vec<(String, String)> = Vec::new();

    for g in &spec.gates {
        let out_mode = g.out_mode.unwrap_or_else(|| g.kind.default_output_mode());
        parts.push((g.id.clone(), build_gate(g.kind, out_mode, out_mode, core)?));
    }
    for c in &spec.connectors {
        parts.push((c.id.clone(), build_connector(c.units, c.tolerance.unwrap_or(0.0))?));
    }
    for s in &spec.skeletons {
        parts.push((s.id.clone(), build_skeleton(s.units)?));
    }

    // Which muscles drive a port directly (installed post-compose).
    let mut muscle_installs: Vec<(&MuscleDecl, PortRef)> = Vec::new();
    let mut wired_muscles: std::collections::HashSet<&str> = Default::default();
    let skeleton_ids: std::collections::HashSet<&str> =
        spec.skeletons.iter().map(|s| s.id.as_str()).collect();

    let mut adaptor_n = 0;
    for (from, to) in &spec.wires {
        let muscle_src = spec.muscles.iter().find(|m| m.id == from.instance);
        let into_skeleton = skeleton_ids.contains(to.instance.as_str());
        // Route through an adaptor lever when driving a skeleton DOF.
        let target: PortRef = if into_skeleton {
            adaptor_n += 1;
            let ad = format!("_ad{adaptor_n}");
            parts.push((ad.clone(), crate::model::build_adaptor()?));
            wires.push((format!("{ad}.out"), to.to_string()));
            PortRef { instance: ad, port: "in".into() }
        } else {
            to.clone()
        };
        match muscle_src {
            Some(m) => {
                wired_muscles.insert(m.id.as_str());
                muscle_installs.push((m, target));
            }
            None => wires.push((from.to_string(), target.to_string())),
        }
    }

    for m in &spec.muscles {
        if !wired_muscles.contains(m.id.as_str()) {
            parts.push((m.id.clone(), build_muscle_fixture(m.mode, &m.channel)));
        }
    }

    let mut asm = compose(&parts, &wires)?;

    // Install wired muscles directly across their target probes.
    for (m, target) in muscle_installs {
        let port_name = format!("{}.{}", target.instance, target.port);
        let port = asm
            .port(&port_name)
            .ok_or_else(|| ModelError::UnknownPort(port_name.clone()))?
            .clone();
        if port.direction != PortDirection::Input {
            return Err(NetlistError::Model(ModelError::PortMismatch(format!(
                "muscle {} must drive an input port, {port_name} is an output",
                m.id
            ))));
        }
        let probe = asm.probe(&port.probe).unwrap().clone();
        if (probe.rest_length - crate::model::MUSCLE_REST).abs() > 1e-9
            || (probe.signal - m.mode.signal()).abs() > 1e-9
        {
            return Err(NetlistError::Model(ModelError::PortMismatch(format!(
                "muscle {} ({:?}) vs port {port_name} (rest {}, signal {})",
                m.id, m.mode, probe.rest_length, probe.signal
            ))));
        }
        let (e0, e1) = probe.endpoints.clone();
        asm.muscles.retain(|x| {
            !(x.endpoints.0 == e0 && x.endpoints.1 == e1
                || x.endpoints.0 == e1 && x.endpoints.1 == e0)
        });
        asm.muscles.push(Muscle::new(m.id.clone(), e0, e1, m.mode, &m.channel));
        asm.ports.retain(|p| p.name != port_name);
    }
    asm.validate()?;

    // Every declared schedule must bind to a channel some muscle listens to.
    let channels: std::collections::HashSet<&str> =
        asm.muscles.iter().map(|m| m.channel.as_str()).collect();
    let mut schedule = ActuationSchedule::default();
    for s in &spec.schedules {
        if !channels.contains(s.channel.as_str()) {
            return Err(NetlistError::UnboundChannel(s.channel.clone()));
        }
        schedule.channels.push(Channel { name: s.channel.clone(), waveform: s.waveform.clone() });
    }
    Ok((asm, schedule))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{solve_core, CoreSpec};

    pub(crate) const FIG5B: &str = "\
# two-gate chain through a five-unit connector
muscle my mode expand channel sig
muscle mb mode expand channel sig
muscle hold mode expand channel hold
gate g1 kind AND out_mode expand
gate g2 kind AND out_mode expand
connector c1 units 5
wire my.out -> g1.in1
wire mb.out -> g1.in2
wire g1.out -> c1.in
wire c1.out -> g2.in1
wire hold.out -> g2.in2
schedule sig square period 20 duty 0.5
schedule hold const 1
";

    fn core() -> CoreGeometry {
        solve_core(CoreSpec::paper_default(), 1e-12).unwrap()
    }

    #[test]
    fn parses_the_two_gate_chain() {
        let spec = parse(FIG5B).unwrap();
        assert_eq!(spec.instance_count(), 6);
        assert_eq!(spec.wires.len(), 5);
        assert_eq!(spec.schedules.len(), 2);
    }

    #[test]
    fn empty_file_parses_to_empty_spec() {
        let spec = parse("").unwrap();
        assert_eq!(spec, CircuitSpec::default());
        let spec = parse("# only a comment\n\n").unwrap();
        assert_eq!(spec.instance_count(), 0);
    }

    #[test]
    fn unknown_reference_carries_the_line() {
        let text = "gate g1 kind AND\nwire g1.out -> g9.in1\n";
        match parse(text) {
            Err(NetlistError::UnknownReference { line, reference }) => {
                assert_eq!(line, 2);
                assert_eq!(reference, "g9.in1");
            }
            other => panic!("expected UnknownReference, got {other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_line_and_column() {
        match parse("gate g1 kind XOR\n") {
            Err(NetlistError::SyntaxError { line, col, expected }) => {
                assert_eq!(line, 1);
                assert_eq!(col, 14);
                assert!(expected.contains("AND"));
            }
            other => panic!("{other:?}"),
        }
        match parse("muscle m mode sideways channel y\n") {
            Err(NetlistError::SyntaxError { line: 1, col, .. }) => assert_eq!(col, 15),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("wire g1.out g2.in1\n"), Err(NetlistError::SyntaxError { .. })));
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let text = "gate g1 kind AND\ngate g1 kind OR\n";
        match parse(text) {
            Err(NetlistError::DuplicateId { line, id }) => {
                assert_eq!(line, 2);
                assert_eq!(id, "g1");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn print_parse_roundtrip() {
        let spec = parse(FIG5B).unwrap();
        let printed = print(&spec);
        let back = parse(&printed).unwrap();
        assert_eq!(spec, back);
    }

    #[test]
    fn elaborates_fig5b_with_the_expected_slab_count() {
        let spec = parse(FIG5B).unwrap();
        let (asm, sched) = elaborate(&spec, &core()).unwrap();
        // Two gates and a five-unit connector; wired muscles add no slabs.
        assert_eq!(asm.slabs.len(), 2 * 8 + 8 * 5);
        assert!(sched.get("sig").is_some());
        // g1's built-in input muscles were replaced by the declared ones.
        assert!(asm.muscles.iter().any(|m| m.id == "my"));
        assert!(asm.muscles.iter().all(|m| m.channel != "in1"));
    }

    #[test]
    fn single_unwired_muscle_is_a_trivial_fixture() {
        let spec = parse("muscle m1 mode contract channel y\n").unwrap();
        let (asm, _) = elaborate(&spec, &core()).unwrap();
        assert_eq!(asm.slabs.len(), 2);
        assert_eq!(asm.muscles.len(), 1);
        assert_eq!(asm.muscles[0].channel, "y");
    }

    #[test]
    fn tetris_spec_elaborates_with_skeleton_adaptors() {
        let text = "\
muscle my mode expand channel y
muscle mb mode expand channel b
skeleton sk units 4
wire my.out -> sk.dof1
wire mb.out -> sk.dof4
schedule y const 0
schedule b const 1
";
        let spec = parse(text).unwrap();
        let (asm, sched) = elaborate(&spec, &core()).unwrap();
        let dofs = asm
            .probes
            .iter()
            .filter(|p| p.role == crate::model::ProbeRole::SkeletonDof)
            .count();
        assert_eq!(dofs, 8);
        let channels: std::collections::BTreeSet<_> =
            asm.muscles.iter().map(|m| m.channel.as_str()).collect();
        assert!(channels.contains("y") && channels.contains("b"));
        assert!(sched.get("b").is_some());
        // Two adaptor levers were inserted (two slabs each).
        assert_eq!(asm.slabs.len(), 9 + 2 * 2);
    }

    #[test]
    fn schedule_on_unknown_channel_is_unbound() {
        let text = "muscle m1 mode expand channel y\nschedule z const 1\n";
        let spec = parse(text).unwrap();
        assert!(matches!(elaborate(&spec, &core()), Err(NetlistError::UnboundChannel(_))));
    }

    #[test]
    fn elaboration_is_deterministic() {
        let spec = parse(FIG5B).unwrap();
        let (a, _) = elaborate(&spec, &core()).unwrap();
        let (b, _) = elaborate(&spec, &core()).unwrap();
        assert_eq!(a.to_scene_json(), b.to_scene_json());
    }
}
