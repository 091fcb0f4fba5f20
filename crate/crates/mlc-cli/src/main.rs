//! `mlc`: solve gate geometry, build and simulate mechanical logic circuits,
//! and run the standard analyses. All lengths are in sigma units, times in
//! t0 units, energies in k0*sigma^2 units.

use clap::{Args, Parser, Subcommand, ValueEnum};
use mlc_core::analysis;
use mlc_core::dynamics::{Engine, SimParams};
use mlc_core::geometry::{self, CoreSpec, HingeKind, LeverSpec};
use mlc_core::model::{build_gate, GateKind, SignalMode, TetrisCircuit};
use mlc_core::netlist;
use std::path::PathBuf;
use std::process::ExitCode;

const UNITS_NOTE: &str = "\
units: lengths in sigma (muscle rest length); times in t0 = gamma/(1e-3 k0);
       energies in k0*sigma^2; dt in gamma/k0 (1e-3 t0); forces in k0*sigma.
";

#[derive(Parser)]
#[command(name = "mlc", version, about = "Mechanical logic circuit toolkit")]
struct Cli {
    /// Print the unit conventions and exit.
    #[arg(long = "units", global = true)]
    units: bool,
    /// Random seed for stochastic runs.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Output file (stdout when omitted).
    #[arg(short, long, global = true)]
    out: Option<PathBuf>,
    /// Emit JSON instead of the default format.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Clone, Copy)]
struct SimArgs {
    /// Integration step in gamma/k0 units.
    #[arg(long, default_value_t = 0.05)]
    dt: f64,
    /// Thermal energy in k0*sigma^2 units.
    #[arg(long, default_value_t = 1e-5)]
    kbt: f64,
    /// Sampling stride in steps.
    #[arg(long, default_value_t = 200)]
    record_every: usize,
}

impl SimArgs {
    fn params(&self, seed: u64) -> SimParams {
        SimParams {
            dt: self.dt,
            kbt: self.kbt,
            seed,
            record_every: self.record_every,
            ..SimParams::default()
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum HingeArg {
    Open,
    Crossed,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Expand,
    Contract,
}

impl From<ModeArg> for SignalMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Expand => SignalMode::Expand,
            ModeArg::Contract => SignalMode::Contract,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum GateArg {
    And,
    Or,
    Nand,
    Nor,
}

impl From<GateArg> for GateKind {
    fn from(g: GateArg) -> Self {
        match g {
            GateArg::And => GateKind::And,
            GateArg::Or => GateKind::Or,
            GateArg::Nand => GateKind::Nand,
            GateArg::Nor => GateKind::Nor,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve the logic-core design equations.
    SolveCore {
        #[arg(long = "delta-in")]
        delta_in: f64,
        #[arg(long)]
        h: f64,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Solve the scissor-lever design equations.
    SolveLever {
        #[arg(long = "l-in")]
        l_in: f64,
        #[arg(long = "l-out")]
        l_out: f64,
        #[arg(long = "dl-in", allow_hyphen_values = true)]
        dl_in: f64,
        #[arg(long = "dl-out", allow_hyphen_values = true)]
        dl_out: f64,
        #[arg(long)]
        l: f64,
        #[arg(long, value_enum)]
        hinge: HingeArg,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Sweep the core design over a (delta_in, h) grid; emits CSV.
    SweepCore {
        /// delta_in range as start:stop:step.
        #[arg(long = "delta-ins", default_value = "0:0.8:0.02")]
        delta_ins: String,
        /// Comma-separated h values.
        #[arg(long = "hs", default_value = "1.6,2.0,2.4")]
        hs: String,
    },
    /// Parse, elaborate and run a circuit; emits the trajectory CSV.
    Simulate {
        #[arg(short, long)]
        circuit: PathBuf,
        /// Duration in t0 units.
        #[arg(long, default_value_t = 10.0)]
        duration: f64,
        #[command(flatten)]
        sim: SimArgs,
        /// Also write the elaborated scene JSON here.
        #[arg(long)]
        scene_out: Option<PathBuf>,
        /// Also write per-sample body states as JSON lines here.
        #[arg(long)]
        states_out: Option<PathBuf>,
    },
    /// Settle a gate at every input combination and classify the output.
    TruthTable {
        #[arg(long, value_enum)]
        gate: GateArg,
        #[arg(long, value_enum)]
        muscle_mode: Option<ModeArg>,
        #[arg(long, value_enum)]
        output_mode: Option<ModeArg>,
        /// Settle time per row in t0 units.
        #[arg(long, default_value_t = 10.0)]
        settle: f64,
        #[arg(long, default_value_t = 3)]
        trials: usize,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// RMSD of the two-gate chain response across actuation frequencies.
    FreqResponse {
        /// Connector units between the gates.
        #[arg(long, default_value_t = 5)]
        units: usize,
        /// Comma-separated frequencies in 1/t0.
        #[arg(long, default_value = "5,0.5,0.05")]
        freqs: String,
        /// Whole actuation cycles to simulate per frequency.
        #[arg(long, default_value_t = 2)]
        cycles: usize,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Signal length statistics along a connector chain for each tolerance.
    Attenuation {
        /// Comma-separated chain lengths in units.
        #[arg(long = "units-list", default_value = "8")]
        units_list: String,
        /// Comma-separated joint tolerances in sigma.
        #[arg(long, default_value = "0,0.02,0.05")]
        tolerances: String,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// Settle time per trial in t0 units.
        #[arg(long, default_value_t = 10.0)]
        settle: f64,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Fold the robot for each (y, b) input and classify the shapes.
    Tetris {
        /// Settle time in t0 units.
        #[arg(long, default_value_t = 200.0)]
        settle: f64,
        /// Restrict to one input as two bits, e.g. 01 for (y,b) = (0,1).
        #[arg(long)]
        input: Option<String>,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Thermal energy over hinge strength at the three fabrication scales.
    Estimates,
}

fn parse_range(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected start:stop:step, got {s}"));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.parse().map_err(|_| format!("bad number in range {s}")))
        .collect::<Result<_, _>>()?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0) || stop < start {
        return Err(format!("bad range {s}"));
    }
    let n = ((stop - start) / step).round() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|p| p.trim().parse().map_err(|_| format!("bad number {p}"))).collect()
}

fn main() -> ExitCode {
    if let Ok(n) = std::env::var("MLC_THREADS") {
        if let Ok(n) = n.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
    let cli = Cli::parse();
    if cli.units {
        print!("{UNITS_NOTE}");
        return ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        eprintln!("error: a subcommand is required (see --help)");
        return ExitCode::from(2);
    };
    match dispatch(command, cli.seed, cli.json) {
        Ok(Output { main, extra }) => {
            for (path, content) in extra {
                if let Err(e) = std::fs::write(&path, content) {
                    eprintln!("IoError: {}: {e}", path.display());
                    return ExitCode::from(1);
                }
            }
            match cli.out {
                Some(path) => {
                    if let Err(e) = std::fs::write(&path, main) {
                        eprintln!("IoError: {}: {e}", path.display());
                        return ExitCode::from(1);
                    }
                }
                None => print!("{main}"),
            }
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
    }
}

struct Output {
    main: String,
    extra: Vec<(PathBuf, String)>,
}

impl Output {
    fn new(main: String) -> Self {
        Output { main, extra: Vec::new() }
    }
}

enum Failure {
    /// Bad arguments or unreadable inputs; exit 2, no outputs written.
    Usage(String),
    /// A domain error from the solvers, builders or simulations; exit 1.
    Domain(String),
}

impl From<geometry::GeometryError> for Failure {
    fn from(e: geometry::GeometryError) -> Self {
        Failure::Domain(e.to_string())
    }
}

impl From<analysis::AnalysisError> for Failure {
    fn from(e: analysis::AnalysisError) -> Self {
        Failure::Domain(e.to_string())
    }
}

impl From<mlc_core::model::ModelError> for Failure {
    fn from(e: mlc_core::model::ModelError) -> Self {
        Failure::Domain(e.to_string())
    }
}

impl From<mlc_core::dynamics::DynamicsError> for Failure {
    fn from(e: mlc_core::dynamics::DynamicsError) -> Self {
        Failure::Domain(e.to_string())
    }
}

impl From<netlist::NetlistError> for Failure {
    fn from(e: netlist::NetlistError) -> Self {
        Failure::Domain(e.to_string())
    }
}

fn default_core() -> Result<mlc_core::geometry::CoreGeometry, Failure> {
    Ok(geometry::solve_core(CoreSpec::paper_default(), 1e-12)?)
}

fn dispatch(command: Command, seed: u64, json: bool) -> Result<Output, Failure> {
    match command {
        Command::SolveCore { delta_in, h, tol } => {
            let spec = CoreSpec::new(delta_in, h)?;
            let g = geometry::solve_core(spec, tol)?;
            Ok(Output::new(serde_json::to_string_pretty(&g).unwrap() + "\n"))
        }
        Command::SolveLever { l_in, l_out, dl_in, dl_out, l, hinge, tol } => {
            let hinge = match hinge {
                HingeArg::Open => HingeKind::Open,
                HingeArg::Crossed => HingeKind::Crossed,
            };
            let spec = LeverSpec::new(l_in, l_out, dl_in, dl_out, l, hinge)?;
            let g = geometry::solve_lever(spec, tol)?;
            Ok(Output::new(serde_json::to_string_pretty(&g).unwrap() + "\n"))
        }
        Command::SweepCore { delta_ins, hs } => {
            let dins = parse_range(&delta_ins).map_err(Failure::Usage)?;
            let hvals = parse_list(&hs).map_err(Failure::Usage)?;
            let rows = geometry::sweep_core(&dins, &hvals)?;
            if json {
                Ok(Output::new(serde_json::to_string_pretty(&rows).unwrap() + "\n"))
            } else {
                Ok(Output::new(geometry::sweep_to_csv(&rows)))
            }
        }
        Command::Simulate { circuit, duration, sim, scene_out, states_out } => {
            let text = std::fs::read_to_string(&circuit)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", circuit.display())))?;
            let spec = netlist::parse(&text)?;
            let core = default_core()?;
            let (asm, sched) = netlist::elaborate(&spec, &core)?;
            let mut extra = Vec::new();
            if let Some(path) = scene_out {
                extra.push((path, asm.to_scene_json()));
            }
            let mut engine = Engine::new(&asm, sim.params(seed), &sched)?;
            let traj = engine.run(duration, states_out.is_some())?;
            if let Some(path) = states_out {
                extra.push((path, traj.states_jsonl().unwrap_or_default()));
            }
            let main = if json {
                serde_json::to_string(&traj).unwrap() + "\n"
            } else {
                traj.to_csv()
            };
            Ok(Output { main, extra })
        }
        Command::TruthTable { gate, muscle_mode, output_mode, settle, trials, sim } => {
            let kind: GateKind = gate.into();
            let muscle = muscle_mode.map(SignalMode::from).unwrap_or(kind.default_muscle_mode());
            let output = output_mode.map(SignalMode::from).unwrap_or(kind.default_output_mode());
            let core = default_core()?;
            let asm = build_gate(kind, muscle, output, &core)?;
            let rows = analysis::truth_table(&asm, &["in1", "in2"], settle, trials, sim.params(seed))?;
            if json {
                Ok(Output::new(serde_json::to_string_pretty(&rows).unwrap() + "\n"))
            } else {
                Ok(Output::new(analysis::truth_table_csv(&rows, &["in1", "in2"])))
            }
        }
        Command::FreqResponse { units, freqs, cycles, sim } => {
            let freqs = parse_list(&freqs).map_err(Failure::Usage)?;
            let core = default_core()?;
            let points = analysis::frequency_response(units, &freqs, cycles, sim.params(seed), &core)?;
            if json {
                Ok(Output::new(serde_json::to_string_pretty(&points).unwrap() + "\n"))
            } else {
                Ok(Output::new(analysis::freq_response_csv(&points)))
            }
        }
        Command::Attenuation { units_list, tolerances, trials, settle, sim } => {
            let unit_counts = parse_list(&units_list).map_err(Failure::Usage)?;
            let tols = parse_list(&tolerances).map_err(Failure::Usage)?;
            let core = default_core()?;
            let mut all = Vec::new();
            for &u in &unit_counts {
                for &t in &tols {
                    all.push(analysis::signal_attenuation(
                        u as usize,
                        t,
                        trials,
                        settle,
                        sim.params(seed),
                        &core,
                    )?);
                }
            }
            if json {
                Ok(Output::new(serde_json::to_string_pretty(&all).unwrap() + "\n"))
            } else {
                Ok(Output::new(analysis::attenuation_csv(&all)))
            }
        }
        Command::Tetris { settle, input, sim } => {
            let core = default_core()?;
            let outcomes =
                analysis::tetris_shapes(&TetrisCircuit::default(), &core, settle, sim.params(seed))?;
            let outcomes: Vec<_> = match input {
                Some(bits) => {
                    let b: Vec<char> = bits.chars().collect();
                    if b.len() != 2 || b.iter().any(|c| *c != '0' && *c != '1') {
                        return Err(Failure::Usage(format!("--input wants two bits, got {bits}")));
                    }
                    let want = (u8::from(b[0] == '1'), u8::from(b[1] == '1'));
                    outcomes.into_iter().filter(|o| o.inputs == want).collect()
                }
                None => outcomes,
            };
            if json {
                Ok(Output::new(serde_json::to_string_pretty(&outcomes).unwrap() + "\n"))
            } else {
                let mut csv = String::from("y,b,dof_states,signature,label\n");
                for o in &outcomes {
                    let bits: String = o.dof_states.iter().map(|d| char::from(b'0' + d)).collect();
                    csv.push_str(&format!(
                        "{},{},{},{},{}\n",
                        o.inputs.0, o.inputs.1, bits, o.signature, o.label
                    ));
                }
                Ok(Output::new(csv))
            }
        }
        Command::Estimates => {
            if json {
                Ok(Output::new(
                    serde_json::to_string_pretty(&analysis::scale_estimates()).unwrap() + "\n",
                ))
            } else {
                Ok(Output::new(analysis::estimates_csv()))
            }
        }
    }
}
