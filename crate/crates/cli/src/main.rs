use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use symelect::adversary::{ccs_applicable, run_adversary, AdversaryError, AdversaryState};
use symelect::electoral::{is_electoral_with_stats, ElectionVerdict, ExploreBounds};
use symelect::encoding::{check_uniform, default_corpus, separation_demo, Encoding};
use symelect::generate::{random_network, rng};
use symelect::lts::Dialect;
use symelect::network::{automorphisms, hypergraph_of, is_symmetric, network_transitions, Automorphism, Movers, Network};
use symelect::protocols::{ccs_ring, election_network, two_node_election, HypergraphSpec};
use symelect::trace::{replay, write_trace};

macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        write!(std::io::stdout(), $($t)*)?
    }};
}

macro_rules! outln {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        writeln!(std::io::stdout(), $($t)*)?
    }};
}

/// Exit code for input and usage errors; 0, 1 and 2 carry verdicts.
const EXIT_ERROR: u8 = 3;

#[derive(Parser)]
#[command(name = "symelect", version, about = "Symmetric leader election in the pi-calculus")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// pi, pia (asynchronous), ccs or sep (separate choice)
    #[arg(long, default_value = "pi")]
    dialect: Dialect,
    /// Emit JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Clone)]
struct Bounds {
    /// Longest computation explored.
    #[arg(long, default_value_t = 64)]
    depth: usize,
    /// Replication unfoldings allowed along one computation.
    #[arg(long, default_value_t = 8)]
    unfold: usize,
    #[arg(long, default_value_t = 100_000)]
    max_states: usize,
}

impl Bounds {
    fn get(&self) -> ExploreBounds {
        ExploreBounds { max_depth: self.depth, max_rep_unfoldings: self.unfold, max_states: self.max_states }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a network file and print it back, with its hypergraph.
    Parse {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// List the enabled steps, or apply one of them.
    Step {
        file: PathBuf,
        /// Index of the step to apply, as listed.
        #[arg(long)]
        apply: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Explore the internal state space and report its size.
    Explore {
        file: PathBuf,
        #[command(flatten)]
        bounds: Bounds,
        #[command(flatten)]
        common: Common,
    },
    /// Decide whether the network is an electoral system.
    Elect {
        file: PathBuf,
        #[command(flatten)]
        bounds: Bounds,
        #[command(flatten)]
        common: Common,
        /// Write the witness (or nothing) as a trace file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run the symmetry adversary.
    Adversary {
        file: PathBuf,
        /// An automorphism such as `2 1 | x_0>x_1 x_1>x_0`, or `auto`.
        #[arg(long = "auto", default_value = "auto")]
        automorphism: String,
        #[arg(long, default_value_t = 20)]
        rounds: usize,
        #[command(flatten)]
        common: Common,
        /// Where to write the trace; stdout when absent.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Generate a network.
    Gen {
        #[command(subcommand)]
        what: GenCmd,
    },
    /// Check an encoding for uniformity, and optionally run the separation demo.
    EncodeCheck {
        /// identity, drop-continuations, monitor or constant
        #[arg(long, default_value = "drop-continuations")]
        encoding: String,
        /// A command mapping a term on stdin to its image on stdout.
        #[arg(long)]
        external: Option<String>,
        /// Dialect the external command's images must belong to.
        #[arg(long, default_value = "pia")]
        target: Dialect,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 40)]
        corpus: usize,
        #[arg(long)]
        demo: bool,
        #[arg(long, default_value_t = 10)]
        rounds: usize,
        #[arg(long)]
        json: bool,
    },
    /// Replay a trace file, checking every digest and post-state.
    Replay { trace: PathBuf },
}

#[derive(Subcommand)]
enum GenCmd {
    /// The two-node mixed-choice election.
    TwoNode,
    /// The tournament election for a hypergraph spec file.
    Election {
        #[arg(long)]
        spec: PathBuf,
    },
    /// A CCS ring with its rotation.
    CcsRing {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        shift: usize,
    },
    /// A random replication-free network.
    Random {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value = "pi")]
        dialect: Dialect,
    },
}

fn read_text(path: &Path) -> Result<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        return Ok(s);
    }
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load(path: &Path) -> Result<Network> {
    let text = read_text(path)?;
    Network::parse(&text).map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            out!("{text}");
            Ok(())
        }
    }
}

fn describe(m: &Movers) -> String {
    match m {
        Movers::Single(h) => format!("node {}: {}", h.node, h.action),
        Movers::Pair { input, output } => {
            format!("node {} -> node {}: {} / {}", output.node, input.node, output.action, input.action)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_ERROR) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.downcast_ref::<std::io::Error>().is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
}

fn run(cli: Cli) -> Result<u8> {
    match cli.cmd {
        Cmd::Parse { file, common } => cmd_parse(&file, &common),
        Cmd::Step { file, apply, common } => cmd_step(&file, apply, &common),
        Cmd::Explore { file, bounds, common } => {
            let net = load(&file)?;
            let (v, stats) = is_electoral_with_stats(&net, common.dialect, bounds.get())?;
            let bound = match &v {
                ElectionVerdict::Inconclusive { bound } => Some(*bound),
                _ => None,
            };
            if common.json {
                outln!("{}", json!({ "stats": stats, "bound_hit": bound }));
            } else {
                outln!("states {}\ntransitions {}\nterminal {}", stats.states, stats.transitions, stats.terminal);
                if let Some(b) = bound {
                    outln!("bound hit: {b:?}");
                }
            }
            Ok(0)
        }
        Cmd::Elect { file, bounds, common, trace } => cmd_elect(&file, &bounds, &common, trace.as_deref()),
        Cmd::Adversary { file, automorphism, rounds, common, trace } => {
            cmd_adversary(&file, &automorphism, rounds, &common, trace.as_deref())
        }
        Cmd::Gen { what } => {
            let text = match what {
                GenCmd::TwoNode => two_node_election().to_string(),
                GenCmd::Election { spec } => {
                    let spec: HypergraphSpec = read_text(&spec)?.parse()?;
                    election_network(&spec)?.to_string()
                }
                GenCmd::CcsRing { k, shift } => {
                    let (net, sigma) = ccs_ring(k, shift)?;
                    format!("// automorphism: {sigma}\n{net}")
                }
                GenCmd::Random { seed, k, dialect } => random_network(&mut rng(seed), k, dialect).to_string(),
            };
            out!("{text}");
            Ok(0)
        }
        Cmd::EncodeCheck { encoding, external, target, seed, corpus, demo, rounds, json } => {
            let e = match external {
                Some(cmd) => Encoding::external(cmd.split_whitespace().map(String::from).collect(), target),
                None => Encoding::by_name(&encoding).ok_or_else(|| anyhow!("unknown encoding `{encoding}`"))?,
            };
            let (pairs, renamings) = default_corpus(seed, corpus);
            let report = check_uniform(&e, &pairs, &renamings)?;
            if json {
                // the demo report embeds the uniformity report
                if !(demo && report.uniform) {
                    outln!("{}", serde_json::to_string(&report)?);
                }
            } else {
                outln!("encoding {}", report.encoding);
                outln!("corpus {} pairs, {} renamed terms", report.pairs_checked, report.renamings_checked);
                outln!("parallel homomorphic {}", report.parallel_homomorphic);
                if let Some((p, q)) = &report.parallel_counterexample {
                    outln!("  counterexample P = {p}\n                 Q = {q}");
                }
                outln!("renaming equivariant {}", report.renaming_equivariant);
                if let Some((s, p)) = &report.renaming_counterexample {
                    outln!("  counterexample sigma = {s}\n                 P = {p}");
                }
                outln!("uniform {}", report.uniform);
            }
            if !report.uniform {
                return Ok(1);
            }
            if demo {
                let r = separation_demo(&e, rounds, ExploreBounds::default())?;
                if json {
                    outln!("{}", serde_json::to_string(&r)?);
                } else {
                    outln!("source observables {:?}", r.source_observables);
                    outln!("image observables {:?}", r.image_observables);
                    let stuck = if r.adversary_stuck { " (stuck)" } else { "" };
                    outln!("adversary rounds {}/{}{stuck}", r.adversary_rounds, r.rounds_requested);
                    let quiet = r.adversary_announcements.values().all(Vec::is_empty);
                    outln!("adversary announcements {}", if quiet { "none" } else { "some" });
                }
            }
            Ok(0)
        }
        Cmd::Replay { trace } => {
            let text = read_text(&trace)?;
            match replay(&text) {
                Ok(r) => {
                    outln!("ok: {} steps", r.steps);
                    Ok(0)
                }
                Err(e) => {
                    outln!("mismatch at record {}: {e}", e.record());
                    Ok(1)
                }
            }
        }
    }
}

fn cmd_parse(file: &Path, common: &Common) -> Result<u8> {
    let net = load(file)?;
    let h = hypergraph_of(&net);
    if common.json {
        let arcs: serde_json::Map<String, serde_json::Value> =
            h.arcs.iter().map(|(a, t)| (a.to_string(), json!(t))).collect();
        outln!(
            "{}",
            json!({
                "network": net,
                "arcs": arcs,
                "connected": h.is_connected(),
                "dialect_ok": net.dialect_violation(common.dialect).is_none(),
                "state_hash": net.state_hash(),
            })
        );
    } else {
        out!("{net}");
        for (a, t) in &h.arcs {
            let t: Vec<String> = t.iter().map(|n| n.to_string()).collect();
            outln!("// arc {a}: {}", t.join(" "));
        }
        if let Some(why) = net.dialect_violation(common.dialect) {
            outln!("// not in {}: {why}", common.dialect);
        }
    }
    Ok(0)
}

fn cmd_step(file: &Path, apply: Option<usize>, common: &Common) -> Result<u8> {
    let text = read_text(file)?;
    if text.lines().all(|l| l.split("//").next().unwrap().trim().is_empty()) {
        outln!("no steps");
        return Ok(0);
    }
    let net = Network::parse(&text).map_err(|e| anyhow!("{}: {e}", file.display()))?;
    let steps = network_transitions(&net, common.dialect)?;
    match apply {
        None => {
            if steps.is_empty() {
                outln!("no steps");
            }
            if common.json {
                let list: Vec<_> = steps
                    .iter()
                    .map(|s| json!({ "label": s.label, "movers": s.movers, "post": s.post.to_string() }))
                    .collect();
                outln!("{}", serde_json::Value::Array(list));
            } else {
                for (i, s) in steps.iter().enumerate() {
                    outln!("[{i}] {}  ({})", s.label, describe(&s.movers));
                }
            }
        }
        Some(n) => {
            let s = steps
                .get(n)
                .ok_or_else(|| anyhow!("no step {n}: {} steps are enabled", steps.len()))?;
            out!("{}", s.post);
        }
    }
    Ok(0)
}

fn cmd_elect(file: &Path, bounds: &Bounds, common: &Common, trace: Option<&Path>) -> Result<u8> {
    let net = load(file)?;
    let (v, stats) = is_electoral_with_stats(&net, common.dialect, bounds.get())?;
    let summary = match &v {
        ElectionVerdict::Electoral { leaders } => json!({
            "verdict": "electoral",
            "leaders": v.leader_set(),
            "runs": leaders.len(),
        }),
        ElectionVerdict::NotElectoral { witness, reason, cycle_from } => json!({
            "verdict": "not-electoral",
            "reason": reason.to_string(),
            "witness_steps": witness.steps.len(),
            "cycle_from": cycle_from,
        }),
        ElectionVerdict::Inconclusive { bound } => json!({ "verdict": "inconclusive", "bound": bound }),
    };
    if let Some(path) = trace {
        let c = match &v {
            ElectionVerdict::NotElectoral { witness, .. } => witness.clone(),
            _ => symelect::network::Computation::new(net.clone()),
        };
        emit(Some(path), &write_trace(&c, common.dialect, None, Some(summary.clone())))?;
    }
    if common.json {
        outln!("{}", json!({ "result": summary, "stats": stats }));
    } else {
        match &v {
            ElectionVerdict::Electoral { .. } => {
                let ls: Vec<String> = v.leader_set().iter().map(|n| n.to_string()).collect();
                outln!("electoral: leaders {{{}}}", ls.join(", "));
            }
            ElectionVerdict::NotElectoral { witness, reason, .. } => {
                outln!("not electoral: {reason}");
                for (i, s) in witness.steps.iter().enumerate() {
                    outln!("  {i}: {}  ({})", s.label, describe(&s.movers));
                }
            }
            ElectionVerdict::Inconclusive { bound } => outln!("inconclusive: {bound:?} bound reached"),
        }
        outln!("states {} transitions {}", stats.states, stats.transitions);
    }
    Ok(v.exit_code() as u8)
}

/// First symmetry of `net` the adversary can use, single orbits first.
fn pick_automorphism(net: &Network, d: Dialect) -> Result<Automorphism> {
    let mut found: Vec<Automorphism> = automorphisms(&hypergraph_of(net))?
        .into_iter()
        .filter(|s| s.node_map.iter().enumerate().any(|(i, &n)| n != i + 1))
        .filter(|s| s.is_well_balanced() && is_symmetric(net, s))
        .filter(|s| d != Dialect::Ccs || ccs_applicable(net, s))
        .collect();
    found.sort_by_key(|s| !s.is_single_orbit());
    found.into_iter().next().ok_or_else(|| anyhow!("the network has no usable non-trivial symmetry"))
}

fn cmd_adversary(file: &Path, spec: &str, rounds: usize, common: &Common, trace: Option<&Path>) -> Result<u8> {
    let net = load(file)?;
    let d = common.dialect;
    let sigma = if spec == "auto" { pick_automorphism(&net, d)? } else { spec.parse()? };
    let (state, stuck, code): (AdversaryState, bool, u8) = match run_adversary(&net, &sigma, rounds, d) {
        Ok(s) => (s, false, 0),
        Err(AdversaryError::Stuck { state }) => (*state, true, 1),
        Err(e @ AdversaryError::PreconditionFailed(_)) => bail!(e),
        Err(e) => {
            eprintln!("{e}");
            return Ok(1);
        }
    };
    let certs: Vec<serde_json::Value> = state
        .certificates
        .iter()
        .map(|c| json!({ "round": c.round, "sigma": c.sigma, "check": "ok", "detail": c }))
        .collect();
    let footer = json!({ "rounds": state.round, "stuck": stuck, "certificates": certs });
    let text = write_trace(&state.trace, d, Some(&sigma), Some(footer));
    if trace.is_some() || !common.json {
        emit(trace, &text)?;
    }
    if trace.is_some() || common.json {
        let msg = json!({
            "rounds": state.round,
            "requested": rounds,
            "stuck": stuck,
            "sigma": sigma.to_string(),
            "announcements": state.trace.announcements().values().map(Vec::len).sum::<usize>(),
        });
        if common.json {
            outln!("{msg}");
        } else {
            eprintln!("{} rounds{}", state.round, if stuck { " (stuck)" } else { "" });
        }
    }
    Ok(code)
}
