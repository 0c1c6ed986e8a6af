//! Encodings between dialects: uniformity audits, observables on `o`, and
//! the separation demonstration.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::process::{Command, Stdio};

use serde::Serialize;
use thiserror::Error;

use crate::adversary::{run_adversary, AdversaryError};
use crate::electoral::{is_electoral, ExploreBounds};
use crate::generate::{random_process, rng, GenConfig};
use crate::lts::{dialect_violation, Dialect, LtsError};
use crate::name::Name;
use crate::network::{steps_in_scope, Automorphism, Network, StepScope};
use crate::protocols::two_node_election;
use crate::syntax::{alpha_equiv, apply_renaming, parse, Prefix, Process, Renaming};

#[derive(Debug, Error)]
pub enum EncodingError {
    #[error("encoding `{encoding}` leaves the {dialect} fragment: {reason}")]
    TargetDialect { encoding: String, dialect: Dialect, reason: String },
    #[error("external encoding failed: {0}")]
    External(String),
    #[error("encoding `{0}` is not uniform")]
    NotUniform(String, Box<UniformityReport>),
    #[error("the image of a symmetric network is not symmetric: {0}")]
    SymmetryLost(String),
    #[error("the source network is not electoral")]
    SourceNotElectoral,
    #[error(transparent)]
    Lts(#[from] LtsError),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Builtin {
    Identity,
    /// `x!y.P` becomes `x!y | [P]`, sums become parallel compositions and
    /// `tau.P` becomes `[P]`.
    DropContinuations,
    /// Like drop-continuations, with a fresh monitor beside every
    /// parallel composition.
    Monitor,
    /// Everything becomes `0`.
    Constant,
}

#[derive(Clone, Debug)]
enum Transform {
    Builtin(Builtin),
    /// A command reading a term on stdin and writing its image on stdout.
    External(Vec<String>),
}

#[derive(Clone, Debug)]
pub struct Encoding {
    pub name: String,
    pub target: Dialect,
    transform: Transform,
}

impl Encoding {
    pub fn builtin(b: Builtin) -> Self {
        let (name, target) = match b {
            Builtin::Identity => ("identity", Dialect::Pi),
            Builtin::DropContinuations => ("drop-continuations", Dialect::PiAsync),
            Builtin::Monitor => ("monitor", Dialect::PiAsync),
            Builtin::Constant => ("constant", Dialect::PiAsync),
        };
        Encoding { name: name.into(), target, transform: Transform::Builtin(b) }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        let b = match name {
            "identity" => Builtin::Identity,
            "drop-continuations" | "drop" => Builtin::DropContinuations,
            "monitor" => Builtin::Monitor,
            "constant" | "constant-0" => Builtin::Constant,
            _ => return None,
        };
        Some(Encoding::builtin(b))
    }

    pub fn external(command: Vec<String>, target: Dialect) -> Self {
        Encoding { name: command.join(" "), target, transform: Transform::External(command) }
    }

    /// The image of `p`, checked against the target dialect.
    pub fn apply(&self, p: &Process) -> Result<Process, EncodingError> {
        let image = match &self.transform {
            Transform::Builtin(b) => builtin(*b, p),
            Transform::External(cmd) => external(cmd, p)?,
        };
        if let Some(reason) = dialect_violation(&image, self.target) {
            return Err(EncodingError::TargetDialect { encoding: self.name.clone(), dialect: self.target, reason });
        }
        Ok(image)
    }

    pub fn apply_network(&self, net: &Network) -> Result<Network, EncodingError> {
        let components = net.components.iter().map(|p| self.apply(p)).collect::<Result<_, _>>()?;
        Ok(Network { components, ..net.clone() })
    }
}

fn builtin(b: Builtin, p: &Process) -> Process {
    match b {
        Builtin::Identity => p.clone(),
        Builtin::Constant => Process::nil(),
        Builtin::DropContinuations => drop(p, false),
        Builtin::Monitor => drop(p, true),
    }
}

fn drop(p: &Process, monitor: bool) -> Process {
    match p {
        Process::Sum(bs) => {
            let parts: Vec<Process> = bs
                .iter()
                .map(|(pre, c)| {
                    let c = drop(c, monitor);
                    match pre {
                        Prefix::Input { .. } => Process::prefixed(pre.clone(), c),
                        Prefix::Output { channel, datum } => Process::par(Process::out(channel.clone(), datum.clone()), c),
                        Prefix::Tau => c,
                    }
                })
                .collect();
            if parts.len() == 1 {
                parts.into_iter().next().unwrap()
            } else {
                Process::par_all(parts)
            }
        }
        Process::Out(..) => p.clone(),
        Process::New(x, b) => Process::new_name(x.clone(), drop(b, monitor)),
        Process::Par(l, r) => {
            let (l, r) = (drop(l, monitor), drop(r, monitor));
            if monitor {
                let m = Name::fresh(&Name::new("m"));
                Process::new_name(m.clone(), Process::par(l, Process::par(Process::out(m.clone(), m), r)))
            } else {
                Process::par(l, r)
            }
        }
        Process::Rep(b) => Process::rep(drop(b, monitor)),
    }
}

fn external(cmd: &[String], p: &Process) -> Result<Process, EncodingError> {
    let (prog, args) = cmd.split_first().ok_or_else(|| EncodingError::External("empty command".into()))?;
    let mut child = Command::new(prog)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| EncodingError::External(format!("{prog}: {e}")))?;
    child
        .stdin
        .take()
        .unwrap()
        .write_all(format!("{p}\n").as_bytes())
        .map_err(|e| EncodingError::External(e.to_string()))?;
    let out = child.wait_with_output().map_err(|e| EncodingError::External(e.to_string()))?;
    if !out.status.success() {
        return Err(EncodingError::External(format!(
            "{prog} exited with {}: {}",
            out.status,
            String::from_utf8_lossy(&out.stderr).trim()
        )));
    }
    let text = String::from_utf8(out.stdout).map_err(|e| EncodingError::External(e.to_string()))?;
    parse(text.trim()).map_err(|e| EncodingError::External(format!("unparsable image: {e}")))
}

/// Result of checking the two uniformity equations on a corpus. Equality
/// is α-equivalence.
#[derive(Clone, Debug, Serialize)]
pub struct UniformityReport {
    pub encoding: String,
    pub pairs_checked: usize,
    pub renamings_checked: usize,
    pub parallel_homomorphic: bool,
    /// `(P, Q)` with `[P | Q]` different from `[P] | [Q]`.
    pub parallel_counterexample: Option<(String, String)>,
    pub renaming_equivariant: bool,
    /// `(σ, P)` with `[σ(P)]` different from `σ([P])`.
    pub renaming_counterexample: Option<(String, String)>,
    pub uniform: bool,
}

fn show_renaming(r: &Renaming) -> String {
    let pairs: Vec<String> = r.entries().map(|(a, b)| format!("{a}>{b}")).collect();
    pairs.join(" ")
}

pub fn check_uniform(
    e: &Encoding,
    corpus: &[(Process, Process)],
    renamings: &[Renaming],
) -> Result<UniformityReport, EncodingError> {
    let mut report = UniformityReport {
        encoding: e.name.clone(),
        pairs_checked: 0,
        renamings_checked: 0,
        parallel_homomorphic: true,
        parallel_counterexample: None,
        renaming_equivariant: true,
        renaming_counterexample: None,
        uniform: true,
    };
    for (p, q) in corpus {
        let whole = e.apply(&Process::par(p.clone(), q.clone()))?;
        let parts = Process::par(e.apply(p)?, e.apply(q)?);
        report.pairs_checked += 1;
        if !alpha_equiv(&whole, &parts) && report.parallel_counterexample.is_none() {
            report.parallel_homomorphic = false;
            report.parallel_counterexample = Some((p.to_string(), q.to_string()));
        }
    }
    for sigma in renamings {
        for p in corpus.iter().flat_map(|(p, q)| [p, q]) {
            let Ok(renamed) = apply_renaming(sigma, p) else { continue };
            let Ok(image_renamed) = apply_renaming(sigma, &e.apply(p)?) else { continue };
            report.renamings_checked += 1;
            if !alpha_equiv(&e.apply(&renamed)?, &image_renamed) && report.renaming_counterexample.is_none() {
                report.renaming_equivariant = false;
                report.renaming_counterexample = Some((show_renaming(sigma), p.to_string()));
            }
        }
    }
    report.uniform = report.parallel_homomorphic && report.renaming_equivariant;
    Ok(report)
}

/// A seeded corpus of π terms and a few injective renamings over its names.
pub fn default_corpus(seed: u64, size: usize) -> (Vec<(Process, Process)>, Vec<Renaming>) {
    let mut r = rng(seed);
    let cfg = GenConfig::new(Dialect::Pi);
    let mut corpus: Vec<(Process, Process)> =
        two_node_election().components.iter().map(|p| (p.clone(), p.clone())).collect();
    while corpus.len() < size {
        corpus.push((random_process(&mut r, &cfg), random_process(&mut r, &cfg)));
    }
    let n = Name::new;
    let renamings = vec![
        Renaming::from_pairs([(n("a"), n("b")), (n("b"), n("a"))]),
        Renaming::from_pairs([(n("a"), n("b")), (n("b"), n("c")), (n("c"), n("a"))]),
        Renaming::from_pairs([(n("x_0"), n("x_1")), (n("x_1"), n("x_0")), (n("0"), n("1")), (n("1"), n("0"))]),
        Renaming::from_pairs([(n("c"), n("d"))]),
    ];
    (corpus, renamings)
}

/// The sequences of numerals announced on `o` along every maximal
/// computation within `b.max_depth` internal steps.
pub fn observables_on_o(net: &Network, d: Dialect, b: ExploreBounds) -> Result<BTreeSet<Vec<Name>>, LtsError> {
    let mut memo = BTreeMap::new();
    observe(net, d, b.max_depth, &mut memo)
}

type Memo = BTreeMap<(String, usize), BTreeSet<Vec<Name>>>;

fn observe(net: &Network, d: Dialect, depth: usize, memo: &mut Memo) -> Result<BTreeSet<Vec<Name>>, LtsError> {
    let key = (net.state_key(), depth);
    if let Some(hit) = memo.get(&key) {
        return Ok(hit.clone());
    }
    let steps = if depth == 0 { Vec::new() } else { steps_in_scope(net, d, StepScope::Internal)? };
    let mut out = BTreeSet::new();
    if steps.is_empty() {
        out.insert(Vec::new());
    }
    for s in steps {
        let head = s.label.announcement().cloned();
        for tail in observe(&s.post, d, depth - 1, memo)? {
            let mut seq: Vec<Name> = head.iter().cloned().collect();
            seq.extend(tail);
            out.insert(seq);
        }
    }
    memo.insert(key, out.clone());
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct SeparationReport {
    pub encoding: String,
    pub source: String,
    pub source_leaders: Vec<Name>,
    pub source_observables: BTreeSet<Vec<Name>>,
    pub image: String,
    pub image_observables: BTreeSet<Vec<Name>>,
    pub uniformity: UniformityReport,
    pub rounds_requested: usize,
    pub adversary_rounds: usize,
    /// Whether the adversary ran out of moves before the requested rounds.
    pub adversary_stuck: bool,
    pub adversary_announcements: BTreeMap<usize, Vec<Name>>,
    pub observables_differ: bool,
}

/// Runs the separation argument on the two-node election: the source
/// network elects, the image of a uniform encoding into the asynchronous
/// fragment stays symmetric, and the adversary keeps it from announcing.
pub fn separation_demo(e: &Encoding, rounds: usize, bounds: ExploreBounds) -> Result<SeparationReport, EncodingError> {
    let source = two_node_election();
    let verdict = is_electoral(&source, Dialect::Pi, bounds)?;
    if !verdict.is_electoral() {
        return Err(EncodingError::SourceNotElectoral);
    }
    let source_observables = observables_on_o(&source, Dialect::Pi, bounds)?;
    let (corpus, renamings) = default_corpus(0, 40);
    let uniformity = check_uniform(e, &corpus, &renamings)?;
    if !uniformity.uniform {
        return Err(EncodingError::NotUniform(e.name.clone(), Box::new(uniformity)));
    }
    let image = e.apply_network(&source)?;
    if let Some(reason) = image.dialect_violation(Dialect::PiAsync) {
        return Err(EncodingError::TargetDialect { encoding: e.name.clone(), dialect: Dialect::PiAsync, reason });
    }
    let swap: Automorphism = "2 1 | x_0>x_1 x_1>x_0".parse().expect("fixed text");
    if let Some(why) = crate::network::symmetry_failure(&image, &swap) {
        return Err(EncodingError::SymmetryLost(why));
    }
    let (state, stuck) = match run_adversary(&image, &swap, rounds, Dialect::PiAsync) {
        Ok(s) => (s, false),
        Err(AdversaryError::Stuck { state }) => (*state, true),
        Err(other) => return Err(other.into()),
    };
    let image_observables = observables_on_o(&image, Dialect::PiAsync, bounds)?;
    Ok(SeparationReport {
        encoding: e.name.clone(),
        source: source.to_string(),
        source_leaders: verdict.leader_set().into_iter().collect(),
        observables_differ: source_observables != image_observables,
        source_observables,
        image: image.to_string(),
        image_observables,
        uniformity,
        rounds_requested: rounds,
        adversary_rounds: state.round,
        adversary_stuck: stuck,
        adversary_announcements: state.trace.announcements(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(s: &[&[&str]]) -> BTreeSet<Vec<Name>> {
        s.iter().map(|v| v.iter().map(|n| Name::new(n)).collect()).collect()
    }

    #[test]
    fn observables() {
        let b = ExploreBounds::default();
        assert_eq!(observables_on_o(&Network::parse("o!1").unwrap(), Dialect::Pi, b).unwrap(), obs(&[&["1"]]));
        assert_eq!(observables_on_o(&Network::parse("a?(x).o!1").unwrap(), Dialect::Pi, b).unwrap(), obs(&[&[]]));
        assert_eq!(observables_on_o(&two_node_election(), Dialect::Pi, b).unwrap(), obs(&[&["0", "0"], &["1", "1"]]));
    }

    #[test]
    fn uniformity_of_builtins() {
        let (corpus, renamings) = default_corpus(1, 30);
        let check = |b| check_uniform(&Encoding::builtin(b), &corpus, &renamings);
        let id = check(Builtin::Identity).unwrap();
        assert!(id.uniform && id.renamings_checked > 0);
        assert!(check(Builtin::DropContinuations).unwrap().uniform);
        let mon = check(Builtin::Monitor).unwrap();
        assert!(!mon.parallel_homomorphic && mon.parallel_counterexample.is_some());
        assert!(!check(Builtin::Constant).unwrap().parallel_homomorphic);
    }

    #[test]
    fn identity_leaves_the_async_fragment() {
        let e = Encoding { target: Dialect::PiAsync, ..Encoding::builtin(Builtin::Identity) };
        assert!(matches!(e.apply(&two_node_election().components[0]), Err(EncodingError::TargetDialect { .. })));
        assert!(matches!(
            separation_demo(&Encoding::builtin(Builtin::Identity), 2, ExploreBounds::default()),
            Err(EncodingError::TargetDialect { .. })
        ));
    }

    #[test]
    fn demo_refuses_the_monitor() {
        let r = separation_demo(&Encoding::builtin(Builtin::Monitor), 2, ExploreBounds::default());
        assert!(matches!(r, Err(EncodingError::NotUniform(..))));
    }

    #[test]
    fn demo_with_dropped_continuations() {
        let r = separation_demo(&Encoding::builtin(Builtin::DropContinuations), 10, ExploreBounds::default()).unwrap();
        assert_eq!(r.source_observables, obs(&[&["0", "0"], &["1", "1"]]));
        assert!(r.adversary_announcements.values().all(Vec::is_empty));
        assert!(r.observables_differ);
        assert!(r.adversary_rounds >= 1);
    }
}
