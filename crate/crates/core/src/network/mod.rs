//! Networks of components, their steps, computations and projections.

mod hypergraph;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::lts::{dialect_violation, emitting_steps, input_capabilities, Action, Derivation, Dialect, LtsError};
use crate::name::{Name, Origin};
use crate::syntax::{free_names, parse_network_text, reduced_normal_form, write_process, ParseError, Process, Renaming};

pub use hypergraph::{automorphisms, hypergraph_of, is_symmetric, symmetry_failure, Automorphism, Hypergraph};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetworkError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("a network needs at least one component")]
    Empty,
    #[error("`%idmap` lists {groups} nodes but the network has {components}")]
    IdMap { groups: usize, components: usize },
    #[error("hypergraph has {0} nodes; automorphism enumeration is bounded at {1}")]
    TooManyNodes(usize, usize),
    #[error("more than {0} automorphisms")]
    TooManyAutomorphisms(usize),
    #[error("not an automorphism of the network's hypergraph: {0}")]
    NotAutomorphism(String),
    #[error("malformed automorphism: {0}")]
    BadAutomorphism(String),
}

/// `P_1 | ... | P_k` under the top-level restrictions `hoisted`.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Network {
    #[serde(with = "process_strings")]
    pub components: Vec<Process>,
    pub hoisted: Vec<Name>,
    /// Identifier numerals of each node; a composite node has several.
    pub ids: Vec<Vec<Name>>,
}

mod process_strings {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    use crate::syntax::{parse, Process};

    pub fn serialize<S: Serializer>(ps: &[Process], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(ps.iter().map(|p| p.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Process>, D::Error> {
        let texts = Vec::<String>::deserialize(d)?;
        texts.iter().map(|t| parse(t).map_err(D::Error::custom)).collect()
    }
}

impl Network {
    /// Components identified by `1, 2, ..., k`.
    pub fn new(components: Vec<Process>) -> Self {
        Network::with_id_base(components, 1)
    }

    pub fn with_id_base(components: Vec<Process>, base: u64) -> Self {
        let ids = (0..components.len()).map(|i| vec![Name::numeral(base + i as u64)]).collect();
        Network { components, hoisted: Vec::new(), ids }
    }

    pub fn parse(text: &str) -> Result<Self, NetworkError> {
        let t = parse_network_text(text)?;
        let k = t.components.len();
        let mut net = Network::with_id_base(t.components, t.id_base.unwrap_or(1));
        if let Some(groups) = t.id_groups {
            if groups.len() != k {
                return Err(NetworkError::IdMap { groups: groups.len(), components: k });
            }
            net.ids = groups;
        }
        net.hoisted = t.hoisted;
        Ok(net)
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Component of node `i` (1-based).
    pub fn component(&self, i: usize) -> &Process {
        &self.components[i - 1]
    }

    /// Free names of all components, including hoisted ones.
    pub fn names(&self) -> BTreeSet<Name> {
        let mut out: BTreeSet<Name> = self.components.iter().flat_map(free_names).collect();
        out.extend(self.hoisted.iter().cloned());
        out
    }

    /// Free names visible to the environment.
    pub fn free_names(&self) -> BTreeSet<Name> {
        let mut out: BTreeSet<Name> = self.components.iter().flat_map(free_names).collect();
        for h in &self.hoisted {
            out.remove(h);
        }
        out
    }

    /// The whole network as one process.
    pub fn flatten(&self) -> Process {
        let mut p = Process::par_all(self.components.clone());
        for h in self.hoisted.iter().rev() {
            p = Process::new_name(h.clone(), p);
        }
        p
    }

    /// The node whose identifiers include numeral `n`.
    pub fn node_of_id(&self, n: &Name) -> Option<usize> {
        self.ids.iter().position(|g| g.contains(n)).map(|i| i + 1)
    }

    pub fn dialect_violation(&self, d: Dialect) -> Option<String> {
        self.components.iter().find_map(|p| dialect_violation(p, d))
    }

    /// Canonical text of the state: hoisted and session-fresh names are
    /// replaced by placeholders, components are normalized.
    pub fn state_key(&self) -> String {
        let mut comps = self.components.clone();
        let mut hoisted: BTreeSet<Name> = self.hoisted.iter().cloned().collect();
        for _ in 0..2 {
            let normalized: Vec<Process> = comps.iter().map(reduced_normal_form).collect();
            let mut order: Vec<Name> = Vec::new();
            for c in &normalized {
                for n in crate::syntax::free_names_ordered(c) {
                    let placeholder = matches!(n.origin(), Origin::Fresh(_) | Origin::Canonical) || hoisted.contains(&n);
                    if placeholder && !order.contains(&n) {
                        order.push(n);
                    }
                }
            }
            let mut sigma = Renaming::identity();
            for (i, n) in order.iter().enumerate() {
                let tag = if hoisted.contains(n) { "h" } else { "e" };
                sigma.insert(n.clone(), Name::new(format!("#{tag}{i}")));
            }
            comps = normalized.iter().map(|c| crate::syntax::rename(c, &sigma, false)).collect();
            hoisted = hoisted.iter().map(|h| sigma.apply(h)).collect();
        }
        let parts: Vec<String> = comps.iter().map(|c| c.to_string()).collect();
        parts.join(" || ")
    }

    pub fn state_hash(&self) -> String {
        hex::encode(Sha256::digest(self.state_key().as_bytes()))
    }

    fn ids_text(&self) -> Option<String> {
        let singles: Option<Vec<u64>> =
            self.ids.iter().map(|g| if g.len() == 1 { g[0].numeral_value() } else { None }).collect();
        if let Some(v) = singles {
            let base = v.first().copied().unwrap_or(1);
            if v.iter().enumerate().all(|(i, n)| *n == base + i as u64) {
                return (base != 1).then(|| format!("%ids {base}"));
            }
        }
        let groups: Vec<String> =
            self.ids.iter().map(|g| g.iter().map(|n| n.as_str()).collect::<Vec<_>>().join(",")).collect();
        Some(format!("%idmap {}", groups.join(" ")))
    }
}

impl fmt::Display for Network {
    /// Network file syntax, accepted by [`Network::parse`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(ids) = self.ids_text() {
            writeln!(f, "{ids}")?;
        }
        if !self.hoisted.is_empty() {
            let hs: Vec<&str> = self.hoisted.iter().map(|h| h.as_str()).collect();
            writeln!(f, "%hoisted {}", hs.join(" "))?;
        }
        for (i, c) in self.components.iter().enumerate() {
            if i > 0 {
                f.write_str("|| ")?;
            }
            let mut s = String::new();
            write_process(c, &mut s, &|n: &Name| n.as_str().to_owned());
            writeln!(f, "{s}")?;
        }
        Ok(())
    }
}

/// One component's contribution to a step.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Half {
    pub node: usize,
    pub action: Action,
    pub derivation: Derivation,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Movers {
    Single(Half),
    Pair { input: Half, output: Half },
}

impl Movers {
    pub fn nodes(&self) -> Vec<usize> {
        match self {
            Movers::Single(h) => vec![h.node],
            Movers::Pair { input, output } => vec![input.node, output.node],
        }
    }

    pub fn half_of(&self, node: usize) -> Option<&Half> {
        match self {
            Movers::Single(h) if h.node == node => Some(h),
            Movers::Pair { input, .. } if input.node == node => Some(input),
            Movers::Pair { output, .. } if output.node == node => Some(output),
            _ => None,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct NetworkStep {
    pub label: Action,
    pub movers: Movers,
    /// Name hoisted to the top level by a Close.
    pub extruded: Option<Name>,
    pub post: Network,
}

impl NetworkStep {
    pub fn rep_uses(&self) -> usize {
        match &self.movers {
            Movers::Single(h) => h.derivation.rep_uses(),
            Movers::Pair { input, output } => input.derivation.rep_uses() + output.derivation.rep_uses(),
        }
    }

    /// τ steps and announcements: what a network does on its own.
    pub fn is_internal(&self) -> bool {
        self.label == Action::Tau || self.label.announcement().is_some()
    }
}

/// Which steps to generate.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum StepScope {
    /// Everything, including environment inputs.
    All,
    /// τ steps and free outputs on `o`.
    Internal,
}

/// All steps of the network. Visible actions on hoisted names are never
/// reported, and `o` never carries an internal communication.
pub fn network_transitions(net: &Network, d: Dialect) -> Result<Vec<NetworkStep>, LtsError> {
    steps_in_scope(net, d, StepScope::All)
}

pub fn steps_in_scope(net: &Network, d: Dialect, scope: StepScope) -> Result<Vec<NetworkStep>, LtsError> {
    if let Some(reason) = net.dialect_violation(d) {
        return Err(LtsError::Dialect { dialect: d, reason });
    }
    let hoisted: BTreeSet<Name> = net.hoisted.iter().cloned().collect();
    let all_names = net.names();
    let mut steps = Vec::new();
    let emits: Vec<_> = net.components.iter().map(emitting_steps).collect();
    let inputs: Vec<_> = net.components.iter().map(input_capabilities).collect();

    for (i, es) in emits.iter().enumerate() {
        for e in es {
            let visible_ok = match &e.action {
                Action::Tau => true,
                Action::FreeOutput { channel, .. } if channel.is_output_channel() => true,
                a => scope == StepScope::All && !hoisted.contains(a.channel().unwrap()),
            };
            if !visible_ok {
                continue;
            }
            let (action, target) = match &e.action {
                Action::BoundOutput { channel, datum } if all_names.contains(datum) => {
                    let fresh = Name::fresh(datum);
                    (
                        Action::BoundOutput { channel: channel.clone(), datum: fresh.clone() },
                        crate::syntax::substitute(&e.target, datum, &fresh),
                    )
                }
                a => (a.clone(), e.target.clone()),
            };
            let mut post = net.clone();
            post.components[i] = target;
            post.collect_hoisted();
            steps.push(NetworkStep {
                label: action.clone(),
                movers: Movers::Single(Half { node: i + 1, action, derivation: e.derivation.clone() }),
                extruded: None,
                post,
            });
        }
    }

    if scope == StepScope::All {
        let mut universe: BTreeSet<Name> = net.free_names();
        universe.insert(Name::fresh(&Name::new("v")));
        for (i, caps) in inputs.iter().enumerate() {
            for cap in caps {
                if hoisted.contains(&cap.channel) {
                    continue;
                }
                for z in &universe {
                    let (action, target) = cap.instantiate(z);
                    let mut post = net.clone();
                    post.components[i] = target;
                    post.collect_hoisted();
                    steps.push(NetworkStep {
                        label: action.clone(),
                        movers: Movers::Single(Half { node: i + 1, action, derivation: cap.derivation.clone() }),
                        extruded: None,
                        post,
                    });
                }
            }
        }
    }

    for (i, caps) in inputs.iter().enumerate() {
        for cap in caps {
            if cap.channel.is_output_channel() {
                continue;
            }
            for (j, es) in emits.iter().enumerate() {
                if i == j {
                    continue;
                }
                for e in es {
                    let (channel, datum, bound) = match &e.action {
                        Action::FreeOutput { channel, datum } => (channel, datum, false),
                        Action::BoundOutput { channel, datum } => (channel, datum, true),
                        _ => continue,
                    };
                    if *channel != cap.channel {
                        continue;
                    }
                    let (datum, out_target) = if bound && all_names.contains(datum) {
                        let fresh = Name::fresh(datum);
                        (fresh.clone(), crate::syntax::substitute(&e.target, datum, &fresh))
                    } else {
                        (datum.clone(), e.target.clone())
                    };
                    let (in_action, in_target) = cap.instantiate(&datum);
                    let mut post = net.clone();
                    post.components[i] = in_target;
                    post.components[j] = out_target;
                    if bound {
                        post.hoisted.push(datum.clone());
                    }
                    post.collect_hoisted();
                    let out_action = if bound {
                        Action::BoundOutput { channel: channel.clone(), datum: datum.clone() }
                    } else {
                        e.action.clone()
                    };
                    steps.push(NetworkStep {
                        label: Action::Tau,
                        movers: Movers::Pair {
                            input: Half { node: i + 1, action: in_action, derivation: cap.derivation.clone() },
                            output: Half { node: j + 1, action: out_action, derivation: e.derivation.clone() },
                        },
                        extruded: bound.then_some(datum),
                        post,
                    });
                }
            }
        }
    }
    Ok(steps)
}

impl Network {
    /// Drops hoisted names that no component mentions any more.
    pub(crate) fn collect_hoisted(&mut self) {
        let used: BTreeSet<Name> = self.components.iter().flat_map(free_names).collect();
        self.hoisted.retain(|h| used.contains(h));
    }
}

/// A finite computation: a start network and a sequence of steps.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Computation {
    pub start: Network,
    pub steps: Vec<NetworkStep>,
}

impl Computation {
    pub fn new(start: Network) -> Self {
        Computation { start, steps: Vec::new() }
    }

    pub fn last(&self) -> &Network {
        self.steps.last().map(|s| &s.post).unwrap_or(&self.start)
    }

    pub fn push(&mut self, step: NetworkStep) {
        self.steps.push(step);
    }

    /// Whether `other` extends `self` (reflexively).
    pub fn is_prefix_of(&self, other: &Computation) -> bool {
        self.start == other.start
            && self.steps.len() <= other.steps.len()
            && self.steps.iter().zip(&other.steps).all(|(a, b)| a == b)
    }

    /// Numerals announced on `o`, per node.
    pub fn announcements(&self) -> BTreeMap<usize, Vec<Name>> {
        let mut out: BTreeMap<usize, Vec<Name>> = (1..=self.start.len()).map(|i| (i, Vec::new())).collect();
        for s in &self.steps {
            if let (Some(n), Movers::Single(h)) = (s.label.announcement(), &s.movers) {
                out.entry(h.node).or_default().push(n.clone());
            }
        }
        out
    }
}

/// A component's contribution to one step of a computation.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Segment {
    Idle,
    Moved { action: Action, derivation: Derivation, after: Process },
}

/// Projection of `c` onto node `i`: one segment per step.
pub fn project(c: &Computation, i: usize) -> Vec<Segment> {
    c.steps
        .iter()
        .map(|s| match s.movers.half_of(i) {
            None => Segment::Idle,
            Some(h) => Segment::Moved {
                action: h.action.clone(),
                derivation: h.derivation.clone(),
                after: s.post.component(i).clone(),
            },
        })
        .collect()
}
