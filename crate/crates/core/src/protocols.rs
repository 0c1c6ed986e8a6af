//! Canned networks: the two-node mixed-choice election, an election
//! protocol for any connected hypergraph, and CCS rings.
//!
//! The election protocol is a tournament. Every node owns two private
//! names, an inbox `x` and a reply channel `y`. Live nodes offer, on each
//! arc they hold, a mixed choice between sending `x` and receiving a
//! rival's inbox. The receiver loses: it sends a token (its reply channel)
//! to the winner's inbox, passes on every token it had collected, and
//! forwards tokens that reach it later. A node holding `k - 1` tokens has
//! beaten everybody, directly or not. It announces itself on `o` and
//! sends its numeral on every collected reply channel; each loser
//! announces what it receives there.
//!
//! When no arc joins all nodes, tokens also carry the loser's arcs, so
//! that the winner takes over its connections. Tokens then travel as a
//! private channel `p` on which the reply and the arcs follow.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::ccs_applicable;
use crate::name::Name;
use crate::network::{Automorphism, Hypergraph, Network};
use crate::syntax::{Prefix, Process};

/// Upper bound on generated term size, to keep runaway specs in check.
pub const MAX_COMPONENT_SIZE: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("the hypergraph is not connected")]
    Disconnected,
    #[error("bad hypergraph spec: {0}")]
    BadSpec(String),
    #[error("outside the CCS hypothesis: {0}")]
    CcsHypothesis(String),
    #[error("generated component exceeds {0} syntax nodes")]
    TooLarge(usize),
}

/// Nodes `1..=k` and named arcs, each joining a set of nodes.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct HypergraphSpec {
    pub k: usize,
    pub arcs: Vec<(Name, BTreeSet<usize>)>,
}

impl HypergraphSpec {
    pub fn new(k: usize, arcs: impl IntoIterator<Item = (&'static str, Vec<usize>)>) -> Self {
        HypergraphSpec {
            k,
            arcs: arcs.into_iter().map(|(a, ns)| (Name::new(a), ns.into_iter().collect())).collect(),
        }
    }

    pub fn hypergraph(&self) -> Hypergraph {
        let mut arcs: BTreeMap<Name, BTreeSet<usize>> = BTreeMap::new();
        for (a, ns) in &self.arcs {
            arcs.entry(a.clone()).or_default().extend(ns);
        }
        Hypergraph { nodes: self.k, arcs }
    }

    pub fn is_connected(&self) -> bool {
        self.hypergraph().is_connected()
    }

    fn validate(&self) -> Result<(), ProtocolError> {
        let bad = |m: String| Err(ProtocolError::BadSpec(m));
        if self.k == 0 {
            return bad("no nodes".into());
        }
        let mut seen = BTreeSet::new();
        for (a, ns) in &self.arcs {
            if a.is_output_channel() || a.is_numeral() || !crate::name::is_identifier(a.as_str()) {
                return bad(format!("`{a}` cannot name an arc"));
            }
            if !seen.insert(a) {
                return bad(format!("arc `{a}` listed twice"));
            }
            if ns.is_empty() || ns.iter().any(|&n| n == 0 || n > self.k) {
                return bad(format!("arc `{a}` joins nodes outside 1..{}", self.k));
            }
        }
        if !self.is_connected() {
            return Err(ProtocolError::Disconnected);
        }
        Ok(())
    }
}

impl FromStr for HypergraphSpec {
    type Err = ProtocolError;

    /// ```text
    /// nodes 3
    /// a 1 2 3
    /// ```
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |m: String| ProtocolError::BadSpec(m);
        let mut k = None;
        let mut arcs = Vec::new();
        for (no, line) in s.lines().enumerate() {
            let line = line.split("//").next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let mut words = line.split_whitespace();
            let head = words.next().unwrap();
            let nums: Vec<usize> = words
                .map(|w| w.parse().map_err(|_| bad(format!("line {}: `{w}` is not a node", no + 1))))
                .collect::<Result<_, _>>()?;
            if head == "nodes" {
                if nums.len() != 1 || k.is_some() {
                    return Err(bad(format!("line {}: expected `nodes <k>` once", no + 1)));
                }
                k = Some(nums[0]);
            } else {
                arcs.push((Name::new(head), nums.into_iter().collect()));
            }
        }
        let k = k.ok_or_else(|| bad("missing `nodes <k>` line".into()))?;
        Ok(HypergraphSpec { k, arcs })
    }
}

impl fmt::Display for HypergraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "nodes {}", self.k)?;
        for (a, ns) in &self.arcs {
            let ns: Vec<String> = ns.iter().map(|n| n.to_string()).collect();
            writeln!(f, "{a} {}", ns.join(" "))?;
        }
        Ok(())
    }
}

/// The two-node mixed-choice election with identifiers 0 and 1.
pub fn two_node_election() -> Network {
    Network::parse("%ids 0\nx_0!(y).o!0 + x_1?(y).o!1\n|| x_1!(y).o!1 + x_0?(y).o!0\n").expect("fixed text")
}

/// Replaces every sum by the parallel composition of its branches.
pub fn split_sums(p: &Process) -> Process {
    match p {
        Process::Sum(bs) if bs.len() > 1 => {
            Process::par_all(bs.iter().map(|(pre, c)| Process::prefixed(pre.clone(), split_sums(c))).collect())
        }
        Process::Sum(bs) => Process::Sum(bs.iter().map(|(pre, c)| (pre.clone(), split_sums(c))).collect()),
        Process::Out(..) => p.clone(),
        Process::New(x, b) => Process::new_name(x.clone(), split_sums(b)),
        Process::Par(l, r) => Process::par(split_sums(l), split_sums(r)),
        Process::Rep(b) => Process::rep(split_sums(b)),
    }
}

/// The election network for a connected hypergraph. See the module
/// documentation for the protocol.
pub fn election_network(spec: &HypergraphSpec) -> Result<Network, ProtocolError> {
    spec.validate()?;
    let h = spec.hypergraph();
    let hub = h.arcs.values().any(|t| t.len() == spec.k);
    let gift = if hub { None } else { Some((1..=spec.k).map(|n| arcs_of(&h, n).len()).max().unwrap_or(0)) };
    let mut components = Vec::with_capacity(spec.k);
    for node in 1..=spec.k {
        let g = Gen { k: spec.k, me: Name::numeral(node as u64), gift, fresh: 0 };
        let p = g.node(arcs_of(&h, node))?;
        components.push(p);
    }
    Ok(Network::new(components))
}

fn arcs_of(h: &Hypergraph, node: usize) -> Vec<Name> {
    h.arcs.iter().filter(|(_, t)| t.contains(&node)).map(|(a, _)| a.clone()).collect()
}

/// One token held by a live node: a reply channel and, when arcs are
/// gifted, the arcs that came with it.
#[derive(Clone)]
struct Token {
    reply: Name,
    arcs: Vec<Name>,
}

struct Gen {
    k: usize,
    me: Name,
    /// Number of arcs per token, or `None` when some arc joins every node.
    gift: Option<usize>,
    fresh: usize,
}

impl Gen {
    fn var(&mut self, base: &str) -> Name {
        self.fresh += 1;
        Name::new(format!("{base}{}", self.fresh))
    }

    fn node(mut self, arcs: Vec<Name>) -> Result<Process, ProtocolError> {
        let (x, y) = (Name::new("x"), Name::new("y"));
        let mut pads = Vec::new();
        let mut own = arcs.clone();
        if let Some(a) = self.gift {
            while own.len() < a {
                let d = self.var("d");
                pads.push(d.clone());
                own.push(d);
            }
        }
        let me = Token { reply: y.clone(), arcs: own };
        let body = self.live(0, 0, &x, &me, arcs, Vec::new())?;
        let mut p = body;
        for d in pads.into_iter().rev() {
            p = Process::new_name(d, p);
        }
        Ok(Process::new_name(x, Process::new_name(y, p)))
    }

    /// A live node that has collected `tokens` and won `wins` times.
    fn live(
        &mut self,
        depth: usize,
        wins: usize,
        inbox: &Name,
        me: &Token,
        held: Vec<Name>,
        tokens: Vec<Token>,
    ) -> Result<Process, ProtocolError> {
        if tokens.len() + 1 == self.k {
            let mut parts = vec![Process::out(Name::output_channel(), self.me.clone())];
            parts.extend(tokens.iter().map(|t| Process::out(t.reply.clone(), self.me.clone())));
            return Ok(Process::par_all(parts));
        }
        let mut branches: Vec<(Prefix, Process)> = Vec::new();
        let mut tail = Vec::new();
        let can_win = wins + 1 < self.k;
        let share = held.len() > 1;
        let win_cont = if can_win { Some(self.live(depth + 1, wins + 1, inbox, me, held.clone(), tokens.clone())?) } else { None };
        let z = self.var("z");
        let lose_cont = self.lose(&z, inbox, me, &tokens);
        let (win_sig, lose_sig) = (self.var("s"), self.var("u"));
        for e in &held {
            if let Some(w) = &win_cont {
                let cont = if share { Process::out(win_sig.clone(), win_sig.clone()) } else { w.clone() };
                branches.push((Prefix::Output { channel: e.clone(), datum: inbox.clone() }, cont));
            }
            let cont = if share { Process::out(lose_sig.clone(), z.clone()) } else { lose_cont.clone() };
            branches.push((Prefix::Input { channel: e.clone(), formal: z.clone() }, cont));
        }
        // absorbing a token
        let absorbed = self.absorb(depth, wins, inbox, me, &held, &tokens)?;
        branches.push(absorbed);
        let sum = Process::Sum(branches);
        let p = if share {
            if let Some(w) = win_cont {
                let junk = self.var("v");
                tail.push(Process::input(win_sig.clone(), junk, w));
            }
            tail.push(Process::input(lose_sig.clone(), z.clone(), lose_cont));
            let mut all = vec![sum];
            all.extend(tail);
            Process::new_name(win_sig, Process::new_name(lose_sig, Process::par_all(all)))
        } else {
            sum
        };
        if p.size() > MAX_COMPONENT_SIZE {
            return Err(ProtocolError::TooLarge(MAX_COMPONENT_SIZE));
        }
        Ok(p)
    }

    fn absorb(
        &mut self,
        depth: usize,
        wins: usize,
        inbox: &Name,
        me: &Token,
        held: &[Name],
        tokens: &[Token],
    ) -> Result<(Prefix, Process), ProtocolError> {
        match self.gift {
            None => {
                let r = self.var("r");
                let mut tokens = tokens.to_vec();
                tokens.push(Token { reply: r.clone(), arcs: Vec::new() });
                let cont = self.live(depth + 1, wins, inbox, me, held.to_vec(), tokens)?;
                Ok((Prefix::Input { channel: inbox.clone(), formal: r }, cont))
            }
            Some(a) => {
                let p = self.var("p");
                let r = self.var("r");
                let fs: Vec<Name> = (0..a).map(|_| self.var("f")).collect();
                let mut held = held.to_vec();
                held.extend(fs.iter().cloned());
                let mut tokens = tokens.to_vec();
                tokens.push(Token { reply: r.clone(), arcs: fs.clone() });
                let mut cont = self.live(depth + 1, wins, inbox, me, held, tokens)?;
                for f in fs.into_iter().rev() {
                    cont = Process::input(p.clone(), f, cont);
                }
                cont = Process::input(p.clone(), r, cont);
                Ok((Prefix::Input { channel: inbox.clone(), formal: p }, cont))
            }
        }
    }

    /// Lost to the owner of inbox `z`.
    fn lose(&mut self, z: &Name, inbox: &Name, me: &Token, tokens: &[Token]) -> Process {
        let mut parts: Vec<Process> = std::iter::once(me).chain(tokens).map(|t| self.send_token(z, t)).collect();
        // tokens still on their way to us
        let late = self.k.saturating_sub(2 + tokens.len());
        let mut fwd = Process::nil();
        for _ in 0..late {
            let q = self.var("q");
            fwd = Process::input(inbox.clone(), q.clone(), Process::output(z.clone(), q, fwd));
        }
        if late > 0 {
            parts.push(fwd);
        }
        let l = self.var("l");
        parts.push(Process::input(me.reply.clone(), l.clone(), Process::out(Name::output_channel(), l)));
        Process::par_all(parts)
    }

    fn send_token(&mut self, z: &Name, t: &Token) -> Process {
        match self.gift {
            None => Process::out(z.clone(), t.reply.clone()),
            Some(_) => {
                let p = self.var("p");
                let arcs = Process::par_all(t.arcs.iter().map(|f| Process::out(p.clone(), f.clone())).collect());
                let body = Process::output(z.clone(), p.clone(), Process::output(p.clone(), t.reply.clone(), arcs));
                Process::new_name(p, body)
            }
        }
    }
}

/// A CCS ring `!(c_i!c_i.0 + c_{i-1}?(z).o!i)` with the rotation by
/// `shift`, provided the rotation keeps every node away from its
/// neighbours.
pub fn ccs_ring(k: usize, shift: usize) -> Result<(Network, Automorphism), ProtocolError> {
    if k < 2 {
        return Err(ProtocolError::CcsHypothesis(format!("a ring needs at least two nodes, got {k}")));
    }
    if shift % k == 0 {
        return Err(ProtocolError::CcsHypothesis("the shift fixes every node".into()));
    }
    let c = |i: usize| Name::new(format!("c_{i}"));
    let components: Vec<Process> = (1..=k)
        .map(|i| {
            let prev = if i == 1 { k } else { i - 1 };
            let z = Name::new("z");
            Process::rep(Process::Sum(vec![
                (Prefix::Output { channel: c(i), datum: c(i) }, Process::nil()),
                (
                    Prefix::Input { channel: c(prev), formal: z },
                    Process::out(Name::output_channel(), Name::numeral(i as u64)),
                ),
            ]))
        })
        .collect();
    let net = Network::new(components);
    let image = |i: usize| (i - 1 + shift) % k + 1;
    let sigma = Automorphism::new((1..=k).map(image).collect(), (1..=k).map(|i| (c(i), c(image(i)))));
    if !ccs_applicable(&net, &sigma) {
        return Err(ProtocolError::CcsHypothesis(format!(
            "with k = {k} and shift {shift} some arc joins a node to one of its images"
        )));
    }
    Ok((net, sigma))
}
