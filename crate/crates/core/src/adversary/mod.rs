//! The symmetry adversary: a scheduler that keeps a symmetric network
//! symmetric forever, so that no component can ever be told apart.
//!
//! Each round one component (chosen round-robin) makes a move and the
//! adversary replays the image of that move at every node of its orbit.
//! A communication between nodes `i` and `σ^r(i)` is replayed along the
//! cycles of `θ = σ^r`, each cycle closed by commuting an output with a
//! later input of the same component.

mod diamond;
mod reduce;

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::lts::{Action, Derivation, Dialect, LtsError};
use crate::name::Name;
use crate::network::{steps_in_scope, symmetry_failure, Automorphism, Computation, Movers, Network, NetworkStep, StepScope};
use crate::syntax::{free_names, Renaming};

pub use diamond::{close_diamond, confluence_diamond, diamond_for_actions, DiamondError, DiamondResult};
pub use reduce::{ccs_applicable, reduce_well_balanced};

use reduce::gcd;

#[derive(Debug, Error)]
pub enum AdversaryError {
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("stuck after {} rounds: no move is available", .state.round)]
    Stuck { state: Box<AdversaryState> },
    #[error("round {round}: symmetry broken: {detail}")]
    SymmetryBroken { round: usize, detail: String },
    #[error("round {round}: no diamond at node {node}: {source}")]
    DiamondFailed { round: usize, node: usize, source: DiamondError },
    #[error(transparent)]
    Lts(#[from] LtsError),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundCase {
    /// A step of one component, replayed around its orbit.
    Move,
    /// A free-name communication.
    Com,
    /// A communication of a restricted name.
    Close,
}

/// What the adversary did in one round, and the checks it passed.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct RoundCertificate {
    pub round: usize,
    pub initiator: usize,
    pub case: RoundCase,
    /// `r` with the partner being `σ^r` of the initiator; absent when the
    /// partner lies in another orbit or there is no partner.
    pub theta_power: Option<usize>,
    pub cycles: usize,
    pub cycle_len: usize,
    pub steps: usize,
    pub diamonds: usize,
    /// The (enriched) automorphism after the round.
    pub sigma: String,
    pub state_hash: String,
}

#[derive(Clone, Debug)]
pub struct AdversaryState {
    pub net: Network,
    pub sigma: Automorphism,
    /// Rounds completed.
    pub round: usize,
    pub trace: Computation,
    pub certificates: Vec<RoundCertificate>,
}

/// Runs `rounds` rounds of the adversary on a symmetric network.
pub fn run_adversary(net: &Network, sigma: &Automorphism, rounds: usize, d: Dialect) -> Result<AdversaryState, AdversaryError> {
    check_preconditions(net, sigma, d)?;
    let mut state = AdversaryState {
        net: net.clone(),
        sigma: sigma.clone(),
        round: 0,
        trace: Computation::new(net.clone()),
        certificates: Vec::new(),
    };
    for _ in 0..rounds {
        step_round(&mut state, d)?;
    }
    Ok(state)
}

fn check_preconditions(net: &Network, sigma: &Automorphism, d: Dialect) -> Result<(), AdversaryError> {
    let fail = |m: String| Err(AdversaryError::PreconditionFailed(m));
    if !matches!(d, Dialect::PiAsync | Dialect::Ccs) {
        return fail(format!("the adversary applies to asynchronous or CCS networks, not {d}"));
    }
    if let Some(why) = net.dialect_violation(d) {
        return fail(why);
    }
    if sigma.k() != net.len() {
        return fail(format!("automorphism acts on {} nodes, network has {}", sigma.k(), net.len()));
    }
    if sigma.node_map.iter().enumerate().all(|(i, &n)| n == i + 1) {
        return fail("the automorphism fixes every node".into());
    }
    if let Some(why) = symmetry_failure(net, sigma) {
        return fail(format!("not a symmetry: {why}"));
    }
    if !sigma.is_well_balanced() {
        return fail("orbits differ in size".into());
    }
    if d == Dialect::Ccs && !ccs_applicable(net, sigma) {
        return fail("some arc joins a node to one of its images".into());
    }
    Ok(())
}

/// Plays one round, trying candidate moves in policy order.
pub fn step_round(state: &mut AdversaryState, d: Dialect) -> Result<(), AdversaryError> {
    let round = state.round + 1;
    let k = state.net.len();
    let preferred = (round - 1) % k + 1;
    let candidates = candidates(&state.net, d, preferred)?;
    if candidates.is_empty() {
        return Err(AdversaryError::Stuck { state: Box::new(state.clone()) });
    }
    let mut first_err = None;
    for c in candidates {
        match play(&state.net, &state.sigma, d, c, preferred, round) {
            Ok((steps, net, sigma, mut cert)) => {
                cert.sigma = sigma.to_string();
                cert.state_hash = net.state_hash();
                for s in steps {
                    state.trace.push(s);
                }
                state.net = net;
                state.sigma = sigma;
                state.round = round;
                state.certificates.push(cert);
                return Ok(());
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    Err(first_err.unwrap())
}

fn kind_rank(a: &Action) -> u8 {
    match a {
        Action::Tau => 0,
        Action::FreeOutput { .. } | Action::BoundOutput { .. } => 1,
        Action::Input { .. } => 2,
    }
}

/// Eligible moves, the preferred node's first. Announcements, inputs on `o`
/// and inputs of names the network has never seen are left out.
fn candidates(net: &Network, d: Dialect, preferred: usize) -> Result<Vec<NetworkStep>, LtsError> {
    let known = net.free_names();
    let mut steps: Vec<NetworkStep> = steps_in_scope(net, d, StepScope::All)?
        .into_iter()
        .filter(|s| match &s.movers {
            Movers::Single(h) => {
                let on_o = h.action.channel().is_some_and(Name::is_output_channel);
                let unknown_input = matches!(&h.action, Action::Input { received, .. } if !known.contains(received));
                !on_o && !unknown_input
            }
            Movers::Pair { .. } => true,
        })
        .collect();
    steps.sort_by_cached_key(|s| {
        let halves: Vec<String> = match &s.movers {
            Movers::Single(h) => vec![h.action.to_string()],
            Movers::Pair { input, output } => vec![output.action.to_string(), input.action.to_string()],
        };
        let nodes = s.movers.nodes();
        (!nodes.contains(&preferred), kind_rank(&s.label), halves, nodes)
    });
    Ok(steps)
}

/// The shape a replayed action must have.
#[derive(Clone, Debug)]
enum Pattern {
    Tau,
    Out { channel: Name, datum: Option<Name> },
    In { channel: Name, received: Option<Name> },
}

impl Pattern {
    /// Image of `a` under `rho`. Restricted data match anything.
    fn image(a: &Action, rho: &Renaming, bound_datum: bool) -> Pattern {
        match a {
            Action::Tau => Pattern::Tau,
            Action::FreeOutput { channel, datum } => Pattern::Out { channel: rho.apply(channel), datum: Some(rho.apply(datum)) },
            Action::BoundOutput { channel, .. } => Pattern::Out { channel: rho.apply(channel), datum: None },
            Action::Input { channel, received } => Pattern::In {
                channel: rho.apply(channel),
                received: (!bound_datum).then(|| rho.apply(received)),
            },
        }
    }

    fn matches(&self, a: &Action) -> bool {
        match (self, a) {
            (Pattern::Tau, Action::Tau) => true,
            (Pattern::Out { channel, datum: Some(d) }, Action::FreeOutput { channel: c, datum }) => c == channel && datum == d,
            (Pattern::Out { channel, datum: None }, Action::BoundOutput { channel: c, .. }) => c == channel,
            (Pattern::In { channel, received }, Action::Input { channel: c, received: r }) => {
                c == channel && received.as_ref().is_none_or(|x| x == r)
            }
            _ => false,
        }
    }
}

type Played = (Vec<NetworkStep>, Network, Automorphism, RoundCertificate);

struct Round<'a> {
    d: Dialect,
    round: usize,
    start: &'a Network,
    sigma: &'a Automorphism,
    net: Network,
    steps: Vec<NetworkStep>,
    /// Names each node extruded this round, in order.
    extruded: Vec<Vec<Name>>,
}

impl Round<'_> {
    fn rho(&self, power: usize) -> Renaming {
        self.sigma.power(power).name_renaming(self.start)
    }

    fn apply(&mut self, s: NetworkStep) {
        match &s.movers {
            Movers::Single(h) => {
                if let Action::BoundOutput { datum, .. } = &h.action {
                    self.extruded[h.node - 1].push(datum.clone());
                }
            }
            Movers::Pair { output, .. } => {
                if let Some(y) = &s.extruded {
                    self.extruded[output.node - 1].push(y.clone());
                }
            }
        }
        self.net = s.post.clone();
        self.steps.push(s);
    }

    fn broken(&self, detail: String) -> AdversaryError {
        AdversaryError::SymmetryBroken { round: self.round, detail }
    }

    /// A single-node step of `node` matching `pat`, preferring `like`.
    fn find_single(&self, node: usize, pat: &Pattern, like: &Derivation) -> Result<NetworkStep, AdversaryError> {
        let scope = if matches!(pat, Pattern::In { .. }) { StepScope::All } else { StepScope::Internal };
        let mut found: Vec<NetworkStep> = steps_in_scope(&self.net, self.d, scope)?
            .into_iter()
            .filter(|s| matches!(&s.movers, Movers::Single(h) if h.node == node && pat.matches(&h.action)))
            .collect();
        if found.is_empty() && scope == StepScope::Internal {
            found = steps_in_scope(&self.net, self.d, StepScope::All)?
                .into_iter()
                .filter(|s| matches!(&s.movers, Movers::Single(h) if h.node == node && pat.matches(&h.action)))
                .collect();
        }
        found.sort_by_key(|s| matches!(&s.movers, Movers::Single(h) if h.derivation != *like));
        found.into_iter().next().ok_or_else(|| self.broken(format!("node {node} cannot match {pat:?}")))
    }

    fn find_pair(
        &self,
        input: usize,
        output: usize,
        in_pat: &Pattern,
        out_pat: &Pattern,
        like: (&Derivation, &Derivation),
    ) -> Result<NetworkStep, AdversaryError> {
        let mut found: Vec<NetworkStep> = steps_in_scope(&self.net, self.d, StepScope::Internal)?
            .into_iter()
            .filter(|s| match &s.movers {
                Movers::Pair { input: i, output: o } => {
                    i.node == input && o.node == output && in_pat.matches(&i.action) && out_pat.matches(&o.action)
                }
                _ => false,
            })
            .collect();
        found.sort_by_key(|s| match &s.movers {
            Movers::Pair { input: i, output: o } => (i.derivation != *like.0) as u8 + (o.derivation != *like.1) as u8,
            _ => 2,
        });
        found
            .into_iter()
            .next()
            .ok_or_else(|| self.broken(format!("no communication from node {output} to node {input} matching {out_pat:?}")))
    }
}

fn play(
    start: &Network,
    sigma: &Automorphism,
    d: Dialect,
    first: NetworkStep,
    preferred: usize,
    round: usize,
) -> Result<Played, AdversaryError> {
    let k = start.len();
    let mut r = Round { d, round, start, sigma, net: start.clone(), steps: Vec::new(), extruded: vec![Vec::new(); k] };
    let nodes = first.movers.nodes();
    let initiator = if nodes.contains(&preferred) { preferred } else { nodes[0] };
    let mut cert = RoundCertificate {
        round,
        initiator,
        case: RoundCase::Move,
        theta_power: None,
        cycles: 1,
        cycle_len: 1,
        steps: 0,
        diamonds: 0,
        sigma: String::new(),
        state_hash: String::new(),
    };
    match first.movers.clone() {
        Movers::Single(h) => {
            let i = h.node;
            let q = sigma.orbit(i).len();
            cert.cycle_len = q;
            r.apply(first);
            for m in 1..q {
                let pat = Pattern::image(&h.action, &r.rho(m), false);
                let s = r.find_single(sigma.power(m).node(i), &pat, &h.derivation)?;
                r.apply(s);
            }
        }
        Movers::Pair { input, output } => {
            let bound = first.extruded.is_some();
            cert.case = if bound { RoundCase::Close } else { RoundCase::Com };
            let (i, j) = (input.node, output.node);
            let orbit = sigma.orbit(i);
            let q = orbit.len();
            let like = (&input.derivation, &output.derivation);
            let pats = |rho: &Renaming| {
                (Pattern::image(&input.action, rho, bound), Pattern::image(&output.action, rho, bound))
            };
            match (0..q).find(|&t| sigma.power(t).node(i) == j) {
                None => {
                    // partner in another orbit: the pairs are disjoint
                    cert.cycle_len = q;
                    r.apply(first);
                    for m in 1..q {
                        let (ip, op) = pats(&r.rho(m));
                        let pm = sigma.power(m);
                        let s = r.find_pair(pm.node(i), pm.node(j), &ip, &op, like)?;
                        r.apply(s);
                    }
                }
                Some(power) => {
                    let g = gcd(power, q);
                    let p = q / g;
                    cert.theta_power = Some(power);
                    cert.cycles = g;
                    cert.cycle_len = p;
                    let mut first = Some(first);
                    for m in 0..g {
                        let a = sigma.power(m).node(i);
                        for t in 0..p {
                            let e = m + power * t;
                            let theta_t = sigma.power(e);
                            let (inp, outp) = (theta_t.node(i), theta_t.node(j));
                            let s = match first.take() {
                                Some(s) => s,
                                None => {
                                    let (ip, op) = pats(&r.rho(e));
                                    r.find_pair(inp, outp, &ip, &op, like)?
                                }
                            };
                            r.apply(s);
                        }
                        debug_assert_eq!(sigma.power(m + power * p).node(i), a);
                    }
                    cert.diamonds = check_diamonds(&r)?;
                }
            }
        }
    }
    cert.steps = r.steps.len();
    let mut next_sigma = sigma.clone();
    for n in 1..=k {
        let image = sigma.node(n);
        for (x, y) in r.extruded[n - 1].iter().zip(&r.extruded[image - 1]) {
            next_sigma.enrich(x.clone(), y.clone());
        }
    }
    let live: BTreeSet<Name> =
        r.net.components.iter().flat_map(free_names).chain(r.net.hoisted.iter().cloned()).collect();
    next_sigma.arc_map.retain(|x, _| live.contains(x));
    if let Some(why) = symmetry_failure(&r.net, &next_sigma) {
        return Err(r.broken(why));
    }
    Ok((r.steps, r.net, next_sigma, cert))
}

/// Every component that both sent and received in the round must have
/// been able to do the two in either order.
fn check_diamonds(r: &Round<'_>) -> Result<usize, AdversaryError> {
    let gated = r.d == Dialect::PiAsync;
    let mut count = 0;
    for node in 1..=r.start.len() {
        let mut out = None;
        let mut inp = None;
        for s in &r.steps {
            if let Movers::Pair { input, output } = &s.movers {
                if output.node == node {
                    out.get_or_insert(output.action.clone());
                }
                if input.node == node {
                    inp.get_or_insert(input.action.clone());
                }
            }
        }
        if let (Some(o), Some(i)) = (out, inp) {
            diamond_for_actions(r.start.component(node), &o, &i, gated)
                .map_err(|source| AdversaryError::DiamondFailed { round: r.round, node, source })?;
            count += 1;
        }
    }
    Ok(count)
}
