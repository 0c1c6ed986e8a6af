//! Bounded exhaustive check of the electoral property.
//!
//! The checker explores the steps a network performs on its own (τ and
//! announcements on `o`), identifying states by their canonical key together
//! with what each node has announced so far. Announcements only grow, so
//! every state on a cycle carries the same announcements: a reachable cycle
//! whose announcements are incomplete is an infinite computation that never
//! elects, and a terminal state with incomplete announcements is a finite one.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::lts::{Dialect, LtsError};
use crate::name::Name;
use crate::network::{steps_in_scope, Computation, Movers, Network, NetworkStep, StepScope};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct ExploreBounds {
    pub max_depth: usize,
    pub max_rep_unfoldings: usize,
    pub max_states: usize,
}

impl Default for ExploreBounds {
    fn default() -> Self {
        ExploreBounds { max_depth: 64, max_rep_unfoldings: 8, max_states: 100_000 }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundHit {
    Depth,
    Unfoldings,
    States,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reason {
    NoLeaderOnMaximalRun,
    ConflictingAnnouncements,
    MissingProjectionAnnouncement,
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reason::NoLeaderOnMaximalRun => "no-leader-on-maximal-run",
            Reason::ConflictingAnnouncements => "conflicting-announcements",
            Reason::MissingProjectionAnnouncement => "missing-projection-announcement",
        })
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ElectionVerdict {
    /// Leader announced on each maximal run, keyed by run.
    Electoral { leaders: BTreeMap<usize, Name> },
    NotElectoral {
        witness: Computation,
        reason: Reason,
        /// Index into the witness where a repeating cycle starts.
        cycle_from: Option<usize>,
    },
    Inconclusive { bound: BoundHit },
}

impl ElectionVerdict {
    pub fn is_electoral(&self) -> bool {
        matches!(self, ElectionVerdict::Electoral { .. })
    }

    pub fn is_not_electoral(&self) -> bool {
        matches!(self, ElectionVerdict::NotElectoral { .. })
    }

    pub fn leader_set(&self) -> BTreeSet<Name> {
        match self {
            ElectionVerdict::Electoral { leaders } => leaders.values().cloned().collect(),
            _ => BTreeSet::new(),
        }
    }

    /// Process exit code: 0 electoral, 1 not electoral, 2 inconclusive.
    pub fn exit_code(&self) -> i32 {
        match self {
            ElectionVerdict::Electoral { .. } => 0,
            ElectionVerdict::NotElectoral { .. } => 1,
            ElectionVerdict::Inconclusive { .. } => 2,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize)]
pub struct ExploreStats {
    pub states: usize,
    pub transitions: usize,
    pub terminal: usize,
}

type Announced = BTreeMap<usize, BTreeSet<Name>>;

struct State {
    net: Network,
    announced: Announced,
    depth: usize,
    unfoldings: usize,
    via: Option<(usize, NetworkStep)>,
    /// (successor, index of the step in this state's step list)
    succ: Vec<(usize, usize)>,
}

/// Numerals announced on each node, from a computation.
pub fn announcements(c: &Computation) -> BTreeMap<usize, Vec<Name>> {
    c.announcements()
}

fn status(k: usize, ann: &Announced) -> Result<Option<Name>, Reason> {
    let all: BTreeSet<&Name> = ann.values().flatten().collect();
    if all.len() > 1 {
        return Err(Reason::ConflictingAnnouncements);
    }
    let Some(n) = all.into_iter().next() else {
        return Err(Reason::NoLeaderOnMaximalRun);
    };
    if (1..=k).all(|i| ann.get(&i).is_some_and(|s| !s.is_empty())) {
        Ok(Some(n.clone()))
    } else {
        Err(Reason::MissingProjectionAnnouncement)
    }
}

fn key(net: &Network, ann: &Announced) -> String {
    let mut s = net.state_key();
    for (i, ns) in ann {
        if !ns.is_empty() {
            let v: Vec<&str> = ns.iter().map(Name::as_str).collect();
            s.push_str(&format!(" @{i}:{}", v.join(",")));
        }
    }
    s
}

/// Decides whether `net` is an electoral system, within `bounds`.
pub fn is_electoral(net: &Network, d: Dialect, bounds: ExploreBounds) -> Result<ElectionVerdict, LtsError> {
    is_electoral_with_stats(net, d, bounds).map(|(v, _)| v)
}

pub fn is_electoral_with_stats(
    net: &Network,
    d: Dialect,
    bounds: ExploreBounds,
) -> Result<(ElectionVerdict, ExploreStats), LtsError> {
    let k = net.len();
    let mut states: Vec<State> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let root_ann: Announced = (1..=k).map(|i| (i, BTreeSet::new())).collect();
    index.insert(key(net, &root_ann), 0);
    states.push(State { net: net.clone(), announced: root_ann, depth: 0, unfoldings: 0, via: None, succ: Vec::new() });

    let mut stats = ExploreStats::default();
    let mut queue = VecDeque::from([0usize]);
    let mut bound_hit: Option<BoundHit> = None;
    let mut leaders: BTreeMap<usize, Name> = BTreeMap::new();

    while let Some(s) = queue.pop_front() {
        if states[s].depth >= bounds.max_depth {
            bound_hit.get_or_insert(BoundHit::Depth);
            continue;
        }
        let steps = steps_in_scope(&states[s].net, d, StepScope::Internal)?;
        if steps.is_empty() {
            stats.terminal += 1;
            match status(k, &states[s].announced) {
                Ok(Some(n)) => {
                    leaders.insert(s, n);
                }
                Ok(None) => unreachable!(),
                Err(reason) => {
                    stats.states = states.len();
                    return Ok((
                        ElectionVerdict::NotElectoral { witness: path_to(&states, s), reason, cycle_from: None },
                        stats,
                    ));
                }
            }
            continue;
        }
        for (si, step) in steps.into_iter().enumerate() {
            stats.transitions += 1;
            let unfoldings = states[s].unfoldings + step.rep_uses();
            if unfoldings > bounds.max_rep_unfoldings {
                bound_hit.get_or_insert(BoundHit::Unfoldings);
                continue;
            }
            let mut announced = states[s].announced.clone();
            if let (Some(n), Movers::Single(h)) = (step.label.announcement(), &step.movers) {
                announced.entry(h.node).or_default().insert(n.clone());
            }
            let conflict = matches!(status(k, &announced), Err(Reason::ConflictingAnnouncements));
            let kk = key(&step.post, &announced);
            let t = match index.get(&kk) {
                Some(&t) => t,
                None => {
                    if states.len() >= bounds.max_states {
                        bound_hit.get_or_insert(BoundHit::States);
                        continue;
                    }
                    let t = states.len();
                    index.insert(kk, t);
                    states.push(State {
                        net: step.post.clone(),
                        announced,
                        depth: states[s].depth + 1,
                        unfoldings,
                        via: Some((s, step)),
                        succ: Vec::new(),
                    });
                    if conflict {
                        stats.states = states.len();
                        return Ok((
                            ElectionVerdict::NotElectoral {
                                witness: path_to(&states, t),
                                reason: Reason::ConflictingAnnouncements,
                                cycle_from: None,
                            },
                            stats,
                        ));
                    }
                    queue.push_back(t);
                    t
                }
            };
            states[s].succ.push((t, si));
        }
    }
    stats.states = states.len();

    let comp = sccs(&states);
    if let Some((reason, witness, cycle_from)) = bad_cycle(&states, &comp, k, d) {
        return Ok((ElectionVerdict::NotElectoral { witness, reason, cycle_from: Some(cycle_from) }, stats));
    }
    if let Some(bound) = bound_hit {
        return Ok((ElectionVerdict::Inconclusive { bound }, stats));
    }
    // every cycle left is complete; name its runs after the cycle's entry
    for (s, st) in states.iter().enumerate() {
        if is_cyclic(&states, &comp, s) {
            if let Ok(Some(n)) = status(k, &st.announced) {
                leaders.entry(s).or_insert(n);
            }
        }
    }
    Ok((ElectionVerdict::Electoral { leaders }, stats))
}

fn path_to(states: &[State], mut s: usize) -> Computation {
    let mut steps = Vec::new();
    while let Some((p, step)) = &states[s].via {
        steps.push(step.clone());
        s = *p;
    }
    steps.reverse();
    Computation { start: states[0].net.clone(), steps }
}

/// Strongly connected components (Tarjan, iterative).
fn sccs(states: &[State]) -> Vec<usize> {
    let n = states.len();
    let mut comp = vec![usize::MAX; n];
    let mut idx = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut counter = 0;
    let mut ncomp = 0;
    for root in 0..n {
        if idx[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        idx[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut i)) = call.last_mut() {
            if *i < states[v].succ.len() {
                let w = states[v].succ[*i].0;
                *i += 1;
                if idx[w] == usize::MAX {
                    idx[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(idx[w]);
                }
            } else {
                call.pop();
                if let Some(&(u, _)) = call.last() {
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == idx[v] {
                    while let Some(w) = stack.pop() {
                        on_stack[w] = false;
                        comp[w] = ncomp;
                        if w == v {
                            break;
                        }
                    }
                    ncomp += 1;
                }
            }
        }
    }
    comp
}

fn is_cyclic(states: &[State], comp: &[usize], s: usize) -> bool {
    states[s].succ.iter().any(|&(t, _)| t == s) || states[s].succ.iter().any(|&(t, _)| comp[t] == comp[s])
}

fn bad_cycle(states: &[State], comp: &[usize], k: usize, d: Dialect) -> Option<(Reason, Computation, usize)> {
    for (s, st) in states.iter().enumerate() {
        if !is_cyclic(states, comp, s) {
            continue;
        }
        let Err(reason) = status(k, &st.announced) else {
            continue;
        };
        // the cycle from s back to s, inside its component
        let mut prefix = path_to(states, s);
        let cycle_from = prefix.steps.len();
        let cycle = cycle_through(states, comp, s);
        let mut cur = prefix.last().clone();
        for si in cycle {
            let step = steps_in_scope(&cur, d, StepScope::Internal).ok().and_then(|mut v| {
                (si < v.len()).then(|| v.swap_remove(si))
            });
            match step {
                Some(step) => {
                    cur = step.post.clone();
                    prefix.push(step);
                }
                None => break,
            }
        }
        return Some((reason, prefix, cycle_from));
    }
    None
}

/// Step indices along a shortest cycle from `s` back to itself.
fn cycle_through(states: &[State], comp: &[usize], s: usize) -> Vec<usize> {
    let mut parent: HashMap<usize, (usize, usize)> = HashMap::new();
    let mut queue = VecDeque::from([s]);
    while let Some(v) = queue.pop_front() {
        for &(w, si) in &states[v].succ {
            if comp[w] != comp[s] {
                continue;
            }
            if w == s {
                let mut edges = vec![si];
                let mut cur = v;
                while cur != s {
                    let (p, pi) = parent[&cur];
                    edges.push(pi);
                    cur = p;
                }
                edges.reverse();
                return edges;
            }
            if let std::collections::hash_map::Entry::Vacant(e) = parent.entry(w) {
                e.insert((v, si));
                queue.push_back(w);
            }
        }
    }
    Vec::new()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(s: &str) -> ElectionVerdict {
        is_electoral(&Network::parse(s).unwrap(), Dialect::Pi, ExploreBounds::default()).unwrap()
    }

    #[test]
    fn two_node_election_is_electoral() {
        let v = check("%ids 0\nx_0!(y).o!0 + x_1?(y).o!1\n|| x_1!(y).o!1 + x_0?(y).o!0\n");
        assert!(v.is_electoral(), "{v:?}");
        assert_eq!(v.leader_set(), BTreeSet::from([Name::new("0"), Name::new("1")]));
        assert_eq!(v.exit_code(), 0);
    }

    #[test]
    fn conflicting_announcements() {
        match check("o!1 || o!2") {
            ElectionVerdict::NotElectoral { reason, witness, .. } => {
                assert_eq!(reason, Reason::ConflictingAnnouncements);
                assert_eq!(witness.steps.len(), 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn silent_networks_elect_nobody() {
        match check("0 || 0") {
            ElectionVerdict::NotElectoral { reason, witness, .. } => {
                assert_eq!(reason, Reason::NoLeaderOnMaximalRun);
                assert!(witness.steps.is_empty());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn partial_announcement() {
        match check("o!1 || 0") {
            ElectionVerdict::NotElectoral { reason, .. } => assert_eq!(reason, Reason::MissingProjectionAnnouncement),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn agreeing_constants_are_electoral() {
        assert!(check("o!1 || o!1").is_electoral());
    }

    #[test]
    fn divergence_without_leader_is_a_lasso() {
        let net = Network::parse("!tau.0 || o!1").unwrap();
        let bounds = ExploreBounds { max_rep_unfoldings: 100, ..ExploreBounds::default() };
        match is_electoral(&net, Dialect::Pi, bounds).unwrap() {
            ElectionVerdict::NotElectoral { cycle_from, .. } => assert!(cycle_from.is_some()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bounds_give_inconclusive() {
        let net = Network::parse("!tau.0 || o!1").unwrap();
        let bounds = ExploreBounds { max_rep_unfoldings: 0, ..ExploreBounds::default() };
        // the only cycle needs an unfolding, so nothing bad is seen
        assert!(matches!(
            is_electoral(&net, Dialect::Pi, bounds).unwrap(),
            ElectionVerdict::Inconclusive { bound: BoundHit::Unfoldings }
        ));
        let deep = Network::parse("tau.tau.tau.o!1 || o!1").unwrap();
        let shallow = ExploreBounds { max_depth: 2, ..ExploreBounds::default() };
        assert!(matches!(is_electoral(&deep, Dialect::Pi, shallow).unwrap(), ElectionVerdict::Inconclusive { .. }));
        assert!(is_electoral(&deep, Dialect::Pi, ExploreBounds::default()).unwrap().is_electoral());
    }
}
