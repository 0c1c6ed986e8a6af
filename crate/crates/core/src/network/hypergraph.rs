use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Network, NetworkError};
use crate::name::Name;
use crate::syntax::{apply_renaming, free_names, symmetry_key, Renaming};

pub const MAX_NODES: usize = 8;
pub const MAX_AUTOMORPHISMS: usize = 100_000;

/// Nodes `1..=nodes`; each arc connects the nodes whose component has it free.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Hypergraph {
    pub nodes: usize,
    pub arcs: BTreeMap<Name, BTreeSet<usize>>,
}

impl Hypergraph {
    pub fn type_of(&self, x: &Name) -> Option<&BTreeSet<usize>> {
        self.arcs.get(x)
    }

    /// Every pair of nodes joined by a chain of arcs.
    pub fn is_connected(&self) -> bool {
        if self.nodes == 0 {
            return true;
        }
        let mut seen = BTreeSet::from([1usize]);
        let mut frontier = vec![1usize];
        while let Some(n) = frontier.pop() {
            for t in self.arcs.values().filter(|t| t.contains(&n)) {
                for &m in t {
                    if seen.insert(m) {
                        frontier.push(m);
                    }
                }
            }
        }
        seen.len() == self.nodes
    }
}

/// Arcs are the free names other than `o` and numerals.
pub fn hypergraph_of(net: &Network) -> Hypergraph {
    let mut arcs: BTreeMap<Name, BTreeSet<usize>> = BTreeMap::new();
    for (i, c) in net.components.iter().enumerate() {
        for n in free_names(c) {
            if !n.is_output_channel() && !n.is_numeral() {
                arcs.entry(n).or_default().insert(i + 1);
            }
        }
    }
    Hypergraph { nodes: net.len(), arcs }
}

/// A node permutation paired with a name permutation. Names outside
/// `arc_map` are fixed.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Automorphism {
    /// `node_map[i - 1]` is the image of node `i`.
    pub node_map: Vec<usize>,
    pub arc_map: BTreeMap<Name, Name>,
}

impl Automorphism {
    pub fn identity(k: usize) -> Self {
        Automorphism { node_map: (1..=k).collect(), arc_map: BTreeMap::new() }
    }

    pub fn new(node_map: Vec<usize>, arcs: impl IntoIterator<Item = (Name, Name)>) -> Self {
        let arc_map = arcs.into_iter().filter(|(a, b)| a != b).collect();
        Automorphism { node_map, arc_map }
    }

    pub fn k(&self) -> usize {
        self.node_map.len()
    }

    pub fn node(&self, i: usize) -> usize {
        self.node_map[i - 1]
    }

    pub fn arc(&self, x: &Name) -> Name {
        self.arc_map.get(x).cloned().unwrap_or_else(|| x.clone())
    }

    /// Adds `from ↦ to` to the name map.
    pub fn enrich(&mut self, from: Name, to: Name) {
        if from != to {
            self.arc_map.insert(from, to);
        }
    }

    pub fn is_identity(&self) -> bool {
        self.node_map.iter().enumerate().all(|(i, &n)| n == i + 1) && self.arc_map.is_empty()
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Automorphism) -> Automorphism {
        let node_map = other.node_map.iter().map(|&n| self.node(n)).collect();
        let mut arcs: BTreeSet<Name> = self.arc_map.keys().cloned().collect();
        arcs.extend(other.arc_map.keys().cloned());
        Automorphism::new(node_map, arcs.into_iter().map(|x| {
            let y = self.arc(&other.arc(&x));
            (x, y)
        }))
    }

    pub fn inverse(&self) -> Automorphism {
        let mut node_map = vec![0; self.k()];
        for (i, &n) in self.node_map.iter().enumerate() {
            node_map[n - 1] = i + 1;
        }
        Automorphism::new(node_map, self.arc_map.iter().map(|(a, b)| (b.clone(), a.clone())))
    }

    pub fn power(&self, m: usize) -> Automorphism {
        let mut acc = Automorphism::identity(self.k());
        for _ in 0..m {
            acc = self.compose(&acc);
        }
        acc
    }

    pub fn is_node_permutation(&self) -> bool {
        let k = self.k();
        let set: BTreeSet<usize> = self.node_map.iter().copied().collect();
        set.len() == k && set.iter().all(|&n| (1..=k).contains(&n))
    }

    /// `[n, σ(n), σ²(n), ...]` until it cycles.
    pub fn orbit(&self, n: usize) -> Vec<usize> {
        let mut out = vec![n];
        let mut cur = self.node(n);
        while cur != n {
            out.push(cur);
            cur = self.node(cur);
        }
        out
    }

    pub fn orbits(&self) -> Vec<Vec<usize>> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for n in 1..=self.k() {
            if seen.insert(n) {
                let o = self.orbit(n);
                seen.extend(o.iter().copied());
                out.push(o);
            }
        }
        out
    }

    pub fn is_single_orbit(&self) -> bool {
        self.k() > 0 && self.orbit(1).len() == self.k()
    }

    pub fn is_well_balanced(&self) -> bool {
        let sizes: BTreeSet<usize> = self.orbits().iter().map(Vec::len).collect();
        sizes.len() <= 1
    }

    /// The renaming applied to components: arcs by the name map, identifier
    /// numerals by the node map.
    pub fn name_renaming(&self, net: &Network) -> Renaming {
        let mut r = Renaming::from_pairs(self.arc_map.iter().map(|(a, b)| (a.clone(), b.clone())));
        for i in 1..=self.k().min(net.ids.len()) {
            let (from, to) = (&net.ids[i - 1], &net.ids[self.node(i) - 1]);
            if from.len() == to.len() {
                for (a, b) in from.iter().zip(to) {
                    r.insert(a.clone(), b.clone());
                }
            }
        }
        r
    }
}

impl fmt::Display for Automorphism {
    /// `2 1 | x_0>x_1 x_1>x_0`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let nodes: Vec<String> = self.node_map.iter().map(|n| n.to_string()).collect();
        write!(f, "{}", nodes.join(" "))?;
        if !self.arc_map.is_empty() {
            let arcs: Vec<String> = self.arc_map.iter().map(|(a, b)| format!("{a}>{b}")).collect();
            write!(f, " | {}", arcs.join(" "))?;
        }
        Ok(())
    }
}

impl FromStr for Automorphism {
    type Err = NetworkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |m: String| NetworkError::BadAutomorphism(m);
        let (nodes, arcs) = s.split_once('|').unwrap_or((s, ""));
        let node_map: Vec<usize> = nodes
            .split_whitespace()
            .map(|w| w.parse::<usize>().map_err(|_| bad(format!("bad node `{w}`"))))
            .collect::<Result<_, _>>()?;
        if node_map.is_empty() {
            return Err(bad("no node images".into()));
        }
        let mut pairs = Vec::new();
        for w in arcs.split_whitespace() {
            let (a, b) = w.split_once('>').ok_or_else(|| bad(format!("bad arc pair `{w}`")))?;
            if a.is_empty() || b.is_empty() || a.contains('>') || b.contains('>') {
                return Err(bad(format!("bad arc pair `{w}`")));
            }
            pairs.push((Name::new(a), Name::new(b)));
        }
        let sigma = Automorphism::new(node_map, pairs);
        if !sigma.is_node_permutation() {
            return Err(bad(format!("`{}` is not a permutation", nodes.trim())));
        }
        let targets: BTreeSet<&Name> = sigma.arc_map.values().collect();
        if targets.len() != sigma.arc_map.len() {
            return Err(bad("arc map is not injective".into()));
        }
        Ok(sigma)
    }
}

/// All automorphisms of `h`, identity first.
pub fn automorphisms(h: &Hypergraph) -> Result<Vec<Automorphism>, NetworkError> {
    if h.nodes > MAX_NODES {
        return Err(NetworkError::TooManyNodes(h.nodes, MAX_NODES));
    }
    let mut by_type: BTreeMap<BTreeSet<usize>, Vec<Name>> = BTreeMap::new();
    for (x, t) in &h.arcs {
        by_type.entry(t.clone()).or_default().push(x.clone());
    }
    let profile = |n: usize| -> Vec<usize> {
        let mut v: Vec<usize> = h.arcs.values().filter(|t| t.contains(&n)).map(BTreeSet::len).collect();
        v.sort_unstable();
        v
    };
    let profiles: Vec<Vec<usize>> = (1..=h.nodes).map(profile).collect();

    let mut out = Vec::new();
    let mut perm = Vec::new();
    let mut used = vec![false; h.nodes + 1];
    node_perms(h.nodes, &profiles, &mut perm, &mut used, &mut |pi: &[usize]| {
        let image = |t: &BTreeSet<usize>| -> BTreeSet<usize> { t.iter().map(|&n| pi[n - 1]).collect() };
        let mut classes = Vec::new();
        for (t, xs) in &by_type {
            match by_type.get(&image(t)) {
                Some(ys) if ys.len() == xs.len() => classes.push((xs.clone(), ys.clone())),
                _ => return Ok(()),
            }
        }
        let mut acc: Vec<Vec<(Name, Name)>> = vec![Vec::new()];
        for (xs, ys) in classes {
            let mut next = Vec::new();
            for partial in &acc {
                for p in permutations(&ys) {
                    let mut v = partial.clone();
                    v.extend(xs.iter().cloned().zip(p));
                    next.push(v);
                    if next.len() + out.len() > MAX_AUTOMORPHISMS {
                        return Err(NetworkError::TooManyAutomorphisms(MAX_AUTOMORPHISMS));
                    }
                }
            }
            acc = next;
        }
        for pairs in acc {
            out.push(Automorphism::new(pi.to_vec(), pairs));
        }
        Ok(())
    })?;
    Ok(out)
}

fn node_perms(
    k: usize,
    profiles: &[Vec<usize>],
    perm: &mut Vec<usize>,
    used: &mut [bool],
    emit: &mut dyn FnMut(&[usize]) -> Result<(), NetworkError>,
) -> Result<(), NetworkError> {
    if perm.len() == k {
        return emit(perm);
    }
    let n = perm.len() + 1;
    for m in 1..=k {
        if !used[m] && profiles[n - 1] == profiles[m - 1] {
            used[m] = true;
            perm.push(m);
            node_perms(k, profiles, perm, used, emit)?;
            perm.pop();
            used[m] = false;
        }
    }
    Ok(())
}

/// Permutations in lexicographic order of positions.
fn permutations<T: Clone>(items: &[T]) -> Vec<Vec<T>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head.clone());
            out.push(tail);
        }
    }
    out
}

/// Why `sigma` fails to be a symmetry of `net`, if it does.
pub fn symmetry_failure(net: &Network, sigma: &Automorphism) -> Option<String> {
    if sigma.k() != net.len() || !sigma.is_node_permutation() {
        return Some(format!("node map {:?} is not a permutation of 1..{}", sigma.node_map, net.len()));
    }
    let h = hypergraph_of(net);
    for (x, t) in &h.arcs {
        let y = sigma.arc(x);
        let expected: BTreeSet<usize> = t.iter().map(|&n| sigma.node(n)).collect();
        match h.arcs.get(&y) {
            Some(ty) if *ty == expected => {}
            Some(ty) => return Some(format!("arc {x}:{t:?} maps to {y}:{ty:?}, expected {expected:?}")),
            None => return Some(format!("arc {x} maps to {y}, which is not an arc")),
        }
    }
    let hoisted: BTreeSet<&Name> = net.hoisted.iter().collect();
    for hname in &net.hoisted {
        if h.arcs.contains_key(hname) && !hoisted.contains(&sigma.arc(hname)) {
            return Some(format!("restricted name {hname} maps to an unrestricted name"));
        }
    }
    let rho = sigma.name_renaming(net);
    for i in 1..=net.len() {
        let image = match apply_renaming(&rho, net.component(i)) {
            Ok(p) => p,
            Err(e) => return Some(e.to_string()),
        };
        let j = sigma.node(i);
        if symmetry_key(&image) != symmetry_key(net.component(j)) {
            return Some(format!("component {j} is not the renaming of component {i}"));
        }
    }
    None
}

pub fn is_symmetric(net: &Network, sigma: &Automorphism) -> bool {
    symmetry_failure(net, sigma).is_none()
}
