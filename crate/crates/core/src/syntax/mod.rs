//! Process terms, binding structure and renaming.

mod congruence;
mod parse;
mod print;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::name::Name;

pub use congruence::{normal_form, reduced_normal_form, struct_congruent, symmetry_key};
pub use parse::{parse, parse_network_text, NetworkText, ParseError};
pub use print::write_process;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Prefix {
    /// `x?(y)`: receive on `channel`, binding `formal` in the continuation.
    Input { channel: Name, formal: Name },
    /// `x!y`
    Output { channel: Name, datum: Name },
    Tau,
}

/// A term of the pi-calculus. Inaction is the empty sum.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Process {
    Sum(Vec<(Prefix, Process)>),
    /// The asynchronous output particle `x!y`.
    Out(Name, Name),
    New(Name, Box<Process>),
    Par(Box<Process>, Box<Process>),
    Rep(Box<Process>),
}

impl Process {
    pub fn nil() -> Self {
        Process::Sum(Vec::new())
    }

    pub fn is_nil(&self) -> bool {
        matches!(self, Process::Sum(b) if b.is_empty())
    }

    pub fn prefixed(prefix: Prefix, cont: Process) -> Self {
        Process::Sum(vec![(prefix, cont)])
    }

    pub fn input(channel: impl Into<Name>, formal: impl Into<Name>, cont: Process) -> Self {
        Process::prefixed(Prefix::Input { channel: channel.into(), formal: formal.into() }, cont)
    }

    pub fn output(channel: impl Into<Name>, datum: impl Into<Name>, cont: Process) -> Self {
        Process::prefixed(Prefix::Output { channel: channel.into(), datum: datum.into() }, cont)
    }

    pub fn tau(cont: Process) -> Self {
        Process::prefixed(Prefix::Tau, cont)
    }

    pub fn out(channel: impl Into<Name>, datum: impl Into<Name>) -> Self {
        Process::Out(channel.into(), datum.into())
    }

    pub fn new_name(bound: impl Into<Name>, body: Process) -> Self {
        Process::New(bound.into(), Box::new(body))
    }

    pub fn par(left: Process, right: Process) -> Self {
        Process::Par(Box::new(left), Box::new(right))
    }

    /// Right-nested parallel composition; `0` for an empty list.
    pub fn par_all(mut parts: Vec<Process>) -> Self {
        let Some(mut acc) = parts.pop() else {
            return Process::nil();
        };
        while let Some(p) = parts.pop() {
            acc = Process::par(p, acc);
        }
        acc
    }

    pub fn rep(body: Process) -> Self {
        Process::Rep(Box::new(body))
    }

    /// Number of nodes in the syntax tree.
    pub fn size(&self) -> usize {
        match self {
            Process::Sum(bs) => 1 + bs.iter().map(|(_, p)| p.size()).sum::<usize>(),
            Process::Out(..) => 1,
            Process::New(_, p) | Process::Rep(p) => 1 + p.size(),
            Process::Par(l, r) => 1 + l.size() + r.size(),
        }
    }

    /// The operator skeleton with all names erased.
    pub fn shape(&self) -> String {
        let mut out = String::new();
        shape_into(self, &mut out);
        out
    }
}

fn shape_into(p: &Process, out: &mut String) {
    match p {
        Process::Sum(bs) => {
            out.push_str("S(");
            for (pre, cont) in bs {
                out.push(match pre {
                    Prefix::Input { .. } => 'i',
                    Prefix::Output { .. } => 'o',
                    Prefix::Tau => 't',
                });
                shape_into(cont, out);
            }
            out.push(')');
        }
        Process::Out(..) => out.push('O'),
        Process::New(_, b) => {
            out.push('N');
            shape_into(b, out);
        }
        Process::Par(l, r) => {
            out.push_str("P(");
            shape_into(l, out);
            out.push(',');
            shape_into(r, out);
            out.push(')');
        }
        Process::Rep(b) => {
            out.push('R');
            shape_into(b, out);
        }
    }
}

impl fmt::Display for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_process(self, &mut s, &|n: &Name| n.as_str().to_owned());
        f.write_str(&s)
    }
}

impl fmt::Display for Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prefix::Input { channel, formal } => write!(f, "{channel}?({formal})"),
            Prefix::Output { channel, datum } => write!(f, "{channel}!{datum}"),
            Prefix::Tau => f.write_str("tau"),
        }
    }
}

/// Free names of a process.
pub fn free_names(p: &Process) -> BTreeSet<Name> {
    free_names_ordered(p).into_iter().collect()
}

/// Free names in order of first occurrence (leftmost-outermost).
pub fn free_names_ordered(p: &Process) -> Vec<Name> {
    let mut out = Vec::new();
    let mut bound = Vec::new();
    collect_free(p, &mut bound, &mut out);
    out
}

fn collect_free(p: &Process, bound: &mut Vec<Name>, out: &mut Vec<Name>) {
    let note = |n: &Name, bound: &Vec<Name>, out: &mut Vec<Name>| {
        if !bound.contains(n) && !out.contains(n) {
            out.push(n.clone());
        }
    };
    match p {
        Process::Sum(bs) => {
            for (pre, cont) in bs {
                match pre {
                    Prefix::Input { channel, formal } => {
                        note(channel, bound, out);
                        bound.push(formal.clone());
                        collect_free(cont, bound, out);
                        bound.pop();
                    }
                    Prefix::Output { channel, datum } => {
                        note(channel, bound, out);
                        note(datum, bound, out);
                        collect_free(cont, bound, out);
                    }
                    Prefix::Tau => collect_free(cont, bound, out),
                }
            }
        }
        Process::Out(x, y) => {
            note(x, bound, out);
            note(y, bound, out);
        }
        Process::New(x, body) => {
            bound.push(x.clone());
            collect_free(body, bound, out);
            bound.pop();
        }
        Process::Par(l, r) => {
            collect_free(l, bound, out);
            collect_free(r, bound, out);
        }
        Process::Rep(b) => collect_free(b, bound, out),
    }
}

pub fn occurs_free(n: &Name, p: &Process) -> bool {
    match p {
        Process::Sum(bs) => bs.iter().any(|(pre, cont)| match pre {
            Prefix::Input { channel, formal } => channel == n || (formal != n && occurs_free(n, cont)),
            Prefix::Output { channel, datum } => channel == n || datum == n || occurs_free(n, cont),
            Prefix::Tau => occurs_free(n, cont),
        }),
        Process::Out(x, y) => x == n || y == n,
        Process::New(x, body) => x != n && occurs_free(n, body),
        Process::Par(l, r) => occurs_free(n, l) || occurs_free(n, r),
        Process::Rep(b) => occurs_free(n, b),
    }
}

/// A finite partial map on names, the identity outside its domain.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Renaming {
    map: BTreeMap<Name, Name>,
}

impl Renaming {
    pub fn identity() -> Self {
        Renaming::default()
    }

    pub fn single(from: Name, to: Name) -> Self {
        let mut r = Renaming::default();
        r.insert(from, to);
        r
    }

    pub fn from_pairs<I, A, B>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<Name>,
        B: Into<Name>,
    {
        let mut r = Renaming::default();
        for (a, b) in pairs {
            r.insert(a.into(), b.into());
        }
        r
    }

    pub fn insert(&mut self, from: Name, to: Name) {
        if from == to {
            self.map.remove(&from);
        } else {
            self.map.insert(from, to);
        }
    }

    pub fn apply(&self, n: &Name) -> Name {
        self.map.get(n).cloned().unwrap_or_else(|| n.clone())
    }

    pub fn is_identity(&self) -> bool {
        self.map.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Name, &Name)> {
        self.map.iter()
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Renaming) -> Renaming {
        let mut out = Renaming::default();
        for (k, v) in &other.map {
            out.insert(k.clone(), self.apply(v));
        }
        for (k, v) in &self.map {
            if !other.map.contains_key(k) {
                out.insert(k.clone(), v.clone());
            }
        }
        out
    }

    /// Whether the map restricted to `names` is injective.
    pub fn is_injective_on<'a>(&self, names: impl IntoIterator<Item = &'a Name>) -> bool {
        let mut seen = BTreeSet::new();
        names.into_iter().all(|n| seen.insert(self.apply(n)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenamingError {
    #[error("renaming is not injective on the free names: {0} and {1} both map to {2}")]
    NotInjective(Name, Name, Name),
}

/// Capture-avoiding substitution `p{y/x}`.
pub fn substitute(p: &Process, x: &Name, y: &Name) -> Process {
    if x == y {
        return p.clone();
    }
    rename(p, &Renaming::single(x.clone(), y.clone()), false)
}

/// Simultaneous capture-avoiding renaming. With `refresh_all`, every binder is
/// renamed to a fresh name regardless of clashes.
pub(crate) fn rename(p: &Process, sigma: &Renaming, refresh_all: bool) -> Process {
    let targets: BTreeSet<Name> = sigma.map.values().cloned().collect();
    let mut env: Vec<(Name, Name)> = Vec::new();
    rename_in(p, sigma, &targets, refresh_all, &mut env)
}

fn lookup(n: &Name, sigma: &Renaming, env: &[(Name, Name)]) -> Name {
    for (from, to) in env.iter().rev() {
        if from == n {
            return to.clone();
        }
    }
    sigma.apply(n)
}

fn bind(b: &Name, targets: &BTreeSet<Name>, refresh_all: bool) -> Name {
    if refresh_all || targets.contains(b) {
        Name::fresh(b)
    } else {
        b.clone()
    }
}

fn rename_in(
    p: &Process,
    sigma: &Renaming,
    targets: &BTreeSet<Name>,
    refresh_all: bool,
    env: &mut Vec<(Name, Name)>,
) -> Process {
    match p {
        Process::Sum(bs) => Process::Sum(
            bs.iter()
                .map(|(pre, cont)| match pre {
                    Prefix::Input { channel, formal } => {
                        let channel = lookup(channel, sigma, env);
                        let fresh = bind(formal, targets, refresh_all);
                        env.push((formal.clone(), fresh.clone()));
                        let cont = rename_in(cont, sigma, targets, refresh_all, env);
                        env.pop();
                        (Prefix::Input { channel, formal: fresh }, cont)
                    }
                    Prefix::Output { channel, datum } => (
                        Prefix::Output { channel: lookup(channel, sigma, env), datum: lookup(datum, sigma, env) },
                        rename_in(cont, sigma, targets, refresh_all, env),
                    ),
                    Prefix::Tau => (Prefix::Tau, rename_in(cont, sigma, targets, refresh_all, env)),
                })
                .collect(),
        ),
        Process::Out(x, y) => Process::Out(lookup(x, sigma, env), lookup(y, sigma, env)),
        Process::New(x, body) => {
            let fresh = bind(x, targets, refresh_all);
            env.push((x.clone(), fresh.clone()));
            let body = rename_in(body, sigma, targets, refresh_all, env);
            env.pop();
            Process::New(fresh, Box::new(body))
        }
        Process::Par(l, r) => Process::par(
            rename_in(l, sigma, targets, refresh_all, env),
            rename_in(r, sigma, targets, refresh_all, env),
        ),
        Process::Rep(b) => Process::rep(rename_in(b, sigma, targets, refresh_all, env)),
    }
}

/// σ-renaming: refresh every bound name, then map free names through `sigma`.
pub fn apply_renaming(sigma: &Renaming, p: &Process) -> Result<Process, RenamingError> {
    let fns = free_names_ordered(p);
    let mut seen: BTreeMap<Name, Name> = BTreeMap::new();
    for n in &fns {
        let image = sigma.apply(n);
        if let Some(prev) = seen.insert(image.clone(), n.clone()) {
            return Err(RenamingError::NotInjective(prev, n.clone(), image));
        }
    }
    Ok(rename(p, sigma, true))
}

/// Renames every binder to `#k`, numbering binders in leftmost-outermost
/// visit order.
pub fn canonical_binders(p: &Process) -> Process {
    let mut env = Vec::new();
    let mut counter = 0usize;
    canon_in(p, &mut env, &mut counter)
}

fn canon_in(p: &Process, env: &mut Vec<(Name, Name)>, counter: &mut usize) -> Process {
    let look = |n: &Name, env: &Vec<(Name, Name)>| -> Name {
        env.iter().rev().find(|(from, _)| from == n).map(|(_, to)| to.clone()).unwrap_or_else(|| n.clone())
    };
    match p {
        Process::Sum(bs) => Process::Sum(
            bs.iter()
                .map(|(pre, cont)| match pre {
                    Prefix::Input { channel, formal } => {
                        let channel = look(channel, env);
                        let c = Name::canonical(*counter);
                        *counter += 1;
                        env.push((formal.clone(), c.clone()));
                        let cont = canon_in(cont, env, counter);
                        env.pop();
                        (Prefix::Input { channel, formal: c }, cont)
                    }
                    Prefix::Output { channel, datum } => {
                        let pre = Prefix::Output { channel: look(channel, env), datum: look(datum, env) };
                        (pre, canon_in(cont, env, counter))
                    }
                    Prefix::Tau => (Prefix::Tau, canon_in(cont, env, counter)),
                })
                .collect(),
        ),
        Process::Out(x, y) => Process::Out(look(x, env), look(y, env)),
        Process::New(x, body) => {
            let c = Name::canonical(*counter);
            *counter += 1;
            env.push((x.clone(), c.clone()));
            let body = canon_in(body, env, counter);
            env.pop();
            Process::New(c, Box::new(body))
        }
        Process::Par(l, r) => {
            let l = canon_in(l, env, counter);
            let r = canon_in(r, env, counter);
            Process::par(l, r)
        }
        Process::Rep(b) => Process::rep(canon_in(b, env, counter)),
    }
}

pub fn alpha_equiv(p: &Process, q: &Process) -> bool {
    canonical_binders(p) == canonical_binders(q)
}

#[cfg(test)]
mod tests;
