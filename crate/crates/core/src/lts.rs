//! Early-instantiation transition system.
//!
//! Steps are derived structurally. Inputs are computed symbolically (a
//! formal plus a residual with the formal free) and instantiated with concrete
//! names only at the top, so a process with many inputs does not multiply
//! its branching before it has to.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::name::{is_identifier, is_numeral, Name};
use crate::syntax::{free_names, occurs_free, substitute, Prefix, Process};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Action {
    Input { channel: Name, received: Name },
    FreeOutput { channel: Name, datum: Name },
    BoundOutput { channel: Name, datum: Name },
    Tau,
}

impl Action {
    pub fn bound_names(&self) -> BTreeSet<Name> {
        match self {
            Action::Input { received, .. } => [received.clone()].into(),
            Action::BoundOutput { datum, .. } => [datum.clone()].into(),
            _ => BTreeSet::new(),
        }
    }

    /// All names occurring in the action.
    pub fn names(&self) -> BTreeSet<Name> {
        match self {
            Action::Input { channel, received: d }
            | Action::FreeOutput { channel, datum: d }
            | Action::BoundOutput { channel, datum: d } => [channel.clone(), d.clone()].into(),
            Action::Tau => BTreeSet::new(),
        }
    }

    pub fn channel(&self) -> Option<&Name> {
        match self {
            Action::Input { channel, .. }
            | Action::FreeOutput { channel, .. }
            | Action::BoundOutput { channel, .. } => Some(channel),
            Action::Tau => None,
        }
    }

    pub fn datum(&self) -> Option<&Name> {
        match self {
            Action::Input { received: d, .. } | Action::FreeOutput { datum: d, .. } | Action::BoundOutput { datum: d, .. } => {
                Some(d)
            }
            Action::Tau => None,
        }
    }

    pub fn is_output(&self) -> bool {
        matches!(self, Action::FreeOutput { .. } | Action::BoundOutput { .. })
    }

    pub fn is_input(&self) -> bool {
        matches!(self, Action::Input { .. })
    }

    /// A free output on `o`.
    pub fn announcement(&self) -> Option<&Name> {
        match self {
            Action::FreeOutput { channel, datum } if channel.is_output_channel() => Some(datum),
            _ => None,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Input { channel, received } => write!(f, "{channel}?({received})"),
            Action::FreeOutput { channel, datum } => write!(f, "{channel}!{datum}"),
            Action::BoundOutput { channel, datum } => write!(f, "{channel}!({datum})"),
            Action::Tau => f.write_str("tau"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed action `{0}`")]
pub struct ActionParseError(pub String);

fn action_name(s: &str) -> Option<Name> {
    let ok = match s.find('#') {
        None => is_identifier(s) || is_numeral(s),
        Some(0) => s.len() > 1 && s[1..].bytes().all(|b| b.is_ascii_alphanumeric()),
        Some(i) => is_identifier(&s[..i]) && is_numeral(&s[i + 1..]),
    };
    ok.then(|| {
        let n = Name::new(s);
        n.reserve();
        n
    })
}

impl FromStr for Action {
    type Err = ActionParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ActionParseError(s.to_owned());
        if s == "tau" {
            return Ok(Action::Tau);
        }
        if let Some((ch, rest)) = s.split_once('?') {
            let inner = rest.strip_prefix('(').and_then(|r| r.strip_suffix(')')).ok_or_else(err)?;
            return Ok(Action::Input {
                channel: action_name(ch).ok_or_else(err)?,
                received: action_name(inner).ok_or_else(err)?,
            });
        }
        if let Some((ch, rest)) = s.split_once('!') {
            let channel = action_name(ch).ok_or_else(err)?;
            if let Some(inner) = rest.strip_prefix('(') {
                let inner = inner.strip_suffix(')').ok_or_else(err)?;
                return Ok(Action::BoundOutput { channel, datum: action_name(inner).ok_or_else(err)? });
            }
            return Ok(Action::FreeOutput { channel, datum: action_name(rest).ok_or_else(err)? });
        }
        Err(err())
    }
}

impl Serialize for Action {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Action {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Dialect {
    #[default]
    Pi,
    PiAsync,
    Ccs,
    PiSeparateChoice,
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dialect::Pi => "pi",
            Dialect::PiAsync => "pi-async",
            Dialect::Ccs => "ccs",
            Dialect::PiSeparateChoice => "pi-separate-choice",
        })
    }
}

impl FromStr for Dialect {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pi" => Ok(Dialect::Pi),
            "pia" | "pi-async" => Ok(Dialect::PiAsync),
            "ccs" => Ok(Dialect::Ccs),
            "sep" | "pi-separate-choice" => Ok(Dialect::PiSeparateChoice),
            other => Err(format!("unknown dialect `{other}` (expected pi, pia, ccs or sep)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LtsError {
    #[error("process is outside the {dialect} fragment: {reason}")]
    Dialect { dialect: Dialect, reason: String },
}

pub fn dialect_check(p: &Process, d: Dialect) -> bool {
    dialect_violation(p, d).is_none()
}

/// The first subterm that `d` rejects, described.
pub fn dialect_violation(p: &Process, d: Dialect) -> Option<String> {
    match p {
        Process::Sum(bs) => {
            let has_input = bs.iter().any(|(pre, _)| matches!(pre, Prefix::Input { .. }));
            let has_other = bs.iter().any(|(pre, _)| !matches!(pre, Prefix::Input { .. }));
            match d {
                Dialect::PiAsync if has_other => return Some(format!("output or tau prefix in `{p}`")),
                Dialect::PiAsync if bs.len() >= 2 => return Some(format!("choice in `{p}`")),
                Dialect::PiSeparateChoice if has_input && has_other => {
                    return Some(format!("mixed choice in `{p}`"))
                }
                _ => {}
            }
            for (pre, cont) in bs {
                if d == Dialect::Ccs {
                    match pre {
                        Prefix::Input { formal, .. } if occurs_free(formal, cont) => {
                            return Some(format!("received name `{formal}` is used in `{p}`"))
                        }
                        Prefix::Output { channel, datum } if !ccs_datum_ok(channel, datum) => {
                            return Some(format!("output `{channel}!{datum}` carries a name"))
                        }
                        _ => {}
                    }
                }
                if let Some(v) = dialect_violation(cont, d) {
                    return Some(v);
                }
            }
            None
        }
        Process::Out(x, y) => {
            (d == Dialect::Ccs && !ccs_datum_ok(x, y)).then(|| format!("output `{x}!{y}` carries a name"))
        }
        Process::New(_, b) | Process::Rep(b) => dialect_violation(b, d),
        Process::Par(l, r) => dialect_violation(l, d).or_else(|| dialect_violation(r, d)),
    }
}

/// CCS outputs carry a fixed dummy: the channel itself. Announcements on `o`
/// carry a numeral.
fn ccs_datum_ok(channel: &Name, datum: &Name) -> bool {
    channel == datum || (channel.is_output_channel() && datum.is_numeral())
}

/// Which rules fired, with branch positions. Enough to re-derive the step.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Derivation {
    /// I-Sum or O/τ-Sum on the given branch.
    Sum(usize),
    Out,
    Open(Box<Derivation>),
    Res(Box<Derivation>),
    ParL(Box<Derivation>),
    ParR(Box<Derivation>),
    Com { input_left: bool, left: Box<Derivation>, right: Box<Derivation> },
    Close { input_left: bool, left: Box<Derivation>, right: Box<Derivation> },
    /// Rep applied to a step of `P | !P`.
    Rep(Box<Derivation>),
}

impl Derivation {
    /// How many times Rep fired.
    pub fn rep_uses(&self) -> usize {
        match self {
            Derivation::Sum(_) | Derivation::Out => 0,
            Derivation::Open(d) | Derivation::Res(d) | Derivation::ParL(d) | Derivation::ParR(d) => d.rep_uses(),
            Derivation::Com { left, right, .. } | Derivation::Close { left, right, .. } => {
                left.rep_uses() + right.rep_uses()
            }
            Derivation::Rep(d) => 1 + d.rep_uses(),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TransitionStep {
    pub source: Process,
    pub action: Action,
    pub target: Process,
    pub derivation: Derivation,
}

/// An output or τ capability.
#[derive(Clone, Debug)]
pub(crate) struct Emit {
    pub action: Action,
    pub target: Process,
    pub derivation: Derivation,
}

/// An input capability: after receiving `z`, the residual is `body{z/formal}`.
/// `formal` is fresh, so wrapping contexts never capture it.
#[derive(Clone, Debug)]
pub struct InputCapability {
    pub channel: Name,
    pub formal: Name,
    pub body: Process,
    pub derivation: Derivation,
}

impl InputCapability {
    pub fn instantiate(&self, received: &Name) -> (Action, Process) {
        (
            Action::Input { channel: self.channel.clone(), received: received.clone() },
            substitute(&self.body, &self.formal, received),
        )
    }
}

#[derive(Default, Debug)]
pub(crate) struct Caps {
    pub emits: Vec<Emit>,
    pub inputs: Vec<InputCapability>,
}

pub(crate) fn caps(p: &Process) -> Caps {
    match p {
        Process::Sum(bs) => {
            let mut c = Caps::default();
            for (i, (pre, cont)) in bs.iter().enumerate() {
                match pre {
                    Prefix::Input { channel, formal } => {
                        let fresh = Name::fresh(formal);
                        c.inputs.push(InputCapability {
                            channel: channel.clone(),
                            formal: fresh.clone(),
                            body: substitute(cont, formal, &fresh),
                            derivation: Derivation::Sum(i),
                        });
                    }
                    Prefix::Output { channel, datum } => c.emits.push(Emit {
                        action: Action::FreeOutput { channel: channel.clone(), datum: datum.clone() },
                        target: cont.clone(),
                        derivation: Derivation::Sum(i),
                    }),
                    Prefix::Tau => c.emits.push(Emit {
                        action: Action::Tau,
                        target: cont.clone(),
                        derivation: Derivation::Sum(i),
                    }),
                }
            }
            c
        }
        Process::Out(x, y) => Caps {
            emits: vec![Emit {
                action: Action::FreeOutput { channel: x.clone(), datum: y.clone() },
                target: Process::nil(),
                derivation: Derivation::Out,
            }],
            inputs: Vec::new(),
        },
        Process::New(w, body) => {
            let inner = caps(body);
            let mut c = Caps::default();
            for e in inner.emits {
                if let Some(e) = wrap_res(w, e) {
                    c.emits.push(e);
                }
            }
            for i in inner.inputs {
                if i.channel != *w {
                    c.inputs.push(InputCapability {
                        body: Process::new_name(w.clone(), i.body),
                        derivation: Derivation::Res(Box::new(i.derivation)),
                        ..i
                    });
                }
            }
            c
        }
        Process::Par(l, r) => par_caps(l, caps(l), r, caps(r), Derivation::ParL, Derivation::ParR),
        Process::Rep(body) => rep_caps(p, body),
    }
}

fn wrap_res(w: &Name, e: Emit) -> Option<Emit> {
    match e.action {
        Action::Tau => Some(Emit {
            action: Action::Tau,
            target: Process::new_name(w.clone(), e.target),
            derivation: Derivation::Res(Box::new(e.derivation)),
        }),
        Action::FreeOutput { ref channel, .. } if channel == w => None,
        Action::FreeOutput { channel, datum } if datum == *w => Some(Emit {
            action: Action::BoundOutput { channel, datum },
            target: e.target,
            derivation: Derivation::Open(Box::new(e.derivation)),
        }),
        Action::FreeOutput { channel, datum } => Some(Emit {
            action: Action::FreeOutput { channel, datum },
            target: Process::new_name(w.clone(), e.target),
            derivation: Derivation::Res(Box::new(e.derivation)),
        }),
        Action::BoundOutput { ref channel, .. } if channel == w => None,
        Action::BoundOutput { channel, datum } => {
            // α-refresh the extruded name if it coincides with the binder
            let (datum, target) = if datum == *w {
                let fresh = Name::fresh(&datum);
                let t = substitute(&e.target, &datum, &fresh);
                (fresh, t)
            } else {
                (datum, e.target)
            };
            Some(Emit {
                action: Action::BoundOutput { channel, datum },
                target: Process::new_name(w.clone(), target),
                derivation: Derivation::Res(Box::new(e.derivation)),
            })
        }
        Action::Input { .. } => unreachable!("inputs are kept symbolic"),
    }
}

/// Refreshes the extruded name of a bound output if it is free in `other`.
fn refresh_extruded(e: Emit, other: &BTreeSet<Name>) -> Emit {
    match e.action {
        Action::BoundOutput { channel, datum } if other.contains(&datum) => {
            let fresh = Name::fresh(&datum);
            Emit {
                target: substitute(&e.target, &datum, &fresh),
                action: Action::BoundOutput { channel, datum: fresh },
                derivation: e.derivation,
            }
        }
        action => Emit { action, ..e },
    }
}

fn par_caps(
    l: &Process,
    lc: Caps,
    r: &Process,
    rc: Caps,
    wrap_l: fn(Box<Derivation>) -> Derivation,
    wrap_r: fn(Box<Derivation>) -> Derivation,
) -> Caps {
    let fn_l = free_names(l);
    let fn_r = free_names(r);
    let mut c = Caps::default();
    for e in &lc.emits {
        let e = refresh_extruded(e.clone(), &fn_r);
        c.emits.push(Emit {
            target: Process::par(e.target, r.clone()),
            derivation: wrap_l(Box::new(e.derivation)),
            action: e.action,
        });
    }
    for e in &rc.emits {
        let e = refresh_extruded(e.clone(), &fn_l);
        c.emits.push(Emit {
            target: Process::par(l.clone(), e.target),
            derivation: wrap_r(Box::new(e.derivation)),
            action: e.action,
        });
    }
    for i in &lc.inputs {
        c.inputs.push(InputCapability {
            body: Process::par(i.body.clone(), r.clone()),
            derivation: wrap_l(Box::new(i.derivation.clone())),
            ..i.clone()
        });
    }
    for i in &rc.inputs {
        c.inputs.push(InputCapability {
            body: Process::par(l.clone(), i.body.clone()),
            derivation: wrap_r(Box::new(i.derivation.clone())),
            ..i.clone()
        });
    }
    c.emits.extend(communications(&lc, &fn_l, &rc, &fn_r, true));
    c.emits.extend(communications(&rc, &fn_r, &lc, &fn_l, false));
    c
}

/// Com and Close between an input of `ins` and an output of `outs`.
/// `input_left` says which side of the parallel the input sits on.
fn communications(
    ins: &Caps,
    fn_in: &BTreeSet<Name>,
    outs: &Caps,
    _fn_out: &BTreeSet<Name>,
    input_left: bool,
) -> Vec<Emit> {
    let mut v = Vec::new();
    for i in &ins.inputs {
        for o in &outs.emits {
            let (channel, datum, bound) = match &o.action {
                Action::FreeOutput { channel, datum } => (channel, datum, false),
                Action::BoundOutput { channel, datum } => (channel, datum, true),
                _ => continue,
            };
            if *channel != i.channel {
                continue;
            }
            let (datum, out_target) = if bound && fn_in.contains(datum) {
                let fresh = Name::fresh(datum);
                (fresh.clone(), substitute(&o.target, datum, &fresh))
            } else {
                (datum.clone(), o.target.clone())
            };
            let (_, in_target) = i.instantiate(&datum);
            let (left, right, dl, dr) = if input_left {
                (in_target, out_target, i.derivation.clone(), o.derivation.clone())
            } else {
                (out_target, in_target, o.derivation.clone(), i.derivation.clone())
            };
            let body = Process::par(left, right);
            let (target, derivation) = if bound {
                (
                    Process::new_name(datum, body),
                    Derivation::Close { input_left, left: Box::new(dl), right: Box::new(dr) },
                )
            } else {
                (body, Derivation::Com { input_left, left: Box::new(dl), right: Box::new(dr) })
            };
            v.push(Emit { action: Action::Tau, target, derivation });
        }
    }
    v
}

/// Steps of `!P`: one unfolding for steps of a single copy, two for a
/// communication between copies.
fn rep_caps(rep: &Process, body: &Process) -> Caps {
    let inner = caps(body);
    let fn_rep = free_names(rep);
    let mut c = Caps::default();
    for e in &inner.emits {
        let e = refresh_extruded(e.clone(), &fn_rep);
        c.emits.push(Emit {
            target: Process::par(e.target, rep.clone()),
            derivation: Derivation::Rep(Box::new(Derivation::ParL(Box::new(e.derivation)))),
            action: e.action,
        });
    }
    for i in &inner.inputs {
        c.inputs.push(InputCapability {
            body: Process::par(i.body.clone(), rep.clone()),
            derivation: Derivation::Rep(Box::new(Derivation::ParL(Box::new(i.derivation.clone())))),
            ..i.clone()
        });
    }
    // copy 1 inputs, copy 2 (the first copy inside the inner !P) outputs
    let second = Caps {
        emits: inner
            .emits
            .iter()
            .filter(|e| e.action.is_output())
            .map(|e| Emit {
                target: Process::par(e.target.clone(), rep.clone()),
                derivation: Derivation::Rep(Box::new(Derivation::ParL(Box::new(e.derivation.clone())))),
                action: e.action.clone(),
            })
            .collect(),
        inputs: Vec::new(),
    };
    for e in communications(&inner, &free_names(body), &second, &fn_rep, true) {
        c.emits.push(Emit { derivation: Derivation::Rep(Box::new(e.derivation)), ..e });
    }
    c
}

/// All output and τ steps of `p`.
pub fn emitting_steps(p: &Process) -> Vec<TransitionStep> {
    caps(p)
        .emits
        .into_iter()
        .map(|e| TransitionStep { source: p.clone(), action: e.action, target: e.target, derivation: e.derivation })
        .collect()
}

pub fn input_capabilities(p: &Process) -> Vec<InputCapability> {
    caps(p).inputs
}

/// All steps of `p`, with early inputs instantiated over `universe`, the free
/// names of `p`, and one fresh name.
pub fn transitions(p: &Process, d: Dialect, universe: &BTreeSet<Name>) -> Result<Vec<TransitionStep>, LtsError> {
    if let Some(reason) = dialect_violation(p, d) {
        return Err(LtsError::Dialect { dialect: d, reason });
    }
    let c = caps(p);
    let mut names: BTreeSet<Name> = universe.clone();
    names.extend(free_names(p));
    let fresh = Name::fresh(&Name::new("v"));
    let mut steps: Vec<TransitionStep> = c
        .emits
        .into_iter()
        .map(|e| TransitionStep { source: p.clone(), action: e.action, target: e.target, derivation: e.derivation })
        .collect();
    for i in &c.inputs {
        for z in names.iter().chain(std::iter::once(&fresh)) {
            let (action, target) = i.instantiate(z);
            steps.push(TransitionStep { source: p.clone(), action, target, derivation: i.derivation.clone() });
        }
    }
    Ok(steps)
}

/// Re-derives a step from its derivation tag. For inputs, `received` gives
/// the instantiation. Bound names in the result may differ from the
/// original run by α.
pub fn rederive(p: &Process, derivation: &Derivation, received: Option<&Name>) -> Option<TransitionStep> {
    let c = caps(p);
    if let Some(z) = received {
        let i = c.inputs.into_iter().find(|i| i.derivation == *derivation)?;
        let (action, target) = i.instantiate(z);
        return Some(TransitionStep { source: p.clone(), action, target, derivation: i.derivation });
    }
    let e = c.emits.into_iter().find(|e| e.derivation == *derivation)?;
    Some(TransitionStep { source: p.clone(), action: e.action, target: e.target, derivation: e.derivation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse, struct_congruent};

    fn p(s: &str) -> Process {
        parse(s).unwrap()
    }

    fn all(s: &str) -> Vec<TransitionStep> {
        transitions(&p(s), Dialect::Pi, &BTreeSet::new()).unwrap()
    }

    #[test]
    fn output_atom() {
        let steps = all("x!y");
        assert_eq!(steps.len(), 1);
        assert_eq!(steps[0].action, Action::FreeOutput { channel: "x".into(), datum: "y".into() });
        assert!(steps[0].target.is_nil());
        assert_eq!(steps[0].derivation, Derivation::Out);
    }

    #[test]
    fn open_needs_distinct_subject() {
        let steps = all("new y. x!y");
        assert_eq!(steps.len(), 1);
        assert!(matches!(steps[0].action, Action::BoundOutput { .. }));
        assert!(matches!(steps[0].derivation, Derivation::Open(_)));
        assert!(all("new y. y!y").is_empty());
    }

    #[test]
    fn res_blocks_the_bound_channel() {
        assert!(all("new x. x?(z).0").is_empty());
        assert_eq!(all("new x. (x!a | x?(z).0)").iter().filter(|s| s.action == Action::Tau).count(), 1);
    }

    #[test]
    fn com_reaches_nil_pair() {
        let steps = all("x!y | x?(w).0");
        let taus: Vec<_> = steps.iter().filter(|s| s.action == Action::Tau).collect();
        assert_eq!(taus.len(), 1);
        assert!(struct_congruent(&taus[0].target, &p("0 | 0")));
    }

    #[test]
    fn close_wraps_in_restriction() {
        let steps = all("new y. x!y | x?(w).w!a");
        let tau = steps.iter().find(|s| s.action == Action::Tau).unwrap();
        assert!(matches!(tau.derivation, Derivation::Close { .. }));
        assert!(struct_congruent(&tau.target, &p("new q. (0 | q!a)")));
    }

    #[test]
    fn extrusion_does_not_capture() {
        // the sibling's free y must stay distinct from the extruded name
        let steps = all("(new y. x!y) | y!b");
        let bo = steps.iter().find(|s| matches!(s.action, Action::BoundOutput { .. })).unwrap();
        assert_ne!(bo.action.datum().unwrap(), &Name::new("y"));
        let close = all("(new y. x!y) | x?(w).w!y");
        let tau = close.iter().find(|s| s.action == Action::Tau).unwrap();
        assert!(struct_congruent(&tau.target, &p("new q. (0 | q!y)")), "{}", tau.target);
    }

    #[test]
    fn early_inputs_are_instantiated_over_the_universe() {
        let universe: BTreeSet<Name> = ["a", "b"].iter().map(|s| Name::new(s)).collect();
        let steps = transitions(&p("x?(z).z!z"), Dialect::Pi, &universe).unwrap();
        // a, b, x, and one fresh name
        assert_eq!(steps.len(), 4);
        assert!(steps.iter().any(|s| s.target == p("a!a")));
    }

    #[test]
    fn received_name_clashing_with_a_binder_is_renamed() {
        let u: BTreeSet<Name> = [Name::new("q")].into();
        let steps = transitions(&p("x?(z).new q. z!q"), Dialect::Pi, &u).unwrap();
        let s = steps.iter().find(|s| s.action.datum() == Some(&Name::new("q"))).unwrap();
        assert!(free_names(&s.target).contains(&Name::new("q")));
        assert!(struct_congruent(&s.target, &p("new r. q!r")));
    }

    #[test]
    fn replication_unfolds_once_per_use() {
        let steps = all("!x!a");
        assert_eq!(steps.len(), 1);
        assert!(struct_congruent(&steps[0].target, &p("0 | !x!a")));
        assert_eq!(steps[0].derivation.rep_uses(), 1);
        let steps = all("!(x!a | x?(z).0)");
        let between: Vec<_> = steps.iter().filter(|s| s.derivation.rep_uses() == 2).collect();
        assert_eq!(between.len(), 1);
    }

    #[test]
    fn sum_branches() {
        let steps = all("a!b.c!d.0 + tau.0 + e?(f).0");
        assert!(steps.iter().any(|s| s.derivation == Derivation::Sum(1) && s.action == Action::Tau));
        assert!(steps.iter().any(|s| s.derivation == Derivation::Sum(0) && s.target == p("c!d.0")));
    }

    #[test]
    fn dialects() {
        assert!(dialect_check(&p("x!y"), Dialect::PiAsync));
        assert!(!dialect_check(&p("x_0!(y).o!0 + x_1?(y).o!1"), Dialect::PiAsync));
        assert!(dialect_check(&p("a?(x).0 + b?(y).0"), Dialect::PiSeparateChoice));
        assert!(!dialect_check(&p("a?(x).0 + b!y.0"), Dialect::PiSeparateChoice));
        assert!(dialect_check(&p("!(c!c.0 + d?(z).o!1)"), Dialect::Ccs));
        assert!(!dialect_check(&p("c?(z).z!z"), Dialect::Ccs));
        assert!(!dialect_check(&p("c!d"), Dialect::Ccs));
        assert!(transitions(&p("a!b.0"), Dialect::PiAsync, &BTreeSet::new()).is_err());
    }

    #[test]
    fn actions_roundtrip_as_text() {
        for s in ["x?(y)", "x!y", "x!(y#3)", "tau", "o!0"] {
            let a: Action = s.parse().unwrap();
            assert_eq!(a.to_string(), s);
        }
        assert!("x?y".parse::<Action>().is_err());
        assert!("!".parse::<Action>().is_err());
    }

    #[test]
    fn rederive_reproduces_steps() {
        let q = p("new y. x!y | x?(w).w!a | !b?(c).c!c");
        let u: BTreeSet<Name> = free_names(&q);
        for s in transitions(&q, Dialect::Pi, &u).unwrap() {
            let received = match &s.action {
                Action::Input { received, .. } => Some(received),
                _ => None,
            };
            let again = rederive(&q, &s.derivation, received).unwrap();
            assert_eq!(again.action.channel(), s.action.channel());
            assert!(struct_congruent(&again.target, &s.target) || matches!(s.action, Action::BoundOutput { .. }));
        }
    }
}
