//! Normal forms for structural congruence.
//!
//! Every "block" (a process position: the whole term, a prefix continuation,
//! a replication body) is flattened into a list of binders and a multiset of
//! atoms (sums, output particles, replications). Restrictions are hoisted to
//! the top of their block, atoms are sorted by a name-independent key, and
//! binders are ordered by first occurrence in the sorted atoms. A final pass
//! renames every binder canonically.

use super::{canonical_binders, free_names_ordered, print::write_process, substitute, Prefix, Process};
use crate::name::Name;

#[derive(Clone, Copy)]
struct Options {
    /// Drop `0` atoms and restrictions whose name is unused.
    collect_garbage: bool,
    /// Treat the branches of a sum as an unordered set.
    sort_sums: bool,
}

const MAX_PASSES: usize = 8;

/// Canonical representative of the structural congruence class of `p`.
pub fn normal_form(p: &Process) -> Process {
    normalize(p, Options { collect_garbage: false, sort_sums: false })
}

pub fn struct_congruent(p: &Process, q: &Process) -> bool {
    normal_form(p) == normal_form(q)
}

/// Like [`normal_form`], but sum branches are compared as a set. Used to
/// compare a component against the renaming of another.
pub fn symmetry_key(p: &Process) -> Process {
    normalize(p, Options { collect_garbage: false, sort_sums: true })
}

/// Normal form that additionally removes `0` components and unused
/// restrictions. Both are strong bisimilarities, so this is a sound key for
/// state-space deduplication.
pub fn reduced_normal_form(p: &Process) -> Process {
    normalize(p, Options { collect_garbage: true, sort_sums: false })
}

fn normalize(p: &Process, opts: Options) -> Process {
    let mut cur = canonical_binders(&nf_block(p, &mut Vec::new(), opts));
    for _ in 1..MAX_PASSES {
        let next = canonical_binders(&nf_block(&cur, &mut Vec::new(), opts));
        if next == cur {
            break;
        }
        cur = next;
    }
    cur
}

fn nf_block(p: &Process, ctx: &mut Vec<Name>, opts: Options) -> Process {
    let mark = ctx.len();
    let mut binders = Vec::new();
    let mut raw = Vec::new();
    collect(p.clone(), &mut binders, &mut raw, opts);
    ctx.extend(binders.iter().cloned());
    let mut atoms: Vec<Process> = raw.into_iter().map(|a| nf_atom(a, ctx, opts)).collect();

    let mut keyed: Vec<(String, String, Process)> =
        atoms.drain(..).map(|a| (loose_key(&a, ctx), tight_key(&a, ctx), a)).collect();
    keyed.sort();
    let atoms: Vec<Process> = keyed.into_iter().map(|(_, _, a)| a).collect();
    ctx.truncate(mark);

    let mut order: Vec<Name> = Vec::new();
    for a in &atoms {
        for n in free_names_ordered(a) {
            if binders.contains(&n) && !order.contains(&n) {
                order.push(n);
            }
        }
    }
    if !opts.collect_garbage {
        for b in &binders {
            if !order.contains(b) {
                order.push(b.clone());
            }
        }
    }
    let mut out = Process::par_all(atoms);
    for b in order.into_iter().rev() {
        out = Process::New(b, Box::new(out));
    }
    out
}

fn collect(p: Process, binders: &mut Vec<Name>, atoms: &mut Vec<Process>, opts: Options) {
    match p {
        Process::New(x, body) => {
            let fresh = Name::fresh(&x);
            binders.push(fresh.clone());
            collect(substitute(&body, &x, &fresh), binders, atoms, opts);
        }
        Process::Par(l, r) => {
            collect(*l, binders, atoms, opts);
            collect(*r, binders, atoms, opts);
        }
        Process::Sum(bs) if bs.is_empty() && opts.collect_garbage => {}
        atom => atoms.push(atom),
    }
}

fn nf_atom(a: Process, ctx: &mut Vec<Name>, opts: Options) -> Process {
    match a {
        Process::Sum(bs) => {
            let mut branches: Vec<(Prefix, Process)> = bs
                .into_iter()
                .map(|(pre, cont)| {
                    match pre {
                        Prefix::Input { channel, formal } => {
                            // context names must never look like canonical binders
                            let fresh = Name::fresh(&formal);
                            ctx.push(fresh.clone());
                            let c = nf_block(&substitute(&cont, &formal, &fresh), ctx, opts);
                            ctx.pop();
                            (Prefix::Input { channel, formal: fresh }, c)
                        }
                        pre => (pre, nf_block(&cont, ctx, opts)),
                    }
                })
                .collect();
            if opts.sort_sums {
                let mut keyed: Vec<(String, String, (Prefix, Process))> = branches
                    .drain(..)
                    .map(|b| {
                        let single = Process::Sum(vec![b.clone()]);
                        (loose_key(&single, ctx), tight_key(&single, ctx), b)
                    })
                    .collect();
                keyed.sort();
                branches = keyed.into_iter().map(|(_, _, b)| b).collect();
            }
            Process::Sum(branches)
        }
        Process::Rep(b) => Process::Rep(Box::new(nf_block(&b, ctx, opts))),
        other => other,
    }
}

/// Printed form with every binder of the enclosing context erased.
fn loose_key(a: &Process, ctx: &[Name]) -> String {
    let mut s = String::new();
    write_process(&canonical_binders(a), &mut s, &|n: &Name| {
        if ctx.contains(n) {
            "#?".to_owned()
        } else {
            n.as_str().to_owned()
        }
    });
    s
}

/// Printed form with context binders numbered by position; breaks ties
/// between atoms that differ only in which binder they use.
fn tight_key(a: &Process, ctx: &[Name]) -> String {
    let mut s = String::new();
    write_process(&canonical_binders(a), &mut s, &|n: &Name| match ctx.iter().rposition(|c| c == n) {
        Some(i) => format!("#c{i}"),
        None => n.as_str().to_owned(),
    });
    s
}
