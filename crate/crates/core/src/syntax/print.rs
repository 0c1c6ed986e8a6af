use super::{Prefix, Process};
use crate::name::Name;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Level {
    Par,
    Sum,
    Unary,
}

/// Writes `p` in the concrete grammar accepted by [`super::parse`], printing
/// each name through `name`.
pub fn write_process(p: &Process, out: &mut String, name: &dyn Fn(&Name) -> String) {
    write_at(p, Level::Par, out, name);
}

fn level_of(p: &Process) -> Level {
    match p {
        Process::Par(..) => Level::Par,
        Process::Sum(bs) if bs.len() >= 2 => Level::Sum,
        _ => Level::Unary,
    }
}

fn write_at(p: &Process, ctx: Level, out: &mut String, name: &dyn Fn(&Name) -> String) {
    if level_of(p) < ctx {
        out.push('(');
        write_at(p, Level::Par, out, name);
        out.push(')');
        return;
    }
    match p {
        Process::Sum(bs) if bs.is_empty() => out.push('0'),
        Process::Sum(bs) => {
            for (i, (pre, cont)) in bs.iter().enumerate() {
                if i > 0 {
                    out.push_str(" + ");
                }
                write_prefix(pre, out, name);
                out.push('.');
                write_at(cont, Level::Unary, out, name);
            }
        }
        Process::Out(x, y) => {
            out.push_str(&name(x));
            out.push('!');
            out.push_str(&name(y));
        }
        Process::New(x, body) => {
            out.push_str("new ");
            out.push_str(&name(x));
            out.push_str(". ");
            write_at(body, Level::Unary, out, name);
        }
        Process::Par(l, r) => {
            // right-nested chains print without parentheses
            write_at(l, Level::Sum, out, name);
            out.push_str(" | ");
            write_at(r, Level::Par, out, name);
        }
        Process::Rep(b) => {
            out.push('!');
            write_at(b, Level::Unary, out, name);
        }
    }
}

fn write_prefix(pre: &Prefix, out: &mut String, name: &dyn Fn(&Name) -> String) {
    match pre {
        Prefix::Input { channel, formal } => {
            out.push_str(&name(channel));
            out.push_str("?(");
            out.push_str(&name(formal));
            out.push(')');
        }
        Prefix::Output { channel, datum } => {
            out.push_str(&name(channel));
            out.push('!');
            out.push_str(&name(datum));
        }
        Prefix::Tau => out.push_str("tau"),
    }
}
