//! JSON-lines traces with a hash chain, and their replay.
//!
//! Every line is a JSON object whose last field is
//! `"digest":"<sha256 hex>"`, the hash of the previous line's digest
//! followed by the line's own text up to that field. The first record is
//! a header with the start network, then one record per step, then an
//! optional footer. Step records carry the hash of the post-state's
//! canonical form, so replay checks the semantics as well as the bytes.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::lts::{rederive, Action, Dialect};
use crate::name::Name;
use crate::network::{Automorphism, Computation, Half, Movers, Network, NetworkStep};
use crate::syntax::substitute;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Record {
    Header {
        tool: String,
        format: u32,
        dialect: Dialect,
        network: Network,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        automorphism: Option<String>,
        start_hash: String,
    },
    Step {
        index: usize,
        label: Action,
        movers: Movers,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        extruded: Option<Name>,
        post_hash: String,
    },
    Footer {
        summary: serde_json::Value,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("record {record}: malformed: {reason}")]
    Malformed { record: usize, reason: String },
    #[error("record {record}: digest does not match")]
    Digest { record: usize },
    #[error("record {record}: replay mismatch: {reason}")]
    Mismatch { record: usize, reason: String },
}

impl ReplayError {
    pub fn record(&self) -> usize {
        match self {
            ReplayError::Malformed { record, .. } | ReplayError::Digest { record } | ReplayError::Mismatch { record, .. } => {
                *record
            }
        }
    }
}

fn digest(prev: &str, prefix: &str) -> String {
    let mut h = Sha256::new();
    h.update(prev.as_bytes());
    h.update(prefix.as_bytes());
    hex::encode(h.finalize())
}

/// Appends records to a chained trace.
#[derive(Default)]
pub struct TraceWriter {
    text: String,
    prev: String,
}

impl TraceWriter {
    pub fn new() -> Self {
        TraceWriter::default()
    }

    pub fn push(&mut self, r: &Record) {
        let json = serde_json::to_string(r).expect("records serialize");
        let prefix = &json[..json.len() - 1];
        let d = digest(&self.prev, prefix);
        self.text.push_str(prefix);
        self.text.push_str(&format!(",\"digest\":\"{d}\"}}\n"));
        self.prev = d;
    }

    pub fn finish(self) -> String {
        self.text
    }
}

pub fn header(net: &Network, d: Dialect, sigma: Option<&Automorphism>) -> Record {
    Record::Header {
        tool: concat!("symelect ", env!("CARGO_PKG_VERSION")).into(),
        format: FORMAT_VERSION,
        dialect: d,
        network: net.clone(),
        automorphism: sigma.map(|s| s.to_string()),
        start_hash: net.state_hash(),
    }
}

pub fn step_record(index: usize, s: &NetworkStep) -> Record {
    Record::Step {
        index,
        label: s.label.clone(),
        movers: s.movers.clone(),
        extruded: s.extruded.clone(),
        post_hash: s.post.state_hash(),
    }
}

/// The whole computation as a trace, with an optional footer.
pub fn write_trace(c: &Computation, d: Dialect, sigma: Option<&Automorphism>, footer: Option<serde_json::Value>) -> String {
    let mut w = TraceWriter::new();
    w.push(&header(&c.start, d, sigma));
    for (i, s) in c.steps.iter().enumerate() {
        w.push(&step_record(i, s));
    }
    if let Some(summary) = footer {
        w.push(&Record::Footer { summary });
    }
    w.finish()
}

/// Splits a line into its record and checks its digest against `prev`.
pub fn read_line(line: &str, prev: &str, record: usize) -> Result<(Record, String), ReplayError> {
    let bad = |reason: &str| ReplayError::Malformed { record, reason: reason.into() };
    const TAG: &str = ",\"digest\":\"";
    let body = line.strip_suffix("\"}").ok_or_else(|| bad("missing digest"))?;
    let cut = body.rfind(TAG).ok_or_else(|| bad("missing digest"))?;
    let (prefix, hexd) = (&body[..cut], &body[cut + TAG.len()..]);
    if hexd.len() != 64 || !hexd.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b)) {
        return Err(bad("digest is not 64 lowercase hex digits"));
    }
    if digest(prev, prefix) != hexd {
        return Err(ReplayError::Digest { record });
    }
    let r: Record = serde_json::from_str(&format!("{prefix}}}")).map_err(|e| bad(&e.to_string()))?;
    Ok((r, hexd.to_owned()))
}

/// What a successful replay established.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Replayed {
    pub steps: usize,
    pub final_network: Option<Network>,
    pub footer: Option<serde_json::Value>,
}

/// Re-derives every step from the header network and checks each
/// post-state hash. An empty trace replays trivially.
pub fn replay(text: &str) -> Result<Replayed, ReplayError> {
    let mut prev = String::new();
    let mut state: Option<(Network, Dialect)> = None;
    let mut out = Replayed { steps: 0, final_network: None, footer: None };
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            return Err(ReplayError::Malformed { record: i, reason: "blank line".into() });
        }
        let (r, d) = read_line(line, &prev, i)?;
        prev = d;
        let mismatch = |reason: String| ReplayError::Mismatch { record: i, reason };
        match (r, &mut state) {
            (Record::Header { dialect, network, start_hash, format, .. }, None) if i == 0 => {
                if format != FORMAT_VERSION {
                    return Err(mismatch(format!("unsupported format {format}")));
                }
                if let Some(why) = network.dialect_violation(dialect) {
                    return Err(mismatch(why));
                }
                if network.state_hash() != start_hash {
                    return Err(mismatch("start hash differs".into()));
                }
                state = Some((network, dialect));
            }
            (Record::Step { index, label, movers, extruded, post_hash }, Some((net, d))) if out.footer.is_none() => {
                if index != out.steps {
                    return Err(mismatch(format!("expected step {}, found {index}", out.steps)));
                }
                let next = apply_recorded(net, *d, &label, &movers, extruded.as_ref()).map_err(mismatch)?;
                if next.state_hash() != post_hash {
                    return Err(mismatch("post-state hash differs".into()));
                }
                *net = next;
                out.steps += 1;
            }
            (Record::Footer { summary }, Some(_)) if out.footer.is_none() => out.footer = Some(summary),
            _ => return Err(ReplayError::Malformed { record: i, reason: "record out of place".into() }),
        }
    }
    out.final_network = state.map(|(n, _)| n);
    Ok(out)
}

/// Applies a recorded step to `net` by re-deriving each half.
pub fn apply_recorded(
    net: &Network,
    d: Dialect,
    label: &Action,
    movers: &Movers,
    extruded: Option<&Name>,
) -> Result<Network, String> {
    if let Some(why) = net.dialect_violation(d) {
        return Err(why);
    }
    let component = |h: &Half| {
        (1..=net.len()).contains(&h.node).then(|| net.component(h.node)).ok_or(format!("no node {}", h.node))
    };
    let names = net.names();
    let mut post = net.clone();
    match movers {
        Movers::Single(h) => {
            if *label != h.action {
                return Err("label differs from the mover's action".into());
            }
            if let Some(c) = h.action.channel() {
                if net.hoisted.contains(c) {
                    return Err(format!("visible action on restricted name {c}"));
                }
            }
            let target = derive_half(component(h)?, h, &names)?;
            post.components[h.node - 1] = target;
        }
        Movers::Pair { input, output } => {
            if *label != Action::Tau || input.node == output.node {
                return Err("malformed communication".into());
            }
            let (Action::Input { channel, received }, Some(ch)) = (&input.action, output.action.channel()) else {
                return Err("communication needs an input and an output".into());
            };
            if channel != ch || Some(received) != output.action.datum() || channel.is_output_channel() {
                return Err("input and output do not match".into());
            }
            let bound = matches!(output.action, Action::BoundOutput { .. });
            if bound != extruded.is_some() || (bound && extruded != Some(received)) {
                return Err("extruded name does not match the output".into());
            }
            let out_target = derive_half(component(output)?, output, &names)?;
            let in_target = derive_half(component(input)?, input, &names)?;
            post.components[output.node - 1] = out_target;
            post.components[input.node - 1] = in_target;
            if let Some(y) = extruded {
                post.hoisted.push(y.clone());
            }
        }
    }
    post.collect_hoisted();
    Ok(post)
}

fn derive_half(p: &crate::syntax::Process, h: &Half, names: &std::collections::BTreeSet<Name>) -> Result<crate::syntax::Process, String> {
    let received = match &h.action {
        Action::Input { received, .. } => Some(received),
        _ => None,
    };
    let step = rederive(p, &h.derivation, received).ok_or("derivation does not apply")?;
    match (&step.action, &h.action) {
        (Action::BoundOutput { channel: c1, datum: y1 }, Action::BoundOutput { channel: c2, datum: y2 }) => {
            if c1 != c2 {
                return Err("channel differs".into());
            }
            if y1 == y2 {
                return Ok(step.target);
            }
            if names.contains(y2) || crate::syntax::occurs_free(y2, &step.target) {
                return Err(format!("extruded name {y2} is not fresh"));
            }
            Ok(substitute(&step.target, y1, y2))
        }
        (a, b) if a == b => Ok(step.target),
        (a, b) => Err(format!("derivation yields {a}, trace says {b}")),
    }
}
