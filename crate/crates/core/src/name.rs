//! Names: channels, data, process identifiers.
//!
//! A [`Name`] is an immutable shared string. Its textual shape determines its
//! [`Origin`]:
//!
//! * `0`, `1`, `42` are numerals (process identifiers);
//! * `base#n` is a fresh name minted by this session's counter;
//! * `#n` is a canonical binder name produced by normalization;
//! * everything else comes from source text.
//!
//! Fresh names never collide with source names because the parser only
//! accepts `#` in the two shapes above and bumps the counter past every fresh
//! name it reads.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

static FRESH: AtomicU64 = AtomicU64::new(0);

/// The reserved channel to the external world.
pub const OUTPUT_CHANNEL: &str = "o";

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Name(Arc<str>);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Source,
    Fresh(u64),
    Numeral(u64),
    /// Binder names assigned by canonical renaming (`#n`) and hoisted-name
    /// placeholders used in state hashes (`#hn`).
    Canonical,
}

impl Name {
    /// Builds a name from text without validation. Use [`Name::source`] for
    /// user-facing construction.
    pub fn new(text: impl AsRef<str>) -> Self {
        Name(Arc::from(text.as_ref()))
    }

    /// A source identifier; panics on text the grammar would reject.
    pub fn source(text: &str) -> Self {
        assert!(is_identifier(text) || is_numeral(text), "not a source name: {text:?}");
        Name::new(text)
    }

    pub fn numeral(n: u64) -> Self {
        Name::new(n.to_string())
    }

    pub fn output_channel() -> Self {
        Name::new(OUTPUT_CHANNEL)
    }

    /// Mints a name that has never been seen in this session.
    pub fn fresh(hint: &Name) -> Self {
        let base = hint.base();
        let base = if base.is_empty() || base.starts_with('#') || is_numeral(base) || base == OUTPUT_CHANNEL {
            "v"
        } else {
            base
        };
        let n = FRESH.fetch_add(1, Ordering::Relaxed);
        Name::new(format!("{base}#{n}"))
    }

    pub(crate) fn canonical(index: usize) -> Self {
        Name::new(format!("#{index}"))
    }

    /// Makes sure later calls to [`Name::fresh`] never return `self`.
    pub(crate) fn reserve(&self) {
        if let Origin::Fresh(n) = self.origin() {
            FRESH.fetch_max(n + 1, Ordering::Relaxed);
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The identifier part before any `#counter` suffix.
    pub fn base(&self) -> &str {
        match self.0.find('#') {
            Some(i) => &self.0[..i],
            None => &self.0,
        }
    }

    pub fn origin(&self) -> Origin {
        let s: &str = &self.0;
        if s.starts_with('#') {
            return Origin::Canonical;
        }
        if let Some(i) = s.find('#') {
            return match s[i + 1..].parse() {
                Ok(n) => Origin::Fresh(n),
                Err(_) => Origin::Source,
            };
        }
        if is_numeral(s) {
            // Numerals that overflow u64 still behave as numerals for renaming.
            return Origin::Numeral(s.parse().unwrap_or(u64::MAX));
        }
        Origin::Source
    }

    pub fn is_numeral(&self) -> bool {
        matches!(self.origin(), Origin::Numeral(_))
    }

    pub fn is_fresh(&self) -> bool {
        matches!(self.origin(), Origin::Fresh(_))
    }

    pub fn is_output_channel(&self) -> bool {
        &*self.0 == OUTPUT_CHANNEL
    }

    /// Numerals and `o` may never be bound.
    pub fn is_reserved(&self) -> bool {
        self.is_numeral() || self.is_output_channel()
    }

    pub fn numeral_value(&self) -> Option<u64> {
        match self.origin() {
            Origin::Numeral(n) => Some(n),
            _ => None,
        }
    }
}

pub(crate) fn is_numeral(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut bytes = s.bytes();
    match bytes.next() {
        Some(b) if b.is_ascii_alphabetic() || b == b'_' => {}
        _ => return false,
    }
    bytes.all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'\'')
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Name {
    fn from(s: &str) -> Self {
        Name::new(s)
    }
}

impl Serialize for Name {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Name {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        let name = Name::new(s);
        name.reserve();
        Ok(name)
    }
}
