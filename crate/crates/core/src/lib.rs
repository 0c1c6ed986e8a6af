//! Symmetric leader election in the pi-calculus: terms, semantics,
//! networks, and the symmetry adversary.

pub mod name;
pub mod syntax;
pub mod lts;
pub mod network;
pub mod electoral;
pub mod adversary;
pub mod protocols;
pub mod generate;
pub mod encoding;
pub mod trace;
