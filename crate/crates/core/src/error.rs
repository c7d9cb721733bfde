//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("link references unknown node {node} at line {line}")]
    UnknownNode { node: usize, line: usize },

    #[error("duplicate link between nodes {a} and {b} at line {line}")]
    DuplicateEdge { a: usize, b: usize, line: usize },

    #[error("topology is not connected ({reachable} of {total} nodes reachable from node 0)")]
    Disconnected { reachable: usize, total: usize },

    #[error("no path from node {from} to node {to}")]
    Unreachable { from: usize, to: usize },

    #[error("placement vector has {got} bits but topology has {expected} links")]
    PlacementLength { expected: usize, got: usize },

    #[error("placement uses {upgrades} upgrades but the budget allows at most {budget}")]
    BudgetViolation { upgrades: usize, budget: usize },

    #[error("slot {slot} is not a quantum slot of the {band} band")]
    InvalidSlot { band: &'static str, slot: usize },

    #[error("slot {slot} already occupied on link {link}")]
    SlotOccupied { link: usize, slot: usize },

    #[error("relay count {r} out of range (path admits at most {max} relays)")]
    RelayCount { r: usize, max: usize },

    #[error("sweep records missing length factor {factor}")]
    MissingFactor { factor: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
