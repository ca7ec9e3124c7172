//! PIFO trees: hierarchical priority queues for programmable packet scheduling.
//!
//! A PIFO ("push-in-first-out") is a priority queue that dequeues the lowest-ranked
//! element and breaks rank ties in FIFO order. A PIFO tree arranges PIFOs in a tree:
//! leaves buffer packets, internal nodes buffer references to their children, and a
//! pop walks root-to-leaf following popped references. This crate provides:
//!
//! - the single-queue primitive ([`Pifo`]) with exact rational ranks ([`Rank`]);
//! - tree shapes and node addressing ([`Topo`], [`Addr`]);
//! - the tree itself ([`PifoTree`]) with push/pop semantics over explicit [`Path`]s,
//!   well-formedness checking, and the `flush`/`snap` semantic oracles;
//! - permutation-tree constructions used to probe expressiveness ([`perm`]);
//! - homomorphic topology embeddings with lifts to trees and paths ([`Embedding`]),
//!   plus two embedding search algorithms ([`algo`]);
//! - a policy library (FCFS, strict priority, round robin, WFQ) assembled per
//!   internal node into a [`Control`], and policy compilation across topologies;
//! - a deterministic trace-driven simulator ([`sim`]) with CSV input/output and an
//!   SVG Gantt renderer ([`gantt`]).
//!
//! Sequences returned by this API are always in pop order: index 0 holds the element
//! popped first. Network-queueing figures conventionally draw the head of a queue on
//! the right; only the pretty-printers ([`PifoTree::to_dump`],
//! [`Pifo::display_head_right`]) follow that display convention, by reversing.

pub mod algo;
pub mod config;
pub mod control;
pub mod embed;
pub mod gantt;
pub mod perm;
pub mod pifo;
pub mod rat;
pub mod sim;
pub mod topo;
pub mod tree;

pub use control::{
    build_control, compile_control, Control, NodePolicy, Packet, PolicySpec, PolicyTransaction,
    Transaction,
};
pub use embed::Embedding;
pub use perm::Permutation;
pub use pifo::Pifo;
pub use rat::{Rank, Rat, Time};
pub use topo::{Addr, Topo};
pub use tree::{Path, PifoTree, ScriptOp};
