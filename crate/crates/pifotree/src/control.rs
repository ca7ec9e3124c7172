//! Scheduling controls: the glue between packets and trees.
//!
//! A [`Transaction`] decides, statefully, which path a packet takes through a
//! tree; a [`Control`] pairs a transaction with the tree it drives. The
//! built-in [`PolicyTransaction`] assigns ranks per internal node according to
//! one of four textbook policies, and [`compile_control`] rewrites any control
//! to run on an embedding's target tree with identical packet-level behavior.
//!
//! Rank recurrences used by [`NodePolicy`], with all state per node:
//! - FCFS: the k-th packet scheduled through the node gets rank k−1.
//! - Strict: a packet toward child i gets the fixed rank equal to i's 0-based
//!   position in the priority list (first listed is served first).
//! - Round robin: each child keeps a counter starting at 0; a packet toward
//!   child i gets rank r_i, then r_i increases by 1. Counters never reset.
//! - WFQ: child i keeps a virtual finish time F_i and the node a virtual time
//!   V, all starting at 0. Scheduling a packet of size s toward child i sets
//!   F_i = max(F_i, V) + s / w_i and uses that as the rank; when the packet
//!   eventually pops, V advances to max(V, F) for the F it was stamped with.
//!
//! Leaves order packets first-come-first-served via per-leaf counters.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::embed::{EmbedError, Embedding};
use crate::rat::{Rank, Time};
use crate::topo::{Addr, Topo};
use crate::tree::{Path, PifoTree, TreeError};

#[derive(Clone, Debug, PartialEq)]
pub struct Packet {
    pub id: u64,
    pub flow: String,
    pub arrival: Time,
    pub size: u64,
}

#[derive(Debug, Error, PartialEq)]
pub enum ControlError {
    #[error("no leaf assignment for flow {0:?}")]
    UnknownFlow(String),
    #[error("no policy given for internal node {0}")]
    MissingPolicy(Addr),
    #[error("policy given for {0}, which is not an internal node of the topology")]
    PolicyOnNonInternal(Addr),
    #[error("strict priority list at {0} is not a permutation of its children")]
    NotAPermutation(Addr),
    #[error("node {addr} has {expected} children but {got} weights")]
    WeightCountMismatch { addr: Addr, expected: usize, got: usize },
    #[error("zero weight at node {0}")]
    ZeroWeight(Addr),
    #[error("flow {flow:?} is mapped to {addr}, which is not a leaf")]
    FlowNotAtLeaf { flow: String, addr: Addr },
    #[error("embedding source does not match the control's topology")]
    EmbeddingMismatch,
    #[error(transparent)]
    Embedding(#[from] EmbedError),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// Stateful routing logic: maps each incoming packet to a push path and hears
/// about departures.
pub trait Transaction {
    fn schedule(&mut self, pkt: &Packet) -> Result<Path, ControlError>;
    fn observe_pop(&mut self, _pkt: &Packet) {}
}

/// A tree plus the transaction that drives it.
pub struct Control {
    tree: PifoTree<Packet>,
    txn: Box<dyn Transaction>,
}

impl Control {
    pub fn new(topology: &Topo, txn: Box<dyn Transaction>) -> Control {
        Control {
            tree: PifoTree::new(topology),
            txn,
        }
    }

    pub fn tree(&self) -> &PifoTree<Packet> {
        &self.tree
    }

    /// Number of packets currently queued.
    pub fn backlog(&self) -> usize {
        self.tree.size()
    }

    pub fn push(&mut self, pkt: Packet) -> Result<(), ControlError> {
        let path = self.txn.schedule(&pkt)?;
        self.tree.push(pkt, &path)?;
        Ok(())
    }

    pub fn pop(&mut self) -> Option<Packet> {
        let pkt = self.tree.pop()?;
        self.txn.observe_pop(&pkt);
        Some(pkt)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodePolicy {
    Fcfs,
    /// Children in decreasing priority; the first listed child is always
    /// served before the others whenever it has traffic.
    Strict(Vec<u32>),
    RoundRobin,
    /// One positive weight per child, in child order.
    Wfq(Vec<u64>),
}

/// A declarative scheduler description: per-node policies over a topology and
/// an assignment of flow labels to leaves. When `embedding` is present its
/// source must equal `topology`, and the built control runs on the embedding's
/// target instead.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicySpec {
    pub topology: Topo,
    pub embedding: Option<Embedding>,
    pub policies: BTreeMap<Addr, NodePolicy>,
    pub flows: BTreeMap<String, Addr>,
}

enum NodeState {
    Fcfs {
        next: u64,
    },
    Strict {
        rank_of_child: Vec<u32>,
    },
    RoundRobin {
        next_per_child: Vec<u64>,
    },
    Wfq {
        weights: Vec<u64>,
        finish: Vec<Rank>,
        vtime: Rank,
    },
}

fn nat(n: u64) -> Rank {
    Rank::new(n as i64, 1).expect("non-negative integer")
}

fn ratio(num: u64, den: u64) -> Rank {
    Rank::new(num as i64, den as i64).expect("positive denominator")
}

/// The built-in [`Transaction`]: one policy per internal node, FCFS leaves,
/// flows pinned to leaves.
pub struct PolicyTransaction {
    node_index: BTreeMap<Addr, usize>,
    nodes: Vec<NodeState>,
    leaf_index: BTreeMap<Addr, usize>,
    leaf_counters: Vec<u64>,
    flows: BTreeMap<String, Addr>,
    /// WFQ finish stamps by packet id, consumed when the packet departs.
    wfq_stamps: HashMap<u64, Vec<(usize, Rank)>>,
}

impl PolicyTransaction {
    pub fn new(
        topology: &Topo,
        policies: &BTreeMap<Addr, NodePolicy>,
        flows: &BTreeMap<String, Addr>,
    ) -> Result<PolicyTransaction, ControlError> {
        for addr in policies.keys() {
            if topology.is_leaf_at(addr) || topology.at(addr).is_none() {
                return Err(ControlError::PolicyOnNonInternal(addr.clone()));
            }
        }
        let mut node_index = BTreeMap::new();
        let mut nodes = Vec::new();
        let mut leaf_index = BTreeMap::new();
        for addr in topology.addresses() {
            if topology.is_leaf_at(&addr) {
                leaf_index.insert(addr, leaf_index.len());
                continue;
            }
            let arity = match topology.at(&addr) {
                Some(Topo::Node(children)) => children.len(),
                _ => unreachable!("address came from the topology"),
            };
            let policy = policies
                .get(&addr)
                .ok_or_else(|| ControlError::MissingPolicy(addr.clone()))?;
            let state = match policy {
                NodePolicy::Fcfs => NodeState::Fcfs { next: 0 },
                NodePolicy::Strict(order) => {
                    let mut rank_of_child = vec![u32::MAX; arity];
                    for (pos, &child) in order.iter().enumerate() {
                        if child == 0 || child as usize > arity {
                            return Err(ControlError::NotAPermutation(addr.clone()));
                        }
                        if rank_of_child[child as usize - 1] != u32::MAX {
                            return Err(ControlError::NotAPermutation(addr.clone()));
                        }
                        rank_of_child[child as usize - 1] = pos as u32;
                    }
                    if order.len() != arity {
                        return Err(ControlError::NotAPermutation(addr.clone()));
                    }
                    NodeState::Strict { rank_of_child }
                }
                NodePolicy::RoundRobin => NodeState::RoundRobin {
                    next_per_child: vec![0; arity],
                },
                NodePolicy::Wfq(weights) => {
                    if weights.len() != arity {
                        return Err(ControlError::WeightCountMismatch {
                            addr: addr.clone(),
                            expected: arity,
                            got: weights.len(),
                        });
                    }
                    if weights.iter().any(|&w| w == 0) {
                        return Err(ControlError::ZeroWeight(addr.clone()));
                    }
                    NodeState::Wfq {
                        weights: weights.clone(),
                        finish: vec![Rank::zero(); arity],
                        vtime: Rank::zero(),
                    }
                }
            };
            node_index.insert(addr, nodes.len());
            nodes.push(state);
        }
        for (flow, addr) in flows {
            if !leaf_index.contains_key(addr) {
                return Err(ControlError::FlowNotAtLeaf {
                    flow: flow.clone(),
                    addr: addr.clone(),
                });
            }
        }
        let leaf_counters = vec![0; leaf_index.len()];
        Ok(PolicyTransaction {
            node_index,
            nodes,
            leaf_index,
            leaf_counters,
            flows: flows.clone(),
            wfq_stamps: HashMap::new(),
        })
    }
}

impl Transaction for PolicyTransaction {
    fn schedule(&mut self, pkt: &Packet) -> Result<Path, ControlError> {
        let leaf = self
            .flows
            .get(&pkt.flow)
            .ok_or_else(|| ControlError::UnknownFlow(pkt.flow.clone()))?
            .clone();
        let mut steps = Vec::with_capacity(leaf.len());
        for depth in 0..leaf.len() {
            let node_addr = Addr::new(leaf.as_slice()[..depth].to_vec());
            let child = leaf.as_slice()[depth];
            let slot = child as usize - 1;
            let idx = self.node_index[&node_addr];
            let rank = match &mut self.nodes[idx] {
                NodeState::Fcfs { next } => {
                    let r = nat(*next);
                    *next += 1;
                    r
                }
                NodeState::Strict { rank_of_child } => nat(rank_of_child[slot] as u64),
                NodeState::RoundRobin { next_per_child } => {
                    let r = nat(next_per_child[slot]);
                    next_per_child[slot] += 1;
                    r
                }
                NodeState::Wfq {
                    weights,
                    finish,
                    vtime,
                } => {
                    let start = finish[slot].max(*vtime);
                    finish[slot] = start + ratio(pkt.size, weights[slot]);
                    self.wfq_stamps
                        .entry(pkt.id)
                        .or_default()
                        .push((idx, finish[slot]));
                    finish[slot]
                }
            };
            steps.push((child, rank));
        }
        let leaf_idx = self.leaf_index[&leaf];
        let leaf_rank = nat(self.leaf_counters[leaf_idx]);
        self.leaf_counters[leaf_idx] += 1;
        Ok(Path::new(steps, leaf_rank))
    }

    fn observe_pop(&mut self, pkt: &Packet) {
        if let Some(stamps) = self.wfq_stamps.remove(&pkt.id) {
            for (idx, f) in stamps {
                if let NodeState::Wfq { vtime, .. } = &mut self.nodes[idx] {
                    *vtime = (*vtime).max(f);
                }
            }
        }
    }
}

struct CompiledTransaction {
    inner: Box<dyn Transaction>,
    embedding: Embedding,
}

impl Transaction for CompiledTransaction {
    fn schedule(&mut self, pkt: &Packet) -> Result<Path, ControlError> {
        let path = self.inner.schedule(pkt)?;
        Ok(self.embedding.translate_path(&path)?)
    }

    fn observe_pop(&mut self, pkt: &Packet) {
        self.inner.observe_pop(pkt);
    }
}

/// Rewrites `control` to run on `embedding`'s target topology: the queue
/// contents are lifted across the embedding and every scheduled path is
/// translated, so pushes and pops behave exactly as before.
pub fn compile_control(control: Control, embedding: Embedding) -> Result<Control, ControlError> {
    if control.tree.topology() != *embedding.source() {
        return Err(ControlError::EmbeddingMismatch);
    }
    let tree = embedding.lift_tree(&control.tree)?;
    Ok(Control {
        tree,
        txn: Box::new(CompiledTransaction {
            inner: control.txn,
            embedding,
        }),
    })
}

/// Builds a runnable control from a declarative spec, compiling it across the
/// spec's embedding when one is present.
pub fn build_control(spec: &PolicySpec) -> Result<Control, ControlError> {
    let txn = PolicyTransaction::new(&spec.topology, &spec.policies, &spec.flows)?;
    let base = Control::new(&spec.topology, Box::new(txn));
    match &spec.embedding {
        None => Ok(base),
        Some(e) => compile_control(base, e.clone()),
    }
}
