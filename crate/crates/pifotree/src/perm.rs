//! Reordering machinery: finite permutations, trees that realize a chosen pop
//! order over fixed leaf contents, and in-place reordering using only pushes and
//! pops of a throwaway packet.

use thiserror::Error;

use crate::pifo::Pifo;
use crate::rat::{Rank, Rat};
use crate::topo::Topo;
use crate::tree::{Path, PifoTree, ScriptOp};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PermError {
    #[error("images must be a bijection on 1..=n")]
    NotABijection,
    #[error("expected {expected} leaves/packets, got {got}")]
    CountMismatch { expected: usize, got: usize },
    #[error("tree must be well-formed")]
    IllFormed,
    #[error("every leaf must hold exactly one packet")]
    OnePacketPerLeaf,
    #[error("leaf ranks must be positive so a rank-0 dummy pops first")]
    LeafRankNotPositive,
    #[error("the dummy packet already occurs in the tree")]
    DummyCollision,
}

/// A bijection on {1, ..., n}, stored as the image sequence π(1), ..., π(n).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation(Vec<u32>);

impl Permutation {
    pub fn new(images: Vec<u32>) -> Result<Self, PermError> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            match (i as usize).checked_sub(1) {
                Some(k) if k < n && !seen[k] => seen[k] = true,
                _ => return Err(PermError::NotABijection),
            }
        }
        Ok(Permutation(images))
    }

    pub fn identity(n: usize) -> Self {
        Permutation((1..=n as u32).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// π(i), with `i` in 1..=n.
    pub fn apply(&self, i: u32) -> u32 {
        self.0[i as usize - 1]
    }

    pub fn images(&self) -> &[u32] {
        &self.0
    }

    /// Every permutation of {1, ..., n}, in lexicographic order of images.
    pub fn all(n: usize) -> Vec<Permutation> {
        fn build(remaining: &mut Vec<u32>, current: &mut Vec<u32>, acc: &mut Vec<Permutation>) {
            if remaining.is_empty() {
                acc.push(Permutation(current.clone()));
                return;
            }
            for k in 0..remaining.len() {
                let v = remaining.remove(k);
                current.push(v);
                build(remaining, current, acc);
                current.pop();
                remaining.insert(k, v);
            }
        }
        let mut acc = Vec::new();
        build(
            &mut (1..=n as u32).collect(),
            &mut Vec::with_capacity(n),
            &mut acc,
        );
        acc
    }
}

/// Builds a tree over `topo` that stores `packets[i]` in the i-th leaf (left to
/// right) and pops them in the order `packets[order(1)-1], packets[order(2)-1], ...`.
///
/// The j-th packet to depart gets rank `j` at its leaf and at every scheduler on
/// its root-to-leaf path, so each scheduler lists departures in rank order.
pub fn build_permutation_tree<T: Clone>(
    topo: &Topo,
    packets: &[T],
    order: &Permutation,
) -> Result<PifoTree<T>, PermError> {
    let leaves = topo.leaves();
    if leaves.len() != packets.len() || packets.len() != order.len() {
        return Err(PermError::CountMismatch {
            expected: leaves.len(),
            got: packets.len().min(order.len()),
        });
    }
    let mut tree = PifoTree::new(topo);
    for j in 1..=order.len() as u32 {
        let i = order.apply(j);
        let addr = &leaves[i as usize - 1];
        let rank = Rat::from(j);
        let steps = addr.as_slice().iter().map(|&c| (c, rank)).collect();
        tree.push(packets[i as usize - 1].clone(), &Path::new(steps, rank))
            .expect("leaf address fits its own topology");
    }
    Ok(tree)
}

fn max_internal_rank<T>(tree: &PifoTree<T>) -> Option<Rank> {
    match tree {
        PifoTree::Leaf(_) => None,
        PifoTree::Internal { children, sched } => children
            .iter()
            .filter_map(max_internal_rank)
            .chain(sched.max_rank())
            .max(),
    }
}

fn leaf_queues<T>(tree: &PifoTree<T>) -> Vec<&Pifo<T>> {
    match tree {
        PifoTree::Leaf(q) => vec![q],
        PifoTree::Internal { children, .. } => children.iter().flat_map(leaf_queues).collect(),
    }
}

/// Reorders a one-packet-per-leaf tree so it pops leaves in the order given by
/// `target`, using only the tree's own push and pop operations. Returns the
/// script that was applied (n dummy pushes, then n pops) together with the
/// resulting tree.
///
/// The k-th dummy rides the route the target order uses for its k-th departure,
/// ranked above everything already queued at internal nodes and at rank 0 in
/// its leaf. The n pops then drain the original scheduler entries while
/// emitting only dummies, leaving the dummies' entries, which realize the
/// target order, behind. Leaf contents never move.
pub fn permute_by_dummy<T: Clone + PartialEq>(
    q_pi: &PifoTree<T>,
    target: &Permutation,
    dummy: T,
) -> Result<(Vec<ScriptOp<T>>, PifoTree<T>), PermError> {
    if !q_pi.is_well_formed() {
        return Err(PermError::IllFormed);
    }
    let leaves = q_pi.topology().leaves();
    if leaves.len() != target.len() {
        return Err(PermError::CountMismatch {
            expected: leaves.len(),
            got: target.len(),
        });
    }
    for q in leaf_queues(q_pi) {
        if q.len() != 1 {
            return Err(PermError::OnePacketPerLeaf);
        }
        if q.peek().map(|(_, r)| r) <= Some(Rat::zero()) {
            return Err(PermError::LeafRankNotPositive);
        }
        if q.peek().map(|(e, _)| e) == Some(&dummy) {
            return Err(PermError::DummyCollision);
        }
    }

    let base = max_internal_rank(q_pi).unwrap_or_else(Rat::zero);
    let n = leaves.len() as u32;
    let mut tree = q_pi.clone();
    let mut script = Vec::with_capacity(2 * n as usize);
    for k in 1..=n {
        let addr = &leaves[target.apply(k) as usize - 1];
        let rank = base + Rat::from(k);
        let steps = addr.as_slice().iter().map(|&c| (c, rank)).collect();
        let path = Path::new(steps, Rat::zero());
        tree.push(dummy.clone(), &path)
            .expect("leaf address fits the tree");
        script.push(ScriptOp::Push(dummy.clone(), path));
    }
    for _ in 0..n {
        tree.pop().expect("tree holds packets");
        script.push(ScriptOp::Pop);
    }
    Ok((script, tree))
}

/// True when `whole` can be split into the sequences in `parts`, each kept in
/// its own order. Handles repeated values by trying every consistent split.
pub fn is_interleaving<T: PartialEq>(whole: &[T], parts: &[Vec<T>]) -> bool {
    fn search<T: PartialEq>(whole: &[T], parts: &[Vec<T>], pos: &mut [usize], k: usize) -> bool {
        if k == whole.len() {
            return pos
                .iter()
                .zip(parts)
                .all(|(&p, part)| p == part.len());
        }
        for (pi, part) in parts.iter().enumerate() {
            if pos[pi] < part.len() && part[pos[pi]] == whole[k] {
                pos[pi] += 1;
                if search(whole, parts, pos, k + 1) {
                    return true;
                }
                pos[pi] -= 1;
            }
        }
        false
    }
    if whole.len() != parts.iter().map(Vec::len).sum::<usize>() {
        return false;
    }
    search(whole, parts, &mut vec![0; parts.len()], 0)
}
