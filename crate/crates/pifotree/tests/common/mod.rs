//! Shared helpers for the integration suites: seeded random generators for
//! topologies, ranks, paths, and workloads, plus an independent closed-form
//! oracle for the minimum height of a complete d-ary host tree.

use pifotree::topo::Topo;
use pifotree::tree::{Path, PifoTree, ScriptOp};
use pifotree::{Rank, Rat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random topology with at most `max_nodes` nodes and `max_arity` children
/// per node. Always returns at least a leaf.
pub fn random_topo(rng: &mut ChaCha8Rng, max_nodes: usize, max_arity: usize) -> Topo {
    let mut budget = max_nodes.max(1) - 1;
    gen_topo(rng, &mut budget, max_arity)
}

fn gen_topo(rng: &mut ChaCha8Rng, budget: &mut usize, max_arity: usize) -> Topo {
    if *budget == 0 || rng.gen_bool(0.3) {
        return Topo::Leaf;
    }
    let k = rng.gen_range(1..=max_arity.min(*budget).max(1));
    *budget -= k;
    Topo::Node((0..k).map(|_| gen_topo(rng, budget, max_arity)).collect())
}

/// Small non-negative rational rank: numerator 0..=12 over denominator 1..=4.
pub fn random_rank(rng: &mut ChaCha8Rng) -> Rank {
    Rat::new(rng.gen_range(0..=12), rng.gen_range(1..=4)).expect("positive denominator")
}

/// A push route to a uniformly chosen leaf of `topo`, with random ranks at
/// every scheduler on the way down and at the leaf.
pub fn random_path(rng: &mut ChaCha8Rng, topo: &Topo) -> Path {
    let leaves = topo.leaves();
    let leaf = &leaves[rng.gen_range(0..leaves.len())];
    let steps = leaf
        .as_slice()
        .iter()
        .map(|&i| (i, random_rank(rng)))
        .collect();
    Path::new(steps, random_rank(rng))
}

/// A workload of `ops` operations: pushes of consecutive u32 payloads along
/// random paths, mixed with pops.
pub fn random_script(rng: &mut ChaCha8Rng, topo: &Topo, ops: usize) -> Vec<ScriptOp<u32>> {
    (0..ops)
        .map(|i| {
            if rng.gen_bool(0.6) {
                ScriptOp::Push(i as u32, random_path(rng, topo))
            } else {
                ScriptOp::Pop
            }
        })
        .collect()
}

/// A well-formed tree over `topo` holding `n` packets pushed along random
/// paths, labelled 0..n.
pub fn random_tree(rng: &mut ChaCha8Rng, topo: &Topo, n: usize) -> PifoTree<u32> {
    let mut tree = PifoTree::new(topo);
    for i in 0..n {
        tree.push(i as u32, &random_path(rng, topo))
            .expect("path was built from the same topology");
    }
    tree
}

/// Minimum height of a complete `d`-ary tree that can host `topo` with the
/// root on the root, leaves on leaves, and ancestry preserved both ways.
///
/// Computed bottom-up: a leaf needs height 0, and a node whose children need
/// heights h_1..h_k needs the least h that is (a) strictly above every h_i and
/// (b) large enough that the children fit side by side, i.e. each child i can
/// claim d^(h - h_i - 1) ... equivalently sum over i of d^h_i <= d^h. Depths
/// in a complete d-ary tree of height h offer exactly d^h leaf slots, and a
/// child needing height h_i consumes d^h_i of them wherever it lands, so the
/// bound is exact.
pub fn min_dary_height(topo: &Topo, d: u32) -> u32 {
    match topo {
        Topo::Leaf => 0,
        Topo::Node(children) => {
            let needs: Vec<u32> = children.iter().map(|c| min_dary_height(c, d)).collect();
            let need = needs.iter().max().copied().unwrap_or(0) + 1;
            let sum: u128 = needs.iter().map(|&h| (d as u128).pow(h)).sum();
            let mut h = need;
            while (d as u128).pow(h) < sum {
                h += 1;
            }
            h
        }
    }
}
