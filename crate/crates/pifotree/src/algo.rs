//! Searches for embeddings between topologies.
//!
//! Three entry points, in increasing generality and cost:
//! - [`embed_into_dary`]: Huffman-style greedy merge producing a minimal-height
//!   embedding into a complete d-ary tree; always succeeds.
//! - [`embed_into_arbitrary`]: dynamic program over (source node, target node)
//!   pairs for an arbitrary target; finds an embedding exactly when one exists.
//! - [`brute_force_embed`]: exhaustive search over injective address maps,
//!   guarded to small instances; used as a test oracle for the other two.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::embed::Embedding;
use crate::topo::{Addr, Topo};

/// Largest source the brute-force oracle accepts, in addresses.
pub const BRUTE_FORCE_MAX_SOURCE: usize = 8;
/// Largest target the brute-force oracle accepts, in addresses. Sized to admit
/// complete ternary trees of height 2 (13 addresses) so it can cross-check the
/// greedy algorithm's minimality at small heights.
pub const BRUTE_FORCE_MAX_TARGET: usize = 13;
/// Default cap on source arity for the dynamic program's per-node assignment
/// search, which is exponential in the arity.
pub const DEFAULT_ARITY_CAP: usize = 6;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlgoError {
    #[error("branching factor must be at least 2, got {0}")]
    ArityTooSmall(u32),
    #[error("source has {got} addresses; the brute-force oracle accepts at most {max}")]
    SourceTooLarge { got: usize, max: usize },
    #[error("target has {got} addresses; the brute-force oracle accepts at most {max}")]
    TargetTooLarge { got: usize, max: usize },
    #[error("source node has {got} children, above the assignment-search cap of {cap}")]
    ArityAboveCap { got: usize, cap: usize },
}

struct GreedyEntry {
    /// Height of the d-ary region this entry occupies; doubles as the merge
    /// priority.
    priority: u32,
    /// Creation order; ties in priority are broken toward older entries so the
    /// result is deterministic.
    tag: u64,
    /// Subtree addresses (relative to the source node being processed) to
    /// region addresses (relative to this entry's region root).
    map: BTreeMap<Addr, Addr>,
}

fn prepend(slot: u32, addr: &Addr) -> Addr {
    Addr::new([slot].iter().chain(addr.as_slice()).copied().collect())
}

/// Returns the minimal embedding height for `topo` and a relative address map
/// whose leaves all land exactly at that depth.
fn greedy_embed_node(topo: &Topo, d: u32, next_tag: &mut u64) -> (u32, BTreeMap<Addr, Addr>) {
    let children = match topo {
        Topo::Leaf => {
            return (0, BTreeMap::from([(Addr::root(), Addr::root())]));
        }
        Topo::Node(children) => children,
    };

    let mut queue: Vec<GreedyEntry> = children
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let (h, sub) = greedy_embed_node(c, d, next_tag);
            let i = k as u32 + 1;
            *next_tag += 1;
            GreedyEntry {
                priority: h,
                tag: *next_tag,
                map: sub
                    .into_iter()
                    .map(|(a, b)| (prepend(i, &a), b))
                    .collect(),
            }
        })
        .collect();

    if queue.len() == 1 {
        // A lone child still needs a level of its own below this node.
        let e = queue.pop().expect("one entry");
        let mut map = BTreeMap::from([(Addr::root(), Addr::root())]);
        map.extend(e.map.into_iter().map(|(a, b)| (a, prepend(1, &b))));
        return (e.priority + 1, map);
    }

    while queue.len() > 1 {
        queue.sort_by_key(|e| (e.priority, e.tag));
        let m = queue[0].priority;
        let batch_len = queue
            .iter()
            .take(d as usize)
            .take_while(|e| e.priority == m)
            .count();
        let batch: Vec<GreedyEntry> = queue.drain(..batch_len).collect();
        if batch.len() == 1 {
            // Nothing shares this entry's height: float it one level deeper
            // (slot 1 of a fresh transit node) and retry at the next height.
            let e = batch.into_iter().next().expect("one entry");
            queue.push(GreedyEntry {
                priority: m + 1,
                tag: e.tag,
                map: e
                    .map
                    .into_iter()
                    .map(|(a, b)| (a, prepend(1, &b)))
                    .collect(),
            });
        } else {
            let mut map = BTreeMap::new();
            for (slot, e) in batch.into_iter().enumerate() {
                map.extend(
                    e.map
                        .into_iter()
                        .map(|(a, b)| (a, prepend(slot as u32 + 1, &b))),
                );
            }
            *next_tag += 1;
            queue.push(GreedyEntry {
                priority: m + 1,
                tag: *next_tag,
                map,
            });
        }
    }

    let f = queue.pop().expect("one entry remains");
    let mut map = BTreeMap::from([(Addr::root(), Addr::root())]);
    map.extend(f.map);
    (f.priority, map)
}

/// Embeds `source` into a complete `d`-ary tree of minimal height, returning
/// the embedding and that height. Sibling subtrees are merged Huffman-style:
/// repeatedly extract up to `d` entries of the least height (oldest first),
/// either floating a lone entry one level deeper or merging the batch under a
/// fresh node one level up. The reported target is the full complete tree;
/// target addresses outside the image are simply never used.
pub fn embed_into_dary(source: &Topo, d: u32) -> Result<(Embedding, u32), AlgoError> {
    if d < 2 {
        return Err(AlgoError::ArityTooSmall(d));
    }
    let mut tag = 0;
    let (h, map) = greedy_embed_node(source, d, &mut tag);
    let target = if h == 0 {
        Topo::Leaf
    } else {
        Topo::complete_dary(d, h)
    };
    let e = Embedding::new(source.clone(), target, map)
        .expect("greedy construction yields a valid embedding");
    Ok((e, h))
}

fn max_arity(t: &Topo) -> usize {
    match t {
        Topo::Leaf => 0,
        Topo::Node(children) => children
            .len()
            .max(children.iter().map(max_arity).max().unwrap_or(0)),
    }
}

struct DpSearch<'a> {
    src_addrs: &'a [Addr],
    tgt_addrs: &'a [Addr],
    src_children: Vec<Vec<usize>>,
    src_is_leaf: Vec<bool>,
    tgt_is_leaf: Vec<bool>,
    /// For feasible pairs, the chosen target index per source child; `None`
    /// marks infeasible pairs.
    memo: BTreeMap<(usize, usize), Option<Vec<usize>>>,
}

impl DpSearch<'_> {
    /// Whether the source subtree at `i` embeds into the target subtree at `j`
    /// with `i` mapped to `j` exactly, memoized with a witness assignment.
    fn feasible(&mut self, i: usize, j: usize) -> bool {
        if let Some(entry) = self.memo.get(&(i, j)) {
            return entry.is_some();
        }
        let result = self.solve(i, j);
        let ok = result.is_some();
        self.memo.insert((i, j), result);
        ok
    }

    fn solve(&mut self, i: usize, j: usize) -> Option<Vec<usize>> {
        if self.src_is_leaf[i] {
            return self.tgt_is_leaf[j].then(Vec::new);
        }
        if self.tgt_is_leaf[j] {
            return None;
        }
        let children = self.src_children[i].clone();
        // Viable targets per child: feasible strict descendants of j, pruned
        // to the deepest ones (a candidate with a viable descendant can always
        // be swapped for that descendant, so it is never needed).
        let mut candidates: Vec<Vec<usize>> = Vec::with_capacity(children.len());
        for &c in &children {
            let viable: Vec<usize> = (0..self.tgt_addrs.len())
                .filter(|&m| self.tgt_addrs[j].is_strict_prefix_of(&self.tgt_addrs[m]))
                .filter(|&m| self.feasible(c, m))
                .collect();
            let deepest: Vec<usize> = viable
                .iter()
                .copied()
                .filter(|&m| {
                    !viable
                        .iter()
                        .any(|&m2| self.tgt_addrs[m].is_strict_prefix_of(&self.tgt_addrs[m2]))
                })
                .collect();
            if deepest.is_empty() {
                return None;
            }
            candidates.push(deepest);
        }
        // Pick one candidate per child, pairwise incomparable, by backtracking.
        let mut chosen: Vec<usize> = Vec::with_capacity(children.len());
        if self.assign(&candidates, &mut chosen) {
            Some(chosen)
        } else {
            None
        }
    }

    fn assign(&self, candidates: &[Vec<usize>], chosen: &mut Vec<usize>) -> bool {
        let k = chosen.len();
        if k == candidates.len() {
            return true;
        }
        for &m in &candidates[k] {
            let independent = chosen.iter().all(|&p| {
                !self.tgt_addrs[p].is_prefix_of(&self.tgt_addrs[m])
                    && !self.tgt_addrs[m].is_prefix_of(&self.tgt_addrs[p])
            });
            if independent {
                chosen.push(m);
                if self.assign(candidates, chosen) {
                    return true;
                }
                chosen.pop();
            }
        }
        false
    }

    fn reconstruct(&self, i: usize, j: usize, map: &mut BTreeMap<Addr, Addr>) {
        map.insert(self.src_addrs[i].clone(), self.tgt_addrs[j].clone());
        if let Some(Some(witness)) = self.memo.get(&(i, j)) {
            for (&c, &m) in self.src_children[i].iter().zip(witness) {
                self.reconstruct(c, m, map);
            }
        }
    }
}

/// Decides whether `source` embeds into `target` and returns a witness
/// embedding when it does, using the default source-arity cap.
pub fn embed_into_arbitrary(source: &Topo, target: &Topo) -> Result<Option<Embedding>, AlgoError> {
    embed_into_arbitrary_capped(source, target, DEFAULT_ARITY_CAP)
}

/// As [`embed_into_arbitrary`], with an explicit cap on source arity. The
/// per-node assignment search is exponential in the arity, so arities above
/// the cap are rejected rather than silently attempted.
pub fn embed_into_arbitrary_capped(
    source: &Topo,
    target: &Topo,
    cap: usize,
) -> Result<Option<Embedding>, AlgoError> {
    let arity = max_arity(source);
    if arity > cap {
        return Err(AlgoError::ArityAboveCap { got: arity, cap });
    }
    let src_addrs = source.addresses();
    let tgt_addrs = target.addresses();
    let index_of: BTreeMap<&Addr, usize> =
        src_addrs.iter().enumerate().map(|(i, a)| (a, i)).collect();
    let mut src_children = vec![Vec::new(); src_addrs.len()];
    for (i, a) in src_addrs.iter().enumerate() {
        if let Some(p) = a.parent() {
            src_children[index_of[&p]].push(i);
        }
    }
    let mut search = DpSearch {
        src_addrs: &src_addrs,
        tgt_addrs: &tgt_addrs,
        src_children,
        src_is_leaf: src_addrs.iter().map(|a| source.is_leaf_at(a)).collect(),
        tgt_is_leaf: tgt_addrs.iter().map(|a| target.is_leaf_at(a)).collect(),
        memo: BTreeMap::new(),
    };
    if !search.feasible(0, 0) {
        return Ok(None);
    }
    let mut map = BTreeMap::new();
    search.reconstruct(0, 0, &mut map);
    let e = Embedding::new(source.clone(), target.clone(), map)
        .expect("table reconstruction yields a valid embedding");
    Ok(Some(e))
}

fn brute_force_dfs(
    source: &Topo,
    target: &Topo,
    src: &[Addr],
    tgt: &[Addr],
    chosen: &mut Vec<Addr>,
) -> bool {
    let k = chosen.len();
    if k == src.len() {
        return true;
    }
    let a = &src[k];
    for b in tgt {
        if chosen.contains(b) {
            continue;
        }
        if a.is_root() != b.is_root() {
            continue;
        }
        if source.is_leaf_at(a) != target.is_leaf_at(b) {
            continue;
        }
        let consistent = (0..k).all(|p| {
            src[p].is_strict_prefix_of(a) == chosen[p].is_strict_prefix_of(b)
                && a.is_strict_prefix_of(&src[p]) == b.is_strict_prefix_of(&chosen[p])
        });
        if !consistent {
            continue;
        }
        chosen.push(b.clone());
        if brute_force_dfs(source, target, src, tgt, chosen) {
            return true;
        }
        chosen.pop();
    }
    false
}

/// Exhaustive embedding search over injective address maps, for small inputs
/// only. Serves as the oracle the two real algorithms are checked against.
pub fn brute_force_embed(source: &Topo, target: &Topo) -> Result<Option<Embedding>, AlgoError> {
    let src = source.addresses();
    let tgt = target.addresses();
    if src.len() > BRUTE_FORCE_MAX_SOURCE {
        return Err(AlgoError::SourceTooLarge {
            got: src.len(),
            max: BRUTE_FORCE_MAX_SOURCE,
        });
    }
    if tgt.len() > BRUTE_FORCE_MAX_TARGET {
        return Err(AlgoError::TargetTooLarge {
            got: tgt.len(),
            max: BRUTE_FORCE_MAX_TARGET,
        });
    }
    let mut chosen = Vec::with_capacity(src.len());
    if !brute_force_dfs(source, target, &src, &tgt, &mut chosen) {
        return Ok(None);
    }
    let map = src.iter().cloned().zip(chosen).collect();
    let e = Embedding::new(source.clone(), target.clone(), map)
        .expect("search enforces every embedding condition");
    Ok(Some(e))
}
