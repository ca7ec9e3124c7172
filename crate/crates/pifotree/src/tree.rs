//! PIFO trees: schedulers whose internal nodes are PIFOs over child indices and
//! whose leaves are PIFOs over packets.
//!
//! A push carries a `Path`: one (child index, rank) step per internal node from
//! the root down, then a rank for the destination leaf. A pop follows the head of
//! each scheduler downward and emits the head packet of the reached leaf.
//!
//! All sequences returned by this module are in pop order: index 0 is the first
//! element popped. Only the dump pretty-printer reverses, drawing queue heads on
//! the right.

use std::fmt;

use thiserror::Error;

use crate::pifo::Pifo;
use crate::rat::{Rank, Rat};
use crate::topo::{Addr, Topo};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("path names child {index} but the node has {arity} children")]
    BadChildIndex { index: u32, arity: usize },
    #[error("path continues below a leaf")]
    PathTooLong,
    #[error("path stops at an internal node")]
    PathTooShort,
    #[error("tree is not well-formed")]
    IllFormed,
    #[error("trees have different topologies")]
    TopologyMismatch,
    #[error("bad dump: {0}")]
    Dump(String),
}

/// Route for one push: a (1-based child index, rank) pair per internal node from
/// the root downward, then the rank the packet takes in the leaf it reaches.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Path {
    pub steps: Vec<(u32, Rank)>,
    pub leaf_rank: Rank,
}

impl Path {
    pub fn new(steps: Vec<(u32, Rank)>, leaf_rank: Rank) -> Self {
        Path { steps, leaf_rank }
    }

    /// Path for a tree that is a single leaf.
    pub fn leaf(leaf_rank: Rank) -> Self {
        Path {
            steps: Vec::new(),
            leaf_rank,
        }
    }

    /// The leaf this path leads to, as an address.
    pub fn destination(&self) -> Addr {
        Addr::new(self.steps.iter().map(|&(i, _)| i).collect())
    }
}

/// One step of a replayable workload against a tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScriptOp<T> {
    Push(T, Path),
    Pop,
}

/// A scheduling tree holding packets of type `T`.
///
/// The variants are public so callers (and tests) can assemble arbitrary states,
/// including ill-formed ones; `is_well_formed` reports whether every scheduler
/// agrees with its subtrees' occupancy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PifoTree<T> {
    Leaf(Pifo<T>),
    Internal {
        children: Vec<PifoTree<T>>,
        sched: Pifo<u32>,
    },
}

impl<T> PifoTree<T> {
    /// Empty tree with the given shape.
    pub fn new(topo: &Topo) -> Self {
        match topo {
            Topo::Leaf => PifoTree::Leaf(Pifo::new()),
            Topo::Node(children) => PifoTree::Internal {
                children: children.iter().map(PifoTree::new).collect(),
                sched: Pifo::new(),
            },
        }
    }

    pub fn topology(&self) -> Topo {
        match self {
            PifoTree::Leaf(_) => Topo::Leaf,
            PifoTree::Internal { children, .. } => {
                Topo::Node(children.iter().map(PifoTree::topology).collect())
            }
        }
    }

    /// Number of packets stored in the leaves of this subtree.
    pub fn size(&self) -> usize {
        match self {
            PifoTree::Leaf(q) => q.len(),
            PifoTree::Internal { children, .. } => children.iter().map(PifoTree::size).sum(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.size() == 0
    }

    /// Subtree at `addr`, if it exists.
    pub fn at(&self, addr: &Addr) -> Option<&PifoTree<T>> {
        let mut node = self;
        for &i in addr.as_slice() {
            match node {
                PifoTree::Leaf(_) => return None,
                PifoTree::Internal { children, .. } => {
                    node = children.get((i as usize).checked_sub(1)?)?;
                }
            }
        }
        Some(node)
    }

    pub fn at_mut(&mut self, addr: &Addr) -> Option<&mut PifoTree<T>> {
        let mut node = self;
        for &i in addr.as_slice() {
            match node {
                PifoTree::Leaf(_) => return None,
                PifoTree::Internal { children, .. } => {
                    node = children.get_mut((i as usize).checked_sub(1)?)?;
                }
            }
        }
        Some(node)
    }

    /// Scheduler contents at an internal node, for inspection.
    pub fn sched_at(&self, addr: &Addr) -> Option<&Pifo<u32>> {
        match self.at(addr)? {
            PifoTree::Internal { sched, .. } => Some(sched),
            PifoTree::Leaf(_) => None,
        }
    }

    /// Leaf queue contents, for inspection.
    pub fn leaf_at(&self, addr: &Addr) -> Option<&Pifo<T>> {
        match self.at(addr)? {
            PifoTree::Leaf(q) => Some(q),
            PifoTree::Internal { .. } => None,
        }
    }

    fn check_path(&self, path: &Path) -> Result<(), TreeError> {
        let mut node = self;
        for &(i, _) in &path.steps {
            match node {
                PifoTree::Internal { children, .. } => {
                    let idx = (i as usize).checked_sub(1);
                    node = match idx.and_then(|k| children.get(k)) {
                        Some(c) => c,
                        None => {
                            return Err(TreeError::BadChildIndex {
                                index: i,
                                arity: children.len(),
                            })
                        }
                    };
                }
                PifoTree::Leaf(_) => return Err(TreeError::PathTooLong),
            }
        }
        match node {
            PifoTree::Leaf(_) => Ok(()),
            PifoTree::Internal { .. } => Err(TreeError::PathTooShort),
        }
    }

    /// Inserts a packet along `path`. The whole path is validated before any
    /// queue is touched, so a failed push leaves the tree exactly as it was.
    pub fn push(&mut self, elem: T, path: &Path) -> Result<(), TreeError> {
        self.check_path(path)?;
        let mut node = self;
        for &(i, r) in &path.steps {
            match node {
                PifoTree::Internal { children, sched } => {
                    sched.push(i, r);
                    node = &mut children[i as usize - 1];
                }
                PifoTree::Leaf(_) => unreachable!("validated above"),
            }
        }
        match node {
            PifoTree::Leaf(q) => q.push(elem, path.leaf_rank),
            PifoTree::Internal { .. } => unreachable!("validated above"),
        }
        Ok(())
    }

    fn route_exists(&self) -> bool {
        match self {
            PifoTree::Leaf(q) => q.peek().is_some(),
            PifoTree::Internal { children, sched } => match sched.peek() {
                Some((&i, _)) => (i as usize)
                    .checked_sub(1)
                    .and_then(|k| children.get(k))
                    .is_some_and(PifoTree::route_exists),
                None => false,
            },
        }
    }

    fn commit_pop(&mut self) -> T {
        match self {
            PifoTree::Leaf(q) => q.pop().expect("route checked").0,
            PifoTree::Internal { children, sched } => {
                let (i, _) = sched.pop().expect("route checked");
                children[i as usize - 1].commit_pop()
            }
        }
    }

    /// Removes and returns the next packet, or `None` when no complete route
    /// from the root scheduler to a non-empty leaf exists. The route is checked
    /// before anything is removed, so on an inconsistent tree a failed pop does
    /// not disturb any queue.
    pub fn pop(&mut self) -> Option<T> {
        if self.route_exists() {
            Some(self.commit_pop())
        } else {
            None
        }
    }

    /// True when, at every internal node, the scheduler holds exactly as many
    /// copies of each child index as that child holds packets, and no other
    /// values.
    pub fn is_well_formed(&self) -> bool {
        match self {
            PifoTree::Leaf(_) => true,
            PifoTree::Internal { children, sched } => {
                let n = children.len();
                let mut counts = vec![0usize; n];
                for (&i, _) in sched.iter_sorted() {
                    match (i as usize).checked_sub(1) {
                        Some(k) if k < n => counts[k] += 1,
                        _ => return false,
                    }
                }
                children
                    .iter()
                    .zip(&counts)
                    .all(|(c, &cnt)| cnt == c.size())
                    && children.iter().all(PifoTree::is_well_formed)
            }
        }
    }
}

impl<T: Clone> PifoTree<T> {
    /// All packets in pop order. Defined only on well-formed trees, where
    /// popping is guaranteed to drain every packet.
    pub fn flush(&self) -> Result<Vec<T>, TreeError> {
        if !self.is_well_formed() {
            return Err(TreeError::IllFormed);
        }
        let mut copy = self.clone();
        let mut out = Vec::with_capacity(copy.size());
        while let Some(x) = copy.pop() {
            out.push(x);
        }
        Ok(out)
    }

    /// Per-leaf contents: one sequence per leaf, leaves left to right, each in
    /// its own pop order. Unlike `flush`, this ignores the internal schedulers.
    pub fn snap(&self) -> Vec<Vec<T>> {
        match self {
            PifoTree::Leaf(q) => vec![q.flush()],
            PifoTree::Internal { children, .. } => {
                children.iter().flat_map(PifoTree::snap).collect()
            }
        }
    }

    /// Applies one scripted operation; `Pop` returns the packet it removed.
    pub fn apply(&mut self, op: &ScriptOp<T>) -> Result<Option<T>, TreeError> {
        match op {
            ScriptOp::Push(x, path) => self.push(x.clone(), path).map(|_| None),
            ScriptOp::Pop => Ok(self.pop()),
        }
    }

    /// A tree over the same topology that pops everything in `self`, then
    /// everything in `other`: at every node, `other`'s ranks are shifted above
    /// `self`'s maximum so the two halves never interleave.
    pub fn concat(&self, other: &Self) -> Result<Self, TreeError> {
        fn shifted_copy<U: Clone>(a: &Pifo<U>, b: &Pifo<U>) -> Pifo<U> {
            let mut q = Pifo::new();
            for (e, r) in a.iter_sorted() {
                q.push(e.clone(), r);
            }
            let shift = a
                .max_rank()
                .map(|r| r + Rat::from(1u32))
                .unwrap_or_else(Rat::zero);
            for (e, r) in b.iter_sorted() {
                q.push(e.clone(), r + shift);
            }
            q
        }
        match (self, other) {
            (PifoTree::Leaf(a), PifoTree::Leaf(b)) => Ok(PifoTree::Leaf(shifted_copy(a, b))),
            (
                PifoTree::Internal {
                    children: ca,
                    sched: sa,
                },
                PifoTree::Internal {
                    children: cb,
                    sched: sb,
                },
            ) => {
                if ca.len() != cb.len() {
                    return Err(TreeError::TopologyMismatch);
                }
                let children = ca
                    .iter()
                    .zip(cb)
                    .map(|(x, y)| x.concat(y))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(PifoTree::Internal {
                    children,
                    sched: shifted_copy(sa, sb),
                })
            }
            _ => Err(TreeError::TopologyMismatch),
        }
    }
}

fn dump_queue_line<T: fmt::Display>(q: &Pifo<T>) -> String {
    let mut items: Vec<String> = q
        .iter_sorted()
        .map(|(e, r)| format!("{e}@{r}"))
        .collect();
    items.reverse();
    items.join(", ")
}

fn parse_queue_items(text: &str, what: &str) -> Result<Vec<(String, Rank)>, TreeError> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let mut items = Vec::new();
    for piece in text.split(',') {
        let piece = piece.trim();
        let at = piece
            .rfind('@')
            .ok_or_else(|| TreeError::Dump(format!("{what}: missing `@` in `{piece}`")))?;
        let label = piece[..at].trim();
        if label.is_empty() {
            return Err(TreeError::Dump(format!("{what}: empty value in `{piece}`")));
        }
        let rank: Rat = piece[at + 1..]
            .parse()
            .map_err(|_| TreeError::Dump(format!("{what}: bad rank in `{piece}`")))?;
        items.push((label.to_string(), rank));
    }
    for pair in items.windows(2) {
        if pair[0].1 < pair[1].1 {
            return Err(TreeError::Dump(format!(
                "{what}: ranks must be non-increasing left to right (head is rightmost)"
            )));
        }
    }
    Ok(items)
}

impl PifoTree<String> {
    /// Renders the full tree state as text. Queues are listed with their head
    /// (next to pop) on the right; nodes appear in preorder.
    pub fn to_dump(&self) -> String {
        let topo = self.topology();
        let mut out = String::from("# pifotree-dump v1\n");
        out.push_str(&format!("tree {topo}\n"));
        for addr in topo.addresses() {
            match self.at(&addr).expect("address from own topology") {
                PifoTree::Internal { sched, .. } => {
                    out.push_str(&format!("node {addr} : {}\n", dump_queue_line(sched)));
                }
                PifoTree::Leaf(q) => {
                    out.push_str(&format!("leaf {addr} : {}\n", dump_queue_line(q)));
                }
            }
        }
        out
    }

    /// Parses the `to_dump` format. Nodes not mentioned are left empty; queue
    /// entries are read right to left so the rightmost entry pops first.
    pub fn parse_dump(input: &str) -> Result<PifoTree<String>, TreeError> {
        let mut lines = input
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .peekable();
        match lines.next() {
            Some("# pifotree-dump v1") => {}
            _ => {
                return Err(TreeError::Dump(
                    "first line must be `# pifotree-dump v1`".into(),
                ))
            }
        }
        let topo_line = lines
            .next()
            .ok_or_else(|| TreeError::Dump("missing `tree` line".into()))?;
        let topo_text = topo_line
            .strip_prefix("tree ")
            .ok_or_else(|| TreeError::Dump("second line must start with `tree `".into()))?;
        let topo: Topo = topo_text
            .parse()
            .map_err(|e| TreeError::Dump(format!("bad topology: {e}")))?;
        let mut tree = PifoTree::new(&topo);
        let mut seen: Vec<Addr> = Vec::new();
        for line in lines {
            if line.starts_with('#') {
                continue;
            }
            let (kind, rest) = line
                .split_once(' ')
                .ok_or_else(|| TreeError::Dump(format!("unreadable line `{line}`")))?;
            let (addr_text, items_text) = rest
                .split_once(':')
                .ok_or_else(|| TreeError::Dump(format!("missing `:` in `{line}`")))?;
            let addr: Addr = addr_text
                .trim()
                .parse()
                .map_err(|e| TreeError::Dump(format!("bad address: {e}")))?;
            if seen.contains(&addr) {
                return Err(TreeError::Dump(format!("duplicate entry for `{addr}`")));
            }
            seen.push(addr.clone());
            let items = parse_queue_items(items_text, &format!("{kind} {addr}"))?;
            let node = tree
                .at_mut(&addr)
                .ok_or_else(|| TreeError::Dump(format!("no node at `{addr}`")))?;
            match (kind, node) {
                ("node", PifoTree::Internal { sched, .. }) => {
                    for (label, rank) in items.into_iter().rev() {
                        let i: u32 = label.parse().map_err(|_| {
                            TreeError::Dump(format!("node {addr}: `{label}` is not a child index"))
                        })?;
                        sched.push(i, rank);
                    }
                }
                ("leaf", PifoTree::Leaf(q)) => {
                    for (label, rank) in items.into_iter().rev() {
                        q.push(label, rank);
                    }
                }
                ("node", PifoTree::Leaf(_)) => {
                    return Err(TreeError::Dump(format!("`{addr}` is a leaf, not a node")))
                }
                ("leaf", PifoTree::Internal { .. }) => {
                    return Err(TreeError::Dump(format!("`{addr}` is a node, not a leaf")))
                }
                _ => {
                    return Err(TreeError::Dump(format!(
                        "lines must start with `node` or `leaf`, got `{kind}`"
                    )))
                }
            }
        }
        Ok(tree)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64) -> Rank {
        Rat::new(n, 1).unwrap()
    }

    fn ratio(n: i64, d: i64) -> Rank {
        Rat::new(n, d).unwrap()
    }

    fn drain<T>(tree: &mut PifoTree<T>) -> Vec<T> {
        std::iter::from_fn(|| tree.pop()).collect()
    }

    #[test]
    fn push_then_pop_single_leaf() {
        let mut t: PifoTree<&str> = PifoTree::new(&Topo::Leaf);
        t.push("low", &Path::leaf(r(2))).unwrap();
        t.push("high", &Path::leaf(r(1))).unwrap();
        assert_eq!(t.size(), 2);
        assert_eq!(drain(&mut t), vec!["high", "low"]);
        assert_eq!(t.pop(), None);
    }

    #[test]
    fn two_level_tree_interleaves_by_root_ranks() {
        let topo: Topo = "[*,*]".parse().unwrap();
        let mut t: PifoTree<&str> = PifoTree::new(&topo);
        t.push("a1", &Path::new(vec![(1, r(1))], r(1))).unwrap();
        t.push("b1", &Path::new(vec![(2, r(2))], r(1))).unwrap();
        t.push("a2", &Path::new(vec![(1, r(3))], r(2))).unwrap();
        assert!(t.is_well_formed());
        assert_eq!(drain(&mut t), vec!["a1", "b1", "a2"]);
    }

    #[test]
    fn failed_push_leaves_tree_untouched() {
        let topo: Topo = "[*,[*,*]]".parse().unwrap();
        let mut t: PifoTree<&str> = PifoTree::new(&topo);
        t.push("ok", &Path::new(vec![(1, r(1))], r(1))).unwrap();

        let too_short = Path::new(vec![(2, r(1))], r(1));
        assert_eq!(t.push("x", &too_short), Err(TreeError::PathTooShort));
        let too_long = Path::new(vec![(1, r(1)), (1, r(1))], r(1));
        assert_eq!(t.push("x", &too_long), Err(TreeError::PathTooLong));
        let bad_index = Path::new(vec![(3, r(1))], r(1));
        assert_eq!(
            t.push("x", &bad_index),
            Err(TreeError::BadChildIndex { index: 3, arity: 2 })
        );

        assert_eq!(t.size(), 1);
        assert!(t.is_well_formed());
        assert_eq!(t.flush().unwrap(), vec!["ok"]);
    }

    #[test]
    fn pop_on_inconsistent_tree_fails_without_side_effects() {
        let mut dangling = PifoTree::Internal {
            children: vec![PifoTree::Leaf(Pifo::<&str>::new())],
            sched: Pifo::from([(1u32, r(1))]),
        };
        assert!(!dangling.is_well_formed());
        assert_eq!(dangling.pop(), None);
        assert_eq!(dangling.sched_at(&Addr::root()).unwrap().len(), 1);

        let mut out_of_range = PifoTree::Internal {
            children: vec![PifoTree::Leaf(Pifo::from([("a", r(1))]))],
            sched: Pifo::from([(2u32, r(1))]),
        };
        assert_eq!(out_of_range.pop(), None);
        assert_eq!(out_of_range.size(), 1);

        let mut zero_index = PifoTree::Internal {
            children: vec![PifoTree::Leaf(Pifo::from([("a", r(1))]))],
            sched: Pifo::from([(0u32, r(1))]),
        };
        assert_eq!(zero_index.pop(), None);
    }

    #[test]
    fn well_formedness_counts_occupancy_per_child() {
        let topo: Topo = "[*,*]".parse().unwrap();
        let mut t: PifoTree<&str> = PifoTree::new(&topo);
        assert!(t.is_well_formed());
        t.push("a", &Path::new(vec![(1, r(1))], r(1))).unwrap();
        t.push("b", &Path::new(vec![(2, r(2))], r(1))).unwrap();
        assert!(t.is_well_formed());

        let skewed: PifoTree<&str> = PifoTree::Internal {
            children: vec![
                PifoTree::Leaf(Pifo::from([("a", r(1))])),
                PifoTree::Leaf(Pifo::new()),
            ],
            sched: Pifo::from([(2u32, r(1))]),
        };
        assert!(!skewed.is_well_formed());
        assert_eq!(skewed.flush(), Err(TreeError::IllFormed));
        assert_eq!(skewed.snap(), vec![vec!["a"], vec![]]);
    }

    #[test]
    fn flush_returns_pop_order_and_preserves_tree() {
        let topo: Topo = "[*,*]".parse().unwrap();
        let mut t: PifoTree<&str> = PifoTree::new(&topo);
        t.push("x", &Path::new(vec![(1, r(2))], r(1))).unwrap();
        t.push("y", &Path::new(vec![(2, r(1))], r(1))).unwrap();
        let flushed = t.flush().unwrap();
        assert_eq!(flushed, vec!["y", "x"]);
        assert_eq!(t.size(), 2);
        assert_eq!(t.snap(), vec![vec!["x"], vec!["y"]]);
    }

    #[test]
    fn scripts_replay_pushes_and_pops() {
        let mut t: PifoTree<&str> = PifoTree::new(&Topo::Leaf);
        let ops = vec![
            ScriptOp::Push("a", Path::leaf(r(2))),
            ScriptOp::Push("b", Path::leaf(r(1))),
            ScriptOp::Pop,
            ScriptOp::Pop,
            ScriptOp::Pop,
        ];
        let mut popped = Vec::new();
        for op in &ops {
            if let Some(x) = t.apply(op).unwrap() {
                popped.push(x);
            }
        }
        assert_eq!(popped, vec!["b", "a"]);
        assert!(t.is_empty());
    }

    #[test]
    fn concat_pops_left_tree_first() {
        let topo: Topo = "[*,*]".parse().unwrap();
        let mut a: PifoTree<&str> = PifoTree::new(&topo);
        a.push("a1", &Path::new(vec![(1, r(5))], r(5))).unwrap();
        a.push("a2", &Path::new(vec![(2, r(7))], r(7))).unwrap();
        let mut b: PifoTree<&str> = PifoTree::new(&topo);
        b.push("b1", &Path::new(vec![(2, r(1))], r(1))).unwrap();
        let joined = a.concat(&b).unwrap();
        assert!(joined.is_well_formed());
        assert_eq!(joined.flush().unwrap(), vec!["a1", "a2", "b1"]);

        let other: PifoTree<&str> = PifoTree::new(&"*".parse().unwrap());
        assert_eq!(a.concat(&other), Err(TreeError::TopologyMismatch));
    }

    #[test]
    fn dump_round_trips_and_draws_head_on_the_right() {
        let topo: Topo = "[*,*]".parse().unwrap();
        let mut t: PifoTree<String> = PifoTree::new(&topo);
        t.push("A".into(), &Path::new(vec![(1, r(1))], r(1)))
            .unwrap();
        t.push("B".into(), &Path::new(vec![(2, r(2))], r(1)))
            .unwrap();
        t.push("C".into(), &Path::new(vec![(1, ratio(3, 2))], r(2)))
            .unwrap();
        let dump = t.to_dump();
        assert!(dump.contains("node . : 2@2, 1@3/2, 1@1"));
        assert!(dump.contains("leaf 1 : C@2, A@1"));
        let back = PifoTree::parse_dump(&dump).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.flush().unwrap(), t.flush().unwrap());
    }

    #[test]
    fn dump_parser_rejects_inconsistent_text() {
        assert!(PifoTree::parse_dump("tree *").is_err());
        let no_tree = "# pifotree-dump v1\nleaf . : a@1";
        assert!(PifoTree::parse_dump(no_tree).is_err());
        let bad_kind = "# pifotree-dump v1\ntree [*,*]\nleaf . : a@1\n";
        assert!(PifoTree::parse_dump(bad_kind).is_err());
        let increasing = "# pifotree-dump v1\ntree *\nleaf . : a@1, b@2\n";
        assert!(PifoTree::parse_dump(increasing).is_err());
        let dup = "# pifotree-dump v1\ntree *\nleaf . : a@1\nleaf . : b@1\n";
        assert!(PifoTree::parse_dump(dup).is_err());
        let missing_ok = "# pifotree-dump v1\ntree [*,*]\n";
        let t = PifoTree::parse_dump(missing_ok).unwrap();
        assert_eq!(t.size(), 0);
    }

    #[test]
    fn dump_ties_pop_fifo_from_the_right() {
        let text = "# pifotree-dump v1\ntree *\nleaf . : c@1, b@1, a@1\n";
        let t = PifoTree::parse_dump(text).unwrap();
        assert_eq!(t.flush().unwrap(), vec!["a", "b", "c"]);
        assert_eq!(t.to_dump(), text);
    }
}
