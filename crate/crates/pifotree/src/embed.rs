//! Embeddings of one topology inside another, and the machinery to run a
//! scheduler built for the source topology on the target topology.
//!
//! An embedding is an injective address map that fixes the root, sends leaves
//! to leaves, and preserves ancestry in both directions. It lifts to whole
//! trees (copying leaf queues to their images and re-spreading scheduler
//! entries over the target's levels) and to push paths (duplicating a step's
//! rank across the extra target levels it must traverse).

use std::collections::BTreeMap;

use thiserror::Error;

use crate::pifo::Pifo;
use crate::topo::{Addr, Topo};
use crate::tree::{Path, PifoTree};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EmbedError {
    #[error("map must send the root to the root")]
    RootNotFixed,
    #[error("map must be defined on exactly the source addresses (problem at `{0}`)")]
    NotTotal(Addr),
    #[error("map is not injective (`{0}` is hit twice)")]
    NotInjective(Addr),
    #[error("image `{0}` is not an address of the target")]
    ImageMissing(Addr),
    #[error("leaf `{0}` must map to a target leaf")]
    LeafToInternal(Addr),
    #[error("ancestry not preserved between `{0}` and `{1}`")]
    AncestryBroken(Addr, Addr),
    #[error("tree does not have the embedding's source topology")]
    SourceMismatch,
    #[error("path is not valid for the source topology")]
    PathNotInSource,
    #[error("`{0}` is not a child index of the source root")]
    NoSuchChild(u32),
    #[error("bad embedding text: {0}")]
    Parse(String),
}

/// A validated injective address map from a source topology into a target.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Embedding {
    source: Topo,
    target: Topo,
    map: BTreeMap<Addr, Addr>,
}

impl Embedding {
    /// Builds and validates an embedding; every constructor goes through the
    /// same checks, so an `Embedding` value is always valid.
    pub fn new(source: Topo, target: Topo, map: BTreeMap<Addr, Addr>) -> Result<Self, EmbedError> {
        let e = Embedding {
            source,
            target,
            map,
        };
        e.validate()?;
        Ok(e)
    }

    /// The embedding of a topology into itself.
    pub fn identity(topo: &Topo) -> Embedding {
        let map = topo.addresses().into_iter().map(|a| (a.clone(), a)).collect();
        Embedding {
            source: topo.clone(),
            target: topo.clone(),
            map,
        }
    }

    /// Re-checks all embedding conditions: defined on exactly the source
    /// addresses, injective, root fixed, leaves to leaves, images in the
    /// target, and ancestry preserved in both directions.
    pub fn validate(&self) -> Result<(), EmbedError> {
        for a in self.source.addresses() {
            if !self.map.contains_key(&a) {
                return Err(EmbedError::NotTotal(a));
            }
        }
        for a in self.map.keys() {
            if !self.source.contains(a) {
                return Err(EmbedError::NotTotal(a.clone()));
            }
        }
        if self.map.get(&Addr::root()) != Some(&Addr::root()) {
            return Err(EmbedError::RootNotFixed);
        }
        let mut images: Vec<&Addr> = Vec::with_capacity(self.map.len());
        for (a, b) in &self.map {
            if !self.target.contains(b) {
                return Err(EmbedError::ImageMissing(b.clone()));
            }
            if self.source.is_leaf_at(a) && !self.target.is_leaf_at(b) {
                return Err(EmbedError::LeafToInternal(a.clone()));
            }
            if images.contains(&b) {
                return Err(EmbedError::NotInjective(b.clone()));
            }
            images.push(b);
        }
        for (a1, b1) in &self.map {
            for (a2, b2) in &self.map {
                if a1.is_strict_prefix_of(a2) != b1.is_strict_prefix_of(b2) {
                    return Err(EmbedError::AncestryBroken(a1.clone(), a2.clone()));
                }
            }
        }
        Ok(())
    }

    pub fn source(&self) -> &Topo {
        &self.source
    }

    pub fn target(&self) -> &Topo {
        &self.target
    }

    /// Image of a source address.
    pub fn get(&self, a: &Addr) -> Option<&Addr> {
        self.map.get(a)
    }

    /// All (source, image) pairs, sorted by source address.
    pub fn iter(&self) -> impl Iterator<Item = (&Addr, &Addr)> {
        self.map.iter()
    }

    /// Restricts the embedding to the source root's `i`-th child subtree,
    /// yielding an embedding of that subtree into the target subtree rooted at
    /// the child's image. Satisfies `self(i·a) = self(i) · decompose(i)(a)`.
    pub fn decompose(&self, i: u32) -> Result<Embedding, EmbedError> {
        let child = Addr::root().child(i);
        let src_sub = self
            .source
            .at(&child)
            .ok_or(EmbedError::NoSuchChild(i))?
            .clone();
        let img = self.map.get(&child).expect("map is total").clone();
        let tgt_sub = self.target.at(&img).expect("images are valid").clone();
        let mut map = BTreeMap::new();
        for (a, b) in &self.map {
            if let Some(rest) = child.strip_prefix(a) {
                let rest_img = img
                    .strip_prefix(b)
                    .expect("ancestry preserved: image extends the child's image");
                map.insert(rest, rest_img);
            }
        }
        Embedding::new(src_sub, tgt_sub, map)
    }

    /// The deepest source node whose image is `b` itself or an ancestor of
    /// `b`. Always exists because the root maps to the root.
    fn owner_of(&self, b: &Addr) -> &Addr {
        let mut best: Option<(&Addr, &Addr)> = None;
        for (a, fa) in &self.map {
            if fa.is_prefix_of(b) {
                match best {
                    Some((_, fb)) if fb.len() >= fa.len() => {}
                    _ => best = Some((a, fa)),
                }
            }
        }
        best.expect("the root's image covers every target address").0
    }

    fn lift_sched<T>(&self, tree: &PifoTree<T>, b: &Addr) -> Pifo<u32> {
        let owner = self.owner_of(b);
        let mut out = Pifo::new();
        if let Some(src_sched) = tree.sched_at(owner) {
            for (&i, r) in src_sched.iter_sorted() {
                // An entry survives at `b` when its child's image sits strictly
                // below `b`; entries with no image (possible only in trees
                // assembled by hand) are dropped silently.
                if let Some(img) = self.map.get(&owner.child(i)) {
                    if b.is_strict_prefix_of(img) {
                        out.push(img.as_slice()[b.len()], r);
                    }
                }
            }
        }
        out
    }

    fn lift_at<T: Clone>(
        &self,
        tree: &PifoTree<T>,
        inverse: &BTreeMap<&Addr, &Addr>,
        b: &Addr,
        shape: &Topo,
    ) -> PifoTree<T> {
        match shape {
            Topo::Leaf => match inverse.get(b) {
                Some(a) => {
                    let q = tree.leaf_at(a).expect("leaves map to leaves");
                    PifoTree::Leaf(q.clone())
                }
                None => PifoTree::Leaf(Pifo::new()),
            },
            Topo::Node(children) => {
                let sched = self.lift_sched(tree, b);
                let kids = children
                    .iter()
                    .enumerate()
                    .map(|(k, sub)| self.lift_at(tree, inverse, &b.child(k as u32 + 1), sub))
                    .collect();
                PifoTree::Internal {
                    children: kids,
                    sched,
                }
            }
        }
    }

    /// Rebuilds a source tree over the target topology so it pops the same
    /// packets in the same order. Leaf queues are copied to their images with
    /// ranks and tie order intact; each scheduler entry reappears, with its
    /// rank duplicated, at every target node between the owning node's image
    /// and the image of the child it points to.
    pub fn lift_tree<T: Clone>(&self, tree: &PifoTree<T>) -> Result<PifoTree<T>, EmbedError> {
        if tree.topology() != self.source {
            return Err(EmbedError::SourceMismatch);
        }
        let inverse: BTreeMap<&Addr, &Addr> = self.map.iter().map(|(a, b)| (b, a)).collect();
        let target = self.target.clone();
        Ok(self.lift_at(tree, &inverse, &Addr::root(), &target))
    }

    /// Rewrites a push path for the target topology: each source step expands
    /// into one step per target level between the image of its parent and the
    /// image of its child, all carrying the original rank. The leaf rank is
    /// unchanged.
    pub fn translate_path(&self, path: &Path) -> Result<Path, EmbedError> {
        let mut steps = Vec::new();
        let mut a = Addr::root();
        for &(i, r) in &path.steps {
            let from = self.map.get(&a).ok_or(EmbedError::PathNotInSource)?;
            let child = a.child(i);
            let to = self.map.get(&child).ok_or(EmbedError::PathNotInSource)?;
            for pos in from.len()..to.len() {
                steps.push((to.as_slice()[pos], r));
            }
            a = child;
        }
        if !self.source.is_leaf_at(&a) {
            return Err(EmbedError::PathNotInSource);
        }
        Ok(Path::new(steps, path.leaf_rank))
    }

    /// Text form: header, the two topologies, then one `source -> target`
    /// address pair per line ("." is the root).
    pub fn to_text(&self) -> String {
        let mut out = String::from("# pifotree-embedding v1\n");
        out.push_str(&format!("source {}\n", self.source));
        out.push_str(&format!("target {}\n", self.target));
        for (a, b) in &self.map {
            out.push_str(&format!("{a} -> {b}\n"));
        }
        out
    }

    /// Parses `to_text` output, re-validating everything.
    pub fn from_text(input: &str) -> Result<Embedding, EmbedError> {
        let mut lines = input.lines().map(str::trim).filter(|l| !l.is_empty());
        match lines.next() {
            Some("# pifotree-embedding v1") => {}
            _ => {
                return Err(EmbedError::Parse(
                    "first line must be `# pifotree-embedding v1`".into(),
                ))
            }
        }
        let mut source: Option<Topo> = None;
        let mut target: Option<Topo> = None;
        let mut map = BTreeMap::new();
        for line in lines {
            if line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("source ") {
                source = Some(
                    rest.parse()
                        .map_err(|e| EmbedError::Parse(format!("bad source topology: {e}")))?,
                );
            } else if let Some(rest) = line.strip_prefix("target ") {
                target = Some(
                    rest.parse()
                        .map_err(|e| EmbedError::Parse(format!("bad target topology: {e}")))?,
                );
            } else if let Some((a, b)) = line.split_once("->") {
                let a: Addr = a
                    .trim()
                    .parse()
                    .map_err(|e| EmbedError::Parse(format!("bad source address: {e}")))?;
                let b: Addr = b
                    .trim()
                    .parse()
                    .map_err(|e| EmbedError::Parse(format!("bad target address: {e}")))?;
                if map.insert(a.clone(), b).is_some() {
                    return Err(EmbedError::Parse(format!("`{a}` mapped twice")));
                }
            } else {
                return Err(EmbedError::Parse(format!("unreadable line `{line}`")));
            }
        }
        let source = source.ok_or_else(|| EmbedError::Parse("missing `source` line".into()))?;
        let target = target.ok_or_else(|| EmbedError::Parse("missing `target` line".into()))?;
        Embedding::new(source, target, map)
    }
}
