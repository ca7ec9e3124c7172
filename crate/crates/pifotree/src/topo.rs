//! Tree topologies and node addresses.
//!
//! A topology records only the shape of a scheduling tree: a leaf, or an internal
//! node with an ordered, non-empty list of child topologies. Addresses name nodes
//! by the 1-based child indices along the path from the root; the root itself is
//! the empty address, written "." in text form.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TopoError {
    #[error("unexpected character `{0}` at byte {1}")]
    Unexpected(char, usize),
    #[error("unexpected end of input")]
    Eof,
    #[error("internal nodes must have at least one child")]
    EmptyNode,
    #[error("trailing input after topology")]
    Trailing,
    #[error("invalid address `{0}`: components are 1-based integers")]
    BadAddr(String),
}

/// Shape of a scheduling tree.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Topo {
    Leaf,
    Node(Vec<Topo>),
}

/// Path from the root as 1-based child indices; empty means the root.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Addr(Vec<u32>);

impl Addr {
    pub fn root() -> Self {
        Addr(Vec::new())
    }

    pub fn new(indices: Vec<u32>) -> Self {
        Addr(indices)
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    /// Address of the `i`-th child (1-based) of this node.
    pub fn child(&self, i: u32) -> Addr {
        let mut v = self.0.clone();
        v.push(i);
        Addr(v)
    }

    pub fn parent(&self) -> Option<Addr> {
        if self.0.is_empty() {
            None
        } else {
            Some(Addr(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    /// Last component: which child of its parent this node is.
    pub fn last_index(&self) -> Option<u32> {
        self.0.last().copied()
    }

    /// True when `self` is a (possibly equal) prefix of `other`.
    pub fn is_prefix_of(&self, other: &Addr) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }

    /// True when `self` is a strict prefix of `other`.
    pub fn is_strict_prefix_of(&self, other: &Addr) -> bool {
        other.0.len() > self.0.len() && other.0[..self.0.len()] == self.0[..]
    }

    /// Concatenation `self` followed by `suffix`.
    pub fn join(&self, suffix: &Addr) -> Addr {
        let mut v = self.0.clone();
        v.extend_from_slice(&suffix.0);
        Addr(v)
    }

    /// The remainder of `other` after stripping the prefix `self`.
    pub fn strip_prefix(&self, other: &Addr) -> Option<Addr> {
        if self.is_prefix_of(other) {
            Some(Addr(other.0[self.0.len()..].to_vec()))
        } else {
            None
        }
    }
}

impl From<&[u32]> for Addr {
    fn from(s: &[u32]) -> Self {
        Addr(s.to_vec())
    }
}

impl<const N: usize> From<[u32; N]> for Addr {
    fn from(s: [u32; N]) -> Self {
        Addr(s.to_vec())
    }
}

impl fmt::Display for Addr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, ".");
        }
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        write!(f, "{}", parts.join("."))
    }
}

impl FromStr for Addr {
    type Err = TopoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "." {
            return Ok(Addr::root());
        }
        let mut indices = Vec::new();
        for part in s.split('.') {
            let i: u32 = part
                .parse()
                .map_err(|_| TopoError::BadAddr(s.to_string()))?;
            if i == 0 {
                return Err(TopoError::BadAddr(s.to_string()));
            }
            indices.push(i);
        }
        Ok(Addr(indices))
    }
}

impl Topo {
    /// Complete `d`-ary tree: every internal node has exactly `d` children and
    /// every leaf sits at depth `height`.
    pub fn complete_dary(d: u32, height: u32) -> Topo {
        assert!(d >= 2, "branching factor must be at least 2");
        if height == 0 {
            Topo::Leaf
        } else {
            Topo::Node(vec![Topo::complete_dary(d, height - 1); d as usize])
        }
    }

    /// Every topology with at most `max_nodes` nodes, smaller sizes first.
    /// Children are ordered, so sizes follow the Catalan numbers
    /// (1, 1, 2, 5, 14, ... trees of 1, 2, 3, 4, 5, ... nodes).
    pub fn enumerate_up_to(max_nodes: usize) -> Vec<Topo> {
        fn extend(
            by_size: &[Vec<Topo>],
            remaining: usize,
            current: &mut Vec<Topo>,
            acc: &mut Vec<Topo>,
        ) {
            if remaining == 0 {
                if !current.is_empty() {
                    acc.push(Topo::Node(current.clone()));
                }
                return;
            }
            for part in 1..=remaining {
                for t in &by_size[part] {
                    current.push(t.clone());
                    extend(by_size, remaining - part, current, acc);
                    current.pop();
                }
            }
        }

        let mut by_size: Vec<Vec<Topo>> = vec![Vec::new(); max_nodes + 1];
        if max_nodes >= 1 {
            by_size[1].push(Topo::Leaf);
        }
        for size in 2..=max_nodes {
            let mut acc = Vec::new();
            extend(&by_size, size - 1, &mut Vec::new(), &mut acc);
            by_size[size] = acc;
        }
        by_size.into_iter().flatten().collect()
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Topo::Leaf)
    }

    /// Total number of nodes, leaves included.
    pub fn node_count(&self) -> usize {
        match self {
            Topo::Leaf => 1,
            Topo::Node(children) => 1 + children.iter().map(Topo::node_count).sum::<usize>(),
        }
    }

    /// Length of the longest root-to-leaf path in edges.
    pub fn height(&self) -> u32 {
        match self {
            Topo::Leaf => 0,
            Topo::Node(children) => 1 + children.iter().map(Topo::height).max().unwrap_or(0),
        }
    }

    /// Subtree rooted at `addr`, if the address exists in this topology.
    pub fn at(&self, addr: &Addr) -> Option<&Topo> {
        let mut node = self;
        for &i in addr.as_slice() {
            match node {
                Topo::Leaf => return None,
                Topo::Node(children) => {
                    node = children.get(i as usize - 1)?;
                }
            }
        }
        Some(node)
    }

    pub fn contains(&self, addr: &Addr) -> bool {
        self.at(addr).is_some()
    }

    pub fn is_leaf_at(&self, addr: &Addr) -> bool {
        matches!(self.at(addr), Some(Topo::Leaf))
    }

    /// All addresses in preorder: a node appears before its children, and
    /// children appear left to right.
    pub fn addresses(&self) -> Vec<Addr> {
        fn walk(t: &Topo, here: Addr, acc: &mut Vec<Addr>) {
            acc.push(here.clone());
            if let Topo::Node(children) = t {
                for (k, c) in children.iter().enumerate() {
                    walk(c, here.child(k as u32 + 1), acc);
                }
            }
        }
        let mut acc = Vec::new();
        walk(self, Addr::root(), &mut acc);
        acc
    }

    /// Addresses of all leaves, left to right.
    pub fn leaves(&self) -> Vec<Addr> {
        self.addresses()
            .into_iter()
            .filter(|a| self.is_leaf_at(a))
            .collect()
    }

    fn parse_inner(chars: &[u8], pos: &mut usize) -> Result<Topo, TopoError> {
        fn skip_ws(chars: &[u8], pos: &mut usize) {
            while *pos < chars.len() && chars[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
        }
        skip_ws(chars, pos);
        match chars.get(*pos) {
            None => Err(TopoError::Eof),
            Some(b'*') => {
                *pos += 1;
                Ok(Topo::Leaf)
            }
            Some(b'[') => {
                *pos += 1;
                skip_ws(chars, pos);
                if chars.get(*pos) == Some(&b']') {
                    return Err(TopoError::EmptyNode);
                }
                let mut children = Vec::new();
                loop {
                    children.push(Topo::parse_inner(chars, pos)?);
                    skip_ws(chars, pos);
                    match chars.get(*pos) {
                        Some(b',') => {
                            *pos += 1;
                        }
                        Some(b']') => {
                            *pos += 1;
                            return Ok(Topo::Node(children));
                        }
                        Some(&c) => return Err(TopoError::Unexpected(c as char, *pos)),
                        None => return Err(TopoError::Eof),
                    }
                }
            }
            Some(&c) => Err(TopoError::Unexpected(c as char, *pos)),
        }
    }
}

impl fmt::Display for Topo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Topo::Leaf => write!(f, "*"),
            Topo::Node(children) => {
                write!(f, "[")?;
                for (k, c) in children.iter().enumerate() {
                    if k > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, "]")
            }
        }
    }
}

impl FromStr for Topo {
    type Err = TopoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let chars = s.as_bytes();
        let mut pos = 0;
        let t = Topo::parse_inner(chars, &mut pos)?;
        while pos < chars.len() {
            if !chars[pos].is_ascii_whitespace() {
                return Err(TopoError::Trailing);
            }
            pos += 1;
        }
        Ok(t)
    }
}
