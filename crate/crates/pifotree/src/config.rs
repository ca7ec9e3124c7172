//! Text format for scheduler descriptions.
//!
//! A policy file is line-oriented. The first non-blank line must be the
//! version header; after that, blank lines and `#` comments are ignored.
//!
//! ```text
//! # pifotree-policy v1
//! topology [*,[*,*]]
//! node .  wfq 80 20
//! node 2  strict 2 1
//! flow A 1
//! flow B 2.1
//! flow C 2.2
//! ```
//!
//! Directives:
//! - `topology <expr>`: the tree the control runs on (required, once).
//! - `source <expr>` plus `map <src-addr> -> <tgt-addr>` lines: present in
//!   compiled files; `node` and `flow` addresses then refer to the source
//!   tree, and the listed pairs form the embedding into `topology`.
//! - `node <addr> fcfs | strict <child>... | rr | wfq <weight>...`: the
//!   policy of one internal node.
//! - `flow <label> <leaf-addr>`: where a flow's packets are queued.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::control::{NodePolicy, PolicySpec};
use crate::embed::{EmbedError, Embedding};
use crate::topo::{Addr, Topo};

pub const POLICY_HEADER: &str = "# pifotree-policy v1";

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("first line must be {0:?}")]
    Header(&'static str),
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("missing topology line")]
    MissingTopology,
    #[error("map lines require a source line")]
    MapWithoutSource,
    #[error(transparent)]
    Embedding(#[from] EmbedError),
}

fn err(line: usize, msg: impl Into<String>) -> ConfigError {
    ConfigError::Line {
        line,
        msg: msg.into(),
    }
}

fn parse_topo(line: usize, text: &str) -> Result<Topo, ConfigError> {
    text.parse()
        .map_err(|e| err(line, format!("bad topology expression: {e}")))
}

fn parse_addr(line: usize, text: &str) -> Result<Addr, ConfigError> {
    text.parse()
        .map_err(|e| err(line, format!("bad address {text:?}: {e}")))
}

pub fn parse_policy(text: &str) -> Result<PolicySpec, ConfigError> {
    let mut lines = text.lines().enumerate();
    let header_ok = loop {
        match lines.next() {
            Some((_, l)) if l.trim().is_empty() => continue,
            Some((_, l)) => break l.trim() == POLICY_HEADER,
            None => break false,
        }
    };
    if !header_ok {
        return Err(ConfigError::Header(POLICY_HEADER));
    }

    let mut topology: Option<Topo> = None;
    let mut source: Option<Topo> = None;
    let mut map: BTreeMap<Addr, Addr> = BTreeMap::new();
    let mut policies: BTreeMap<Addr, NodePolicy> = BTreeMap::new();
    let mut flows: BTreeMap<String, Addr> = BTreeMap::new();

    for (idx, raw) in lines {
        let line = idx + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let (directive, rest) = l.split_once(char::is_whitespace).unwrap_or((l, ""));
        let rest = rest.trim();
        match directive {
            "topology" => {
                if topology.is_some() {
                    return Err(err(line, "duplicate topology line"));
                }
                topology = Some(parse_topo(line, rest)?);
            }
            "source" => {
                if source.is_some() {
                    return Err(err(line, "duplicate source line"));
                }
                source = Some(parse_topo(line, rest)?);
            }
            "map" => {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                if parts.len() != 3 || parts[1] != "->" {
                    return Err(err(line, "expected: map <src-addr> -> <tgt-addr>"));
                }
                let from = parse_addr(line, parts[0])?;
                let to = parse_addr(line, parts[2])?;
                if map.insert(from, to).is_some() {
                    return Err(err(line, "duplicate map entry"));
                }
            }
            "node" => {
                let mut parts = rest.split_whitespace();
                let addr = parse_addr(line, parts.next().ok_or_else(|| err(line, "missing address"))?)?;
                let kind = parts.next().ok_or_else(|| err(line, "missing policy"))?;
                let args: Vec<&str> = parts.collect();
                let parse_nums = |what: &str| -> Result<Vec<u64>, ConfigError> {
                    args.iter()
                        .map(|a| {
                            a.parse::<u64>()
                                .map_err(|_| err(line, format!("bad {what} {a:?}")))
                        })
                        .collect()
                };
                let policy = match kind {
                    "fcfs" if args.is_empty() => NodePolicy::Fcfs,
                    "rr" if args.is_empty() => NodePolicy::RoundRobin,
                    "fcfs" | "rr" => return Err(err(line, format!("{kind} takes no arguments"))),
                    "strict" => NodePolicy::Strict(
                        parse_nums("child index")?.iter().map(|&n| n as u32).collect(),
                    ),
                    "wfq" => NodePolicy::Wfq(parse_nums("weight")?),
                    other => return Err(err(line, format!("unknown policy {other:?}"))),
                };
                if policies.insert(addr, policy).is_some() {
                    return Err(err(line, "duplicate node line"));
                }
            }
            "flow" => {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                if parts.len() != 2 {
                    return Err(err(line, "expected: flow <label> <leaf-addr>"));
                }
                let addr = parse_addr(line, parts[1])?;
                if flows.insert(parts[0].to_string(), addr).is_some() {
                    return Err(err(line, "duplicate flow label"));
                }
            }
            other => return Err(err(line, format!("unknown directive {other:?}"))),
        }
    }

    let topology = topology.ok_or(ConfigError::MissingTopology)?;
    match source {
        None if map.is_empty() => Ok(PolicySpec {
            topology,
            embedding: None,
            policies,
            flows,
        }),
        None => Err(ConfigError::MapWithoutSource),
        Some(src) => {
            let embedding = Embedding::new(src.clone(), topology, map)?;
            Ok(PolicySpec {
                topology: src,
                embedding: Some(embedding),
                policies,
                flows,
            })
        }
    }
}

pub fn policy_to_text(spec: &PolicySpec) -> String {
    let mut out = String::new();
    out.push_str(POLICY_HEADER);
    out.push('\n');
    match &spec.embedding {
        None => out.push_str(&format!("topology {}\n", spec.topology)),
        Some(e) => {
            out.push_str(&format!("topology {}\n", e.target()));
            out.push_str(&format!("source {}\n", e.source()));
            for (a, b) in e.iter() {
                out.push_str(&format!("map {a} -> {b}\n"));
            }
        }
    }
    for (addr, policy) in &spec.policies {
        let rendered = match policy {
            NodePolicy::Fcfs => "fcfs".to_string(),
            NodePolicy::RoundRobin => "rr".to_string(),
            NodePolicy::Strict(order) => {
                let items: Vec<String> = order.iter().map(|c| c.to_string()).collect();
                format!("strict {}", items.join(" "))
            }
            NodePolicy::Wfq(weights) => {
                let items: Vec<String> = weights.iter().map(|w| w.to_string()).collect();
                format!("wfq {}", items.join(" "))
            }
        };
        out.push_str(&format!("node {addr} {rendered}\n"));
    }
    for (label, addr) in &spec.flows {
        out.push_str(&format!("flow {label} {addr}\n"));
    }
    out
}
