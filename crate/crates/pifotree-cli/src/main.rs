use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use pifotree::algo::{embed_into_arbitrary, embed_into_dary};
use pifotree::config::{parse_policy, policy_to_text};
use pifotree::gantt::render_gantt;
use pifotree::sim::{departures_to_csv, read_trace, simulate};
use pifotree::{build_control, PifoTree, PolicySpec, Topo};

#[derive(Parser)]
#[command(
    name = "pifotree",
    version,
    about = "Hierarchical PIFO packet scheduling: simulate policies, embed topologies, compile policies across trees"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a trace through a policy and record per-packet departures.
    Simulate {
        /// Trace CSV (`# pifotree-trace v1`; columns arrival_s,flow,size).
        #[arg(long)]
        trace: PathBuf,
        /// Policy config file (`# pifotree-policy v1`).
        #[arg(long)]
        policy: PathBuf,
        /// Pops per second.
        #[arg(long)]
        line_rate: u64,
        /// Where to write the departures CSV.
        #[arg(long)]
        out_csv: PathBuf,
        /// Optionally also write a Gantt chart of the run as SVG.
        #[arg(long)]
        out_gantt: Option<PathBuf>,
    },
    /// Find an embedding of a source topology into a target.
    Embed {
        /// Source topology expression, e.g. "[*,*,[*,*]]".
        #[arg(long)]
        source: String,
        /// Embed into a complete d-ary tree of minimal height.
        #[arg(long, conflicts_with = "target_topo")]
        target_dary: Option<u32>,
        /// Embed into the topology written in this file.
        #[arg(long)]
        target_topo: Option<PathBuf>,
    },
    /// Rewrite a policy to run on a complete d-ary tree.
    Compile {
        /// Policy config file to compile.
        #[arg(long)]
        policy: PathBuf,
        /// Branching factor of the target tree.
        #[arg(long)]
        target_dary: u32,
        /// Where to write the compiled policy (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Optionally also write the embedding on its own.
        #[arg(long)]
        out_embedding: Option<PathBuf>,
    },
    /// Validate a tree dump and report its flush order and leaf contents.
    Check {
        /// Tree dump file (`# pifotree-dump v1`).
        #[arg(long)]
        tree_dump: PathBuf,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Reads a topology expression from a file, ignoring blank and `#` lines.
fn read_topo(path: &Path) -> Result<Topo> {
    let text = read(path)?;
    let expr = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .with_context(|| format!("{}: no topology expression found", path.display()))?;
    expr.parse()
        .with_context(|| format!("{}: bad topology expression", path.display()))
}

fn run_simulate(
    trace: &Path,
    policy: &Path,
    line_rate: u64,
    out_csv: &Path,
    out_gantt: Option<&Path>,
) -> Result<()> {
    let spec = parse_policy(&read(policy)?).with_context(|| format!("{}", policy.display()))?;
    let mut control = build_control(&spec)?;
    let records = read_trace(&read(trace)?).with_context(|| format!("{}", trace.display()))?;
    let report = simulate(&mut control, &records, line_rate)?;
    write(out_csv, &departures_to_csv(&report.departures))?;
    println!(
        "simulated {} packets; wrote {}",
        report.departures.len(),
        out_csv.display()
    );
    if let Some(path) = out_gantt {
        write(path, &render_gantt(&report.departures))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run_embed(source: &str, target_dary: Option<u32>, target_topo: Option<&Path>) -> Result<()> {
    let source: Topo = source
        .parse()
        .context("bad --source topology expression")?;
    match (target_dary, target_topo) {
        (Some(d), None) => {
            let (embedding, height) = embed_into_dary(&source, d)?;
            println!("height {height}");
            print!("{}", embedding.to_text());
        }
        (None, Some(path)) => {
            let target = read_topo(path)?;
            match embed_into_arbitrary(&source, &target)? {
                Some(embedding) => print!("{}", embedding.to_text()),
                None => bail!("no embedding of {source} into {target}"),
            }
        }
        _ => bail!("exactly one of --target-dary and --target-topo is required"),
    }
    Ok(())
}

fn run_compile(
    policy: &Path,
    target_dary: u32,
    out: Option<&Path>,
    out_embedding: Option<&Path>,
) -> Result<()> {
    let spec = parse_policy(&read(policy)?).with_context(|| format!("{}", policy.display()))?;
    if spec.embedding.is_some() {
        bail!("{} is already a compiled policy", policy.display());
    }
    let (embedding, height) = embed_into_dary(&spec.topology, target_dary)?;
    let compiled = PolicySpec {
        topology: spec.topology,
        embedding: Some(embedding.clone()),
        policies: spec.policies,
        flows: spec.flows,
    };
    build_control(&compiled)?;
    let text = policy_to_text(&compiled);
    match out {
        Some(path) => {
            write(path, &text)?;
            println!(
                "compiled onto a complete {target_dary}-ary tree of height {height}; wrote {}",
                path.display()
            );
        }
        None => print!("{text}"),
    }
    if let Some(path) = out_embedding {
        write(path, &embedding.to_text())?;
    }
    Ok(())
}

fn run_check(tree_dump: &Path) -> Result<()> {
    let tree = PifoTree::<String>::parse_dump(&read(tree_dump)?)
        .with_context(|| format!("{}", tree_dump.display()))?;
    println!("topology {}", tree.topology());
    println!("packets {}", tree.size());
    if !tree.is_well_formed() {
        bail!("tree is not well formed: some internal queue disagrees with its children");
    }
    println!("well-formed yes");
    let flush = tree.flush().expect("well-formed trees flush");
    println!("flush {}", flush.join(","));
    let leaves = tree.topology().leaves();
    for (addr, items) in leaves.iter().zip(tree.snap()) {
        println!("leaf {addr} {}", items.join(","));
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate {
            trace,
            policy,
            line_rate,
            out_csv,
            out_gantt,
        } => run_simulate(&trace, &policy, line_rate, &out_csv, out_gantt.as_deref()),
        Command::Embed {
            source,
            target_dary,
            target_topo,
        } => run_embed(&source, target_dary, target_topo.as_deref()),
        Command::Compile {
            policy,
            target_dary,
            out,
            out_embedding,
        } => run_compile(&policy, target_dary, out.as_deref(), out_embedding.as_deref()),
        Command::Check { tree_dump } => run_check(&tree_dump),
    }
}
