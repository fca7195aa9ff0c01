use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use graphck::canonical::{canonicalize_with, is_stably_complete, CanonicalOptions};
use graphck::corners::{corner_graph, realize, unitize, CornerGraph};
use graphck::corpus::{random_graph, random_move, rng};
use graphck::ideals::admissible_pairs;
use graphck::moves::{self, replay_trace};
use graphck::projcalc::{corner_pipeline_traced, normalize_multiplicities};
use graphck::{k_groups, CoefficientSystem, Graph, KTheoryPair, Move, Partition, ProjectionSequence, VertexId};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "graphck", version, about = "Moves, canonical forms, corners and K-theory for graphs with ∞ multiplicities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Dot,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Op {
    OutSplit,
    Collapse,
    RemoveSource,
    MoveT,
    ColumnAdd,
    BreakSplit,
}

#[derive(clap::Args)]
struct Output {
    /// Write the result here instead of stdout.
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Vertex classes, Condition (K), stable completeness and K-theory.
    Analyze {
        graph: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: ReportFormat,
    },
    /// Rewrite into a stably complete graph by moves.
    Canonicalize {
        graph: PathBuf,
        #[command(flatten)]
        output: Output,
        /// Write the move trace as JSON.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Apply one move.
    Move {
        graph: PathBuf,
        #[arg(long, value_enum)]
        op: Op,
        #[arg(long)]
        vertex: Option<String>,
        /// Target vertex of column-add.
        #[arg(long)]
        to: Option<String>,
        /// Comma-separated path for move-t.
        #[arg(long, value_delimiter = ',')]
        path: Vec<String>,
        /// Out-split partition as JSON; defaults to the trivial partition.
        #[arg(long)]
        partition: Option<String>,
        #[command(flatten)]
        output: Output,
        /// Write the move record as JSON.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Admissible pairs and their lattice.
    Ideals {
        graph: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Corner graph of a full projection sequence over a stably complete graph.
    Corner {
        graph: PathBuf,
        /// A projection sequence, or a single coefficient system.
        sequence: PathBuf,
        /// Set n_v = 1 below vertices with n_w = ∞.
        #[arg(long)]
        normalize: bool,
        /// Emit the expanded graph instead of the corner description.
        #[arg(long)]
        realize: bool,
        #[command(flatten)]
        output: Output,
        /// Write every rewriting stage as JSON.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Star graph of a corner graph.
    Unitize {
        corner: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// K₀ and K₁ as JSON.
    Ktheory {
        graph: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Graphviz DOT.
    ExportDot {
        graph: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Check move invariance and canonical forms on a seeded random corpus.
    Verify {
        #[arg(long, default_value_t = 100)]
        corpus: usize,
        #[arg(long, default_value_t = 5)]
        max_vertices: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random moves applied to each graph.
        #[arg(long, default_value_t = 5)]
        moves: usize,
    },
}

/// A failed check, as opposed to bad input.
#[derive(Debug)]
struct InvariantFailure(String);

impl std::fmt::Display for InvariantFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InvariantFailure {}

fn read_input(path: &Path) -> anyhow::Result<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = read_input(path)?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    let text = if text.ends_with('\n') { text.to_owned() } else { format!("{text}\n") };
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => Ok(io::stdout().write_all(text.as_bytes())?),
    }
}

fn emit_graph(g: &Graph, output: &Output) -> anyhow::Result<()> {
    let text = match output.format {
        Format::Json => serde_json::to_string_pretty(g)?,
        Format::Dot => graphck::dot::to_dot(g),
    };
    emit(output.out.as_deref(), &text)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    emit(Some(path), &serde_json::to_string_pretty(value)?)
}

fn k_json(k: &KTheoryPair) -> Value {
    let factors: Vec<Value> = k
        .k0_invariant_factors
        .iter()
        .map(|d| i64::try_from(d).map_or_else(|_| json!(d.to_string()), |x| json!(x)))
        .collect();
    json!({
        "k0_invariant_factors": factors,
        "k0_free_rank": k.k0_free_rank,
        "k1_free_rank": k.k1_free_rank,
        "summary": k.to_string(),
    })
}

fn fuel() -> anyhow::Result<CanonicalOptions> {
    let fuel = match std::env::var("GRAPHCK_FUEL") {
        Ok(v) => Some(v.trim().parse().map_err(|_| anyhow!("GRAPHCK_FUEL must be a nonnegative integer, got {v:?}"))?),
        Err(_) => None,
    };
    Ok(CanonicalOptions { fuel })
}

fn analyze(graph: &Path, format: ReportFormat) -> anyhow::Result<()> {
    let g: Graph = read_json(graph)?;
    let report = is_stably_complete(&g);
    let k = k_groups(&g);
    let classes: Vec<Value> = (0..g.len())
        .map(|i| {
            json!({
                "vertex": g.vertex(i),
                "class": g.class_at(i),
                "simple_cycles": g.simple_cycle_count_idx(i),
            })
        })
        .collect();
    if format == ReportFormat::Json {
        let value = json!({
            "vertices": classes,
            "condition_k": g.condition_k(),
            "stably_complete": report,
            "k_theory": k_json(&k),
        });
        return emit(None, &serde_json::to_string_pretty(&value)?);
    }
    let mut text = String::from("vertices:\n");
    for i in 0..g.len() {
        let c = g.class_at(i);
        let kind = match c.kind {
            graphck::VertexKind::Regular => "regular",
            graphck::VertexKind::Sink => "sink",
            graphck::VertexKind::InfiniteEmitter => "infinite emitter",
        };
        let mut tags = vec![kind.to_owned()];
        if c.is_source {
            tags.push("source".into());
        }
        if c.supports_loop {
            tags.push(format!("{} loops", c.loop_count));
        }
        text += &format!("  {}: {}\n", g.vertex(i), tags.join(", "));
    }
    text += &format!("condition (K): {}\n", g.condition_k());
    if report.satisfied {
        text += "stably complete: yes\n";
    } else {
        text += "stably complete: no\n";
        for v in &report.violations {
            let names: Vec<&str> = v.witnesses.iter().map(VertexId::as_str).collect();
            text += &format!("  condition {} fails at {}\n", v.condition, names.join(", "));
        }
    }
    text += &format!("k-theory: {k}\n");
    emit(None, &text)
}

fn build_move(
    op: Op,
    vertex: Option<String>,
    to: Option<String>,
    path: Vec<String>,
    partition: Option<String>,
) -> anyhow::Result<Move> {
    let vertex = || vertex.clone().map(VertexId::new).ok_or_else(|| anyhow!("--vertex is required"));
    Ok(match op {
        Op::OutSplit => {
            let partition = match partition {
                Some(p) => serde_json::from_str(&p).context("parsing --partition")?,
                None => Partition::trivial(),
            };
            Move::OutSplit { vertex: vertex()?, partition }
        }
        Op::Collapse => Move::Collapse { vertex: vertex()? },
        Op::RemoveSource => Move::RemoveSource { vertex: vertex()? },
        Op::BreakSplit => Move::BreakSplit { vertex: vertex()? },
        Op::ColumnAdd => Move::ColumnAdd {
            from: vertex()?,
            to: VertexId::new(to.ok_or_else(|| anyhow!("--to is required"))?),
        },
        Op::MoveT => {
            if path.is_empty() {
                bail!("--path is required");
            }
            Move::MoveT { path: path.into_iter().map(VertexId::new).collect() }
        }
    })
}

fn read_sequence(path: &Path) -> anyhow::Result<ProjectionSequence> {
    let value: Value = serde_json::from_str(&read_input(path)?).with_context(|| format!("parsing {}", path.display()))?;
    if value.is_array() {
        let c: CoefficientSystem = serde_json::from_value(value)?;
        Ok(ProjectionSequence::single(c))
    } else {
        Ok(serde_json::from_value(value)?)
    }
}

/// Checks one corpus item; `Err` carries the first failure.
fn verify_item(seed: u64, index: usize, max_vertices: usize, steps: usize, opts: &CanonicalOptions) -> Result<(), String> {
    let mut r = rng(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(index as u64));
    let g = random_graph(&mut r, max_vertices);
    let k = k_groups(&g);
    let mut cur = g.clone();
    for _ in 0..steps {
        let Some(m) = random_move(&mut r, &cur) else { break };
        let (next, rec) = moves::apply(&cur, m).map_err(|e| format!("move failed: {e}"))?;
        if k_groups(&next) != k {
            return Err(format!("{} move changed K-theory", rec.step.kind()));
        }
        if rec.replay(&cur).map_err(|e| e.to_string())? != next {
            return Err(format!("{} move did not replay", rec.step.kind()));
        }
        cur = next;
    }
    let c = canonicalize_with(&g, opts).map_err(|e| format!("canonicalize: {e}"))?;
    if !is_stably_complete(&c.graph).satisfied {
        return Err("canonical form is not stably complete".into());
    }
    if k_groups(&c.graph) != k {
        return Err("canonicalization changed K-theory".into());
    }
    if replay_trace(&g, &c.trace).map_err(|e| e.to_string())? != c.graph {
        return Err("canonical trace did not replay".into());
    }
    Ok(())
}

fn verify(corpus: usize, max_vertices: usize, seed: u64, steps: usize) -> anyhow::Result<()> {
    if max_vertices == 0 {
        bail!("--max-vertices must be at least 1");
    }
    let opts = fuel()?;
    let results: Vec<Result<(), String>> =
        (0..corpus).into_par_iter().map(|i| verify_item(seed, i, max_vertices, steps, &opts)).collect();
    let mut passed = 0;
    for (i, r) in results.iter().enumerate() {
        match r {
            Ok(()) => passed += 1,
            Err(e) => println!("item {i}: {e}"),
        }
    }
    println!("{passed}/{corpus} invariance checks passed");
    if passed != corpus {
        return Err(InvariantFailure(format!("{} of {corpus} items failed", corpus - passed)).into());
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Analyze { graph, format } => analyze(&graph, format),
        Command::Canonicalize { graph, output, trace } => {
            let g: Graph = read_json(&graph)?;
            let c = canonicalize_with(&g, &fuel()?)?;
            if let Some(t) = trace {
                write_json(&t, &c.trace)?;
            }
            emit_graph(&c.graph, &output)
        }
        Command::Move { graph, op, vertex, to, path, partition, output, trace } => {
            let g: Graph = read_json(&graph)?;
            let m = build_move(op, vertex, to, path, partition)?;
            let (out, rec) = moves::apply(&g, m)?;
            if let Some(t) = trace {
                write_json(&t, &rec)?;
            }
            emit_graph(&out, &output)
        }
        Command::Ideals { graph, out, format } => {
            let g: Graph = read_json(&graph)?;
            let lattice = admissible_pairs(&g)?;
            let text = match format {
                Format::Json => serde_json::to_string_pretty(&json!({
                    "nodes": lattice.nodes,
                    "hasse": lattice.hasse_edges(),
                }))?,
                Format::Dot => lattice.to_dot(),
            };
            emit(out.as_deref(), &text)
        }
        Command::Corner { graph, sequence, normalize, realize: expand, output, trace } => {
            let g: Graph = read_json(&graph)?;
            let s = read_sequence(&sequence)?;
            let (mut m, stages) = corner_pipeline_traced(&g, &s)?;
            if normalize {
                m = normalize_multiplicities(&g, &m)?;
            }
            if let Some(t) = trace {
                write_json(&t, &stages)?;
            }
            let cg = corner_graph(&g, &m)?;
            if expand {
                return emit_graph(&realize(&cg)?, &output);
            }
            match output.format {
                Format::Json => emit(
                    output.out.as_deref(),
                    &serde_json::to_string_pretty(&json!({ "multiplicities": m, "corner": cg }))?,
                ),
                Format::Dot => bail!("corner graphs with heads have no DOT form; use --realize"),
            }
        }
        Command::Unitize { corner, output } => {
            let cg: CornerGraph = read_json(&corner)?;
            emit_graph(&unitize(&cg)?, &output)
        }
        Command::Ktheory { graph, out } => {
            let g: Graph = read_json(&graph)?;
            emit(out.as_deref(), &serde_json::to_string_pretty(&k_json(&k_groups(&g)))?)
        }
        Command::ExportDot { graph, out } => {
            let g: Graph = read_json(&graph)?;
            emit(out.as_deref(), &graphck::dot::to_dot(&g))
        }
        Command::Verify { corpus, max_vertices, seed, moves } => verify(corpus, max_vertices, seed, moves),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<InvariantFailure>().is_some() {
        return 2;
    }
    match err.downcast_ref::<graphck::Error>() {
        Some(graphck::Error::Internal(_)) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
