//! `gakit` command-line front end.
//!
//! Exit codes: 0 success, 1 internal failure, 2 user input error, 3 format error.

mod commands;
mod config;
mod failure;
mod inputs;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gakit::selftest::Fault;
use gakit::{KernelMode, LabelMode, PoolingPolicy};

use crate::commands::{IndexSource, QuerySource, TrainArgs};
use crate::config::{parse_kernel_mode, parse_label_mode, Overrides};
use crate::failure::{CmdResult, Failure};

#[derive(Parser)]
#[command(name = "gakit", version, about = "Alignment kernels, structure loss and retrieval over interleaved image-text embeddings")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Bandwidth scale for sigma = delta * sqrt((n + m) / 2).
    #[arg(long, global = true)]
    delta: Option<f64>,
    /// Report K(x,y) / sqrt(K(x,x) K(y,y)) instead of the raw kernel.
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    normalize_gak: Option<bool>,
    #[arg(long, global = true, value_parser = parse_kernel_mode)]
    kernel_mode: Option<KernelMode>,
    /// Label for pairs of single-slice views: cosine or closed-form.
    #[arg(long, global = true, value_parser = parse_label_mode)]
    label_mode: Option<LabelMode>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Largest n*m accepted by the alignment table.
    #[arg(long, global = true)]
    cell_cap: Option<usize>,
    /// Flat key=value file; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Emit one JSON object instead of key=value lines.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Pool {
    LastToken,
    AveragePool,
}

impl From<Pool> for PoolingPolicy {
    fn from(p: Pool) -> Self {
        match p {
            Pool::LastToken => PoolingPolicy::LastToken,
            Pool::AveragePool => PoolingPolicy::AveragePool,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    DpBoundary,
}

#[derive(Subcommand)]
enum Command {
    /// Raw and normalized alignment kernel plus the mean-pairwise baseline.
    KernelEval {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        /// Also print the highest-scoring alignment path.
        #[arg(long)]
        path: bool,
    },
    /// Run the built-in oracle suites.
    Selftest {
        #[arg(long)]
        list: bool,
        #[arg(long, hide = true, value_enum)]
        inject_fault: Option<FaultArg>,
    },
    /// Build and save a retrieval index.
    Index {
        #[arg(long, conflicts_with = "vectors", required_unless_present = "vectors")]
        manifest: Option<PathBuf>,
        /// JSON lines of {"doc_id", "vector", "meta"?}.
        #[arg(long)]
        vectors: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "average-pool")]
        pool: Pool,
        #[arg(long)]
        out: PathBuf,
        /// Build time written to the sidecar (defaults to SOURCE_DATE_EPOCH, then now).
        #[arg(long)]
        created_at: Option<u64>,
    },
    /// Top-k documents for a vector or a manifest document.
    Query {
        #[arg(long)]
        index: Option<PathBuf>,
        /// Base64 little-endian f32 query vector.
        #[arg(long, conflicts_with_all = ["manifest", "doc"])]
        vector: Option<String>,
        #[arg(long, requires = "doc")]
        manifest: Option<PathBuf>,
        #[arg(long, requires = "manifest")]
        doc: Option<String>,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, value_enum, default_value = "average-pool")]
        pool: Pool,
        /// Rank manifest documents by alignment kernel instead of the index.
        #[arg(long)]
        gak: bool,
    },
    /// Recall@k over a case file.
    EvalRecall {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        cases: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,5,10")]
        ks: Vec<usize>,
        #[arg(long, value_enum, default_value = "average-pool")]
        pool: Pool,
        /// Keep only these slices of sequence queries, e.g. 5c or 5c+4i.
        #[arg(long)]
        shape: Option<String>,
    },
    /// Text, image and group scores over 2x2 similarity matrices.
    EvalWinoground {
        #[arg(long)]
        input: PathBuf,
    },
    /// Fit a linear projector so its cosines match alignment-kernel labels.
    TrainProjector {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        hidden: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Loss trace, one "step<TAB>loss" line per step.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, default_value_t = 0.5)]
        lr: f64,
        #[arg(long, default_value_t = 16)]
        output_dim: usize,
    },
    /// Apply a trained projector to hidden states, writing index vectors.
    Project {
        #[arg(long)]
        projector: PathBuf,
        #[arg(long)]
        hidden: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the seeded two-cluster task as a manifest and hidden states.
    Synth {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 64)]
        docs: usize,
    },
}

fn run(cli: Cli) -> CmdResult<String> {
    let g = &cli.global;
    let flags = Overrides {
        delta: g.delta,
        normalize_gak: g.normalize_gak,
        kernel_mode: g.kernel_mode,
        label_single_slice_mode: g.label_mode,
        seed: g.seed,
        cell_cap: g.cell_cap,
    };
    let cfg = config::resolve(g.config.as_deref(), &flags)?;
    eprintln!("config: {}", cfg.echo());
    let json = g.json;
    match cli.command {
        Command::KernelEval { manifest, a, b, path } => {
            commands::kernel_eval(&cfg, json, &manifest, &a, &b, path)
        }
        Command::Selftest { list, inject_fault } => {
            let fault = match inject_fault {
                Some(FaultArg::DpBoundary) => Fault::DpBoundary,
                None => Fault::None,
            };
            commands::selftest(&cfg, json, list, fault)
        }
        Command::Index {
            manifest,
            vectors,
            pool,
            out,
            created_at,
        } => {
            let source = match (&manifest, &vectors) {
                (Some(m), None) => IndexSource::Manifest(m, pool.into()),
                (None, Some(v)) => IndexSource::Vectors(v),
                _ => return Err(Failure::user("give exactly one of --manifest or --vectors")),
            };
            commands::index(&cfg, json, source, &out, created_at)
        }
        Command::Query {
            index,
            vector,
            manifest,
            doc,
            k,
            pool,
            gak,
        } => {
            let source = match (&vector, &manifest, &doc) {
                (Some(v), None, None) => QuerySource::Vector(v),
                (None, Some(m), Some(d)) => QuerySource::Doc {
                    manifest: m,
                    doc: d,
                    policy: pool.into(),
                },
                _ => return Err(Failure::user("give --vector or --manifest with --doc")),
            };
            commands::query(&cfg, json, index.as_deref(), source, k, gak)
        }
        Command::EvalRecall {
            index,
            cases,
            ks,
            pool,
            shape,
        } => commands::eval_recall(json, &index, &cases, &ks, pool.into(), shape.as_deref()),
        Command::EvalWinoground { input } => commands::eval_winoground(json, &input),
        Command::TrainProjector {
            manifest,
            hidden,
            out,
            trace,
            steps,
            lr,
            output_dim,
        } => commands::train(
            &cfg,
            json,
            TrainArgs {
                manifest: &manifest,
                hidden: &hidden,
                out: &out,
                trace: trace.as_deref(),
                steps,
                learning_rate: lr,
                output_dim,
            },
        ),
        Command::Project {
            projector,
            hidden,
            out,
        } => commands::project(json, &projector, &hidden, &out),
        Command::Synth { out_dir, docs } => commands::synth(&cfg, json, &out_dir, docs),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
