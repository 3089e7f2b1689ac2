//! Benchmark CLI: train single configurations, run grid searches with
//! cross-validation, emit AUC-vs-time curves, sweep kernel-approximation
//! error, and produce desk-scale regret/Jensen diagnostics.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use pairstream::features;
use pairstream::harness::{
    self, report, run_id, ExperimentConfig, LearnerSpec, ReportFormat, ResultRow,
};

#[derive(Parser)]
#[command(
    name = "pairstream",
    version,
    about = "Streaming pairwise AUC learning benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train one resolved configuration and write a per-step trace.
    Train(RunArgs),
    /// Full grid search with k-fold cross-validation and repeats.
    Grid(RunArgs),
    /// Single online pass emitting test AUC at checkpoints.
    Curve(CurveArgs),
    /// Kernel-approximation error table over feature counts.
    RffProfile(ProfileArgs),
    /// Exact regret curve and Jensen-gap diagnostics (O(T^2), small data).
    Oracle(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the stream order: shuffled|asis|sorted|blocks:<n>.
    #[arg(long)]
    order: Option<String>,
    /// Override the learner: aogd|ogd_last|buffer_ogd:<s>.
    #[arg(long)]
    learner: Option<String>,
    /// Override the dataset path (LIBSVM text, `.gz` accepted).
    #[arg(long)]
    dataset: Option<String>,
    /// Measure wall-clock around the learner loop. Off by default so that
    /// every emitted file is byte-reproducible.
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct CurveArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated checkpoint steps; log-spaced defaults when omitted.
    #[arg(long, value_delimiter = ',')]
    checkpoints: Vec<usize>,
}

#[derive(Args)]
struct ProfileArgs {
    /// Input dimension of the sampled points.
    #[arg(long, default_value_t = 5)]
    dim: usize,
    /// Gaussian kernel width (scalar, broadcast over dimensions).
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Feature counts to sweep.
    #[arg(long, value_delimiter = ',', default_values_t = [64usize, 256, 1024, 4096])]
    sizes: Vec<usize>,
    /// Random quadruples per feature count.
    #[arg(long, default_value_t = 1000)]
    pairs: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(&args.config)
        .with_context(|| format!("reading config {}", args.config.display()))?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(order) = &args.order {
        cfg.order = order.parse()?;
    }
    if let Some(learner) = &args.learner {
        cfg.learner = parse_learner(learner)?;
    }
    if let Some(path) = &args.dataset {
        cfg.dataset = match cfg.dataset {
            harness::DatasetSpec::File(mut f) => {
                f.path = path.clone();
                harness::DatasetSpec::File(f)
            }
            harness::DatasetSpec::Synthetic { .. } => {
                harness::DatasetSpec::File(harness::FileSpec {
                    path: path.clone(),
                    name: None,
                    positive_labels: None,
                    normalization: Default::default(),
                })
            }
        };
    }
    if args.timing {
        cfg.record_timing = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_learner(s: &str) -> Result<LearnerSpec> {
    match s {
        "aogd" => Ok(LearnerSpec::Aogd),
        "ogd_last" => Ok(LearnerSpec::OgdLast),
        other => {
            if let Some(size) = other.strip_prefix("buffer_ogd:") {
                Ok(LearnerSpec::BufferOgd {
                    buffer_size: size.parse()?,
                })
            } else {
                bail!("unknown learner '{other}'; expected aogd|ogd_last|buffer_ogd:<s>")
            }
        }
    }
}

fn write_results(out: &Path, rows: &[ResultRow]) -> Result<()> {
    fs::create_dir_all(out)?;
    fs::write(out.join("results.csv"), report(rows, ReportFormat::Csv)?)?;
    fs::write(out.join("results.json"), report(rows, ReportFormat::Json)?)?;
    Ok(())
}

fn summarize(row: &ResultRow) -> String {
    format!(
        "{} / {}: AUC {:.4} ± {:.4} (eta={}, lambda={}, sigma={:.4}, D={})",
        row.dataset,
        row.learner,
        row.mean_auc,
        row.std_err,
        row.eta,
        row.lambda,
        row.sigma,
        row.d_features
    )
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Train(args) => {
            let cfg = load_config(&args)?;
            let mut out = harness::run_train(&cfg)?;
            fs::create_dir_all(&args.out)?;
            let id = run_id(&out.row.dataset, &out.row.learner, cfg.seed);
            let trace_name = format!("trace_{id}.csv");
            fs::write(args.out.join(&trace_name), harness::trace_csv(&out.trace))?;
            out.row.trace_path = Some(trace_name.clone());
            write_results(&args.out, std::slice::from_ref(&out.row))?;
            println!("{}", summarize(&out.row));
            println!("wrote {}", args.out.join(trace_name).display());
        }
        Cmd::Grid(args) => {
            let cfg = load_config(&args)?;
            let row = harness::run_experiment(&cfg)?;
            write_results(&args.out, std::slice::from_ref(&row))?;
            println!("{}", summarize(&row));
            println!("wrote {}", args.out.join("results.csv").display());
        }
        Cmd::Curve(args) => {
            let cfg = load_config(&args.run)?;
            let points = harness::run_curve(&cfg, &args.checkpoints)?;
            fs::create_dir_all(&args.run.out)?;
            let id = run_id(&harness::dataset_label(&cfg), &cfg.learner.name(), cfg.seed);
            let path = args.run.out.join(format!("curve_{id}.csv"));
            fs::write(&path, harness::curve_csv(&points))?;
            if let Some(last) = points.last() {
                println!(
                    "final AUC {:.4} after {} examples",
                    last.auc, last.examples_seen
                );
            }
            println!("wrote {}", path.display());
        }
        Cmd::RffProfile(args) => {
            let sigma = vec![args.sigma; args.dim];
            let rows = features::rff_error_profile(&args.sizes, args.pairs, &sigma, args.seed)?;
            let mut csv = String::from("n_features,max_abs_error,mean_abs_error\n");
            for r in &rows {
                csv.push_str(&format!(
                    "{},{},{}\n",
                    r.n_features, r.max_abs_error, r.mean_abs_error
                ));
                println!(
                    "D={:<6} max|err|={:.5} mean|err|={:.5} mean*sqrt(D)={:.4}",
                    r.n_features,
                    r.max_abs_error,
                    r.mean_abs_error,
                    r.mean_abs_error * (r.n_features as f64).sqrt()
                );
            }
            fs::create_dir_all(&args.out)?;
            let path = args.out.join("rff_profile.csv");
            fs::write(&path, csv)?;
            println!("wrote {}", path.display());
        }
        Cmd::Oracle(args) => {
            let cfg = load_config(&args)?;
            let out = harness::run_oracle(&cfg)?;
            fs::create_dir_all(&args.out)?;
            let id = run_id(&harness::dataset_label(&cfg), &cfg.learner.name(), cfg.seed);
            let regret_path = args.out.join(format!("regret_{id}.csv"));
            fs::write(&regret_path, out.regret.to_csv())?;
            let jensen_path = args.out.join(format!("jensen_{id}.csv"));
            fs::write(&jensen_path, harness::jensen_csv(&out.jensen))?;
            if let Some(last) = out.regret.regret.last() {
                let t = *out.regret.step.last().unwrap() as f64;
                println!("final regret {last:.4} (R_T/T = {:.6})", last / t);
            }
            println!("wrote {}", regret_path.display());
            println!("wrote {}", jensen_path.display());
        }
    }
    Ok(())
}
