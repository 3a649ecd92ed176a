//! Benchmark harness for matrix-collection compression.
//!
//! Subcommands: `synth` writes a seeded synthetic stack, `fit` fits one
//! model and saves it, `compare` sweeps methods × ranks × seeds into a
//! report, `report` recomputes metrics from a saved model. Set
//! `CGLRAM_WORKERS` to bound the worker thread count. On failure a
//! machine-readable error record is printed to stderr and the exit code
//! is nonzero.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use cglram::baselines::{kmeans_glram, storage_count, Method};
use cglram::cglram::{cglram_fit, CglramConfig, CglramInit};
use cglram::glram::IterationConfig;
use cglram::io::{
    load_auto, load_idx_images_scaled, load_idx_labels, save_stack, synth_generate, PixelScale,
    SynthSpec,
};
use cglram::report::{
    emit, load_model, reduction_ratio_to_rank, run_compare, save_model, CompareConfig, Report,
    ReportFormat, RunRecord, SavedModel,
};
use cglram::{Error, MatrixStack};

/// Worker-count environment variable honored by every subcommand.
const WORKERS_ENV: &str = "CGLRAM_WORKERS";

#[derive(Parser)]
#[command(
    name = "cglram-cli",
    about = "Compress matrix collections with shared or clustered two-sided projections and compare the methods",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic clustered low-rank stack (MSTK1 file).
    Synth(SynthArgs),
    /// Fit one model to a stack and save it as JSON.
    Fit(FitArgs),
    /// Sweep methods over ranks and seeds; emit a comparison report.
    Compare(CompareArgs),
    /// Recompute and re-emit metrics from a saved model.
    Report(ReportArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Output MSTK1 path.
    #[arg(long)]
    out: PathBuf,
    /// Number of generator clusters.
    #[arg(long, default_value_t = 3)]
    clusters: usize,
    /// Samples per cluster: one value, or one per cluster comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "40")]
    per_cluster: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    rows: usize,
    #[arg(long, default_value_t = 20)]
    cols: usize,
    /// True rank of each cluster's generating pair.
    #[arg(long, default_value_t = 3)]
    rank: usize,
    /// Entrywise Gaussian noise scale.
    #[arg(long, default_value_t = 0.01)]
    noise_sigma: f64,
    /// Scale of middle-matrix entries.
    #[arg(long, default_value_t = 1.0)]
    middle_scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Clone)]
struct InputArgs {
    /// Input stack: MSTK1, IDX3 images, or CSV (sniffed by magic bytes).
    #[arg(long)]
    input: PathBuf,
    /// Optional companion IDX1 label file.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Keep raw 0..=255 pixel values instead of scaling IDX images to the
    /// unit interval.
    #[arg(long, default_value_t = false)]
    raw_pixels: bool,
}

impl InputArgs {
    fn load(&self) -> Result<(MatrixStack, String), Error> {
        let name = self
            .input
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| self.input.display().to_string());
        let is_idx = {
            use std::io::Read;
            let mut head = [0u8; 4];
            let mut f = std::fs::File::open(&self.input)?;
            f.read(&mut head).map(|n| n == 4 && head == [0, 0, 8, 3])?
        };
        let (mut stack, id) = if is_idx {
            let scale = if self.raw_pixels {
                PixelScale::Raw
            } else {
                PixelScale::Unit
            };
            (
                load_idx_images_scaled(&self.input, scale)?,
                format!("{name} ({})", scale.describe()),
            )
        } else {
            (load_auto(&self.input)?, name)
        };
        if let Some(labels) = &self.labels {
            stack = stack.with_labels(load_idx_labels(labels)?)?;
        }
        Ok((stack, id))
    }
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Method: glram, kmeans-glram or cglram.
    #[arg(long)]
    method: String,
    /// Reduced rank k.
    #[arg(short = 'k', long)]
    rank: usize,
    /// Cluster count K (ignored by glram).
    #[arg(short = 'K', long, default_value_t = 1)]
    clusters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Outer relative-reduction threshold.
    #[arg(long, default_value_t = 1e-4)]
    eta: f64,
    #[arg(long, default_value_t = 50)]
    max_outer: usize,
    #[arg(long, default_value_t = 30)]
    inner_max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    inner_rel_tol: f64,
    /// Init strategy: random-partition, sample-seeds or kmeans-partition.
    #[arg(long, default_value = "random-partition")]
    init: String,
    /// Where to save the fitted model (JSON).
    #[arg(long)]
    model_out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Comma-separated subset of glram,kmeans-glram,cglram,svd.
    #[arg(long, value_delimiter = ',', default_value = "glram,kmeans-glram,cglram,svd")]
    methods: Vec<String>,
    /// Ranks to sweep, comma-separated.
    #[arg(long, value_delimiter = ',')]
    ks: Vec<usize>,
    /// Dimension-reduction ratios in (0, 1]; each maps to the rank
    /// round(tau*rows) and extends --ks.
    #[arg(long, value_delimiter = ',')]
    taus: Vec<f64>,
    /// Cluster count for the clustered methods.
    #[arg(short = 'K', long, default_value_t = 10)]
    clusters: usize,
    /// Seeds for the seeded methods; the best seed feeds the comparisons.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 1e-4)]
    eta: f64,
    #[arg(long, default_value_t = 50)]
    max_outer: usize,
    /// Iteration cap for the standalone shared-pair fit.
    #[arg(long, default_value_t = 100)]
    glram_max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    glram_rel_tol: f64,
    #[arg(long, default_value_t = 30)]
    inner_max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    inner_rel_tol: f64,
    #[arg(long, default_value = "random-partition")]
    init: String,
    /// Report format: json or csv.
    #[arg(long, default_value = "json")]
    format: String,
    /// Report output path.
    #[arg(long)]
    out: PathBuf,
    /// Dataset id recorded in the report (defaults to the input file name).
    #[arg(long)]
    dataset_id: Option<String>,
}

#[derive(Args)]
struct ReportArgs {
    /// Saved model JSON produced by `fit`.
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    input: InputArgs,
    /// Output format: json or csv.
    #[arg(long, default_value = "json")]
    format: String,
    /// Output path; stdout when omitted (json only).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    configure_workers();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Report(args) => cmd_report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = serde_json::json!({
                "error": { "kind": e.kind(), "message": e.to_string() }
            });
            eprintln!("{record}");
            ExitCode::FAILURE
        }
    }
}

fn configure_workers() {
    if let Ok(value) = std::env::var(WORKERS_ENV) {
        if let Ok(workers) = value.parse::<usize>() {
            if workers >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build_global();
            }
        }
    }
}

fn cmd_synth(args: SynthArgs) -> Result<(), Error> {
    let per_cluster = if args.per_cluster.len() == 1 && args.clusters > 1 {
        vec![args.per_cluster[0]; args.clusters]
    } else {
        args.per_cluster.clone()
    };
    let spec = SynthSpec {
        clusters: args.clusters,
        per_cluster,
        rows: args.rows,
        cols: args.cols,
        rank: args.rank,
        noise_sigma: args.noise_sigma,
        middle_scale: args.middle_scale,
        seed: args.seed,
    };
    let stack = synth_generate(&spec)?;
    save_stack(&stack, &args.out)?;
    println!(
        "{}",
        serde_json::json!({
            "written": args.out.display().to_string(),
            "n": stack.len(),
            "rows": stack.rows(),
            "cols": stack.cols(),
            "clusters": spec.clusters,
            "seed": spec.seed,
        })
    );
    Ok(())
}

fn cmd_fit(args: FitArgs) -> Result<(), Error> {
    let (stack, dataset) = args.input.load()?;
    let method = Method::from_str(&args.method)?;
    let init = CglramInit::from_str(&args.init)?;
    let inner = IterationConfig {
        max_iters: args.inner_max_iters,
        rel_tol: args.inner_rel_tol,
    };
    let started = Instant::now();
    let (model, clusters, init_name) = match method {
        Method::Glram => {
            // A one-cluster model: K=1 keeps every sample in one group.
            let cfg = CglramConfig {
                clusters: 1,
                rank: args.rank,
                eta: args.eta,
                max_outer: args.max_outer,
                inner,
                seed: args.seed,
                init: CglramInit::RandomPartition,
            };
            (cglram_fit(&stack, &cfg)?, 1, "identity-top".to_string())
        }
        Method::KmeansGlram => (
            kmeans_glram(
                &stack,
                args.clusters,
                args.rank,
                args.seed,
                &IterationConfig::default(),
                &inner,
            )?,
            args.clusters,
            "kmeans".to_string(),
        ),
        Method::Cglram => {
            let cfg = CglramConfig {
                clusters: args.clusters,
                rank: args.rank,
                eta: args.eta,
                max_outer: args.max_outer,
                inner,
                seed: args.seed,
                init,
            };
            (cglram_fit(&stack, &cfg)?, args.clusters, init.to_string())
        }
        Method::Svd => {
            return Err(Error::InvalidConfig(
                "the per-matrix svd baseline keeps no shared model; use `compare`".into(),
            ))
        }
    };
    let record = RunRecord {
        method,
        dataset,
        n: stack.len(),
        rows: stack.rows(),
        cols: stack.cols(),
        clusters,
        rank: args.rank,
        seed: args.seed,
        wcssre: model.wcssre(),
        wcssre_history: model.wcssre_history.clone(),
        outer_iterations: model.outer_iterations,
        inner_iterations: model.inner_iterations,
        storage: storage_count(method, stack.len(), clusters, args.rank, stack.rows(), stack.cols()),
        wall_ms: started.elapsed().as_millis() as u64,
        eta: args.eta,
        inner_rel_tol: inner.rel_tol,
        inner_max_iters: inner.max_iters,
        max_outer: args.max_outer,
        init: init_name,
    };
    save_model(
        &SavedModel {
            record: record.clone(),
            model,
        },
        &args.model_out,
    )?;
    println!("{}", serde_json::to_string_pretty(&record)?);
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> Result<(), Error> {
    let (stack, default_id) = args.input.load()?;
    let methods = args
        .methods
        .iter()
        .map(|m| Method::from_str(m))
        .collect::<Result<Vec<_>, _>>()?;
    let format = ReportFormat::from_str(&args.format)?;
    let mut ks = args.ks.clone();
    for &tau in &args.taus {
        ks.push(reduction_ratio_to_rank(tau, stack.rows())?);
    }
    if ks.is_empty() {
        return Err(Error::InvalidConfig(
            "no ranks to sweep: pass --ks and/or --taus".into(),
        ));
    }
    let cfg = CompareConfig {
        dataset_id: args.dataset_id.unwrap_or(default_id),
        methods,
        ks,
        clusters: args.clusters,
        seeds: args.seeds.clone(),
        eta: args.eta,
        max_outer: args.max_outer,
        glram_iters: IterationConfig {
            max_iters: args.glram_max_iters,
            rel_tol: args.glram_rel_tol,
        },
        inner: IterationConfig {
            max_iters: args.inner_max_iters,
            rel_tol: args.inner_rel_tol,
        },
        init: CglramInit::from_str(&args.init)?,
    };
    let report = run_compare(&stack, &cfg)?;
    emit(&report, format, &args.out)?;
    println!(
        "{}",
        serde_json::json!({
            "written": args.out.display().to_string(),
            "runs": report.runs.len(),
            "comparisons": report.comparisons.len(),
            "errors": report.errors.len(),
        })
    );
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<(), Error> {
    let saved = load_model(&args.model)?;
    let (stack, _) = args.input.load()?;
    saved.model.validate(&stack)?;
    let recomputed = cglram::wcssre(&stack, &saved.model)?;
    let recorded = saved.record.wcssre;
    let scale = recorded.abs().max(1e-300);
    if (recomputed - recorded).abs() / scale > 1e-10 {
        return Err(Error::InvalidConfig(format!(
            "recorded objective {recorded} disagrees with recomputed {recomputed}"
        )));
    }
    let format = ReportFormat::from_str(&args.format)?;
    let report = Report {
        runs: vec![saved.record.clone()],
        comparisons: vec![],
        errors: vec![],
    };
    match (&args.out, format) {
        (Some(path), format) => emit(&report, format, path)?,
        (None, ReportFormat::Json) => {
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        (None, ReportFormat::Csv) => {
            return Err(Error::InvalidConfig(
                "csv output needs --out <path>".into(),
            ))
        }
    }
    Ok(())
}
