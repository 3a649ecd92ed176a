//! Benchmark runs, comparison reports, and their JSON/CSV serialization.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{kmeans_glram, storage_count, svd_baseline, Method};
use crate::cglram::{cglram_fit, CglramConfig, CglramInit, ClusterModel};
use crate::error::{Error, Result};
use crate::glram::{glram_fit, IterationConfig};
use crate::stack::MatrixStack;

/// One completed (method, rank, seed) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: Method,
    pub dataset: String,
    pub n: usize,
    pub rows: usize,
    pub cols: usize,
    pub clusters: usize,
    pub rank: usize,
    pub seed: u64,
    /// Objective: within-cluster sum of squared reconstruction errors. For
    /// the shared-pair fit this is N·RMSRE²; for the per-matrix SVD it is
    /// the summed squared truncation error.
    pub wcssre: f64,
    /// Objective after initialization and after each iteration, on the
    /// same scale as `wcssre`.
    pub wcssre_history: Vec<f64>,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    /// Stored values per the storage-count model.
    pub storage: u64,
    pub wall_ms: u64,
    pub eta: f64,
    pub inner_rel_tol: f64,
    pub inner_max_iters: usize,
    pub max_outer: usize,
    pub init: String,
}

/// A run that failed, kept alongside the successful ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunError {
    pub method: Method,
    pub rank: usize,
    pub seed: u64,
    pub kind: String,
    pub error: String,
}

/// Error-reduction ratio between two methods' best-seed results at one
/// rank: (baseline − target) / baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub baseline: String,
    pub target: String,
    pub rank: usize,
    pub baseline_wcssre: f64,
    pub target_wcssre: f64,
    pub reduction_ratio: f64,
}

/// Everything a compare sweep produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub runs: Vec<RunRecord>,
    pub comparisons: Vec<Comparison>,
    pub errors: Vec<RunError>,
}

/// Sweep configuration for `run_compare`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareConfig {
    pub dataset_id: String,
    pub methods: Vec<Method>,
    pub ks: Vec<usize>,
    pub clusters: usize,
    pub seeds: Vec<u64>,
    pub eta: f64,
    pub max_outer: usize,
    /// Budget for the standalone shared-pair fit.
    pub glram_iters: IterationConfig,
    /// Budget for every per-cluster fit.
    pub inner: IterationConfig,
    pub init: CglramInit,
}

impl CompareConfig {
    pub fn new(dataset_id: impl Into<String>, ks: Vec<usize>, clusters: usize) -> Self {
        Self {
            dataset_id: dataset_id.into(),
            methods: Method::ALL.to_vec(),
            ks,
            clusters,
            seeds: vec![0, 1, 2],
            eta: 1e-4,
            max_outer: 50,
            glram_iters: IterationConfig::default(),
            inner: IterationConfig {
                max_iters: 30,
                rel_tol: 1e-6,
            },
            init: CglramInit::RandomPartition,
        }
    }
}

/// Run every requested (method, rank, seed) combination and assemble the
/// comparison table from each method's best seed per rank.
pub fn run_compare(stack: &MatrixStack, cfg: &CompareConfig) -> Result<Report> {
    for &k in &cfg.ks {
        if k == 0 || k > stack.max_rank() {
            return Err(Error::RankOutOfRange {
                k,
                max: stack.max_rank(),
            });
        }
    }
    if cfg.seeds.is_empty() {
        return Err(Error::InvalidConfig("at least one seed is required".into()));
    }
    let mut methods = cfg.methods.clone();
    methods.sort_unstable();
    methods.dedup();

    let jobs: Vec<(Method, usize, u64)> = methods
        .iter()
        .flat_map(|&m| {
            cfg.ks
                .iter()
                .flat_map(move |&k| cfg.seeds.iter().map(move |&s| (m, k, s)))
        })
        .collect();

    let outcomes: Vec<std::result::Result<RunRecord, RunError>> = jobs
        .par_iter()
        .map(|&(method, k, seed)| {
            run_one(stack, cfg, method, k, seed).map_err(|e| RunError {
                method,
                rank: k,
                seed,
                kind: e.kind().to_string(),
                error: e.to_string(),
            })
        })
        .collect();

    let mut runs = Vec::new();
    let mut errors = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(r) => runs.push(r),
            Err(e) => errors.push(e),
        }
    }
    let comparisons = build_comparisons(&methods, &cfg.ks, &runs);
    Ok(Report {
        runs,
        comparisons,
        errors,
    })
}

fn run_one(
    stack: &MatrixStack,
    cfg: &CompareConfig,
    method: Method,
    k: usize,
    seed: u64,
) -> Result<RunRecord> {
    let started = Instant::now();
    let (clusters, wcssre, history, outer, inner, init): (
        usize,
        f64,
        Vec<f64>,
        usize,
        usize,
        String,
    );
    // Config echo: the iteration budget the fit actually ran with.
    let mut applied = cfg.inner;
    match method {
        Method::Glram => {
            let (_, _, trace) = glram_fit(stack, k, &cfg.glram_iters)?;
            let n = stack.len() as f64;
            let hist: Vec<f64> = trace.rmsre_history.iter().map(|e| e * e * n).collect();
            clusters = 1;
            wcssre = *hist.last().unwrap();
            history = hist;
            outer = trace.iterations;
            inner = trace.iterations;
            init = "identity-top".into();
            applied = cfg.glram_iters;
        }
        Method::KmeansGlram => {
            let model = kmeans_glram(
                stack,
                cfg.clusters,
                k,
                seed,
                &IterationConfig::default(),
                &cfg.inner,
            )?;
            clusters = cfg.clusters;
            wcssre = model.wcssre();
            history = model.wcssre_history.clone();
            outer = model.outer_iterations;
            inner = model.inner_iterations;
            init = "kmeans".into();
        }
        Method::Cglram => {
            let model = cglram_fit(
                stack,
                &CglramConfig {
                    clusters: cfg.clusters,
                    rank: k,
                    eta: cfg.eta,
                    max_outer: cfg.max_outer,
                    inner: cfg.inner,
                    seed,
                    init: cfg.init,
                },
            )?;
            clusters = cfg.clusters;
            wcssre = model.wcssre();
            history = model.wcssre_history.clone();
            outer = model.outer_iterations;
            inner = model.inner_iterations;
            init = cfg.init.to_string();
        }
        Method::Svd => {
            let (err_sq, _) = svd_baseline(stack, k)?;
            clusters = stack.len();
            wcssre = err_sq;
            history = vec![err_sq];
            outer = 0;
            inner = 0;
            init = "per-sample-tsvd".into();
        }
    }
    Ok(RunRecord {
        method,
        dataset: cfg.dataset_id.clone(),
        n: stack.len(),
        rows: stack.rows(),
        cols: stack.cols(),
        clusters,
        rank: k,
        seed,
        wcssre,
        wcssre_history: history,
        outer_iterations: outer,
        inner_iterations: inner,
        storage: storage_count(method, stack.len(), clusters, k, stack.rows(), stack.cols()),
        wall_ms: started.elapsed().as_millis() as u64,
        eta: cfg.eta,
        inner_rel_tol: applied.rel_tol,
        inner_max_iters: applied.max_iters,
        max_outer: cfg.max_outer,
        init,
    })
}

fn ratio(baseline: f64, target: f64) -> f64 {
    if baseline == 0.0 {
        0.0
    } else {
        (baseline - target) / baseline
    }
}

/// Best (lowest-objective) run per (method, rank); ties keep the earliest
/// seed in the sweep order.
fn best_run(runs: &[RunRecord], method: Method, k: usize) -> Option<&RunRecord> {
    runs.iter()
        .filter(|r| r.method == method && r.rank == k)
        .min_by(|a, b| a.wcssre.partial_cmp(&b.wcssre).unwrap())
}

fn build_comparisons(methods: &[Method], ks: &[usize], runs: &[RunRecord]) -> Vec<Comparison> {
    let mut out = Vec::new();
    for &k in ks {
        for &baseline in methods {
            for &target in methods {
                if baseline == target {
                    continue;
                }
                if let (Some(b), Some(t)) = (best_run(runs, baseline, k), best_run(runs, target, k))
                {
                    out.push(Comparison {
                        baseline: baseline.name().to_string(),
                        target: target.name().to_string(),
                        rank: k,
                        baseline_wcssre: b.wcssre,
                        target_wcssre: t.wcssre,
                        reduction_ratio: ratio(b.wcssre, t.wcssre),
                    });
                }
            }
        }
        // The clustered fit also reports its own initial-vs-final drop.
        if let Some(best) = best_run(runs, Method::Cglram, k) {
            let initial = best.wcssre_history[0];
            out.push(Comparison {
                baseline: "cglram-initial".to_string(),
                target: Method::Cglram.name().to_string(),
                rank: k,
                baseline_wcssre: initial,
                target_wcssre: best.wcssre,
                reduction_ratio: ratio(initial, best.wcssre),
            });
        }
    }
    out
}

/// Map a dimension-reduction ratio τ ∈ (0, 1] to a rank: round(τ·r)
/// clamped to [1, r]. τ·r is snapped to nine decimal digits first so
/// decimal ratios round the way they read (0.30 of 665 gives 200).
pub fn reduction_ratio_to_rank(tau: f64, r: usize) -> Result<usize> {
    if !(tau > 0.0 && tau <= 1.0) || !tau.is_finite() {
        return Err(Error::InvalidRatio(tau));
    }
    let snapped = (tau * r as f64 * 1e9).round() / 1e9;
    Ok((snapped.round() as usize).clamp(1, r))
}

/// Output format for `emit`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::InvalidConfig(format!(
                "unknown report format `{other}` (expected json or csv)"
            ))),
        }
    }
}

/// Fixed column order of the runs CSV.
pub const RUNS_CSV_HEADER: [&str; 19] = [
    "method",
    "dataset",
    "n",
    "rows",
    "cols",
    "clusters",
    "rank",
    "seed",
    "wcssre",
    "outer_iterations",
    "inner_iterations",
    "storage",
    "wall_ms",
    "eta",
    "inner_rel_tol",
    "inner_max_iters",
    "max_outer",
    "init",
    "wcssre_history",
];

/// Fixed column order of the comparisons CSV.
pub const COMPARISONS_CSV_HEADER: [&str; 6] = [
    "baseline",
    "target",
    "rank",
    "baseline_wcssre",
    "target_wcssre",
    "reduction_ratio",
];

/// Write a report. JSON goes to `path` as one document. CSV writes the
/// runs table to `path`, the comparisons to `<stem>.comparisons.csv`, and
/// (only when runs failed) `<stem>.errors.csv` next to it. Emitting the
/// same report twice is byte-identical.
pub fn emit(report: &Report, format: ReportFormat, path: &Path) -> Result<()> {
    match format {
        ReportFormat::Json => {
            let mut text = serde_json::to_string_pretty(report)?;
            text.push('\n');
            std::fs::write(path, text)?;
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_path(path)?;
            w.write_record(RUNS_CSV_HEADER)?;
            for r in &report.runs {
                let history = r
                    .wcssre_history
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(";");
                w.write_record([
                    r.method.name().to_string(),
                    r.dataset.clone(),
                    r.n.to_string(),
                    r.rows.to_string(),
                    r.cols.to_string(),
                    r.clusters.to_string(),
                    r.rank.to_string(),
                    r.seed.to_string(),
                    r.wcssre.to_string(),
                    r.outer_iterations.to_string(),
                    r.inner_iterations.to_string(),
                    r.storage.to_string(),
                    r.wall_ms.to_string(),
                    r.eta.to_string(),
                    r.inner_rel_tol.to_string(),
                    r.inner_max_iters.to_string(),
                    r.max_outer.to_string(),
                    r.init.clone(),
                    history,
                ])?;
            }
            w.flush()?;

            let mut w = csv::Writer::from_path(sibling(path, "comparisons"))?;
            w.write_record(COMPARISONS_CSV_HEADER)?;
            for c in &report.comparisons {
                w.write_record([
                    c.baseline.clone(),
                    c.target.clone(),
                    c.rank.to_string(),
                    c.baseline_wcssre.to_string(),
                    c.target_wcssre.to_string(),
                    c.reduction_ratio.to_string(),
                ])?;
            }
            w.flush()?;

            if !report.errors.is_empty() {
                let mut w = csv::Writer::from_path(sibling(path, "errors"))?;
                w.write_record(["method", "rank", "seed", "kind", "error"])?;
                for e in &report.errors {
                    w.write_record([
                        e.method.name().to_string(),
                        e.rank.to_string(),
                        e.seed.to_string(),
                        e.kind.clone(),
                        e.error.clone(),
                    ])?;
                }
                w.flush()?;
            }
        }
    }
    Ok(())
}

fn sibling(path: &Path, tag: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".to_string());
    path.with_file_name(format!("{stem}.{tag}.csv"))
}

/// Read back a JSON report.
pub fn read_report_json(path: &Path) -> Result<Report> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// A fitted model persisted by the CLI together with its run record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedModel {
    pub record: RunRecord,
    pub model: ClusterModel,
}

pub fn save_model(saved: &SavedModel, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(saved)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<SavedModel> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
