//! Reproducible experiment harness: wires network generation, cascade
//! simulation, sampling, and estimation into seeded sweeps with CSV output.
//!
//! Every run derives its RNG from (master seed, replication, grid index,
//! sampler), so results are byte-identical across reruns and independent of
//! worker scheduling.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand_chacha::ChaCha12Rng;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cascade::{
    generate_cascade_set_seeded, CascadeSet, DiffusionNetwork, DiffusionParams, SeedChoice,
};
use crate::estimation::{hansen_hurwitz, plain_mean, WeightedDraws};
use crate::graph::{load_edge_list, Graph};
use crate::metrics::{bias_value, eta_true, TargetFunction};
use crate::netgen::{forest_fire, kronecker, ForestFireParams, KroneckerParams};
use crate::sampling::{
    bfs_sample, dns_sample, rw_sample, SampleTrace, SamplerConfig, StartNode, TeleportPolicy,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("failed to read config {path}: {source}")]
    ConfigIo {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse config {path}: {source}")]
    ConfigParse {
        path: String,
        #[source]
        source: Box<toml::de::Error>,
    },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("csv error at {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: Box<csv::Error>,
    },
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("aggregation needs at least two samplers, found {0}")]
    SingleSampler(usize),
    #[error("samplers cover mismatched grids: {0}")]
    MismatchedGrids(String),
    #[error("no rows to aggregate")]
    NoRows,
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
    #[error(transparent)]
    Netgen(#[from] crate::netgen::NetgenError),
}

/// The underlying network a sweep runs over.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NetworkSpec {
    Kronecker {
        /// Row-major 2x2 initiator as four entries.
        initiator: [f64; 4],
        iterations: u32,
        edges: usize,
        #[serde(default)]
        name: Option<String>,
    },
    ForestFire {
        nodes: usize,
        starting_nodes: usize,
        p_forward: f64,
        p_backward: f64,
        p_decay: f64,
        p_orphan: f64,
        #[serde(default)]
        name: Option<String>,
    },
    EdgeList {
        path: PathBuf,
        directed: bool,
        #[serde(default)]
        name: Option<String>,
    },
}

impl NetworkSpec {
    pub fn label(&self) -> String {
        match self {
            NetworkSpec::Kronecker {
                name, iterations, ..
            } => name
                .clone()
                .unwrap_or_else(|| format!("kronecker-k{iterations}")),
            NetworkSpec::ForestFire { name, nodes, .. } => name
                .clone()
                .unwrap_or_else(|| format!("forest-fire-n{nodes}")),
            NetworkSpec::EdgeList { name, path, .. } => name.clone().unwrap_or_else(|| {
                path.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "edge-list".to_string())
            }),
        }
    }

    /// Generates or loads the graph; generators consume the given stream.
    pub fn realize(&self, rng: &mut ChaCha12Rng) -> Result<Graph, ExperimentError> {
        match self {
            NetworkSpec::Kronecker {
                initiator,
                iterations,
                edges,
                ..
            } => {
                let params = KroneckerParams::new(
                    [[initiator[0], initiator[1]], [initiator[2], initiator[3]]],
                    *iterations,
                    *edges,
                );
                Ok(kronecker(&params, rng)?)
            }
            NetworkSpec::ForestFire {
                nodes,
                starting_nodes,
                p_forward,
                p_backward,
                p_decay,
                p_orphan,
                ..
            } => {
                let params = ForestFireParams {
                    n: *nodes,
                    starting_nodes: *starting_nodes,
                    p_forward: *p_forward,
                    p_backward: *p_backward,
                    p_decay: *p_decay,
                    p_orphan: *p_orphan,
                };
                Ok(forest_fire(&params, rng)?)
            }
            NetworkSpec::EdgeList { path, directed, .. } => {
                let (g, _) = load_edge_list(path, *directed)?;
                Ok(g)
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionConfig {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub max_cascades: Option<usize>,
    /// "uniform" or a node label every cascade starts from.
    #[serde(default)]
    pub seed_node: Option<String>,
}

impl DiffusionConfig {
    fn params(&self, delta: f64) -> DiffusionParams {
        let mut p = DiffusionParams::new(self.alpha, self.beta, delta);
        p.horizon = self.horizon;
        if let Some(mc) = self.max_cascades {
            p.max_cascades = mc;
        }
        p
    }

    fn seed_choice(&self, g: &Graph) -> Result<SeedChoice, ExperimentError> {
        match self.seed_node.as_deref() {
            None => Ok(SeedChoice::Uniform),
            Some("uniform") => Ok(SeedChoice::Uniform),
            Some(label) => g
                .node_by_label(label)
                .map(SeedChoice::Fixed)
                .ok_or_else(|| {
                    ExperimentError::InvalidConfig(format!(
                        "diffusion.seed_node {label:?} is not a node of the network"
                    ))
                }),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    Dns,
    DnsWoe,
    Bfs,
    Rw,
}

impl SamplerKind {
    pub fn label(&self) -> &'static str {
        match self {
            SamplerKind::Dns => "DNS",
            SamplerKind::DnsWoe => "DNS-WoE",
            SamplerKind::Bfs => "BFS",
            SamplerKind::Rw => "RW",
        }
    }

    pub fn from_label(label: &str) -> Option<SamplerKind> {
        match label.to_ascii_lowercase().as_str() {
            "dns" => Some(SamplerKind::Dns),
            "dns-woe" | "dnswoe" => Some(SamplerKind::DnsWoe),
            "bfs" => Some(SamplerKind::Bfs),
            "rw" => Some(SamplerKind::Rw),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    pub samplers: Vec<SamplerKind>,
    /// Decay scale the samplers and estimators use.
    pub alpha: f64,
    /// Sampling rate when mu is not the sweep axis.
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default = "default_teleport")]
    pub teleport: String,
}

fn default_mu() -> f64 {
    0.5
}

fn default_teleport() -> String {
    "random-node".to_string()
}

impl SamplingConfig {
    fn teleport_policy(&self) -> Result<TeleportPolicy, ExperimentError> {
        match self.teleport.as_str() {
            "random-node" => Ok(TeleportPolicy::RestartRandomNode),
            "random-visited" => Ok(TeleportPolicy::RestartRandomVisited),
            other => Err(ExperimentError::InvalidConfig(format!(
                "unknown teleport policy {other:?} (expected random-node or random-visited)"
            ))),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    Mu,
    Alpha,
    Delta,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Mu => "mu",
            SweepAxis::Alpha => "alpha",
            SweepAxis::Delta => "delta",
        }
    }

    fn default_grid(&self) -> Vec<f64> {
        match self {
            SweepAxis::Mu | SweepAxis::Delta => (1..=9).map(|i| i as f64 / 10.0).collect(),
            SweepAxis::Alpha => (1..=30).map(|i| i as f64 / 10.0).collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    #[serde(default)]
    pub grid: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub threads: Option<usize>,
    /// When false (the default) the wallclock column is zeroed so output
    /// bytes depend only on (config, seed).
    #[serde(default)]
    pub record_timings: bool,
}

fn default_replications() -> usize {
    20
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            replications: default_replications(),
            seed: 0,
            threads: None,
            record_timings: false,
        }
    }
}

/// A full declarative experiment: network, diffusion, samplers, sweep, run.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub network: NetworkSpec,
    pub diffusion: DiffusionConfig,
    pub sampling: SamplingConfig,
    pub sweep: SweepConfig,
    #[serde(default)]
    pub run: RunConfig,
}

impl ExperimentConfig {
    pub fn from_file<P: AsRef<Path>>(path: P) -> Result<Self, ExperimentError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::ConfigIo {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg: ExperimentConfig =
            toml::from_str(&text).map_err(|source| ExperimentError::ConfigParse {
                path: path.display().to_string(),
                source: Box::new(source),
            })?;
        cfg.apply_env_overrides();
        cfg.validate()?;
        Ok(cfg)
    }

    /// `DIFFNET_SEED` and `DIFFNET_THREADS` override the run section.
    pub fn apply_env_overrides(&mut self) {
        if let Ok(seed) = std::env::var("DIFFNET_SEED") {
            if let Ok(seed) = seed.parse() {
                self.run.seed = seed;
            }
        }
        if let Ok(threads) = std::env::var("DIFFNET_THREADS") {
            if let Ok(threads) = threads.parse() {
                self.run.threads = Some(threads);
            }
        }
    }

    pub fn grid(&self) -> Vec<f64> {
        self.sweep
            .grid
            .clone()
            .unwrap_or_else(|| self.sweep.axis.default_grid())
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let fail = |msg: String| Err(ExperimentError::InvalidConfig(msg));
        if self.sampling.samplers.is_empty() {
            return fail("sampling.samplers is empty".into());
        }
        if self.run.replications == 0 {
            return fail("run.replications must be at least 1".into());
        }
        let grid = self.grid();
        if grid.is_empty() {
            return fail("sweep.grid is empty".into());
        }
        for &v in &grid {
            let ok = match self.sweep.axis {
                SweepAxis::Mu | SweepAxis::Delta => v > 0.0 && v <= 1.0,
                SweepAxis::Alpha => v > 0.0,
            };
            if !ok {
                return fail(format!(
                    "sweep grid value {v} out of range for axis {}",
                    self.sweep.axis.name()
                ));
            }
        }
        if !(self.sampling.mu > 0.0 && self.sampling.mu <= 1.0) {
            return fail(format!("sampling.mu = {} out of (0, 1]", self.sampling.mu));
        }
        if !(self.sampling.alpha > 0.0) {
            return fail(format!("sampling.alpha = {} must be positive", self.sampling.alpha));
        }
        self.sampling.teleport_policy()?;
        if let NetworkSpec::EdgeList { path, .. } = &self.network {
            if !path.exists() {
                return fail(format!("edge list {} does not exist", path.display()));
            }
        }
        Ok(())
    }
}

/// One (grid point, sampler, replication) outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub network: String,
    pub sampler: String,
    pub mu: f64,
    pub alpha: f64,
    pub delta: f64,
    pub replication: usize,
    pub eta_true: Option<f64>,
    pub estimate: Option<f64>,
    pub bias: Option<f64>,
    pub n_draws: usize,
    pub wallclock: f64,
    /// Empty on success; a failed run keeps its row with the reason here.
    #[serde(default)]
    pub error: String,
}

fn derive_rng(master: u64, parts: &[&str]) -> ChaCha12Rng {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    for p in parts {
        hasher.update([0xfe]);
        hasher.update(p.as_bytes());
    }
    let digest = hasher.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha12Rng::from_seed(seed)
}

struct GridPoint {
    index: usize,
    mu: f64,
    alpha: f64,
    delta: f64,
}

/// Runs the full sweep. Rows come back sorted by (replication, grid point,
/// sampler position) and are bit-identical for a given (config, seed), no
/// matter how many worker threads execute the replications.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>, ExperimentError> {
    cfg.validate()?;
    let run = |_: ()| -> Result<Vec<ResultRow>, ExperimentError> {
        let reps: Vec<usize> = (0..cfg.run.replications).collect();
        let nested: Result<Vec<Vec<ResultRow>>, ExperimentError> = reps
            .par_iter()
            .map(|&rep| run_replication(cfg, rep))
            .collect();
        Ok(nested?.into_iter().flatten().collect())
    };
    match cfg.run.threads {
        Some(t) if t > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| ExperimentError::InvalidConfig(format!("thread pool: {e}")))?
            .install(|| run(())),
        _ => run(()),
    }
}

fn run_replication(cfg: &ExperimentConfig, rep: usize) -> Result<Vec<ResultRow>, ExperimentError> {
    let master = cfg.run.seed;
    let rep_tag = rep.to_string();
    let mut net_rng = derive_rng(master, &["network", &rep_tag]);
    let graph = cfg.network.realize(&mut net_rng)?;
    let network_label = cfg.network.label();
    let seed_choice = cfg.diffusion.seed_choice(&graph)?;
    let grid = cfg.grid();
    let mut rows = Vec::with_capacity(grid.len() * cfg.sampling.samplers.len());

    // For mu/alpha sweeps the cascade set is shared across the grid.
    let shared_cascades = if cfg.sweep.axis != SweepAxis::Delta {
        let mut rng = derive_rng(master, &["cascades", &rep_tag]);
        Some(generate_cascade_set_seeded(
            &graph,
            &cfg.diffusion.params(cfg.diffusion.delta),
            seed_choice,
            &mut rng,
        ))
    } else {
        None
    };

    for (gi, &value) in grid.iter().enumerate() {
        let point = match cfg.sweep.axis {
            SweepAxis::Mu => GridPoint {
                index: gi,
                mu: value,
                alpha: cfg.sampling.alpha,
                delta: cfg.diffusion.delta,
            },
            SweepAxis::Alpha => GridPoint {
                index: gi,
                mu: cfg.sampling.mu,
                alpha: value,
                delta: cfg.diffusion.delta,
            },
            SweepAxis::Delta => GridPoint {
                index: gi,
                mu: cfg.sampling.mu,
                alpha: cfg.sampling.alpha,
                delta: value,
            },
        };

        let local_cascades;
        let cascades = match &shared_cascades {
            Some(c) => c,
            None => {
                let mut rng =
                    derive_rng(master, &["cascades", &rep_tag, &point.index.to_string()]);
                local_cascades = generate_cascade_set_seeded(
                    &graph,
                    &cfg.diffusion.params(point.delta),
                    seed_choice,
                    &mut rng,
                );
                &local_cascades
            }
        };

        for &sampler in &cfg.sampling.samplers {
            let row = run_single(
                cfg,
                &graph,
                &network_label,
                cascades,
                &point,
                sampler,
                rep,
            );
            rows.push(row);
        }
    }
    Ok(rows)
}

fn run_single(
    cfg: &ExperimentConfig,
    graph: &Graph,
    network_label: &str,
    cascades: &Result<(CascadeSet, DiffusionNetwork), crate::cascade::CascadeError>,
    point: &GridPoint,
    sampler: SamplerKind,
    rep: usize,
) -> ResultRow {
    let start = Instant::now();
    let mut row = ResultRow {
        network: network_label.to_string(),
        sampler: sampler.label().to_string(),
        mu: point.mu,
        alpha: point.alpha,
        delta: point.delta,
        replication: rep,
        eta_true: None,
        estimate: None,
        bias: None,
        n_draws: 0,
        wallclock: 0.0,
        error: String::new(),
    };

    let outcome = (|| -> Result<(), String> {
        let (cs, dn) = cascades.as_ref().map_err(|e| e.to_string())?;
        let truth = eta_true(graph, dn, cs, TargetFunction::LinkAttendance { binary: false })
            .map_err(|e| e.to_string())?;
        row.eta_true = Some(truth.eta_true);

        let budget = ((point.mu * graph.edge_count() as f64).ceil() as usize)
            .clamp(1, graph.edge_count());
        let mut sampler_cfg = SamplerConfig::new(budget, point.alpha);
        sampler_cfg.start = StartNode::Random;
        sampler_cfg.teleport = cfg
            .sampling
            .teleport_policy()
            .expect("validated teleport policy");

        let mut rng = derive_rng(
            cfg.run.seed,
            &[
                "sample",
                &rep.to_string(),
                &point.index.to_string(),
                sampler.label(),
            ],
        );
        let view = crate::sampling::LocalView::new(graph, cs);
        let trace: SampleTrace = match sampler {
            SamplerKind::Dns | SamplerKind::DnsWoe => {
                dns_sample(&view, &sampler_cfg, &mut rng).map_err(|e| e.to_string())?
            }
            SamplerKind::Bfs => {
                bfs_sample(&view, &sampler_cfg, &mut rng).map_err(|e| e.to_string())?
            }
            SamplerKind::Rw => {
                rw_sample(&view, &sampler_cfg, &mut rng).map_err(|e| e.to_string())?
            }
        };

        let values: Vec<f64> = trace
            .draws
            .iter()
            .map(|d| dn.attendance_or_zero(d.edge) as f64)
            .collect();
        let result = match sampler {
            SamplerKind::Dns => {
                let pis: Vec<f64> = trace
                    .draws
                    .iter()
                    .map(|d| d.pi.expect("weighted draw"))
                    .collect();
                hansen_hurwitz(&WeightedDraws::from_parts(&values, &pis))
                    .map_err(|e| e.to_string())?
            }
            _ => plain_mean(&values).map_err(|e| e.to_string())?,
        };
        row.estimate = Some(result.estimate);
        row.n_draws = result.n_draws;
        row.bias = Some(bias_value(truth.eta_true, result.estimate).map_err(|e| e.to_string())?);
        Ok(())
    })();

    if let Err(message) = outcome {
        row.error = message;
    }
    if cfg.run.record_timings {
        row.wallclock = start.elapsed().as_secs_f64();
    }
    row
}

/// Writes rows as RFC-4180 CSV with one header row.
pub fn write_rows_csv<P: AsRef<Path>>(rows: &[ResultRow], path: P) -> Result<(), ExperimentError> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path).map_err(|source| ExperimentError::Csv {
        path: path.display().to_string(),
        source: Box::new(source),
    })?;
    for row in rows {
        writer.serialize(row).map_err(|source| ExperimentError::Csv {
            path: path.display().to_string(),
            source: Box::new(source),
        })?;
    }
    writer.flush().map_err(|source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_rows_csv<P: AsRef<Path>>(path: P) -> Result<Vec<ResultRow>, ExperimentError> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|source| ExperimentError::Csv {
        path: path.display().to_string(),
        source: Box::new(source),
    })?;
    reader
        .deserialize()
        .map(|r| {
            r.map_err(|source| ExperimentError::Csv {
                path: path.display().to_string(),
                source: Box::new(source),
            })
        })
        .collect()
}

/// Per-(network, sampler, grid point) bias statistics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridStat {
    pub network: String,
    pub sampler: String,
    pub axis: String,
    pub grid_value: f64,
    pub mean_bias: f64,
    pub std_bias: f64,
    pub replications: usize,
    pub failed: usize,
}

/// Mean bias difference of a baseline against DNS over the whole grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SamplerDiff {
    pub network: String,
    pub baseline: String,
    pub mean_bias_diff_vs_dns: f64,
}

#[derive(Clone, Debug, Default)]
pub struct Summary {
    pub grid_stats: Vec<GridStat>,
    pub diffs: Vec<SamplerDiff>,
    pub axis: String,
}

/// Detects the swept axis as the value column that actually varies.
fn detect_axis(rows: &[ResultRow]) -> SweepAxis {
    let distinct = |f: fn(&ResultRow) -> f64| {
        rows.iter()
            .map(|r| f(r).to_bits())
            .collect::<BTreeSet<u64>>()
            .len()
    };
    if distinct(|r| r.mu) > 1 {
        SweepAxis::Mu
    } else if distinct(|r| r.alpha) > 1 {
        SweepAxis::Alpha
    } else if distinct(|r| r.delta) > 1 {
        SweepAxis::Delta
    } else {
        SweepAxis::Mu
    }
}

/// Aggregates raw rows: per-grid-point mean/std of bias, plus the average
/// bias gap of every baseline sampler against DNS over the shared grid.
pub fn aggregate(rows: &[ResultRow]) -> Result<Summary, ExperimentError> {
    if rows.is_empty() {
        return Err(ExperimentError::NoRows);
    }
    let axis = detect_axis(rows);
    let axis_value = |r: &ResultRow| match axis {
        SweepAxis::Mu => r.mu,
        SweepAxis::Alpha => r.alpha,
        SweepAxis::Delta => r.delta,
    };

    let samplers: BTreeSet<&str> = rows.iter().map(|r| r.sampler.as_str()).collect();
    if samplers.len() < 2 {
        return Err(ExperimentError::SingleSampler(samplers.len()));
    }

    // (network, sampler) -> grid value bits -> biases
    let mut cells: BTreeMap<(String, String), BTreeMap<u64, (Vec<f64>, usize)>> = BTreeMap::new();
    for row in rows {
        let cell = cells
            .entry((row.network.clone(), row.sampler.clone()))
            .or_default()
            .entry(axis_value(row).to_bits())
            .or_default();
        match row.bias {
            Some(b) if row.error.is_empty() => cell.0.push(b),
            _ => cell.1 += 1,
        }
    }

    // all samplers of a network must cover the same grid
    let networks: BTreeSet<String> = rows.iter().map(|r| r.network.clone()).collect();
    for network in &networks {
        let mut grids: Vec<(&String, Vec<u64>)> = cells
            .iter()
            .filter(|((n, _), _)| n == network)
            .map(|((_, s), points)| (s, points.keys().copied().collect()))
            .collect();
        grids.sort();
        if let Some((first, rest)) = grids.split_first() {
            for (s, grid) in rest {
                if *grid != first.1 {
                    return Err(ExperimentError::MismatchedGrids(format!(
                        "{network}: {s} covers a different grid than {}",
                        first.0
                    )));
                }
            }
        }
    }

    let mut summary = Summary {
        axis: axis.name().to_string(),
        ..Summary::default()
    };
    for ((network, sampler), points) in &cells {
        for (&bits, (biases, failed)) in points {
            let n = biases.len();
            let mean = if n == 0 {
                f64::NAN
            } else {
                biases.iter().sum::<f64>() / n as f64
            };
            let std = if n < 2 {
                0.0
            } else {
                let var = biases.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                var.sqrt()
            };
            summary.grid_stats.push(GridStat {
                network: network.clone(),
                sampler: sampler.clone(),
                axis: axis.name().to_string(),
                grid_value: f64::from_bits(bits),
                mean_bias: mean,
                std_bias: std,
                replications: n,
                failed: *failed,
            });
        }
    }

    for network in &networks {
        let mean_over_grid = |sampler: &str| -> Option<f64> {
            let points = cells.get(&(network.clone(), sampler.to_string()))?;
            let means: Vec<f64> = points
                .values()
                .filter(|(b, _)| !b.is_empty())
                .map(|(b, _)| b.iter().sum::<f64>() / b.len() as f64)
                .collect();
            if means.is_empty() {
                None
            } else {
                Some(means.iter().sum::<f64>() / means.len() as f64)
            }
        };
        let dns_mean = match mean_over_grid(SamplerKind::Dns.label()) {
            Some(v) => v,
            None => continue,
        };
        for sampler in &samplers {
            if *sampler == SamplerKind::Dns.label() {
                continue;
            }
            if let Some(base_mean) = mean_over_grid(sampler) {
                summary.diffs.push(SamplerDiff {
                    network: network.clone(),
                    baseline: sampler.to_string(),
                    mean_bias_diff_vs_dns: base_mean - dns_mean,
                });
            }
        }
    }
    Ok(summary)
}

/// Writes the summary as CSV: grid statistics first, then the per-network
/// baseline-vs-DNS differences, tagged by a leading `record` column.
pub fn write_summary_csv<P: AsRef<Path>>(
    summary: &Summary,
    path: P,
) -> Result<(), ExperimentError> {
    let path = path.as_ref();
    let csv_err = |source: csv::Error| ExperimentError::Csv {
        path: path.display().to_string(),
        source: Box::new(source),
    };
    let mut writer = csv::Writer::from_path(path).map_err(csv_err)?;
    writer
        .write_record([
            "record",
            "network",
            "sampler",
            "axis",
            "grid_value",
            "mean_bias",
            "std_bias",
            "replications",
            "failed",
        ])
        .map_err(csv_err)?;
    for s in &summary.grid_stats {
        writer
            .write_record([
                "grid",
                &s.network,
                &s.sampler,
                &s.axis,
                &s.grid_value.to_string(),
                &s.mean_bias.to_string(),
                &s.std_bias.to_string(),
                &s.replications.to_string(),
                &s.failed.to_string(),
            ])
            .map_err(csv_err)?;
    }
    for d in &summary.diffs {
        writer
            .write_record([
                "diff-vs-dns",
                &d.network,
                &d.baseline,
                &summary.axis,
                "",
                &d.mean_bias_diff_vs_dns.to_string(),
                "",
                "",
                "",
            ])
            .map_err(csv_err)?;
    }
    writer.flush().map_err(|source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Convenience for tests and examples: mean bias of one sampler over all
/// successful rows.
pub fn mean_bias(rows: &[ResultRow], sampler: SamplerKind) -> Option<f64> {
    let biases: Vec<f64> = rows
        .iter()
        .filter(|r| r.sampler == sampler.label() && r.error.is_empty())
        .filter_map(|r| r.bias)
        .collect();
    if biases.is_empty() {
        None
    } else {
        Some(biases.iter().sum::<f64>() / biases.len() as f64)
    }
}
