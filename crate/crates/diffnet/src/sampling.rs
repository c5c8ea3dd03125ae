//! The three sampling designs: the diffusion-aware link tracer (DNS) and the
//! BFS / RW baselines.
//!
//! Samplers see the network through [`LocalView`]: a neighbor oracle plus
//! per-cascade infection times. That view carries no transmission links and
//! no diffusion network, so whether a cascade "passed over" a link can only
//! be inferred from the endpoint times.

use std::collections::{BTreeSet, VecDeque};
use std::fs::File;
use std::io::Write as _;
use std::path::Path;

use rand::Rng;
use thiserror::Error;

use crate::cascade::CascadeSet;
use crate::graph::{Edge, Graph, NodeId};

#[derive(Debug, Error)]
pub enum SamplingError {
    #[error("edge budget {budget} exceeds the graph's {edges} edges")]
    BudgetTooLarge { budget: usize, edges: usize },
    #[error("budget must be at least 1")]
    ZeroBudget,
    #[error("graph has no edges to sample")]
    EmptyGraph,
    #[error("start node {0} out of range")]
    StartOutOfRange(NodeId),
    #[error("alpha = {0} must be positive")]
    BadAlpha(f64),
    #[error("failed to write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// What a crawler is allowed to know: outgoing/incoming link endpoints of
/// nodes it touches, and every cascade's infection time at any node.
#[derive(Clone)]
pub struct LocalView<'a> {
    graph: &'a Graph,
    times: Vec<&'a [f64]>,
}

impl<'a> LocalView<'a> {
    /// View over a simulated cascade set. Only the time vectors are
    /// borrowed; transmission links stay out of reach.
    pub fn new(graph: &'a Graph, cascades: &'a CascadeSet) -> Self {
        LocalView {
            graph,
            times: cascades.time_vectors(),
        }
    }

    /// View over bare time vectors, e.g. read back from a cascade file.
    pub fn from_times(graph: &'a Graph, times: &'a [Vec<f64>]) -> Self {
        LocalView {
            graph,
            times: times.iter().map(|t| t.as_slice()).collect(),
        }
    }

    #[inline]
    pub fn graph(&self) -> &Graph {
        self.graph
    }

    #[inline]
    pub fn cascade_count(&self) -> usize {
        self.times.len()
    }

    /// Infection time of `u` in cascade `c` (infinity = never infected).
    #[inline]
    pub fn time(&self, c: usize, u: NodeId) -> f64 {
        self.times[c][u.index()]
    }

    pub fn neighbors_out(&self, u: NodeId) -> &[NodeId] {
        self.graph.neighbors_out(u).expect("node in range")
    }
}

/// Cascades that passed over `e = (u, v)` as far as infection times can
/// tell: both endpoints infected, u strictly before v.
pub fn attending_cascades(view: &LocalView<'_>, e: Edge) -> Vec<usize> {
    (0..view.cascade_count())
        .filter(|&c| {
            let tu = view.time(c, e.src);
            let tv = view.time(c, e.dst);
            tu < tv && tv.is_finite()
        })
        .collect()
}

/// Single-cascade transmission probability over a link whose endpoint
/// infection gap is `delta >= 0`: `exp(-delta / alpha)`.
#[inline]
pub fn transmission_prob(delta: f64, alpha: f64) -> f64 {
    debug_assert!(delta >= 0.0 && alpha > 0.0);
    (-delta / alpha).exp()
}

/// Per-link infection probability: the average of [`transmission_prob`] over
/// the attending cascades, with `delta = t(dst) - t(src)`. Links no cascade
/// attended get probability 0.
pub fn link_infection_prob(view: &LocalView<'_>, e: Edge, alpha: f64) -> f64 {
    debug_assert!(alpha > 0.0);
    let mut sum = 0.0;
    let mut count = 0usize;
    for c in 0..view.cascade_count() {
        let tu = view.time(c, e.src);
        let tv = view.time(c, e.dst);
        if tu < tv && tv.is_finite() {
            sum += transmission_prob(tv - tu, alpha);
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Where a stuck walker goes.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum TeleportPolicy {
    /// Restart at a uniformly random node of the whole graph.
    RestartRandomNode,
    /// Restart at a uniformly random already-visited node.
    RestartRandomVisited,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum StartNode {
    Fixed(NodeId),
    Random,
}

#[derive(Copy, Clone, Debug)]
pub struct SamplerConfig {
    /// Edge budget k; sampling stops once |E_s| >= k.
    pub budget: usize,
    /// Decay scale of the link infection probability.
    pub alpha: f64,
    pub start: StartNode,
    pub teleport: TeleportPolicy,
    /// Edge count the RW weight 1/|E| is computed from; `None` uses the
    /// graph's true count.
    pub assumed_edge_count: Option<usize>,
}

impl SamplerConfig {
    pub fn new(budget: usize, alpha: f64) -> Self {
        SamplerConfig {
            budget,
            alpha,
            start: StartNode::Random,
            teleport: TeleportPolicy::RestartRandomNode,
            assumed_edge_count: None,
        }
    }

    fn validate(&self, g: &Graph) -> Result<(), SamplingError> {
        if g.edge_count() == 0 {
            return Err(SamplingError::EmptyGraph);
        }
        if self.budget == 0 {
            return Err(SamplingError::ZeroBudget);
        }
        if self.budget > g.edge_count() {
            return Err(SamplingError::BudgetTooLarge {
                budget: self.budget,
                edges: g.edge_count(),
            });
        }
        if !(self.alpha > 0.0) {
            return Err(SamplingError::BadAlpha(self.alpha));
        }
        if let StartNode::Fixed(u) = self.start {
            if u.index() >= g.node_count() {
                return Err(SamplingError::StartOutOfRange(u));
            }
        }
        Ok(())
    }
}

/// One estimator draw: a traversed link and, for weighted designs, its
/// visiting probability.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Draw {
    pub step: usize,
    pub edge: Edge,
    /// Unnormalized visiting probability; `None` for designs with no
    /// admissible weight (BFS).
    pub pi: Option<f64>,
}

/// Trace event stream, draws interleaved with teleports.
#[derive(Copy, Clone, Debug, PartialEq)]
pub enum TraceEvent {
    Draw(Draw),
    Teleport { step: usize, from: NodeId, to: NodeId },
}

/// Everything a sampler run produced: the estimator draws in order, the
/// event stream, and the sampled subgraph (V_s, E_s).
#[derive(Clone, Debug, Default)]
pub struct SampleTrace {
    pub draws: Vec<Draw>,
    pub events: Vec<TraceEvent>,
    pub sampled_nodes: BTreeSet<NodeId>,
    pub sampled_edges: BTreeSet<Edge>,
    /// False when draws carry no visiting probabilities (BFS).
    pub weighted: bool,
}

impl SampleTrace {
    fn record_draw(&mut self, step: usize, edge: Edge, pi: Option<f64>) {
        let draw = Draw { step, edge, pi };
        self.draws.push(draw);
        self.events.push(TraceEvent::Draw(draw));
    }

    fn record_teleport(&mut self, step: usize, from: NodeId, to: NodeId) {
        self.events.push(TraceEvent::Teleport { step, from, to });
    }

    fn add_edge(&mut self, e: Edge) {
        self.sampled_nodes.insert(e.src);
        self.sampled_nodes.insert(e.dst);
        self.sampled_edges.insert(e);
    }

    pub fn edge_count(&self) -> usize {
        self.sampled_edges.len()
    }

    /// Writes the event stream as CSV: step, src, dst, pi, event.
    pub fn write_csv<P: AsRef<Path>>(&self, g: &Graph, path: P) -> Result<(), SamplingError> {
        let path = path.as_ref();
        let io_err = |source| SamplingError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut file = File::create(path).map_err(io_err)?;
        writeln!(file, "step,src_label,dst_label,pi,event").map_err(io_err)?;
        for ev in &self.events {
            match ev {
                TraceEvent::Draw(d) => {
                    let pi = d.pi.map(|p| p.to_string()).unwrap_or_default();
                    writeln!(
                        file,
                        "{},{},{},{},draw",
                        d.step,
                        g.label(d.edge.src),
                        g.label(d.edge.dst),
                        pi
                    )
                    .map_err(io_err)?;
                }
                TraceEvent::Teleport { step, from, to } => {
                    writeln!(file, "{},{},{},,teleport", step, g.label(*from), g.label(*to))
                        .map_err(io_err)?;
                }
            }
        }
        Ok(())
    }
}

fn pick_start<R: Rng>(view: &LocalView<'_>, cfg: &SamplerConfig, rng: &mut R) -> NodeId {
    match cfg.start {
        StartNode::Fixed(u) => u,
        StartNode::Random => NodeId(rng.gen_range(0..view.graph().node_count() as u32)),
    }
}

fn teleport_target<R: Rng>(
    view: &LocalView<'_>,
    cfg: &SamplerConfig,
    trace: &SampleTrace,
    rng: &mut R,
) -> NodeId {
    match cfg.teleport {
        TeleportPolicy::RestartRandomNode => {
            NodeId(rng.gen_range(0..view.graph().node_count() as u32))
        }
        TeleportPolicy::RestartRandomVisited => {
            if trace.sampled_nodes.is_empty() {
                NodeId(rng.gen_range(0..view.graph().node_count() as u32))
            } else {
                let idx = rng.gen_range(0..trace.sampled_nodes.len());
                *trace.sampled_nodes.iter().nth(idx).expect("non-empty")
            }
        }
    }
}

/// Diffusion-aware link tracing. From the current node, every outgoing link
/// is examined (entering E_s) and scored with its infection probability; the
/// walker then moves over one link chosen proportionally to those scores.
/// The traversed link is an estimator draw carrying its *unnormalized*
/// infection probability as the visiting probability. A node whose links all
/// score zero, or a sink, triggers a teleport that records no draw.
pub fn dns_sample<R: Rng>(
    view: &LocalView<'_>,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<SampleTrace, SamplingError> {
    cfg.validate(view.graph())?;
    let mut trace = SampleTrace {
        weighted: true,
        ..SampleTrace::default()
    };
    let mut v = pick_start(view, cfg, rng);
    trace.sampled_nodes.insert(v);
    let mut step = 0usize;
    while trace.edge_count() < cfg.budget {
        let outs = view.neighbors_out(v);
        let mut weights = Vec::with_capacity(outs.len());
        let mut total = 0.0;
        for &u in outs {
            let e = Edge::new(v, u);
            trace.add_edge(e);
            let p = link_infection_prob(view, e, cfg.alpha);
            weights.push(p);
            total += p;
        }
        if outs.is_empty() || total <= 0.0 {
            let to = teleport_target(view, cfg, &trace, rng);
            trace.record_teleport(step, v, to);
            trace.sampled_nodes.insert(to);
            v = to;
            step += 1;
            continue;
        }
        let mut pick = rng.gen::<f64>() * total;
        let mut chosen = outs.len() - 1;
        for (i, &w) in weights.iter().enumerate() {
            pick -= w;
            if pick < 0.0 {
                chosen = i;
                break;
            }
        }
        let next = outs[chosen];
        trace.record_draw(step, Edge::new(v, next), Some(weights[chosen]));
        v = next;
        step += 1;
    }
    Ok(trace)
}

/// Classic FIFO breadth-first crawl. Every examined link is recorded as an
/// unweighted draw; the crawl halts the moment the edge budget is reached.
/// Exhausting the reachable frontier teleports to an unexpanded node.
pub fn bfs_sample<R: Rng>(
    view: &LocalView<'_>,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<SampleTrace, SamplingError> {
    cfg.validate(view.graph())?;
    let g = view.graph();
    let n = g.node_count();
    let mut trace = SampleTrace {
        weighted: false,
        ..SampleTrace::default()
    };
    let mut seen = vec![false; n];
    let mut expanded = vec![false; n];
    let mut queue = VecDeque::new();
    let start = pick_start(view, cfg, rng);
    seen[start.index()] = true;
    trace.sampled_nodes.insert(start);
    queue.push_back(start);
    let mut step = 0usize;
    let mut last = start;

    while trace.edge_count() < cfg.budget {
        let u = match queue.pop_front() {
            Some(u) => u,
            None => {
                // frontier exhausted: restart somewhere still expandable
                let unexpanded: Vec<NodeId> = g
                    .nodes()
                    .filter(|x| !expanded[x.index()])
                    .collect();
                if unexpanded.is_empty() {
                    break;
                }
                let to = match cfg.teleport {
                    TeleportPolicy::RestartRandomNode => {
                        unexpanded[rng.gen_range(0..unexpanded.len())]
                    }
                    TeleportPolicy::RestartRandomVisited => {
                        let visited: Vec<NodeId> = unexpanded
                            .iter()
                            .copied()
                            .filter(|x| seen[x.index()])
                            .collect();
                        if visited.is_empty() {
                            unexpanded[rng.gen_range(0..unexpanded.len())]
                        } else {
                            visited[rng.gen_range(0..visited.len())]
                        }
                    }
                };
                trace.record_teleport(step, last, to);
                step += 1;
                seen[to.index()] = true;
                trace.sampled_nodes.insert(to);
                queue.push_back(to);
                continue;
            }
        };
        expanded[u.index()] = true;
        last = u;
        for &w in view.neighbors_out(u) {
            let e = Edge::new(u, w);
            trace.add_edge(e);
            trace.record_draw(step, e, None);
            step += 1;
            if !seen[w.index()] {
                seen[w.index()] = true;
                queue.push_back(w);
            }
            if trace.edge_count() >= cfg.budget {
                return Ok(trace);
            }
        }
    }
    Ok(trace)
}

/// Uniform random walk over outgoing links. Every traversal is a draw with
/// visiting probability 1/|E| (links are visited uniformly at random in the
/// stationary regime); sinks teleport.
pub fn rw_sample<R: Rng>(
    view: &LocalView<'_>,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<SampleTrace, SamplingError> {
    cfg.validate(view.graph())?;
    let m = cfg
        .assumed_edge_count
        .unwrap_or_else(|| view.graph().edge_count());
    let pi = 1.0 / m as f64;
    let mut trace = SampleTrace {
        weighted: true,
        ..SampleTrace::default()
    };
    let mut v = pick_start(view, cfg, rng);
    trace.sampled_nodes.insert(v);
    let mut step = 0usize;
    while trace.edge_count() < cfg.budget {
        let outs = view.neighbors_out(v);
        if outs.is_empty() {
            let to = teleport_target(view, cfg, &trace, rng);
            trace.record_teleport(step, v, to);
            trace.sampled_nodes.insert(to);
            v = to;
            step += 1;
            continue;
        }
        let next = outs[rng.gen_range(0..outs.len())];
        let e = Edge::new(v, next);
        trace.add_edge(e);
        trace.record_draw(step, e, Some(pi));
        v = next;
        step += 1;
    }
    Ok(trace)
}
