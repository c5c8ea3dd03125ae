//! Synthetic network generators: stochastic Kronecker graphs and the Forest
//! Fire growth model.
//!
//! Both generators are pure functions of their parameters and the RNG seed,
//! so callers can produce graph ensembles in parallel from independent seeds.

use std::collections::HashSet;

use rand::Rng;
use thiserror::Error;

use crate::graph::{Graph, GraphBuilder};

#[derive(Debug, Error)]
pub enum NetgenError {
    #[error("initiator entry {0} outside [0, 1]")]
    InitiatorOutOfRange(f64),
    #[error("probability {name} = {value} outside [0, 1]")]
    ProbabilityOutOfRange { name: &'static str, value: f64 },
    #[error("target of {target} edges exceeds the {max} distinct non-loop cells of a 2^{k} Kronecker graph")]
    TooManyEdges { target: usize, max: usize, k: u32 },
    #[error("placed {placed} of {target} edges before stalling; remaining cells have (near-)zero probability")]
    EdgePlacementStalled { placed: usize, target: usize },
    #[error("starting_nodes {starting} exceeds target node count {n}")]
    TooManyStartingNodes { starting: usize, n: usize },
    #[error("iterations must be at least 1")]
    ZeroIterations,
}

/// Parameters of a stochastic Kronecker graph with a 2x2 initiator.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct KroneckerParams {
    /// Row-major initiator `[[a, b], [c, d]]`, entries in [0, 1].
    pub initiator: [[f64; 2]; 2],
    /// Number of Kronecker iterations; node count is `2^iterations`.
    pub iterations: u32,
    /// Exact number of edges to place.
    pub target_edges: usize,
}

impl KroneckerParams {
    pub fn new(initiator: [[f64; 2]; 2], iterations: u32, target_edges: usize) -> Self {
        KroneckerParams {
            initiator,
            iterations,
            target_edges,
        }
    }

    pub fn node_count(&self) -> usize {
        1usize << self.iterations
    }

    fn validate(&self) -> Result<(), NetgenError> {
        if self.iterations == 0 {
            return Err(NetgenError::ZeroIterations);
        }
        for row in &self.initiator {
            for &p in row {
                if !(0.0..=1.0).contains(&p) || p.is_nan() {
                    return Err(NetgenError::InitiatorOutOfRange(p));
                }
            }
        }
        let n = self.node_count();
        let max = n * n - n;
        if self.target_edges > max {
            return Err(NetgenError::TooManyEdges {
                target: self.target_edges,
                max,
                k: self.iterations,
            });
        }
        Ok(())
    }

    /// Normalized probability that a single edge draw lands on cell
    /// `(row, col)` of the full `2^k x 2^k` Kronecker power.
    pub fn cell_probability(&self, row: u64, col: u64) -> f64 {
        let sum: f64 = self.initiator.iter().flatten().sum();
        let mut p = 1.0;
        for level in (0..self.iterations).rev() {
            let i = ((row >> level) & 1) as usize;
            let j = ((col >> level) & 1) as usize;
            p *= self.initiator[i][j] / sum;
        }
        p
    }

    /// One recursive quadrant descent: draws a single cell of the Kronecker
    /// power, self-loops and duplicates included.
    pub fn sample_cell<R: Rng>(&self, rng: &mut R) -> (u64, u64) {
        let ini = &self.initiator;
        let sum: f64 = ini.iter().flatten().sum();
        let (mut row, mut col) = (0u64, 0u64);
        for _ in 0..self.iterations {
            let u = rng.gen::<f64>() * sum;
            let (i, j) = if u < ini[0][0] {
                (0, 0)
            } else if u < ini[0][0] + ini[0][1] {
                (0, 1)
            } else if u < ini[0][0] + ini[0][1] + ini[1][0] {
                (1, 0)
            } else {
                (1, 1)
            };
            row = (row << 1) | i;
            col = (col << 1) | j;
        }
        (row, col)
    }
}

/// Consecutive rejected draws tolerated before the generator gives up.
const KRONECKER_STALL_LIMIT: usize = 1_000_000;

/// Generates a stochastic Kronecker graph by repeated single-edge placement
/// ("ball dropping"): each accepted draw adds one distinct non-loop edge, so
/// the output has exactly `target_edges` edges over `2^k` nodes.
pub fn kronecker<R: Rng>(params: &KroneckerParams, rng: &mut R) -> Result<Graph, NetgenError> {
    params.validate()?;
    let n = params.node_count();
    let mut placed: HashSet<(u32, u32)> = HashSet::with_capacity(params.target_edges);
    let mut rejections = 0usize;
    while placed.len() < params.target_edges {
        let (row, col) = params.sample_cell(rng);
        let edge = (row as u32, col as u32);
        if row != col && placed.insert(edge) {
            rejections = 0;
        } else {
            rejections += 1;
            if rejections >= KRONECKER_STALL_LIMIT {
                return Err(NetgenError::EdgePlacementStalled {
                    placed: placed.len(),
                    target: params.target_edges,
                });
            }
        }
    }
    let mut edges: Vec<(u32, u32)> = placed.into_iter().collect();
    edges.sort_unstable();
    Ok(Graph::from_edges(n, &edges))
}

/// Parameters of the Forest Fire growth model.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ForestFireParams {
    /// Target node count.
    pub n: usize,
    /// Nodes present before growth starts (no edges among them).
    pub starting_nodes: usize,
    /// Forward burning probability; mean forward fan-out is p/(1-p).
    pub p_forward: f64,
    /// Backward burning probability; mean backward fan-out is p/(1-p).
    pub p_backward: f64,
    /// Depth attenuation of the burning fan-out per recursion level;
    /// 1.0 means no attenuation.
    pub p_decay: f64,
    /// Probability that an arriving node attaches to nothing.
    pub p_orphan: f64,
}

impl ForestFireParams {
    fn validate(&self) -> Result<(), NetgenError> {
        for (name, value) in [
            ("p_forward", self.p_forward),
            ("p_backward", self.p_backward),
            ("p_decay", self.p_decay),
            ("p_orphan", self.p_orphan),
        ] {
            if !(0.0..=1.0).contains(&value) || value.is_nan() {
                return Err(NetgenError::ProbabilityOutOfRange { name, value });
            }
        }
        if self.starting_nodes > self.n {
            return Err(NetgenError::TooManyStartingNodes {
                starting: self.starting_nodes,
                n: self.n,
            });
        }
        Ok(())
    }
}

/// Number of neighbors to burn: geometric with the given mean (count of
/// failures before the first success).
fn geometric_fanout<R: Rng>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    if !mean.is_finite() {
        return usize::MAX;
    }
    let q = 1.0 / (1.0 + mean); // success probability
    let u: f64 = rng.gen();
    // Inverse transform on {0, 1, 2, ...}.
    let x = (1.0 - u).ln() / (1.0 - q).ln();
    if x >= usize::MAX as f64 {
        usize::MAX
    } else {
        x.floor() as usize
    }
}

/// Picks `count` distinct entries of `pool` (candidates not yet burned),
/// in-place partial shuffle for determinism under a fixed seed.
fn pick_distinct<R: Rng>(pool: &mut Vec<u32>, count: usize, rng: &mut R) -> Vec<u32> {
    let take = count.min(pool.len());
    for i in 0..take {
        let j = rng.gen_range(i..pool.len());
        pool.swap(i, j);
    }
    pool[..take].to_vec()
}

/// Grows a directed Forest Fire graph: nodes arrive one at a time, choose a
/// uniformly random ambassador, recursively burn through its out- and
/// in-links, and link to every burned node.
pub fn forest_fire<R: Rng>(params: &ForestFireParams, rng: &mut R) -> Result<Graph, NetgenError> {
    params.validate()?;
    let n = params.n;
    let start = params.starting_nodes.max(1).min(n);
    let mut out_adj: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut in_adj: Vec<Vec<u32>> = vec![Vec::new(); n];

    let base_fwd = if params.p_forward >= 1.0 {
        f64::INFINITY
    } else {
        params.p_forward / (1.0 - params.p_forward)
    };
    let base_bwd = if params.p_backward >= 1.0 {
        f64::INFINITY
    } else {
        params.p_backward / (1.0 - params.p_backward)
    };

    let mut burned: Vec<bool> = vec![false; n];
    for v in start..n {
        if params.p_orphan > 0.0 && rng.gen::<f64>() < params.p_orphan {
            continue;
        }
        let ambassador = rng.gen_range(0..v as u32);

        // breadth-first burn from the ambassador
        let mut frontier: Vec<(u32, usize)> = vec![(ambassador, 0)];
        let mut burned_list: Vec<u32> = vec![ambassador];
        burned[ambassador as usize] = true;
        while let Some((x, depth)) = frontier.pop() {
            let decay = params.p_decay.powi(depth as i32);
            let want_fwd = geometric_fanout(base_fwd * decay, rng);
            let want_bwd = geometric_fanout(base_bwd * decay, rng);
            let mut cand_out: Vec<u32> = out_adj[x as usize]
                .iter()
                .copied()
                .filter(|&y| !burned[y as usize])
                .collect();
            let picked_out = pick_distinct(&mut cand_out, want_fwd, rng);
            let mut cand_in: Vec<u32> = in_adj[x as usize]
                .iter()
                .copied()
                .filter(|&y| !burned[y as usize] && !picked_out.contains(&y))
                .collect();
            let picked_in = pick_distinct(&mut cand_in, want_bwd, rng);
            for y in picked_out.into_iter().chain(picked_in) {
                if !burned[y as usize] {
                    burned[y as usize] = true;
                    burned_list.push(y);
                    frontier.push((y, depth + 1));
                }
            }
        }

        for &w in &burned_list {
            out_adj[v].push(w);
            in_adj[w as usize].push(v as u32);
            burned[w as usize] = false;
        }
    }

    let mut builder = GraphBuilder::with_nodes(n);
    for (u, adj) in out_adj.into_iter().enumerate() {
        for v in adj {
            builder.add_edge(u as u32, v);
        }
    }
    Ok(builder.build())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn rng(seed: u64) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(seed)
    }

    #[test]
    fn kronecker_exact_node_and_edge_counts() {
        let params = KroneckerParams::new([[0.9, 0.1], [0.1, 0.9]], 8, 500);
        let g = kronecker(&params, &mut rng(7)).unwrap();
        assert_eq!(g.node_count(), 256);
        assert_eq!(g.edge_count(), 500);
    }

    #[test]
    fn kronecker_rejects_infeasible_target() {
        let params = KroneckerParams::new([[0.9, 0.1], [0.1, 0.9]], 2, 13);
        assert!(matches!(
            kronecker(&params, &mut rng(1)),
            Err(NetgenError::TooManyEdges { max: 12, .. })
        ));
    }

    #[test]
    fn kronecker_degenerate_initiator_stalls() {
        // all mass on the (0,0) cell: every draw is the 0->0 self-loop
        let params = KroneckerParams::new([[1.0, 0.0], [0.0, 0.0]], 1, 1);
        assert!(matches!(
            kronecker(&params, &mut rng(1)),
            Err(NetgenError::EdgePlacementStalled { placed: 0, .. })
        ));
    }

    #[test]
    fn kronecker_deterministic_per_seed() {
        let params = KroneckerParams::new([[0.9, 0.5], [0.5, 0.3]], 7, 300);
        let g1 = kronecker(&params, &mut rng(42)).unwrap();
        let g2 = kronecker(&params, &mut rng(42)).unwrap();
        let e1: Vec<_> = g1.edges().collect();
        let e2: Vec<_> = g2.edges().collect();
        assert_eq!(e1, e2);
    }

    #[test]
    fn kronecker_cell_probabilities_sum_to_one() {
        let params = KroneckerParams::new([[0.9, 0.5], [0.5, 0.3]], 3, 10);
        let n = params.node_count() as u64;
        let total: f64 = (0..n)
            .flat_map(|r| (0..n).map(move |c| (r, c)))
            .map(|(r, c)| params.cell_probability(r, c))
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kronecker_cell_draws_match_analytic_distribution() {
        // k=2: empirical frequencies of the 4x4 cell matrix vs the analytic
        // outer product, L1 distance under 0.02 at 1e5 draws.
        let params = KroneckerParams::new([[0.9, 0.5], [0.5, 0.3]], 2, 1);
        let mut counts = [[0u32; 4]; 4];
        let draws = 100_000;
        let mut r = rng(1234);
        for _ in 0..draws {
            let (row, col) = params.sample_cell(&mut r);
            counts[row as usize][col as usize] += 1;
        }
        let mut l1 = 0.0;
        for row in 0..4u64 {
            for col in 0..4u64 {
                let emp = counts[row as usize][col as usize] as f64 / draws as f64;
                l1 += (emp - params.cell_probability(row, col)).abs();
            }
        }
        assert!(l1 < 0.02, "L1 distance {l1} too large");
    }

    #[test]
    fn forest_fire_no_burning_links_only_ambassador() {
        let params = ForestFireParams {
            n: 200,
            starting_nodes: 5,
            p_forward: 0.0,
            p_backward: 0.0,
            p_decay: 1.0,
            p_orphan: 0.0,
        };
        let g = forest_fire(&params, &mut rng(3)).unwrap();
        assert_eq!(g.node_count(), 200);
        assert_eq!(g.edge_count(), 195);
    }

    #[test]
    fn forest_fire_all_orphans_has_no_edges() {
        let params = ForestFireParams {
            n: 50,
            starting_nodes: 5,
            p_forward: 0.5,
            p_backward: 0.5,
            p_decay: 1.0,
            p_orphan: 1.0,
        };
        let g = forest_fire(&params, &mut rng(3)).unwrap();
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn forest_fire_deterministic_per_seed() {
        let params = ForestFireParams {
            n: 300,
            starting_nodes: 5,
            p_forward: 0.3,
            p_backward: 0.2,
            p_decay: 0.9,
            p_orphan: 0.05,
        };
        let g1 = forest_fire(&params, &mut rng(99)).unwrap();
        let g2 = forest_fire(&params, &mut rng(99)).unwrap();
        assert_eq!(
            g1.edges().collect::<Vec<_>>(),
            g2.edges().collect::<Vec<_>>()
        );
    }

    #[test]
    fn forest_fire_rejects_bad_probability() {
        let params = ForestFireParams {
            n: 10,
            starting_nodes: 2,
            p_forward: 1.5,
            p_backward: 0.0,
            p_decay: 1.0,
            p_orphan: 0.0,
        };
        assert!(matches!(
            forest_fire(&params, &mut rng(0)),
            Err(NetgenError::ProbabilityOutOfRange { .. })
        ));
    }
}
