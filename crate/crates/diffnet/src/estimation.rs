//! Bias-correcting estimators and visiting-probability oracles.
//!
//! The Hansen-Hurwitz ratio estimator reweights each sampled value inversely
//! to its visiting probability; the plain mean is the uncorrected baseline.
//! The node- and cascade-level visiting probabilities require global
//! knowledge of the network, so they live here as oracles for validation
//! rather than on the sampling path.

use std::collections::HashMap;

use thiserror::Error;

use crate::cascade::Cascade;
use crate::graph::{Edge, Graph};
use crate::sampling::{link_infection_prob, transmission_prob, LocalView};

#[derive(Debug, Error)]
pub enum EstimationError {
    #[error("cannot estimate from zero draws")]
    EmptyDraws,
    #[error("visiting probability {0} at draw {1} is not positive")]
    NonPositiveWeight(f64, usize),
    #[error("power iteration did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("all link probabilities are zero; the visiting chain is undefined")]
    AllZeroProbabilities,
}

/// Ordered sample of (value, visiting probability) pairs.
#[derive(Clone, Debug, Default)]
pub struct WeightedDraws {
    pub pairs: Vec<(f64, f64)>,
}

impl WeightedDraws {
    pub fn new(pairs: Vec<(f64, f64)>) -> Self {
        WeightedDraws { pairs }
    }

    pub fn from_parts(values: &[f64], pis: &[f64]) -> Self {
        WeightedDraws {
            pairs: values.iter().copied().zip(pis.iter().copied()).collect(),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum EstimationMethod {
    HansenHurwitz,
    PlainMean,
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct EstimateResult {
    pub estimate: f64,
    pub n_draws: usize,
    pub method: EstimationMethod,
}

/// Hansen-Hurwitz ratio estimate of a population mean:
/// `(sum f(X_i)/pi(X_i)) / (sum 1/pi(X_i))`. Summation runs in draw order.
pub fn hansen_hurwitz(draws: &WeightedDraws) -> Result<EstimateResult, EstimationError> {
    if draws.pairs.is_empty() {
        return Err(EstimationError::EmptyDraws);
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &(value, pi)) in draws.pairs.iter().enumerate() {
        if !(pi > 0.0) {
            return Err(EstimationError::NonPositiveWeight(pi, i));
        }
        num += value / pi;
        den += 1.0 / pi;
    }
    Ok(EstimateResult {
        estimate: num / den,
        n_draws: draws.pairs.len(),
        method: EstimationMethod::HansenHurwitz,
    })
}

/// Arithmetic mean, the estimator for designs without usable visiting
/// probabilities (BFS, RW, DNS without estimation).
pub fn plain_mean(values: &[f64]) -> Result<EstimateResult, EstimationError> {
    if values.is_empty() {
        return Err(EstimationError::EmptyDraws);
    }
    let sum: f64 = values.iter().sum();
    Ok(EstimateResult {
        estimate: sum / values.len() as f64,
        n_draws: values.len(),
        method: EstimationMethod::PlainMean,
    })
}

/// Infection probability of every link of the underlying graph, computed
/// from local information only.
pub fn edge_probabilities(view: &LocalView<'_>, alpha: f64) -> HashMap<Edge, f64> {
    view.graph()
        .edges()
        .map(|e| (e, link_infection_prob(view, e, alpha)))
        .collect()
}

const POWER_MAX_ITERS: usize = 100_000;
const POWER_TOLERANCE: f64 = 1e-10;

/// Node visiting probabilities: the stationary distribution of the chain
/// that moves over outgoing links proportionally to their infection
/// probability. Nodes with no positive outgoing probability spread uniformly
/// over all nodes.
///
/// Solved by power iteration on the half-lazy chain `(P + I) / 2`, which has
/// the same fixed points but converges on periodic structures too. Global
/// knowledge only; a sampler cannot compute this.
pub fn node_visit_probabilities(
    g: &Graph,
    edge_probs: &HashMap<Edge, f64>,
) -> Result<Vec<f64>, EstimationError> {
    let n = g.node_count();
    if n == 0 {
        return Err(EstimationError::AllZeroProbabilities);
    }
    // row-normalized transition weights
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    for u in g.nodes() {
        let outs = g.neighbors_out(u).expect("node in range");
        let weights: Vec<f64> = outs
            .iter()
            .map(|&v| edge_probs.get(&Edge::new(u, v)).copied().unwrap_or(0.0))
            .collect();
        let total: f64 = weights.iter().sum();
        if total > 0.0 {
            rows.push(
                outs.iter()
                    .zip(weights)
                    .filter(|(_, w)| *w > 0.0)
                    .map(|(&v, w)| (v.index(), w / total))
                    .collect(),
            );
        } else {
            rows.push(Vec::new()); // teleport row, handled uniformly below
        }
    }

    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..POWER_MAX_ITERS {
        next.iter_mut().for_each(|x| *x = 0.0);
        let mut teleport_mass = 0.0;
        for (u, row) in rows.iter().enumerate() {
            if row.is_empty() {
                teleport_mass += pi[u];
            } else {
                for &(v, w) in row {
                    next[v] += pi[u] * w;
                }
            }
        }
        let spread = teleport_mass / n as f64;
        let mut residual = 0.0;
        for u in 0..n {
            // half-lazy step keeps the fixed point and kills oscillation
            let value = 0.5 * pi[u] + 0.5 * (next[u] + spread);
            residual += (value - pi[u]).abs();
            next[u] = value;
        }
        std::mem::swap(&mut pi, &mut next);
        if residual <= POWER_TOLERANCE {
            return Ok(pi);
        }
    }
    Err(EstimationError::NoConvergence(POWER_MAX_ITERS))
}

/// Fixed point of the *raw* (un-normalized) link-probability recursion,
/// `pi(u) = sum_v pi(v) P(v -> u)`, renormalized to sum 1 each sweep. The
/// raw weights need not form a stochastic matrix, so this is the Perron
/// vector of the weight matrix; reported for comparison against
/// [`node_visit_probabilities`].
pub fn node_visit_probabilities_raw(
    g: &Graph,
    edge_probs: &HashMap<Edge, f64>,
) -> Result<Vec<f64>, EstimationError> {
    let n = g.node_count();
    if edge_probs.values().all(|&p| p <= 0.0) {
        return Err(EstimationError::AllZeroProbabilities);
    }
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..POWER_MAX_ITERS {
        next.iter_mut().for_each(|x| *x = 0.0);
        for u in g.nodes() {
            for &v in g.neighbors_out(u).expect("node in range") {
                let w = edge_probs
                    .get(&Edge::new(u, v))
                    .copied()
                    .unwrap_or(0.0);
                next[v.index()] += pi[u.index()] * w;
            }
        }
        let total: f64 = next.iter().sum();
        if total <= 0.0 {
            return Err(EstimationError::AllZeroProbabilities);
        }
        let mut residual = 0.0;
        for u in 0..n {
            let value = 0.5 * pi[u] + 0.5 * next[u] / total;
            residual += (value - pi[u]).abs();
            next[u] = value;
        }
        std::mem::swap(&mut pi, &mut next);
        if residual <= POWER_TOLERANCE {
            return Ok(pi);
        }
    }
    Err(EstimationError::NoConvergence(POWER_MAX_ITERS))
}

/// Visiting probability of a whole cascade: the product of the transmission
/// probabilities of every link it spread over. Ground-truth transmissions
/// are required, so this too is an oracle. The empty cascade yields 1.
pub fn cascade_visit_probability(c: &Cascade, alpha: f64) -> f64 {
    c.transmissions
        .iter()
        .map(|e| {
            let delta = c.times[e.dst.index()] - c.times[e.src.index()];
            transmission_prob(delta, alpha)
        })
        .product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Graph, NodeId};

    #[test]
    fn hansen_hurwitz_worked_example() {
        let draws = WeightedDraws::from_parts(&[2.0, 4.0], &[0.5, 0.25]);
        let r = hansen_hurwitz(&draws).unwrap();
        assert!((r.estimate - 10.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.n_draws, 2);
    }

    #[test]
    fn uniform_weights_reduce_to_plain_mean() {
        let values = [1.5, 2.5, 3.5, 10.0];
        let draws = WeightedDraws::from_parts(&values, &[0.3; 4]);
        let hh = hansen_hurwitz(&draws).unwrap();
        let pm = plain_mean(&values).unwrap();
        assert!((hh.estimate - pm.estimate).abs() < 1e-12);
    }

    #[test]
    fn constant_values_estimate_the_constant() {
        let draws = WeightedDraws::from_parts(&[7.0; 5], &[0.1, 0.2, 0.3, 0.4, 0.5]);
        let r = hansen_hurwitz(&draws).unwrap();
        assert!((r.estimate - 7.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_empty_and_nonpositive() {
        assert!(matches!(
            hansen_hurwitz(&WeightedDraws::default()),
            Err(EstimationError::EmptyDraws)
        ));
        assert!(matches!(
            plain_mean(&[]),
            Err(EstimationError::EmptyDraws)
        ));
        let draws = WeightedDraws::from_parts(&[1.0, 2.0], &[0.5, 0.0]);
        assert!(matches!(
            hansen_hurwitz(&draws),
            Err(EstimationError::NonPositiveWeight(_, 1))
        ));
    }

    #[test]
    fn plain_mean_basics() {
        assert_eq!(plain_mean(&[1.0, 2.0, 3.0]).unwrap().estimate, 2.0);
        assert_eq!(plain_mean(&[5.0]).unwrap().estimate, 5.0);
        assert_eq!(plain_mean(&[0.0, 0.0]).unwrap().estimate, 0.0);
    }

    fn probs(entries: &[((u32, u32), f64)]) -> HashMap<Edge, f64> {
        entries
            .iter()
            .map(|&((u, v), p)| (Edge::new(NodeId(u), NodeId(v)), p))
            .collect()
    }

    #[test]
    fn stationary_of_symmetric_cycle_is_uniform() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2), (2, 0)]);
        let p = probs(&[((0, 1), 0.4), ((1, 2), 0.4), ((2, 0), 0.4)]);
        let pi = node_visit_probabilities(&g, &p).unwrap();
        for x in &pi {
            assert!((x - 1.0 / 3.0).abs() < 1e-8);
        }
    }

    #[test]
    fn stationary_of_two_node_chain_is_half_half() {
        let g = Graph::from_edges(2, &[(0, 1), (1, 0)]);
        let p = probs(&[((0, 1), 0.7), ((1, 0), 0.7)]);
        let pi = node_visit_probabilities(&g, &p).unwrap();
        assert!((pi[0] - 0.5).abs() < 1e-8);
        assert!((pi[1] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn stationary_of_three_node_fixture() {
        // A -> B (0.8), A -> C (0.2), B -> A (1), C -> A (1)
        // balance: pi(A) = 1/2, pi(B) = 0.4, pi(C) = 0.1
        let g = Graph::from_edges(3, &[(0, 1), (0, 2), (1, 0), (2, 0)]);
        let p = probs(&[((0, 1), 0.8), ((0, 2), 0.2), ((1, 0), 1.0), ((2, 0), 1.0)]);
        let pi = node_visit_probabilities(&g, &p).unwrap();
        assert!((pi[0] - 0.5).abs() < 1e-8, "pi(A) = {}", pi[0]);
        assert!((pi[1] - 0.4).abs() < 1e-8, "pi(B) = {}", pi[1]);
        assert!((pi[2] - 0.1).abs() < 1e-8, "pi(C) = {}", pi[2]);
    }

    #[test]
    fn stationary_sums_to_one_with_teleport_rows() {
        // node 2 is a sink: zero row spreads uniformly
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]);
        let p = probs(&[((0, 1), 0.5), ((1, 2), 0.5)]);
        let pi = node_visit_probabilities(&g, &p).unwrap();
        let total: f64 = pi.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert!(pi.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn raw_fixed_point_matches_normalized_on_stochastic_rows() {
        // rows already sum to 1, so raw and normalized chains coincide
        let g = Graph::from_edges(3, &[(0, 1), (0, 2), (1, 0), (2, 0)]);
        let p = probs(&[((0, 1), 0.8), ((0, 2), 0.2), ((1, 0), 1.0), ((2, 0), 1.0)]);
        let raw = node_visit_probabilities_raw(&g, &p).unwrap();
        let norm = node_visit_probabilities(&g, &p).unwrap();
        for (a, b) in raw.iter().zip(norm.iter()) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn cascade_visit_probability_products() {
        let alpha = 1.0;
        let mk = |edges: Vec<(u32, u32)>, times: Vec<f64>| Cascade {
            seed: NodeId(0),
            times,
            transmissions: edges
                .into_iter()
                .map(|(u, v)| Edge::new(NodeId(u), NodeId(v)))
                .collect(),
        };
        // one link, delta = alpha
        let c = mk(vec![(0, 1)], vec![0.0, 1.0]);
        assert!((cascade_visit_probability(&c, alpha) - (-1.0f64).exp()).abs() < 1e-12);
        // two links, delta = alpha each
        let c = mk(vec![(0, 1), (1, 2)], vec![0.0, 1.0, 2.0]);
        assert!((cascade_visit_probability(&c, alpha) - (-2.0f64).exp()).abs() < 1e-12);
        // seed-only
        let c = mk(vec![], vec![0.0]);
        assert_eq!(cascade_visit_probability(&c, alpha), 1.0);
    }
}
