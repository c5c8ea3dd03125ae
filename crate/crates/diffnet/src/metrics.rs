//! Target functions over diffusion elements, their ground-truth averages,
//! and the relative bias of an estimate.

use thiserror::Error;

use crate::cascade::{Cascade, CascadeSet, DiffusionNetwork};
use crate::estimation::EstimateResult;
use crate::graph::{Edge, Graph};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("link {0} is not part of the diffusion network")]
    LinkNotInDiffusionNetwork(Edge),
    #[error("element set for {0:?} is empty")]
    EmptyElementSet(TargetFunction),
    #[error("ground truth is zero; relative bias is undefined")]
    ZeroTruth,
}

/// How deep a cascade reaches.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum DepthMode {
    /// Length of the longest transmission path from the seed.
    LongestPath,
    /// Total number of transmission links in the cascade tree.
    TreeSize,
}

/// The characteristic being measured, together with the element class it
/// averages over.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum TargetFunction {
    /// Link-based: how many cascades crossed each diffusion-network link.
    /// `binary` degrades the count to mere presence.
    LinkAttendance { binary: bool },
    /// Node-based: fraction of nodes that seeded at least one cascade.
    SeedsFraction,
    /// Node-based: fraction of nodes infected by at least one cascade.
    Participation,
    /// Cascade-based: depth of each cascade.
    CascadeDepth { mode: DepthMode },
}

/// A ground-truth population average together with its element count.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub eta_true: f64,
    pub element_count: usize,
}

/// Ground-truth attendance of a diffusion-network link.
pub fn link_attendance(dn: &DiffusionNetwork, e: Edge) -> Result<usize, MetricsError> {
    dn.attendance(e)
        .ok_or(MetricsError::LinkNotInDiffusionNetwork(e))
}

/// Fraction of nodes that started at least one cascade.
pub fn seeds_fraction(cs: &CascadeSet, g: &Graph) -> f64 {
    let mut is_seed = vec![false; g.node_count()];
    for c in &cs.cascades {
        is_seed[c.seed.index()] = true;
    }
    is_seed.iter().filter(|&&s| s).count() as f64 / g.node_count() as f64
}

/// Fraction of nodes infected by at least one cascade.
pub fn participation(cs: &CascadeSet, g: &Graph) -> f64 {
    let mut touched = vec![false; g.node_count()];
    for c in &cs.cascades {
        for (u, t) in c.times.iter().enumerate() {
            if t.is_finite() {
                touched[u] = true;
            }
        }
    }
    touched.iter().filter(|&&s| s).count() as f64 / g.node_count() as f64
}

/// Depth of a cascade under the chosen mode. Transmissions form a tree
/// rooted at the seed, so longest-path depth is a single sweep in infection
/// time order.
pub fn cascade_depth(c: &Cascade, mode: DepthMode) -> usize {
    match mode {
        DepthMode::TreeSize => c.transmissions.len(),
        DepthMode::LongestPath => {
            let mut ordered: Vec<&Edge> = c.transmissions.iter().collect();
            ordered.sort_by(|a, b| {
                c.times[a.dst.index()]
                    .partial_cmp(&c.times[b.dst.index()])
                    .unwrap()
            });
            let mut depth = vec![0usize; c.times.len()];
            let mut max = 0;
            for e in ordered {
                depth[e.dst.index()] = depth[e.src.index()] + 1;
                max = max.max(depth[e.dst.index()]);
            }
            max
        }
    }
}

/// Ground-truth population mean of `f` over its element set: diffusion
/// links for link attendance, all graph nodes for the node characteristics,
/// the cascade list for cascade depth.
pub fn eta_true(
    g: &Graph,
    dn: &DiffusionNetwork,
    cs: &CascadeSet,
    f: TargetFunction,
) -> Result<GroundTruth, MetricsError> {
    match f {
        TargetFunction::LinkAttendance { binary } => {
            let count = dn.edge_count();
            if count == 0 {
                return Err(MetricsError::EmptyElementSet(f));
            }
            let sum: f64 = dn
                .edges()
                .map(|e| {
                    let a = dn.attendance(e).expect("edge of dn") as f64;
                    if binary {
                        1.0_f64.min(a)
                    } else {
                        a
                    }
                })
                .sum();
            Ok(GroundTruth {
                eta_true: sum / count as f64,
                element_count: count,
            })
        }
        TargetFunction::SeedsFraction => {
            if g.node_count() == 0 || cs.is_empty() {
                return Err(MetricsError::EmptyElementSet(f));
            }
            Ok(GroundTruth {
                eta_true: seeds_fraction(cs, g),
                element_count: g.node_count(),
            })
        }
        TargetFunction::Participation => {
            if g.node_count() == 0 || cs.is_empty() {
                return Err(MetricsError::EmptyElementSet(f));
            }
            Ok(GroundTruth {
                eta_true: participation(cs, g),
                element_count: g.node_count(),
            })
        }
        TargetFunction::CascadeDepth { mode } => {
            if cs.is_empty() {
                return Err(MetricsError::EmptyElementSet(f));
            }
            let sum: usize = cs.cascades.iter().map(|c| cascade_depth(c, mode)).sum();
            Ok(GroundTruth {
                eta_true: sum as f64 / cs.len() as f64,
                element_count: cs.len(),
            })
        }
    }
}

/// Relative bias `|truth - estimate| / truth`.
pub fn bias(truth: &GroundTruth, est: &EstimateResult) -> Result<f64, MetricsError> {
    bias_value(truth.eta_true, est.estimate)
}

/// Relative bias from bare numbers, for recomputation checks.
pub fn bias_value(truth: f64, estimate: f64) -> Result<f64, MetricsError> {
    if truth == 0.0 {
        return Err(MetricsError::ZeroTruth);
    }
    Ok((truth - estimate).abs() / truth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::{generate_cascade_set, DiffusionParams};
    use crate::estimation::{EstimateResult, EstimationMethod};
    use crate::graph::{Graph, NodeId};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn estimate(v: f64) -> EstimateResult {
        EstimateResult {
            estimate: v,
            n_draws: 1,
            method: EstimationMethod::PlainMean,
        }
    }

    /// One hand-built cascade along a 3-node path.
    fn path_fixture() -> (Graph, CascadeSet, DiffusionNetwork) {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]);
        let cascade = Cascade {
            seed: NodeId(0),
            times: vec![0.0, 1.0, 2.0],
            transmissions: vec![
                Edge::new(NodeId(0), NodeId(1)),
                Edge::new(NodeId(1), NodeId(2)),
            ],
        };
        let cs = CascadeSet {
            cascades: vec![cascade],
        };
        let dn = DiffusionNetwork::from_cascades(&cs);
        (g, cs, dn)
    }

    #[test]
    fn path_fixture_ground_truths() {
        let (g, cs, dn) = path_fixture();
        for e in dn.edges() {
            assert_eq!(link_attendance(&dn, e).unwrap(), 1);
        }
        let t = eta_true(&g, &dn, &cs, TargetFunction::LinkAttendance { binary: false }).unwrap();
        assert_eq!(t.eta_true, 1.0);
        assert_eq!(t.element_count, 2);
        assert_eq!(participation(&cs, &g), 1.0);
        assert_eq!(seeds_fraction(&cs, &g), 1.0 / 3.0);
        assert_eq!(
            cascade_depth(&cs.cascades[0], DepthMode::LongestPath),
            2
        );
    }

    #[test]
    fn link_attendance_errors_outside_diffusion_network() {
        let (_, _, dn) = path_fixture();
        let foreign = Edge::new(NodeId(2), NodeId(0));
        assert!(matches!(
            link_attendance(&dn, foreign),
            Err(MetricsError::LinkNotInDiffusionNetwork(_))
        ));
    }

    #[test]
    fn eta_true_of_mixed_attendance() {
        // two links with attendance 1 and 3 -> mean 2
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]);
        let mk = |seed: u32, times: Vec<f64>, tr: Vec<(u32, u32)>| Cascade {
            seed: NodeId(seed),
            times,
            transmissions: tr
                .into_iter()
                .map(|(u, v)| Edge::new(NodeId(u), NodeId(v)))
                .collect(),
        };
        let inf = f64::INFINITY;
        let cs = CascadeSet {
            cascades: vec![
                mk(0, vec![0.0, 1.0, 2.0], vec![(0, 1), (1, 2)]),
                mk(0, vec![0.0, 1.0, inf], vec![(0, 1)]),
                mk(0, vec![0.0, 1.0, inf], vec![(0, 1)]),
            ],
        };
        let dn = DiffusionNetwork::from_cascades(&cs);
        let t = eta_true(&g, &dn, &cs, TargetFunction::LinkAttendance { binary: false }).unwrap();
        assert_eq!(t.eta_true, 2.0);
        let tb = eta_true(&g, &dn, &cs, TargetFunction::LinkAttendance { binary: true }).unwrap();
        assert_eq!(tb.eta_true, 1.0);
    }

    #[test]
    fn depth_of_star_and_seed_only() {
        let star = Cascade {
            seed: NodeId(0),
            times: vec![0.0, 1.0, 1.5, 2.0],
            transmissions: vec![
                Edge::new(NodeId(0), NodeId(1)),
                Edge::new(NodeId(0), NodeId(2)),
                Edge::new(NodeId(0), NodeId(3)),
            ],
        };
        assert_eq!(cascade_depth(&star, DepthMode::LongestPath), 1);
        assert_eq!(cascade_depth(&star, DepthMode::TreeSize), 3);

        let lone = Cascade {
            seed: NodeId(0),
            times: vec![0.0],
            transmissions: vec![],
        };
        assert_eq!(cascade_depth(&lone, DepthMode::LongestPath), 0);
    }

    #[test]
    fn bias_arithmetic() {
        let truth = GroundTruth {
            eta_true: 1.0,
            element_count: 10,
        };
        assert!((bias(&truth, &estimate(0.9)).unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(bias(&truth, &estimate(1.0)).unwrap(), 0.0);
        let truth2 = GroundTruth {
            eta_true: 2.0,
            element_count: 10,
        };
        assert!((bias(&truth2, &estimate(3.0)).unwrap() - 0.5).abs() < 1e-12);
        let zero = GroundTruth {
            eta_true: 0.0,
            element_count: 1,
        };
        assert!(matches!(
            bias(&zero, &estimate(1.0)),
            Err(MetricsError::ZeroTruth)
        ));
    }

    #[test]
    fn participation_dominates_seeds_fraction() {
        let g = Graph::from_edges(8, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7)]);
        let params = DiffusionParams::new(1.0, 0.6, 0.3);
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let (cs, _) = generate_cascade_set(&g, &params, &mut rng).unwrap();
        assert!(participation(&cs, &g) >= seeds_fraction(&cs, &g));
    }

    #[test]
    fn eta_true_matches_brute_force_enumeration() {
        let g = Graph::from_edges(10, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (1, 5), (5, 6), (6, 1), (2, 7), (7, 8)]);
        let params = DiffusionParams::new(0.8, 0.7, 0.6);
        let mut rng = ChaCha12Rng::seed_from_u64(19);
        let (cs, dn) = generate_cascade_set(&g, &params, &mut rng).unwrap();
        let t = eta_true(&g, &dn, &cs, TargetFunction::LinkAttendance { binary: false }).unwrap();
        // independent route: count per-edge membership over raw cascades
        let mut total = 0usize;
        let mut edges = std::collections::BTreeSet::new();
        for c in &cs.cascades {
            for e in &c.transmissions {
                edges.insert(*e);
            }
        }
        for e in &edges {
            total += cs
                .cascades
                .iter()
                .filter(|c| c.transmissions.contains(e))
                .count();
        }
        let expected = total as f64 / edges.len() as f64;
        assert!((t.eta_true - expected).abs() < 1e-12);
        assert_eq!(t.element_count, edges.len());
    }
}
