//! Diffusion-aware measurement of information diffusion networks.
//!
//! Infections spreading over a latent network leave behind per-node
//! infection times. This crate measures characteristics of the resulting
//! diffusion network in two steps: a link-tracing sampler (DNS) that steers
//! toward links with high inferred infection probability using only those
//! times, and a Hansen-Hurwitz estimator that reweights the sampled values
//! by their visiting probabilities to undo the selection bias. BFS and
//! random-walk baselines, cascade simulation under the independent cascade
//! model, synthetic network generators, and a reproducible experiment
//! harness round out the toolkit.
//!
//! # Quick tour
//!
//! ```
//! use diffnet::cascade::{generate_cascade_set, DiffusionParams};
//! use diffnet::estimation::{hansen_hurwitz, WeightedDraws};
//! use diffnet::graph::Graph;
//! use diffnet::metrics::{eta_true, bias_value, TargetFunction};
//! use diffnet::sampling::{dns_sample, LocalView, SamplerConfig};
//! use rand::SeedableRng;
//! use rand_chacha::ChaCha12Rng;
//!
//! // a small ring with chords as the underlying network
//! let edges: Vec<(u32, u32)> = (0..30u32)
//!     .flat_map(|u| [(u, (u + 1) % 30), (u, (u + 7) % 30)])
//!     .collect();
//! let g = Graph::from_edges(30, &edges);
//!
//! // spread cascades until 60% of links carried at least one
//! let mut rng = ChaCha12Rng::seed_from_u64(1);
//! let params = DiffusionParams::new(1.0, 0.6, 0.6);
//! let (cascades, diffusion_net) = generate_cascade_set(&g, &params, &mut rng).unwrap();
//!
//! // crawl half the links, steering by inferred infection probability
//! let view = LocalView::new(&g, &cascades);
//! let cfg = SamplerConfig::new(g.edge_count() / 2, 1.0);
//! let trace = dns_sample(&view, &cfg, &mut rng).unwrap();
//!
//! // estimate mean link attendance and compare against the ground truth
//! let draws = WeightedDraws::new(
//!     trace.draws.iter()
//!         .map(|d| (diffusion_net.attendance_or_zero(d.edge) as f64, d.pi.unwrap()))
//!         .collect(),
//! );
//! let estimate = hansen_hurwitz(&draws).unwrap();
//! let truth = eta_true(&g, &diffusion_net, &cascades,
//!     TargetFunction::LinkAttendance { binary: false }).unwrap();
//! let rho = bias_value(truth.eta_true, estimate.estimate).unwrap();
//! assert!(rho < 1.0);
//! ```
//!
//! The runnable programs under `examples/` walk through each capability;
//! the `diffnet` binary exposes the same pipeline as `run`, `aggregate`,
//! `gen-network`, and `gen-cascades` subcommands.

pub mod cascade;
pub mod estimation;
pub mod experiment;
pub mod graph;
pub mod metrics;
pub mod netgen;
pub mod sampling;

pub use cascade::{Cascade, CascadeSet, DiffusionNetwork, DiffusionParams};
pub use graph::{Edge, Graph, NodeId};
pub use sampling::{LocalView, SampleTrace, SamplerConfig};
