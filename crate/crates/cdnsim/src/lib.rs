//! Discrete-time simulator and online-optimization toolkit for CDN cache
//! placement.
//!
//! A root server holds a full file catalog; edge caches hold subsets and
//! serve local hits. The library tracks per-file shadow prices with an
//! incremental dual-ascent loop, converts the resulting anticipated flows
//! into concrete storage allocations (Top-X, Least-X, Least-X_th, and the
//! per-request Least-X_f filter), and compares them against classic
//! eviction baselines (LRU, LFU, random, popularity-biased random, 2LRU)
//! under synthetic or trace-driven workloads, reporting network cost,
//! rerouted demand volume, and backhaul consumption per slot.
//!
//! The `examples/` directory is the guided tour — one runnable program per
//! capability:
//!
//! * `penalty_families` — the four convex link-cost families and their
//!   curvature constants.
//! * `solve_subproblem` — water-filling flow allocation for one cache.
//! * `dual_tracking` — shadow prices following a shifting demand mix.
//! * `placement_policies` — the worked eight-file placement example.
//! * `eviction_baselines` — classic policies on a skewed request stream.
//! * `workload_zipf` — stationary Zipf/Poisson stream generation.
//! * `workload_decay` — decaying-popularity streams, fitting, upscaling.
//! * `simulate_static` — full topology-1 run with periodic placement.
//! * `simulate_dynamic` — topology-2 run with per-request admission.
//!
//! The same machinery is scriptable through the thin `cdnsim` binary
//! (`simulate`, `gen-workload`, `fit`, `solve-subproblem`).

pub mod baselines;
pub mod catalog;
pub mod cli;
pub mod config;
pub mod dual;
pub mod network;
pub mod penalty;
pub mod placement;
pub mod simulator;
pub mod subproblem;
pub mod workload;

pub use catalog::{Catalog, FileId};
pub use network::{CacheSpec, NetworkConfig};
pub use penalty::{Penalty, PenaltyConstants, PenaltyError, PenaltyFamily};
pub use simulator::{ExperimentConfig, PolicyId, Topology};
