//! End-to-end slot loop: serving, price updates, placement, and metrics.
//!
//! Each slot serves its requests (hit from the cache, miss from the root),
//! accumulates the demand matrix, and steps the shadow prices at every dual
//! interval. Under topology one the stored set changes only at cache-update
//! boundaries, where the configured policy rebuilds it from the current
//! anticipated flows and the interval's miss log; under topology two the
//! cache decides admission per request, either by the flow-driven filter or
//! by a classic eviction policy. Three per-slot metrics come out: network
//! cost (per-file serving costs on both paths), rerouted demand volume
//! (missed volume), and backhaul consumption (volume admitted at update
//! events, or identically the rerouted volume under topology two).

use crate::baselines::{EvictionCache, EvictionPolicy};
use crate::catalog::{Catalog, FileId};
use crate::dual::{DemandMatrix, DualError, DualState, InitMode};
use crate::network::{CacheSpec, NetworkConfig, NetworkError};
use crate::placement::{self, CacheState, MissLog};
use crate::subproblem::SubproblemError;
use crate::workload::RequestEvent;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;
use thiserror::Error;

/// Bisection accuracy handed to the flow solver inside the loop.
const SOLVE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {reason}")]
    Config { reason: String },
    #[error("event {index} references file {file}, catalog has {files}")]
    UnknownFile { index: usize, file: FileId, files: usize },
    #[error("event {index} references cache {cache}, network has {caches}")]
    UnknownCache { index: usize, cache: usize, caches: usize },
    #[error("event {index} at time {time} lies outside [0, {horizon})")]
    OutsideHorizon { index: usize, time: f64, horizon: u64 },
    #[error("event {index} breaks timestamp order")]
    UnsortedStream { index: usize },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Dual(#[from] DualError),
    #[error(transparent)]
    Subproblem(#[from] SubproblemError),
}

/// How users reach the root server on a cache miss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    /// Side links: misses bypass the cache, placement is periodic.
    One,
    /// Pass-through: misses transit the cache, admission is per request.
    Two,
}

impl FromStr for Topology {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "one" | "1" => Ok(Topology::One),
            "two" | "2" => Ok(Topology::Two),
            other => Err(format!("unknown topology {other:?} (expected one|two)")),
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Topology::One => "one",
            Topology::Two => "two",
        })
    }
}

/// Every storage policy the simulator can drive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PolicyId {
    Lru,
    Lfu,
    Rr,
    Prr,
    TwoLru,
    TopX,
    LeastX,
    LeastXth,
    LeastXf,
}

impl PolicyId {
    pub const ALL: [PolicyId; 9] = [
        PolicyId::Lru,
        PolicyId::Lfu,
        PolicyId::Rr,
        PolicyId::Prr,
        PolicyId::TwoLru,
        PolicyId::TopX,
        PolicyId::LeastX,
        PolicyId::LeastXth,
        PolicyId::LeastXf,
    ];

    /// Policies that consume anticipated flows (and hence run the dual loop).
    pub fn flow_driven(self) -> bool {
        matches!(
            self,
            PolicyId::TopX | PolicyId::LeastX | PolicyId::LeastXth | PolicyId::LeastXf
        )
    }

    /// The classic eviction policy backing this id, if it is a baseline.
    pub fn baseline(self) -> Option<EvictionPolicy> {
        match self {
            PolicyId::Lru => Some(EvictionPolicy::Lru),
            PolicyId::Lfu => Some(EvictionPolicy::Lfu),
            PolicyId::Rr => Some(EvictionPolicy::Rr),
            PolicyId::Prr => Some(EvictionPolicy::Prr),
            PolicyId::TwoLru => Some(EvictionPolicy::TwoLru),
            _ => None,
        }
    }
}

impl FromStr for PolicyId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lru" => Ok(PolicyId::Lru),
            "lfu" => Ok(PolicyId::Lfu),
            "rr" => Ok(PolicyId::Rr),
            "prr" => Ok(PolicyId::Prr),
            "2lru" => Ok(PolicyId::TwoLru),
            "topx" => Ok(PolicyId::TopX),
            "leastx" => Ok(PolicyId::LeastX),
            "leastxth" => Ok(PolicyId::LeastXth),
            "leastxf" => Ok(PolicyId::LeastXf),
            other => Err(format!(
                "unknown policy {other:?} (expected lru|lfu|rr|prr|2lru|topx|leastx|leastxth|leastxf)"
            )),
        }
    }
}

impl fmt::Display for PolicyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyId::Lru => "lru",
            PolicyId::Lfu => "lfu",
            PolicyId::Rr => "rr",
            PolicyId::Prr => "prr",
            PolicyId::TwoLru => "2lru",
            PolicyId::TopX => "topx",
            PolicyId::LeastX => "leastx",
            PolicyId::LeastXth => "leastxth",
            PolicyId::LeastXf => "leastxf",
        })
    }
}

/// Cache contents before the first slot. The seed fill mimics a cache that
/// has been running under unknown traffic; it is state setup, not traffic,
/// so it never counts toward backhaul consumption.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitialFill {
    Empty,
    /// Insert files in a seeded random order, skipping what does not fit.
    Random,
    /// Exact per-cache contents (must fit).
    Explicit(Vec<Vec<FileId>>),
}

/// One complete run description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub topology: Topology,
    pub policy: PolicyId,
    pub network: NetworkConfig,
    /// Dual step size; `None` picks half the stability bound.
    pub mu: Option<f64>,
    /// Slots between price updates.
    pub t_up_lambda: u64,
    /// Slots between placement events (topology one).
    pub t_up_v: u64,
    pub horizon: u64,
    /// Leading slots excluded from the summary.
    pub warmup: u64,
    pub seed: u64,
    pub initial_fill: InitialFill,
    /// Miss-log length; `None` sizes it to ten caches' worth of mean files.
    pub miss_log_capacity: Option<usize>,
    /// Virtual-cache length for 2LRU; `None` sizes it to one cache's worth.
    pub virtual_cache_capacity: Option<usize>,
}

impl ExperimentConfig {
    pub fn validate(&self, catalog: &Catalog) -> Result<(), SimError> {
        let fail = |reason: String| Err(SimError::Config { reason });
        self.network.validate()?;
        if catalog.is_empty() {
            return fail("empty catalog".into());
        }
        if self.horizon == 0 {
            return fail("horizon must be positive".into());
        }
        if self.warmup >= self.horizon {
            return fail(format!(
                "warmup {} must be shorter than horizon {}",
                self.warmup, self.horizon
            ));
        }
        if self.t_up_lambda == 0 || self.t_up_v == 0 {
            return fail("update intervals must be positive".into());
        }
        let periodic_proposed = matches!(
            self.policy,
            PolicyId::TopX | PolicyId::LeastX | PolicyId::LeastXth
        );
        if periodic_proposed && self.t_up_lambda > self.t_up_v {
            return fail(format!(
                "dual interval {} must not exceed cache-update interval {}",
                self.t_up_lambda, self.t_up_v
            ));
        }
        match self.topology {
            Topology::One => {
                if self.policy == PolicyId::LeastXf {
                    return fail(
                        "per-request admission needs pass-through traffic (topology two)"
                            .into(),
                    );
                }
            }
            Topology::Two => {
                if periodic_proposed {
                    return fail(format!(
                        "{} is a periodic placement policy; topology two admits per request",
                        self.policy
                    ));
                }
            }
        }
        if let InitialFill::Explicit(contents) = &self.initial_fill {
            if contents.len() != self.network.cache_count() {
                return fail(format!(
                    "explicit fill lists {} caches, network has {}",
                    contents.len(),
                    self.network.cache_count()
                ));
            }
            for (i, (files, spec)) in contents.iter().zip(&self.network.caches).enumerate() {
                let mut seen = BTreeSet::new();
                let mut volume = 0.0;
                for &f in files {
                    if f >= catalog.len() {
                        return fail(format!("explicit fill names unknown file {f}"));
                    }
                    if seen.insert(f) {
                        volume += catalog.size(f);
                    }
                }
                if volume > spec.storage + 1e-9 {
                    return fail(format!(
                        "explicit fill for cache {i} needs volume {volume}, storage is {}",
                        spec.storage
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Per-slot, per-cache accounting. The violation flags report slots whose
/// served volume exceeded a link capacity; serving itself is never altered.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub slot: u64,
    pub cache: usize,
    pub nc: f64,
    pub rdv: f64,
    pub bbc: f64,
    pub hits: u64,
    pub misses: u64,
    pub cache_link_violation: bool,
    pub root_link_violation: bool,
}

/// Stored-set change applied at one slot (aggregated over the slot for
/// per-request admission).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlacementEvent {
    pub slot: u64,
    pub cache: usize,
    pub admitted: Vec<FileId>,
    pub evicted: Vec<FileId>,
}

/// Post-warmup means (per slot, summed over caches) and totals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub slots: u64,
    pub mean_nc: f64,
    pub mean_rdv: f64,
    pub mean_bbc: f64,
    pub hits: u64,
    pub misses: u64,
    pub hit_rate: f64,
    pub capacity_violations: u64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: Vec<MetricsRecord>,
    pub events: Vec<PlacementEvent>,
    pub summary: Summary,
}

/// Network cost and rerouted volume for one cache-slot under a fixed stored
/// set: stored files are served over the cache path, the rest over the root
/// path, each file's volume priced by the respective penalty.
pub fn slot_metrics(
    demand: &[f64],
    stored: &BTreeSet<FileId>,
    spec: &CacheSpec,
) -> (f64, f64) {
    let mut nc = 0.0;
    let mut rdv = 0.0;
    for (f, &d) in demand.iter().enumerate() {
        let (cache_flow, root_flow) = if stored.contains(&f) { (d, 0.0) } else { (0.0, d) };
        nc += spec.cache_cost.eval_extended(cache_flow) + spec.root_cost.eval_extended(root_flow);
        rdv += root_flow;
    }
    (nc, rdv)
}

/// Slots/caches whose served volume exceeded a link capacity.
pub fn capacity_audit(metrics: &[MetricsRecord]) -> Vec<(u64, usize)> {
    metrics
        .iter()
        .filter(|r| r.cache_link_violation || r.root_link_violation)
        .map(|r| (r.slot, r.cache))
        .collect()
}

/// Post-warmup means and totals; `warmup` counts leading slots to drop.
pub fn summarize(metrics: &[MetricsRecord], warmup: u64) -> Summary {
    let kept: Vec<&MetricsRecord> = metrics.iter().filter(|r| r.slot >= warmup).collect();
    let slots = kept
        .iter()
        .map(|r| r.slot)
        .collect::<BTreeSet<_>>()
        .len() as u64;
    let mut summary = Summary {
        slots,
        mean_nc: 0.0,
        mean_rdv: 0.0,
        mean_bbc: 0.0,
        hits: 0,
        misses: 0,
        hit_rate: 0.0,
        capacity_violations: 0,
    };
    for r in &kept {
        summary.mean_nc += r.nc;
        summary.mean_rdv += r.rdv;
        summary.mean_bbc += r.bbc;
        summary.hits += r.hits;
        summary.misses += r.misses;
        summary.capacity_violations +=
            u64::from(r.cache_link_violation) + u64::from(r.root_link_violation);
    }
    if slots > 0 {
        summary.mean_nc /= slots as f64;
        summary.mean_rdv /= slots as f64;
        summary.mean_bbc /= slots as f64;
    }
    let served = summary.hits + summary.misses;
    if served > 0 {
        summary.hit_rate = summary.hits as f64 / served as f64;
    }
    summary
}

/// `slot,cache_id,nc,rdv,bbc,hits,misses` rows.
pub fn write_metrics_csv(mut out: impl Write, metrics: &[MetricsRecord]) -> io::Result<()> {
    writeln!(out, "slot,cache_id,nc,rdv,bbc,hits,misses")?;
    for r in metrics {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.slot, r.cache, r.nc, r.rdv, r.bbc, r.hits, r.misses
        )?;
    }
    Ok(())
}

/// `slot,cache_id,action,file_id` rows, admissions before evictions.
pub fn write_events_csv(mut out: impl Write, events: &[PlacementEvent]) -> io::Result<()> {
    writeln!(out, "slot,cache_id,action,file_id")?;
    for ev in events {
        for &f in &ev.admitted {
            writeln!(out, "{},{},admit,{}", ev.slot, ev.cache, f)?;
        }
        for &f in &ev.evicted {
            writeln!(out, "{},{},evict,{}", ev.slot, ev.cache, f)?;
        }
    }
    Ok(())
}

enum PolicyState {
    Flow(CacheState),
    Baseline(EvictionCache),
}

impl PolicyState {
    fn contains(&self, file: FileId) -> bool {
        match self {
            PolicyState::Flow(s) => s.contains(file),
            PolicyState::Baseline(c) => c.contains(file),
        }
    }
}

/// Runs the experiment over a time-sorted request stream.
pub fn run(
    config: &ExperimentConfig,
    catalog: &Catalog,
    stream: &[RequestEvent],
) -> Result<RunOutput, SimError> {
    run_with_flow_override(config, catalog, stream, None)
}

/// [`run`] with the anticipated cache-path flows pinned to `x_override`
/// (one row per cache) instead of solved from prices — a harness for
/// exercising placement policies against hand-picked flows; the dual loop
/// is skipped entirely.
pub fn run_with_flow_override(
    config: &ExperimentConfig,
    catalog: &Catalog,
    stream: &[RequestEvent],
    x_override: Option<&[Vec<f64>]>,
) -> Result<RunOutput, SimError> {
    config.validate(catalog)?;
    let files = catalog.len();
    let caches = config.network.cache_count();
    let sizes = catalog.sizes();
    validate_stream(stream, files, caches, config.horizon)?;
    if let Some(x) = x_override {
        if x.len() != caches || x.iter().any(|row| row.len() != files) {
            return Err(SimError::Config {
                reason: "flow override shape must be caches x files".into(),
            });
        }
    }

    // Per-cache machinery.
    let mean_size = catalog.mean_size();
    let mut states: Vec<PolicyState> = Vec::with_capacity(caches);
    let mut miss_logs: Vec<MissLog> = Vec::with_capacity(caches);
    for (i, spec) in config.network.caches.iter().enumerate() {
        let state = match config.policy.baseline() {
            Some(policy) => {
                let virtual_cap = config.virtual_cache_capacity.unwrap_or_else(|| {
                    EvictionCache::default_virtual_capacity(spec.storage, mean_size)
                });
                PolicyState::Baseline(EvictionCache::new(
                    policy,
                    spec.storage,
                    virtual_cap,
                    config.seed.wrapping_add(i as u64 + 1),
                ))
            }
            None => PolicyState::Flow(CacheState::new(spec.storage)),
        };
        states.push(state);
        let log_cap = config
            .miss_log_capacity
            .unwrap_or_else(|| MissLog::default_capacity(spec.storage, mean_size));
        miss_logs.push(MissLog::new(log_cap));
    }
    seed_contents(config, catalog, &mut states)?;

    // Price machinery, only for flow-driven policies without an override.
    let mut dual = if config.policy.flow_driven() && x_override.is_none() {
        Some(DualState::init(
            &config.network,
            files,
            config.mu,
            InitMode::Floor,
        )?)
    } else {
        None
    };
    let mut demand = DemandMatrix::zeros(caches, files);
    // Per-request admission consults the flows between price updates.
    let mut current_x: Option<Vec<Vec<f64>>> = match x_override {
        Some(x) => Some(x.to_vec()),
        None => match (&dual, config.policy) {
            (Some(d), PolicyId::LeastXf) => {
                Some(d.primal_step(&config.network, SOLVE_TOLERANCE)?.x)
            }
            _ => None,
        },
    };

    let zero_cost: Vec<f64> = config
        .network
        .caches
        .iter()
        .map(|s| s.cache_cost.eval_extended(0.0) + s.root_cost.eval_extended(0.0))
        .collect();

    let mut metrics = Vec::with_capacity((config.horizon as usize) * caches);
    let mut events_log: Vec<PlacementEvent> = Vec::new();
    // Per-slot served volume per file: (cache path, root path).
    let mut served: Vec<BTreeMap<FileId, (f64, f64)>> = vec![BTreeMap::new(); caches];
    let mut ptr = 0usize;

    for slot in 0..config.horizon {
        let mut bbc = vec![0.0; caches];
        let mut hits = vec![0u64; caches];
        let mut misses = vec![0u64; caches];
        let mut slot_admitted: Vec<Vec<FileId>> = vec![Vec::new(); caches];
        let mut slot_evicted: Vec<Vec<FileId>> = vec![Vec::new(); caches];

        // Placement boundary (topology one). Slot 0 is covered by the seed
        // fill; the policy first applies at the next boundary.
        if config.topology == Topology::One && slot % config.t_up_v == 0 && slot > 0 {
            let x_rows: Option<Vec<Vec<f64>>> = match x_override {
                Some(x) => Some(x.to_vec()),
                None => match &dual {
                    Some(d) => Some(d.primal_step(&config.network, SOLVE_TOLERANCE)?.x),
                    None => None,
                },
            };
            for i in 0..caches {
                let (admitted, evicted) = match &mut states[i] {
                    PolicyState::Flow(state) => {
                        let x_row = &x_rows.as_ref().expect("flow policies solve flows")[i];
                        let target = match config.policy {
                            PolicyId::TopX => placement::top_x(x_row, sizes, state.capacity()),
                            PolicyId::LeastX => {
                                placement::least_x(state, x_row, &miss_logs[i], sizes)
                            }
                            PolicyId::LeastXth => {
                                placement::least_x_th(state, x_row, &miss_logs[i], sizes)
                            }
                            _ => unreachable!("validated: periodic flow policy"),
                        };
                        let admitted: Vec<FileId> =
                            target.difference(state.stored()).copied().collect();
                        let evicted: Vec<FileId> =
                            state.stored().difference(&target).copied().collect();
                        state.set_contents(target, sizes);
                        (admitted, evicted)
                    }
                    PolicyState::Baseline(cache) => {
                        let update = cache.periodic_update(&miss_logs[i], sizes);
                        (update.admitted, update.evicted)
                    }
                };
                bbc[i] += admitted.iter().map(|&f| sizes[f]).sum::<f64>();
                miss_logs[i].clear();
                if !(admitted.is_empty() && evicted.is_empty()) {
                    events_log.push(PlacementEvent { slot, cache: i, admitted, evicted });
                }
            }
        }

        // Serve this slot's requests.
        while ptr < stream.len() && stream[ptr].time < (slot + 1) as f64 {
            let ev = &stream[ptr];
            ptr += 1;
            let i = ev.cache;
            demand.d[i][ev.file] += ev.volume;
            let hit = states[i].contains(ev.file);
            if hit {
                hits[i] += 1;
                served[i].entry(ev.file).or_insert((0.0, 0.0)).0 += ev.volume;
                if let PolicyState::Baseline(cache) = &mut states[i] {
                    cache.note_hit(ev.file);
                }
                continue;
            }
            misses[i] += 1;
            served[i].entry(ev.file).or_insert((0.0, 0.0)).1 += ev.volume;
            match config.topology {
                Topology::One => miss_logs[i].record(ev.file, slot),
                Topology::Two => match &mut states[i] {
                    PolicyState::Baseline(cache) => {
                        let outcome = cache.on_request(ev.file, sizes);
                        if outcome.admitted {
                            slot_admitted[i].push(ev.file);
                        }
                        slot_evicted[i].extend(outcome.evicted);
                    }
                    PolicyState::Flow(state) => {
                        let x_row = &current_x.as_ref().expect("admission flows exist")[i];
                        let decision = placement::least_x_f(state, x_row, ev.file, sizes);
                        if decision.cached {
                            slot_admitted[i].push(ev.file);
                        }
                        slot_evicted[i].extend(decision.evicted);
                    }
                },
            }
        }

        // Price boundary: flows from the current prices, one ascent step on
        // the accumulated demand, then reset the interval.
        if let Some(d) = &mut dual {
            if (slot + 1) % config.t_up_lambda == 0 {
                let flows = d.primal_step(&config.network, SOLVE_TOLERANCE)?;
                d.dual_step(&flows, &demand);
                demand = DemandMatrix::zeros(caches, files);
                if config.policy == PolicyId::LeastXf {
                    current_x = Some(d.primal_step(&config.network, SOLVE_TOLERANCE)?.x);
                }
            }
        }

        // Emit metrics.
        for i in 0..caches {
            let spec = &config.network.caches[i];
            let mut nc = zero_cost[i] * (files - served[i].len()) as f64;
            let mut rdv = 0.0;
            let mut cache_volume = 0.0;
            for (&_f, &(cache_flow, root_flow)) in &served[i] {
                nc += spec.cache_cost.eval_extended(cache_flow)
                    + spec.root_cost.eval_extended(root_flow);
                rdv += root_flow;
                cache_volume += cache_flow;
            }
            let bbc_i = match config.topology {
                Topology::One => bbc[i],
                Topology::Two => rdv,
            };
            metrics.push(MetricsRecord {
                slot,
                cache: i,
                nc,
                rdv,
                bbc: bbc_i,
                hits: hits[i],
                misses: misses[i],
                cache_link_violation: cache_volume > spec.cache_cap + 1e-9,
                root_link_violation: rdv > spec.root_cap + 1e-9,
            });
            served[i].clear();
            if !(slot_admitted[i].is_empty() && slot_evicted[i].is_empty()) {
                events_log.push(PlacementEvent {
                    slot,
                    cache: i,
                    admitted: std::mem::take(&mut slot_admitted[i]),
                    evicted: std::mem::take(&mut slot_evicted[i]),
                });
            }
        }
    }

    let summary = summarize(&metrics, config.warmup);
    Ok(RunOutput { metrics, events: events_log, summary })
}

fn validate_stream(
    stream: &[RequestEvent],
    files: usize,
    caches: usize,
    horizon: u64,
) -> Result<(), SimError> {
    let mut last = f64::NEG_INFINITY;
    for (index, ev) in stream.iter().enumerate() {
        if ev.file >= files {
            return Err(SimError::UnknownFile { index, file: ev.file, files });
        }
        if ev.cache >= caches {
            return Err(SimError::UnknownCache { index, cache: ev.cache, caches });
        }
        if !(ev.time >= 0.0 && ev.time < horizon as f64) {
            return Err(SimError::OutsideHorizon { index, time: ev.time, horizon });
        }
        if ev.time < last {
            return Err(SimError::UnsortedStream { index });
        }
        last = ev.time;
    }
    Ok(())
}

fn seed_contents(
    config: &ExperimentConfig,
    catalog: &Catalog,
    states: &mut [PolicyState],
) -> Result<(), SimError> {
    match &config.initial_fill {
        InitialFill::Empty => Ok(()),
        InitialFill::Random => {
            let mut rng = StdRng::seed_from_u64(config.seed);
            for state in states.iter_mut() {
                let mut order: Vec<FileId> = (0..catalog.len()).collect();
                order.shuffle(&mut rng);
                for f in order {
                    match state {
                        PolicyState::Flow(s) => {
                            s.insert(f, catalog.sizes());
                        }
                        PolicyState::Baseline(c) => {
                            c.preload(f, catalog.sizes());
                        }
                    }
                }
            }
            Ok(())
        }
        InitialFill::Explicit(contents) => {
            for (state, files) in states.iter_mut().zip(contents) {
                for &f in files {
                    let fit = match state {
                        PolicyState::Flow(s) => s.insert(f, catalog.sizes()),
                        PolicyState::Baseline(c) => c.preload(f, catalog.sizes()),
                    };
                    if !fit {
                        return Err(SimError::Config {
                            reason: format!("explicit fill: file {f} does not fit"),
                        });
                    }
                }
            }
            Ok(())
        }
    }
}
