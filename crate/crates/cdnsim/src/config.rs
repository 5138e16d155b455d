//! TOML run manifests: one file declares the experiment grid (policies ×
//! cache sizes × update intervals × seeds), the workload source, and the
//! shared network parameters. Lowering a manifest yields one
//! [`ExperimentConfig`](crate::simulator::ExperimentConfig) per grid cell;
//! the workload is materialized once per seed so that policies compete on
//! identical streams.

use crate::catalog::Catalog;
use crate::network::{CacheSpec, NetworkConfig};
use crate::penalty::{Penalty, PenaltyError, PenaltyFamily};
use crate::simulator::{ExperimentConfig, InitialFill, PolicyId, Topology};
use crate::workload::{
    self, IngestOptions, PopularityProfile, RequestEvent, WorkloadError,
};
use serde::Deserialize;
use std::collections::HashMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Toml {
        path: PathBuf,
        #[source]
        source: Box<toml::de::Error>,
    },
    #[error("invalid manifest: {reason}")]
    Invalid { reason: String },
    #[error("penalty: {0}")]
    Penalty(#[from] PenaltyError),
    #[error("workload: {0}")]
    Workload(#[from] WorkloadError),
}

/// Top-level manifest: `[experiment]`, `[workload]`, `[network]`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub experiment: ExperimentSection,
    pub workload: WorkloadSection,
    pub network: NetworkSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub topology: Topology,
    /// Sweep axis: policy names (`lru|lfu|rr|prr|2lru|topx|leastx|leastxth|leastxf`).
    pub policies: Vec<String>,
    /// Sweep axis: cache storage as percent of the total catalog volume.
    pub cache_pct: Vec<f64>,
    /// Sweep axis: slots between placement events.
    pub t_up_v: Vec<u64>,
    /// Sweep axis: run seeds (also perturb the generated stream).
    pub seeds: Vec<u64>,
    pub t_up_lambda: u64,
    pub horizon: u64,
    #[serde(default)]
    pub warmup: u64,
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default)]
    pub initial_fill: FillSpec,
    #[serde(default)]
    pub miss_log_capacity: Option<usize>,
    #[serde(default)]
    pub virtual_cache_capacity: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FillSpec {
    Empty,
    #[default]
    Random,
}

/// Where the request stream comes from.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum WorkloadSection {
    /// Synthetic stationary demand: a Zipf catalog with Poisson arrivals.
    Zipf {
        files: usize,
        s: f64,
        rate: f64,
        size_range: [f64; 2],
        seed: u64,
    },
    /// Synthetic decaying demand regenerated from a fitted profile CSV,
    /// with sizes from an optional catalog sidecar (unit sizes otherwise).
    Decay {
        profiles: PathBuf,
        #[serde(default)]
        catalog: Option<PathBuf>,
        seed: u64,
        #[serde(default)]
        upscale: Option<u64>,
    },
    /// Replay of an external request log.
    Trace {
        path: PathBuf,
        #[serde(default = "default_bitrate")]
        bitrate: f64,
        #[serde(default = "default_true")]
        sort: bool,
    },
}

fn default_bitrate() -> f64 {
    1.0
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    /// All caches share the parameters below.
    #[serde(default = "default_caches")]
    pub caches: usize,
    pub cache_cap: f64,
    pub root_cap: f64,
    pub cache_cost: PenaltySpec,
    pub root_cost: PenaltySpec,
}

fn default_caches() -> usize {
    1
}

/// A penalty family plus the domain bound it is validated on.
#[derive(Debug, Clone, Deserialize)]
pub struct PenaltySpec {
    #[serde(flatten)]
    pub family: PenaltyFamily,
    pub domain_max: f64,
}

impl PenaltySpec {
    pub fn build(&self) -> Result<Penalty, PenaltyError> {
        Penalty::new(self.family, self.domain_max)
    }
}

/// One point of the sweep grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub policy: PolicyId,
    pub cache_pct: f64,
    pub t_up_v: u64,
    pub seed: u64,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let manifest: RunManifest =
            toml::from_str(&text).map_err(|source| ConfigError::Toml {
                path: path.to_path_buf(),
                source: Box::new(source),
            })?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |reason: String| Err(ConfigError::Invalid { reason });
        let e = &self.experiment;
        if e.policies.is_empty() || e.cache_pct.is_empty() || e.t_up_v.is_empty() || e.seeds.is_empty()
        {
            return fail("every sweep axis (policies, cache_pct, t_up_v, seeds) needs at least one entry".into());
        }
        for name in &e.policies {
            name.parse::<PolicyId>().map_err(|m| ConfigError::Invalid { reason: m })?;
        }
        for &pct in &e.cache_pct {
            if !(pct > 0.0 && pct.is_finite()) {
                return fail(format!("cache_pct {pct} must be positive"));
            }
        }
        if self.network.caches == 0 {
            return fail("network.caches must be at least 1".into());
        }
        Ok(())
    }

    /// The full sweep grid in declaration order.
    pub fn cells(&self) -> Vec<SweepCell> {
        let e = &self.experiment;
        let mut cells = Vec::new();
        for name in &e.policies {
            let policy = name.parse::<PolicyId>().expect("validated");
            for &cache_pct in &e.cache_pct {
                for &t_up_v in &e.t_up_v {
                    for &seed in &e.seeds {
                        cells.push(SweepCell { policy, cache_pct, t_up_v, seed });
                    }
                }
            }
        }
        cells
    }

    /// Builds the per-run configuration for one grid cell; storage is the
    /// cell's percentage of the catalog volume.
    pub fn lower(&self, cell: &SweepCell, catalog: &Catalog) -> Result<ExperimentConfig, ConfigError> {
        let spec = CacheSpec {
            storage: cell.cache_pct / 100.0 * catalog.total_volume(),
            cache_cap: self.network.cache_cap,
            root_cap: self.network.root_cap,
            cache_cost: self.network.cache_cost.build()?,
            root_cost: self.network.root_cost.build()?,
        };
        let network = NetworkConfig::new(vec![spec; self.network.caches]);
        Ok(ExperimentConfig {
            topology: self.experiment.topology,
            policy: cell.policy,
            network,
            mu: self.experiment.mu,
            t_up_lambda: self.experiment.t_up_lambda,
            t_up_v: cell.t_up_v,
            horizon: self.experiment.horizon,
            warmup: self.experiment.warmup,
            seed: cell.seed,
            initial_fill: match self.experiment.initial_fill {
                FillSpec::Empty => InitialFill::Empty,
                FillSpec::Random => InitialFill::Random,
            },
            miss_log_capacity: self.experiment.miss_log_capacity,
            virtual_cache_capacity: self.experiment.virtual_cache_capacity,
        })
    }

    /// Materializes the stream for one run seed. Synthetic kinds mix the
    /// run seed into the generator so different seeds see different traffic
    /// while all policies at one seed share the exact same stream; traces
    /// ignore the seed.
    pub fn materialize(
        &self,
        run_seed: u64,
        base_dir: &Path,
    ) -> Result<(Catalog, Vec<RequestEvent>), ConfigError> {
        let horizon = self.experiment.horizon;
        let caches = self.network.caches;
        match &self.workload {
            WorkloadSection::Zipf { files, s, rate, size_range, seed } => {
                let (catalog, p) =
                    workload::zipf_catalog(*files, *s, (size_range[0], size_range[1]), *seed);
                let mut events = Vec::new();
                for cache in 0..caches {
                    let stream_seed = mix_seed(*seed, run_seed, cache);
                    events.extend(workload::static_stream(
                        &p,
                        catalog.sizes(),
                        *rate,
                        horizon,
                        cache,
                        stream_seed,
                    )?);
                }
                sort_stream(&mut events);
                Ok((catalog, events))
            }
            WorkloadSection::Decay { profiles, catalog, seed, upscale } => {
                let path = resolve(base_dir, profiles);
                let reader = open(&path)?;
                let (mut profs, labels) = workload::read_profiles(reader)?;
                if let Some(k) = upscale {
                    profs = workload::upscale(&profs, *k);
                }
                let cat = match catalog {
                    Some(catalog_path) => {
                        let path = resolve(base_dir, catalog_path);
                        let sidecar = workload::read_catalog(open(&path)?)?;
                        align_catalog(&sidecar, &labels)?
                    }
                    None => Catalog::with_labels(vec![1.0; profs.len()], labels),
                };
                let mut events = Vec::new();
                for cache in 0..caches {
                    let stream_seed = mix_seed(*seed, run_seed, cache);
                    events.extend(workload::decay_stream(
                        &profs,
                        cat.sizes(),
                        horizon as f64,
                        cache,
                        stream_seed,
                    ));
                }
                sort_stream(&mut events);
                Ok((cat, events))
            }
            WorkloadSection::Trace { path, bitrate, sort } => {
                let path = resolve(base_dir, path);
                let reader = open(&path)?;
                let options = IngestOptions { volume_per_minute: *bitrate, sort: *sort };
                let (catalog, events) = workload::ingest_trace(reader, options)?;
                if let Some(last) = events.last() {
                    if last.time >= horizon as f64 {
                        return Err(ConfigError::Invalid {
                            reason: format!(
                                "trace extends to time {}, raise horizon above {}",
                                last.time, horizon
                            ),
                        });
                    }
                }
                Ok((catalog, events))
            }
        }
    }
}

/// Profiles generated for the decay workload, exposed for `gen-workload`.
pub fn load_decay_profiles(
    manifest: &RunManifest,
    base_dir: &Path,
) -> Result<Option<Vec<PopularityProfile>>, ConfigError> {
    match &manifest.workload {
        WorkloadSection::Decay { profiles, upscale, .. } => {
            let reader = open(&resolve(base_dir, profiles))?;
            let (mut profs, _) = workload::read_profiles(reader)?;
            if let Some(k) = upscale {
                profs = workload::upscale(&profs, *k);
            }
            Ok(Some(profs))
        }
        _ => Ok(None),
    }
}

fn open(path: &Path) -> Result<BufReader<File>, ConfigError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })
}

/// Paths inside a manifest are taken relative to the manifest's directory.
fn resolve(base_dir: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base_dir.join(path)
    }
}

/// Reorders sidecar sizes to the profile rows by matching labels.
fn align_catalog(sidecar: &Catalog, labels: &[String]) -> Result<Catalog, ConfigError> {
    let index: HashMap<&str, usize> = (0..sidecar.len())
        .map(|f| (sidecar.label(f).expect("sidecar catalogs carry labels"), f))
        .collect();
    let mut sizes = Vec::with_capacity(labels.len());
    for label in labels {
        match index.get(label.as_str()) {
            Some(&f) => sizes.push(sidecar.size(f)),
            None => {
                return Err(ConfigError::Invalid {
                    reason: format!("catalog sidecar is missing file {label:?}"),
                })
            }
        }
    }
    Ok(Catalog::with_labels(sizes, labels.to_vec()))
}

/// Splitmix-style blend of the section seed, the run seed, and the cache
/// index into one generator seed.
fn mix_seed(section_seed: u64, run_seed: u64, cache: usize) -> u64 {
    section_seed
        .wrapping_add(run_seed.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add((cache as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9))
}

fn sort_stream(events: &mut [RequestEvent]) {
    events.sort_by(|a, b| {
        a.time
            .partial_cmp(&b.time)
            .expect("finite times")
            .then(a.cache.cmp(&b.cache))
    });
}
