//! Demand-stream generation, trace ingestion, and popularity fitting.
//!
//! Three sources of request events:
//! * static popularity — a Zipf catalog with Poisson arrivals per slot;
//! * decaying popularity — each file gets a burst of requests starting at
//!   its release time with exponentially decaying intensity;
//! * external traces — CSV logs with one request per row, sizes derived
//!   from playback duration at a constant bit rate.
//!
//! A trace can be round-tripped: [`fit_profiles`] estimates per-file decay
//! parameters by maximum likelihood, [`upscale`] multiplies request counts,
//! and [`decay_stream`] regenerates a statistical look-alike stream.

use crate::catalog::{Catalog, FileId};
use rand::distributions::{Distribution, WeightedIndex};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Exp, Poisson};
use std::io::{self, BufRead, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unrecognized header {found:?}, expected {expected:?}")]
    UnknownFormat { expected: &'static str, found: String },
    #[error("no data rows")]
    Empty,
    #[error("line {line}: timestamps out of order (sorting disabled)")]
    Unsorted { line: usize },
    #[error("parameter {name} = {value} violates `{constraint}`")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },
}

/// One user request: at `time` (slot index or continuous timestamp), cache
/// `cache` receives a request for `file` worth `volume` demand units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RequestEvent {
    pub time: f64,
    pub cache: usize,
    pub file: FileId,
    pub volume: f64,
}

/// Release-and-decay description of one file's request process: the first
/// request lands at `tau`, `requests` arrive in total, and inter-release
/// offsets follow an exponential with rate `omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopularityProfile {
    pub file: FileId,
    pub tau: f64,
    pub requests: u64,
    pub omega: f64,
}

/// Builds a catalog of `files` entries with i.i.d. uniform sizes and the
/// rank-popularity law p_k ∝ (k+1)^(−s) (rank 0 most popular).
pub fn zipf_catalog(
    files: usize,
    s: f64,
    size_range: (f64, f64),
    seed: u64,
) -> (Catalog, Vec<f64>) {
    assert!(files >= 1 && s >= 0.0);
    assert!(size_range.0 > 0.0 && size_range.1 >= size_range.0);
    let mut rng = StdRng::seed_from_u64(seed);
    let sizes: Vec<f64> = (0..files)
        .map(|_| rng.gen_range(size_range.0..=size_range.1))
        .collect();
    let mut p: Vec<f64> = (1..=files).map(|k| (k as f64).powf(-s)).collect();
    let total: f64 = p.iter().sum();
    for w in &mut p {
        *w /= total;
    }
    (Catalog::new(sizes), p)
}

/// Stationary stream for one cache: each slot draws a Poisson(`rate`) number
/// of requests, each for an independently p-distributed file; the event
/// volume is the file's size.
pub fn static_stream(
    p: &[f64],
    sizes: &[f64],
    rate: f64,
    horizon: u64,
    cache: usize,
    seed: u64,
) -> Result<Vec<RequestEvent>, WorkloadError> {
    assert_eq!(p.len(), sizes.len());
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(WorkloadError::InvalidParameter {
            name: "rate",
            value: rate,
            constraint: "rate > 0",
        });
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let arrivals = Poisson::new(rate).expect("rate validated");
    let pick = WeightedIndex::new(p).map_err(|_| WorkloadError::InvalidParameter {
        name: "p",
        value: f64::NAN,
        constraint: "valid probability weights",
    })?;
    let mut events = Vec::new();
    for slot in 0..horizon {
        let count = arrivals.sample(&mut rng) as u64;
        for _ in 0..count {
            let file = pick.sample(&mut rng);
            events.push(RequestEvent {
                time: slot as f64,
                cache,
                file,
                volume: sizes[file],
            });
        }
    }
    Ok(events)
}

/// Time-varying stream for one cache: file f emits `requests` events at
/// times tau + E_j with E_j exponential(omega), merged across files, sorted
/// by time, truncated at `horizon`.
pub fn decay_stream(
    profiles: &[PopularityProfile],
    sizes: &[f64],
    horizon: f64,
    cache: usize,
    seed: u64,
) -> Vec<RequestEvent> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut events = Vec::new();
    for prof in profiles {
        let offsets = Exp::new(prof.omega).expect("profile omega > 0");
        for _ in 0..prof.requests {
            let time = prof.tau + offsets.sample(&mut rng);
            if time < horizon {
                events.push(RequestEvent {
                    time,
                    cache,
                    file: prof.file,
                    volume: sizes[prof.file],
                });
            }
        }
    }
    events.sort_by(|a, b| a.time.partial_cmp(&b.time).expect("finite times"));
    events
}

/// Decay fit for one file's request times.
///
/// The earliest request anchors `tau`; the remaining offsets feed the
/// exponential-rate maximum-likelihood estimate n/Σt. Files with fewer than
/// two requests — or with every request at the anchor instant — have no
/// defined rate and get `default_omega`.
pub fn fit_decay(times: &[f64], default_omega: f64) -> (f64, u64, f64) {
    assert!(!times.is_empty(), "fit requires at least one request");
    let tau = times.iter().copied().fold(f64::INFINITY, f64::min);
    let mut offsets: Vec<f64> = times.iter().map(|t| t - tau).collect();
    // Drop exactly one zero: the anchor request itself.
    let anchor = offsets
        .iter()
        .position(|&o| o == 0.0)
        .expect("minimum has offset zero");
    offsets.swap_remove(anchor);
    let total: f64 = offsets.iter().sum();
    let omega = if offsets.is_empty() || total <= 0.0 {
        default_omega
    } else {
        offsets.len() as f64 / total
    };
    (tau, times.len() as u64, omega)
}

/// Fits a profile per file appearing in `events`. Files whose rate is
/// undefined inherit the median fitted rate of the rest (or 1.0 when no
/// file has a defined rate), keeping the defaults data-driven.
pub fn fit_profiles(events: &[RequestEvent], files: usize) -> Vec<PopularityProfile> {
    let mut times: Vec<Vec<f64>> = vec![Vec::new(); files];
    for ev in events {
        times[ev.file].push(ev.time);
    }
    // First pass with a sentinel default to find which rates are defined.
    let sentinel = f64::NAN;
    let mut fits: Vec<(FileId, f64, u64, f64)> = Vec::new();
    for (file, t) in times.iter().enumerate() {
        if t.is_empty() {
            continue;
        }
        let (tau, v, omega) = fit_decay(t, sentinel);
        fits.push((file, tau, v, omega));
    }
    let mut defined: Vec<f64> = fits
        .iter()
        .map(|&(_, _, _, w)| w)
        .filter(|w| w.is_finite())
        .collect();
    defined.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let default_omega = if defined.is_empty() {
        1.0
    } else {
        defined[defined.len() / 2]
    };
    fits.into_iter()
        .map(|(file, tau, requests, omega)| PopularityProfile {
            file,
            tau,
            requests,
            omega: if omega.is_finite() { omega } else { default_omega },
        })
        .collect()
}

/// Multiplies every profile's request count by `k`, leaving release times
/// and decay rates untouched; regenerating the stream then scales the
/// workload accordingly.
pub fn upscale(profiles: &[PopularityProfile], k: u64) -> Vec<PopularityProfile> {
    assert!(k >= 1, "upscale factor must be at least 1");
    profiles
        .iter()
        .map(|p| PopularityProfile { requests: p.requests * k, ..*p })
        .collect()
}

/// Controls for [`ingest_trace`]: the constant bit rate converting duration
/// minutes to volume units, and whether out-of-order rows are sorted (true)
/// or rejected (false).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IngestOptions {
    pub volume_per_minute: f64,
    pub sort: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions { volume_per_minute: 1.0, sort: true }
    }
}

const TRACE_HEADER: &str = "timestamp,cache_id,file_id,duration_minutes";

/// Reads a request log in the `timestamp,cache_id,file_id,duration_minutes`
/// CSV format. File identifiers are mapped to dense catalog indices in
/// first-appearance order; each file's size is its duration times the bit
/// rate, and rows disagreeing on a file's duration are rejected.
pub fn ingest_trace(
    reader: impl BufRead,
    options: IngestOptions,
) -> Result<(Catalog, Vec<RequestEvent>), WorkloadError> {
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line?,
        None => return Err(WorkloadError::Empty),
    };
    if header.trim() != TRACE_HEADER {
        return Err(WorkloadError::UnknownFormat {
            expected: TRACE_HEADER,
            found: header,
        });
    }
    let mut labels: Vec<String> = Vec::new();
    let mut durations: Vec<f64> = Vec::new();
    let mut index: std::collections::HashMap<String, FileId> = std::collections::HashMap::new();
    let mut events: Vec<RequestEvent> = Vec::new();
    let mut last_time = f64::NEG_INFINITY;
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(WorkloadError::Parse {
                line: line_no,
                message: format!("expected 4 fields, found {}", fields.len()),
            });
        }
        let parse_f64 = |name: &str, raw: &str| -> Result<f64, WorkloadError> {
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| WorkloadError::Parse {
                    line: line_no,
                    message: format!("{name} {raw:?} is not a finite number"),
                })
        };
        let time = parse_f64("timestamp", fields[0])?;
        let cache: usize = fields[1].parse().map_err(|_| WorkloadError::Parse {
            line: line_no,
            message: format!("cache_id {:?} is not a nonnegative integer", fields[1]),
        })?;
        let label = fields[2];
        if label.is_empty() {
            return Err(WorkloadError::Parse {
                line: line_no,
                message: "empty file_id".into(),
            });
        }
        let duration = parse_f64("duration_minutes", fields[3])?;
        if duration <= 0.0 {
            return Err(WorkloadError::Parse {
                line: line_no,
                message: format!("duration_minutes {duration} must be positive"),
            });
        }
        if !options.sort && time < last_time {
            return Err(WorkloadError::Unsorted { line: line_no });
        }
        last_time = last_time.max(time);
        let file = match index.get(label) {
            Some(&f) => {
                if (durations[f] - duration).abs() > 1e-9 * durations[f].max(1.0) {
                    return Err(WorkloadError::Parse {
                        line: line_no,
                        message: format!(
                            "file {label:?} duration {duration} conflicts with earlier {}",
                            durations[f]
                        ),
                    });
                }
                f
            }
            None => {
                let f = labels.len();
                labels.push(label.to_string());
                durations.push(duration);
                index.insert(label.to_string(), f);
                f
            }
        };
        events.push(RequestEvent {
            time,
            cache,
            file,
            volume: duration * options.volume_per_minute,
        });
    }
    if events.is_empty() {
        return Err(WorkloadError::Empty);
    }
    if options.sort {
        events.sort_by(|a, b| a.time.partial_cmp(&b.time).expect("finite times"));
    }
    let sizes = durations
        .iter()
        .map(|d| d * options.volume_per_minute)
        .collect();
    Ok((Catalog::with_labels(sizes, labels), events))
}

const PROFILE_HEADER: &str = "file_id,tau,V,omega";

/// Writes profiles as `file_id,tau,V,omega`; `labels[file]` supplies the
/// identifier column when present, the dense index otherwise.
pub fn write_profiles(
    mut out: impl Write,
    profiles: &[PopularityProfile],
    labels: Option<&Catalog>,
) -> io::Result<()> {
    writeln!(out, "{PROFILE_HEADER}")?;
    for p in profiles {
        let id = labels
            .and_then(|c| c.label(p.file).map(str::to_string))
            .unwrap_or_else(|| p.file.to_string());
        writeln!(out, "{},{},{},{}", id, p.tau, p.requests, p.omega)?;
    }
    Ok(())
}

/// Reads a profile CSV back; profiles receive dense ids in row order and
/// the original identifier column is returned alongside.
pub fn read_profiles(
    reader: impl BufRead,
) -> Result<(Vec<PopularityProfile>, Vec<String>), WorkloadError> {
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line?,
        None => return Err(WorkloadError::Empty),
    };
    if header.trim() != PROFILE_HEADER {
        return Err(WorkloadError::UnknownFormat {
            expected: PROFILE_HEADER,
            found: header,
        });
    }
    let mut profiles = Vec::new();
    let mut labels = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(WorkloadError::Parse {
                line: line_no,
                message: format!("expected 4 fields, found {}", fields.len()),
            });
        }
        let tau: f64 = fields[1].parse().map_err(|_| WorkloadError::Parse {
            line: line_no,
            message: format!("tau {:?} is not a number", fields[1]),
        })?;
        let requests: u64 = fields[2].parse().map_err(|_| WorkloadError::Parse {
            line: line_no,
            message: format!("V {:?} is not a nonnegative integer", fields[2]),
        })?;
        let omega: f64 = fields[3].parse().map_err(|_| WorkloadError::Parse {
            line: line_no,
            message: format!("omega {:?} is not a number", fields[3]),
        })?;
        if requests < 1 {
            return Err(WorkloadError::Parse {
                line: line_no,
                message: "V must be at least 1".into(),
            });
        }
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(WorkloadError::Parse {
                line: line_no,
                message: format!("omega {omega} must be positive"),
            });
        }
        profiles.push(PopularityProfile {
            file: profiles.len(),
            tau,
            requests,
            omega,
        });
        labels.push(fields[0].to_string());
    }
    if profiles.is_empty() {
        return Err(WorkloadError::Empty);
    }
    Ok((profiles, labels))
}

const CATALOG_HEADER: &str = "file_id,size";

/// Writes the per-file sizes as `file_id,size` (a sidecar for profile CSVs,
/// which carry no sizes of their own).
pub fn write_catalog(mut out: impl Write, catalog: &Catalog) -> io::Result<()> {
    writeln!(out, "{CATALOG_HEADER}")?;
    for f in 0..catalog.len() {
        let id = catalog
            .label(f)
            .map(str::to_string)
            .unwrap_or_else(|| f.to_string());
        writeln!(out, "{},{}", id, catalog.size(f))?;
    }
    Ok(())
}

/// Reads a `file_id,size` catalog CSV.
pub fn read_catalog(reader: impl BufRead) -> Result<Catalog, WorkloadError> {
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line?,
        None => return Err(WorkloadError::Empty),
    };
    if header.trim() != CATALOG_HEADER {
        return Err(WorkloadError::UnknownFormat {
            expected: CATALOG_HEADER,
            found: header,
        });
    }
    let mut sizes = Vec::new();
    let mut labels = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(WorkloadError::Parse {
                line: line_no,
                message: format!("expected 2 fields, found {}", fields.len()),
            });
        }
        let size: f64 = fields[1].parse().map_err(|_| WorkloadError::Parse {
            line: line_no,
            message: format!("size {:?} is not a number", fields[1]),
        })?;
        if !(size > 0.0 && size.is_finite()) {
            return Err(WorkloadError::Parse {
                line: line_no,
                message: format!("size {size} must be positive"),
            });
        }
        labels.push(fields[0].to_string());
        sizes.push(size);
    }
    if sizes.is_empty() {
        return Err(WorkloadError::Empty);
    }
    Ok(Catalog::with_labels(sizes, labels))
}

/// Writes a request stream as `timestamp,cache_id,file_id,duration_minutes`
/// so generated workloads can be re-ingested.
pub fn write_trace(
    mut out: impl Write,
    events: &[RequestEvent],
    catalog: &Catalog,
    volume_per_minute: f64,
) -> io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for ev in events {
        let id = catalog
            .label(ev.file)
            .map(str::to_string)
            .unwrap_or_else(|| ev.file.to_string());
        writeln!(
            out,
            "{},{},{},{}",
            ev.time,
            ev.cache,
            id,
            ev.volume / volume_per_minute
        )?;
    }
    Ok(())
}
