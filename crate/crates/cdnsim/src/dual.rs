//! Incremental dual ascent over the cache shadow prices.
//!
//! The engine owns the N×F price matrix Λ. Each interval it produces
//! anticipated flows by solving one capacitated subproblem per cache and
//! link ([`DualState::primal_step`], the flow updates), then moves the
//! prices against the constraint residual ([`DualState::dual_step`]):
//!
//! ```text
//! λ_if ← λ_if − μ (x̂_if + ŷ_if − d_if)
//! ```
//!
//! With the step size below the strong-convexity modulus of the penalties
//! and initialization inside the documented box (every λ_if at least the
//! cheapest zero-flow marginal cost, every row summing to at most Δ), the
//! iterates stay inside that box on any feasible demand stream — the engine
//! never projects, it only reports violations as diagnostics.

use crate::network::NetworkConfig;
use crate::subproblem::{self, SubproblemError, SubproblemInstance};
use std::io::{self, Write};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DualError {
    #[error("step size mu = {mu} outside (0, {m}) required by the penalties' curvature")]
    StepSize { mu: f64, m: f64 },
    #[error("cache {cache}: initial prices violate {bound} (value {value}, limit {limit})")]
    InitBounds {
        cache: usize,
        bound: &'static str,
        value: f64,
        limit: f64,
    },
    #[error("initial price matrix is {rows}x{cols}, expected {want_rows}x{want_cols}")]
    InitShape {
        rows: usize,
        cols: usize,
        want_rows: usize,
        want_cols: usize,
    },
    #[error("uniform-cap init infeasible for cache {cache}: delta/F = {value} below floor {limit}")]
    UniformCapInfeasible {
        cache: usize,
        value: f64,
        limit: f64,
    },
    #[error("no recorded dual steps")]
    EmptyHistory,
}

/// How to seed the price matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum InitMode {
    /// Every λ_if at the per-cache floor min{cache_cost'(0), root_cost'(0)}.
    Floor,
    /// Every λ_if at Δ_i/F, i.e. the row-sum bound spread evenly.
    UniformCap,
    /// Caller-provided N×F matrix, validated against both bounds.
    Custom(Vec<Vec<f64>>),
}

/// Anticipated per-slot flows: `x` over the cache links, `y` over the root
/// links, both N×F and capacity-feasible by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct AnticipatedFlows {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
}

/// Demand accumulated over one update interval, N×F, volume units.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandMatrix {
    pub d: Vec<Vec<f64>>,
}

impl DemandMatrix {
    pub fn zeros(caches: usize, files: usize) -> Self {
        DemandMatrix { d: vec![vec![0.0; files]; caches] }
    }

    /// Per-cache feasibility: total demand within the combined link capacity.
    /// Infeasible rows void the price-bound guarantees but are not an error.
    pub fn feasible_rows(&self, config: &NetworkConfig) -> Vec<bool> {
        self.d
            .iter()
            .zip(&config.caches)
            .map(|(row, spec)| row.iter().sum::<f64>() <= spec.cache_cap + spec.root_cap)
            .collect()
    }
}

/// Counters from one dual step; nonzero fields flag demand streams that
/// broke the self-maintaining price bounds.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepDiagnostics {
    pub floor_violations: usize,
    pub row_sum_violations: usize,
}

/// The dual iterate and everything needed to step it.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    lambda: Vec<Vec<f64>>,
    mu: f64,
    /// Per-cache row-sum cap Δ_i.
    delta_cap: Vec<f64>,
    /// Per-cache price floor min{cache_cost'(0), root_cost'(0)}.
    floor: Vec<f64>,
    t: u64,
}

/// Largest admissible step size: the smallest strong-convexity modulus
/// among all link penalties. Valid steps are 0 < mu < this bound.
pub fn step_size_bound(config: &NetworkConfig) -> f64 {
    config
        .caches
        .iter()
        .flat_map(|c| [c.cache_cost.constants().m, c.root_cost.constants().m])
        .fold(f64::INFINITY, f64::min)
}

impl DualState {
    /// Builds the initial state for `files` catalog entries.
    ///
    /// `mu = None` picks half the step-size bound. The per-cache row cap is
    /// Δ_i = max{L_c, L_r}·(C^c_i + C^r_i) + F·max{c'(0), r'(0)}.
    pub fn init(
        config: &NetworkConfig,
        files: usize,
        mu: Option<f64>,
        mode: InitMode,
    ) -> Result<Self, DualError> {
        let m = step_size_bound(config);
        let mu = mu.unwrap_or(0.5 * m);
        if !(mu > 0.0 && mu < m) {
            return Err(DualError::StepSize { mu, m });
        }
        let n = config.cache_count();
        let mut delta_cap = Vec::with_capacity(n);
        let mut floor = Vec::with_capacity(n);
        for spec in &config.caches {
            let cc = spec.cache_cost.constants();
            let rc = spec.root_cost.constants();
            let l = cc.l.max(rc.l);
            delta_cap.push(l * (spec.cache_cap + spec.root_cap) + files as f64 * cc.d0.max(rc.d0));
            floor.push(cc.d0.min(rc.d0));
        }
        let lambda = match mode {
            InitMode::Floor => floor.iter().map(|&f| vec![f; files]).collect(),
            InitMode::UniformCap => {
                let mut rows = Vec::with_capacity(n);
                for i in 0..n {
                    let level = delta_cap[i] / files as f64;
                    if level < floor[i] {
                        return Err(DualError::UniformCapInfeasible {
                            cache: i,
                            value: level,
                            limit: floor[i],
                        });
                    }
                    rows.push(vec![level; files]);
                }
                rows
            }
            InitMode::Custom(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != files) {
                    return Err(DualError::InitShape {
                        rows: rows.len(),
                        cols: rows.first().map_or(0, Vec::len),
                        want_rows: n,
                        want_cols: files,
                    });
                }
                for (i, row) in rows.iter().enumerate() {
                    if let Some(&low) = row.iter().find(|&&v| v < floor[i]) {
                        return Err(DualError::InitBounds {
                            cache: i,
                            bound: "per-entry floor",
                            value: low,
                            limit: floor[i],
                        });
                    }
                    let sum: f64 = row.iter().sum();
                    if sum > delta_cap[i] + 1e-12 * delta_cap[i].abs().max(1.0) {
                        return Err(DualError::InitBounds {
                            cache: i,
                            bound: "row-sum cap",
                            value: sum,
                            limit: delta_cap[i],
                        });
                    }
                }
                rows
            }
        };
        Ok(DualState { lambda, mu, delta_cap, floor, t: 0 })
    }

    pub fn lambda(&self) -> &[Vec<f64>] {
        &self.lambda
    }

    pub fn row(&self, cache: usize) -> &[f64] {
        &self.lambda[cache]
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn cache_count(&self) -> usize {
        self.lambda.len()
    }

    pub fn file_count(&self) -> usize {
        self.lambda.first().map_or(0, Vec::len)
    }

    pub fn floor(&self, cache: usize) -> f64 {
        self.floor[cache]
    }

    pub fn row_sum_cap(&self, cache: usize) -> f64 {
        self.delta_cap[cache]
    }

    /// Solves the per-cache, per-link subproblems at the current prices.
    pub fn primal_step(
        &self,
        config: &NetworkConfig,
        delta: f64,
    ) -> Result<AnticipatedFlows, SubproblemError> {
        let mut x = Vec::with_capacity(self.lambda.len());
        let mut y = Vec::with_capacity(self.lambda.len());
        for (row, spec) in self.lambda.iter().zip(&config.caches) {
            let cache_sol = subproblem::solve(
                &SubproblemInstance {
                    prices: row.clone(),
                    capacity: spec.cache_cap,
                    penalty: spec.cache_cost,
                },
                delta,
            )?;
            let root_sol = subproblem::solve(
                &SubproblemInstance {
                    prices: row.clone(),
                    capacity: spec.root_cap,
                    penalty: spec.root_cost,
                },
                delta,
            )?;
            x.push(cache_sol.flows);
            y.push(root_sol.flows);
        }
        Ok(AnticipatedFlows { x, y })
    }

    /// One price update against the interval's accumulated demand. Bound
    /// violations are counted, never corrected.
    pub fn dual_step(
        &mut self,
        flows: &AnticipatedFlows,
        demand: &DemandMatrix,
    ) -> StepDiagnostics {
        assert_eq!(flows.x.len(), self.lambda.len());
        assert_eq!(demand.d.len(), self.lambda.len());
        let mut diag = StepDiagnostics::default();
        for i in 0..self.lambda.len() {
            assert_eq!(flows.x[i].len(), self.lambda[i].len());
            assert_eq!(demand.d[i].len(), self.lambda[i].len());
            let mut row_sum = 0.0;
            for f in 0..self.lambda[i].len() {
                let residual = flows.x[i][f] + flows.y[i][f] - demand.d[i][f];
                self.lambda[i][f] -= self.mu * residual;
                if self.lambda[i][f] < self.floor[i] - 1e-9 {
                    diag.floor_violations += 1;
                }
                row_sum += self.lambda[i][f];
            }
            if row_sum > self.delta_cap[i] + 1e-9 {
                diag.row_sum_violations += 1;
            }
        }
        self.t += 1;
        diag
    }

    /// Snapshot as `cache_id,file_id,lambda` CSV for post-hoc analysis.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "cache_id,file_id,lambda")?;
        for (i, row) in self.lambda.iter().enumerate() {
            for (f, v) in row.iter().enumerate() {
                writeln!(out, "{i},{f},{v}")?;
            }
        }
        Ok(())
    }
}

/// Running history of dual steps, accumulated in O(N·F) memory: enough to
/// report the time-averaged constraint residual (which telescopes to
/// (λ(0) − λ(T))/(μT)) and the gradient-norm proxy
/// (2/T)·sqrt(Σ_{i,f,t} (λ_if(t) − λ̄_if)²) built from running first and
/// second moments of the iterates.
#[derive(Debug, Clone, PartialEq)]
pub struct DualTrace {
    residual_sum: Vec<Vec<f64>>,
    lambda_sum: Vec<Vec<f64>>,
    lambda_sq_sum: Vec<Vec<f64>>,
    steps: usize,
}

impl DualTrace {
    pub fn new(caches: usize, files: usize) -> Self {
        DualTrace {
            residual_sum: vec![vec![0.0; files]; caches],
            lambda_sum: vec![vec![0.0; files]; caches],
            lambda_sq_sum: vec![vec![0.0; files]; caches],
            steps: 0,
        }
    }

    /// Record one step; call right after [`DualState::dual_step`] with the
    /// same flows and demand, so the stored iterate is λ(t+1).
    pub fn record(&mut self, state: &DualState, flows: &AnticipatedFlows, demand: &DemandMatrix) {
        for i in 0..self.residual_sum.len() {
            for f in 0..self.residual_sum[i].len() {
                self.residual_sum[i][f] += flows.x[i][f] + flows.y[i][f] - demand.d[i][f];
                let l = state.lambda[i][f];
                self.lambda_sum[i][f] += l;
                self.lambda_sq_sum[i][f] += l * l;
            }
        }
        self.steps += 1;
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// |1/T Σ_t (x̂+ŷ−d)_if| per entry.
    pub fn avg_residual(&self) -> Result<Vec<Vec<f64>>, DualError> {
        if self.steps == 0 {
            return Err(DualError::EmptyHistory);
        }
        let t = self.steps as f64;
        Ok(self
            .residual_sum
            .iter()
            .map(|row| row.iter().map(|r| (r / t).abs()).collect())
            .collect())
    }

    /// Largest per-entry time-averaged residual.
    pub fn max_avg_residual(&self) -> Result<f64, DualError> {
        Ok(self
            .avg_residual()?
            .iter()
            .flatten()
            .fold(0.0f64, |a, &b| a.max(b)))
    }

    /// (2/T)·sqrt(Σ_{i,f,t} (λ_if(t) − λ̄_if)²) with λ̄ the per-entry mean
    /// over the recorded steps.
    pub fn gradient_norm_proxy(&self) -> Result<f64, DualError> {
        if self.steps == 0 {
            return Err(DualError::EmptyHistory);
        }
        let t = self.steps as f64;
        let mut total = 0.0;
        for i in 0..self.lambda_sum.len() {
            for f in 0..self.lambda_sum[i].len() {
                let mean = self.lambda_sum[i][f] / t;
                // Σ(λ−λ̄)² = Σλ² − T·λ̄², accumulated without storing history.
                total += (self.lambda_sq_sum[i][f] - t * mean * mean).max(0.0);
            }
        }
        Ok(2.0 / t * total.sqrt())
    }
}
