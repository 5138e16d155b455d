//! Per-cache capacitated flow subproblem.
//!
//! Given shadow prices λ over the catalog, each cache independently solves
//!
//! ```text
//! minimize   Σ_f h(u_f) − λᵀu    subject to   u ≥ 0,  Σ_f u_f ≤ C
//! ```
//!
//! The optimum has the water-filling form û_f = [g_f(υ̂)]₊ with
//! g_f(z) = h'⁻¹(λ_f − z) and a level υ̂ ≥ 0 that is zero when the capacity
//! constraint is slack. Two backends: an exact sorted water-filling pass for
//! families with affine marginal cost, and monotone bisection over υ̂ for the
//! rest (O(F·log(1/δ))).

use crate::penalty::Penalty;
use thiserror::Error;

/// One cache's pricing problem: prices per file, a volume budget, a cost.
#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemInstance {
    pub prices: Vec<f64>,
    pub capacity: f64,
    pub penalty: Penalty,
}

/// Solver output; `flows` has one entry per price.
#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemSolution {
    pub flows: Vec<f64>,
    /// Water level υ̂ ≥ 0 on the capacity constraint.
    pub multiplier: f64,
    /// Whether the budget is exhausted (Σ flows = C up to tolerance).
    pub saturated: bool,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SubproblemError {
    #[error("price vector is empty")]
    EmptyPrices,
    #[error("price[{index}] = {value} is not finite")]
    NonFinitePrice { index: usize, value: f64 },
    #[error("capacity {capacity} must be positive and finite")]
    InvalidCapacity { capacity: f64 },
    #[error("tolerance {delta} must be positive")]
    InvalidTolerance { delta: f64 },
}

/// Pre-clamp water-filling coordinate g_f(z) = h'⁻¹(λ_f − z).
///
/// Where the inverse marginal cost is undefined (λ_f − z below h'(0)) this
/// returns the real negative pre-image for affine-marginal families and −∞
/// otherwise; callers only ever use the positive part, which is 0 either way.
pub fn g(penalty: &Penalty, lambda_f: f64, z: f64) -> f64 {
    let target = lambda_f - z;
    match penalty.inv_deriv(target) {
        Ok(x) => x,
        Err(_) => match penalty.affine_marginal() {
            Some((d0, slope)) => (target - d0) / slope,
            None => f64::NEG_INFINITY,
        },
    }
}

/// Solves the subproblem to per-coordinate accuracy `delta`.
pub fn solve(
    inst: &SubproblemInstance,
    delta: f64,
) -> Result<SubproblemSolution, SubproblemError> {
    if inst.prices.is_empty() {
        return Err(SubproblemError::EmptyPrices);
    }
    if let Some((index, &value)) = inst
        .prices
        .iter()
        .enumerate()
        .find(|(_, p)| !p.is_finite())
    {
        return Err(SubproblemError::NonFinitePrice { index, value });
    }
    if !(inst.capacity > 0.0 && inst.capacity.is_finite()) {
        return Err(SubproblemError::InvalidCapacity {
            capacity: inst.capacity,
        });
    }
    if !(delta > 0.0) {
        return Err(SubproblemError::InvalidTolerance { delta });
    }
    Ok(solve_checked(inst, delta, false))
}

/// Core solver; `force_bisection` is a test hook for backend agreement.
fn solve_checked(inst: &SubproblemInstance, delta: f64, force_bisection: bool) -> SubproblemSolution {
    let unconstrained: Vec<f64> = inst
        .prices
        .iter()
        .map(|&l| g(&inst.penalty, l, 0.0).max(0.0))
        .collect();
    let total: f64 = unconstrained.iter().sum();
    if total <= inst.capacity {
        let saturated = inst.capacity - total <= 1e-12 * inst.capacity.max(1.0);
        return SubproblemSolution {
            flows: unconstrained,
            multiplier: 0.0,
            saturated,
        };
    }

    let affine = if force_bisection {
        None
    } else {
        inst.penalty.affine_marginal()
    };
    let level = match affine {
        Some((d0, slope)) => water_fill_level(&inst.prices, inst.capacity, d0, slope),
        None => bisect_level(inst, delta),
    };
    let flows = inst
        .prices
        .iter()
        .map(|&l| g(&inst.penalty, l, level).max(0.0))
        .collect();
    SubproblemSolution {
        flows,
        multiplier: level,
        saturated: true,
    }
}

/// Exact water level for affine marginal cost h'(x) = d0 + slope·x.
///
/// With the active set A = {f : λ_f − υ > d0}, feasibility at equality gives
/// υ = (Σ_{f∈A}(λ_f − d0) − slope·C)/|A|. Scanning prices in descending
/// order, the active set is the longest prefix whose members all clear their
/// own level; each extension either keeps the prefix consistent or stops th
/// scan for good.
fn water_fill_level(prices: &[f64], capacity: f64, d0: f64, slope: f64) -> f64 {
    let mut order: Vec<usize> = (0..prices.len()).filter(|&f| prices[f] > d0).collect();
    order.sort_by(|&a, &b| {
        prices[b]
            .partial_cmp(&prices[a])
            .expect("prices validated finite")
            .then(a.cmp(&b))
    });
    let mut prefix = 0.0;
    let mut level = 0.0;
    for (k, &f) in order.iter().enumerate() {
        prefix += prices[f] - d0;
        let candidate = (prefix - slope * capacity) / (k as f64 + 1.0);
        if prices[f] - d0 > candidate {
            level = candidate;
        } else {
            break;
        }
    }
    level
}

/// Bisection on υ for general penalties. ρ(υ) = Σ_f [g_f(υ)]₊ is continuous
/// and non-increasing, with ρ(0) > C (checked by the caller) and ρ = 0 at
/// max λ_f − h'(0). The bracket stop is scaled so that both the flow error
/// (≤ step/m per coordinate) and the complementary-slackness product stay
/// within `delta`.
fn bisect_level(inst: &SubproblemInstance, delta: f64) -> f64 {
    let cons = inst.penalty.constants();
    let z_max = inst
        .prices
        .iter()
        .fold(f64::NEG_INFINITY, |a, &b| a.max(b))
        - cons.d0;
    debug_assert!(z_max > 0.0, "saturated branch requires some positive flow");
    let rho = |z: f64| -> f64 {
        inst.prices
            .iter()
            .map(|&l| g(&inst.penalty, l, z).max(0.0))
            .sum()
    };
    let tol = delta * cons.m / (inst.prices.len() as f64 * z_max.max(1.0));
    let mut lo = 0.0;
    let mut hi = z_max;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if rho(mid) > inst.capacity {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // The upper end keeps ρ(υ̂) ≤ C, so the flows never overshoot the budget.
    hi
}

/// Max KKT residual of a candidate solution: capacity and sign violations,
/// the complementary-slackness product, and per-file stationarity
/// h'(û_f) − λ_f + υ̂ − ξ̂_f, where the nonnegativity multiplier
/// ξ̂_f = [h'(0) − λ_f + υ̂]₊ is recovered for clamped coordinates.
/// Zero at the exact optimum.
pub fn verify_kkt(inst: &SubproblemInstance, sol: &SubproblemSolution) -> f64 {
    let d0 = inst.penalty.constants().d0;
    let total: f64 = sol.flows.iter().sum();
    let mut residual = (total - inst.capacity).max(0.0);
    residual = residual.max(-sol.multiplier);
    residual = residual.max((sol.multiplier * (total - inst.capacity)).abs());
    for (f, &u) in sol.flows.iter().enumerate() {
        residual = residual.max(-u);
        let xi = if u <= 0.0 {
            (d0 - inst.prices[f] + sol.multiplier).max(0.0)
        } else {
            0.0
        };
        let stationarity =
            inst.penalty.deriv_extended(u.max(0.0)) - inst.prices[f] + sol.multiplier - xi;
        residual = residual.max(stationarity.abs());
    }
    residual.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penalty::PenaltyFamily;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn quad(a: f64) -> Penalty {
        Penalty::new(PenaltyFamily::Quadratic { a, b: 0.0 }, 100.0).unwrap()
    }

    fn inst(prices: Vec<f64>, capacity: f64, penalty: Penalty) -> SubproblemInstance {
        SubproblemInstance { prices, capacity, penalty }
    }

    // ---- independent brute-force oracle --------------------------------

    /// Closed-form [h'⁻¹(g)]₊ per family, written from the formulas rather
    /// than through `Penalty::inv_deriv`.
    fn oracle_flow(penalty: &Penalty, gval: f64) -> f64 {
        match penalty.family() {
            PenaltyFamily::Quadratic { a, .. } => (gval / a).max(0.0),
            PenaltyFamily::LinearQuadratic { w } => (gval - w).max(0.0),
            PenaltyFamily::Kleinrock { cap } => {
                if gval <= 1.0 / cap {
                    0.0
                } else {
                    cap - (cap / gval).sqrt()
                }
            }
            PenaltyFamily::Mm1Queue { k, cap, x_max, .. } => {
                if gval <= 0.0 {
                    return 0.0;
                }
                let d_clamp = k * x_max * (2.0 * cap - x_max) / (cap - x_max).powi(2);
                if gval <= d_clamp {
                    cap * (1.0 - (k / (gval + k)).sqrt())
                } else {
                    let h2 = 2.0 * k * cap * cap / (cap - x_max).powi(3);
                    x_max + (gval - d_clamp) / h2
                }
            }
        }
    }

    /// Grid search over the water level at 1e-6 resolution: coarse pass to
    /// bracket the crossing of Σ[g(υ)]₊ = C (valid because the sum is
    /// monotone in υ), then a fine scan inside the bracket.
    fn oracle_solve(inst: &SubproblemInstance) -> (Vec<f64>, f64) {
        let d0 = match inst.penalty.family() {
            PenaltyFamily::Quadratic { .. } | PenaltyFamily::Mm1Queue { .. } => 0.0,
            PenaltyFamily::LinearQuadratic { w } => w,
            PenaltyFamily::Kleinrock { cap } => 1.0 / cap,
        };
        let rho = |z: f64| -> f64 {
            inst.prices
                .iter()
                .map(|&l| oracle_flow(&inst.penalty, l - z))
                .sum()
        };
        let flows_at = |z: f64| -> Vec<f64> {
            inst.prices
                .iter()
                .map(|&l| oracle_flow(&inst.penalty, l - z))
                .collect()
        };
        if rho(0.0) <= inst.capacity {
            return (flows_at(0.0), 0.0);
        }
        let z_max = inst.prices.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - d0;
        let coarse = 10_000usize;
        let step = z_max / coarse as f64;
        let mut bracket_lo = 0.0;
        let mut bracket_hi = z_max;
        for i in 1..=coarse {
            let z = step * i as f64;
            if rho(z) <= inst.capacity {
                bracket_lo = step * (i - 1) as f64;
                bracket_hi = z;
                break;
            }
        }
        let fine = 1e-6;
        let mut z = bracket_lo;
        while z < bracket_hi && rho(z) > inst.capacity {
            z += fine;
        }
        (flows_at(z), z)
    }

    fn random_penalty(rng: &mut StdRng, which: usize) -> Penalty {
        match which {
            0 => Penalty::new(
                PenaltyFamily::Quadratic { a: rng.gen_range(0.5..3.0), b: 0.0 },
                1e6,
            )
            .unwrap(),
            1 => Penalty::new(
                PenaltyFamily::LinearQuadratic { w: rng.gen_range(0.0..1.5) },
                1e6,
            )
            .unwrap(),
            2 => {
                let cap = rng.gen_range(1.5..4.0);
                Penalty::new(PenaltyFamily::Kleinrock { cap }, 0.9 * cap).unwrap()
            }
            _ => {
                let cap = rng.gen_range(2.0..8.0);
                Penalty::new(
                    PenaltyFamily::Mm1Queue {
                        k: rng.gen_range(0.5..2.0),
                        k0: 0.0,
                        cap,
                        x_max: 0.85 * cap,
                    },
                    0.85 * cap,
                )
                .unwrap()
            }
        }
    }

    // ---- tests ----------------------------------------------------------

    #[test]
    fn g_matches_hand_values() {
        assert_eq!(g(&quad(1.0), 3.0, 1.0), 2.0);
        // Price below the zero marginal cost clamps away.
        let lq = Penalty::new(PenaltyFamily::LinearQuadratic { w: 5.0 }, 100.0).unwrap();
        assert!(g(&lq, 3.0, 0.0) <= 0.0);
        let kl = Penalty::new(PenaltyFamily::Kleinrock { cap: 10.0 }, 9.0).unwrap();
        assert!((g(&kl, 0.4, 0.0) - 5.0).abs() < 1e-9);
        assert_eq!(g(&kl, 0.05, 0.0).max(0.0), 0.0);
    }

    #[test]
    fn unconstrained_optimum_kept_when_feasible() {
        let sol = solve(&inst(vec![3.0, 1.0], 5.0, quad(1.0)), 1e-6).unwrap();
        assert_eq!(sol.flows, vec![3.0, 1.0]);
        assert_eq!(sol.multiplier, 0.0);
        assert!(!sol.saturated);
    }

    #[test]
    fn tight_budget_moves_the_level() {
        // Fine-grid oracle on υ ∈ [0, 3] puts the optimum at û=(2,0), υ̂=1.
        let i = inst(vec![3.0, 1.0], 2.0, quad(1.0));
        let sol = solve(&i, 1e-6).unwrap();
        assert!((sol.flows[0] - 2.0).abs() < 1e-9);
        assert!(sol.flows[1].abs() < 1e-9);
        assert!((sol.multiplier - 1.0).abs() < 1e-9);
        assert!(sol.saturated);
        let (of, oz) = oracle_solve(&i);
        assert!((of[0] - 2.0).abs() < 1e-5 && (oz - 1.0).abs() < 2e-4);
    }

    #[test]
    fn negative_price_clamps_to_zero() {
        let sol = solve(&inst(vec![-1.0, 2.0], 10.0, quad(1.0)), 1e-6).unwrap();
        assert_eq!(sol.flows, vec![0.0, 2.0]);
    }

    #[test]
    fn prices_at_or_below_zero_marginal_get_zero_flow() {
        let lq = Penalty::new(PenaltyFamily::LinearQuadratic { w: 1.0 }, 100.0).unwrap();
        let sol = solve(&inst(vec![0.5, 1.0, 4.0], 2.0, lq), 1e-6).unwrap();
        assert_eq!(sol.flows[0], 0.0);
        assert_eq!(sol.flows[1], 0.0);
        assert!(sol.flows[2] > 0.0);
    }

    #[test]
    fn kkt_residual_of_hand_solution_is_zero() {
        let i = inst(vec![3.0, 1.0], 2.0, quad(1.0));
        let sol = SubproblemSolution {
            flows: vec![2.0, 0.0],
            multiplier: 1.0,
            saturated: true,
        };
        assert!(verify_kkt(&i, &sol) < 1e-12);
        // Perturbing the saturated coordinate shows up as a residual ≥ 0.5.
        let bad = SubproblemSolution {
            flows: vec![2.5, 0.0],
            multiplier: 1.0,
            saturated: true,
        };
        assert!(verify_kkt(&i, &bad) >= 0.5);
    }

    #[test]
    fn solver_meets_its_kkt_contract() {
        let mut rng = StdRng::seed_from_u64(21);
        let delta = 1e-6;
        for trial in 0..400 {
            let penalty = random_penalty(&mut rng, trial % 4);
            let f = rng.gen_range(1..=8);
            let prices: Vec<f64> = (0..f).map(|_| rng.gen_range(-2.0..5.0)).collect();
            let capacity = rng.gen_range(0.5..10.0);
            let i = inst(prices, capacity, penalty);
            let sol = solve(&i, delta).unwrap();
            let total: f64 = sol.flows.iter().sum();
            assert!(total <= i.capacity + 1e-9);
            assert!(sol.flows.iter().all(|&u| u >= 0.0));
            let r = verify_kkt(&i, &sol);
            assert!(r <= 10.0 * delta, "trial {trial}: residual {r}");
        }
    }

    #[test]
    fn matches_grid_oracle_across_families() {
        let mut rng = StdRng::seed_from_u64(22);
        for trial in 0..300 {
            let penalty = random_penalty(&mut rng, trial % 4);
            let f = rng.gen_range(1..=8);
            let prices: Vec<f64> = (0..f).map(|_| rng.gen_range(-2.0..5.0)).collect();
            let capacity = rng.gen_range(0.5..10.0);
            let i = inst(prices, capacity, penalty);
            let sol = solve(&i, 1e-6).unwrap();
            let (oracle_flows, _) = oracle_solve(&i);
            for (f_idx, (&got, &want)) in sol.flows.iter().zip(&oracle_flows).enumerate() {
                assert!(
                    (got - want).abs() < 1e-5,
                    "trial {trial} file {f_idx}: got {got} want {want} ({:?})",
                    i.penalty.family()
                );
            }
        }
    }

    #[test]
    fn zero_flow_whenever_price_below_zero_marginal() {
        let mut rng = StdRng::seed_from_u64(23);
        for trial in 0..200 {
            let penalty = random_penalty(&mut rng, trial % 4);
            let d0 = penalty.constants().d0;
            let prices: Vec<f64> = (0..6).map(|_| rng.gen_range(-2.0..5.0)).collect();
            let i = inst(prices, rng.gen_range(0.5..10.0), penalty);
            let sol = solve(&i, 1e-6).unwrap();
            for (f, &l) in i.prices.iter().enumerate() {
                if l <= d0 {
                    assert_eq!(sol.flows[f], 0.0);
                }
            }
        }
    }

    #[test]
    fn saturated_instances_fill_the_budget() {
        let mut rng = StdRng::seed_from_u64(24);
        let delta = 1e-6;
        for trial in 0..200 {
            let penalty = random_penalty(&mut rng, trial % 4);
            let f = rng.gen_range(1..=8);
            let prices: Vec<f64> = (0..f).map(|_| rng.gen_range(2.0..5.0)).collect();
            // Tiny budget forces saturation for these strictly positive prices.
            let i = inst(prices, 0.2, penalty);
            let sol = solve(&i, delta).unwrap();
            if sol.saturated {
                let total: f64 = sol.flows.iter().sum();
                assert!((total - i.capacity).abs() <= delta * f as f64);
            }
        }
    }

    #[test]
    fn raising_one_price_never_lowers_its_flow() {
        let mut rng = StdRng::seed_from_u64(25);
        for trial in 0..200 {
            let penalty = random_penalty(&mut rng, trial % 4);
            let f = rng.gen_range(2..=8);
            let mut prices: Vec<f64> = (0..f).map(|_| rng.gen_range(-2.0..5.0)).collect();
            let capacity = rng.gen_range(0.5..10.0);
            let before = solve(&inst(prices.clone(), capacity, penalty), 1e-8).unwrap();
            let target = rng.gen_range(0..f);
            prices[target] += rng.gen_range(0.1..2.0);
            let after = solve(&inst(prices, capacity, penalty), 1e-8).unwrap();
            assert!(
                after.flows[target] >= before.flows[target] - 1e-7,
                "trial {trial}"
            );
        }
    }

    #[test]
    fn backends_agree_on_quadratics() {
        let mut rng = StdRng::seed_from_u64(26);
        for _ in 0..200 {
            let penalty = quad(rng.gen_range(0.5..3.0));
            let f = rng.gen_range(1..=8);
            let prices: Vec<f64> = (0..f).map(|_| rng.gen_range(-2.0..5.0)).collect();
            let i = inst(prices, rng.gen_range(0.5..10.0), penalty);
            let exact = solve_checked(&i, 1e-8, false);
            let bisected = solve_checked(&i, 1e-8, true);
            for (a, b) in exact.flows.iter().zip(&bisected.flows) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        assert_eq!(
            solve(&inst(vec![], 1.0, quad(1.0)), 1e-6),
            Err(SubproblemError::EmptyPrices)
        );
        assert!(matches!(
            solve(&inst(vec![f64::NAN], 1.0, quad(1.0)), 1e-6),
            Err(SubproblemError::NonFinitePrice { index: 0, .. })
        ));
        assert!(matches!(
            solve(&inst(vec![1.0], 0.0, quad(1.0)), 1e-6),
            Err(SubproblemError::InvalidCapacity { .. })
        ));
        assert!(matches!(
            solve(&inst(vec![1.0], 1.0, quad(1.0)), 0.0),
            Err(SubproblemError::InvalidTolerance { .. })
        ));
    }
}
