//! Convex link-cost functions and their calculus.
//!
//! A [`Penalty`] wraps one of four strictly convex cost families h(x) together
//! with the interval `[0, domain_max]` on which its curvature constants are
//! reported. The optimizer only ever touches a penalty through four
//! operations: `eval`, `deriv`, `inv_deriv` (the inverse marginal cost), and
//! `constants` (strong-convexity modulus `m`, derivative Lipschitz constant
//! `L`, and the marginal cost at zero `d0 = h'(0)`).

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from constructing or evaluating a cost function.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PenaltyError {
    /// A family parameter violates its constraint (e.g. a non-positive scale).
    #[error("penalty parameter {name} = {value} violates `{constraint}`")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },
    /// Input outside `[0, domain_max]`.
    #[error("x = {x} outside the cost domain [0, {domain_max}]")]
    OutOfDomain { x: f64, domain_max: f64 },
    /// `inv_deriv` called with a marginal cost below h'(0); callers implement
    /// the `[.]_+` clamp themselves, so this signals a logic error.
    #[error("marginal cost {g} is below h'(0) = {d0}; clamp to zero volume instead")]
    BelowDerivativeRange { g: f64, d0: f64 },
}

/// The four supported cost families.
///
/// Serialized form uses the config-file names: `quadratic`, `linquad`,
/// `kleinrock`, `mm1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum PenaltyFamily {
    /// h(x) = (a/2)x² + b. Marginal cost h'(x) = ax.
    Quadratic {
        a: f64,
        #[serde(default)]
        b: f64,
    },
    /// h(x) = wx + x²/2. Marginal cost h'(x) = w + x.
    #[serde(rename = "linquad")]
    LinearQuadratic { w: f64 },
    /// h(x) = x/(cap − x): average delay on a link with capacity `cap`.
    Kleinrock { cap: f64 },
    /// h(x) = k·x²/(cap − x) + k0, clamped at `x_max < cap` and continued
    /// beyond it by its second-order Taylor expansion so the derivative stays
    /// Lipschitz on any bounded interval.
    #[serde(rename = "mm1")]
    Mm1Queue {
        k: f64,
        #[serde(default)]
        k0: f64,
        cap: f64,
        x_max: f64,
    },
}

/// Curvature constants of a penalty on `[0, domain_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyConstants {
    /// Strong-convexity modulus: min of h'' over the domain.
    pub m: f64,
    /// Lipschitz constant of h': max of h'' over the domain.
    pub l: f64,
    /// Marginal cost at zero, h'(0).
    pub d0: f64,
}

/// A validated cost function on `[0, domain_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Penalty {
    family: PenaltyFamily,
    domain_max: f64,
}

impl Penalty {
    /// Validates parameters and the domain, rejecting any configuration whose
    /// curvature constants would be non-finite or zero.
    pub fn new(family: PenaltyFamily, domain_max: f64) -> Result<Self, PenaltyError> {
        let param = |name, value, ok, constraint| {
            if ok {
                Ok(())
            } else {
                Err(PenaltyError::InvalidParameter {
                    name,
                    value,
                    constraint,
                })
            }
        };
        param(
            "domain_max",
            domain_max,
            domain_max > 0.0 && domain_max.is_finite(),
            "domain_max > 0",
        )?;
        match family {
            PenaltyFamily::Quadratic { a, b } => {
                param("a", a, a > 0.0 && a.is_finite(), "a > 0")?;
                param("b", b, b >= 0.0, "b >= 0")?;
            }
            PenaltyFamily::LinearQuadratic { w } => {
                param("w", w, w >= 0.0 && w.is_finite(), "w >= 0")?;
            }
            PenaltyFamily::Kleinrock { cap } => {
                param("cap", cap, cap > 0.0 && cap.is_finite(), "cap > 0")?;
                // h'' blows up at cap, so the reported L must stop short of it.
                param(
                    "domain_max",
                    domain_max,
                    domain_max < cap,
                    "domain_max < cap",
                )?;
            }
            PenaltyFamily::Mm1Queue { k, k0, cap, x_max } => {
                param("k", k, k > 0.0 && k.is_finite(), "k > 0")?;
                param("k0", k0, k0 >= 0.0, "k0 >= 0")?;
                param("cap", cap, cap > 0.0 && cap.is_finite(), "cap > 0")?;
                param("x_max", x_max, x_max > 0.0 && x_max < cap, "0 < x_max < cap")?;
            }
        }
        Ok(Penalty { family, domain_max })
    }

    pub fn family(&self) -> PenaltyFamily {
        self.family
    }

    pub fn domain_max(&self) -> f64 {
        self.domain_max
    }

    /// h(x) for x in `[0, domain_max]`.
    pub fn eval(&self, x: f64) -> Result<f64, PenaltyError> {
        self.check_domain(x)?;
        Ok(self.eval_raw(x))
    }

    /// h(x) without the `domain_max` cap, for metric accounting on realized
    /// flows that may exceed the interval the constants were computed on.
    /// Quadratic families and the clamped queue are valid for every x ≥ 0;
    /// `Kleinrock` returns infinity at or above its capacity.
    pub fn eval_extended(&self, x: f64) -> f64 {
        debug_assert!(x >= 0.0, "flows are nonnegative");
        self.eval_raw(x)
    }

    /// h'(x) for x in `[0, domain_max]`.
    pub fn deriv(&self, x: f64) -> Result<f64, PenaltyError> {
        self.check_domain(x)?;
        Ok(self.deriv_raw(x))
    }

    /// h'(x) without the `domain_max` cap; see [`Penalty::eval_extended`].
    pub fn deriv_extended(&self, x: f64) -> f64 {
        debug_assert!(x >= 0.0, "flows are nonnegative");
        self.deriv_raw(x)
    }

    /// Inverse marginal cost: the x ≥ 0 with h'(x) = g.
    ///
    /// Inversion is unrestricted above (it may return x > `domain_max`;
    /// callers cap with their own capacity constraints) but errors for
    /// g < h'(0), where no nonnegative preimage exists.
    pub fn inv_deriv(&self, g: f64) -> Result<f64, PenaltyError> {
        let d0 = self.d0();
        if g < d0 {
            return Err(PenaltyError::BelowDerivativeRange { g, d0 });
        }
        Ok(match self.family {
            PenaltyFamily::Quadratic { a, .. } => g / a,
            PenaltyFamily::LinearQuadratic { w } => g - w,
            PenaltyFamily::Kleinrock { cap } => {
                // h' is unbounded as x -> cap: tighten the upper bracket
                // toward cap until it encloses g, then bisect.
                let mut hi = 0.5 * cap;
                while self.deriv_raw(hi) < g {
                    hi = cap - 0.5 * (cap - hi);
                }
                self.bisect_deriv(g, 0.0, hi)
            }
            PenaltyFamily::Mm1Queue { k, cap, x_max, .. } => {
                let d_clamp = self.deriv_raw(x_max);
                if g <= d_clamp {
                    self.bisect_deriv(g, 0.0, x_max)
                } else {
                    // Affine continuation beyond the clamp inverts in closed
                    // form with slope h''(x_max).
                    let h2 = 2.0 * k * cap * cap / (cap - x_max).powi(3);
                    x_max + (g - d_clamp) / h2
                }
            }
        })
    }

    /// Curvature constants (m, L) on `[0, domain_max]` and d0 = h'(0).
    pub fn constants(&self) -> PenaltyConstants {
        match self.family {
            PenaltyFamily::Quadratic { a, .. } => PenaltyConstants { m: a, l: a, d0: 0.0 },
            PenaltyFamily::LinearQuadratic { w } => PenaltyConstants { m: 1.0, l: 1.0, d0: w },
            PenaltyFamily::Kleinrock { cap } => {
                // h''(x) = 2·cap/(cap − x)³ is increasing: extremes sit at the
                // interval ends.
                let h2 = |x: f64| 2.0 * cap / (cap - x).powi(3);
                PenaltyConstants {
                    m: h2(0.0),
                    l: h2(self.domain_max),
                    d0: 1.0 / cap,
                }
            }
            PenaltyFamily::Mm1Queue { k, cap, x_max, .. } => {
                // h''(x) = 2k·cap²/(cap − x)³ up to the clamp, constant after.
                let h2 = |x: f64| 2.0 * k * cap * cap / (cap - x).powi(3);
                PenaltyConstants {
                    m: h2(0.0),
                    l: h2(self.domain_max.min(x_max)),
                    d0: 0.0,
                }
            }
        }
    }

    /// `(d0, slope)` when the marginal cost is globally affine,
    /// h'(x) = d0 + slope·x. The capacitated solver has an exact sorted
    /// water-filling backend for these families.
    pub fn affine_marginal(&self) -> Option<(f64, f64)> {
        match self.family {
            PenaltyFamily::Quadratic { a, .. } => Some((0.0, a)),
            PenaltyFamily::LinearQuadratic { w } => Some((w, 1.0)),
            _ => None,
        }
    }

    fn check_domain(&self, x: f64) -> Result<(), PenaltyError> {
        if x < 0.0 || x > self.domain_max || !x.is_finite() {
            Err(PenaltyError::OutOfDomain {
                x,
                domain_max: self.domain_max,
            })
        } else {
            Ok(())
        }
    }

    fn d0(&self) -> f64 {
        match self.family {
            PenaltyFamily::Quadratic { .. } => 0.0,
            PenaltyFamily::LinearQuadratic { w } => w,
            PenaltyFamily::Kleinrock { cap } => 1.0 / cap,
            PenaltyFamily::Mm1Queue { .. } => 0.0,
        }
    }

    fn eval_raw(&self, x: f64) -> f64 {
        match self.family {
            PenaltyFamily::Quadratic { a, b } => 0.5 * a * x * x + b,
            PenaltyFamily::LinearQuadratic { w } => w * x + 0.5 * x * x,
            PenaltyFamily::Kleinrock { cap } => {
                if x >= cap {
                    f64::INFINITY
                } else {
                    x / (cap - x)
                }
            }
            PenaltyFamily::Mm1Queue { k, k0, cap, x_max } => {
                if x <= x_max {
                    k * x * x / (cap - x) + k0
                } else {
                    // Quadratic continuation: matches value, slope, and
                    // curvature at the clamp point.
                    let h = k * x_max * x_max / (cap - x_max) + k0;
                    let d1 = k * x_max * (2.0 * cap - x_max) / (cap - x_max).powi(2);
                    let d2 = 2.0 * k * cap * cap / (cap - x_max).powi(3);
                    let t = x - x_max;
                    h + d1 * t + 0.5 * d2 * t * t
                }
            }
        }
    }

    fn deriv_raw(&self, x: f64) -> f64 {
        match self.family {
            PenaltyFamily::Quadratic { a, .. } => a * x,
            PenaltyFamily::LinearQuadratic { w } => w + x,
            PenaltyFamily::Kleinrock { cap } => {
                if x >= cap {
                    f64::INFINITY
                } else {
                    cap / (cap - x).powi(2)
                }
            }
            PenaltyFamily::Mm1Queue { k, cap, x_max, .. } => {
                if x <= x_max {
                    k * x * (2.0 * cap - x) / (cap - x).powi(2)
                } else {
                    let d1 = k * x_max * (2.0 * cap - x_max) / (cap - x_max).powi(2);
                    let d2 = 2.0 * k * cap * cap / (cap - x_max).powi(3);
                    d1 + d2 * (x - x_max)
                }
            }
        }
    }

    /// Monotone bisection for h'(x) = g on an enclosing bracket, run to
    /// floating-point exhaustion (well under the 1e-9 round-trip target).
    fn bisect_deriv(&self, g: f64, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.deriv_raw(mid) < g {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-16 * hi.max(1.0) {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}
