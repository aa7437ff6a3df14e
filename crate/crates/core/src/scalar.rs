//! Scalar special functions and bracketed root finding.

use crate::error::{Error, Result};

/// `1/e`, the magnitude of the principal-branch endpoint of Lambert W.
pub const INV_E: f64 = 0.367_879_441_171_442_33;

const HALLEY_MAX_ITER: usize = 50;
const ROOT_MAX_ITER: usize = 500;

/// Default absolute residual tolerance for the root solver.
pub const DEFAULT_TOL: f64 = 1e-12;

/// A closed interval `[lo, hi]` with `lo < hi`, both finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    lo: f64,
    hi: f64,
}

impl Bracket {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::param(format!("bad bracket [{lo}, {hi}]")));
        }
        Ok(Bracket { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }
}

/// Principal branch `W₀` of the Lambert function, the inverse of `w ↦ w·eʷ`
/// on `[−1, ∞)`.
///
/// Halley iteration from a series guess near the branch point, Winitzki's
/// approximation on the middle range and the asymptotic `ln x − ln ln x`
/// guess for large arguments.
pub fn lambert_w0(x: f64) -> Result<f64> {
    if x.is_nan() || x < -INV_E {
        return Err(Error::domain(format!(
            "Lambert W0 requires x >= -1/e, got {x}"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    if x == -INV_E {
        return Ok(-1.0);
    }

    let mut w = if x < -0.25 {
        // e·x + 1 carries the distance to the branch point; fma keeps it.
        let q = std::f64::consts::E.mul_add(x, 1.0).max(0.0);
        let p = (2.0 * q).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if x < 3.0 {
        let l = x.ln_1p();
        l * (1.0 - (1.0 + l).ln() / (2.0 + l))
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };

    for _ in 0..HALLEY_MAX_ITER {
        let ew = w.exp();
        let f = w * ew - x;
        if f == 0.0 {
            break;
        }
        let wp1 = w + 1.0;
        if wp1 <= 0.0 {
            // Only reachable by round-off right at the branch point.
            w = -1.0 + f64::EPSILON;
            continue;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let dw = f / denom;
        w -= dw;
        if dw.abs() <= 4.0 * f64::EPSILON * (1.0 + w.abs()) {
            break;
        }
    }
    Ok(w.max(-1.0))
}

/// `W₀(eˡ)` without forming `eˡ`, so large `l` does not overflow.
///
/// Solves `w + ln w = l` by Newton's method once `eˡ` is out of range.
pub fn lambert_w0_exp(l: f64) -> Result<f64> {
    if l.is_nan() {
        return Err(Error::domain("Lambert W0 of exp(NaN)"));
    }
    if l < 500.0 {
        return lambert_w0(l.exp());
    }
    let mut w = l - l.ln();
    for _ in 0..HALLEY_MAX_ITER {
        let h = w + w.ln() - l;
        let dw = h / (1.0 + 1.0 / w);
        w -= dw;
        if dw.abs() <= 4.0 * f64::EPSILON * w {
            break;
        }
    }
    Ok(w)
}

/// Finds `t ∈ [lo, hi]` with `|g(t) − target| ≤ tol` for a nondecreasing `g`.
///
/// Plain bisection; see [`solve_monotone_newton`] when `g′` is available.
pub fn solve_monotone_scalar<G>(g: G, target: f64, bracket: Bracket, tol: f64) -> Result<f64>
where
    G: Fn(f64) -> f64,
{
    solve_impl(&g, None, target, bracket, tol)
}

/// Same contract as [`solve_monotone_scalar`], accelerated by Newton steps
/// that are accepted only when they land strictly inside the current bracket.
pub fn solve_monotone_newton<G, D>(
    g: G,
    dg: D,
    target: f64,
    bracket: Bracket,
    tol: f64,
) -> Result<f64>
where
    G: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    solve_impl(&g, Some(&dg), target, bracket, tol)
}

fn solve_impl(
    g: &dyn Fn(f64) -> f64,
    dg: Option<&dyn Fn(f64) -> f64>,
    target: f64,
    bracket: Bracket,
    tol: f64,
) -> Result<f64> {
    let (mut lo, mut hi) = (bracket.lo, bracket.hi);
    let r_lo = g(lo) - target;
    let r_hi = g(hi) - target;
    if !(r_lo <= 0.0 && r_hi >= 0.0) {
        return Err(Error::Bracket {
            lo,
            hi,
            g_lo: r_lo + target,
            g_hi: r_hi + target,
            target,
        });
    }
    if r_lo.abs() <= tol {
        return Ok(lo);
    }
    if r_hi.abs() <= tol {
        return Ok(hi);
    }

    let (mut best, mut best_r) = if r_lo.abs() < r_hi.abs() {
        (lo, r_lo.abs())
    } else {
        (hi, r_hi.abs())
    };
    let mut t = 0.5 * (lo + hi);
    let mut prev_r = f64::INFINITY;
    let mut newton_last = false;

    for _ in 0..ROOT_MAX_ITER {
        let r = g(t) - target;
        if r.abs() < best_r {
            best = t;
            best_r = r.abs();
        }
        if r.abs() <= tol {
            return Ok(t);
        }
        if r < 0.0 {
            lo = t;
        } else {
            hi = t;
        }

        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // Bracket is down to adjacent floats: nothing left to refine.
            return Ok(best);
        }

        let stalled = newton_last && r.abs() > 0.5 * prev_r;
        let mut next = mid;
        newton_last = false;
        if let (Some(dg), false) = (dg, stalled) {
            let d = dg(t);
            if d.is_finite() && d > 0.0 {
                let cand = t - r / d;
                if cand > lo && cand < hi {
                    next = cand;
                    newton_last = true;
                }
            }
        }
        prev_r = r.abs();
        t = next;
    }
    Err(Error::NonConvergence {
        iterations: ROOT_MAX_ITER,
        best,
        residual: best_r,
    })
}
