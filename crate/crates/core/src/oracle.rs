//! Brute-force reference computations for tests.
//!
//! Nothing here calls into [`crate::prox`] or [`crate::solver`]: the
//! derivative formulas are written out again so that a mistake in the
//! catalog cannot hide behind the same mistake in its check.

use crate::error::{Error, Result};
use crate::legendre::LegendreKind;
use crate::prox::PhiSpec;

/// Axis-aligned box `Π [lo_i, hi_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl GridBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::param("box bounds must be nonempty and of equal length"));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a.is_finite() && b.is_finite() && a < b)) {
            return Err(Error::param("box needs finite bounds with lo < hi"));
        }
        Ok(GridBox { lo, hi })
    }

    pub fn cube(lo: f64, hi: f64, dim: usize) -> Result<Self> {
        GridBox::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }
}

/// Result of [`grid_refine_minimize`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridMinimum {
    pub point: Vec<f64>,
    pub value: f64,
    /// Grid spacing of the last level, per axis.
    pub pitch: Vec<f64>,
}

pub const MAX_GRID_DIM: usize = 4;

/// Minimizes over successively finer uniform grids.
///
/// Each level evaluates `points_per_axis` points per axis over the current
/// box, then recenters the box on the best point with half-width equal to
/// one grid pitch, clipped to the original box. For a convex objective the
/// minimizer stays inside the refined box. Ties go to the lowest
/// lexicographic grid index.
pub fn grid_refine_minimize<F>(
    objective: F,
    initial: &GridBox,
    levels: usize,
    points_per_axis: usize,
) -> Result<GridMinimum>
where
    F: Fn(&[f64]) -> f64,
{
    let d = initial.dim();
    if d > MAX_GRID_DIM {
        return Err(Error::param(format!(
            "grid oracle supports dimension <= {MAX_GRID_DIM}, got {d}"
        )));
    }
    if points_per_axis < 3 || levels == 0 {
        return Err(Error::param("need >= 3 points per axis and >= 1 level"));
    }
    let n = points_per_axis;
    let mut lo = initial.lo.clone();
    let mut hi = initial.hi.clone();
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut pitch = vec![0.0; d];

    for _ in 0..levels {
        for a in 0..d {
            pitch[a] = (hi[a] - lo[a]) / (n - 1) as f64;
        }
        let mut level_best: Option<(Vec<f64>, f64)> = None;
        let mut idx = vec![0usize; d];
        let total = n.pow(d as u32);
        let mut point = vec![0.0; d];
        for _ in 0..total {
            for a in 0..d {
                point[a] = if idx[a] == n - 1 {
                    hi[a]
                } else {
                    lo[a] + idx[a] as f64 * pitch[a]
                };
            }
            let v = objective(&point);
            if !v.is_nan() && level_best.as_ref().is_none_or(|(_, b)| v < *b) {
                level_best = Some((point.clone(), v));
            }
            // Odometer increment, last axis fastest.
            for a in (0..d).rev() {
                idx[a] += 1;
                if idx[a] < n {
                    break;
                }
                idx[a] = 0;
            }
        }
        let Some((p, v)) = level_best else {
            break;
        };
        if v == f64::INFINITY {
            break;
        }
        if best.as_ref().is_none_or(|(_, b)| v < *b) {
            best = Some((p.clone(), v));
        }
        let center = best.as_ref().map(|(bp, _)| bp.clone()).unwrap_or(p);
        for a in 0..d {
            let half = pitch[a];
            lo[a] = (center[a] - half).max(initial.lo[a]);
            hi[a] = (center[a] + half).min(initial.hi[a]);
            if !(lo[a] < hi[a]) {
                break;
            }
        }
    }

    match best {
        Some((point, value)) => Ok(GridMinimum { point, value, pitch }),
        None => Err(Error::domain("objective is infinite on the whole box")),
    }
}

/// `ϑ′(t)` written out independently of [`LegendreKind`]'s own methods.
fn legendre_slope(kind: LegendreKind, t: f64) -> Option<f64> {
    match kind {
        LegendreKind::BoltzmannShannon if t > 0.0 => Some(t.ln()),
        LegendreKind::FermiDirac if t > 0.0 && t < 1.0 => Some(t.ln() - (1.0 - t).ln()),
        LegendreKind::Hellinger if t > -1.0 && t < 1.0 => Some(t / (1.0 - t * t).sqrt()),
        LegendreKind::Burg if t > 0.0 => Some(-1.0 / t),
        LegendreKind::HalfSquare => Some(t),
        _ => None,
    }
}

/// `∂φ(t)` as a closed interval.
fn phi_subgradient(phi: &PhiSpec, t: f64) -> Option<(f64, f64)> {
    let point = |v: f64| Some((v, v));
    match *phi {
        PhiSpec::Zero => point(0.0),
        PhiSpec::LinearEntropy { omega } if t > 0.0 => point(t.ln() + 1.0 - omega),
        PhiSpec::Power { p } => {
            if t > 0.0 {
                point(t.powf(p - 1.0))
            } else if t < 0.0 {
                point(-(-t).powf(p - 1.0))
            } else if p == 1.0 {
                Some((-1.0, 1.0))
            } else {
                point(0.0)
            }
        }
        PhiSpec::NegPower { p } if t > 0.0 => point(-1.0 / t.powf(p + 1.0)),
        PhiSpec::NegRoot { p } if t > 0.0 => point(-1.0 / t.powf(1.0 - p)),
        PhiSpec::AbsLinear { alpha } => {
            if t > 0.0 {
                point(alpha)
            } else if t < 0.0 {
                point(-alpha)
            } else {
                Some((-alpha, alpha))
            }
        }
        PhiSpec::MirrorEntropy { omega } if t < 1.0 => point(omega - 1.0 - (1.0 - t).ln()),
        PhiSpec::OneMinusLog if t < 1.0 => point(-(1.0 - t).ln()),
        PhiSpec::SelfHellinger if t > -1.0 && t < 1.0 => point(t / (1.0 - t * t).sqrt()),
        PhiSpec::Burg if t > 0.0 => point(-1.0 / t),
        _ => None,
    }
}

/// Distance from `ξ` to `ϑ′(η) + γ∂φ(η)`.
///
/// Zero exactly when `η = Prox^ϑ_{γφ}(ξ)`.
pub fn prox_residual(
    legendre: LegendreKind,
    phi: &PhiSpec,
    gamma: f64,
    xi: f64,
    eta: f64,
) -> Result<f64> {
    let slope = legendre_slope(legendre, eta)
        .ok_or_else(|| Error::domain(format!("eta = {eta} is outside int dom {legendre}")))?;
    let (lo, hi) = phi_subgradient(phi, eta)
        .ok_or_else(|| Error::domain(format!("eta = {eta} is outside dom of the subdifferential of {phi}")))?;
    let (lo, hi) = (slope + gamma * lo, slope + gamma * hi);
    Ok(if xi < lo {
        lo - xi
    } else if xi > hi {
        xi - hi
    } else {
        0.0
    })
}
