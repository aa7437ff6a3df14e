//! Separable Legendre functions `f(x) = Σ ϑ_i(x_i)` and their Bregman
//! distances `D^f(x, y) = f(x) − f(y) − ⟨x − y, ∇f(y)⟩`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// The scalar entropies `ϑ` a coordinate can carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LegendreKind {
    /// `ξ ln ξ − ξ` on `[0, ∞)`; Bregman distance is Kullback–Leibler.
    BoltzmannShannon,
    /// `ξ ln ξ + (1 − ξ) ln(1 − ξ)` on `[0, 1]`.
    FermiDirac,
    /// `−√(1 − ξ²)` on `[−1, 1]`.
    Hellinger,
    /// `−ln ξ` on `(0, ∞)`; Bregman distance is Itakura–Saito.
    Burg,
    /// `ξ²/2`; recovers the Euclidean setting.
    HalfSquare,
}

impl LegendreKind {
    pub const ALL: [LegendreKind; 5] = [
        LegendreKind::BoltzmannShannon,
        LegendreKind::FermiDirac,
        LegendreKind::Hellinger,
        LegendreKind::Burg,
        LegendreKind::HalfSquare,
    ];

    /// Stable identifier used by the problem-file format and CLI.
    pub fn name(self) -> &'static str {
        match self {
            LegendreKind::BoltzmannShannon => "boltzmann_shannon",
            LegendreKind::FermiDirac => "fermi_dirac",
            LegendreKind::Hellinger => "hellinger",
            LegendreKind::Burg => "burg",
            LegendreKind::HalfSquare => "half_square",
        }
    }

    /// Open interval `int dom ϑ`.
    pub fn interior(self) -> (f64, f64) {
        match self {
            LegendreKind::BoltzmannShannon | LegendreKind::Burg => (0.0, f64::INFINITY),
            LegendreKind::FermiDirac => (0.0, 1.0),
            LegendreKind::Hellinger => (-1.0, 1.0),
            LegendreKind::HalfSquare => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn in_domain(self, t: f64) -> bool {
        match self {
            LegendreKind::BoltzmannShannon => t >= 0.0,
            LegendreKind::FermiDirac => (0.0..=1.0).contains(&t),
            LegendreKind::Hellinger => (-1.0..=1.0).contains(&t),
            LegendreKind::Burg => t > 0.0,
            LegendreKind::HalfSquare => t.is_finite(),
        }
    }

    pub fn in_interior(self, t: f64) -> bool {
        let (a, b) = self.interior();
        t > a && t < b
    }

    /// Whether `dom ϑ* = ℝ`.
    pub fn is_cofinite(self) -> bool {
        !matches!(self, LegendreKind::Burg)
    }

    pub fn conj_in_interior(self, s: f64) -> bool {
        match self {
            LegendreKind::Burg => s < 0.0,
            _ => s.is_finite(),
        }
    }

    /// `ϑ(t)`, `+∞` outside the domain, with `0 ln 0 = 0`.
    pub fn value(self, t: f64) -> f64 {
        if !self.in_domain(t) {
            return f64::INFINITY;
        }
        match self {
            LegendreKind::BoltzmannShannon => xlogx(t) - t,
            LegendreKind::FermiDirac => xlogx(t) + xlogx(1.0 - t),
            LegendreKind::Hellinger => -((1.0 - t) * (1.0 + t)).sqrt(),
            LegendreKind::Burg => -t.ln(),
            LegendreKind::HalfSquare => 0.5 * t * t,
        }
    }

    /// `ϑ′(t)` on the interior.
    pub fn deriv(self, t: f64) -> Result<f64> {
        if !self.in_interior(t) {
            return Err(Error::domain(format!(
                "{} gradient undefined at {t}",
                self.name()
            )));
        }
        Ok(self.deriv_unchecked(t))
    }

    pub(crate) fn deriv_unchecked(self, t: f64) -> f64 {
        match self {
            LegendreKind::BoltzmannShannon => t.ln(),
            LegendreKind::FermiDirac => (t / (1.0 - t)).ln(),
            LegendreKind::Hellinger => t / ((1.0 - t) * (1.0 + t)).sqrt(),
            LegendreKind::Burg => -1.0 / t,
            LegendreKind::HalfSquare => t,
        }
    }

    /// `ϑ″(t)` on the interior.
    pub(crate) fn second_deriv_unchecked(self, t: f64) -> f64 {
        match self {
            LegendreKind::BoltzmannShannon => 1.0 / t,
            LegendreKind::FermiDirac => 1.0 / (t * (1.0 - t)),
            LegendreKind::Hellinger => ((1.0 - t) * (1.0 + t)).powf(-1.5),
            LegendreKind::Burg => 1.0 / (t * t),
            LegendreKind::HalfSquare => 1.0,
        }
    }

    /// `(ϑ*)′(s)`, the inverse of `ϑ′`.
    pub fn conj_deriv(self, s: f64) -> Result<f64> {
        if !self.conj_in_interior(s) {
            return Err(Error::domain(format!(
                "{} conjugate gradient undefined at {s}",
                self.name()
            )));
        }
        Ok(self.conj_deriv_unchecked(s))
    }

    pub(crate) fn conj_deriv_unchecked(self, s: f64) -> f64 {
        match self {
            LegendreKind::BoltzmannShannon => s.exp(),
            LegendreKind::FermiDirac => {
                if s >= 0.0 {
                    1.0 / (1.0 + (-s).exp())
                } else {
                    let e = s.exp();
                    e / (1.0 + e)
                }
            }
            LegendreKind::Hellinger => s / 1f64.hypot(s),
            LegendreKind::Burg => -1.0 / s,
            LegendreKind::HalfSquare => s,
        }
    }

    /// Scalar Bregman distance `ϑ(x) − ϑ(y) − (x − y)ϑ′(y)`.
    ///
    /// `+∞` when `y ∉ int dom ϑ` or `x ∉ dom ϑ`. Uses ratio forms for the
    /// logarithmic kinds so that nearby arguments do not cancel badly.
    pub fn bregman(self, x: f64, y: f64) -> f64 {
        if !self.in_interior(y) || !self.in_domain(x) {
            return f64::INFINITY;
        }
        let d = match self {
            LegendreKind::BoltzmannShannon => {
                if x == 0.0 {
                    y
                } else {
                    x * (x / y).ln() - x + y
                }
            }
            LegendreKind::FermiDirac => {
                let a = if x == 0.0 { 0.0 } else { x * (x / y).ln() };
                let b = if x == 1.0 {
                    0.0
                } else {
                    (1.0 - x) * ((1.0 - x) / (1.0 - y)).ln()
                };
                a + b
            }
            LegendreKind::Burg => {
                let r = x / y;
                r - r.ln() - 1.0
            }
            LegendreKind::HalfSquare => 0.5 * (x - y) * (x - y),
            LegendreKind::Hellinger => {
                self.value(x) - self.value(y) - (x - y) * self.deriv_unchecked(y)
            }
        };
        d.max(0.0)
    }
}

fn xlogx(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t * t.ln()
    }
}

impl fmt::Display for LegendreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LegendreKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LegendreKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::param(format!("unknown legendre kind '{s}'")))
    }
}

/// A separable Legendre function on `ℝ^m`, one [`LegendreKind`] per
/// coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct Legendre {
    coords: Vec<LegendreKind>,
    margin: f64,
}

impl Legendre {
    pub fn new(coords: Vec<LegendreKind>) -> Self {
        Legendre {
            coords,
            margin: 0.0,
        }
    }

    pub fn uniform(kind: LegendreKind, dim: usize) -> Self {
        Legendre::new(vec![kind; dim])
    }

    /// Shrinks the interior test by `margin` on each finite side.
    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin.max(0.0);
        self
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn kinds(&self) -> &[LegendreKind] {
        &self.coords
    }

    /// Whether every coordinate's scalar function is cofinite.
    pub fn is_cofinite(&self) -> bool {
        self.coords.iter().all(|k| k.is_cofinite())
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.coords.len() {
            return Err(Error::DimensionMismatch {
                expected: self.coords.len(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn in_domain(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && self.coords.iter().zip(x).all(|(k, &t)| k.in_domain(t))
    }

    pub fn in_interior(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && self.coords.iter().zip(x).all(|(k, &t)| {
                let (a, b) = k.interior();
                t > a + self.margin && t < b - self.margin
            })
    }

    /// Index of the first coordinate outside the interior, if any.
    pub fn first_non_interior(&self, x: &[f64]) -> Option<usize> {
        self.coords.iter().zip(x).position(|(k, &t)| {
            let (a, b) = k.interior();
            !(t > a + self.margin && t < b - self.margin)
        })
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.coords.iter().zip(x).map(|(k, &t)| k.value(t)).sum())
    }

    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        if let Some(i) = self.first_non_interior(x) {
            return Err(Error::domain(format!(
                "coordinate {i} = {} is outside int dom {}",
                x[i], self.coords[i]
            )));
        }
        Ok(self
            .coords
            .iter()
            .zip(x)
            .map(|(k, &t)| k.deriv_unchecked(t))
            .collect())
    }

    pub fn conj_grad(&self, xstar: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(xstar)?;
        self.coords
            .iter()
            .zip(xstar)
            .map(|(k, &s)| k.conj_deriv(s))
            .collect()
    }

    /// `D^f(x, y)`, the sum of the coordinate distances.
    pub fn bregman(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        if !self.in_interior(y) {
            return Ok(f64::INFINITY);
        }
        Ok(self
            .coords
            .iter()
            .zip(x.iter().zip(y))
            .map(|(k, (&a, &b))| k.bregman(a, b))
            .sum())
    }
}
