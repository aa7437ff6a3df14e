//! Bregman proximity operators
//! `Prox^f_{γφ}(ξ*) = argmin_η γφ(η) + f(η) − ⟨η, ξ*⟩` for separable `f` and `φ`.
//!
//! The operator factorizes over coordinates, so everything reduces to the
//! scalar problem: find `η ∈ int dom ϑ` with `ξ ∈ ϑ′(η) + γ∂φ(η)`. Pairings
//! listed in [`prox_closed_form_table`] are evaluated in closed form, every
//! other pairing goes through [`prox_numeric_scalar`].
//!
//! Two of the closed forms differ from the versions sometimes quoted in the
//! literature and were re-derived from the stationarity condition:
//!
//! * Boltzmann–Shannon with `φ(η) = η ln η − ωη`:
//!   `(1 + γ) ln η = ξ + γ(ω − 1)`, so `η = exp((ξ + γ(ω − 1)) / (γ + 1))`.
//!   The form `exp((ξ + ω − 1)/(γ + 1))` only agrees at `γ = 1`.
//! * Burg with `φ = ϑ`: `−(1 + γ)/η = ξ`, so `η = −(1 + γ)/ξ`.
//!   The form `−ξ/(1 + γ)` only agrees when `ξ² = (1 + γ)²`.

use std::fmt;

use crate::error::{Error, Result};
use crate::legendre::{Legendre, LegendreKind};
use crate::scalar::{lambert_w0_exp, solve_monotone_newton, Bracket};

/// Residual tolerance the numeric fallback solves to.
const NUMERIC_TOL: f64 = 1e-12;
const MAX_EXPANSIONS: usize = 2100;

/// A scalar function `φ ∈ Γ₀(ℝ)` applied to every coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhiSpec {
    /// `φ = 0`.
    Zero,
    /// `η ln η − ωη` on `[0, ∞)`.
    LinearEntropy { omega: f64 },
    /// `|η|^p / p`, `p ≥ 1`.
    Power { p: f64 },
    /// `η^{−p} / p` on `(0, ∞)`, `p ≥ 1`.
    NegPower { p: f64 },
    /// `−η^p / p` on `[0, ∞)`, `0 < p < 1`.
    NegRoot { p: f64 },
    /// `α|η|`, `α > 0`.
    AbsLinear { alpha: f64 },
    /// `(1 − η) ln(1 − η) − ω(1 − η)` on `(−∞, 1]`; the reflection of
    /// `LinearEntropy` through `η ↦ 1 − η`.
    MirrorEntropy { omega: f64 },
    /// `(1 − η) ln(1 − η) + η` on `(−∞, 1]`.
    OneMinusLog,
    /// `−√(1 − η²)` on `[−1, 1]`.
    SelfHellinger,
    /// `−ln η` on `(0, ∞)`.
    Burg,
}

/// Open interval with possibly infinite ends.
type Interval = (f64, f64);

impl PhiSpec {
    pub const KIND_NAMES: [&'static str; 10] = [
        "zero",
        "linear_entropy",
        "power",
        "neg_power",
        "neg_root",
        "abs_linear",
        "mirror_entropy",
        "one_minus_log",
        "self_hellinger",
        "burg",
    ];

    pub fn kind_name(&self) -> &'static str {
        match self {
            PhiSpec::Zero => "zero",
            PhiSpec::LinearEntropy { .. } => "linear_entropy",
            PhiSpec::Power { .. } => "power",
            PhiSpec::NegPower { .. } => "neg_power",
            PhiSpec::NegRoot { .. } => "neg_root",
            PhiSpec::AbsLinear { .. } => "abs_linear",
            PhiSpec::MirrorEntropy { .. } => "mirror_entropy",
            PhiSpec::OneMinusLog => "one_minus_log",
            PhiSpec::SelfHellinger => "self_hellinger",
            PhiSpec::Burg => "burg",
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            PhiSpec::LinearEntropy { omega } | PhiSpec::MirrorEntropy { omega } => vec![omega],
            PhiSpec::Power { p } | PhiSpec::NegPower { p } | PhiSpec::NegRoot { p } => vec![p],
            PhiSpec::AbsLinear { alpha } => vec![alpha],
            _ => Vec::new(),
        }
    }

    /// Builds a spec from its stable name and positional parameters.
    pub fn from_parts(kind: &str, params: &[f64]) -> Result<Self> {
        let expect = |n: usize| -> Result<()> {
            if params.len() != n {
                return Err(Error::param(format!(
                    "phi kind '{kind}' takes {n} parameter(s), got {}",
                    params.len()
                )));
            }
            Ok(())
        };
        let spec = match kind {
            "zero" => {
                expect(0)?;
                PhiSpec::Zero
            }
            "linear_entropy" => {
                expect(1)?;
                PhiSpec::LinearEntropy { omega: params[0] }
            }
            "power" => {
                expect(1)?;
                PhiSpec::Power { p: params[0] }
            }
            "neg_power" => {
                expect(1)?;
                PhiSpec::NegPower { p: params[0] }
            }
            "neg_root" => {
                expect(1)?;
                PhiSpec::NegRoot { p: params[0] }
            }
            "abs_linear" => {
                expect(1)?;
                PhiSpec::AbsLinear { alpha: params[0] }
            }
            "mirror_entropy" => {
                expect(1)?;
                PhiSpec::MirrorEntropy { omega: params[0] }
            }
            "one_minus_log" => {
                expect(0)?;
                PhiSpec::OneMinusLog
            }
            "self_hellinger" => {
                expect(0)?;
                PhiSpec::SelfHellinger
            }
            "burg" => {
                expect(0)?;
                PhiSpec::Burg
            }
            _ => return Err(Error::param(format!("unknown phi kind '{kind}'"))),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            PhiSpec::LinearEntropy { omega } | PhiSpec::MirrorEntropy { omega } => omega.is_finite(),
            PhiSpec::Power { p } | PhiSpec::NegPower { p } => p.is_finite() && p >= 1.0,
            PhiSpec::NegRoot { p } => p > 0.0 && p < 1.0,
            PhiSpec::AbsLinear { alpha } => alpha.is_finite() && alpha > 0.0,
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param(format!("parameters out of range for {self}")))
        }
    }

    /// `φ(t)`, `+∞` outside `dom φ`.
    pub fn value(&self, t: f64) -> f64 {
        let inf = f64::INFINITY;
        match *self {
            PhiSpec::Zero => 0.0,
            PhiSpec::LinearEntropy { omega } => {
                if t > 0.0 {
                    t * t.ln() - omega * t
                } else if t == 0.0 {
                    0.0
                } else {
                    inf
                }
            }
            PhiSpec::Power { p } => t.abs().powf(p) / p,
            PhiSpec::NegPower { p } => {
                if t > 0.0 {
                    t.powf(-p) / p
                } else {
                    inf
                }
            }
            PhiSpec::NegRoot { p } => {
                if t >= 0.0 {
                    -t.powf(p) / p
                } else {
                    inf
                }
            }
            PhiSpec::AbsLinear { alpha } => alpha * t.abs(),
            PhiSpec::MirrorEntropy { omega } => {
                let s = 1.0 - t;
                if s > 0.0 {
                    s * s.ln() - omega * s
                } else if s == 0.0 {
                    0.0
                } else {
                    inf
                }
            }
            PhiSpec::OneMinusLog => {
                let s = 1.0 - t;
                if s > 0.0 {
                    s * s.ln() + t
                } else if s == 0.0 {
                    1.0
                } else {
                    inf
                }
            }
            PhiSpec::SelfHellinger => {
                if (-1.0..=1.0).contains(&t) {
                    -((1.0 - t) * (1.0 + t)).sqrt()
                } else {
                    inf
                }
            }
            PhiSpec::Burg => {
                if t > 0.0 {
                    -t.ln()
                } else {
                    inf
                }
            }
        }
    }

    /// Open interval on which `∂φ` is nonempty.
    pub fn subdiff_domain(&self) -> Interval {
        let inf = f64::INFINITY;
        match self {
            PhiSpec::Zero | PhiSpec::Power { .. } | PhiSpec::AbsLinear { .. } => (-inf, inf),
            PhiSpec::LinearEntropy { .. }
            | PhiSpec::NegPower { .. }
            | PhiSpec::NegRoot { .. }
            | PhiSpec::Burg => (0.0, inf),
            PhiSpec::MirrorEntropy { .. } | PhiSpec::OneMinusLog => (-inf, 1.0),
            PhiSpec::SelfHellinger => (-1.0, 1.0),
        }
    }

    /// Points where `∂φ` is a nondegenerate interval.
    pub fn kinks(&self) -> &'static [f64] {
        match *self {
            PhiSpec::AbsLinear { .. } => &[0.0],
            PhiSpec::Power { p: 1.0 } => &[0.0],
            _ => &[],
        }
    }

    /// `∂φ(t)` as `[lo, hi]`, or `None` when empty.
    pub fn subdiff(&self, t: f64) -> Option<(f64, f64)> {
        let (a, b) = self.subdiff_domain();
        if !(t > a && t < b) {
            return None;
        }
        let single = |v: f64| Some((v, v));
        match *self {
            PhiSpec::AbsLinear { alpha } if t == 0.0 => Some((-alpha, alpha)),
            PhiSpec::Power { p } if p == 1.0 && t == 0.0 => Some((-1.0, 1.0)),
            _ => single(self.deriv_unchecked(t)),
        }
    }

    /// A selection of `∂φ` on the interior of its domain, continuous away
    /// from [`PhiSpec::kinks`].
    fn deriv_unchecked(&self, t: f64) -> f64 {
        match *self {
            PhiSpec::Zero => 0.0,
            PhiSpec::LinearEntropy { omega } => t.ln() + 1.0 - omega,
            PhiSpec::Power { p } => {
                if t == 0.0 {
                    0.0
                } else {
                    t.signum() * t.abs().powf(p - 1.0)
                }
            }
            PhiSpec::NegPower { p } => -t.powf(-p - 1.0),
            PhiSpec::NegRoot { p } => -t.powf(p - 1.0),
            PhiSpec::AbsLinear { alpha } => alpha * t.signum(),
            PhiSpec::MirrorEntropy { omega } => -(1.0 - t).ln() - 1.0 + omega,
            PhiSpec::OneMinusLog => -(1.0 - t).ln(),
            PhiSpec::SelfHellinger => t / ((1.0 - t) * (1.0 + t)).sqrt(),
            PhiSpec::Burg => -1.0 / t,
        }
    }

    fn second_deriv_unchecked(&self, t: f64) -> f64 {
        match *self {
            PhiSpec::Zero | PhiSpec::AbsLinear { .. } => 0.0,
            PhiSpec::LinearEntropy { .. } => 1.0 / t,
            PhiSpec::Power { p } => {
                if p == 1.0 {
                    0.0
                } else {
                    (p - 1.0) * t.abs().powf(p - 2.0)
                }
            }
            PhiSpec::NegPower { p } => (p + 1.0) * t.powf(-p - 2.0),
            PhiSpec::NegRoot { p } => (1.0 - p) * t.powf(p - 2.0),
            PhiSpec::MirrorEntropy { .. } | PhiSpec::OneMinusLog => 1.0 / (1.0 - t),
            PhiSpec::SelfHellinger => ((1.0 - t) * (1.0 + t)).powf(-1.5),
            PhiSpec::Burg => 1.0 / (t * t),
        }
    }

    /// One-sided limit of the derivative selection at an end of a feasible
    /// interval: from the right at a left end, from the left at a right end.
    fn end_limit(&self, t: f64, left_end: bool) -> f64 {
        let inf = f64::INFINITY;
        if t.is_infinite() {
            return match *self {
                PhiSpec::Zero => 0.0,
                PhiSpec::LinearEntropy { .. } => inf,
                PhiSpec::Power { p } => {
                    if p == 1.0 {
                        t.signum()
                    } else {
                        t.signum() * inf
                    }
                }
                PhiSpec::NegPower { .. } | PhiSpec::NegRoot { .. } | PhiSpec::Burg => 0.0,
                PhiSpec::AbsLinear { alpha } => t.signum() * alpha,
                PhiSpec::MirrorEntropy { .. } | PhiSpec::OneMinusLog => -inf,
                PhiSpec::SelfHellinger => unreachable!("bounded domain"),
            };
        }
        match self.subdiff(t) {
            Some((lo, hi)) => {
                if left_end {
                    hi
                } else {
                    lo
                }
            }
            None => {
                if left_end {
                    -inf
                } else {
                    inf
                }
            }
        }
    }

    /// `dom φ*` is all of `ℝ`.
    pub fn is_cofinite(&self) -> bool {
        match *self {
            PhiSpec::LinearEntropy { .. } | PhiSpec::MirrorEntropy { .. } | PhiSpec::OneMinusLog => {
                true
            }
            PhiSpec::Power { p } => p > 1.0,
            _ => false,
        }
    }
}

impl fmt::Display for PhiSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind_name())?;
        for p in self.params() {
            write!(f, " {p}")?;
        }
        Ok(())
    }
}

/// Shape of a closed-form prox formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormulaFamily {
    Exponential,
    LambertW,
    QuadraticRoot,
    Algebraic,
}

/// The closed-form prox formulas that are implemented.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosedForm {
    ShannonLinearEntropy,
    ShannonPower,
    ShannonAbs,
    ShannonNegPower,
    ShannonNegRoot,
    FermiDiracLinearEntropy,
    FermiDiracOneMinusLog,
    HellingerSelf,
    BurgSelf,
    BurgAbsLinear,
    Identity,
}

/// Set of `ξ` on which a prox is defined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProxDomain {
    All,
    /// `ξ < bound`.
    Below(f64),
    /// `lo < ξ < hi`.
    Between(f64, f64),
}

impl ProxDomain {
    pub fn contains(&self, xi: f64) -> bool {
        match *self {
            ProxDomain::All => xi.is_finite(),
            ProxDomain::Below(b) => xi < b,
            ProxDomain::Between(a, b) => xi > a && xi < b,
        }
    }

    fn from_interval(lo: f64, hi: f64) -> Self {
        match (lo.is_infinite(), hi.is_infinite()) {
            (true, true) => ProxDomain::All,
            (true, false) => ProxDomain::Below(hi),
            _ => ProxDomain::Between(lo, hi),
        }
    }
}

impl fmt::Display for ProxDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ProxDomain::All => f.write_str("xi in R"),
            ProxDomain::Below(b) => write!(f, "xi < {b}"),
            ProxDomain::Between(a, b) => write!(f, "{a} < xi < {b}"),
        }
    }
}

impl ClosedForm {
    pub const ALL: [ClosedForm; 11] = [
        ClosedForm::ShannonLinearEntropy,
        ClosedForm::ShannonPower,
        ClosedForm::ShannonAbs,
        ClosedForm::ShannonNegPower,
        ClosedForm::ShannonNegRoot,
        ClosedForm::FermiDiracLinearEntropy,
        ClosedForm::FermiDiracOneMinusLog,
        ClosedForm::HellingerSelf,
        ClosedForm::BurgSelf,
        ClosedForm::BurgAbsLinear,
        ClosedForm::Identity,
    ];

    pub fn legendre(self) -> LegendreKind {
        use ClosedForm::*;
        match self {
            ShannonLinearEntropy | ShannonPower | ShannonAbs | ShannonNegPower | ShannonNegRoot => {
                LegendreKind::BoltzmannShannon
            }
            FermiDiracLinearEntropy | FermiDiracOneMinusLog => LegendreKind::FermiDirac,
            HellingerSelf => LegendreKind::Hellinger,
            BurgSelf | BurgAbsLinear => LegendreKind::Burg,
            Identity => LegendreKind::HalfSquare,
        }
    }

    pub fn phi_kind(self) -> &'static str {
        use ClosedForm::*;
        match self {
            ShannonLinearEntropy | FermiDiracLinearEntropy => "linear_entropy",
            ShannonPower | ShannonAbs => "power",
            ShannonNegPower => "neg_power",
            ShannonNegRoot => "neg_root",
            FermiDiracOneMinusLog => "one_minus_log",
            HellingerSelf => "self_hellinger",
            BurgSelf => "burg",
            BurgAbsLinear => "abs_linear",
            Identity => "zero",
        }
    }

    pub fn family(self) -> FormulaFamily {
        use ClosedForm::*;
        match self {
            ShannonLinearEntropy | ShannonAbs => FormulaFamily::Exponential,
            ShannonPower | ShannonNegPower | ShannonNegRoot => FormulaFamily::LambertW,
            FermiDiracLinearEntropy | FermiDiracOneMinusLog => FormulaFamily::QuadraticRoot,
            HellingerSelf | BurgSelf | BurgAbsLinear | Identity => FormulaFamily::Algebraic,
        }
    }

    pub fn formula(self) -> &'static str {
        use ClosedForm::*;
        match self {
            ShannonLinearEntropy => "eta = exp((xi + gamma*(omega - 1)) / (gamma + 1))",
            ShannonPower => "eta = (W(gamma*(p-1)*exp((p-1)*xi)) / (gamma*(p-1)))^(1/(p-1))",
            ShannonAbs => "eta = exp(xi - gamma)",
            ShannonNegPower => "eta = (W(gamma*(p+1)*exp(-(p+1)*xi)) / (gamma*(p+1)))^(-1/(p+1))",
            ShannonNegRoot => "eta = (W(gamma*(1-p)*exp((p-1)*xi)) / (gamma*(1-p)))^(1/(p-1))",
            FermiDiracLinearEntropy => "c = exp(xi + omega - 1); eta = -c/2 + sqrt(c^2/4 + c)",
            FermiDiracOneMinusLog => "d = exp(-xi); eta = 1 + d/2 - sqrt(d + d^2/4)",
            HellingerSelf => "eta = xi / sqrt((gamma + 1)^2 + xi^2)",
            BurgSelf => "eta = -(1 + gamma) / xi",
            BurgAbsLinear => "eta = 1 / (gamma*alpha - xi)",
            Identity => "eta = xi",
        }
    }

    /// The two Fermi–Dirac forms solve the unscaled problem only.
    pub fn requires_unit_gamma(self) -> bool {
        matches!(
            self,
            ClosedForm::FermiDiracLinearEntropy | ClosedForm::FermiDiracOneMinusLog
        )
    }

    pub fn domain(self, phi: &PhiSpec, gamma: f64) -> ProxDomain {
        match (self, *phi) {
            (ClosedForm::BurgSelf, _) => ProxDomain::Below(0.0),
            (ClosedForm::BurgAbsLinear, PhiSpec::AbsLinear { alpha }) => {
                ProxDomain::Below(gamma * alpha)
            }
            _ => ProxDomain::All,
        }
    }

    /// Evaluates the formula. The caller has matched `phi` to `self`.
    fn eval(self, phi: &PhiSpec, gamma: f64, xi: f64) -> Result<f64> {
        if !self.domain(phi, gamma).contains(xi) {
            return Err(Error::domain(format!(
                "xi = {xi} outside the prox domain ({}) of {} / {phi}",
                self.domain(phi, gamma),
                self.legendre()
            )));
        }
        // The Lambert-W forms use ln W(e^l) = l − W(e^l), which gives
        // ln η directly and avoids overflow of e^l.
        let eta = match (self, *phi) {
            (ClosedForm::ShannonLinearEntropy, PhiSpec::LinearEntropy { omega }) => {
                ((xi + gamma * (omega - 1.0)) / (gamma + 1.0)).exp()
            }
            (ClosedForm::ShannonAbs, _) => (xi - gamma).exp(),
            (ClosedForm::ShannonPower, PhiSpec::Power { p }) => {
                let q = p - 1.0;
                let u = lambert_w0_exp((gamma * q).ln() + q * xi)?;
                (xi - u / q).exp()
            }
            (ClosedForm::ShannonNegPower, PhiSpec::NegPower { p }) => {
                let q = p + 1.0;
                let u = lambert_w0_exp((gamma * q).ln() - q * xi)?;
                (xi + u / q).exp()
            }
            (ClosedForm::ShannonNegRoot, PhiSpec::NegRoot { p }) => {
                let q = 1.0 - p;
                let u = lambert_w0_exp((gamma * q).ln() - q * xi)?;
                (xi + u / q).exp()
            }
            (ClosedForm::FermiDiracLinearEntropy, PhiSpec::LinearEntropy { omega }) => {
                // Root of η² + cη − c = 0 in (0, 1), rationalized.
                let lc = xi + omega - 1.0;
                if lc <= 0.0 {
                    let s = (0.5 * lc).exp();
                    2.0 * s / (s + (s * s + 4.0).sqrt())
                } else {
                    2.0 / (1.0 + (1.0 + 4.0 * (-lc).exp()).sqrt())
                }
            }
            (ClosedForm::FermiDiracOneMinusLog, PhiSpec::OneMinusLog) => {
                let d = (-xi).exp();
                1.0 / (1.0 + 0.5 * d + d.sqrt() * (1.0 + 0.25 * d).sqrt())
            }
            (ClosedForm::HellingerSelf, PhiSpec::SelfHellinger) => xi / (gamma + 1.0).hypot(xi),
            (ClosedForm::BurgSelf, PhiSpec::Burg) => -(1.0 + gamma) / xi,
            (ClosedForm::BurgAbsLinear, PhiSpec::AbsLinear { alpha }) => 1.0 / (gamma * alpha - xi),
            (ClosedForm::Identity, PhiSpec::Zero) => xi,
            _ => unreachable!("closed form {self:?} paired with {phi}"),
        };
        Ok(eta)
    }
}

/// Closed form for a `(ϑ, φ)` pairing, if one is implemented.
pub fn lookup_closed_form(legendre: LegendreKind, phi: &PhiSpec) -> Option<ClosedForm> {
    use LegendreKind as L;
    Some(match (legendre, *phi) {
        (L::BoltzmannShannon, PhiSpec::LinearEntropy { .. }) => ClosedForm::ShannonLinearEntropy,
        (L::BoltzmannShannon, PhiSpec::Power { p: 1.0 }) => ClosedForm::ShannonAbs,
        (L::BoltzmannShannon, PhiSpec::Power { .. }) => ClosedForm::ShannonPower,
        (L::BoltzmannShannon, PhiSpec::NegPower { .. }) => ClosedForm::ShannonNegPower,
        (L::BoltzmannShannon, PhiSpec::NegRoot { .. }) => ClosedForm::ShannonNegRoot,
        (L::FermiDirac, PhiSpec::LinearEntropy { .. }) => ClosedForm::FermiDiracLinearEntropy,
        (L::FermiDirac, PhiSpec::OneMinusLog) => ClosedForm::FermiDiracOneMinusLog,
        (L::Hellinger, PhiSpec::SelfHellinger) => ClosedForm::HellingerSelf,
        (L::Burg, PhiSpec::Burg) => ClosedForm::BurgSelf,
        (L::Burg, PhiSpec::AbsLinear { .. }) => ClosedForm::BurgAbsLinear,
        (L::HalfSquare, PhiSpec::Zero) => ClosedForm::Identity,
        _ => return None,
    })
}

/// One row of the closed-form catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormEntry {
    pub form: ClosedForm,
    pub legendre: LegendreKind,
    pub phi_kind: &'static str,
    pub family: FormulaFamily,
    pub formula: &'static str,
    /// Validity domain in terms of `ξ`, `γ` and the φ parameters.
    pub domain: &'static str,
}

/// Every implemented closed form.
pub fn prox_closed_form_table() -> Vec<ClosedFormEntry> {
    ClosedForm::ALL
        .into_iter()
        .map(|form| ClosedFormEntry {
            form,
            legendre: form.legendre(),
            phi_kind: form.phi_kind(),
            family: form.family(),
            formula: form.formula(),
            domain: match form {
                ClosedForm::BurgSelf => "xi < 0",
                ClosedForm::BurgAbsLinear => "xi < gamma*alpha",
                ClosedForm::ShannonPower => "xi in R, p > 1",
                ClosedForm::ShannonAbs => "xi in R, p = 1",
                f if f.requires_unit_gamma() => "xi in R, gamma = 1",
                _ => "xi in R",
            },
        })
        .collect()
}

/// Open interval `int dom ϑ ∩ dom ∂φ` where the prox output can live.
fn feasible_interval(legendre: LegendreKind, phi: &PhiSpec) -> Result<Interval> {
    let (a1, b1) = legendre.interior();
    let (a2, b2) = phi.subdiff_domain();
    let (a, b) = (a1.max(a2), b1.min(b2));
    if a >= b {
        return Err(Error::domain(format!(
            "int dom {legendre} and dom {phi} do not overlap"
        )));
    }
    Ok((a, b))
}

fn legendre_end_limit(kind: LegendreKind, t: f64, left_end: bool) -> f64 {
    let (a, b) = kind.interior();
    if left_end && t == a {
        f64::NEG_INFINITY
    } else if !left_end && t == b {
        match kind {
            LegendreKind::Burg => 0.0,
            _ => f64::INFINITY,
        }
    } else {
        kind.deriv_unchecked(t)
    }
}

/// The set of `ξ` for which `Prox^ϑ_{γφ}(ξ)` exists: the range of
/// `ϑ′ + γ∂φ` over the feasible interval.
pub fn prox_domain(legendre: LegendreKind, phi: &PhiSpec, gamma: f64) -> Result<ProxDomain> {
    let (a, b) = feasible_interval(legendre, phi)?;
    let lo = legendre_end_limit(legendre, a, true) + gamma * phi.end_limit(a, true);
    let hi = legendre_end_limit(legendre, b, false) + gamma * phi.end_limit(b, false);
    Ok(ProxDomain::from_interval(lo, hi))
}

/// Solves `ξ ∈ ϑ′(η) + γ∂φ(η)` numerically.
///
/// Kinks of `φ` are tested first. Otherwise the root is bracketed by
/// expanding geometrically from `(ϑ*)′(ξ)` (the `φ = 0` solution) toward the
/// side where the residual changes sign, then refined by safeguarded Newton.
pub fn prox_numeric_scalar(
    legendre: LegendreKind,
    phi: &PhiSpec,
    gamma: f64,
    xi: f64,
) -> Result<f64> {
    check_gamma(gamma)?;
    let domain = prox_domain(legendre, phi, gamma)?;
    if !domain.contains(xi) {
        return Err(Error::domain(format!(
            "xi = {xi} outside the prox domain ({domain}) of {legendre} / {phi} at gamma = {gamma}"
        )));
    }
    let (a, b) = feasible_interval(legendre, phi)?;

    for &c in phi.kinks() {
        if c > a && c < b {
            let (s_lo, s_hi) = phi.subdiff(c).expect("kink inside domain");
            let d = legendre.deriv_unchecked(c);
            if d + gamma * s_lo <= xi && xi <= d + gamma * s_hi {
                return Ok(c);
            }
        }
    }

    let g = |t: f64| legendre.deriv_unchecked(t) + gamma * phi.deriv_unchecked(t);
    let dg =
        |t: f64| legendre.second_deriv_unchecked(t) + gamma * phi.second_deriv_unchecked(t);

    let center = {
        let c = if legendre.conj_in_interior(xi) {
            legendre.conj_deriv_unchecked(xi)
        } else {
            f64::NAN
        };
        if c > a && c < b {
            c
        } else {
            match (a.is_finite(), b.is_finite()) {
                (true, true) => 0.5 * (a + b),
                (true, false) => a + 1.0_f64.max(a.abs()),
                (false, true) => b - 1.0_f64.max(b.abs()),
                (false, false) => 0.0,
            }
        }
    };

    let r0 = g(center) - xi;
    if r0 == 0.0 {
        return Ok(center);
    }
    let up = r0 < 0.0;
    let width = 1.0_f64.max(center.abs());
    let mut near = center;
    let mut far = center;
    let mut found = false;
    for k in 0..MAX_EXPANSIONS {
        let step = 2f64.powi(k as i32 + 1);
        let cand = if up {
            if b.is_finite() {
                b - (b - center) / step
            } else {
                center + width * (step - 1.0)
            }
        } else if a.is_finite() {
            a + (center - a) / step
        } else {
            center - width * (step - 1.0)
        };
        if !(cand > a && cand < b) || cand == far {
            break;
        }
        let r = g(cand) - xi;
        if (up && r >= 0.0) || (!up && r <= 0.0) {
            far = cand;
            found = true;
            break;
        }
        near = cand;
        far = cand;
    }
    if !found {
        return Err(Error::Bracket {
            lo: near.min(far),
            hi: near.max(far),
            g_lo: g(near.min(far)),
            g_hi: g(near.max(far)),
            target: xi,
        });
    }
    let bracket = if up {
        Bracket::new(near, far)?
    } else {
        Bracket::new(far, near)?
    };
    solve_monotone_newton(g, dg, xi, bracket, NUMERIC_TOL)
}

/// Scalar `Prox^ϑ_{γφ}(ξ)`, closed form when available.
pub fn prox_scalar(legendre: LegendreKind, phi: &PhiSpec, gamma: f64, xi: f64) -> Result<f64> {
    check_gamma(gamma)?;
    match lookup_closed_form(legendre, phi) {
        Some(cf) if !cf.requires_unit_gamma() || gamma == 1.0 => cf.eval(phi, gamma, xi),
        _ => prox_numeric_scalar(legendre, phi, gamma, xi),
    }
}

/// Distance from `ξ` to `ϑ′(η) + γ∂φ(η)`; infinite when `η` is infeasible.
pub fn stationarity_residual(
    legendre: LegendreKind,
    phi: &PhiSpec,
    gamma: f64,
    xi: f64,
    eta: f64,
) -> f64 {
    if !legendre.in_interior(eta) {
        return f64::INFINITY;
    }
    let Some((lo, hi)) = phi.subdiff(eta) else {
        return f64::INFINITY;
    };
    let d = legendre.deriv_unchecked(eta);
    let (lo, hi) = (d + gamma * lo, d + gamma * hi);
    if xi < lo {
        lo - xi
    } else if xi > hi {
        xi - hi
    } else {
        0.0
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma > 0.0 {
        Ok(())
    } else {
        Err(Error::param(format!("prox scaling must be positive, got {gamma}")))
    }
}

/// `Prox^f_{γφ}` on `ℝ^m`, evaluated coordinate by coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxOperator {
    legendre: Legendre,
    phi: Vec<PhiSpec>,
    gamma: f64,
}

impl ProxOperator {
    pub fn new(legendre: Legendre, phi: Vec<PhiSpec>, gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        if phi.len() != legendre.dim() {
            return Err(Error::DimensionMismatch {
                expected: legendre.dim(),
                got: phi.len(),
            });
        }
        for p in &phi {
            p.validate()?;
        }
        Ok(ProxOperator {
            legendre,
            phi,
            gamma,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn dim(&self) -> usize {
        self.phi.len()
    }

    /// Closed form per coordinate (`None` means numeric).
    pub fn closed_forms(&self) -> Vec<Option<ClosedForm>> {
        self.legendre
            .kinds()
            .iter()
            .zip(&self.phi)
            .map(|(&k, p)| {
                lookup_closed_form(k, p).filter(|cf| !cf.requires_unit_gamma() || self.gamma == 1.0)
            })
            .collect()
    }

    pub fn apply(&self, xstar: &[f64]) -> Result<Vec<f64>> {
        if xstar.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: xstar.len(),
            });
        }
        self.legendre
            .kinds()
            .iter()
            .zip(&self.phi)
            .zip(xstar)
            .enumerate()
            .map(|(i, ((&k, p), &xi))| {
                prox_scalar(k, p, self.gamma, xi).map_err(|e| match e {
                    Error::Domain(msg) => Error::Domain(format!("coordinate {i}: {msg}")),
                    other => other,
                })
            })
            .collect()
    }

    /// Largest coordinate stationarity residual of `eta` as a prox of `xstar`.
    pub fn residual(&self, xstar: &[f64], eta: &[f64]) -> f64 {
        self.legendre
            .kinds()
            .iter()
            .zip(&self.phi)
            .zip(xstar.iter().zip(eta))
            .map(|((&k, p), (&xi, &e))| stationarity_residual(k, p, self.gamma, xi, e))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use LegendreKind::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn hellinger_self_examples() {
        let eta = prox_scalar(Hellinger, &PhiSpec::SelfHellinger, 1.0, 3.0).unwrap();
        assert!(close(eta, 3.0 / 13f64.sqrt(), 1e-15));
        assert!(stationarity_residual(Hellinger, &PhiSpec::SelfHellinger, 1.0, 3.0, eta) < 1e-12);
        for g in [0.1, 1.0, 7.0] {
            assert_eq!(prox_scalar(Hellinger, &PhiSpec::SelfHellinger, g, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn shannon_power_examples() {
        let eta = prox_scalar(BoltzmannShannon, &PhiSpec::Power { p: 2.0 }, 1.0, 1.0).unwrap();
        assert!(close(eta, 1.0, 1e-14));
        let eta = prox_scalar(BoltzmannShannon, &PhiSpec::Power { p: 1.0 }, 1.0, 1.0).unwrap();
        assert_eq!(eta, 1.0);
    }

    #[test]
    fn fermi_dirac_examples() {
        let eta =
            prox_scalar(FermiDirac, &PhiSpec::LinearEntropy { omega: 1.0 }, 1.0, 0.0).unwrap();
        assert!(close(eta, (5f64.sqrt() - 1.0) / 2.0, 1e-15));
        let eta = prox_scalar(FermiDirac, &PhiSpec::OneMinusLog, 1.0, 0.0).unwrap();
        assert!(close(eta, (3.0 - 5f64.sqrt()) / 2.0, 1e-15));
    }

    #[test]
    fn fermi_dirac_forms_match_printed_expressions() {
        for xi in [-3.0, -0.5, 0.0, 0.7, 2.5] {
            let c: f64 = (xi + 0.4 - 1.0_f64).exp();
            let printed = -c / 2.0 + (c * c / 4.0 + c).sqrt();
            let eta =
                prox_scalar(FermiDirac, &PhiSpec::LinearEntropy { omega: 0.4 }, 1.0, xi).unwrap();
            assert!(close(eta, printed, 1e-14));

            let d: f64 = (-xi).exp();
            let printed = 1.0 + d / 2.0 - (d + d * d / 4.0).sqrt();
            let eta = prox_scalar(FermiDirac, &PhiSpec::OneMinusLog, 1.0, xi).unwrap();
            assert!(close(eta, printed, 1e-13));
        }
    }

    #[test]
    fn burg_examples() {
        let eta = prox_scalar(Burg, &PhiSpec::AbsLinear { alpha: 1.0 }, 1.0, -1.0).unwrap();
        assert_eq!(eta, 0.5);
        let eta = prox_scalar(Burg, &PhiSpec::Burg, 1.0, -8.0).unwrap();
        assert_eq!(eta, 0.25);
        assert!(matches!(
            prox_scalar(Burg, &PhiSpec::Burg, 1.0, 0.5),
            Err(Error::Domain(_))
        ));
        assert!(prox_scalar(Burg, &PhiSpec::AbsLinear { alpha: 1.0 }, 2.0, 2.0).is_err());
    }

    #[test]
    fn shannon_linear_entropy_uses_scaled_shift() {
        // (1 + γ) ln η = ξ + γ(ω − 1)
        let (gamma, omega, xi) = (0.5, 3.0, 0.2);
        let eta = prox_scalar(BoltzmannShannon, &PhiSpec::LinearEntropy { omega }, gamma, xi)
            .unwrap();
        let r = stationarity_residual(
            BoltzmannShannon,
            &PhiSpec::LinearEntropy { omega },
            gamma,
            xi,
            eta,
        );
        assert!(r < 1e-14);
    }

    #[test]
    fn numeric_examples() {
        let eta = prox_numeric_scalar(Burg, &PhiSpec::Zero, 1.0, -2.0).unwrap();
        assert!(close(eta, 0.5, 1e-12));
        let eta = prox_numeric_scalar(BoltzmannShannon, &PhiSpec::Zero, 1.0, 0.0).unwrap();
        assert!(close(eta, 1.0, 1e-12));
    }

    #[test]
    fn numeric_soft_threshold() {
        let phi = PhiSpec::AbsLinear { alpha: 1.0 };
        assert_eq!(prox_numeric_scalar(HalfSquare, &phi, 2.0, 1.5).unwrap(), 0.0);
        let eta = prox_numeric_scalar(HalfSquare, &phi, 2.0, 3.5).unwrap();
        assert!(close(eta, 1.5, 1e-12));
        let eta = prox_numeric_scalar(HalfSquare, &phi, 2.0, -3.5).unwrap();
        assert!(close(eta, -1.5, 1e-12));
    }

    #[test]
    fn numeric_rejects_outside_domain() {
        let err = prox_numeric_scalar(Burg, &PhiSpec::Zero, 1.0, 0.1).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn table_lookups() {
        let cf = lookup_closed_form(BoltzmannShannon, &PhiSpec::Power { p: 1.5 }).unwrap();
        assert_eq!(cf.family(), FormulaFamily::LambertW);
        assert!(lookup_closed_form(Hellinger, &PhiSpec::Burg).is_none());
        let cf = lookup_closed_form(Burg, &PhiSpec::AbsLinear { alpha: 2.0 }).unwrap();
        assert_eq!(
            cf.domain(&PhiSpec::AbsLinear { alpha: 2.0 }, 0.5),
            ProxDomain::Below(1.0)
        );
        assert_eq!(prox_closed_form_table().len(), 11);
    }

    #[test]
    fn prox_domains() {
        assert_eq!(
            prox_domain(Burg, &PhiSpec::Zero, 1.0).unwrap(),
            ProxDomain::Below(0.0)
        );
        assert_eq!(
            prox_domain(Burg, &PhiSpec::AbsLinear { alpha: 2.0 }, 0.5).unwrap(),
            ProxDomain::Below(1.0)
        );
        assert_eq!(
            prox_domain(Burg, &PhiSpec::Power { p: 2.0 }, 0.5).unwrap(),
            ProxDomain::All
        );
        assert_eq!(
            prox_domain(BoltzmannShannon, &PhiSpec::Zero, 1.0).unwrap(),
            ProxDomain::All
        );
    }

    #[test]
    fn operator_is_coordinatewise() {
        let f = Legendre::new(vec![Hellinger, Burg, BoltzmannShannon]);
        let phi = vec![
            PhiSpec::SelfHellinger,
            PhiSpec::AbsLinear { alpha: 1.0 },
            PhiSpec::Power { p: 3.0 },
        ];
        let op = ProxOperator::new(f.clone(), phi.clone(), 1.0).unwrap();
        let xs = [3.0, -1.0, 0.3];
        let v = op.apply(&xs).unwrap();
        for i in 0..3 {
            assert_eq!(v[i], prox_scalar(f.kinds()[i], &phi[i], 1.0, xs[i]).unwrap());
        }
        assert!(op.residual(&xs, &v) < 1e-12);
    }

    #[test]
    fn operator_validates() {
        let f = Legendre::uniform(Burg, 2);
        assert!(ProxOperator::new(f.clone(), vec![PhiSpec::Zero], 1.0).is_err());
        assert!(ProxOperator::new(f.clone(), vec![PhiSpec::Zero; 2], 0.0).is_err());
        assert!(ProxOperator::new(f, vec![PhiSpec::NegRoot { p: 1.5 }; 2], 1.0).is_err());
    }

    #[test]
    fn phi_parse() {
        assert_eq!(
            PhiSpec::from_parts("power", &[1.5]).unwrap(),
            PhiSpec::Power { p: 1.5 }
        );
        assert!(PhiSpec::from_parts("power", &[]).is_err());
        assert!(PhiSpec::from_parts("abs_linear", &[-1.0]).is_err());
        assert!(PhiSpec::from_parts("nope", &[]).is_err());
        assert_eq!(PhiSpec::AbsLinear { alpha: 2.0 }.to_string(), "abs_linear 2");
    }
}
