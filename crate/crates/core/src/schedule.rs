//! Step-size sequences and their admissibility conditions.
//!
//! With `c = αβ` (and `α = 1` when the Legendre function is not rescaled) a
//! schedule is admissible when `0 < ε < c/(c + 1)` and for every `n`
//!
//! ```text
//! ε ≤ γ_n ≤ c(1 − ε)
//! (1 + η_n)γ_n − γ_{n+1} ≤ c·η_n
//! ```
//!
//! with `(η_n)` nonnegative and summable. A rescaled run uses `f_n = μ_n f`
//! and additionally needs `μ_n ≥ α` and `(1 + η_n)μ_n ≥ μ_{n+1}`.

use std::fmt;

/// Default `ε` when the caller does not choose one.
pub const DEFAULT_EPS: f64 = 0.05;

/// A real sequence given by finitely many leading terms and a constant tail.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    head: Vec<f64>,
    tail: f64,
}

impl Sequence {
    pub fn constant(value: f64) -> Self {
        Sequence {
            head: Vec::new(),
            tail: value,
        }
    }

    /// `values` followed by `tail` forever.
    pub fn then(values: Vec<f64>, tail: f64) -> Self {
        Sequence { head: values, tail }
    }

    /// `values` followed by repetitions of its last element.
    ///
    /// # Panics
    /// If `values` is empty.
    pub fn repeat_last(values: Vec<f64>) -> Self {
        let tail = *values.last().expect("sequence needs at least one value");
        Sequence { head: values, tail }
    }

    pub fn zeros() -> Self {
        Sequence::constant(0.0)
    }

    pub fn at(&self, n: usize) -> f64 {
        self.head.get(n).copied().unwrap_or(self.tail)
    }

    pub fn head(&self) -> &[f64] {
        &self.head
    }

    pub fn tail(&self) -> f64 {
        self.tail
    }
}

/// Step sizes `(γ_n)`, perturbations `(η_n)`, and the constants they are
/// checked against.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSchedule {
    pub gammas: Sequence,
    pub etas: Sequence,
    pub eps: f64,
    pub beta: f64,
    /// Multipliers `μ_n` of the rescaled functions `f_n = μ_n f`.
    pub mus: Option<Sequence>,
    pub alpha: f64,
}

impl StepSchedule {
    /// Constant `γ` with `η_n = 0`.
    pub fn constant(gamma: f64, eps: f64, beta: f64) -> Self {
        StepSchedule {
            gammas: Sequence::constant(gamma),
            etas: Sequence::zeros(),
            eps,
            beta,
            mus: None,
            alpha: 1.0,
        }
    }

    /// Constant step at the midpoint of `[ε, β(1 − ε)]` with the default `ε`.
    pub fn default_for(beta: f64) -> Self {
        let eps = default_eps(beta);
        StepSchedule::constant(0.5 * (eps + beta * (1.0 - eps)), eps, beta)
    }

    pub fn with_etas(mut self, etas: Sequence) -> Self {
        self.etas = etas;
        self
    }

    pub fn with_scaling(mut self, mus: Sequence, alpha: f64) -> Self {
        self.mus = Some(mus);
        self.alpha = alpha;
        self
    }

    pub fn gamma(&self, n: usize) -> f64 {
        self.gammas.at(n)
    }

    pub fn eta(&self, n: usize) -> f64 {
        self.etas.at(n)
    }

    pub fn mu(&self, n: usize) -> f64 {
        self.mus.as_ref().map_or(1.0, |m| m.at(n))
    }

    /// `αβ`, the constant the step bounds scale with.
    pub fn scale(&self) -> f64 {
        if self.mus.is_some() {
            self.alpha * self.beta
        } else {
            self.beta
        }
    }

    /// `1 + 1/ε`, the growth factor in the quasi-Bregman inequality.
    pub fn omega(&self) -> f64 {
        1.0 + 1.0 / self.eps
    }

    /// Checks every condition for `n < horizon` and returns all violations.
    pub fn validate(&self, horizon: usize) -> Vec<Violation> {
        let mut out = Vec::new();
        let c = self.scale();
        let mut global = |kind, lhs, rhs| {
            out.push(Violation {
                index: None,
                kind,
                lhs,
                rhs,
            })
        };
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            global(ViolationKind::BetaPositive, self.beta, 0.0);
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            global(ViolationKind::AlphaPositive, self.alpha, 0.0);
        }
        if !(self.eps > 0.0) {
            global(ViolationKind::EpsPositive, self.eps, 0.0);
        }
        let eps_max = c / (c + 1.0);
        if !(self.eps < eps_max) {
            global(ViolationKind::EpsUpper, self.eps, eps_max);
        }
        if self.etas.tail() != 0.0 {
            global(ViolationKind::EtaSummable, self.etas.tail(), 0.0);
        }

        for n in 0..horizon {
            let g = self.gamma(n);
            let g_next = self.gamma(n + 1);
            let eta = self.eta(n);
            let mut at = |kind, lhs, rhs| {
                out.push(Violation {
                    index: Some(n),
                    kind,
                    lhs,
                    rhs,
                })
            };
            if !(eta >= 0.0) {
                at(ViolationKind::EtaNonnegative, eta, 0.0);
            }
            if !(self.eps <= g) {
                at(ViolationKind::GammaLower, self.eps, g);
            }
            let upper = c * (1.0 - self.eps);
            if !(g <= upper) {
                at(ViolationKind::GammaUpper, g, upper);
            }
            let lhs = (1.0 + eta) * g - g_next;
            let rhs = c * eta;
            if !(lhs <= rhs) {
                at(ViolationKind::StepRecurrence, lhs, rhs);
            }
            if let Some(mus) = &self.mus {
                let mu = mus.at(n);
                if !(mu >= self.alpha) {
                    at(ViolationKind::MuLower, mu, self.alpha);
                }
                let grown = (1.0 + eta) * mu;
                let mu_next = mus.at(n + 1);
                if !(mu_next <= grown) {
                    at(ViolationKind::MuRecurrence, mu_next, grown);
                }
            }
        }
        out
    }
}

/// `ε` for a given `αβ`: [`DEFAULT_EPS`] when admissible, otherwise 5 % of
/// the admissible range.
pub fn default_eps(scale: f64) -> f64 {
    let eps_max = scale / (scale + 1.0);
    if DEFAULT_EPS < eps_max {
        DEFAULT_EPS
    } else {
        DEFAULT_EPS * eps_max
    }
}

/// Which admissibility condition failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    BetaPositive,
    AlphaPositive,
    EpsPositive,
    /// `ε < c/(c + 1)`.
    EpsUpper,
    EtaSummable,
    EtaNonnegative,
    /// `ε ≤ γ_n`.
    GammaLower,
    /// `γ_n ≤ c(1 − ε)`.
    GammaUpper,
    /// `(1 + η_n)γ_n − γ_{n+1} ≤ c·η_n`.
    StepRecurrence,
    /// `μ_n ≥ α`.
    MuLower,
    /// `μ_{n+1} ≤ (1 + η_n)μ_n`.
    MuRecurrence,
}

impl ViolationKind {
    pub fn inequality(self) -> &'static str {
        match self {
            ViolationKind::BetaPositive => "beta > 0",
            ViolationKind::AlphaPositive => "alpha > 0",
            ViolationKind::EpsPositive => "eps > 0",
            ViolationKind::EpsUpper => "eps < c/(c+1)",
            ViolationKind::EtaSummable => "eta_n -> 0 (summable tail)",
            ViolationKind::EtaNonnegative => "eta_n >= 0",
            ViolationKind::GammaLower => "eps <= gamma_n",
            ViolationKind::GammaUpper => "gamma_n <= c*(1-eps)",
            ViolationKind::StepRecurrence => "(1+eta_n)*gamma_n - gamma_{n+1} <= c*eta_n",
            ViolationKind::MuLower => "mu_n >= alpha",
            ViolationKind::MuRecurrence => "mu_{n+1} <= (1+eta_n)*mu_n",
        }
    }
}

/// A failed condition: `lhs` and `rhs` are the two sides as evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub index: Option<usize>,
    pub kind: ViolationKind,
    pub lhs: f64,
    pub rhs: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(n) = self.index {
            write!(f, "n={n}: ")?;
        }
        write!(
            f,
            "{} violated (lhs = {}, rhs = {})",
            self.kind.inequality(),
            self.lhs,
            self.rhs
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_inside_bounds_is_ok() {
        let s = StepSchedule::constant(0.25, 0.1, 0.5);
        assert!(s.validate(100).is_empty());
    }

    #[test]
    fn gamma_equal_beta_fails_everywhere() {
        let s = StepSchedule::constant(0.5, 0.1, 0.5);
        let v = s.validate(10);
        assert_eq!(v.len(), 10);
        assert!(v
            .iter()
            .enumerate()
            .all(|(n, x)| x.index == Some(n) && x.kind == ViolationKind::GammaUpper));
    }

    #[test]
    fn recurrence_counterexample() {
        let s = StepSchedule {
            gammas: Sequence::repeat_last(vec![0.3, 0.2]),
            etas: Sequence::then(vec![0.1], 0.0),
            eps: 0.1,
            beta: 1.0,
            mus: None,
            alpha: 1.0,
        };
        let v = s.validate(5);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].index, Some(0));
        assert_eq!(v[0].kind, ViolationKind::StepRecurrence);
        assert!((v[0].lhs - 0.13).abs() < 1e-15);
        assert!((v[0].rhs - 0.1).abs() < 1e-15);
        assert!(v[0].to_string().contains("(1+eta_n)*gamma_n - gamma_{n+1} <= c*eta_n"));
    }

    #[test]
    fn eps_range_and_eta_tail() {
        let mut s = StepSchedule::constant(0.25, 0.4, 0.5);
        assert!(s
            .validate(1)
            .iter()
            .any(|v| v.kind == ViolationKind::EpsUpper));
        s.eps = 0.1;
        s.etas = Sequence::constant(0.01);
        assert!(s
            .validate(1)
            .iter()
            .any(|v| v.kind == ViolationKind::EtaSummable));
    }

    #[test]
    fn scaled_family_conditions() {
        let s = StepSchedule::constant(0.2, 0.05, 0.5)
            .with_etas(Sequence::then(vec![0.5], 0.0))
            .with_scaling(Sequence::repeat_last(vec![1.0, 1.4, 1.4]), 0.8);
        assert!(s.validate(5).is_empty(), "{:?}", s.validate(5));

        let s = StepSchedule::constant(0.2, 0.05, 0.5)
            .with_scaling(Sequence::repeat_last(vec![1.0, 1.4]), 0.8);
        let v = s.validate(5);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::MuRecurrence);

        let s = StepSchedule::constant(0.2, 0.05, 0.5)
            .with_scaling(Sequence::constant(0.5), 0.8);
        assert!(s.validate(2).iter().all(|v| v.kind == ViolationKind::MuLower));
    }

    #[test]
    fn default_schedule_is_admissible() {
        for beta in [0.01, 0.25, 0.5, 1.0, 10.0] {
            let s = StepSchedule::default_for(beta);
            assert!(s.validate(50).is_empty(), "beta = {beta}");
        }
    }
}
