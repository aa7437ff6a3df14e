//! The Bregman forward-backward iteration
//!
//! ```text
//! x_{n+1} = Prox^{μ_n f}_{γ_n φ}(μ_n ∇f(x_n) − γ_n Lᵀ∇ψ(Lx_n))
//! ```
//!
//! for `minimize φ(x) + ψ(Lx)`, together with the run diagnostics: objective
//! monotonicity and the stationary quasi-Bregman inequality
//! `D^{g_{n+1}}(x, x_{n+1}) ≤ (1 + ωη_n) D^{g_n}(x, x_n)` with
//! `g_n = μ_n f − γ_n ψ∘L` and `ω = 1 + 1/ε`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::legendre::{Legendre, LegendreKind};
use crate::linalg::DenseMatrix;
use crate::prox::{prox_scalar, PhiSpec};
use crate::schedule::StepSchedule;

/// Relative slack allowed when checking `Φ(x_{n+1}) ≤ Φ(x_n)`.
pub const MONOTONE_REL_SLACK: f64 = 1e-12;
/// Absolute slack allowed in the quasi-Bregman inequality.
pub const QUASI_BREGMAN_SLACK: f64 = 1e-10;

/// The smooth term `ψ`, differentiable on the interior of its domain.
pub trait SmoothFunction: fmt::Debug + Send + Sync {
    fn dim(&self) -> usize;

    /// `ψ(y)`, `+∞` outside `dom ψ`.
    fn value(&self, y: &[f64]) -> f64;

    fn in_interior(&self, y: &[f64]) -> bool;

    fn grad(&self, y: &[f64]) -> Result<Vec<f64>>;

    /// `D^ψ(u, v)`.
    fn bregman(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        if !self.in_interior(v) {
            return Ok(f64::INFINITY);
        }
        let g = self.grad(v)?;
        let inner: f64 = u.iter().zip(v).zip(&g).map(|((a, b), d)| (a - b) * d).sum();
        Ok(self.value(u) - self.value(v) - inner)
    }
}

/// `ψ(y) = Σ_k D^ϑ(y_k, ρ_k)`: a separable divergence to fixed data.
///
/// Burg gives the Itakura–Saito fit, Boltzmann–Shannon the Kullback–Leibler
/// fit and `half_square` the least-squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct DataDivergence {
    kind: LegendreKind,
    data: Vec<f64>,
}

impl DataDivergence {
    pub fn new(kind: LegendreKind, data: Vec<f64>) -> Result<Self> {
        if let Some(r) = data.iter().find(|&&r| !kind.in_interior(r)) {
            return Err(Error::param(format!(
                "data value {r} is outside int dom {kind}"
            )));
        }
        Ok(DataDivergence { kind, data })
    }

    pub fn kind(&self) -> LegendreKind {
        self.kind
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

impl SmoothFunction for DataDivergence {
    fn dim(&self) -> usize {
        self.data.len()
    }

    fn value(&self, y: &[f64]) -> f64 {
        y.iter()
            .zip(&self.data)
            .fold(0.0, |acc, (&t, &r)| acc + self.kind.bregman(t, r))
    }

    fn in_interior(&self, y: &[f64]) -> bool {
        y.len() == self.data.len() && y.iter().all(|&t| self.kind.in_interior(t))
    }

    fn grad(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.data.len() {
            return Err(Error::DimensionMismatch {
                expected: self.data.len(),
                got: y.len(),
            });
        }
        y.iter()
            .zip(&self.data)
            .map(|(&t, &r)| Ok(self.kind.deriv(t)? - self.kind.deriv_unchecked(r)))
            .collect()
    }

    fn bregman(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        // ψ differs from Σϑ by an affine term, so D^ψ = D^ϑ coordinatewise.
        Ok(u.iter()
            .zip(v)
            .fold(0.0, |acc, (&a, &b)| acc + self.kind.bregman(a, b)))
    }
}

/// `minimize φ(x) + ψ(Lx)` with a Legendre function `f ≽ β ψ∘L`.
#[derive(Debug)]
pub struct CompositeProblem {
    phi: Vec<PhiSpec>,
    psi: Box<dyn SmoothFunction>,
    op: DenseMatrix,
    legendre: Legendre,
    beta: f64,
}

impl CompositeProblem {
    pub fn new(
        phi: Vec<PhiSpec>,
        psi: Box<dyn SmoothFunction>,
        op: DenseMatrix,
        legendre: Legendre,
        beta: f64,
    ) -> Result<Self> {
        let m = legendre.dim();
        if phi.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: phi.len(),
            });
        }
        if op.cols() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: op.cols(),
            });
        }
        if op.rows() != psi.dim() {
            return Err(Error::DimensionMismatch {
                expected: psi.dim(),
                got: op.rows(),
            });
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::param(format!("beta must be positive, got {beta}")));
        }
        for p in &phi {
            p.validate()?;
        }
        Ok(CompositeProblem {
            phi,
            psi,
            op,
            legendre,
            beta,
        })
    }

    pub fn dim(&self) -> usize {
        self.legendre.dim()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn legendre(&self) -> &Legendre {
        &self.legendre
    }

    pub fn phi(&self) -> &[PhiSpec] {
        &self.phi
    }

    pub fn op(&self) -> &DenseMatrix {
        &self.op
    }

    pub fn psi(&self) -> &dyn SmoothFunction {
        self.psi.as_ref()
    }

    /// `Φ(x) = φ(x) + ψ(Lx)`, `+∞` outside `dom Φ`.
    pub fn objective(&self, x: &[f64]) -> f64 {
        if x.len() != self.dim() {
            return f64::INFINITY;
        }
        let phi: f64 = self
            .phi
            .iter()
            .zip(x)
            .fold(0.0, |acc, (p, &t)| acc + p.value(t));
        if phi == f64::INFINITY {
            return phi;
        }
        match self.op.apply(x) {
            Ok(y) => phi + self.psi.value(&y),
            Err(_) => f64::INFINITY,
        }
    }

    /// One step `Prox^{μf}_{γφ}(μ∇f(x) − γLᵀ∇ψ(Lx))`.
    ///
    /// The rescaled prox is evaluated as `Prox^f_{(γ/μ)φ}(·/μ)`.
    pub fn forward_backward_step(&self, mu: f64, gamma: f64, x: &[f64]) -> Result<Vec<f64>> {
        if !(mu > 0.0) {
            return Err(Error::param(format!("mu must be positive, got {mu}")));
        }
        let grad_f = self.legendre.grad(x)?;
        let y = self.op.apply(x)?;
        if !self.psi.in_interior(&y) {
            return Err(Error::domain("Lx left int dom psi"));
        }
        let grad_psi = self.psi.grad(&y)?;
        let back = self.op.adjoint_apply(&grad_psi)?;
        let scaled = gamma / mu;
        self.legendre
            .kinds()
            .iter()
            .zip(&self.phi)
            .zip(grad_f.iter().zip(&back))
            .map(|((&k, p), (&gf, &b))| {
                let z = mu * gf - gamma * b;
                prox_scalar(k, p, scaled, z / mu)
            })
            .collect()
    }

    /// `D^{g}(x, y)` for `g = μf − γψ∘L`.
    pub fn bregman_g(&self, mu: f64, gamma: f64, x: &[f64], y: &[f64]) -> Result<f64> {
        let df = self.legendre.bregman(x, y)?;
        let lx = self.op.apply(x)?;
        let ly = self.op.apply(y)?;
        let dpsi = self.psi.bregman(&lx, &ly)?;
        Ok(mu * df - gamma * dpsi)
    }

    /// Samples interior pairs and checks `D^f(x, z) ≥ β D^ψ(Lx, Lz)`.
    ///
    /// A clean report does not certify relative smoothness; a violation
    /// disproves the supplied `β`.
    pub fn check_relative_smoothness(&self, samples: usize, seed: u64) -> SmoothnessReport {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut report = SmoothnessReport {
            tested: 0,
            violations: 0,
            worst_slack: f64::NEG_INFINITY,
        };
        for _ in 0..samples {
            let x = sample_interior(&self.legendre, &mut rng);
            let z = sample_interior(&self.legendre, &mut rng);
            let (Ok(lx), Ok(lz)) = (self.op.apply(&x), self.op.apply(&z)) else {
                continue;
            };
            if !self.psi.in_interior(&lz) || self.psi.value(&lx).is_infinite() {
                continue;
            }
            let (Ok(df), Ok(dpsi)) = (self.legendre.bregman(&x, &z), self.psi.bregman(&lx, &lz))
            else {
                continue;
            };
            let slack = (self.beta * dpsi - df) / df.abs().max(1.0);
            report.tested += 1;
            if slack > 1e-12 {
                report.violations += 1;
            }
            report.worst_slack = report.worst_slack.max(slack);
        }
        report
    }
}

/// Outcome of [`CompositeProblem::check_relative_smoothness`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessReport {
    pub tested: usize,
    pub violations: usize,
    /// Largest `(β D^ψ − D^f) / max(1, D^f)` seen.
    pub worst_slack: f64,
}

fn sample_interior(f: &Legendre, rng: &mut impl Rng) -> Vec<f64> {
    f.kinds()
        .iter()
        .map(|k| match k {
            LegendreKind::BoltzmannShannon | LegendreKind::Burg => rng.gen_range(-3.0f64..3.0).exp(),
            LegendreKind::FermiDirac => rng.gen_range(0.01..0.99),
            LegendreKind::Hellinger => rng.gen_range(-0.99..0.99),
            LegendreKind::HalfSquare => rng.gen_range(-10.0..10.0),
        })
        .collect()
}

/// When to stop iterating.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    /// Stop once `‖x_{n+1} − x_n‖₂ ≤ tol`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            tol: 1e-10,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StopReason {
    ToleranceMet,
    MaxIterations,
    DomainFailure { iteration: usize, message: String },
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopReason::ToleranceMet => f.write_str("tolerance met"),
            StopReason::MaxIterations => f.write_str("max iterations"),
            StopReason::DomainFailure { iteration, message } => {
                write!(f, "domain failure at iteration {iteration}: {message}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub stop: StopReason,
    pub objective: f64,
}

/// One iterate `x_n` and the quantities attached to it.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub n: usize,
    pub x: Vec<f64>,
    /// `γ_n`, the step used to leave `x_n`.
    pub gamma: f64,
    pub mu: f64,
    pub objective: f64,
    /// `‖x_n − x_{n−1}‖₂`, zero for `n = 0`.
    pub displacement: f64,
    /// `D^{g_n}(x_ref, x_n)` when a reference point was supplied.
    pub bregman_ref: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterateTrace {
    pub rows: Vec<TraceRow>,
}

impl IterateTrace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

pub(crate) fn euclidean_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0, |acc, (u, v)| acc + (u - v) * (u - v))
        .sqrt()
}

/// Rejects schedules that fail any admissibility check over the horizon.
pub fn validate_schedule(s: &StepSchedule, horizon: usize) -> Result<()> {
    let v = s.validate(horizon.max(1));
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidSchedule(v))
    }
}

/// Runs the iteration from `x0` until the step displacement drops below
/// `stop.tol` or `stop.max_iter` steps have been taken.
///
/// A prox or gradient failure mid-run ends the run with
/// [`StopReason::DomainFailure`] and the trace up to that point.
pub fn solve(
    p: &CompositeProblem,
    s: &StepSchedule,
    x0: &[f64],
    stop: StopRule,
    x_ref: Option<&[f64]>,
) -> Result<(SolveReport, IterateTrace)> {
    if s.beta > p.beta {
        return Err(Error::param(format!(
            "schedule beta {} exceeds problem beta {}",
            s.beta, p.beta
        )));
    }
    validate_schedule(s, stop.max_iter + 1)?;
    if x0.len() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: x0.len(),
        });
    }
    if let Some(i) = p.legendre.first_non_interior(x0) {
        return Err(Error::domain(format!(
            "x0[{i}] = {} is not in int dom {}",
            x0[i],
            p.legendre.kinds()[i]
        )));
    }

    let row = |n: usize, x: Vec<f64>, displacement: f64| -> TraceRow {
        let (gamma, mu) = (s.gamma(n), s.mu(n));
        TraceRow {
            n,
            gamma,
            mu,
            objective: p.objective(&x),
            displacement,
            bregman_ref: x_ref.map(|r| p.bregman_g(mu, gamma, r, &x).unwrap_or(f64::NAN)),
            x,
        }
    };

    let mut trace = IterateTrace::default();
    trace.rows.push(row(0, x0.to_vec(), 0.0));
    let mut x = x0.to_vec();
    let mut stop_reason = StopReason::MaxIterations;
    let mut iterations = stop.max_iter;

    for n in 0..stop.max_iter {
        let next = match p.forward_backward_step(s.mu(n), s.gamma(n), &x) {
            Ok(v) if p.legendre.in_interior(&v) => v,
            Ok(v) => {
                stop_reason = StopReason::DomainFailure {
                    iteration: n + 1,
                    message: format!("iterate {v:?} left int dom f"),
                };
                iterations = n;
                break;
            }
            Err(e) => {
                stop_reason = StopReason::DomainFailure {
                    iteration: n + 1,
                    message: e.to_string(),
                };
                iterations = n;
                break;
            }
        };
        let disp = euclidean_distance(&next, &x);
        trace.rows.push(row(n + 1, next.clone(), disp));
        x = next;
        if disp <= stop.tol {
            stop_reason = StopReason::ToleranceMet;
            iterations = n + 1;
            break;
        }
    }

    let report = SolveReport {
        objective: p.objective(&x),
        x,
        iterations,
        stop: stop_reason,
    };
    Ok((report, trace))
}

/// Result of [`check_trace_inequalities`].
#[derive(Debug, Clone, PartialEq)]
pub struct TraceDiagnostics {
    /// Largest `(Φ_{n+1} − Φ_n) / max(1, |Φ_n|)`.
    pub monotone_worst: f64,
    pub monotone_first_violation: Option<usize>,
    /// Largest `D^{g_{n+1}}(x, x_{n+1}) − (1 + ωη_n) D^{g_n}(x, x_n)`.
    pub quasi_bregman_worst: f64,
    pub quasi_bregman_first_violation: Option<usize>,
}

impl TraceDiagnostics {
    pub fn monotone_ok(&self) -> bool {
        self.monotone_first_violation.is_none()
    }

    pub fn quasi_bregman_ok(&self) -> bool {
        self.quasi_bregman_first_violation.is_none()
    }

    pub fn ok(&self) -> bool {
        self.monotone_ok() && self.quasi_bregman_ok()
    }
}

/// Checks objective monotonicity and the quasi-Bregman inequality on every
/// consecutive pair of the trace. Indices in the result name the later row.
pub fn check_trace_inequalities(
    p: &CompositeProblem,
    s: &StepSchedule,
    trace: &IterateTrace,
    x_ref: &[f64],
) -> Result<TraceDiagnostics> {
    if !p.legendre.in_domain(x_ref) || !p.objective(x_ref).is_finite() {
        return Err(Error::domain(format!(
            "reference point {x_ref:?} is outside dom Phi ∩ dom f"
        )));
    }
    let omega = s.omega();
    let mut d = TraceDiagnostics {
        monotone_worst: f64::NEG_INFINITY,
        monotone_first_violation: None,
        quasi_bregman_worst: f64::NEG_INFINITY,
        quasi_bregman_first_violation: None,
    };
    for pair in trace.rows.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let rel = (b.objective - a.objective) / a.objective.abs().max(1.0);
        d.monotone_worst = d.monotone_worst.max(rel);
        if !(rel <= MONOTONE_REL_SLACK) && d.monotone_first_violation.is_none() {
            d.monotone_first_violation = Some(b.n);
        }

        let da = p.bregman_g(a.mu, a.gamma, x_ref, &a.x)?;
        let db = p.bregman_g(b.mu, b.gamma, x_ref, &b.x)?;
        let slack = db - (1.0 + omega * s.eta(a.n)) * da;
        d.quasi_bregman_worst = d.quasi_bregman_worst.max(slack);
        if !(slack <= QUASI_BREGMAN_SLACK) && d.quasi_bregman_first_violation.is_none() {
            d.quasi_bregman_first_violation = Some(b.n);
        }
    }
    Ok(d)
}
