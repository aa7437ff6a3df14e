//! Block-separable problems
//!
//! ```text
//! minimize Σ_i φ_i(ξ_i) + Σ_k D^ϑ(Σ_i ω_ki ξ_i, ρ_k)
//! ```
//!
//! with scalar blocks, positive weights `ω` and positive data `ρ`. Burg
//! entropy gives Itakura–Saito regression, Boltzmann–Shannon entropy gives
//! Kullback–Leibler regression. Each block is updated with its own prox:
//!
//! ```text
//! ξ_{i,n+1} = Prox^{ϑ}_{γ_n φ_i}(ϑ′(ξ_{i,n}) − γ_n Σ_k ω_ki ∇ψ_k(Σ_j ω_kj ξ_{j,n}))
//! ```
//!
//! The step bound comes from the subadditivity constants `σ_k` and the
//! per-pair relative smoothness constants `β_ik` through
//! `β = 1 / Σ_k σ_k / min_i β_ik`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::legendre::{Legendre, LegendreKind};
use crate::linalg::DenseMatrix;
use crate::prox::{prox_domain, prox_scalar, PhiSpec, ProxDomain};
use crate::schedule::StepSchedule;
use crate::solver::{
    euclidean_distance, validate_schedule, CompositeProblem, DataDivergence, IterateTrace,
    SolveReport, StopReason, StopRule, TraceRow,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegressionKind {
    ItakuraSaito,
    KullbackLeibler,
}

impl RegressionKind {
    pub fn entropy(self) -> LegendreKind {
        match self {
            RegressionKind::ItakuraSaito => LegendreKind::Burg,
            RegressionKind::KullbackLeibler => LegendreKind::BoltzmannShannon,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RegressionKind::ItakuraSaito => "is_regression",
            RegressionKind::KullbackLeibler => "kl_regression",
        }
    }
}

impl fmt::Display for RegressionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RegressionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "is_regression" | "itakura_saito" => Ok(RegressionKind::ItakuraSaito),
            "kl_regression" | "kullback_leibler" => Ok(RegressionKind::KullbackLeibler),
            _ => Err(Error::param(format!("unknown regression kind '{s}'"))),
        }
    }
}

/// `σ_k` and `β_ik` that make the multi-block step bound valid.
///
/// Both divergences are subadditive (`σ_k = 1`). Itakura–Saito is
/// scale-invariant, `D(ωξ, ωη) = D(ξ, η)`, so `β_ik = 1`; Kullback–Leibler
/// scales linearly, `D(ωξ, ωη) = ω D(ξ, η)`, so `β_ik = 1/ω_ki`.
///
/// `omega` is `p × m`; the returned `β` matrix has the same layout.
pub fn default_constants(
    kind: RegressionKind,
    omega: &DenseMatrix,
) -> Result<(Vec<f64>, DenseMatrix)> {
    if let Some(w) = omega.as_slice().iter().find(|&&w| !(w > 0.0 && w.is_finite())) {
        return Err(Error::param(format!("weights must be positive, got {w}")));
    }
    let sigma = vec![1.0; omega.rows()];
    let beta = omega
        .as_slice()
        .iter()
        .map(|&w| match kind {
            RegressionKind::ItakuraSaito => 1.0,
            RegressionKind::KullbackLeibler => 1.0 / w,
        })
        .collect();
    Ok((
        sigma,
        DenseMatrix::from_row_major(omega.rows(), omega.cols(), beta)?,
    ))
}

/// Largest `D^ϑ(Σξ_i, Ση_i) − Σ D^ϑ(ξ_i, η_i)` over the given tuples.
pub fn subadditivity_check(kind: RegressionKind, tuples: &[(Vec<f64>, Vec<f64>)]) -> f64 {
    let e = kind.entropy();
    tuples
        .iter()
        .map(|(xs, ys)| {
            let sx: f64 = xs.iter().sum();
            let sy: f64 = ys.iter().sum();
            let lhs = e.bregman(sx, sy);
            let rhs: f64 = xs.iter().zip(ys).map(|(&a, &b)| e.bregman(a, b)).sum();
            lhs - rhs
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiBlockProblem {
    kind: RegressionKind,
    /// `p × m`, entry `(k, i)` is `ω_ik`.
    omega: DenseMatrix,
    rho: Vec<f64>,
    phis: Vec<PhiSpec>,
    sigma: Vec<f64>,
    /// `p × m`, entry `(k, i)` is `β_ik`.
    beta_ik: DenseMatrix,
}

/// Itakura–Saito regression with the default constants.
pub fn build_is_regression(
    omega: DenseMatrix,
    rho: Vec<f64>,
    phis: Vec<PhiSpec>,
) -> Result<MultiBlockProblem> {
    MultiBlockProblem::with_defaults(RegressionKind::ItakuraSaito, omega, rho, phis)
}

/// Kullback–Leibler regression with the default constants.
pub fn build_kl_regression(
    omega: DenseMatrix,
    rho: Vec<f64>,
    phis: Vec<PhiSpec>,
) -> Result<MultiBlockProblem> {
    MultiBlockProblem::with_defaults(RegressionKind::KullbackLeibler, omega, rho, phis)
}

impl MultiBlockProblem {
    pub fn with_defaults(
        kind: RegressionKind,
        omega: DenseMatrix,
        rho: Vec<f64>,
        phis: Vec<PhiSpec>,
    ) -> Result<Self> {
        let (sigma, beta_ik) = default_constants(kind, &omega)?;
        MultiBlockProblem::new(kind, omega, rho, phis, sigma, beta_ik)
    }

    pub fn new(
        kind: RegressionKind,
        omega: DenseMatrix,
        rho: Vec<f64>,
        phis: Vec<PhiSpec>,
        sigma: Vec<f64>,
        beta_ik: DenseMatrix,
    ) -> Result<Self> {
        let (p, m) = (omega.rows(), omega.cols());
        if m == 0 || p == 0 {
            return Err(Error::param("need at least one block and one coupling"));
        }
        if rho.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: rho.len(),
            });
        }
        if phis.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: phis.len(),
            });
        }
        if sigma.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: sigma.len(),
            });
        }
        if beta_ik.rows() != p || beta_ik.cols() != m {
            return Err(Error::DimensionMismatch {
                expected: p * m,
                got: beta_ik.rows() * beta_ik.cols(),
            });
        }
        if let Some(w) = omega.as_slice().iter().find(|&&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::param(format!("weights must be positive, got {w}")));
        }
        if let Some(r) = rho.iter().find(|&&r| !(r > 0.0 && r.is_finite())) {
            return Err(Error::param(format!("data must be positive, got {r}")));
        }
        if sigma.iter().chain(beta_ik.as_slice()).any(|&c| !(c > 0.0)) {
            return Err(Error::param("sigma_k and beta_ik must be positive"));
        }
        for (i, phi) in phis.iter().enumerate() {
            phi.validate()?;
            check_block_prox(kind, phi).map_err(|e| match e {
                Error::InvalidParameter(msg) => {
                    Error::InvalidParameter(format!("block {i}: {msg}"))
                }
                other => other,
            })?;
        }
        Ok(MultiBlockProblem {
            kind,
            omega,
            rho,
            phis,
            sigma,
            beta_ik,
        })
    }

    pub fn kind(&self) -> RegressionKind {
        self.kind
    }

    pub fn blocks(&self) -> usize {
        self.omega.cols()
    }

    pub fn couplings(&self) -> usize {
        self.omega.rows()
    }

    pub fn omega(&self) -> &DenseMatrix {
        &self.omega
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn phis(&self) -> &[PhiSpec] {
        &self.phis
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    /// `β_k = min_i β_ik`.
    pub fn beta_k(&self) -> Vec<f64> {
        (0..self.couplings())
            .map(|k| {
                (0..self.blocks())
                    .map(|i| self.beta_ik.get(k, i))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    /// `β = 1 / Σ_k σ_k β_k⁻¹`.
    pub fn beta(&self) -> f64 {
        let s: f64 = self
            .sigma
            .iter()
            .zip(self.beta_k())
            .map(|(s, b)| s / b)
            .sum();
        1.0 / s
    }

    /// The equivalent problem on `ℝ^m` with `L = ω`.
    pub fn flatten(&self) -> CompositeProblem {
        let e = self.kind.entropy();
        CompositeProblem::new(
            self.phis.clone(),
            Box::new(DataDivergence::new(e, self.rho.clone()).expect("rho validated")),
            self.omega.clone(),
            Legendre::uniform(e, self.blocks()),
            self.beta(),
        )
        .expect("multi-block problem validated on construction")
    }

    /// Samples positive tuples of length `2..=max_len` and returns the worst
    /// subadditivity slack scaled by `σ_k`; non-positive means the constants hold.
    pub fn check_sigma(&self, samples: usize, max_len: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tuples = random_positive_tuples(&mut rng, samples, max_len);
        let worst = subadditivity_check(self.kind, &tuples);
        let s_min = self.sigma.iter().copied().fold(f64::INFINITY, f64::min);
        // σ ≥ 1 only loosens the inequality; σ < 1 needs the exact check.
        if s_min >= 1.0 {
            worst
        } else {
            let e = self.kind.entropy();
            tuples
                .iter()
                .map(|(xs, ys)| {
                    let lhs = e.bregman(xs.iter().sum(), ys.iter().sum());
                    let rhs: f64 = xs.iter().zip(ys).map(|(&a, &b)| e.bregman(a, b)).sum();
                    lhs - s_min * rhs
                })
                .fold(f64::NEG_INFINITY, f64::max)
        }
    }

    /// `Σ_i φ_i(ξ_i) + Σ_k D^ϑ(Σ_i ω_ki ξ_i, ρ_k)`.
    pub fn objective(&self, xi: &[f64]) -> f64 {
        let phi = self
            .phis
            .iter()
            .zip(xi)
            .fold(0.0, |acc, (p, &t)| acc + p.value(t));
        if phi == f64::INFINITY {
            return phi;
        }
        let e = self.kind.entropy();
        let fit = self
            .couplings_at(xi)
            .iter()
            .zip(&self.rho)
            .fold(0.0, |acc, (&y, &r)| acc + e.bregman(y, r));
        phi + fit
    }

    fn couplings_at(&self, xi: &[f64]) -> Vec<f64> {
        (0..self.couplings())
            .map(|k| {
                (0..self.blocks()).fold(0.0, |acc, j| acc + self.omega.get(k, j) * xi[j])
            })
            .collect()
    }

    /// One sweep of the block update with multiplier `mu` and step `gamma`.
    pub fn block_step(&self, mu: f64, gamma: f64, xi: &[f64]) -> Result<Vec<f64>> {
        let e = self.kind.entropy();
        let y = self.couplings_at(xi);
        let grad_psi = y
            .iter()
            .zip(&self.rho)
            .map(|(&yk, &r)| Ok(e.deriv(yk)? - e.deriv_unchecked(r)))
            .collect::<Result<Vec<f64>>>()?;
        let scaled = gamma / mu;
        (0..self.blocks())
            .map(|i| {
                let coupling = (0..self.couplings())
                    .fold(0.0, |acc, k| acc + self.omega.get(k, i) * grad_psi[k]);
                let z = mu * e.deriv(xi[i])? - gamma * coupling;
                prox_scalar(e, &self.phis[i], scaled, z / mu)
            })
            .collect()
    }

    /// `D^{g}(x, y)` for `g = μ Σϑ − γ ψ∘ω`.
    fn bregman_g(&self, mu: f64, gamma: f64, x: &[f64], y: &[f64]) -> f64 {
        let e = self.kind.entropy();
        if !y.iter().all(|&t| e.in_interior(t)) {
            return f64::INFINITY;
        }
        let df = x.iter().zip(y).fold(0.0, |acc, (&a, &b)| acc + e.bregman(a, b));
        let dpsi = self
            .couplings_at(x)
            .iter()
            .zip(self.couplings_at(y))
            .fold(0.0, |acc, (&a, b)| acc + e.bregman(a, b));
        mu * df - gamma * dpsi
    }
}

fn check_block_prox(kind: RegressionKind, phi: &PhiSpec) -> Result<()> {
    // With γ ≤ β(1 − ε) < 1/p the Itakura–Saito forward point is always
    // negative, so the block prox only has to accept every ξ < 0.
    if kind == RegressionKind::ItakuraSaito {
        let dom = prox_domain(LegendreKind::Burg, phi, 1.0)?;
        let covers = match dom {
            ProxDomain::All => true,
            ProxDomain::Below(b) => b >= 0.0,
            ProxDomain::Between(a, b) => a == f64::NEG_INFINITY && b >= 0.0,
        };
        if !covers {
            return Err(Error::param(format!(
                "{phi} with Burg entropy has prox domain {dom}, which does not contain (-inf, 0)"
            )));
        }
    }
    Ok(())
}

pub(crate) fn random_positive_tuples(
    rng: &mut impl Rng,
    samples: usize,
    max_len: usize,
) -> Vec<(Vec<f64>, Vec<f64>)> {
    (0..samples)
        .map(|_| {
            let len = rng.gen_range(1..=max_len.max(1));
            let mut draw = || -> Vec<f64> {
                (0..len).map(|_| rng.gen_range(-4.0f64..4.0).exp()).collect()
            };
            let xs = draw();
            let ys = draw();
            (xs, ys)
        })
        .collect()
}

/// Runs the block iteration; the trace rows carry the block values.
pub fn mb_solve(
    mb: &MultiBlockProblem,
    s: &StepSchedule,
    x0: &[f64],
    stop: StopRule,
    x_ref: Option<&[f64]>,
) -> Result<(SolveReport, IterateTrace)> {
    if s.beta > mb.beta() {
        return Err(Error::param(format!(
            "schedule beta {} exceeds the problem constant {}",
            s.beta,
            mb.beta()
        )));
    }
    validate_schedule(s, stop.max_iter + 1)?;
    let e = mb.kind.entropy();
    if x0.len() != mb.blocks() {
        return Err(Error::DimensionMismatch {
            expected: mb.blocks(),
            got: x0.len(),
        });
    }
    if let Some(i) = x0.iter().position(|&t| !e.in_interior(t)) {
        return Err(Error::domain(format!(
            "x0[{i}] = {} is not in int dom {e}",
            x0[i]
        )));
    }

    let row = |n: usize, x: Vec<f64>, displacement: f64| -> TraceRow {
        let (gamma, mu) = (s.gamma(n), s.mu(n));
        TraceRow {
            n,
            gamma,
            mu,
            objective: mb.objective(&x),
            displacement,
            bregman_ref: x_ref.map(|r| mb.bregman_g(mu, gamma, r, &x)),
            x,
        }
    };

    let mut trace = IterateTrace::default();
    trace.rows.push(row(0, x0.to_vec(), 0.0));
    let mut x = x0.to_vec();
    let mut stop_reason = StopReason::MaxIterations;
    let mut iterations = stop.max_iter;

    for n in 0..stop.max_iter {
        let next = match mb.block_step(s.mu(n), s.gamma(n), &x) {
            Ok(v) if v.iter().all(|&t| e.in_interior(t)) => v,
            Ok(v) => {
                stop_reason = StopReason::DomainFailure {
                    iteration: n + 1,
                    message: format!("iterate {v:?} left int dom f"),
                };
                iterations = n;
                break;
            }
            Err(err) => {
                stop_reason = StopReason::DomainFailure {
                    iteration: n + 1,
                    message: err.to_string(),
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
        objective: mb.objective(&x),
        x,
        iterations,
        stop: stop_reason,
    };
    Ok((report, trace))
}
