//! Forward-backward splitting with Bregman distances.
//!
//! Minimizes `φ(x) + ψ(Lx)` over `ℝ^m` where `φ` is separable and
//! prox-friendly, `ψ` is smooth on the interior of its domain and `L` is a
//! small dense matrix. Instead of a Euclidean gradient step the solver moves
//! through the mirror map of a Legendre function `f`:
//!
//! ```text
//! x_{n+1} = Prox^f_{γ_n φ}(∇f(x_n) − γ_n Lᵀ∇ψ(Lx_n))
//! ```
//!
//! which keeps iterates strictly inside `int dom f` and only needs
//! `f ≽ β ψ∘L` (relative smoothness) rather than a Lipschitz gradient.
//!
//! Module map:
//!
//! | module | contents |
//! |---|---|
//! | [`scalar`] | Lambert W₀ and a bracketed monotone root solver |
//! | [`legendre`] | entropy-type Legendre functions and their Bregman distances |
//! | [`prox`] | closed-form and numeric Bregman proximity operators |
//! | [`linalg`] | dense matrix with adjoint |
//! | [`schedule`] | step-size sequences and their admissibility checks |
//! | [`solver`] | the forward-backward iteration, traces and diagnostics |
//! | [`multiblock`] | block-separable problems (Itakura–Saito / Kullback–Leibler regression) |
//! | [`oracle`] | brute-force reference solvers used by the tests |
//! | [`problem_file`] | the INI-like problem file and CSV trace formats |

// `!(a < b)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod legendre;
pub mod linalg;
pub mod multiblock;
pub mod oracle;
pub mod problem_file;
pub mod prox;
pub mod scalar;
pub mod schedule;
pub mod solver;

pub use error::{Error, Result};
pub use legendre::{Legendre, LegendreKind};
pub use linalg::DenseMatrix;
pub use multiblock::{MultiBlockProblem, RegressionKind};
pub use prox::{PhiSpec, ProxOperator};
pub use schedule::{Sequence, StepSchedule};
pub use solver::{CompositeProblem, IterateTrace, SolveReport, StopReason, StopRule};
