//! Acceptance criteria 1-10. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bregman_fb::legendre::LegendreKind;
use bregman_fb::linalg::DenseMatrix;
use bregman_fb::multiblock::{
    build_is_regression, build_kl_regression, mb_solve, subadditivity_check, RegressionKind,
};
use bregman_fb::oracle::{grid_refine_minimize, prox_residual, GridBox};
use bregman_fb::prox::{lookup_closed_form, prox_numeric_scalar, prox_scalar, ClosedForm, PhiSpec};
use bregman_fb::scalar::lambert_w0;
use bregman_fb::schedule::{Sequence, StepSchedule, ViolationKind};
use bregman_fb::solver::{check_trace_inequalities, solve, StopReason, StopRule};

const SEED: u64 = 0x5eed_b4e6;

struct Outcome {
    pass: bool,
    detail: String,
}

fn run(id: u32, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let in_time = elapsed <= budget;
    let pass = out.pass && in_time;
    println!(
        "criterion {id:>2} {}: {name}: {} [{:.3} s, budget {:.3} s{}]",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64(),
        budget.as_secs_f64(),
        if in_time { "" } else { ", over budget" },
    );
    pass
}

fn mat(rows: usize, cols: usize, v: &[f64]) -> DenseMatrix {
    DenseMatrix::from_row_major(rows, cols, v.to_vec()).unwrap()
}

/// A random `(φ, γ, ξ)` inside the validity domain of `form`.
fn sample_instance(form: ClosedForm, rng: &mut ChaCha8Rng) -> (PhiSpec, f64, f64) {
    let gamma = rng.gen_range(0.1..3.0);
    let xi = rng.gen_range(-10.0..10.0);
    let below = |rng: &mut ChaCha8Rng, b: f64| b - rng.gen_range(-4.0f64..3.0).exp();
    match form {
        ClosedForm::ShannonLinearEntropy => (
            PhiSpec::LinearEntropy {
                omega: rng.gen_range(-2.0..2.0),
            },
            gamma,
            xi,
        ),
        ClosedForm::ShannonPower => (
            PhiSpec::Power {
                p: rng.gen_range(1.1..4.0),
            },
            gamma,
            xi,
        ),
        ClosedForm::ShannonAbs => (PhiSpec::Power { p: 1.0 }, gamma, xi),
        ClosedForm::ShannonNegPower => (
            PhiSpec::NegPower {
                p: rng.gen_range(0.2..3.0),
            },
            gamma,
            xi,
        ),
        ClosedForm::ShannonNegRoot => (
            PhiSpec::NegRoot {
                p: rng.gen_range(0.1..0.9),
            },
            gamma,
            xi,
        ),
        ClosedForm::FermiDiracLinearEntropy => (
            PhiSpec::LinearEntropy {
                omega: rng.gen_range(-2.0..2.0),
            },
            1.0,
            xi,
        ),
        ClosedForm::FermiDiracOneMinusLog => (PhiSpec::OneMinusLog, 1.0, xi),
        ClosedForm::HellingerSelf => (PhiSpec::SelfHellinger, gamma, 2.0 * xi),
        ClosedForm::BurgSelf => (PhiSpec::Burg, gamma, below(rng, 0.0)),
        ClosedForm::BurgAbsLinear => {
            let alpha = rng.gen_range(0.1..3.0);
            (PhiSpec::AbsLinear { alpha }, gamma, below(rng, gamma * alpha))
        }
        ClosedForm::Identity => (PhiSpec::Zero, gamma, xi),
    }
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    let mut worst_form = None;
    let mut errors = 0;
    for form in ClosedForm::ALL {
        let legendre = form.legendre();
        for _ in 0..1000 {
            let (phi, gamma, xi) = sample_instance(form, &mut rng);
            assert_eq!(lookup_closed_form(legendre, &phi), Some(form));
            let r = prox_scalar(legendre, &phi, gamma, xi)
                .and_then(|eta| prox_residual(legendre, &phi, gamma, xi, eta));
            match r {
                Ok(r) if r > worst => {
                    worst = r;
                    worst_form = Some(form);
                }
                Ok(_) => {}
                Err(_) => errors += 1,
            }
        }
    }
    Outcome {
        pass: worst <= 1e-9 && errors == 0,
        detail: format!(
            "11 forms x 1000 inputs, worst residual {worst:.2e} ({worst_form:?}), {errors} errors (tol 1e-9)"
        ),
    }
}

fn criterion_2() -> Outcome {
    let lo = -(-1.0f64).exp() + 1e-12;
    let hi = 1e6;
    let n = 10_000;
    // Log spacing of the offset from the branch point.
    let (a, b) = ((1e-12f64).ln(), (hi - lo + 1e-12).ln());
    let mut worst = 0.0f64;
    let mut errors = 0;
    for i in 0..n {
        let t = a + (b - a) * i as f64 / (n - 1) as f64;
        let x = (lo - 1e-12 + t.exp()).clamp(lo, hi);
        match lambert_w0(x) {
            Ok(w) => worst = worst.max((w * w.exp() - x).abs() / x.abs().max(1.0)),
            Err(_) => errors += 1,
        }
    }
    Outcome {
        pass: worst <= 1e-12 && errors == 0,
        detail: format!("{n} points on [-1/e+1e-12, 1e6], worst scaled residual {worst:.2e} (tol 1e-12)"),
    }
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let mut worst = 0.0f64;
    let mut errors = 0;
    for form in ClosedForm::ALL {
        let legendre = form.legendre();
        for _ in 0..100 {
            let (phi, gamma, xi) = sample_instance(form, &mut rng);
            match (
                prox_scalar(legendre, &phi, gamma, xi),
                prox_numeric_scalar(legendre, &phi, gamma, xi),
            ) {
                (Ok(a), Ok(b)) => worst = worst.max((a - b).abs() / a.abs().max(1.0)),
                _ => errors += 1,
            }
        }
    }
    Outcome {
        pass: worst <= 1e-8 && errors == 0,
        detail: format!("11 forms x 100 inputs, worst relative gap {worst:.2e}, {errors} errors (tol 1e-8)"),
    }
}

fn sample_point(kind: LegendreKind, rng: &mut ChaCha8Rng) -> f64 {
    match kind {
        LegendreKind::BoltzmannShannon | LegendreKind::Burg => rng.gen_range(-2.0f64..2.0).exp(),
        LegendreKind::FermiDirac => rng.gen_range(0.05..0.95),
        LegendreKind::Hellinger => rng.gen_range(-0.9..0.9),
        LegendreKind::HalfSquare => rng.gen_range(-5.0..5.0),
    }
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    let (mut fd, mut inv, mut three) = (0.0f64, 0.0f64, 0.0f64);
    for kind in LegendreKind::ALL {
        for _ in 0..64 {
            let x = sample_point(kind, &mut rng);
            let y = sample_point(kind, &mut rng);
            let z = sample_point(kind, &mut rng);
            let g = kind.deriv(x).unwrap();

            let h = 1e-5 * x.abs().max(1e-2);
            let central = (kind.value(x + h) - kind.value(x - h)) / (2.0 * h);
            fd = fd.max((central - g).abs() / g.abs().max(1.0));

            let back = kind.conj_deriv(g).unwrap();
            inv = inv.max((back - x).abs() / x.abs().max(1.0));

            // D(x,y) + D(y,z) − D(x,z) = ⟨x − y, ∇f(z) − ∇f(y)⟩
            let lhs = kind.bregman(x, y) + kind.bregman(y, z) - kind.bregman(x, z);
            let rhs = (x - y) * (kind.deriv(z).unwrap() - kind.deriv(y).unwrap());
            let scale = kind.bregman(x, y) + kind.bregman(y, z) + kind.bregman(x, z) + 1.0;
            three = three.max((lhs - rhs).abs() / scale);
        }
    }
    Outcome {
        pass: fd <= 1e-6 && inv <= 1e-10 && three <= 1e-10,
        detail: format!(
            "5 kinds x 64 samples, finite-difference {fd:.2e} (tol 1e-6), inversion {inv:.2e} (tol 1e-10), three-point {three:.2e} (tol 1e-10)"
        ),
    }
}

fn criterion_5() -> Outcome {
    let mb = build_kl_regression(mat(1, 1, &[2.0]), vec![6.0], vec![PhiSpec::Zero]).unwrap();
    let p = mb.flatten();
    let s = StepSchedule::constant(0.25, 0.05, 0.5);
    let stop = StopRule {
        tol: 1e-12,
        max_iter: 200,
    };
    let x_ref = [3.0];
    let (rep, trace) = solve(&p, &s, &[1.0], stop, Some(&x_ref)).unwrap();
    let diag = check_trace_inequalities(&p, &s, &trace, &x_ref).unwrap();
    let err = (rep.x[0] - 3.0).abs();
    Outcome {
        pass: p.beta() == 0.5 && err <= 1e-6 && rep.iterations <= 200 && diag.ok(),
        detail: format!(
            "|x_N - 3| = {err:.2e} after N = {} ({}), monotone worst {:.2e} (tol 1e-12), quasi-Bregman worst {:.2e} (tol 1e-10)",
            rep.iterations, rep.stop, diag.monotone_worst, diag.quasi_bregman_worst
        ),
    }
}

fn is_toy_objective(x: &[f64]) -> f64 {
    let t = x[0];
    if t <= 0.0 {
        return f64::INFINITY;
    }
    t + (t - t.ln() - 1.0)
}

fn criterion_6() -> Outcome {
    let mb = build_is_regression(mat(1, 1, &[1.0]), vec![1.0], vec![PhiSpec::AbsLinear { alpha: 1.0 }])
        .unwrap();
    let p = mb.flatten();
    let s = StepSchedule::constant(0.45, 0.05, p.beta());
    let stop = StopRule {
        tol: 1e-13,
        max_iter: 1000,
    };
    let (rep, _) = solve(&p, &s, &[2.0], stop, None).unwrap();
    let oracle = grid_refine_minimize(is_toy_objective, &GridBox::cube(0.01, 5.0, 1).unwrap(), 30, 11)
        .unwrap();
    let err = (rep.x[0] - 0.5).abs();
    let gap = (rep.objective - oracle.value).abs();
    Outcome {
        pass: err <= 1e-6 && gap <= 1e-8,
        detail: format!(
            "|x - 0.5| = {err:.2e} (tol 1e-6), |objective - oracle| = {gap:.2e} (tol 1e-8) after {} iterations",
            rep.iterations
        ),
    }
}

/// Written out from the formulas, independent of the library objective.
fn is_desk_objective(x: &[f64]) -> f64 {
    if x.iter().any(|&t| t <= 0.0) {
        return f64::INFINITY;
    }
    let is = |y: f64, r: f64| y / r - (y / r).ln() - 1.0;
    0.1 * x[0] + 0.5 * x[1] * x[1] + is(x[0] + 0.5 * x[1], 1.5) + is(0.3 * x[0] + x[1], 1.3)
}

fn kl_desk_objective(x: &[f64]) -> f64 {
    if x.iter().any(|&t| t <= 0.0) {
        return f64::INFINITY;
    }
    let kl = |y: f64, r: f64| y * (y / r).ln() - y + r;
    x[0] * x[0].ln() - x[0] + 0.5 * x[1] * x[1] + kl(2.0 * x[0] + x[1], 3.0) + kl(0.5 * x[0] + 1.5 * x[1], 2.0)
}

fn criterion_7() -> Outcome {
    let is = build_is_regression(
        mat(2, 2, &[1.0, 0.5, 0.3, 1.0]),
        vec![1.5, 1.3],
        vec![PhiSpec::AbsLinear { alpha: 0.1 }, PhiSpec::Power { p: 2.0 }],
    )
    .unwrap();
    let kl = build_kl_regression(
        mat(2, 2, &[2.0, 1.0, 0.5, 1.5]),
        vec![3.0, 2.0],
        vec![PhiSpec::LinearEntropy { omega: 1.0 }, PhiSpec::Power { p: 2.0 }],
    )
    .unwrap();
    let stop = StopRule {
        tol: 1e-12,
        max_iter: 20_000,
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, mb, reference) in [
        ("is", &is, is_desk_objective as fn(&[f64]) -> f64),
        ("kl", &kl, kl_desk_objective as fn(&[f64]) -> f64),
    ] {
        let s = StepSchedule::default_for(mb.beta());
        let x0 = [1.0, 1.0];
        let (rep, trace) = mb_solve(mb, &s, &x0, stop, None).unwrap();
        let (flat_rep, flat_trace) = solve(&mb.flatten(), &s, &x0, stop, None).unwrap();
        let oracle =
            grid_refine_minimize(reference, &GridBox::cube(1e-3, 10.0, 2).unwrap(), 30, 11).unwrap();
        let gap = (rep.objective - oracle.value).abs();
        let same = rep == flat_rep && trace == flat_trace;
        pass &= gap <= 1e-5 && same && rep.stop == StopReason::ToleranceMet;
        parts.push(format!(
            "{name}: |objective - oracle| = {gap:.2e}, {} iterations, block trace == flattened: {same}",
            rep.iterations
        ));
    }
    Outcome {
        pass,
        detail: format!("{} (tol 1e-5)", parts.join("; ")),
    }
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 8);
    let tuples: Vec<(Vec<f64>, Vec<f64>)> = (0..1000)
        .map(|_| {
            let m = rng.gen_range(1..=6);
            let mut draw = || (0..m).map(|_| rng.gen_range(-4.0f64..4.0).exp()).collect::<Vec<_>>();
            (draw(), draw())
        })
        .collect();
    let kl = subadditivity_check(RegressionKind::KullbackLeibler, &tuples);
    let is = subadditivity_check(RegressionKind::ItakuraSaito, &tuples);
    Outcome {
        pass: kl <= 1e-12 && is <= 1e-12,
        detail: format!("1000 tuples, m <= 6, worst slack kl {kl:.2e}, is {is:.2e} (tol 1e-12)"),
    }
}

fn criterion_9() -> Outcome {
    let horizon = 1000;
    let accepted = [
        StepSchedule::constant(0.25, 0.05, 0.5),
        StepSchedule::constant(0.45, 0.05, 1.0),
        StepSchedule::default_for(0.5),
        StepSchedule::default_for(1.0 / 3.5),
    ]
    .iter()
    .all(|s| s.validate(horizon).is_empty());

    let at_beta = StepSchedule::constant(0.5, 0.05, 0.5).validate(horizon);
    let rejects_beta = !at_beta.is_empty() && at_beta.iter().all(|v| v.kind == ViolationKind::GammaUpper);

    let counter = StepSchedule {
        gammas: Sequence::repeat_last(vec![0.3, 0.2]),
        etas: Sequence::then(vec![0.1], 0.0),
        eps: 0.1,
        beta: 1.0,
        mus: None,
        alpha: 1.0,
    }
    .validate(horizon);
    let exact = counter.len() == 1
        && counter[0].index == Some(0)
        && counter[0].kind == ViolationKind::StepRecurrence
        && (counter[0].lhs - 0.13).abs() < 1e-15
        && (counter[0].rhs - 0.1).abs() < 1e-15;
    let reported = counter.first().map(|v| v.to_string()).unwrap_or_default();
    Outcome {
        pass: accepted && rejects_beta && exact,
        detail: format!(
            "canonical schedules accepted: {accepted}, gamma = beta rejected: {rejects_beta}, counterexample: \"{reported}\""
        ),
    }
}

fn criterion_10() -> Outcome {
    let stop = StopRule {
        tol: 1e-12,
        max_iter: 10,
    };
    let kl = build_kl_regression(mat(1, 1, &[2.0]), vec![6.0], vec![PhiSpec::Zero]).unwrap();
    let (kl_rep, kl_trace) =
        solve(&kl.flatten(), &StepSchedule::constant(0.25, 0.05, 0.5), &[3.0], stop, None).unwrap();
    let is = build_is_regression(mat(1, 1, &[1.0]), vec![1.0], vec![PhiSpec::AbsLinear { alpha: 1.0 }])
        .unwrap();
    let (is_rep, is_trace) =
        solve(&is.flatten(), &StepSchedule::constant(0.45, 0.05, 1.0), &[0.5], stop, None).unwrap();
    let kl_d = kl_trace.rows.last().map_or(f64::NAN, |r| r.displacement);
    let is_d = is_trace.rows.last().map_or(f64::NAN, |r| r.displacement);
    Outcome {
        pass: kl_rep.iterations == 1 && is_rep.iterations == 1 && kl_d <= 1e-12 && is_d <= 1e-12,
        detail: format!(
            "kl: {} step(s), displacement {kl_d:.2e}; is: {} step(s), displacement {is_d:.2e} (tol 1e-12)",
            kl_rep.iterations, is_rep.iterations
        ),
    }
}

fn main() -> ExitCode {
    let ms = Duration::from_millis;
    let results = [
        run(1, "prox catalog stationarity", ms(2000), criterion_1),
        run(2, "lambert w inverse residual", ms(1000), criterion_2),
        run(3, "closed form vs numeric prox", ms(2000), criterion_3),
        run(4, "legendre gradient checks", ms(1000), criterion_4),
        run(5, "kl toy convergence", ms(100), criterion_5),
        run(6, "is toy convergence", ms(100), criterion_6),
        run(7, "multi-block desk instances", ms(5000), criterion_7),
        run(8, "subadditivity", ms(1000), criterion_8),
        run(9, "schedule validator", ms(1000), criterion_9),
        run(10, "fixed-point property", ms(100), criterion_10),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
