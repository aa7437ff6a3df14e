use std::fs;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bregman_fb::legendre::LegendreKind;
use bregman_fb::multiblock::mb_solve;
use bregman_fb::oracle::{grid_refine_minimize, GridBox};
use bregman_fb::problem_file::{format_f64, write_trace_csv, ProblemFile, ProblemInstance, SolveSetup};
use bregman_fb::prox::{prox_scalar, stationarity_residual, PhiSpec};
use bregman_fb::scalar::lambert_w0;
use bregman_fb::solver::{solve, StopReason};
use bregman_fb::Error;

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_SCHEDULE: u8 = 2;
const EXIT_DOMAIN: u8 = 3;
const EXIT_MAX_ITER: u8 = 4;
const EXIT_RESIDUAL: u8 = 5;

const PROX_RESIDUAL_TOL: f64 = 1e-9;
const MAX_LISTED_VIOLATIONS: usize = 10;

/// Bregman forward-backward splitting solver.
#[derive(Parser, Debug)]
#[command(name = "bregfb", version, about, allow_negative_numbers = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the problem described by a problem file.
    Solve {
        problem: PathBuf,
        /// Write the iterate trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        /// Reference point for the Bregman column, comma separated.
        #[arg(long = "ref", value_delimiter = ',', allow_negative_numbers = true)]
        x_ref: Option<Vec<f64>>,
    },
    /// Evaluate one scalar Bregman prox and its stationarity residual.
    #[command(allow_negative_numbers = true)]
    Prox {
        legendre: LegendreKind,
        phi: String,
        /// Parameters of phi (omega, p or alpha).
        params: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long)]
        xi: f64,
    },
    /// Principal branch of the Lambert W function.
    #[command(allow_negative_numbers = true)]
    Lambertw { x: f64 },
    /// Check the step schedule of a problem file.
    ValidateSchedule {
        problem: PathBuf,
        /// Number of steps checked; defaults to max_iter + 1.
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Grid-search the objective of a problem file over a box.
    #[command(hide = true)]
    Oracle {
        problem: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        lo: f64,
        #[arg(long, default_value_t = 10.0)]
        hi: f64,
        #[arg(long, default_value_t = 12)]
        levels: usize,
        #[arg(long, default_value_t = 11)]
        points: usize,
    },
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Parse { .. } | Error::InvalidParameter(_) | Error::DimensionMismatch { .. } => EXIT_USAGE,
        Error::InvalidSchedule(_) => EXIT_SCHEDULE,
        Error::Domain(_) | Error::DomainFailure { .. } | Error::Bracket { .. } => EXIT_DOMAIN,
        Error::NonConvergence { .. } => EXIT_MAX_ITER,
    }
}

fn report(err: &Error) -> u8 {
    eprintln!("error: {err}");
    if let Error::InvalidSchedule(vs) = err {
        for v in vs.iter().take(MAX_LISTED_VIOLATIONS) {
            eprintln!("  {v}");
        }
        if vs.len() > MAX_LISTED_VIOLATIONS {
            eprintln!("  ... and {} more", vs.len() - MAX_LISTED_VIOLATIONS);
        }
    }
    exit_code(err)
}

fn load(path: &PathBuf) -> Result<SolveSetup, Error> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", path.display())))?;
    ProblemFile::parse(&text)?.build()
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|&v| format_f64(v)).collect::<Vec<_>>().join(",")
}

fn cmd_solve(
    problem: &PathBuf,
    trace_path: Option<&PathBuf>,
    max_iter: Option<usize>,
    tol: Option<f64>,
    x_ref: Option<Vec<f64>>,
) -> Result<u8, Error> {
    let mut setup = load(problem)?;
    if let Some(n) = max_iter {
        setup.stop.max_iter = n;
    }
    if let Some(t) = tol {
        setup.stop.tol = t;
    }
    let x_ref = x_ref.or(setup.x_ref.take());
    let (rep, trace, blocks) = match &setup.problem {
        ProblemInstance::Composite(p) => {
            let (r, t) = solve(p, &setup.schedule, &setup.x0, setup.stop, x_ref.as_deref())?;
            (r, t, false)
        }
        ProblemInstance::MultiBlock(mb) => {
            let (r, t) = mb_solve(mb, &setup.schedule, &setup.x0, setup.stop, x_ref.as_deref())?;
            (r, t, true)
        }
    };
    if let Some(path) = trace_path {
        let file = fs::File::create(path)
            .map_err(|e| Error::InvalidParameter(format!("cannot write {}: {e}", path.display())))?;
        write_trace_csv(&trace, blocks, BufWriter::new(file))
            .map_err(|e| Error::InvalidParameter(format!("cannot write {}: {e}", path.display())))?;
    }
    println!("x = {}", join(&rep.x));
    println!("objective = {}", format_f64(rep.objective));
    println!("iterations = {}", rep.iterations);
    println!("stop = {}", rep.stop);
    Ok(match rep.stop {
        StopReason::ToleranceMet => EXIT_OK,
        StopReason::MaxIterations => EXIT_MAX_ITER,
        StopReason::DomainFailure { .. } => EXIT_DOMAIN,
    })
}

fn cmd_prox(legendre: LegendreKind, phi: &str, params: &[f64], gamma: f64, xi: f64) -> Result<u8, Error> {
    let phi = PhiSpec::from_parts(phi, params)?;
    let eta = prox_scalar(legendre, &phi, gamma, xi)?;
    let residual = stationarity_residual(legendre, &phi, gamma, xi, eta);
    println!("eta = {}", format_f64(eta));
    println!("residual = {residual:e}");
    Ok(if residual <= PROX_RESIDUAL_TOL {
        EXIT_OK
    } else {
        EXIT_RESIDUAL
    })
}

fn cmd_lambertw(x: f64) -> Result<u8, Error> {
    let w = lambert_w0(x)?;
    println!("w = {}", format_f64(w));
    println!("residual = {:e}", (w * w.exp() - x).abs());
    Ok(EXIT_OK)
}

fn cmd_validate(problem: &PathBuf, horizon: Option<usize>) -> Result<u8, Error> {
    let setup = load(problem)?;
    let horizon = horizon.unwrap_or(setup.stop.max_iter + 1);
    let violations = setup.schedule.validate(horizon);
    if violations.is_empty() {
        println!("schedule ok (beta = {}, eps = {}, {horizon} steps)", setup.schedule.beta, setup.schedule.eps);
        Ok(EXIT_OK)
    } else {
        Err(Error::InvalidSchedule(violations))
    }
}

fn cmd_oracle(problem: &PathBuf, lo: f64, hi: f64, levels: usize, points: usize) -> Result<u8, Error> {
    let setup = load(problem)?;
    let b = GridBox::cube(lo, hi, setup.problem.dim())?;
    let best = grid_refine_minimize(|x| setup.problem.objective(x), &b, levels, points)?;
    println!("x = {}", join(&best.point));
    println!("objective = {}", format_f64(best.value));
    println!("pitch = {}", join(&best.pitch));
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    let result = match cli.command {
        Command::Solve {
            problem,
            trace,
            max_iter,
            tol,
            x_ref,
        } => cmd_solve(&problem, trace.as_ref(), max_iter, tol, x_ref),
        Command::Prox {
            legendre,
            phi,
            params,
            gamma,
            xi,
        } => cmd_prox(legendre, &phi, &params, gamma, xi),
        Command::Lambertw { x } => cmd_lambertw(x),
        Command::ValidateSchedule { problem, horizon } => cmd_validate(&problem, horizon),
        Command::Oracle {
            problem,
            lo,
            hi,
            levels,
            points,
        } => cmd_oracle(&problem, lo, hi, levels, points),
    };
    ExitCode::from(match result {
        Ok(code) => code,
        Err(e) => report(&e),
    })
}
