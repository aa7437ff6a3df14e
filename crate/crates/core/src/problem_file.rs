//! Problem files and trace CSV.
//!
//! A problem file is a flat INI-like text file:
//!
//! ```text
//! [problem]
//! kind = kl_regression      # composite | is_regression | kl_regression
//! m = 1                     # blocks / unknowns
//! p = 1                     # couplings / rows of L
//! # beta = 0.5              # composite only
//!
//! [psi]                     # composite only: psi(y) = sum_k D(y_k, rho_k)
//! # kind = boltzmann_shannon
//!
//! [omega]
//! values = 2                # p*m numbers, row-major
//!
//! [rho]
//! values = 6
//!
//! [phi]
//! all = zero                # or one line per block: 1 = abs_linear 1.0
//!
//! [legendre]                # composite only
//! # all = boltzmann_shannon
//!
//! [solver]
//! gamma = 0.25              # one value = constant, several = explicit then last repeated
//! eps = 0.05
//! eta = 0                   # explicit values, then zeros
//! # mu = 1, 1.1             # rescaled family f_n = mu_n f; alpha defaults to min(mu)
//! max_iter = 200
//! tol = 1e-10
//! x0 = 1
//! # x_ref = 3
//! ```
//!
//! Lists accept commas and/or whitespace. Block indices in `[phi]` and
//! `[legendre]` are 1-based. `#` and `;` start comments.

use std::collections::HashMap;
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::legendre::{Legendre, LegendreKind};
use crate::linalg::DenseMatrix;
use crate::multiblock::{MultiBlockProblem, RegressionKind};
use crate::prox::PhiSpec;
use crate::schedule::{default_eps, Sequence, StepSchedule};
use crate::solver::{CompositeProblem, DataDivergence, IterateTrace, StopRule};

const SECTIONS: [&str; 7] = ["problem", "psi", "omega", "rho", "phi", "legendre", "solver"];

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    line: usize,
}

/// A parsed but not yet validated problem file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProblemFile {
    entries: HashMap<(String, String), Entry>,
}

/// Either flavour of problem a file can describe.
#[derive(Debug)]
pub enum ProblemInstance {
    Composite(CompositeProblem),
    MultiBlock(MultiBlockProblem),
}

impl ProblemInstance {
    pub fn beta(&self) -> f64 {
        match self {
            ProblemInstance::Composite(p) => p.beta(),
            ProblemInstance::MultiBlock(mb) => mb.beta(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ProblemInstance::Composite(p) => p.dim(),
            ProblemInstance::MultiBlock(mb) => mb.blocks(),
        }
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        match self {
            ProblemInstance::Composite(p) => p.objective(x),
            ProblemInstance::MultiBlock(mb) => mb.objective(x),
        }
    }
}

/// Everything needed to run a solve.
#[derive(Debug)]
pub struct SolveSetup {
    pub problem: ProblemInstance,
    pub schedule: StepSchedule,
    pub stop: StopRule,
    pub x0: Vec<f64>,
    pub x_ref: Option<Vec<f64>>,
}

fn parse_err(line: usize, section: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        section: section.to_string(),
        message: message.into(),
    }
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = HashMap::new();
        let mut section = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split(['#', ';']).next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| parse_err(line, &section, "unterminated section header"))?
                    .trim()
                    .to_ascii_lowercase();
                if !SECTIONS.contains(&name.as_str()) {
                    return Err(parse_err(line, &name, format!("unknown section [{name}]")));
                }
                section = name;
                continue;
            }
            if section.is_empty() {
                return Err(parse_err(line, "", "key outside of any section"));
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| parse_err(line, &section, format!("expected 'key = value', got '{content}'")))?;
            let key = key.trim().to_ascii_lowercase();
            if key.is_empty() {
                return Err(parse_err(line, &section, "empty key"));
            }
            let prev = entries.insert(
                (section.clone(), key.clone()),
                Entry {
                    value: value.trim().to_string(),
                    line,
                },
            );
            if prev.is_some() {
                return Err(parse_err(line, &section, format!("duplicate key '{key}'")));
            }
        }
        Ok(ProblemFile { entries })
    }

    fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        self.entries.get(&(section.to_string(), key.to_string()))
    }

    fn require(&self, section: &str, key: &str) -> Result<&Entry> {
        self.get(section, key)
            .ok_or_else(|| parse_err(0, section, format!("missing key '{key}'")))
    }

    fn number(&self, section: &str, key: &str) -> Result<Option<f64>> {
        self.get(section, key)
            .map(|e| {
                e.value
                    .parse::<f64>()
                    .map_err(|_| parse_err(e.line, section, format!("'{key}' is not a number: '{}'", e.value)))
            })
            .transpose()
    }

    fn count(&self, section: &str, key: &str) -> Result<usize> {
        let e = self.require(section, key)?;
        e.value
            .parse::<usize>()
            .map_err(|_| parse_err(e.line, section, format!("'{key}' is not a count: '{}'", e.value)))
    }

    fn list(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(section, key)
            .map(|e| parse_list(&e.value).map_err(|m| parse_err(e.line, section, m)))
            .transpose()
    }

    /// Per-block values from `all = ...` and/or `<index> = ...` lines.
    fn per_block<T>(
        &self,
        section: &str,
        m: usize,
        parse: impl Fn(&str) -> Result<T>,
    ) -> Result<Vec<T>>
    where
        T: Clone,
    {
        let mut out: Vec<Option<T>> = vec![None; m];
        if let Some(e) = self.get(section, "all") {
            let v = parse(&e.value).map_err(|err| parse_err(e.line, section, err.to_string()))?;
            out.iter_mut().for_each(|slot| *slot = Some(v.clone()));
        }
        for ((s, key), e) in &self.entries {
            if s != section || key == "all" {
                continue;
            }
            let idx: usize = key
                .parse()
                .map_err(|_| parse_err(e.line, section, format!("unexpected key '{key}'")))?;
            if idx == 0 || idx > m {
                return Err(parse_err(e.line, section, format!("block index {idx} outside 1..={m}")));
            }
            let v = parse(&e.value).map_err(|err| parse_err(e.line, section, err.to_string()))?;
            out[idx - 1] = Some(v);
        }
        out.into_iter()
            .enumerate()
            .map(|(i, v)| {
                v.ok_or_else(|| parse_err(0, section, format!("no entry for block {}", i + 1)))
            })
            .collect()
    }

    /// Validates the file and builds the problem, schedule and start point.
    pub fn build(&self) -> Result<SolveSetup> {
        let kind_entry = self.require("problem", "kind")?;
        let m = self.count("problem", "m")?;
        let p = self.count("problem", "p")?;
        if m == 0 || p == 0 {
            return Err(parse_err(0, "problem", "m and p must be positive"));
        }

        let omega_vals = self
            .list("omega", "values")?
            .ok_or_else(|| parse_err(0, "omega", "missing key 'values'"))?;
        let omega_line = self.get("omega", "values").map_or(0, |e| e.line);
        let omega = DenseMatrix::from_row_major(p, m, omega_vals)
            .map_err(|e| parse_err(omega_line, "omega", format!("{e} (need p*m = {} values)", p * m)))?;
        let rho = self
            .list("rho", "values")?
            .ok_or_else(|| parse_err(0, "rho", "missing key 'values'"))?;
        if rho.len() != p {
            let line = self.get("rho", "values").map_or(0, |e| e.line);
            return Err(parse_err(line, "rho", format!("expected {p} values, got {}", rho.len())));
        }
        let phis = self.per_block("phi", m, parse_phi)?;

        let problem = match kind_entry.value.as_str() {
            "composite" => {
                let legendre = self.per_block("legendre", m, |s| s.trim().parse::<LegendreKind>())?;
                let psi_kind = match self.get("psi", "kind") {
                    Some(e) => e
                        .value
                        .parse::<LegendreKind>()
                        .map_err(|err| parse_err(e.line, "psi", err.to_string()))?,
                    None => return Err(parse_err(0, "psi", "missing key 'kind'")),
                };
                let beta = self
                    .number("problem", "beta")?
                    .ok_or_else(|| parse_err(0, "problem", "composite problems need 'beta'"))?;
                let psi = DataDivergence::new(psi_kind, rho)
                    .map_err(|e| parse_err(self.get("rho", "values").map_or(0, |e| e.line), "rho", e.to_string()))?;
                let problem = CompositeProblem::new(phis, Box::new(psi), omega, Legendre::new(legendre), beta)
                    .map_err(|e| parse_err(kind_entry.line, "problem", e.to_string()))?;
                ProblemInstance::Composite(problem)
            }
            other => {
                let kind: RegressionKind = other
                    .parse()
                    .map_err(|e: Error| parse_err(kind_entry.line, "problem", e.to_string()))?;
                let mb = MultiBlockProblem::with_defaults(kind, omega, rho, phis)
                    .map_err(|e| parse_err(kind_entry.line, "problem", e.to_string()))?;
                ProblemInstance::MultiBlock(mb)
            }
        };

        let beta = problem.beta();
        let mus = self.list("solver", "mu")?;
        let alpha = match (self.number("solver", "alpha")?, &mus) {
            (Some(a), _) => a,
            (None, Some(mu)) => mu.iter().copied().fold(f64::INFINITY, f64::min),
            (None, None) => 1.0,
        };
        let scale = if mus.is_some() { alpha * beta } else { beta };
        let eps = self.number("solver", "eps")?.unwrap_or_else(|| default_eps(scale));
        let gammas = match self.list("solver", "gamma")? {
            Some(g) if g.is_empty() => return Err(parse_err(0, "solver", "'gamma' is empty")),
            Some(g) => Sequence::repeat_last(g),
            None => Sequence::constant(0.5 * (eps + scale * (1.0 - eps))),
        };
        let etas = match self.list("solver", "eta")? {
            Some(e) => Sequence::then(e, 0.0),
            None => Sequence::zeros(),
        };
        let mut schedule = StepSchedule::constant(0.0, eps, beta).with_etas(etas);
        schedule.gammas = gammas;
        if let Some(mu) = mus {
            if mu.is_empty() {
                return Err(parse_err(0, "solver", "'mu' is empty"));
            }
            schedule = schedule.with_scaling(Sequence::repeat_last(mu), alpha);
        }

        let defaults = StopRule::default();
        let stop = StopRule {
            tol: self.number("solver", "tol")?.unwrap_or(defaults.tol),
            max_iter: match self.get("solver", "max_iter") {
                Some(_) => self.count("solver", "max_iter")?,
                None => defaults.max_iter,
            },
        };
        let x0 = self
            .list("solver", "x0")?
            .ok_or_else(|| parse_err(0, "solver", "missing key 'x0'"))?;
        if x0.len() != m {
            let line = self.get("solver", "x0").map_or(0, |e| e.line);
            return Err(parse_err(line, "solver", format!("x0 needs {m} values, got {}", x0.len())));
        }
        let x_ref = self.list("solver", "x_ref")?;
        if let Some(r) = &x_ref {
            if r.len() != m {
                let line = self.get("solver", "x_ref").map_or(0, |e| e.line);
                return Err(parse_err(line, "solver", format!("x_ref needs {m} values, got {}", r.len())));
            }
        }
        Ok(SolveSetup {
            problem,
            schedule,
            stop,
            x0,
            x_ref,
        })
    }
}

/// Parses `kind [params...]`, e.g. `abs_linear 1.5`.
pub fn parse_phi(s: &str) -> Result<PhiSpec> {
    let mut parts = s.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty());
    let kind = parts
        .next()
        .ok_or_else(|| Error::param("empty phi specification"))?;
    let params = parts
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::param(format!("phi parameter '{t}' is not a number")))
        })
        .collect::<Result<Vec<_>>>()?;
    PhiSpec::from_parts(kind, &params)
}

fn parse_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| format!("'{t}' is not a number")))
        .collect()
}

/// Formats with 17 significant digits, enough to round-trip any `f64`.
pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

const TRACE_HEADER: [&str; 5] = ["n", "gamma", "objective", "displacement", "bregman_ref"];

fn csv_err(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

/// Writes `n,gamma,objective,displacement,bregman_ref`, plus one `x<i>`
/// column per coordinate when `with_coords` is set.
pub fn write_trace_csv<W: Write>(trace: &IterateTrace, with_coords: bool, out: W) -> io::Result<()> {
    let dim = if with_coords {
        trace.rows.first().map_or(0, |r| r.x.len())
    } else {
        0
    };
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = TRACE_HEADER.iter().map(|h| h.to_string()).collect();
    header.extend((1..=dim).map(|i| format!("x{i}")));
    w.write_record(&header).map_err(csv_err)?;
    for r in &trace.rows {
        let mut rec = vec![
            r.n.to_string(),
            format_f64(r.gamma),
            format_f64(r.objective),
            format_f64(r.displacement),
            r.bregman_ref.map(format_f64).unwrap_or_default(),
        ];
        rec.extend(r.x.iter().take(dim).map(|&v| format_f64(v)));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()
}

/// One parsed trace CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceCsvRow {
    pub n: usize,
    pub gamma: f64,
    pub objective: f64,
    pub displacement: f64,
    pub bregman_ref: Option<f64>,
    pub x: Vec<f64>,
}

pub fn read_trace_csv(text: &str) -> Result<Vec<TraceCsvRow>> {
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header_ok = r
        .headers()
        .is_ok_and(|h| h.len() >= 5 && h.iter().zip(TRACE_HEADER).all(|(a, b)| a == b));
    if !header_ok {
        return Err(parse_err(1, "trace", "missing trace header"));
    }
    r.records()
        .enumerate()
        .map(|(i, rec)| {
            let line = i + 2;
            let rec = rec.map_err(|e| parse_err(line, "trace", e.to_string()))?;
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| parse_err(line, "trace", format!("'{s}' is not a number")))
            };
            Ok(TraceCsvRow {
                n: rec[0]
                    .parse()
                    .map_err(|_| parse_err(line, "trace", "bad iteration index"))?,
                gamma: num(&rec[1])?,
                objective: num(&rec[2])?,
                displacement: num(&rec[3])?,
                bregman_ref: if rec[4].is_empty() {
                    None
                } else {
                    Some(num(&rec[4])?)
                },
                x: rec.iter().skip(5).map(num).collect::<Result<Vec<_>>>()?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::TraceRow;

    const KL_TOY: &str = "
[problem]
kind = kl_regression
m = 1
p = 1

[omega]
values = 2

[rho]
values = 6

[phi]
all = zero

[solver]
gamma = 0.25
eps = 0.05
max_iter = 200
tol = 1e-12
x0 = 1
x_ref = 3
";

    #[test]
    fn parses_kl_toy() {
        let setup = ProblemFile::parse(KL_TOY).unwrap().build().unwrap();
        assert_eq!(setup.problem.beta(), 0.5);
        assert_eq!(setup.schedule.gamma(7), 0.25);
        assert_eq!(setup.stop.max_iter, 200);
        assert_eq!(setup.x0, vec![1.0]);
        assert_eq!(setup.x_ref, Some(vec![3.0]));
    }

    #[test]
    fn composite_file() {
        let text = "
[problem]
kind = composite
m = 2
p = 1
beta = 1
[psi]
kind = half_square
[omega]
values = 1 1
[rho]
values = 1.0
[phi]
all = abs_linear 0.5
2 = power 2
[legendre]
all = half_square
[solver]
x0 = 0.5, 0.5
";
        let setup = ProblemFile::parse(text).unwrap().build().unwrap();
        let ProblemInstance::Composite(p) = setup.problem else {
            panic!("expected composite");
        };
        assert_eq!(p.phi()[0], PhiSpec::AbsLinear { alpha: 0.5 });
        assert_eq!(p.phi()[1], PhiSpec::Power { p: 2.0 });
        assert!(setup.schedule.validate(10).is_empty());
    }

    #[test]
    fn errors_carry_line_and_section() {
        let text = KL_TOY.replace("values = 6", "values = six");
        match ProblemFile::parse(&text).unwrap().build() {
            Err(Error::Parse { line, section, .. }) => {
                assert_eq!(section, "rho");
                assert_eq!(line, 11);
            }
            other => panic!("unexpected {other:?}"),
        }
        let text = KL_TOY.replace("all = zero", "all = sparkle");
        assert!(matches!(
            ProblemFile::parse(&text).unwrap().build(),
            Err(Error::Parse { ref section, .. }) if section == "phi"
        ));
        assert!(matches!(
            ProblemFile::parse("[bogus]\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(ProblemFile::parse("x = 1").is_err());
        assert!(ProblemFile::parse("[rho]\nvalues = 1\nvalues = 2").is_err());
    }

    #[test]
    fn missing_pieces_are_reported() {
        let text = KL_TOY.replace("x0 = 1", "");
        assert!(ProblemFile::parse(&text).unwrap().build().is_err());
        let text = KL_TOY.replace("x0 = 1", "x0 = 1 2");
        assert!(ProblemFile::parse(&text).unwrap().build().is_err());
    }

    #[test]
    fn trace_csv_format() {
        let trace = IterateTrace {
            rows: vec![
                TraceRow {
                    n: 0,
                    x: vec![1.0, 0.1],
                    gamma: 0.25,
                    mu: 1.0,
                    objective: 1.0 / 3.0,
                    displacement: 0.0,
                    bregman_ref: None,
                },
                TraceRow {
                    n: 1,
                    x: vec![2.0, 0.2],
                    gamma: 0.25,
                    mu: 1.0,
                    objective: 0.1,
                    displacement: 1.0,
                    bregman_ref: Some(0.5),
                },
            ],
        };
        let mut buf = Vec::new();
        write_trace_csv(&trace, false, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("n,gamma,objective,displacement,bregman_ref"));
        assert_eq!(
            lines.next(),
            Some("0,2.5000000000000000e-1,3.3333333333333331e-1,0.0000000000000000e0,")
        );
        let rows = read_trace_csv(&text).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].objective, 1.0 / 3.0);
        assert_eq!(rows[1].bregman_ref, Some(0.5));

        let mut buf = Vec::new();
        write_trace_csv(&trace, true, &mut buf).unwrap();
        let rows = read_trace_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(rows[1].x, vec![2.0, 0.2]);
    }
}
