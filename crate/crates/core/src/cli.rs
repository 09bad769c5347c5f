//! Command-line front end: `solve`, `verify`, `sweep` and `otdist`.
//!
//! Exit codes: 0 on success, 1 for unreadable or invalid input, 2 when a
//! numerical certificate fails.

use std::io::{Read, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use crate::dual::{solve_dual_min, solve_dual_sweep, DualSolution};
use crate::error::Error;
use crate::io::{
    emit_result, emit_sweep, load_instance, ClauseRecord, DualSection, Instance, PrimalSection, ProblemSpec,
    ResultDocument, SweepRow, Timings, WorstCaseSection, FORMAT_VERSION,
};
use crate::lagrangian::{certify_minimax, DEFAULT_TRIALS};
use crate::measure::ot_distance;
use crate::primal::{solve_primal, PrimalStatus};
use crate::recovery::{certificate_report, recover_worst_case, CertificateReport};

/// Relative tolerance on `|v_P - v_D|`.
pub const GAP_TOL: f64 = 1e-8;
const CC_LIKE_TOL: f64 = 1e-12;
const INNER_MIN_TOL: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "otball", version, about = "Worst-case expectations over optimal-transport balls")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Dual,
    Primal,
    Both,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a problem file and print a result document.
    Solve {
        /// Problem file, or `-` for stdin.
        input: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        method: Method,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Include wall-clock timings (makes output non-reproducible).
        #[arg(long)]
        timings: bool,
        /// Test hook: shift the dual value before any check.
        #[arg(long, hide = true, allow_hyphen_values = true)]
        perturb_dual: Option<f64>,
    },
    /// Certify minimax equality and the recovered worst case.
    Verify {
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Optimal value as a function of the radius, as CSV.
    Sweep {
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        r_min: f64,
        #[arg(long, allow_hyphen_values = true)]
        r_max: f64,
        #[arg(long)]
        steps: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Optimal transport cost between `mu` and `nu`.
    Otdist {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::CertificateFailure { .. }
            | Error::InfeasibleRecovery { .. }
            | Error::NumericalFailure(_)
            | Error::Infeasible
            | Error::Unbounded => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn input_error(message: String) -> Failure {
    Failure { code: 1, message }
}

fn read_input(path: &PathBuf, stdin: &mut dyn Read) -> Result<String, Failure> {
    let mut text = String::new();
    if path.as_os_str() == "-" {
        stdin
            .read_to_string(&mut text)
            .map_err(|e| input_error(format!("reading stdin: {e}")))?;
    } else {
        text = std::fs::read_to_string(path).map_err(|e| input_error(format!("reading {}: {e}", path.display())))?;
    }
    Ok(text)
}

fn write_output(path: &Option<PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| input_error(format!("writing {}: {e}", p.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| input_error(format!("writing stdout: {e}"))),
    }
}

fn load(path: &PathBuf, stdin: &mut dyn Read) -> Result<(ProblemSpec, Instance), Failure> {
    let text = read_input(path, stdin)?;
    Ok(load_instance(&text)?)
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn clause_records(report: &CertificateReport) -> Vec<ClauseRecord> {
    report
        .clauses
        .iter()
        .map(|c| ClauseRecord {
            clause: c.clause.to_string(),
            description: c.description.to_string(),
            lhs: c.lhs,
            rhs: c.rhs,
            passed: c.passed,
        })
        .collect()
}

fn dual_section(dual: &DualSolution, sign: f64) -> DualSection {
    DualSection {
        value: sign * dual.value,
        attained: dual.attained(),
        lambda_star: dual.lambda_star.finite(),
        supergradient: [dual.supergradient.0, dual.supergradient.1],
    }
}

fn cmd_solve(
    input: &PathBuf,
    method: Method,
    output: &Option<PathBuf>,
    timings: bool,
    perturb: Option<f64>,
    stdin: &mut dyn Read,
    stdout: &mut dyn Write,
) -> Result<(), Failure> {
    let (spec, inst) = load(input, stdin)?;
    let prob = inst.min_form();
    let sign = inst.sense.sign();
    let mut times = Timings {
        primal_ms: None,
        dual_ms: None,
        recovery_ms: None,
    };

    let primal = if method != Method::Dual {
        let start = Instant::now();
        let sol = solve_primal(&prob)?;
        times.primal_ms = Some(ms(start));
        Some(sol)
    } else {
        None
    };
    let dual = if method != Method::Primal {
        let start = Instant::now();
        let mut sol = solve_dual_min(&prob);
        times.dual_ms = Some(ms(start));
        if let Some(delta) = perturb {
            sol.value += delta;
        }
        Some(sol)
    } else {
        None
    };

    let mut failure = None;
    let gap = match (&primal, &dual) {
        (Some(p), Some(d)) => {
            let gap = (p.value - d.value).abs();
            if gap.is_nan() || gap > GAP_TOL * (1.0 + p.value.abs()) {
                failure = Some(Failure {
                    code: 2,
                    message: format!("duality gap {gap:e} exceeds tolerance (primal {}, dual {})", sign * p.value, sign * d.value),
                });
            }
            Some(gap)
        }
        _ => None,
    };

    let worst_case = match (&dual, method) {
        (Some(d), Method::Both) => {
            let start = Instant::now();
            let wc = recover_worst_case(d, &prob)?;
            let report = certificate_report(&wc, d, &prob)?;
            times.recovery_ms = Some(ms(start));
            if failure.is_none() {
                if let Some(c) = report.first_failure() {
                    failure = Some(Failure {
                        code: 2,
                        message: format!(
                            "certificate clause ({}) failed: {}: lhs = {}, rhs = {}",
                            c.clause, c.description, c.lhs, c.rhs
                        ),
                    });
                }
            }
            Some(WorstCaseSection {
                value: sign * wc.nu.expect(prob.f()),
                nu: wc.nu.weights().to_vec(),
                blend_t: wc.blend_t,
                slack: wc.slack,
                certificate: clause_records(&report),
            })
        }
        _ => None,
    };

    let doc = ResultDocument {
        version: FORMAT_VERSION.into(),
        problem_sha256: spec.digest(),
        sense: inst.sense,
        method: format!("{method:?}").to_lowercase(),
        primal: primal.map(|p| PrimalSection {
            status: match p.status {
                PrimalStatus::Optimal => "optimal".into(),
                PrimalStatus::Infeasible => "infeasible".into(),
            },
            value: sign * p.value,
            cost_used: p.cost_used,
            plan: p.plan.rows().to_vec(),
        }),
        dual: dual.as_ref().map(|d| dual_section(d, sign)),
        gap,
        worst_case,
        timings: timings.then_some(times),
    };
    let mut text = emit_result(&doc);
    text.push('\n');
    write_output(output, &text, stdout)?;
    match failure {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

fn cmd_verify(input: &PathBuf, trials: usize, seed: u64, stdin: &mut dyn Read, stdout: &mut dyn Write) -> Result<(), Failure> {
    let (_, inst) = load(input, stdin)?;
    let prob = inst.min_form();
    let report = certify_minimax(&prob, trials, seed)?;
    let dual = solve_dual_min(&prob);
    let wc = recover_worst_case(&dual, &prob)?;
    let cert = certificate_report(&wc, &dual, &prob)?;

    let mut lines: Vec<(String, bool, String)> = vec![
        (
            "minimax-gap".into(),
            report.certified(GAP_TOL),
            format!("min_sup = {}, sup_min = {}, gap = {:e}", report.min_sup, report.sup_min, report.gap),
        ),
        (
            "convex-concave-like".into(),
            report.cc_like_max_violation <= CC_LIKE_TOL,
            format!("max violation = {:e} over {} trials", report.cc_like_max_violation, report.trials),
        ),
        (
            "inner-min-closed-form".into(),
            report.inner_min_discrepancy <= INNER_MIN_TOL,
            format!("max |closed form - LP| = {:e}", report.inner_min_discrepancy),
        ),
        (
            "inner-min-lower-bound".into(),
            report.inner_min_excess <= INNER_MIN_TOL,
            format!("max (min L - L(pi)) = {:e}", report.inner_min_excess),
        ),
        (
            "lower-semicontinuity".into(),
            report.lsc_checked,
            "automatic on a finite space".into(),
        ),
    ];
    for c in &cert.clauses {
        lines.push((
            format!("certificate-{}", c.clause),
            c.passed,
            format!("{}: lhs = {}, rhs = {}", c.description, c.lhs, c.rhs),
        ));
    }
    let mut out = String::new();
    for (name, ok, detail) in &lines {
        out.push_str(&format!("{} {name}: {detail}\n", if *ok { "PASS" } else { "FAIL" }));
    }
    write_output(&None, &out, stdout)?;
    match lines.iter().find(|(_, ok, _)| !ok) {
        Some((name, _, detail)) => Err(Failure {
            code: 2,
            message: format!("clause {name} failed: {detail}"),
        }),
        None => Ok(()),
    }
}

/// `steps` radii evenly spaced over `[r_min, r_max]`, ending exactly at `r_max`.
pub fn sweep_radii(r_min: f64, r_max: f64, steps: usize) -> Vec<f64> {
    (0..steps)
        .map(|k| {
            if k + 1 == steps {
                r_max
            } else {
                r_min + (r_max - r_min) * k as f64 / (steps - 1) as f64
            }
        })
        .collect()
}

fn cmd_sweep(
    input: &PathBuf,
    r_min: f64,
    r_max: f64,
    steps: usize,
    output: &Option<PathBuf>,
    stdin: &mut dyn Read,
    stdout: &mut dyn Write,
) -> Result<(), Failure> {
    if !(r_min.is_finite() && r_max.is_finite() && 0.0 <= r_min && r_min <= r_max) {
        return Err(input_error(format!("need 0 <= r-min <= r-max, got [{r_min}, {r_max}]")));
    }
    if steps < 2 {
        return Err(input_error(format!("need at least 2 steps, got {steps}")));
    }
    let (_, inst) = load(input, stdin)?;
    let prob = inst.min_form();
    let sign = inst.sense.sign();
    let radii = sweep_radii(r_min, r_max, steps);
    let sols = solve_dual_sweep(&prob, &radii)?;
    let rows: Vec<SweepRow> = radii
        .iter()
        .zip(&sols)
        .map(|(&r, s)| SweepRow {
            r,
            value: sign * s.value,
            lambda_star: s.lambda_star.finite(),
        })
        .collect();
    write_output(output, &emit_sweep(&rows), stdout)
}

#[derive(serde::Serialize)]
struct OtOutput {
    distance: f64,
    plan: Vec<Vec<f64>>,
}

fn cmd_otdist(input: &PathBuf, output: &Option<PathBuf>, stdin: &mut dyn Read, stdout: &mut dyn Write) -> Result<(), Failure> {
    let (_, inst) = load(input, stdin)?;
    let nu = inst
        .nu
        .as_ref()
        .ok_or_else(|| Failure::from(Error::SchemaError("missing field `nu`".into())))?;
    let res = ot_distance(inst.problem.mu(), nu, inst.problem.cost())?;
    let out = OtOutput {
        distance: res.distance,
        plan: res.plan.rows().to_vec(),
    };
    let mut text = serde_json::to_string_pretty(&out).expect("serialises");
    text.push('\n');
    write_output(output, &text, stdout)
}

/// Runs the command line `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{e}");
                    1
                }
            };
        }
    };
    let outcome = match &cli.command {
        Command::Solve {
            input,
            method,
            output,
            timings,
            perturb_dual,
        } => cmd_solve(input, *method, output, *timings, *perturb_dual, stdin, stdout),
        Command::Verify { input, trials, seed } => cmd_verify(input, *trials, *seed, stdin, stdout),
        Command::Sweep {
            input,
            r_min,
            r_max,
            steps,
            output,
        } => cmd_sweep(input, *r_min, *r_max, *steps, output, stdin, stdout),
        Command::Otdist { input, output } => cmd_otdist(input, output, stdin, stdout),
    };
    match outcome {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const E1: &str = r#"{"version":"1","space":{"points":[[0],[1]]},"cost":{"p":1},"f":[0,1],"mu":[0,1],"r":0.4}"#;

    fn run_with(args: &[&str], input: &str) -> (i32, String, String) {
        let mut stdin = input.as_bytes();
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(args.iter().copied(), &mut stdin, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn radii_are_evenly_spaced() {
        assert_eq!(sweep_radii(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
        assert_eq!(sweep_radii(0.3, 0.3, 4), vec![0.3; 4]);
    }

    #[test]
    fn solve_from_stdin() {
        let (code, out, err) = run_with(&["otball", "solve", "-", "--method", "dual"], E1);
        assert_eq!(code, 0, "{err}");
        assert!(out.contains("\"lambda_star\": 1.0"), "{out}");
    }

    #[test]
    fn sweep_from_stdin() {
        let (code, out, _) = run_with(&["otball", "sweep", "-", "--r-min", "0", "--r-max", "1", "--steps", "3"], E1);
        assert_eq!(code, 0);
        assert_eq!(out, "r,value,lambda_star,attained\n0,1,,false\n0.5,0.5,1,true\n1,0,0,true\n");
    }

    #[test]
    fn bad_sweep_arguments() {
        let (code, _, err) = run_with(&["otball", "sweep", "-", "--r-min", "1", "--r-max", "0", "--steps", "3"], E1);
        assert_eq!(code, 1, "{err}");
        let (code, _, _) = run_with(&["otball", "sweep", "-", "--r-min", "0", "--r-max", "1", "--steps", "1"], E1);
        assert_eq!(code, 1);
    }

    #[test]
    fn otdist_requires_nu() {
        let (code, _, err) = run_with(&["otball", "otdist", "-"], E1);
        assert_eq!(code, 1);
        assert!(err.contains("nu"), "{err}");
    }

    #[test]
    fn unknown_verb_is_an_input_error() {
        let (code, _, _) = run_with(&["otball", "frobnicate"], E1);
        assert_eq!(code, 1);
    }
}
