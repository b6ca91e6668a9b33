//! Command-line front end: thresholds, bounds, simulation, certificates,
//! escape and periodic-orbit reports, and the full verification run, with
//! CSV or JSON output suitable for plotting.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use oscavg::error::Error;
use oscavg::hyperbolicity::{
    certify, empirical_hyperbolicity_check, kappa_threshold, scaling_exponent,
    EmpiricalCheckParams, EmpiricalReport, HyperbolicityCertificate,
};
use oscavg::integrator::{integrate, integrate_variational, IntegratorConfig, Outcome};
use oscavg::orbits::{
    certify_escape, escape_threshold, norm_scaling_report, optimal_escape_angle,
    periodic_orbit_sweep, segment_radius_bound, EscapeOutcome,
};
use oscavg::output::{csv_row, fmt_f64};
use oscavg::planar::{Forcing, PlanarPoint};
use oscavg::verify;

/// Exit codes: 0 success/valid, 1 certified-false or violations,
/// 2 usage error, 3 numerical failure.
const EXIT_OK: u8 = 0;
const EXIT_INVALID: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "oscavg",
    version,
    about = "Averaging error bounds, hyperbolicity certificates and blow-up \
             criteria for the planar equation z' = conj(z)(1 + |z|^2 exp(i*kappa*t))"
)]
struct Cli {
    /// Seed for every sampled computation; identical seeds give
    /// byte-identical output.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output format for the data written to stdout or --output.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write the output to this path instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Frequency thresholds for hyperbolicity on balls B(0, r0), with the
    /// published reference values for r0 in {1, 10, 100}.
    Table1 {
        /// Ball radii (comma separated), each >= 1.
        #[arg(long, value_delimiter = ',', default_value = "1,10,100")]
        r0: Vec<f64>,
    },
    /// Closed-form C0/C1 averaging error bounds at time t on the ball of
    /// radius r.
    Bounds {
        #[arg(long)]
        r: f64,
        #[arg(long)]
        kappa: f64,
        #[arg(long)]
        t: f64,
    },
    /// Integrate the flow (optionally with the variational equation) and
    /// emit the trajectory.
    Simulate {
        #[arg(long)]
        kappa: f64,
        /// Initial point as "x,y".
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        z0: Vec<f64>,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        t0: f64,
        /// Integration time (may be negative).
        #[arg(long = "T", allow_hyphen_values = true)]
        duration: f64,
        /// Co-integrate the variational equation and emit monodromy columns.
        #[arg(long)]
        variational: bool,
    },
    /// Hyperbolicity certificate for B(0, r0) at frequency kappa; with
    /// --empirical also runs the sampled cone-condition check.
    Certify {
        #[arg(long)]
        r0: f64,
        #[arg(long)]
        kappa: f64,
        #[arg(long)]
        empirical: bool,
        #[arg(long, default_value_t = 1000)]
        pairs: usize,
        #[arg(long, default_value_t = 8)]
        offsets: usize,
    },
    /// Bidirectional finite-time escape check for one initial point.
    Escape {
        #[arg(long)]
        kappa: f64,
        /// Initial point as "x,y".
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        z0: Vec<f64>,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        t0: f64,
    },
    /// Periodic-orbit search from guesses on the segment-radius circle.
    Periodic {
        /// Forcing frequencies (comma separated).
        #[arg(long, value_delimiter = ',', default_value = "1,2,5,10")]
        kappa: Vec<f64>,
        #[arg(long, default_value_t = 16)]
        angles: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        t0: f64,
    },
    /// Least-squares exponent of the threshold growth in r0.
    Scaling {
        #[arg(long, default_value_t = 10.0)]
        r0_min: f64,
        #[arg(long, default_value_t = 1000.0)]
        r0_max: f64,
        #[arg(long, default_value_t = 20)]
        n_points: usize,
    },
    /// Run the full verification suite and print one line per criterion.
    Verify,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((output, code)) => {
            let write_result = match &cli.output {
                Some(path) => std::fs::write(path, output.as_bytes()),
                None => std::io::stdout().write_all(output.as_bytes()),
            };
            if let Err(e) = write_result {
                eprintln!("error: failed to write output: {e}");
                return ExitCode::from(EXIT_NUMERICAL);
            }
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::InvalidInput(_) | Error::Domain(_) | Error::PastBlowup { .. } => EXIT_USAGE,
                _ => EXIT_NUMERICAL,
            };
            ExitCode::from(code)
        }
    }
}

fn run(cli: &Cli) -> Result<(String, u8), Error> {
    match &cli.command {
        Command::Table1 { r0 } => cmd_table1(r0, cli.format),
        Command::Bounds { r, kappa, t } => cmd_bounds(*r, *kappa, *t, cli.format),
        Command::Simulate { kappa, z0, t0, duration, variational } => {
            cmd_simulate(*kappa, z0, *t0, *duration, *variational, cli.format)
        }
        Command::Certify { r0, kappa, empirical, pairs, offsets } => {
            cmd_certify(*r0, *kappa, *empirical, *pairs, *offsets, cli.seed, cli.format)
        }
        Command::Escape { kappa, z0, t0 } => cmd_escape(*kappa, z0, *t0, cli.format),
        Command::Periodic { kappa, angles, t0 } => cmd_periodic(kappa, *angles, *t0, cli.format),
        Command::Scaling { r0_min, r0_max, n_points } => {
            cmd_scaling(*r0_min, *r0_max, *n_points, cli.format)
        }
        Command::Verify => cmd_verify(cli.seed, cli.format),
    }
}

/// Published threshold values for the comparison column.
fn reference_threshold(r0: f64) -> Option<f64> {
    if r0 == 1.0 {
        Some(3655.0)
    } else if r0 == 10.0 {
        Some(2.24e7)
    } else if r0 == 100.0 {
        Some(2.23e11)
    } else {
        None
    }
}

#[derive(serde::Serialize)]
struct Table1Row {
    r0: f64,
    kappa_min: f64,
    reference_value: Option<f64>,
    relative_diff: Option<f64>,
    flag: Option<&'static str>,
}

fn cmd_table1(r0_list: &[f64], format: Format) -> Result<(String, u8), Error> {
    let rows: Vec<Table1Row> = oscavg::hyperbolicity::table1(r0_list)?
        .into_iter()
        .map(|(r0, kappa_min)| {
            let reference_value = reference_threshold(r0);
            let relative_diff = reference_value.map(|p| (kappa_min - p).abs() / p);
            let flag = match relative_diff {
                Some(d) if d > 0.01 => Some("discrepancy"),
                _ => None,
            };
            Table1Row { r0, kappa_min, reference_value, relative_diff, flag }
        })
        .collect();
    let out = match format {
        Format::Json => to_json(&rows)?,
        Format::Csv => {
            let mut out = csv_row(["r0", "kappa_min", "reference_value", "relative_diff", "flag"]);
            for row in &rows {
                out.push_str(&csv_row([
                    fmt_f64(row.r0),
                    fmt_f64(row.kappa_min),
                    row.reference_value.map(fmt_f64).unwrap_or_default(),
                    row.relative_diff.map(fmt_f64).unwrap_or_default(),
                    row.flag.unwrap_or("").to_string(),
                ]));
            }
            out
        }
    };
    Ok((out, EXIT_OK))
}

#[derive(serde::Serialize)]
struct BoundsRow {
    t: f64,
    r: f64,
    kappa: f64,
    c0_error: f64,
    c1_error: f64,
}

fn cmd_bounds(r: f64, kappa: f64, t: f64, format: Format) -> Result<(String, u8), Error> {
    let row = BoundsRow {
        t,
        r,
        kappa,
        c0_error: oscavg::planar::c0_error_closed(t, r, kappa)?,
        c1_error: oscavg::planar::c1_error_closed(t, r, kappa)?,
    };
    let out = match format {
        Format::Json => to_json(&row)?,
        Format::Csv => {
            let mut out = csv_row(["t", "r", "kappa", "c0_error", "c1_error"]);
            out.push_str(&csv_row([
                fmt_f64(row.t),
                fmt_f64(row.r),
                fmt_f64(row.kappa),
                fmt_f64(row.c0_error),
                fmt_f64(row.c1_error),
            ]));
            out
        }
    };
    Ok((out, EXIT_OK))
}

fn parse_point(z0: &[f64]) -> Result<PlanarPoint, Error> {
    if z0.len() != 2 || !z0[0].is_finite() || !z0[1].is_finite() {
        return Err(Error::InvalidInput("--z0 expects two finite values \"x,y\"".into()));
    }
    Ok(PlanarPoint::new(z0[0], z0[1]))
}

#[derive(serde::Serialize)]
struct SimulationReport {
    outcome: Outcome,
    final_time: f64,
    final_state: PlanarPoint,
    samples: Vec<Vec<f64>>,
}

fn cmd_simulate(
    kappa: f64,
    z0: &[f64],
    t0: f64,
    duration: f64,
    variational: bool,
    format: Format,
) -> Result<(String, u8), Error> {
    let forcing = Forcing::new(kappa)?;
    let z0 = parse_point(z0)?;
    let cfg = IntegratorConfig::default();
    let result = if variational {
        integrate_variational(t0, z0, duration, &forcing, &cfg)?
    } else {
        integrate(t0, z0, duration, &forcing, &cfg)?
    };

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(result.samples.len());
    for (i, &(t, z)) in result.samples.iter().enumerate() {
        let mut row = vec![t, z.x, z.y];
        if let Some(ms) = &result.monodromy_samples {
            let m = ms[i];
            row.extend([m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]);
        }
        rows.push(row);
    }

    let code = match result.outcome {
        Outcome::Completed => EXIT_OK,
        Outcome::BlewUp { t_escape } => {
            eprintln!("trajectory blew up at t = {t_escape}");
            EXIT_INVALID
        }
        Outcome::StepLimit => {
            eprintln!("step limit ({}) exhausted at t = {}", cfg.max_steps, result.final_time);
            EXIT_NUMERICAL
        }
    };

    let out = match format {
        Format::Json => to_json(&SimulationReport {
            outcome: result.outcome,
            final_time: result.final_time,
            final_state: result.final_state,
            samples: rows,
        })?,
        Format::Csv => {
            let mut out = if variational {
                csv_row(["t", "x", "y", "v_xx", "v_xy", "v_yx", "v_yy"])
            } else {
                csv_row(["t", "x", "y"])
            };
            for row in &rows {
                out.push_str(&csv_row(row.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>()));
            }
            out
        }
    };
    Ok((out, code))
}

#[derive(serde::Serialize)]
struct CertifyReport {
    certificate: HyperbolicityCertificate,
    empirical: Option<EmpiricalReport>,
}

fn cmd_certify(
    r0: f64,
    kappa: f64,
    empirical: bool,
    pairs: usize,
    offsets: usize,
    seed: u64,
    format: Format,
) -> Result<(String, u8), Error> {
    let certificate = certify(r0, kappa)?;
    let empirical = if empirical {
        Some(empirical_hyperbolicity_check(
            r0,
            kappa,
            &EmpiricalCheckParams { n_pairs: pairs, n_offsets: offsets, seed },
            &IntegratorConfig::default(),
        )?)
    } else {
        None
    };
    let violations = empirical.map(|e| e.violations.total()).unwrap_or(0);
    let code = if certificate.valid && violations == 0 { EXIT_OK } else { EXIT_INVALID };

    let out = match format {
        Format::Json => to_json(&CertifyReport { certificate, empirical })?,
        Format::Csv => {
            let mut header = vec![
                "r0",
                "r",
                "h",
                "kappa",
                "b_tilde_cap",
                "delta_bound",
                "xi_lower",
                "mu_upper",
                "kappa_threshold",
                "valid",
            ];
            let c = &certificate;
            let mut fields = vec![
                fmt_f64(c.r0),
                fmt_f64(c.r),
                fmt_f64(c.h),
                fmt_f64(c.kappa),
                fmt_f64(c.b_tilde_cap),
                fmt_f64(c.delta_bound),
                fmt_f64(c.xi_lower),
                fmt_f64(c.mu_upper),
                fmt_f64(c.kappa_threshold),
                c.valid.to_string(),
            ];
            if let Some(e) = &empirical {
                header.extend([
                    "pairs",
                    "offsets",
                    "invariance_violations",
                    "expansion_violations",
                    "contraction_violations",
                    "min_expansion_ratio",
                    "max_contraction_ratio",
                    "integration_failures",
                ]);
                fields.extend([
                    e.pairs.to_string(),
                    e.offsets.to_string(),
                    e.violations.invariance.to_string(),
                    e.violations.expansion.to_string(),
                    e.violations.contraction.to_string(),
                    fmt_f64(e.min_expansion_ratio),
                    fmt_f64(e.max_contraction_ratio),
                    e.integration_failures.to_string(),
                ]);
            }
            let mut out = csv_row(header);
            out.push_str(&csv_row(fields));
            out
        }
    };
    Ok((out, code))
}

#[derive(serde::Serialize)]
struct EscapeReport {
    kappa: f64,
    t0: f64,
    z0: PlanarPoint,
    delta_star: f64,
    norm_sq_threshold: f64,
    t1: f64,
    outcome: EscapeOutcome,
}

fn cmd_escape(kappa: f64, z0: &[f64], t0: f64, format: Format) -> Result<(String, u8), Error> {
    let z0 = parse_point(z0)?;
    let cfg = IntegratorConfig::default();
    let outcome = certify_escape(z0, t0, kappa, &cfg)?;
    let delta_star = optimal_escape_angle();
    let prediction = escape_threshold(kappa, delta_star)?;
    let report = EscapeReport {
        kappa,
        t0,
        z0,
        delta_star,
        norm_sq_threshold: prediction.norm_sq_threshold,
        t1: prediction.t1,
        outcome,
    };
    let code = match outcome {
        EscapeOutcome::ForwardEscape { .. } | EscapeOutcome::BackwardEscape { .. } => EXIT_OK,
        EscapeOutcome::NoEscapeDetected { .. } => EXIT_INVALID,
    };
    let out = match format {
        Format::Json => to_json(&report)?,
        Format::Csv => {
            let (kind, t) = match outcome {
                EscapeOutcome::ForwardEscape { t } => ("forward", Some(t)),
                EscapeOutcome::BackwardEscape { t } => ("backward", Some(t)),
                EscapeOutcome::NoEscapeDetected { .. } => ("none", None),
            };
            let mut out = csv_row([
                "kappa",
                "t0",
                "x0",
                "y0",
                "outcome",
                "t_escape",
                "norm_sq_threshold",
                "t1",
            ]);
            out.push_str(&csv_row([
                fmt_f64(report.kappa),
                fmt_f64(report.t0),
                fmt_f64(report.z0.x),
                fmt_f64(report.z0.y),
                kind.to_string(),
                t.map(fmt_f64).unwrap_or_default(),
                fmt_f64(report.norm_sq_threshold),
                fmt_f64(report.t1),
            ]));
            out
        }
    };
    Ok((out, code))
}

#[derive(serde::Serialize)]
struct PeriodicReport {
    orbits: Vec<oscavg::orbits::PeriodicOrbit>,
    scaling: oscavg::orbits::NormScalingReport,
    /// `(kappa, R)` with `R` the infimum segment half-side; orbits in the
    /// rotating square satisfy `|z| <= sqrt(2)*R`.
    segment_radius: Vec<(f64, f64)>,
    attempts: Vec<oscavg::orbits::SweepAttempt>,
}

fn cmd_periodic(
    kappas: &[f64],
    angles: usize,
    t0: f64,
    format: Format,
) -> Result<(String, u8), Error> {
    if kappas.is_empty() || angles == 0 {
        return Err(Error::InvalidInput("need at least one kappa and one angle".into()));
    }
    let cfg = IntegratorConfig::default();
    let (orbits, attempts) = periodic_orbit_sweep(kappas, angles, t0, &cfg)?;
    let failures = attempts.iter().filter(|a| a.orbit.is_none()).count();
    eprintln!(
        "{} orbit(s) found, {} of {} guesses failed",
        orbits.len(),
        failures,
        attempts.len()
    );
    let code = if orbits.is_empty() { EXIT_INVALID } else { EXIT_OK };
    let out = match format {
        Format::Json => {
            let scaling = norm_scaling_report(&orbits)?;
            let segment_radius = kappas.iter().map(|&k| (k, segment_radius_bound(k))).collect();
            to_json(&PeriodicReport { orbits, scaling, segment_radius, attempts })?
        }
        Format::Csv => {
            let mut out = csv_row(["kappa", "min_norm", "max_norm", "residual"]);
            for o in &orbits {
                out.push_str(&csv_row([
                    fmt_f64(o.kappa),
                    fmt_f64(o.min_norm),
                    fmt_f64(o.max_norm),
                    fmt_f64(o.residual),
                ]));
            }
            out
        }
    };
    Ok((out, code))
}

#[derive(serde::Serialize)]
struct ScalingReport {
    r0_min: f64,
    r0_max: f64,
    n_points: usize,
    slope: f64,
    grid: Vec<(f64, f64)>,
}

fn cmd_scaling(
    r0_min: f64,
    r0_max: f64,
    n_points: usize,
    format: Format,
) -> Result<(String, u8), Error> {
    let slope = scaling_exponent(r0_min, r0_max, n_points)?;
    let out = match format {
        Format::Json => {
            let mut grid = Vec::with_capacity(n_points);
            for i in 0..n_points {
                let f = i as f64 / (n_points - 1) as f64;
                let r0 = r0_min * (r0_max / r0_min).powf(f);
                grid.push((r0, kappa_threshold(r0)?));
            }
            to_json(&ScalingReport { r0_min, r0_max, n_points, slope, grid })?
        }
        Format::Csv => {
            let mut out = csv_row(["r0_min", "r0_max", "n_points", "slope"]);
            out.push_str(&csv_row([
                fmt_f64(r0_min),
                fmt_f64(r0_max),
                n_points.to_string(),
                fmt_f64(slope),
            ]));
            out
        }
    };
    Ok((out, EXIT_OK))
}

fn cmd_verify(seed: u64, format: Format) -> Result<(String, u8), Error> {
    let results = verify::run_all(seed);
    let all_pass = results.iter().all(|r| r.passed || !r.gating);
    for r in &results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        let gate = if r.gating { "" } else { " (non-gating)" };
        eprintln!("criterion {:2}: {status}{gate} — {}", r.id, r.name);
        for line in &r.detail {
            eprintln!("    {line}");
        }
    }
    let out = match format {
        Format::Json => to_json(&results)?,
        Format::Csv => {
            let mut out = csv_row(["id", "name", "passed", "gating"]);
            for r in &results {
                out.push_str(&csv_row([
                    r.id.to_string(),
                    r.name.to_string(),
                    r.passed.to_string(),
                    r.gating.to_string(),
                ]));
            }
            out
        }
    };
    Ok((out, if all_pass { EXIT_OK } else { EXIT_INVALID }))
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, Error> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::InvalidInput(format!("serialization failed: {e}")))
}
