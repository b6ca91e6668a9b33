//! The cross-validation suites: every analytic bound and certificate in the
//! crate checked against independent numerics, with pinned sample counts and
//! tolerances. The `acceptance` integration test and the `verify` CLI
//! subcommand both run these.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::hyperbolicity::{
    certify, classify_orbit, empirical_hyperbolicity_check, kappa_threshold, scaling_exponent,
    EmpiricalCheckParams, OrbitClass,
};
use crate::integrator::{
    integrate, integrate_variational, solve, IntegratorConfig, NormEvent, OdeSystem, Outcome,
    StepperOptions,
};
use crate::orbits::{
    blowup_envelope, blowup_time, certify_escape, escape_threshold, norm_scaling_report,
    optimal_escape_angle, periodic_orbit_sweep, EscapeOutcome,
};
use crate::planar::{
    averaged_flow, averaged_jacobian, c0_error_closed, c1_error_closed, dv1, dv2, dv_norm_exact,
    d2v_norm_bound, Forcing, PlanarPoint,
};
use nalgebra::SVector;

/// Result of one verification suite.
#[derive(Clone, Debug, Serialize)]
pub struct SuiteResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    /// A failing non-gating suite does not fail the overall run.
    pub gating: bool,
    pub detail: Vec<String>,
}

impl SuiteResult {
    fn new(id: usize, name: &'static str) -> Self {
        SuiteResult { id, name, passed: true, gating: true, detail: Vec::new() }
    }

    fn check(&mut self, ok: bool, line: String) {
        if !ok {
            self.passed = false;
        }
        self.detail.push(format!("[{}] {line}", if ok { "ok" } else { "FAIL" }));
    }

    fn note(&mut self, line: String) {
        self.detail.push(format!("[info] {line}"));
    }
}

fn seeded(seed: u64, suite: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0xA5A5_0000 + suite);
    rng
}

fn sample_unit_disk(rng: &mut impl Rng) -> PlanarPoint {
    loop {
        let x = rng.random_range(-1.0..1.0);
        let y = rng.random_range(-1.0..1.0);
        if x * x + y * y <= 1.0 {
            return PlanarPoint::new(x, y);
        }
    }
}

fn lsq_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        num += (x - xm) * (y - ym);
        den += (x - xm) * (x - xm);
    }
    num / den
}

/// Threshold values against the published table: r0 = 10 and 100 within 1%,
/// r0 = 1 flagged as a discrepancy and pinned to the formula value.
pub fn suite_table1(_seed: u64) -> SuiteResult {
    let mut s = SuiteResult::new(1, "threshold table reproduction");
    let k10 = kappa_threshold(10.0).unwrap();
    let k100 = kappa_threshold(100.0).unwrap();
    let k1 = kappa_threshold(1.0).unwrap();
    let d10 = (k10 - 2.24e7).abs() / 2.24e7;
    let d100 = (k100 - 2.23e11).abs() / 2.23e11;
    s.check(d10 < 0.01, format!("kappa_threshold(10) = {k10:.6e}, vs 2.24e7: {:.3}%", d10 * 100.0));
    s.check(
        d100 < 0.01,
        format!("kappa_threshold(100) = {k100:.6e}, vs 2.23e11: {:.3}%", d100 * 100.0),
    );
    // Stability: the formula value must be reproducible to 0.1%.
    let frozen = 2_973.072_024_273_055;
    let drift = (k1 - frozen).abs() / frozen;
    s.check(drift < 1e-3, format!("kappa_threshold(1) = {k1:.10e}, drift vs frozen: {drift:.2e}"));
    let d1 = (k1 - 3655.0).abs() / 3655.0;
    s.note(format!(
        "discrepancy flag: kappa_threshold(1) = {k1:.4} differs from the published 3655 by {:.1}%; \
         the formula value is authoritative here",
        d1 * 100.0
    ));
    s
}

/// Spectral norms of the oscillatory-term Jacobians against the exact `3r²`,
/// and the brute-force bilinear sup against `(4+2√2)r`.
pub fn suite_norm_formulas(seed: u64) -> SuiteResult {
    let mut s = SuiteResult::new(2, "derivative norm formulas");
    let mut rng = seeded(seed, 2);

    let mut worst = 0.0_f64;
    let mut ok = true;
    for _ in 0..10_000 {
        let r = rng.random_range(0.0..100.0);
        let ang = rng.random_range(0.0..std::f64::consts::TAU);
        let z = PlanarPoint::new(r * ang.cos(), r * ang.sin());
        let expected = dv_norm_exact(z);
        let tol = 1e-9 * expected.max(1.0);
        for dv in [dv1, dv2] {
            let err = (dv(z).singular_values()[0] - expected).abs();
            worst = worst.max(err / expected.max(1.0));
            ok &= err < tol;
        }
    }
    s.check(ok, format!("spectral norm vs 3r^2 over 10^4 z: worst relative error {worst:.2e}"));

    let mut sup_ratio = 0.0_f64;
    let mut dominated = true;
    let eps = 1e-4;
    for _ in 0..100 {
        let z = PlanarPoint::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        let bound = d2v_norm_bound(z);
        let mut sup = 0.0_f64;
        for _ in 0..10_000 {
            let aa = rng.random_range(0.0..std::f64::consts::TAU);
            let ab = rng.random_range(0.0..std::f64::consts::TAU);
            let a = PlanarPoint::new(aa.cos(), aa.sin());
            let b = nalgebra::Vector2::new(ab.cos(), ab.sin());
            for dv in [dv1, dv2] {
                let plus = dv(PlanarPoint::new(z.x + eps * a.x, z.y + eps * a.y));
                let minus = dv(PlanarPoint::new(z.x - eps * a.x, z.y - eps * a.y));
                let bilinear = ((plus - minus) / (2.0 * eps)) * b;
                sup = sup.max(bilinear.norm());
            }
        }
        dominated &= sup <= bound * (1.0 + 1e-9);
        if bound > 0.0 {
            sup_ratio = sup_ratio.max(sup / bound);
        }
    }
    s.check(
        dominated,
        format!("bilinear sup over 10^4 unit pairs x 10^2 z: max sup/bound ratio {sup_ratio:.6}"),
    );
    s
}

struct ContainmentSweep {
    max_errors: Vec<(f64, f64)>,
    violations: usize,
    runs: usize,
}

fn containment_sweep(
    seed: u64,
    suite: u64,
    deviation: impl Fn(f64, PlanarPoint, f64, &Forcing, &IntegratorConfig) -> f64 + Sync,
    bound_of_kappa: impl Fn(f64) -> f64,
) -> ContainmentSweep {
    let cfg = IntegratorConfig::default();
    let mut rng = seeded(seed, suite);
    let z0s: Vec<PlanarPoint> = (0..100).map(|_| sample_unit_disk(&mut rng)).collect();
    let t0s = [0.0, 0.3, 1.7];
    let kappas = [1e4, 1e5, 1e6];
    let t = 0.125;

    let mut max_errors = Vec::new();
    let mut violations = 0;
    let mut runs = 0;
    for &kappa in &kappas {
        let forcing = Forcing::new(kappa).unwrap();
        let bound = bound_of_kappa(kappa);
        let errs: Vec<f64> = z0s
            .par_iter()
            .flat_map_iter(|&z0| {
                let deviation = &deviation;
                t0s.iter().map(move |&t0| deviation(t0, z0, t, &forcing, &cfg))
            })
            .collect();
        runs += errs.len();
        violations += errs.iter().filter(|&&e| e > bound).count();
        let max_err = errs.iter().cloned().fold(0.0_f64, f64::max);
        max_errors.push((kappa, max_err));
    }
    ContainmentSweep { max_errors, violations, runs }
}

/// Numeric flow against the averaged flow, inside the closed-form C⁰ bound,
/// with the `1/|κ|` error rate.
///
/// The deviation is the sup over the dense trajectory: the bound at `t` also
/// dominates every earlier time, so the whole solution must stay inside it.
pub fn suite_c0_containment(seed: u64) -> SuiteResult {
    let mut s = SuiteResult::new(3, "C0 bound containment");
    let sweep = containment_sweep(
        seed,
        3,
        |t0, z0, t, forcing, cfg| {
            let r = integrate(t0, z0, t, forcing, cfg).unwrap();
            assert!(matches!(r.outcome, Outcome::Completed));
            r.samples
                .iter()
                .map(|&(s, z)| (z - averaged_flow(s - t0, z0)).norm())
                .fold(0.0_f64, f64::max)
        },
        |kappa| c0_error_closed(0.125, std::f64::consts::SQRT_2, kappa).unwrap(),
    );
    s.check(
        sweep.violations == 0,
        format!("containment violations: {}/{} runs", sweep.violations, sweep.runs),
    );
    for &(kappa, max_err) in &sweep.max_errors {
        let bound = c0_error_closed(0.125, std::f64::consts::SQRT_2, kappa).unwrap();
        s.note(format!("kappa = {kappa:.0e}: max |phi - averaged| = {max_err:.3e}, bound {bound:.3e}"));
    }
    let xs: Vec<f64> = sweep.max_errors.iter().map(|(k, _)| k.ln()).collect();
    let ys: Vec<f64> = sweep.max_errors.iter().map(|(_, e)| e.ln()).collect();
    let slope = lsq_slope(&xs, &ys);
    s.check((-1.2..=-0.8).contains(&slope), format!("log-log error slope vs kappa: {slope:.4}"));
    s
}

/// Variational solution against `diag(e^t, e^{-t})`, inside the closed-form
/// C¹ bound.
pub fn suite_c1_containment(seed: u64) -> SuiteResult {
    let mut s = SuiteResult::new(4, "C1 bound containment");
    let reference = averaged_jacobian(0.125);
    let sweep = containment_sweep(
        seed,
        4,
        move |t0, z0, t, forcing, cfg| {
            let r = integrate_variational(t0, z0, t, forcing, cfg).unwrap();
            assert!(matches!(r.outcome, Outcome::Completed));
            (r.monodromy.unwrap() - reference).singular_values()[0]
        },
        |kappa| c1_error_closed(0.125, std::f64::consts::SQRT_2, kappa).unwrap(),
    );
    s.check(
        sweep.violations == 0,
        format!("containment violations: {}/{} runs", sweep.violations, sweep.runs),
    );
    for &(kappa, max_err) in &sweep.max_errors {
        let bound = c1_error_closed(0.125, std::f64::consts::SQRT_2, kappa).unwrap();
        s.note(format!(
            "kappa = {kappa:.0e}: max |dphi/dz - diag| = {max_err:.3e}, bound {bound:.3e}"
        ));
    }
    s
}

/// Generic averaging bounds on the decomposition constants against the
/// closed forms, to 1e-12 relative.
pub fn suite_specialization(seed: u64) -> SuiteResult {
    let mut s = SuiteResult::new(5, "generic/closed-form equality");
    let mut rng = seeded(seed, 5);
    let mut worst = 0.0_f64;
    let mut ok = true;
    for _ in 0..1000 {
        let r = 0.2 * (1000.0_f64).powf(rng.random_range(0.0..1.0));
        let t = rng.random_range(0.0..=1.0) * 0.25 / (r * r);
        let bundle = crate::planar::decomposition_constants(r).unwrap();
        let c0g = crate::averaging::c0_bound(&bundle, t).unwrap();
        let c0c = crate::planar::c0_deviation(t, r).unwrap();
        let c1g = crate::averaging::c1_bound(&bundle, t).unwrap();
        let c1c = crate::planar::c1_deviation(t, r).unwrap();
        let d0 = (c0g - c0c).abs() / c0c.abs();
        let d1 = (c1g - c1c).abs() / c1c.abs();
        worst = worst.max(d0).max(d1);
        ok &= d0 <= 1e-12 && d1 <= 1e-12;
    }
    s.check(ok, format!("10^3 (R, t) samples: worst relative difference {worst:.2e}"));
    s
}

/// Sampled cone-condition check under a just-valid certificate.
pub fn suite_empirical_hyperbolicity(seed: u64) -> SuiteResult {
    let mut s = SuiteResult::new(6, "empirical hyperbolicity");
    let r0 = 1.0;
    let kappa = 1.1 * kappa_threshold(r0).unwrap();
    let cert = certify(r0, kappa).unwrap();
    let cfg = IntegratorConfig::default();
    let report = empirical_hyperbolicity_check(
        r0,
        kappa,
        &EmpiricalCheckParams { n_pairs: 1000, n_offsets: 8, seed },
        &cfg,
    )
    .unwrap();
    s.check(
        report.violations.total() == 0 && report.integration_failures == 0,
        format!(
            "10^3 pairs x 8 offsets at kappa = 1.1*threshold: violations \
             invariance/expansion/contraction = {}/{}/{}, failures = {}",
            report.violations.invariance,
            report.violations.expansion,
            report.violations.contraction,
            report.integration_failures
        ),
    );
    s.note(format!(
        "certificate xi_lower = {:.6}, observed min expansion ratio = {:.6}",
        cert.xi_lower, report.min_expansion_ratio
    ));
    s.note(format!(
        "certificate mu_upper = {:.6}, observed max contraction ratio = {:.6}",
        cert.mu_upper, report.max_contraction_ratio
    ));
    // Negative control: far below the threshold the certificate degenerates
    // (xi_lower < 0), so failures of the genuine expansion requirement are
    // reported, never asserted — the analytic bound is sufficient-only.
    let weak = empirical_hyperbolicity_check(
        r0,
        0.01 * kappa_threshold(r0).unwrap(),
        &EmpiricalCheckParams { n_pairs: 100, n_offsets: 2, seed },
        &cfg,
    )
    .unwrap();
    s.note(format!(
        "negative control at kappa = 0.01*threshold: min expansion ratio {:.4} (xi > 1 {}), \
         max contraction ratio {:.4}",
        weak.min_expansion_ratio,
        if weak.min_expansion_ratio < 1.0 { "violated for some pair" } else { "not violated" },
        weak.max_contraction_ratio
    ));
    s
}

/// Orbit classification never returns Undecided under a valid certificate.
pub fn suite_trichotomy(seed: u64) -> SuiteResult {
    let mut s = SuiteResult::new(7, "orbit trichotomy");
    let r0 = 1.0;
    let kappa = 1.1 * kappa_threshold(r0).unwrap();
    let cfg = IntegratorConfig::default();
    let mut rng = seeded(seed, 7);
    let z0s: Vec<PlanarPoint> = std::iter::repeat_with(|| sample_unit_disk(&mut rng))
        .filter(|z| z.norm() >= 1e-9)
        .take(1000)
        .collect();
    let classes: Vec<OrbitClass> = z0s
        .par_iter()
        .map(|&z0| classify_orbit(z0, 0.0, r0, kappa, 10_000, &cfg).unwrap())
        .collect();
    let mut exits = 0usize;
    let mut crossings = 0usize;
    let mut converged = 0usize;
    let mut undecided = 0usize;
    for c in &classes {
        match c {
            OrbitClass::ExitsInPositiveCone { .. } => exits += 1,
            OrbitClass::CrossesToPositiveCone { .. } => crossings += 1,
            OrbitClass::ConvergesToZero { .. } => converged += 1,
            OrbitClass::Undecided => undecided += 1,
        }
    }
    s.check(
        undecided == 0,
        format!(
            "10^3 orbits: exits = {exits}, crossings = {crossings}, converged = {converged}, \
             undecided = {undecided}"
        ),
    );
    s
}

/// Growth exponent of the threshold in the ball radius.
pub fn suite_scaling_law(_seed: u64) -> SuiteResult {
    let mut s = SuiteResult::new(8, "threshold scaling law");
    let slope = scaling_exponent(10.0, 1000.0, 20).unwrap();
    s.check(
        (3.9..=4.1).contains(&slope),
        format!("slope of log threshold vs log r0 on [10, 1000]: {slope:.4}"),
    );
    s
}

/// Escape of every initial point on the supercritical circle, with forward
/// escapes from the positive cone inside the analytic window.
pub fn suite_escape(_seed: u64) -> SuiteResult {
    let mut s = SuiteResult::new(9, "finite-time escape");
    let kappa = 50.0;
    let cfg = IntegratorConfig::default();
    let delta = optimal_escape_angle();
    let t1 = escape_threshold(kappa, delta).unwrap().t1;
    let radius = (kappa * 4.706).sqrt();
    let n = 1000usize;

    let outcomes: Vec<(PlanarPoint, EscapeOutcome)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let ang = std::f64::consts::TAU * i as f64 / n as f64;
            let z0 = PlanarPoint::new(radius * ang.cos(), radius * ang.sin());
            (z0, certify_escape(z0, 0.0, kappa, &cfg).unwrap())
        })
        .collect();

    let mut forward = 0usize;
    let mut backward = 0usize;
    let mut missed = 0usize;
    let mut late_forward = 0usize;
    for (z0, outcome) in &outcomes {
        match outcome {
            EscapeOutcome::ForwardEscape { t } => {
                forward += 1;
                if z0.x > 0.0 && z0.x.abs() >= z0.y.abs() && *t >= t1 {
                    late_forward += 1;
                }
            }
            EscapeOutcome::BackwardEscape { .. } => backward += 1,
            EscapeOutcome::NoEscapeDetected { .. } => missed += 1,
        }
    }
    s.check(
        missed == 0,
        format!("10^3 points on |z0|^2 = 4.706*kappa: forward = {forward}, backward = {backward}, none = {missed}"),
    );
    s.check(
        late_forward == 0,
        format!("forward escapes from the positive cone with x0 > 0 after t1 = {t1:.5}: {late_forward}"),
    );
    s
}

struct CubicGrowth {
    b: f64,
}
impl OdeSystem<1> for CubicGrowth {
    fn rhs(&self, _t: f64, y: &SVector<f64, 1>) -> SVector<f64, 1> {
        SVector::<f64, 1>::new(self.b * y[0] * y[0] * y[0])
    }
}

/// The integrator against the exact blow-up envelope of `y' = b y³`.
pub fn suite_blowup_envelope(seed: u64) -> SuiteResult {
    let mut s = SuiteResult::new(10, "blow-up envelope oracle");
    let mut rng = seeded(seed, 10);
    let mut worst = 0.0_f64;
    let mut ok = true;
    for _ in 0..100 {
        let b = rng.random_range(0.2..5.0);
        let x0 = rng.random_range(0.2..3.0);
        let t_end = 0.9 * blowup_time(x0, b).unwrap();
        let sys = CubicGrowth { b };
        let opt = StepperOptions {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            h_max: t_end / 16.0,
            max_steps: 1_000_000,
            event: Some(NormEvent { dim: 1, threshold: 1e9 }),
            max_samples: 64,
        };
        let sol = solve(&sys, 0.0, SVector::<f64, 1>::new(x0), t_end, &opt).unwrap();
        for &(t, y) in &sol.samples {
            let env = blowup_envelope(x0, b, t).unwrap();
            let rel = (y[0] - env).abs() / env;
            worst = worst.max(rel);
            ok &= rel <= 1e-9;
        }
    }
    s.check(ok, format!("10^2 random (b, x0) to 0.9x blow-up time: worst relative error {worst:.2e}"));
    s
}

/// Best-effort periodic-orbit sweep; reported, never gating.
pub fn suite_periodic_orbits(_seed: u64) -> SuiteResult {
    let mut s = SuiteResult::new(11, "periodic orbit study");
    s.gating = false;
    let cfg = IntegratorConfig::default();
    let kappas = [1.0, 2.0, 5.0, 10.0];
    let (orbits, attempts) = periodic_orbit_sweep(&kappas, 16, 0.0, &cfg).unwrap();
    let failures = attempts.iter().filter(|a| a.orbit.is_none()).count();
    s.note(format!(
        "sweep over kappa = {{1, 2, 5, 10}}, 16 guesses each: {} orbit(s) found, {} guesses failed",
        orbits.len(),
        failures
    ));
    for o in &orbits {
        s.note(format!(
            "kappa = {}: z0 = ({:.6}, {:.6}), residual = {:.2e}, |z| in [{:.4}, {:.4}]",
            o.kappa, o.z_init.x, o.z_init.y, o.residual, o.min_norm, o.max_norm
        ));
    }
    let report = norm_scaling_report(&orbits).unwrap();
    match report.fitted_exponent {
        Some(expo) => {
            let in_window = (0.25..=0.5).contains(&expo);
            s.check(
                in_window,
                format!("fitted exponent of max_norm vs kappa: {expo:.4} (window [0.25, 0.5])"),
            );
        }
        None => s.note(format!(
            "no exponent fit: {}",
            report.note.unwrap_or_else(|| "unknown".into())
        )),
    }
    s
}

/// Runs all suites in order.
pub fn run_all(seed: u64) -> Vec<SuiteResult> {
    vec![
        suite_table1(seed),
        suite_norm_formulas(seed),
        suite_c0_containment(seed),
        suite_c1_containment(seed),
        suite_specialization(seed),
        suite_empirical_hyperbolicity(seed),
        suite_trichotomy(seed),
        suite_scaling_law(seed),
        suite_escape(seed),
        suite_blowup_envelope(seed),
        suite_periodic_orbits(seed),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_suites_pass() {
        assert!(suite_table1(0).passed);
        assert!(suite_scaling_law(0).passed);
        assert!(suite_specialization(0).passed);
    }
}
