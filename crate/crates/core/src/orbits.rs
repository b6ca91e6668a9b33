//! Blow-up certification, escape thresholds and periodic-orbit search.
//!
//! Large solutions escape to infinity in finite time: while
//! `cos(κt) - |sin(κt)| > ε` the horizontal component in the positive cone
//! dominates the scalar inequality `x' > εx³`, whose solutions blow up no
//! later than `1/(2εx₀²)`. Choosing `ε = √2 sin δ` with `δ ∈ (0, π/4)` and
//! window length `t₁ = (π/4 - δ)/κ` gives the sufficient escape condition
//! `|z₀|² ≥ κ/(√2 (π/4 - δ) sin δ)` for escape forward or backward in time.
//!
//! Bounded nonzero orbits are pinched between the hyperbolic ball (lower
//! bound `O(κ^{1/4})`, via the frequency threshold) and the rotating-square
//! radius satisfying `R²(R²-1) > (1/2 + κ/4)²` (upper bound `O(κ^{1/2})`).

use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::FRAC_PI_4;

use crate::error::{Error, Result};
use crate::hyperbolicity::hyperbolic_ball_radius;
use crate::integrator::{
    flow_endpoint, integrate_variational, IntegratorConfig, Outcome,
};
use crate::planar::{Forcing, PlanarPoint};

/// Escape window and norm threshold derived from an angle `δ ∈ (0, π/4)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EscapePrediction {
    pub delta: f64,
    /// Window length `t₁ = (π/4 - δ)/κ` on which `cos - |sin| > ε` holds.
    pub t1: f64,
    /// `ε = √2 sin δ`.
    pub epsilon: f64,
    /// Squared-norm threshold `κ/(√2 (π/4 - δ) sin δ)` guaranteeing escape.
    pub norm_sq_threshold: f64,
}

/// The angle maximizing `(π/4 - δ) sin δ`, i.e. the root of
/// `tan δ = π/4 - δ`; this minimizes the escape threshold.
pub fn optimal_escape_angle() -> f64 {
    let f = |d: f64| d.tan() - (FRAC_PI_4 - d);
    let mut lo = 0.0_f64;
    let mut hi = FRAC_PI_4;
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Builds the escape prediction for frequency `kappa > 0` and angle `delta`.
pub fn escape_threshold(kappa: f64, delta: f64) -> Result<EscapePrediction> {
    if !kappa.is_finite() || kappa <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "kappa must be finite and positive, got {kappa}"
        )));
    }
    if !delta.is_finite() || delta <= 0.0 || delta >= FRAC_PI_4 {
        return Err(Error::InvalidInput(format!(
            "delta must lie strictly inside (0, pi/4), got {delta}"
        )));
    }
    let window = FRAC_PI_4 - delta;
    Ok(EscapePrediction {
        delta,
        t1: window / kappa,
        epsilon: std::f64::consts::SQRT_2 * delta.sin(),
        norm_sq_threshold: kappa / (std::f64::consts::SQRT_2 * window * delta.sin()),
    })
}

/// Blow-up time `1/(2 b x0²)` of the comparison equation `y' = b y³`.
pub fn blowup_time(x0: f64, b: f64) -> Result<f64> {
    if !x0.is_finite() || !b.is_finite() || x0 <= 0.0 || b <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "need positive finite x0 and b, got x0 = {x0}, b = {b}"
        )));
    }
    Ok(1.0 / (2.0 * b * x0 * x0))
}

/// Exact solution `x0 / √(1 - 2 b x0² t)` of `y' = b y³`, `y(0) = x0`.
///
/// Any C¹ function satisfying `x' > b x³` with `x(0) = x0` dominates this
/// envelope pointwise, hence blows up no later than `1/(2 b x0²)`.
pub fn blowup_envelope(x0: f64, b: f64, t: f64) -> Result<f64> {
    let t_blowup = blowup_time(x0, b)?;
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidInput(format!("time must be finite and >= 0, got {t}")));
    }
    if t >= t_blowup {
        return Err(Error::PastBlowup { t, t_blowup });
    }
    Ok(x0 / (1.0 - 2.0 * b * x0 * x0 * t).sqrt())
}

/// Result of the bidirectional escape search. Times are elapsed from `t0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum EscapeOutcome {
    ForwardEscape { t: f64 },
    BackwardEscape { t: f64 },
    NoEscapeDetected { horizon: f64, step_limited: bool },
}

/// Integrates forward then backward over twice the analytic escape window
/// `t₁(δ*)`, reporting the first blow-up threshold crossing.
///
/// For `|z₀|²` at or above the optimal-angle threshold an escape is
/// guaranteed; starting in the positive cone with `x₀ > 0` at `t0 = 0` the
/// forward escape occurs before `t₁`.
pub fn certify_escape(
    z0: PlanarPoint,
    t0: f64,
    kappa: f64,
    cfg: &IntegratorConfig,
) -> Result<EscapeOutcome> {
    cfg.validate()?;
    let prediction = escape_threshold(kappa, optimal_escape_angle())?;
    let horizon = 2.0 * prediction.t1;
    let forcing = Forcing::new(kappa)?;

    let mut step_limited = false;
    let (outcome, _, t_final) = flow_endpoint(t0, z0, horizon, &forcing, cfg)?;
    match outcome {
        Outcome::BlewUp { .. } => return Ok(EscapeOutcome::ForwardEscape { t: t_final - t0 }),
        Outcome::StepLimit => step_limited = true,
        Outcome::Completed => {}
    }
    let (outcome, _, t_final) = flow_endpoint(t0, z0, -horizon, &forcing, cfg)?;
    match outcome {
        Outcome::BlewUp { .. } => return Ok(EscapeOutcome::BackwardEscape { t: t0 - t_final }),
        Outcome::StepLimit => step_limited = true,
        Outcome::Completed => {}
    }
    Ok(EscapeOutcome::NoEscapeDetected { horizon, step_limited })
}

/// Infimum radius satisfying `R²(R² - 1) > (1/2 + κ/4)²`:
/// `R = √((1 + √(1 + 4(1/2 + κ/4)²))/2)`.
///
/// Orbits inside the rotating isolating square are bounded by this radius,
/// which grows like `√(κ)/2`.
pub fn segment_radius_bound(kappa: f64) -> f64 {
    let q = 0.5 + kappa / 4.0;
    (0.5 * (1.0 + (1.0 + 4.0 * q * q).sqrt())).sqrt()
}

/// A numerically located fixed point of the period map `φ(t0, 2π/κ, ·)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PeriodicOrbit {
    pub kappa: f64,
    /// `2π/κ`.
    pub period: f64,
    pub z_init: PlanarPoint,
    /// `|P(z_init) - z_init|` at acceptance.
    pub residual: f64,
    pub min_norm: f64,
    pub max_norm: f64,
}

const NEWTON_MAX_ITERS: usize = 50;
const NEWTON_RESIDUAL_TOL: f64 = 1e-10;
const NEWTON_CONDITION_LIMIT: f64 = 1e12;
const TRIVIAL_ORBIT_NORM: f64 = 1e-6;
/// Phase points used to sample the norm range over one period.
const NORM_SAMPLE_COUNT: usize = 1024;

/// Newton iteration on `G(z) = φ(t0, 2π/κ, z) - z`, using the variational
/// monodromy for the Jacobian `DG = V - Id`.
///
/// Fails on divergence, a singular shooting Jacobian, or collapse to the
/// trivial fixed point at the origin.
pub fn find_periodic_orbit(
    kappa: f64,
    guess: PlanarPoint,
    t0: f64,
    cfg: &IntegratorConfig,
) -> Result<PeriodicOrbit> {
    cfg.validate()?;
    let forcing = Forcing::new(kappa)?;
    if !guess.is_finite() || guess.norm() == 0.0 {
        return Err(Error::InvalidInput("initial guess must be finite and nonzero".into()));
    }
    let period = std::f64::consts::TAU / kappa;

    let mut z = guess;
    for _ in 0..NEWTON_MAX_ITERS {
        if z.norm() < TRIVIAL_ORBIT_NORM {
            return Err(Error::TrivialOrbit);
        }
        if !z.is_finite() {
            return Err(Error::NewtonDiverged { iterations: NEWTON_MAX_ITERS });
        }
        let result = integrate_variational(t0, z, period, &forcing, cfg)?;
        let (p, v) = match result.outcome {
            Outcome::Completed => (result.final_state, result.monodromy.unwrap()),
            Outcome::BlewUp { t_escape } => {
                return Err(Error::Integration(format!(
                    "period map undefined: trajectory blew up at t = {t_escape}"
                )))
            }
            Outcome::StepLimit => {
                return Err(Error::Integration("step limit inside period map".into()))
            }
        };
        let residual = (p - z).norm();
        if residual < NEWTON_RESIDUAL_TOL {
            if z.norm() < TRIVIAL_ORBIT_NORM {
                return Err(Error::TrivialOrbit);
            }
            let (min_norm, max_norm) = orbit_norm_range(z, t0, period, &forcing, cfg)?;
            return Ok(PeriodicOrbit {
                kappa,
                period,
                z_init: z,
                residual,
                min_norm,
                max_norm,
            });
        }
        let dg = v - nalgebra::Matrix2::identity();
        let sv = dg.singular_values();
        if sv[1] == 0.0 || sv[0] / sv[1] > NEWTON_CONDITION_LIMIT {
            return Err(Error::SingularJacobian { condition: sv[0] / sv[1] });
        }
        let rhs = nalgebra::Vector2::new(p.x - z.x, p.y - z.y);
        let delta = dg
            .lu()
            .solve(&rhs)
            .ok_or(Error::SingularJacobian { condition: f64::INFINITY })?;
        z = PlanarPoint::new(z.x - delta[0], z.y - delta[1]);
    }
    Err(Error::NewtonDiverged { iterations: NEWTON_MAX_ITERS })
}

/// Min/max of `|z|` over one period, sampled at uniformly spaced phases.
fn orbit_norm_range(
    z_init: PlanarPoint,
    t0: f64,
    period: f64,
    forcing: &Forcing,
    cfg: &IntegratorConfig,
) -> Result<(f64, f64)> {
    let dt = period / NORM_SAMPLE_COUNT as f64;
    let mut z = z_init;
    let mut min_norm = z.norm();
    let mut max_norm = min_norm;
    for i in 0..NORM_SAMPLE_COUNT {
        let t = t0 + i as f64 * dt;
        let (outcome, w, _) = flow_endpoint(t, z, dt, forcing, cfg)?;
        if !matches!(outcome, Outcome::Completed) {
            return Err(Error::Integration(format!(
                "orbit norm sampling interrupted: {outcome:?}"
            )));
        }
        z = w;
        let n = z.norm();
        min_norm = min_norm.min(n);
        max_norm = max_norm.max(n);
    }
    Ok((min_norm, max_norm))
}

/// One guess of the periodic-orbit sweep protocol.
#[derive(Clone, Debug, Serialize)]
pub struct SweepAttempt {
    pub kappa: f64,
    pub guess: PlanarPoint,
    pub orbit: Option<PeriodicOrbit>,
    pub failure: Option<String>,
}

/// Runs [`find_periodic_orbit`] from `n_angles` guesses on the circle of
/// radius `segment_radius_bound(κ)/√2` for each frequency; duplicate
/// convergence targets are reported once.
pub fn periodic_orbit_sweep(
    kappas: &[f64],
    n_angles: usize,
    t0: f64,
    cfg: &IntegratorConfig,
) -> Result<(Vec<PeriodicOrbit>, Vec<SweepAttempt>)> {
    let mut attempts: Vec<SweepAttempt> = Vec::new();
    let mut orbits: Vec<PeriodicOrbit> = Vec::new();
    for &kappa in kappas {
        let radius = segment_radius_bound(kappa) / std::f64::consts::SQRT_2;
        let per_kappa: Vec<SweepAttempt> = (0..n_angles)
            .into_par_iter()
            .map(|i| {
                let angle = std::f64::consts::TAU * i as f64 / n_angles as f64;
                let guess = PlanarPoint::new(radius * angle.cos(), radius * angle.sin());
                match find_periodic_orbit(kappa, guess, t0, cfg) {
                    Ok(orbit) => SweepAttempt { kappa, guess, orbit: Some(orbit), failure: None },
                    Err(e) => SweepAttempt {
                        kappa,
                        guess,
                        orbit: None,
                        failure: Some(e.to_string()),
                    },
                }
            })
            .collect();
        for attempt in per_kappa {
            if let Some(orbit) = &attempt.orbit {
                let duplicate = orbits.iter().any(|o| {
                    o.kappa == orbit.kappa
                        && (o.min_norm - orbit.min_norm).abs() < 1e-6 * orbit.min_norm.max(1.0)
                        && (o.max_norm - orbit.max_norm).abs() < 1e-6 * orbit.max_norm.max(1.0)
                });
                if !duplicate {
                    orbits.push(*orbit);
                }
            }
            attempts.push(attempt);
        }
    }
    Ok((orbits, attempts))
}

/// Norm-scaling diagnostics for one orbit.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct OrbitNormReport {
    pub kappa: f64,
    pub min_norm: f64,
    pub max_norm: f64,
    /// `max_norm / κ^{1/2}`; bounded for large κ by the segment radius.
    pub ratio_sqrt: f64,
    /// `max_norm / κ^{1/4}`; bounded below for large κ by the hyperbolic ball.
    pub ratio_quarter: f64,
    /// Radius of the largest certified hyperbolic ball below `|κ|`, when any.
    pub hyperbolic_radius: Option<f64>,
    /// `max_norm >= hyperbolic_radius` (no nonzero bounded orbit fits inside
    /// the hyperbolic ball); `None` when no ball is certified at this κ.
    pub clears_hyperbolic_ball: Option<bool>,
}

/// Aggregate report over a κ-sweep of located orbits.
#[derive(Clone, Debug, Serialize)]
pub struct NormScalingReport {
    pub per_orbit: Vec<OrbitNormReport>,
    /// Least-squares exponent of `max_norm` against κ; `None` below 3 orbits
    /// or without κ variation.
    pub fitted_exponent: Option<f64>,
    pub note: Option<String>,
}

/// Per-orbit norm diagnostics.
pub fn norm_bounds_check(orbit: &PeriodicOrbit) -> Result<OrbitNormReport> {
    let hyperbolic_radius = hyperbolic_ball_radius(orbit.kappa)?;
    Ok(OrbitNormReport {
        kappa: orbit.kappa,
        min_norm: orbit.min_norm,
        max_norm: orbit.max_norm,
        ratio_sqrt: orbit.max_norm / orbit.kappa.abs().sqrt(),
        ratio_quarter: orbit.max_norm / orbit.kappa.abs().powf(0.25),
        hyperbolic_radius,
        clears_hyperbolic_ball: hyperbolic_radius.map(|r0| orbit.max_norm >= r0),
    })
}

/// Fits the growth exponent of `max_norm` against κ across a sweep.
pub fn norm_scaling_report(orbits: &[PeriodicOrbit]) -> Result<NormScalingReport> {
    let per_orbit: Vec<OrbitNormReport> =
        orbits.iter().map(norm_bounds_check).collect::<Result<_>>()?;
    if orbits.len() < 3 {
        return Ok(NormScalingReport {
            per_orbit,
            fitted_exponent: None,
            note: Some("insufficient data: need at least 3 orbits for an exponent fit".into()),
        });
    }
    let xs: Vec<f64> = orbits.iter().map(|o| o.kappa.abs().ln()).collect();
    let ys: Vec<f64> = orbits.iter().map(|o| o.max_norm.ln()).collect();
    let n = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        num += (x - x_mean) * (y - y_mean);
        den += (x - x_mean) * (x - x_mean);
    }
    if den == 0.0 {
        return Ok(NormScalingReport {
            per_orbit,
            fitted_exponent: None,
            note: Some("insufficient data: orbits share a single kappa".into()),
        });
    }
    Ok(NormScalingReport { per_orbit, fitted_exponent: Some(num / den), note: None })
}
