//! Adaptive numerical integration of the forced planar flow and its first
//! variational equation.
//!
//! The stepper is an explicit Dormand-Prince 5(4) embedded pair with PI
//! step-size control, FSAL, and fourth-order dense output. Two policies are
//! specific to this problem:
//!
//! * the step size is capped at a fraction of the forcing period
//!   `2π/|κ|`, so the fast oscillation is always resolved;
//! * after every accepted step the planar norm is checked against a blow-up
//!   threshold, and the first crossing time is located by bisection on the
//!   dense output.

use nalgebra::{Matrix2, SVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::planar::{jacobian, vector_field, Forcing, PlanarPoint};

/// A first-order ODE `y' = f(t, y)` with state dimension `N`.
pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, y: &SVector<f64, N>) -> SVector<f64, N>;
}

impl<const N: usize, F> OdeSystem<N> for F
where
    F: Fn(f64, &SVector<f64, N>) -> SVector<f64, N>,
{
    fn rhs(&self, t: f64, y: &SVector<f64, N>) -> SVector<f64, N> {
        self(t, y)
    }
}

/// Integration tolerances and policies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Step-size cap as a fraction of the forcing period `2π/|κ|`.
    pub max_step_fraction_of_period: f64,
    /// Norm threshold that counts as finite-time blow-up.
    pub blowup_norm: f64,
    pub max_steps: u64,
    /// Upper bound on stored trajectory samples (thinned uniformly).
    pub max_samples: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step_fraction_of_period: 0.05,
            blowup_norm: 1e6,
            max_steps: 10_000_000,
            max_samples: 10_000,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite())
            || !(self.abs_tol > 0.0 && self.abs_tol.is_finite())
        {
            return Err(Error::InvalidInput(format!(
                "tolerances must be positive and finite, got rel_tol = {}, abs_tol = {}",
                self.rel_tol, self.abs_tol
            )));
        }
        if !(self.max_step_fraction_of_period > 0.0 && self.max_step_fraction_of_period < 1.0) {
            return Err(Error::InvalidInput(format!(
                "max_step_fraction_of_period must lie in (0, 1), got {}",
                self.max_step_fraction_of_period
            )));
        }
        if !self.blowup_norm.is_finite() || self.blowup_norm <= 1.0 {
            return Err(Error::InvalidInput(format!(
                "blowup_norm must exceed 1, got {}",
                self.blowup_norm
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidInput("max_steps must be positive".into()));
        }
        Ok(())
    }
}

/// How an integration ended.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Outcome {
    /// Reached the requested end time.
    Completed,
    /// The planar norm crossed the blow-up threshold; `t_escape` is the first
    /// crossing time (absolute, not relative to the start).
    BlewUp { t_escape: f64 },
    /// The step budget ran out before the end time.
    StepLimit,
}

/// Dense numerical solution of the flow, optionally with the solution of the
/// first variational equation.
#[derive(Clone, Debug)]
pub struct TrajectoryResult {
    pub outcome: Outcome,
    /// Stored states, strictly increasing in `t` (also for backward runs).
    pub samples: Vec<(f64, PlanarPoint)>,
    pub final_state: PlanarPoint,
    pub final_time: f64,
    /// Derivative of the flow map with respect to the initial condition,
    /// present when variational integration was requested.
    pub monodromy: Option<Matrix2<f64>>,
    /// Per-sample variational matrices, aligned with `samples`.
    pub monodromy_samples: Option<Vec<Matrix2<f64>>>,
    pub accepted_steps: u64,
    pub rejected_steps: u64,
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 0.2;
const C3: f64 = 0.3;
const C4: f64 = 0.8;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 0.2;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const FAC_MIN: f64 = 0.2; // largest permitted shrink of 1/fac
const FAC_MAX: f64 = 10.0; // largest permitted growth of 1/fac
/// Bisection tolerance (in time) for locating the blow-up crossing.
const EVENT_TIME_TOL: f64 = 1e-9;

/// Stop condition: the norm of the leading `dim` components reaches
/// `threshold`.
#[derive(Clone, Copy)]
pub struct NormEvent {
    pub dim: usize,
    pub threshold: f64,
}

pub struct StepperOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub h_max: f64,
    pub max_steps: u64,
    pub event: Option<NormEvent>,
    pub max_samples: usize,
}

pub enum RawOutcome {
    ReachedEnd,
    Event { t: f64 },
    StepLimit,
}

pub struct RawSolution<const N: usize> {
    pub outcome: RawOutcome,
    pub t_final: f64,
    pub y_final: SVector<f64, N>,
    pub samples: Vec<(f64, SVector<f64, N>)>,
    pub accepted: u64,
    pub rejected: u64,
}

fn leading_norm<const N: usize>(y: &SVector<f64, N>, dim: usize) -> f64 {
    y.rows(0, dim).norm()
}

struct DenseOutput<const N: usize> {
    cont: [SVector<f64, N>; 5],
}

impl<const N: usize> DenseOutput<N> {
    fn eval(&self, s: f64) -> SVector<f64, N> {
        let s1 = 1.0 - s;
        self.cont[0]
            + (self.cont[1] + (self.cont[2] + (self.cont[3] + self.cont[4] * s1) * s) * s1) * s
    }
}

/// Initial step-size guess following the usual embedded-pair heuristic.
fn initial_step<const N: usize, S: OdeSystem<N>>(
    sys: &S,
    t0: f64,
    y0: &SVector<f64, N>,
    f0: &SVector<f64, N>,
    posneg: f64,
    opt: &StepperOptions,
) -> f64 {
    let scale = |y: &SVector<f64, N>, base: &SVector<f64, N>| -> f64 {
        let mut sum = 0.0;
        for i in 0..N {
            let sc = opt.abs_tol + opt.rel_tol * base[i].abs();
            sum += (y[i] / sc).powi(2);
        }
        (sum / N as f64).sqrt()
    };
    let d0 = scale(y0, y0);
    let d1 = scale(f0, y0);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(opt.h_max);
    let y1 = y0 + f0 * (h0 * posneg);
    let f1 = sys.rhs(t0 + h0 * posneg, &y1);
    let d2 = scale(&(f1 - f0), y0) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(opt.h_max)
}

/// Core adaptive stepper. Integrates from `t0` to `t_end` (either direction),
/// recording up to `max_samples` states and stopping early on the norm event.
pub fn solve<const N: usize, S: OdeSystem<N>>(
    sys: &S,
    t0: f64,
    y0: SVector<f64, N>,
    t_end: f64,
    opt: &StepperOptions,
) -> Result<RawSolution<N>> {
    if !t0.is_finite() || !t_end.is_finite() || y0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite integration endpoint or state".into()));
    }

    let mut samples: Vec<(f64, SVector<f64, N>)> = Vec::new();
    let mut stride: u64 = 1;
    let mut accepted_count: u64 = 0;
    let store = opt.max_samples >= 2;
    if store {
        samples.push((t0, y0));
    }

    // An initial state already past the threshold counts as an immediate event.
    if let Some(ev) = opt.event {
        if leading_norm(&y0, ev.dim) >= ev.threshold {
            return Ok(RawSolution {
                outcome: RawOutcome::Event { t: t0 },
                t_final: t0,
                y_final: y0,
                samples,
                accepted: 0,
                rejected: 0,
            });
        }
    }
    if t_end == t0 {
        return Ok(RawSolution {
            outcome: RawOutcome::ReachedEnd,
            t_final: t0,
            y_final: y0,
            samples,
            accepted: 0,
            rejected: 0,
        });
    }

    let posneg = (t_end - t0).signum();
    let span = (t_end - t0).abs();
    let opt_capped = StepperOptions { h_max: opt.h_max.min(span), ..*opt };

    let mut t = t0;
    let mut y = y0;
    let mut k1 = sys.rhs(t, &y);
    let mut h = initial_step(sys, t, &y, &k1, posneg, &opt_capped);
    let mut facold: f64 = 1e-4;
    let mut accepted: u64 = 0;
    let mut rejected: u64 = 0;
    let mut last_rejected = false;

    let push_sample = |samples: &mut Vec<(f64, SVector<f64, N>)>,
                           stride: &mut u64,
                           count: u64,
                           t: f64,
                           y: SVector<f64, N>| {
        if !store {
            return;
        }
        if count.is_multiple_of(*stride) {
            samples.push((t, y));
            if samples.len() >= opt.max_samples {
                let mut keep = 0usize;
                samples.retain(|_| {
                    keep += 1;
                    (keep - 1).is_multiple_of(2)
                });
                *stride *= 2;
            }
        }
    };

    loop {
        if accepted + rejected >= opt.max_steps {
            return Ok(RawSolution {
                outcome: RawOutcome::StepLimit,
                t_final: t,
                y_final: y,
                samples,
                accepted,
                rejected,
            });
        }
        // Never overshoot the end point.
        let mut reached_end = false;
        if (t + 1.0001 * h * posneg - t_end) * posneg >= 0.0 {
            h = (t_end - t).abs();
            reached_end = true;
        }
        let hs = h * posneg;
        if t + hs == t {
            // The step no longer advances time; near a blow-up this means the
            // threshold is not resolvable in f64.
            return Err(Error::Integration(format!("step size underflow at t = {t}")));
        }

        let k2 = sys.rhs(t + C2 * hs, &(y + k1 * (A21 * hs)));
        let k3 = sys.rhs(t + C3 * hs, &(y + (k1 * A31 + k2 * A32) * hs));
        let k4 = sys.rhs(t + C4 * hs, &(y + (k1 * A41 + k2 * A42 + k3 * A43) * hs));
        let k5 = sys.rhs(
            t + C5 * hs,
            &(y + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * hs),
        );
        let k6 = sys.rhs(
            t + hs,
            &(y + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * hs),
        );
        let y_new = y + (k1 * B1 + k3 * B3 + k4 * B4 + k5 * B5 + k6 * B6) * hs;
        let k7 = sys.rhs(t + hs, &y_new);

        let err_vec = (k1 * E1 + k3 * E3 + k4 * E4 + k5 * E5 + k6 * E6 + k7 * E7) * hs;
        let mut err_sq = 0.0;
        for i in 0..N {
            let sc = opt.abs_tol + opt.rel_tol * y[i].abs().max(y_new[i].abs());
            err_sq += (err_vec[i] / sc).powi(2);
        }
        let mut err = (err_sq / N as f64).sqrt();
        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            // A stage escaped to overflow; retry with a much smaller step.
            err = f64::MAX;
        }

        if err <= 1.0 {
            accepted += 1;
            accepted_count += 1;

            let event_hit = opt
                .event
                .map(|ev| leading_norm(&y_new, ev.dim) >= ev.threshold)
                .unwrap_or(false);

            if event_hit {
                let ev = opt.event.unwrap();
                let ydiff = y_new - y;
                let bspl = k1 * hs - ydiff;
                let dsum = k1 * D1 + k3 * D3 + k4 * D4 + k5 * D5 + k6 * D6 + k7 * D7;
                let dense = DenseOutput {
                    cont: [y, ydiff, bspl, ydiff - k7 * hs - bspl, dsum * hs],
                };
                // First crossing inside (t, t+hs]: bисect on the dense output.
                let mut lo = 0.0_f64;
                let mut hi = 1.0_f64;
                let mut guard = 0;
                while (hi - lo) * h > EVENT_TIME_TOL && guard < 200 {
                    let mid = 0.5 * (lo + hi);
                    if leading_norm(&dense.eval(mid), ev.dim) >= ev.threshold {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                    guard += 1;
                }
                let t_event = t + hi * hs;
                let y_event = dense.eval(hi);
                push_sample(&mut samples, &mut stride, accepted_count, t_event, y_event);
                if store {
                    match samples.last() {
                        Some(&(ts, _)) if ts == t_event => {}
                        _ => samples.push((t_event, y_event)),
                    }
                }
                return Ok(RawSolution {
                    outcome: RawOutcome::Event { t: t_event },
                    t_final: t_event,
                    y_final: y_event,
                    samples,
                    accepted,
                    rejected,
                });
            }

            t = if reached_end { t_end } else { t + hs };
            y = y_new;
            k1 = k7;
            push_sample(&mut samples, &mut stride, accepted_count, t, y);

            if reached_end {
                if store {
                    match samples.last() {
                        Some(&(ts, _)) if ts == t => {}
                        _ => samples.push((t, y)),
                    }
                }
                return Ok(RawSolution {
                    outcome: RawOutcome::ReachedEnd,
                    t_final: t,
                    y_final: y,
                    samples,
                    accepted,
                    rejected,
                });
            }

            let fac11 = err.powf(EXPO1);
            let mut fac = fac11 / facold.powf(BETA);
            fac = (1.0 / FAC_MAX).max((1.0 / FAC_MIN).min(fac / SAFETY));
            let mut h_new = (h / fac).min(opt_capped.h_max);
            if last_rejected {
                h_new = h_new.min(h);
            }
            facold = err.max(1e-4);
            h = h_new;
            last_rejected = false;
        } else {
            rejected += 1;
            last_rejected = true;
            h = if err == f64::MAX {
                h * 0.25
            } else {
                let fac11 = err.powf(EXPO1);
                h / ((1.0 / FAC_MIN).min(fac11 / SAFETY))
            };
        }
    }
}

struct PlanarSystem {
    forcing: Forcing,
}

impl OdeSystem<2> for PlanarSystem {
    fn rhs(&self, t: f64, y: &SVector<f64, 2>) -> SVector<f64, 2> {
        let v = vector_field(t, PlanarPoint::new(y[0], y[1]), &self.forcing);
        SVector::<f64, 2>::new(v.x, v.y)
    }
}

/// State layout: `(x, y, V11, V12, V21, V22)` with `V' = D_z f(t, z) V`.
struct VariationalSystem {
    forcing: Forcing,
}

impl OdeSystem<6> for VariationalSystem {
    fn rhs(&self, t: f64, y: &SVector<f64, 6>) -> SVector<f64, 6> {
        let z = PlanarPoint::new(y[0], y[1]);
        let v = vector_field(t, z, &self.forcing);
        let j = jacobian(t, z, &self.forcing);
        SVector::<f64, 6>::from_column_slice(&[
            v.x,
            v.y,
            j[(0, 0)] * y[2] + j[(0, 1)] * y[4],
            j[(0, 0)] * y[3] + j[(0, 1)] * y[5],
            j[(1, 0)] * y[2] + j[(1, 1)] * y[4],
            j[(1, 0)] * y[3] + j[(1, 1)] * y[5],
        ])
    }
}

fn stepper_options(forcing: &Forcing, cfg: &IntegratorConfig, store_samples: bool) -> StepperOptions {
    StepperOptions {
        rel_tol: cfg.rel_tol,
        abs_tol: cfg.abs_tol,
        h_max: cfg.max_step_fraction_of_period * forcing.period(),
        max_steps: cfg.max_steps,
        event: Some(NormEvent { dim: 2, threshold: cfg.blowup_norm }),
        max_samples: if store_samples { cfg.max_samples } else { 0 },
    }
}

fn raw_outcome_to_outcome(raw: &RawOutcome) -> Outcome {
    match raw {
        RawOutcome::ReachedEnd => Outcome::Completed,
        RawOutcome::Event { t } => Outcome::BlewUp { t_escape: *t },
        RawOutcome::StepLimit => Outcome::StepLimit,
    }
}

/// Numerical flow `φ(t0, ·, z0)` over `[t0, t0 + duration]`.
///
/// `duration` may be negative (backward integration). Ends early with
/// [`Outcome::BlewUp`] at the first time the norm crosses
/// `cfg.blowup_norm`, or with [`Outcome::StepLimit`] if the step budget is
/// exhausted.
pub fn integrate(
    t0: f64,
    z0: PlanarPoint,
    duration: f64,
    forcing: &Forcing,
    cfg: &IntegratorConfig,
) -> Result<TrajectoryResult> {
    cfg.validate()?;
    if !duration.is_finite() {
        return Err(Error::InvalidInput(format!("duration must be finite, got {duration}")));
    }
    let sys = PlanarSystem { forcing: *forcing };
    let opt = stepper_options(forcing, cfg, true);
    let raw = solve(&sys, t0, SVector::<f64, 2>::new(z0.x, z0.y), t0 + duration, &opt)?;
    let mut samples: Vec<(f64, PlanarPoint)> = raw
        .samples
        .iter()
        .map(|&(t, y)| (t, PlanarPoint::new(y[0], y[1])))
        .collect();
    if duration < 0.0 {
        samples.reverse();
    }
    Ok(TrajectoryResult {
        outcome: raw_outcome_to_outcome(&raw.outcome),
        samples,
        final_state: PlanarPoint::new(raw.y_final[0], raw.y_final[1]),
        final_time: raw.t_final,
        monodromy: None,
        monodromy_samples: None,
        accepted_steps: raw.accepted,
        rejected_steps: raw.rejected,
    })
}

/// Like [`integrate`], additionally solving the first variational equation
/// `V' = D_z f(t, z(t)) V`, `V(t0) = Id`. The returned `monodromy` is the
/// derivative of the flow map with respect to `z0`.
pub fn integrate_variational(
    t0: f64,
    z0: PlanarPoint,
    duration: f64,
    forcing: &Forcing,
    cfg: &IntegratorConfig,
) -> Result<TrajectoryResult> {
    cfg.validate()?;
    if !duration.is_finite() {
        return Err(Error::InvalidInput(format!("duration must be finite, got {duration}")));
    }
    let sys = VariationalSystem { forcing: *forcing };
    let opt = stepper_options(forcing, cfg, true);
    let y0 = SVector::<f64, 6>::from_column_slice(&[z0.x, z0.y, 1.0, 0.0, 0.0, 1.0]);
    let raw = solve(&sys, t0, y0, t0 + duration, &opt)?;
    let to_matrix =
        |y: &SVector<f64, 6>| Matrix2::new(y[2], y[3], y[4], y[5]);
    let mut samples: Vec<(f64, PlanarPoint)> = raw
        .samples
        .iter()
        .map(|&(t, y)| (t, PlanarPoint::new(y[0], y[1])))
        .collect();
    let mut matrices: Vec<Matrix2<f64>> = raw.samples.iter().map(|(_, y)| to_matrix(y)).collect();
    if duration < 0.0 {
        samples.reverse();
        matrices.reverse();
    }
    Ok(TrajectoryResult {
        outcome: raw_outcome_to_outcome(&raw.outcome),
        samples,
        final_state: PlanarPoint::new(raw.y_final[0], raw.y_final[1]),
        final_time: raw.t_final,
        monodromy: Some(to_matrix(&raw.y_final)),
        monodromy_samples: Some(matrices),
        accepted_steps: raw.accepted,
        rejected_steps: raw.rejected,
    })
}

/// The time-`h` flow map and its space derivative:
/// `(φ(t0, h, z0), ∂φ/∂z0(t0, h, z0))`.
pub fn time_h_map(
    t0: f64,
    z0: PlanarPoint,
    h: f64,
    forcing: &Forcing,
    cfg: &IntegratorConfig,
) -> Result<(PlanarPoint, Matrix2<f64>)> {
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::InvalidInput(format!("map step h must be positive, got {h}")));
    }
    let result = integrate_variational(t0, z0, h, forcing, cfg)?;
    match result.outcome {
        Outcome::Completed => Ok((result.final_state, result.monodromy.unwrap())),
        Outcome::BlewUp { t_escape } => Err(Error::MapUndefined {
            h,
            reason: format!("trajectory blew up at t = {t_escape}"),
        }),
        Outcome::StepLimit => Err(Error::Integration(
            "step limit exhausted inside a time-h map".into(),
        )),
    }
}

/// Endpoint-only flow evaluation used by sweeps; skips sample storage.
pub(crate) fn flow_endpoint(
    t0: f64,
    z0: PlanarPoint,
    duration: f64,
    forcing: &Forcing,
    cfg: &IntegratorConfig,
) -> Result<(Outcome, PlanarPoint, f64)> {
    let sys = PlanarSystem { forcing: *forcing };
    let opt = stepper_options(forcing, cfg, false);
    let raw = solve(&sys, t0, SVector::<f64, 2>::new(z0.x, z0.y), t0 + duration, &opt)?;
    Ok((
        raw_outcome_to_outcome(&raw.outcome),
        PlanarPoint::new(raw.y_final[0], raw.y_final[1]),
        raw.t_final,
    ))
}
