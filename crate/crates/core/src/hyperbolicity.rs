//! Cone conditions and hyperbolicity certificates for the time-h map family.
//!
//! With the cone fields `Q⁺(z) = {z + (a,b) : |a| ≥ |b|}` and
//! `Q⁻(z) = {z + (a,b) : |a| ≤ |b|}`, a family of maps is hyperbolic on a
//! set `N` when `Q⁺` is forward invariant, horizontal separations expand by
//! `ξ > 1` inside `Q⁺`, and vertical separations contract by `μ < 1` inside
//! `Q⁻`. For the forced planar equation the time-h map deviates from
//! `diag(e^h, e⁻^h)` by at most `B̃(h,R)/|κ|` in each Jacobian entry, which
//! yields `ξ ≥ e^h - 2B̃/|κ|` and `μ ≤ e⁻^h + 2B̃/|κ|`, hence hyperbolicity
//! on the ball `B(0, r0)` whenever `|κ| > 2B̃(h,R)/(1 - e⁻^h)` with
//! `R = √2·r0` and `h = 1/(8 r0²)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::{flow_endpoint, IntegratorConfig, Outcome};
use crate::planar::{apriori_enclosure, c1_deviation, Forcing, PlanarPoint};

/// Absolute tolerance on `||a| - |b||` below which a displacement counts as
/// lying on the cone boundary.
pub const CONE_BOUNDARY_TOL: f64 = 1e-14;

/// Position of `z2` relative to the cone fields at `z1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ConeRelation {
    /// Horizontal displacement dominates: `z2 ∈ int Q⁺(z1)`.
    Positive,
    /// Vertical displacement dominates: `z2 ∈ int Q⁻(z1)`.
    Negative,
    /// `||a| - |b||` below [`CONE_BOUNDARY_TOL`].
    Boundary,
}

/// Classifies the displacement `z2 - z1` against the cone fields.
pub fn cone_relation(z1: PlanarPoint, z2: PlanarPoint) -> ConeRelation {
    let dx = (z2.x - z1.x).abs();
    let dy = (z2.y - z1.y).abs();
    if (dx - dy).abs() <= CONE_BOUNDARY_TOL {
        ConeRelation::Boundary
    } else if dx > dy {
        ConeRelation::Positive
    } else {
        ConeRelation::Negative
    }
}

/// Expansion and contraction constants from entrywise Jacobian bounds:
/// `ξ = inf|∂F_x/∂x| - sup|∂F_x/∂y|`, `μ = sup|∂F_y/∂y| + sup|∂F_y/∂x|`.
///
/// Expects the three sup arguments to be nonnegative; `ξ > 1 > μ` certifies
/// hyperbolicity on a convex set where the bounds hold.
pub fn xi_mu_from_jacobian_bounds(
    inf_fxx: f64,
    sup_fxy: f64,
    sup_fyy: f64,
    sup_fyx: f64,
) -> (f64, f64) {
    (inf_fxx - sup_fxy, sup_fyy + sup_fyx)
}

/// Certified cone-condition constants for the time-h map family on
/// `B(0, r0)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct HyperbolicityCertificate {
    /// Radius of the certified ball.
    pub r0: f64,
    /// Enclosure radius `R = √2·r0`.
    pub r: f64,
    /// Map step `h = 1/(8 r0²)`.
    pub h: f64,
    pub kappa: f64,
    /// `B̃(h, R)`.
    pub b_tilde_cap: f64,
    /// Jacobian perturbation bound `Δ = B̃(h,R)/|κ|`.
    pub delta_bound: f64,
    /// `ξ ≥ e^h - 2Δ`.
    pub xi_lower: f64,
    /// `μ ≤ e⁻^h + 2Δ`.
    pub mu_upper: f64,
    /// The frequency threshold `2B̃(h,R)/(1 - e⁻^h)`.
    pub kappa_threshold: f64,
    /// True exactly when `|κ| > kappa_threshold`.
    pub valid: bool,
}

fn enclosure_geometry(r0: f64) -> Result<(f64, f64)> {
    let enc = apriori_enclosure(r0)?;
    Ok((enc.h, enc.radius))
}

/// Smallest forcing frequency magnitude that certifies hyperbolicity on
/// `B(0, r0)`: `2B̃(h,R)/(1 - e⁻^h)` with `R = √2·r0`, `h = 1/(8 r0²)`.
pub fn kappa_threshold(r0: f64) -> Result<f64> {
    let (h, r) = enclosure_geometry(r0)?;
    // 1 - e^{-h} without cancellation.
    Ok(2.0 * c1_deviation(h, r)? / -(-h).exp_m1())
}

/// Builds the certificate for the ball `B(0, r0)` at frequency `kappa`.
///
/// `valid` is computed as `|κ| > kappa_threshold(r0)` through the same
/// arithmetic as [`kappa_threshold`], so the two agree exactly.
pub fn certify(r0: f64, kappa: f64) -> Result<HyperbolicityCertificate> {
    if !kappa.is_finite() || kappa == 0.0 {
        return Err(Error::InvalidInput(format!(
            "kappa must be finite and nonzero, got {kappa}"
        )));
    }
    let (h, r) = enclosure_geometry(r0)?;
    let b_tilde_cap = c1_deviation(h, r)?;
    let threshold = 2.0 * b_tilde_cap / -(-h).exp_m1();
    let delta_bound = b_tilde_cap / kappa.abs();
    Ok(HyperbolicityCertificate {
        r0,
        r,
        h,
        kappa,
        b_tilde_cap,
        delta_bound,
        xi_lower: h.exp() - 2.0 * delta_bound,
        mu_upper: (-h).exp() + 2.0 * delta_bound,
        kappa_threshold: threshold,
        valid: kappa.abs() > threshold,
    })
}

/// Maps [`kappa_threshold`] over a list of ball radii.
pub fn table1(r0_list: &[f64]) -> Result<Vec<(f64, f64)>> {
    r0_list
        .iter()
        .map(|&r0| kappa_threshold(r0).map(|k| (r0, k)))
        .collect()
}

/// Largest `r0 ≥ 1` whose threshold lies strictly below `|kappa|`, i.e. the
/// radius of the largest certified hyperbolic ball. `None` when even `r0 = 1`
/// is not certified.
pub fn hyperbolic_ball_radius(kappa: f64) -> Result<Option<f64>> {
    if !kappa.is_finite() || kappa == 0.0 {
        return Err(Error::InvalidInput(format!(
            "kappa must be finite and nonzero, got {kappa}"
        )));
    }
    let target = kappa.abs();
    if kappa_threshold(1.0)? >= target {
        return Ok(None);
    }
    let mut lo = 1.0;
    let mut hi = 2.0;
    while kappa_threshold(hi)? < target {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Ok(Some(lo));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if kappa_threshold(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}

/// Sampling plan for [`empirical_hyperbolicity_check`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EmpiricalCheckParams {
    pub n_pairs: usize,
    pub n_offsets: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct ViolationCounts {
    pub invariance: u64,
    pub expansion: u64,
    pub contraction: u64,
}

impl ViolationCounts {
    pub fn total(&self) -> u64 {
        self.invariance + self.expansion + self.contraction
    }
}

/// Outcome of the sampled cone-condition check.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EmpiricalReport {
    pub pairs: usize,
    pub offsets: usize,
    pub violations: ViolationCounts,
    /// Smallest observed `|π_x(Fz1 - Fz2)| / |π_x(z1 - z2)|` over Q⁺ pairs.
    pub min_expansion_ratio: f64,
    /// Largest observed `|π_y(Fz1 - Fz2)| / |π_y(z1 - z2)|` over Q⁻ pairs.
    pub max_contraction_ratio: f64,
    pub integration_failures: u64,
}

fn sample_disk(rng: &mut impl rand::Rng, radius: f64) -> PlanarPoint {
    loop {
        let x = rng.random_range(-1.0..1.0);
        let y = rng.random_range(-1.0..1.0);
        if x * x + y * y <= 1.0 {
            return PlanarPoint::new(radius * x, radius * y);
        }
    }
}

/// Draws a pair in `B(0, radius)` whose displacement lies strictly inside the
/// requested cone (at distance > 1e-12 from the boundary).
fn sample_cone_pair(
    rng: &mut impl rand::Rng,
    radius: f64,
    want_positive: bool,
) -> (PlanarPoint, PlanarPoint) {
    loop {
        let z1 = sample_disk(rng, radius);
        let z2 = sample_disk(rng, radius);
        let dx = (z2.x - z1.x).abs();
        let dy = (z2.y - z1.y).abs();
        if (dx - dy).abs() <= 1e-12 {
            continue;
        }
        if (dx > dy) == want_positive {
            return (z1, z2);
        }
        // Swapping coordinates of both points flips the cone relation and
        // keeps both points in the disk.
        return (PlanarPoint::new(z1.y, z1.x), PlanarPoint::new(z2.y, z2.x));
    }
}

struct PairOutcome {
    violations: ViolationCounts,
    min_expansion: f64,
    max_contraction: f64,
    failures: u64,
}

/// Samples cone pairs in `B(0, r0)` and verifies forward invariance,
/// expansion by `xi_lower` and contraction by `mu_upper` under the maps
/// `F_j = φ(jh, h, ·)` for `j = 0, …, n_offsets-1`.
///
/// Violation counts are expected to be zero when the certificate is valid;
/// for invalid certificates the report is informative only.
pub fn empirical_hyperbolicity_check(
    r0: f64,
    kappa: f64,
    params: &EmpiricalCheckParams,
    cfg: &IntegratorConfig,
) -> Result<EmpiricalReport> {
    use rand::SeedableRng;
    if params.n_pairs == 0 || params.n_offsets == 0 {
        return Err(Error::InvalidInput(
            "need at least one pair and one offset".into(),
        ));
    }
    cfg.validate()?;
    let cert = certify(r0, kappa)?;
    let forcing = Forcing::new(kappa)?;

    let outcomes: Vec<PairOutcome> = (0..params.n_pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(i as u64 + 1);
            let want_positive = i % 2 == 0;
            let (z1, z2) = sample_cone_pair(&mut rng, cert.r0, want_positive);
            let mut out = PairOutcome {
                violations: ViolationCounts::default(),
                min_expansion: f64::INFINITY,
                max_contraction: f64::NEG_INFINITY,
                failures: 0,
            };
            for j in 0..params.n_offsets {
                let t0 = j as f64 * cert.h;
                let map = |z: PlanarPoint| -> Result<PlanarPoint> {
                    match flow_endpoint(t0, z, cert.h, &forcing, cfg)? {
                        (Outcome::Completed, w, _) => Ok(w),
                        (other, _, _) => Err(Error::Integration(format!(
                            "time-h map did not complete: {other:?}"
                        ))),
                    }
                };
                let (w1, w2) = match (map(z1), map(z2)) {
                    (Ok(a), Ok(b)) => (a, b),
                    _ => {
                        out.failures += 1;
                        continue;
                    }
                };
                if want_positive {
                    if cone_relation(w1, w2) == ConeRelation::Negative {
                        out.violations.invariance += 1;
                    }
                    let before = (z1.x - z2.x).abs();
                    let after = (w1.x - w2.x).abs();
                    if after < cert.xi_lower * before {
                        out.violations.expansion += 1;
                    }
                    out.min_expansion = out.min_expansion.min(after / before);
                } else {
                    let before = (z1.y - z2.y).abs();
                    let after = (w1.y - w2.y).abs();
                    if after > cert.mu_upper * before {
                        out.violations.contraction += 1;
                    }
                    out.max_contraction = out.max_contraction.max(after / before);
                }
            }
            out
        })
        .collect();

    let mut report = EmpiricalReport {
        pairs: params.n_pairs,
        offsets: params.n_offsets,
        violations: ViolationCounts::default(),
        min_expansion_ratio: f64::INFINITY,
        max_contraction_ratio: f64::NEG_INFINITY,
        integration_failures: 0,
    };
    for out in outcomes {
        report.violations.invariance += out.violations.invariance;
        report.violations.expansion += out.violations.expansion;
        report.violations.contraction += out.violations.contraction;
        report.min_expansion_ratio = report.min_expansion_ratio.min(out.min_expansion);
        report.max_contraction_ratio = report.max_contraction_ratio.max(out.max_contraction);
        report.integration_failures += out.failures;
    }
    Ok(report)
}

/// How an orbit of the time-h map family behaves relative to the cones at
/// the origin and the ball `B(0, r0)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum OrbitClass {
    /// The n-th iterate left the ball while in `Q⁺(0)`; `escaped` marks a
    /// finite-time blow-up inside the final step.
    ExitsInPositiveCone { steps: usize, escaped: bool },
    /// An orbit started in `Q⁻(0)` entered `Q⁺(0)` at step n.
    CrossesToPositiveCone { steps: usize },
    /// Stayed in `Q⁻(0) ∩ B(0, r0)` with `|z|` below 1e-12.
    ConvergesToZero { steps: usize },
    /// None of the above within the iteration budget.
    Undecided,
}

/// Convergence threshold for [`OrbitClass::ConvergesToZero`].
pub const CONVERGENCE_NORM: f64 = 1e-12;

/// Iterates `z ↦ φ(t0 + n·h, h, z)` and classifies the orbit per the
/// hyperbolic trichotomy.
pub fn classify_orbit(
    z0: PlanarPoint,
    t0: f64,
    r0: f64,
    kappa: f64,
    max_iters: usize,
    cfg: &IntegratorConfig,
) -> Result<OrbitClass> {
    let (h, _) = enclosure_geometry(r0)?;
    let norm0 = z0.norm();
    if !norm0.is_finite() || norm0 <= 0.0 || norm0 > r0 {
        return Err(Error::InvalidInput(format!(
            "initial point must satisfy 0 < |z0| <= r0, got |z0| = {norm0}, r0 = {r0}"
        )));
    }
    cfg.validate()?;
    let forcing = Forcing::new(kappa)?;
    let in_positive = |z: PlanarPoint| z.x.abs() >= z.y.abs();

    let started_negative = !in_positive(z0);
    let mut z = z0;
    for n in 1..=max_iters {
        let t = t0 + (n - 1) as f64 * h;
        let (outcome, w, _) = flow_endpoint(t, z, h, &forcing, cfg)?;
        match outcome {
            Outcome::Completed => {}
            Outcome::BlewUp { .. } => {
                return Ok(OrbitClass::ExitsInPositiveCone { steps: n, escaped: true })
            }
            Outcome::StepLimit => {
                return Err(Error::Integration("step limit during orbit classification".into()))
            }
        }
        z = w;
        let positive = in_positive(z);
        if started_negative && positive {
            return Ok(OrbitClass::CrossesToPositiveCone { steps: n });
        }
        if z.norm() > r0 {
            if positive {
                return Ok(OrbitClass::ExitsInPositiveCone { steps: n, escaped: false });
            }
            // Leaving the ball inside the negative cone falls outside the
            // certified trichotomy.
            return Ok(OrbitClass::Undecided);
        }
        if !positive && z.norm() < CONVERGENCE_NORM {
            return Ok(OrbitClass::ConvergesToZero { steps: n });
        }
    }
    Ok(OrbitClass::Undecided)
}

/// Least-squares slope of `log kappa_threshold(r0)` against `log r0` over a
/// geometric grid with `n_points` points spanning `[r0_min, r0_max]`.
pub fn scaling_exponent(r0_min: f64, r0_max: f64, n_points: usize) -> Result<f64> {
    if !r0_min.is_finite() || !r0_max.is_finite() || r0_min < 1.0 || r0_max <= r0_min {
        return Err(Error::InvalidInput(format!(
            "need 1 <= r0_min < r0_max, got [{r0_min}, {r0_max}]"
        )));
    }
    if n_points < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least two grid points, got {n_points}"
        )));
    }
    let ratio = r0_max / r0_min;
    let mut xs = Vec::with_capacity(n_points);
    let mut ys = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let f = i as f64 / (n_points - 1) as f64;
        let r0 = r0_min * ratio.powf(f);
        xs.push(r0.ln());
        ys.push(kappa_threshold(r0)?.ln());
    }
    let x_mean = xs.iter().sum::<f64>() / n_points as f64;
    let y_mean = ys.iter().sum::<f64>() / n_points as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        num += (x - x_mean) * (y - y_mean);
        den += (x - x_mean) * (x - x_mean);
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cone_relation_examples() {
        let o = PlanarPoint::ORIGIN;
        assert_eq!(cone_relation(o, PlanarPoint::new(1.0, 0.0)), ConeRelation::Positive);
        assert_eq!(cone_relation(o, PlanarPoint::new(0.0, 1.0)), ConeRelation::Negative);
        assert_eq!(
            cone_relation(PlanarPoint::new(1.0, 1.0), PlanarPoint::new(2.0, 2.0)),
            ConeRelation::Boundary
        );
    }

    #[test]
    fn xi_mu_formulas() {
        let h = 0.125_f64;
        let (xi, mu) = xi_mu_from_jacobian_bounds(h.exp(), 0.0, (-h).exp(), 0.0);
        assert_eq!(xi, h.exp());
        assert_eq!(mu, (-h).exp());

        let d = 0.01;
        let (xi, mu) = xi_mu_from_jacobian_bounds(h.exp() - d, d, (-h).exp() + 0.0, d);
        assert_relative_eq!(xi, h.exp() - 2.0 * d, max_relative = 1e-15);
        assert_relative_eq!(mu, (-h).exp() + d, max_relative = 1e-15);

        let (xi, mu) = xi_mu_from_jacobian_bounds(0.5, 0.6, 0.1, 0.1);
        assert_relative_eq!(xi, -0.1, max_relative = 1e-12);
        assert_relative_eq!(mu, 0.2, max_relative = 1e-15);
        assert!(xi <= 1.0, "not hyperbolic");
    }

    #[test]
    fn threshold_frozen_values() {
        // Computed independently at high precision from the closed form.
        assert_relative_eq!(kappa_threshold(1.0).unwrap(), 2_973.072_024_273_055, max_relative = 1e-13);
        assert_relative_eq!(kappa_threshold(10.0).unwrap(), 2.2347252354157448e7, max_relative = 1e-13);
        assert_relative_eq!(kappa_threshold(100.0).unwrap(), 2.2282226847697254e11, max_relative = 1e-13);
        // Published reference values: within 1% for r0 = 10 and 100.
        assert!((kappa_threshold(10.0).unwrap() - 2.24e7).abs() / 2.24e7 < 0.01);
        assert!((kappa_threshold(100.0).unwrap() - 2.23e11).abs() / 2.23e11 < 0.01);
        // r0 = 1 disagrees with the published 3655; the formula value stands.
        assert!((kappa_threshold(1.0).unwrap() - 3655.0).abs() / 3655.0 > 0.15);
        assert!(kappa_threshold(0.5).is_err());
    }

    #[test]
    fn certificate_matches_threshold_exactly() {
        for &r0 in &[1.0, 2.0, 10.0, 31.0] {
            let thr = kappa_threshold(r0).unwrap();
            for &kappa in &[0.5 * thr, 0.999_999 * thr, thr, 1.000_001 * thr, 10.0 * thr] {
                let cert = certify(r0, kappa).unwrap();
                assert_eq!(cert.valid, kappa.abs() > thr);
                assert!(cert.xi_lower < cert.h.exp());
                assert!(cert.mu_upper > (-cert.h).exp());
            }
            // At threshold exactly: strict inequality fails.
            assert!(!certify(r0, thr).unwrap().valid);
            let cert = certify(r0, -2.0 * thr).unwrap();
            assert!(cert.valid, "sign of kappa must not matter");
        }
    }

    #[test]
    fn certificate_limits_at_large_kappa() {
        let cert = certify(1.0, 1e16).unwrap();
        assert!((cert.xi_lower - cert.h.exp()).abs() < 1e-6);
        assert!((cert.mu_upper - (-cert.h).exp()).abs() < 1e-6);
        assert!(cert.valid);
    }

    #[test]
    fn threshold_monotone_in_radius() {
        let mut prev = kappa_threshold(1.0).unwrap();
        let mut r0 = 1.0;
        for _ in 0..40 {
            r0 *= 1.3;
            let next = kappa_threshold(r0).unwrap();
            assert!(next > prev, "threshold not increasing at r0 = {r0}");
            prev = next;
        }
    }

    #[test]
    fn table1_maps_thresholds() {
        let rows = table1(&[1.0, 10.0, 100.0]).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].0, 1.0);
        assert_relative_eq!(rows[1].1, kappa_threshold(10.0).unwrap());
        assert!(table1(&[0.2]).is_err());
    }

    #[test]
    fn ball_radius_inverts_threshold() {
        assert_eq!(hyperbolic_ball_radius(100.0).unwrap(), None);
        let r0 = hyperbolic_ball_radius(1e6).unwrap().unwrap();
        assert!(kappa_threshold(r0).unwrap() < 1e6);
        assert!(kappa_threshold(r0 * 1.0001).unwrap() >= 1e6 * (1.0 - 1e-6));
        // Round trip: threshold of the returned radius sits just below kappa.
        assert_relative_eq!(kappa_threshold(r0).unwrap(), 1e6, max_relative = 1e-9);
    }

    #[test]
    fn scaling_exponent_near_four() {
        let slope = scaling_exponent(10.0, 1000.0, 20).unwrap();
        assert!((3.9..=4.1).contains(&slope), "slope {slope}");
        // Endpoint-only variant over one decade.
        let slope = scaling_exponent(10.0, 100.0, 2).unwrap();
        assert_relative_eq!(slope, 3.99873445807, max_relative = 1e-9);
        assert!(scaling_exponent(10.0, 10.0, 2).is_err());
        assert!(scaling_exponent(0.5, 10.0, 5).is_err());
        assert!(scaling_exponent(10.0, 100.0, 1).is_err());
    }

    #[test]
    fn empirical_check_small_sample_valid_certificate() {
        let r0 = 1.0;
        let kappa = 1.1 * kappa_threshold(r0).unwrap();
        let params = EmpiricalCheckParams { n_pairs: 60, n_offsets: 3, seed: 42 };
        let report =
            empirical_hyperbolicity_check(r0, kappa, &params, &IntegratorConfig::default())
                .unwrap();
        assert_eq!(report.violations.total(), 0, "{report:?}");
        assert_eq!(report.integration_failures, 0);
        let cert = certify(r0, kappa).unwrap();
        assert!(report.min_expansion_ratio >= cert.xi_lower);
        assert!(report.max_contraction_ratio <= cert.mu_upper);
    }

    #[test]
    fn empirical_check_is_deterministic() {
        let r0 = 1.0;
        let kappa = 1.2 * kappa_threshold(r0).unwrap();
        let params = EmpiricalCheckParams { n_pairs: 24, n_offsets: 2, seed: 7 };
        let cfg = IntegratorConfig::default();
        let a = empirical_hyperbolicity_check(r0, kappa, &params, &cfg).unwrap();
        let b = empirical_hyperbolicity_check(r0, kappa, &params, &cfg).unwrap();
        assert_eq!(a.min_expansion_ratio.to_bits(), b.min_expansion_ratio.to_bits());
        assert_eq!(a.max_contraction_ratio.to_bits(), b.max_contraction_ratio.to_bits());
    }

    #[test]
    fn classify_orbit_expanding_direction_exits() {
        let r0 = 1.0;
        let kappa = 1.1 * kappa_threshold(r0).unwrap();
        let cfg = IntegratorConfig::default();
        let class = classify_orbit(PlanarPoint::new(1e-6, 0.0), 0.0, r0, kappa, 10_000, &cfg)
            .unwrap();
        match class {
            OrbitClass::ExitsInPositiveCone { steps, .. } => {
                assert!(steps > 10, "needs many expansion steps from 1e-6");
            }
            other => panic!("expected exit in positive cone, got {other:?}"),
        }
    }

    #[test]
    fn classify_orbit_contracting_direction() {
        let r0 = 1.0;
        let kappa = 1.1 * kappa_threshold(r0).unwrap();
        let cfg = IntegratorConfig::default();
        let class = classify_orbit(PlanarPoint::new(0.0, 1e-3), 0.0, r0, kappa, 10_000, &cfg)
            .unwrap();
        assert!(
            matches!(
                class,
                OrbitClass::ConvergesToZero { .. } | OrbitClass::CrossesToPositiveCone { .. }
            ),
            "got {class:?}"
        );
    }

    #[test]
    fn classify_orbit_rejects_bad_start() {
        let cfg = IntegratorConfig::default();
        assert!(classify_orbit(PlanarPoint::ORIGIN, 0.0, 1.0, 5000.0, 10, &cfg).is_err());
        assert!(classify_orbit(PlanarPoint::new(2.0, 0.0), 0.0, 1.0, 5000.0, 10, &cfg).is_err());
    }
}
