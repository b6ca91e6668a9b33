//! Cross-module consistency: closed-form bounds vs the generic averaging
//! machinery, symmetries of the flow, and cone geometry along trajectories.

use approx::assert_relative_eq;
use oscavg::averaging::{c0_bound, c1_bound};
use oscavg::hyperbolicity::{certify, kappa_threshold};
use oscavg::integrator::{integrate, IntegratorConfig};
use oscavg::planar::{
    c0_deviation, c0_error_closed, c1_deviation, c1_error_closed, decomposition_constants,
    vector_field, Forcing, PlanarPoint,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{SQRT_2, TAU};

#[test]
fn closed_forms_equal_generic_bounds_divided_by_kappa() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..200 {
        let r = rng.random_range(0.3..80.0);
        let t = rng.random_range(0.0..=1.0) * 0.25 / (r * r);
        let kappa = rng.random_range(1.0..1e8);
        let bundle = decomposition_constants(r).unwrap();
        assert_relative_eq!(
            c0_error_closed(t, r, kappa).unwrap(),
            c0_bound(&bundle, t).unwrap() / kappa,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            c1_error_closed(t, r, kappa).unwrap(),
            c1_bound(&bundle, t).unwrap() / kappa,
            max_relative = 1e-12
        );
    }
}

#[test]
fn certificate_reuses_c1_deviation_at_enclosure_geometry() {
    for &r0 in &[1.0, 3.0, 10.0] {
        let cert = certify(r0, 1e9).unwrap();
        let b = c1_deviation(cert.h, cert.r).unwrap();
        assert_eq!(cert.b_tilde_cap, b);
        assert_relative_eq!(
            cert.kappa_threshold,
            kappa_threshold(r0).unwrap(),
            max_relative = 0.0
        );
    }
}

// The flow is odd and 2π/κ-periodic in the initial time, so on the lattice
// t0 = j·2π/κ the rotation by -κ·t0/2 = -πj (i.e. ±identity) conjugates
// φ(t0, ·, ·) to φ(0, ·, ·) exactly. For generic t0 only the cubic term is
// rotation-covariant; the linear term z̄ picks up e^{-iκt0}, so the full
// equation admits no such conjugacy off the lattice (see the companion test
// below for the cubic part).
#[test]
fn initial_time_covariance_on_the_period_lattice() {
    let cfg = IntegratorConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    for _ in 0..100 {
        let kappa = rng.random_range(3.0..60.0);
        let forcing = Forcing::new(kappa).unwrap();
        let j = rng.random_range(1..6) as f64;
        let t0 = j * TAU / kappa;
        let z0 = PlanarPoint::new(rng.random_range(-0.7..0.7), rng.random_range(-0.7..0.7));
        let t = rng.random_range(0.01..0.05);

        let lhs = integrate(t0, z0, t, &forcing, &cfg).unwrap().final_state;
        let theta = -kappa * t0 / 2.0;
        let rhs = integrate(0.0, z0.rotated(theta), t, &forcing, &cfg)
            .unwrap()
            .final_state
            .rotated(-theta);
        assert!(
            (lhs - rhs).norm() < 1e-8,
            "lattice covariance failed: kappa = {kappa}, j = {j}, diff = {}",
            (lhs - rhs).norm()
        );
    }
}

#[test]
fn cubic_part_is_rotation_covariant_for_any_initial_time() {
    use nalgebra::SVector;
    use oscavg::integrator::OdeSystem;

    // The oscillatory part alone: z' = |z|² z̄ e^{iκt}.
    struct CubicPart {
        kappa: f64,
    }
    impl OdeSystem<2> for CubicPart {
        fn rhs(&self, t: f64, y: &SVector<f64, 2>) -> SVector<f64, 2> {
            let (x, yy) = (y[0], y[1]);
            let r2 = x * x + yy * yy;
            let (s, c) = (self.kappa * t).sin_cos();
            SVector::<f64, 2>::new(r2 * (x * c + yy * s), r2 * (x * s - yy * c))
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..100 {
        let kappa = rng.random_range(3.0..60.0);
        let t0 = rng.random_range(0.0..3.0);
        let z0 = PlanarPoint::new(rng.random_range(-0.7..0.7), rng.random_range(-0.7..0.7));
        let t = rng.random_range(0.01..0.05);
        let sys = CubicPart { kappa };

        let run = |start: f64, z: PlanarPoint| -> PlanarPoint {
            let opt = oscavg::integrator::StepperOptions {
                rel_tol: 1e-12,
                abs_tol: 1e-14,
                h_max: 0.05 * TAU / kappa,
                max_steps: 1_000_000,
                event: None,
                max_samples: 0,
            };
            let sol =
                oscavg::integrator::solve(&sys, start, SVector::<f64, 2>::new(z.x, z.y), start + t, &opt)
                    .unwrap();
            PlanarPoint::new(sol.y_final[0], sol.y_final[1])
        };
        let lhs = run(t0, z0);
        let theta = -kappa * t0 / 2.0;
        let rhs = run(0.0, z0.rotated(theta)).rotated(-theta);
        assert!(
            (lhs - rhs).norm() < 1e-10,
            "cubic covariance failed: kappa = {kappa}, t0 = {t0}, diff = {}",
            (lhs - rhs).norm()
        );
    }
}

#[test]
fn positive_cone_invariant_while_cosine_positive() {
    // Trajectories started with |x| >= |y| keep that order while cos(κt) > 0.
    let cfg = IntegratorConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    for _ in 0..100 {
        let kappa = rng.random_range(5.0..40.0);
        let forcing = Forcing::new(kappa).unwrap();
        let x = rng.random_range(0.05..0.9_f64);
        let y = rng.random_range(-1.0..1.0) * x;
        let z0 = PlanarPoint::new(x * if rng.random_bool(0.5) { 1.0 } else { -1.0 }, y);
        let horizon = 0.95 * std::f64::consts::FRAC_PI_2 / kappa;
        let r = integrate(0.0, z0, horizon, &forcing, &cfg).unwrap();
        for &(t, z) in &r.samples {
            assert!(
                z.x.abs() >= z.y.abs() - 1e-8 * z.norm().max(1.0),
                "cone order lost at t = {t}: {z:?} from {z0:?}"
            );
        }
    }
}

#[test]
fn cone_form_derivative_identity_along_trajectories() {
    // d(x²-y²)/dt = 2|z|²(1 + cos(κt)|z|²) >= cos(κt)|z|⁴ along solutions;
    // finite differences of Q against the analytic value.
    let cfg = IntegratorConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let delta = 1e-5;
    for _ in 0..100 {
        let kappa = rng.random_range(5.0..40.0);
        let forcing = Forcing::new(kappa).unwrap();
        let z0 = PlanarPoint::new(rng.random_range(-0.9..0.9), rng.random_range(-0.9..0.9));
        let t_mid = rng.random_range(0.02..0.1);
        let zm = integrate(0.0, z0, t_mid, &forcing, &cfg).unwrap().final_state;
        let zp = integrate(t_mid, zm, delta, &forcing, &cfg).unwrap().final_state;
        let zmm = integrate(t_mid, zm, -delta, &forcing, &cfg).unwrap().final_state;
        let q = |z: PlanarPoint| z.x * z.x - z.y * z.y;
        let fd = (q(zp) - q(zmm)) / (2.0 * delta);
        let r2 = zm.norm_sq();
        let analytic = 2.0 * r2 * (1.0 + (kappa * t_mid).cos() * r2);
        assert_relative_eq!(fd, analytic, max_relative = 1e-6, epsilon = 1e-9);
        assert!(analytic >= (kappa * t_mid).cos() * r2 * r2 - 1e-12);
        // The identity is exactly 2(x·x' - y·y').
        let v = vector_field(t_mid, zm, &forcing);
        assert_relative_eq!(
            analytic,
            2.0 * (zm.x * v.x - zm.y * v.y),
            max_relative = 1e-12
        );
    }
}

#[test]
fn c0_deviation_window_contains_enclosure_step() {
    for &r0 in &[1.0, 2.0, 7.0, 100.0] {
        let enc = oscavg::planar::apriori_enclosure(r0).unwrap();
        assert!(c0_deviation(enc.h, enc.radius).is_ok());
        assert!(c1_deviation(enc.h, enc.radius).is_ok());
    }
}

#[test]
fn escape_threshold_circle_lies_in_certified_escape_region() {
    // Points on the 4.706κ circle exceed the optimal threshold coefficient.
    let coeff = 1.0
        / (SQRT_2
            * (std::f64::consts::FRAC_PI_4 - oscavg::orbits::optimal_escape_angle())
            * oscavg::orbits::optimal_escape_angle().sin());
    assert!(coeff < 4.706, "threshold coefficient {coeff} not below 4.706");
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for _ in 0..50 {
        let kappa = rng.random_range(10.0..200.0);
        let p = oscavg::orbits::escape_threshold(kappa, oscavg::orbits::optimal_escape_angle())
            .unwrap();
        assert!(p.norm_sq_threshold <= 4.706 * kappa);
        let ang = rng.random_range(0.0..TAU);
        let z = PlanarPoint::new(
            (4.706 * kappa).sqrt() * ang.cos(),
            (4.706 * kappa).sqrt() * ang.sin(),
        );
        assert!(z.norm_sq() >= p.norm_sq_threshold);
    }
}
