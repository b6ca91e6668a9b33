//! The forced planar equation and its explicit constants.
//!
//! The system under study is the nonautonomous planar ODE
//!
//! ```text
//! x' =  x (1 + cos(κt) |z|²) + sin(κt) |z|² y
//! y' = -y (1 + cos(κt) |z|²) + sin(κt) |z|² x
//! ```
//!
//! identified with `z' = z̄ (1 + |z|² exp(iκt))` for `z = x + iy`. Dropping the
//! zero-mean oscillatory terms leaves `z' = z̄`, whose flow is
//! `(eᵗ x₀, e⁻ᵗ y₀)`. This module provides the vector field, its Jacobian,
//! the averaged flow, the decomposition into drift plus oscillatory terms
//! with explicit sup-norm constants on balls, the short-time a priori
//! enclosure, and the closed-form C⁰/C¹ averaging error bounds.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::averaging::{ConstantsBundle, OscTermConstants};
use crate::error::{Error, Result};

/// `M`: the exact spectral norm of the oscillatory-term Jacobians is `M·r²`.
pub const DV_NORM_FACTOR: f64 = 3.0;

/// `N = 4 + 2√2`: the bilinear norms of the oscillatory-term second
/// derivatives are bounded by `N·r`.
pub const D2V_NORM_FACTOR: f64 = 4.0 + 2.0 * std::f64::consts::SQRT_2;

/// A point of the plane, identified with the complex number `x + iy`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanarPoint {
    pub x: f64,
    pub y: f64,
}

impl PlanarPoint {
    pub const ORIGIN: PlanarPoint = PlanarPoint { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        PlanarPoint { x, y }
    }

    /// Euclidean norm `r = |z|`.
    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(&self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Rotation by `theta` about the origin.
    pub fn rotated(&self, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        PlanarPoint::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl std::ops::Sub for PlanarPoint {
    type Output = PlanarPoint;
    fn sub(self, rhs: PlanarPoint) -> PlanarPoint {
        PlanarPoint::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl std::ops::Neg for PlanarPoint {
    type Output = PlanarPoint;
    fn neg(self) -> PlanarPoint {
        PlanarPoint::new(-self.x, -self.y)
    }
}

impl From<nalgebra::Vector2<f64>> for PlanarPoint {
    fn from(v: nalgebra::Vector2<f64>) -> Self {
        PlanarPoint::new(v.x, v.y)
    }
}

impl From<PlanarPoint> for nalgebra::Vector2<f64> {
    fn from(p: PlanarPoint) -> Self {
        nalgebra::Vector2::new(p.x, p.y)
    }
}

/// The forcing frequency κ of the oscillatory terms. Must be nonzero: the
/// averaging error bounds scale like `1/|κ|` and degenerate as κ → 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Forcing {
    kappa: f64,
}

impl Forcing {
    pub fn new(kappa: f64) -> Result<Self> {
        if !kappa.is_finite() || kappa == 0.0 {
            return Err(Error::InvalidInput(format!(
                "forcing frequency kappa must be finite and nonzero, got {kappa}"
            )));
        }
        Ok(Forcing { kappa })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Period of the forcing, `2π/|κ|`.
    pub fn period(&self) -> f64 {
        std::f64::consts::TAU / self.kappa.abs()
    }
}

/// A priori enclosure for one short step: solutions started in `B̄(0, r0)`
/// exist on `[0, h]` with `h = 1/(8 r0²)` and stay in `B̄(0, √2·r0)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Enclosure {
    /// Radius of the ball of initial conditions, `R₀ ≥ 1`.
    pub r0: f64,
    /// Step length `h = 1/(8 r0²)`.
    pub h: f64,
    /// Enclosure radius `R = √2·r0`.
    pub radius: f64,
}

/// Builds the enclosure for initial radius `r0 ≥ 1`.
///
/// The restriction comes from the growth estimate `|z|(1 + |z|²) ≤ 2|z|³`,
/// which requires `|z| ≥ 1`.
pub fn apriori_enclosure(r0: f64) -> Result<Enclosure> {
    if !r0.is_finite() || r0 < 1.0 {
        return Err(Error::InvalidInput(format!(
            "enclosure radius r0 must be >= 1 (the bound |z|(1+|z|^2) <= 2|z|^3 \
             needs |z| >= 1), got {r0}"
        )));
    }
    Ok(Enclosure {
        r0,
        h: 0.125 / (r0 * r0),
        radius: std::f64::consts::SQRT_2 * r0,
    })
}

/// Right-hand side of the equation at time `t`.
pub fn vector_field(t: f64, z: PlanarPoint, forcing: &Forcing) -> PlanarPoint {
    let r2 = z.norm_sq();
    let (s, c) = (forcing.kappa * t).sin_cos();
    PlanarPoint::new(
        z.x * (1.0 + c * r2) + s * r2 * z.y,
        -z.y * (1.0 + c * r2) + s * r2 * z.x,
    )
}

/// Jacobian of the first oscillatory term `v₁(z) = |z|² (x, -y)ᵗ`.
pub fn dv1(z: PlanarPoint) -> Matrix2<f64> {
    let (x, y) = (z.x, z.y);
    Matrix2::new(
        3.0 * x * x + y * y,
        2.0 * x * y,
        -2.0 * x * y,
        -x * x - 3.0 * y * y,
    )
}

/// Jacobian of the second oscillatory term `v₂(z) = |z|² (y, x)ᵗ`.
pub fn dv2(z: PlanarPoint) -> Matrix2<f64> {
    let (x, y) = (z.x, z.y);
    Matrix2::new(
        2.0 * x * y,
        x * x + 3.0 * y * y,
        3.0 * x * x + y * y,
        2.0 * x * y,
    )
}

/// Space Jacobian of [`vector_field`]: `diag(1,-1) + cos(κt)·Dv₁ + sin(κt)·Dv₂`.
pub fn jacobian(t: f64, z: PlanarPoint, forcing: &Forcing) -> Matrix2<f64> {
    let (s, c) = (forcing.kappa * t).sin_cos();
    Matrix2::new(1.0, 0.0, 0.0, -1.0) + dv1(z) * c + dv2(z) * s
}

/// Exact flow of the averaged equation `z' = z̄`: `(eᵗ x₀, e⁻ᵗ y₀)`.
pub fn averaged_flow(t: f64, z0: PlanarPoint) -> PlanarPoint {
    PlanarPoint::new(t.exp() * z0.x, (-t).exp() * z0.y)
}

/// Space derivative of the averaged flow, `diag(eᵗ, e⁻ᵗ)`.
pub fn averaged_jacobian(t: f64) -> Matrix2<f64> {
    Matrix2::new(t.exp(), 0.0, 0.0, (-t).exp())
}

/// Exact spectral norm of both oscillatory-term Jacobians: `3r²`.
pub fn dv_norm_exact(z: PlanarPoint) -> f64 {
    DV_NORM_FACTOR * z.norm_sq()
}

/// Bound `(4 + 2√2)·r` on the bilinear operator norm of the second
/// derivatives of the oscillatory terms. The component Hessians have norms
/// `4|x| + 2r` and `4|y| + 2r`.
pub fn d2v_norm_bound(z: PlanarPoint) -> f64 {
    D2V_NORM_FACTOR * z.norm()
}

/// Sup-norm constants of the drift/oscillation decomposition on the closed
/// ball of radius `r`.
///
/// The returned bundle carries `omega = 1` (and `omega_k = 1`) as a
/// placeholder; the actual forcing frequency is supplied by the caller, e.g.
/// via [`ConstantsBundle::with_frequency`], since the constants themselves do
/// not depend on it.
pub fn decomposition_constants(r: f64) -> Result<ConstantsBundle> {
    if !r.is_finite() || r <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "enclosure radius must be positive, got {r}"
        )));
    }
    let r3 = r * r * r;
    let term = OscTermConstants {
        c_g: 1.0,
        c_big_g: 1.0,
        c_v: r3,
        c_dzf_v: r3,
        c_dv_dt: 0.0,
        c_dv_dz: DV_NORM_FACTOR * r * r,
        c_d2v_dtdz: 0.0,
        c_d2v_dz2: D2V_NORM_FACTOR * r,
        omega_k: 1.0,
    };
    let bundle = ConstantsBundle {
        l: 1.0,
        c_f: r,
        c_dzf: 1.0,
        c_dzzf: 0.0,
        omega: 1.0,
        terms: vec![term.clone(), term],
    };
    bundle.validate()?;
    Ok(bundle)
}

fn check_time_window(t: f64, r: f64) -> Result<()> {
    if !t.is_finite() || !r.is_finite() || r <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "need finite t and positive radius, got t = {t}, r = {r}"
        )));
    }
    let t_max = 0.25 / (r * r);
    // Tiny relative slack so h = 1/(8 r0^2) passes with R = sqrt(2) r0.
    if t < 0.0 || t > t_max * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "t = {t} outside [0, 1/(4R^2)] = [0, {t_max}] where the averaging \
             bounds hold for radius R = {r}"
        )));
    }
    Ok(())
}

/// Closed-form C⁰ deviation `b̃(t) = 2(R³((2+M)eᵗ - M) + 2MR⁵(eᵗ - 1))`.
///
/// `b̃(t)/|κ|` bounds the distance between the true flow and the averaged
/// flow for `t ∈ [0, 1/(4R²)]` and initial conditions with `|z₀| ≤ R/√2`.
pub fn c0_deviation(t: f64, r: f64) -> Result<f64> {
    check_time_window(t, r)?;
    let m = DV_NORM_FACTOR;
    let r3 = r * r * r;
    let r5 = r3 * r * r;
    let et = t.exp();
    let em1 = t.exp_m1();
    // (2+M)e^t - M = 2e^t + M(e^t - 1), kept in expm1 form for small t.
    Ok(2.0 * (r3 * (2.0 * et + m * em1) + 2.0 * m * r5 * em1))
}

/// Closed-form C¹ deviation
/// `B̃(t,R) = 2MR²eᵗ(1 + e^{2MR²t}) + eᵗ(e^{2MR²t} - 1)(2 + N/M + 2R²(M + N/M))`.
///
/// `B̃(t,R)/|κ|` bounds the distance between the space derivative of the flow
/// and `diag(eᵗ, e⁻ᵗ)` on the same domain as [`c0_deviation`].
pub fn c1_deviation(t: f64, r: f64) -> Result<f64> {
    check_time_window(t, r)?;
    let m = DV_NORM_FACTOR;
    let n = D2V_NORM_FACTOR;
    let a = 2.0 * m * r * r;
    let et = t.exp();
    let g = (a * t).exp_m1();
    let coeff = 2.0 + n / m + 2.0 * r * r * (m + n / m);
    Ok(a * et * (2.0 + g) + et * g * coeff)
}

fn check_kappa(kappa: f64) -> Result<f64> {
    if !kappa.is_finite() || kappa == 0.0 {
        return Err(Error::InvalidInput(format!(
            "kappa must be finite and nonzero, got {kappa}"
        )));
    }
    Ok(kappa.abs())
}

/// C⁰ averaging error bound `b̃(t)/|κ|`.
pub fn c0_error_closed(t: f64, r: f64, kappa: f64) -> Result<f64> {
    let omega = check_kappa(kappa)?;
    Ok(c0_deviation(t, r)? / omega)
}

/// C¹ averaging error bound `B̃(t,R)/|κ|`.
pub fn c1_error_closed(t: f64, r: f64, kappa: f64) -> Result<f64> {
    let omega = check_kappa(kappa)?;
    Ok(c1_deviation(t, r)? / omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, SQRT_2};

    #[test]
    fn origin_is_equilibrium() {
        let f = Forcing::new(7.3).unwrap();
        for &t in &[0.0, 0.4, 11.0, -3.2] {
            let v = vector_field(t, PlanarPoint::ORIGIN, &f);
            assert_eq!((v.x, v.y), (0.0, 0.0));
            assert_eq!(jacobian(t, PlanarPoint::ORIGIN, &f), Matrix2::new(1.0, 0.0, 0.0, -1.0));
        }
    }

    #[test]
    fn vector_field_closed_form_points() {
        // kappa*t = 0, z = (1,0): c=1, s=0, |z|^2=1 -> (2, 0).
        let f = Forcing::new(1.0).unwrap();
        let v = vector_field(0.0, PlanarPoint::new(1.0, 0.0), &f);
        assert_relative_eq!(v.x, 2.0, max_relative = 1e-15);
        assert_relative_eq!(v.y, 0.0);

        // kappa*t = pi/2, z = (0,1): c=0, s=1 -> (1, -1).
        let v = vector_field(FRAC_PI_2, PlanarPoint::new(0.0, 1.0), &f);
        assert_relative_eq!(v.x, 1.0, epsilon = 1e-15);
        assert_relative_eq!(v.y, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn jacobian_closed_form_points() {
        let f = Forcing::new(1.0).unwrap();
        let j = jacobian(0.0, PlanarPoint::new(1.0, 0.0), &f);
        assert_relative_eq!(j, Matrix2::new(4.0, 0.0, 0.0, -2.0), epsilon = 1e-15);

        let j = jacobian(FRAC_PI_2, PlanarPoint::new(1.0, 1.0), &f);
        assert_relative_eq!(j, Matrix2::new(3.0, 4.0, 4.0, 1.0), epsilon = 1e-14);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let step = 1e-5;
        for _ in 0..1000 {
            let kappa = rng.random_range(0.5..30.0);
            let f = Forcing::new(kappa).unwrap();
            let t = rng.random_range(-5.0..5.0);
            let z = PlanarPoint::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
            let j = jacobian(t, z, &f);
            let px = vector_field(t, PlanarPoint::new(z.x + step, z.y), &f);
            let mx = vector_field(t, PlanarPoint::new(z.x - step, z.y), &f);
            let py = vector_field(t, PlanarPoint::new(z.x, z.y + step), &f);
            let my = vector_field(t, PlanarPoint::new(z.x, z.y - step), &f);
            let fd = Matrix2::new(
                (px.x - mx.x) / (2.0 * step),
                (py.x - my.x) / (2.0 * step),
                (px.y - mx.y) / (2.0 * step),
                (py.y - my.y) / (2.0 * step),
            );
            let scale = j.norm().max(1.0);
            assert!((j - fd).norm() < 1e-6 * scale, "z = {z:?}, t = {t}, kappa = {kappa}");
        }
    }

    #[test]
    fn averaged_flow_closed_form() {
        let z = PlanarPoint::new(3.0, -4.0);
        assert_eq!(averaged_flow(0.0, z), z);
        let w = averaged_flow(1.0, PlanarPoint::new(1.0, 1.0));
        assert_relative_eq!(w.x, std::f64::consts::E, max_relative = 1e-15);
        assert_relative_eq!(w.y, 1.0 / std::f64::consts::E, max_relative = 1e-15);
        let w = averaged_flow(2.0_f64.ln(), PlanarPoint::new(3.0, 4.0));
        assert_relative_eq!(w.x, 6.0, max_relative = 1e-15);
        assert_relative_eq!(w.y, 2.0, max_relative = 1e-15);
    }

    #[test]
    fn dv_norm_matches_singular_values() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let z = PlanarPoint::new(rng.random_range(-70.0..70.0), rng.random_range(-70.0..70.0));
            let expected = dv_norm_exact(z);
            let tol = 1e-10 * expected.max(1.0);
            let s1 = dv1(z).singular_values()[0];
            let s2 = dv2(z).singular_values()[0];
            assert!((s1 - expected).abs() <= tol, "dv1 at {z:?}: {s1} vs {expected}");
            assert!((s2 - expected).abs() <= tol, "dv2 at {z:?}: {s2} vs {expected}");
        }
    }

    #[test]
    fn dv_norm_examples() {
        assert_eq!(dv_norm_exact(PlanarPoint::ORIGIN), 0.0);
        assert_relative_eq!(dv_norm_exact(PlanarPoint::new(1.0, 0.0)), 3.0);
        // |z| = sqrt(2): norm 6, matching singular values {6, 2} of [[4,2],[-2,-4]].
        let z = PlanarPoint::new(1.0, 1.0);
        assert_relative_eq!(dv_norm_exact(z), 6.0, max_relative = 1e-15);
        assert_relative_eq!(dv1(z).singular_values()[0], 6.0, max_relative = 1e-12);
        assert_relative_eq!(dv1(z).singular_values()[1], 2.0, max_relative = 1e-12);
    }

    #[test]
    fn d2v_component_norms() {
        // At z = (3,4): Hessian of v1_x is [[18,8],[8,6]] with eigenvalues 4x ± 2r = {22, 2}.
        let h = Matrix2::new(18.0, 8.0, 8.0, 6.0);
        let eig: nalgebra::Vector2<f64> = h.symmetric_eigenvalues();
        let max_abs = eig[0].abs().max(eig[1].abs());
        assert_relative_eq!(max_abs, 22.0, max_relative = 1e-13);
        assert_relative_eq!(
            d2v_norm_bound(PlanarPoint::new(3.0, 4.0)),
            5.0 * D2V_NORM_FACTOR,
            max_relative = 1e-15
        );
        assert_eq!(d2v_norm_bound(PlanarPoint::ORIGIN), 0.0);
        assert_relative_eq!(
            d2v_norm_bound(PlanarPoint::new(1.0, 0.0)),
            4.0 + 2.0 * SQRT_2,
            max_relative = 1e-15
        );
    }

    #[test]
    fn d2v_bilinear_brute_force_dominated() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let eps = 1e-4;
        for _ in 0..100 {
            let z = PlanarPoint::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
            let bound = d2v_norm_bound(z) * (1.0 + 1e-9);
            let mut sup: f64 = 0.0;
            for _ in 0..10_000 {
                let ang_a = rng.random_range(0.0..std::f64::consts::TAU);
                let ang_b = rng.random_range(0.0..std::f64::consts::TAU);
                let a = PlanarPoint::new(ang_a.cos(), ang_a.sin());
                let b = nalgebra::Vector2::new(ang_b.cos(), ang_b.sin());
                // Dv is quadratic in z, so the centered difference in direction a
                // recovers D²v(z)(a, ·) exactly up to roundoff.
                for dv in [dv1, dv2] {
                    let plus = dv(PlanarPoint::new(z.x + eps * a.x, z.y + eps * a.y));
                    let minus = dv(PlanarPoint::new(z.x - eps * a.x, z.y - eps * a.y));
                    let bilinear = ((plus - minus) / (2.0 * eps)) * b;
                    sup = sup.max(bilinear.norm());
                }
            }
            assert!(
                sup <= bound,
                "brute-force bilinear norm {sup} exceeds bound {bound} at {z:?}"
            );
        }
    }

    #[test]
    fn enclosure_formulas() {
        let e = apriori_enclosure(1.0).unwrap();
        assert_eq!(e.h, 0.125);
        assert_relative_eq!(e.radius, SQRT_2, max_relative = 1e-15);
        let e = apriori_enclosure(10.0).unwrap();
        assert_eq!(e.h, 0.00125);
        assert_relative_eq!(e.radius, 10.0 * SQRT_2, max_relative = 1e-15);
        let e = apriori_enclosure(2.0).unwrap();
        assert_eq!(e.h, 1.0 / 32.0);
        assert_relative_eq!(e.radius, 2.0 * SQRT_2, max_relative = 1e-15);
        let err = apriori_enclosure(0.5).unwrap_err();
        assert!(err.to_string().contains("|z| >= 1"), "{err}");
    }

    #[test]
    fn decomposition_constants_table() {
        let b = decomposition_constants(1.0).unwrap();
        assert_eq!(b.terms.len(), 2);
        for term in &b.terms {
            assert_eq!(term.c_v, 1.0);
            assert_eq!(term.c_dv_dz, 3.0);
            assert_relative_eq!(term.c_d2v_dz2, 6.82842712474619, max_relative = 1e-14);
        }
        let b = decomposition_constants(10.0).unwrap();
        assert_eq!(b.c_f, 10.0);
        assert_eq!(b.terms[0].c_v, 1000.0);
        assert!(decomposition_constants(0.0).is_err());
        assert!(decomposition_constants(-1.0).is_err());
    }

    #[test]
    fn c0_deviation_frozen_values() {
        // t = 0: b̃ = 4R³.
        for &r in &[SQRT_2, 2.0, 31.0] {
            assert_relative_eq!(c0_deviation(0.0, r).unwrap(), 4.0 * r * r * r, max_relative = 1e-14);
        }
        // High-precision evaluation of the closed form.
        assert_relative_eq!(
            c0_deviation(0.125, SQRT_2).unwrap(),
            24.118132172239785,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            c0_error_closed(0.125, SQRT_2, 1e4).unwrap(),
            2.4118132172239785e-3,
            max_relative = 1e-14
        );
        // 1/|κ| scaling.
        assert_relative_eq!(
            c0_error_closed(0.125, SQRT_2, 2e4).unwrap(),
            0.5 * c0_error_closed(0.125, SQRT_2, 1e4).unwrap(),
            max_relative = 1e-15
        );
        // Sign of kappa is irrelevant.
        assert_eq!(
            c0_error_closed(0.125, SQRT_2, -1e4).unwrap(),
            c0_error_closed(0.125, SQRT_2, 1e4).unwrap()
        );
    }

    #[test]
    fn c1_deviation_frozen_values() {
        // t = 0: B̃ = 4MR².
        for &r in &[SQRT_2, 5.0] {
            assert_relative_eq!(c1_deviation(0.0, r).unwrap(), 12.0 * r * r, max_relative = 1e-14);
        }
        assert_relative_eq!(
            c1_deviation(0.125, SQRT_2).unwrap(),
            174.67258584558545,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            c1_deviation(0.00125, 10.0 * SQRT_2).unwrap(),
            13_958.306_962_009_31,
            max_relative = 1e-13
        );
    }

    #[test]
    fn closed_forms_reject_out_of_window_times() {
        assert!(matches!(c0_deviation(-0.1, SQRT_2), Err(Error::Domain(_))));
        assert!(matches!(c0_deviation(0.2, SQRT_2), Err(Error::Domain(_))));
        assert!(matches!(c1_deviation(0.130, SQRT_2), Err(Error::Domain(_))));
        // The endpoint 1/(4R²) itself is allowed.
        assert!(c1_deviation(0.125, SQRT_2).is_ok());
        assert!(c0_error_closed(0.1, SQRT_2, 0.0).is_err());
    }

    #[test]
    fn forcing_rejects_zero() {
        assert!(Forcing::new(0.0).is_err());
        assert!(Forcing::new(f64::NAN).is_err());
        assert!(Forcing::new(-3.0).is_ok());
    }
}
