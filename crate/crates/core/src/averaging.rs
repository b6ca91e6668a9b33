//! Generic C⁰ and C¹ averaging error bounds.
//!
//! For a system `x' = F(t,x) + Σ_k g_k(ω_k t) v_k(t,x)` with rapidly
//! oscillating zero-mean terms, the distance between its flow and the flow
//! of the averaged system `x' = F(t,x)` admits explicit bounds built from a
//! handful of sup-norm constants on an enclosure: `b̃(t)/ω` for the flows and
//! `B(t)/ω` for their space derivatives, with `ω = inf_k |ω_k|`. This module
//! evaluates the closed expressions for `b̃(t)` and `B(t)` given the
//! constants; it does not derive the constants from a vector field.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Denominators smaller than this (relative to the rates involved) are
/// treated as removable singularities and replaced by their analytic limits.
const SINGULAR_REL_TOL: f64 = 1e-12;

/// Sup-norm constants attached to one oscillatory term `g_k(ω_k t) v_k(t,x)`.
///
/// `c_g` and `c_big_g` bound the oscillation `g_k` and its primitive `G_k`;
/// the remaining fields bound `v_k` and its derivatives on the enclosure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscTermConstants {
    pub c_g: f64,
    #[serde(rename = "c_G")]
    pub c_big_g: f64,
    pub c_v: f64,
    #[serde(rename = "c_DzF_v")]
    pub c_dzf_v: f64,
    pub c_dv_dt: f64,
    pub c_dv_dz: f64,
    pub c_d2v_dtdz: f64,
    pub c_d2v_dz2: f64,
    pub omega_k: f64,
}

/// A priori constants of the full system on an enclosure.
///
/// `l` is a logarithmic-norm bound of `D_xF` (may be negative); the `c_*`
/// fields are nonnegative sup-norm bounds; `omega` is the slowest forcing
/// frequency `inf_k |ω_k|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsBundle {
    pub l: f64,
    #[serde(rename = "c_F")]
    pub c_f: f64,
    #[serde(rename = "c_DzF")]
    pub c_dzf: f64,
    #[serde(rename = "c_DzzF")]
    pub c_dzzf: f64,
    pub omega: f64,
    pub terms: Vec<OscTermConstants>,
}

impl OscTermConstants {
    fn validate(&self, index: usize, omega: f64) -> Result<()> {
        let named = [
            ("c_g", self.c_g),
            ("c_G", self.c_big_g),
            ("c_v", self.c_v),
            ("c_DzF_v", self.c_dzf_v),
            ("c_dv_dt", self.c_dv_dt),
            ("c_dv_dz", self.c_dv_dz),
            ("c_d2v_dtdz", self.c_d2v_dtdz),
            ("c_d2v_dz2", self.c_d2v_dz2),
        ];
        for (name, value) in named {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "terms[{index}].{name} must be finite and nonnegative, got {value}"
                )));
            }
        }
        if !self.omega_k.is_finite() || self.omega_k.abs() < omega {
            return Err(Error::InvalidInput(format!(
                "terms[{index}].omega_k must satisfy |omega_k| >= omega = {omega}, got {}",
                self.omega_k
            )));
        }
        Ok(())
    }
}

impl ConstantsBundle {
    /// Checks the type invariants: nonnegative sup-norm constants, positive
    /// `omega`, and `|omega_k| >= omega` for every term.
    pub fn validate(&self) -> Result<()> {
        if !self.l.is_finite() {
            return Err(Error::InvalidInput(format!("l must be finite, got {}", self.l)));
        }
        for (name, value) in [("c_F", self.c_f), ("c_DzF", self.c_dzf), ("c_DzzF", self.c_dzzf)] {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "{name} must be finite and nonnegative, got {value}"
                )));
            }
        }
        if !self.omega.is_finite() || self.omega <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "omega must be finite and positive, got {}",
                self.omega
            )));
        }
        for (i, term) in self.terms.iter().enumerate() {
            term.validate(i, self.omega)?;
        }
        Ok(())
    }

    /// Returns a copy with every `omega_k` set to `omega_k` and the bundle
    /// frequency set to `|omega_k|`. Convenience for bundles built with a
    /// placeholder frequency.
    pub fn with_frequency(mut self, omega_k: f64) -> Result<Self> {
        if !omega_k.is_finite() || omega_k == 0.0 {
            return Err(Error::InvalidInput(format!(
                "frequency must be finite and nonzero, got {omega_k}"
            )));
        }
        self.omega = omega_k.abs();
        for term in &mut self.terms {
            term.omega_k = omega_k;
        }
        Ok(self)
    }

    /// `Σ_i C(g_i) C(v_i)`: bound on the total oscillatory drift.
    fn oscillation_drift(&self) -> f64 {
        self.terms.iter().map(|t| t.c_g * t.c_v).sum()
    }

    /// `Σ_i C(g_i) C(∂v_i/∂z)`.
    fn oscillation_rate(&self) -> f64 {
        self.terms.iter().map(|t| t.c_g * t.c_dv_dz).sum()
    }
}

/// Parses a bundle from its JSON wire form and checks the invariants.
pub fn bundle_from_json(text: &str) -> Result<ConstantsBundle> {
    let bundle: ConstantsBundle = serde_json::from_str(text)
        .map_err(|e| Error::InvalidInput(format!("constants bundle JSON: {e}")))?;
    bundle.validate()?;
    Ok(bundle)
}

/// Serializes a bundle to its JSON wire form.
pub fn bundle_to_json(bundle: &ConstantsBundle) -> Result<String> {
    serde_json::to_string(bundle)
        .map_err(|e| Error::InvalidInput(format!("constants bundle JSON: {e}")))
}

/// Logarithmic norm of a 2×2 matrix in the euclidean norm: the largest
/// eigenvalue of the symmetric part `(A + Aᵗ)/2`.
pub fn log_norm(a: &Matrix2<f64>) -> Result<f64> {
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("matrix entries must be finite".into()));
    }
    let s11 = a[(0, 0)];
    let s22 = a[(1, 1)];
    let s12 = 0.5 * (a[(0, 1)] + a[(1, 0)]);
    let mean = 0.5 * (s11 + s22);
    let spread = (0.5 * (s11 - s22)).hypot(s12);
    Ok(mean + spread)
}

/// The perturbed exponential rate `l₂ = l + Σ_k C(g_k) C(∂v_k/∂z)`.
pub fn l2_rate(bundle: &ConstantsBundle) -> f64 {
    bundle.l + bundle.oscillation_rate()
}

/// `(e^{lt} - 1)/l`, with the removable singularity at `l = 0` replaced by
/// its limit `t`.
fn exp_ratio(l: f64, t: f64) -> f64 {
    if l.abs() < SINGULAR_REL_TOL * l.abs().max(1.0) {
        t
    } else {
        (l * t).exp_m1() / l
    }
}

/// `(e^{l₂t} - e^{lt})/(l₂ - l)`, with the removable singularity at `l₂ = l`
/// replaced by its limit `t·e^{lt}`. Evaluated as
/// `e^{lt}·expm1((l₂-l)t)/(l₂-l)` to avoid cancellation for small `t`.
fn exp_diff_ratio(l: f64, l2: f64, t: f64) -> f64 {
    let d = l2 - l;
    if d.abs() < SINGULAR_REL_TOL * l.abs().max(l2.abs()).max(1.0) {
        t * (l * t).exp()
    } else {
        (l * t).exp() * (d * t).exp_m1() / d
    }
}

fn check_time(t: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidInput(format!("time must be finite and >= 0, got {t}")));
    }
    Ok(())
}

/// C⁰ deviation sum `b̃(t) = Σ_k b_k(t)` with
///
/// ```text
/// b_k(t) = C(G_k) [ C(v_k)(1+e^{lt})
///        + (C(D_zF v_k) + C(∂v_k/∂t) + C(∂v_k/∂z)(C(F) + Σ_i C(v_i)C(g_i)))·(e^{lt}-1)/l ].
/// ```
///
/// The distance between the flows of the full and the averaged system is at
/// most `b̃(t)/ω`. Nondecreasing in `t`.
pub fn c0_bound(bundle: &ConstantsBundle, t: f64) -> Result<f64> {
    check_time(t)?;
    let drift = bundle.c_f + bundle.oscillation_drift();
    let elt = (bundle.l * t).exp();
    let ratio = exp_ratio(bundle.l, t);
    Ok(bundle
        .terms
        .iter()
        .map(|k| {
            k.c_big_g
                * (k.c_v * (1.0 + elt) + (k.c_dzf_v + k.c_dv_dt + k.c_dv_dz * drift) * ratio)
        })
        .sum())
}

/// C¹ deviation sum
///
/// ```text
/// B(t) = C(D_zzF)·b̃(t)·(e^{l₂t}-e^{lt})/(l₂-l) + Σ_k B_k(t),
/// B_k(t) = C(G_k)·C(∂v_k/∂z)(e^{lt}+e^{l₂t})
///        + C(G_k)·(e^{l₂t}-e^{lt})/(l₂-l) · [ C(D_zF)C(∂v_k/∂z)
///          + C(∂v_k/∂z)(C(D_zF) + Σ_i C(g_i)C(∂v_i/∂z))
///          + C(∂²v_k/∂t∂z) + C(∂²v_k/∂z²)(C(F) + Σ_i C(g_i)C(v_i)) ].
/// ```
///
/// The distance between the space derivatives of the two flows is at most
/// `B(t)/ω`. The first bracket entry bounds `‖D_zF·∂v_k/∂z‖` by the product
/// of the stored constants. Nondecreasing in `t`.
pub fn c1_bound(bundle: &ConstantsBundle, t: f64) -> Result<f64> {
    check_time(t)?;
    let l = bundle.l;
    let l2 = l2_rate(bundle);
    let drift = bundle.c_f + bundle.oscillation_drift();
    let rate = bundle.c_dzf + bundle.oscillation_rate();
    let elt = (l * t).exp();
    let el2t = (l2 * t).exp();
    let dq = exp_diff_ratio(l, l2, t);

    let mut total = bundle.c_dzzf * c0_bound(bundle, t)? * dq;
    for k in &bundle.terms {
        let bracket = bundle.c_dzf * k.c_dv_dz
            + k.c_dv_dz * rate
            + k.c_d2v_dtdz
            + k.c_d2v_dz2 * drift;
        total += k.c_big_g * (k.c_dv_dz * (elt + el2t) + dq * bracket);
    }
    Ok(total)
}
