//! C ABI over the core library: flat functions for the closed-form bounds
//! and certificates, plus opaque handles for integrator configuration and
//! trajectories. Every function returns a status code; results go through
//! out-pointers. The generated header lives in `include/oscavg.h`.
//!
//! Ownership: values returned as `*mut` are owned by the caller and must be
//! released with the matching `_free` function. No function stores the
//! pointers it receives.

use libc::{c_char, c_int, size_t};

use oscavg::error::Error;
use oscavg::hyperbolicity as hyp;
use oscavg::integrator::{self, IntegratorConfig, Outcome, TrajectoryResult};
use oscavg::orbits;
use oscavg::planar::{self, Forcing, PlanarPoint};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum OscavgStatus {
    Ok = 0,
    /// An argument violated a precondition.
    InvalidInput = 1,
    /// An argument lies outside a bound's validity domain.
    DomainError = 2,
    /// Integration or root finding failed.
    NumericalError = 3,
    /// A required pointer was null.
    NullPointer = 4,
}

fn status_of(err: &Error) -> OscavgStatus {
    match err {
        Error::InvalidInput(_) => OscavgStatus::InvalidInput,
        Error::Domain(_) | Error::PastBlowup { .. } => OscavgStatus::DomainError,
        _ => OscavgStatus::NumericalError,
    }
}

/// Hyperbolicity certificate with plain-data fields; `valid` is 1 or 0.
#[repr(C)]
#[derive(Clone, Copy)]
pub struct OscavgCertificate {
    pub r0: f64,
    pub r: f64,
    pub h: f64,
    pub kappa: f64,
    pub b_tilde_cap: f64,
    pub delta_bound: f64,
    pub xi_lower: f64,
    pub mu_upper: f64,
    pub kappa_threshold: f64,
    pub valid: c_int,
}

/// How an integration ended: 0 completed, 1 blew up, 2 step limit.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum OscavgOutcome {
    Completed = 0,
    BlewUp = 1,
    StepLimit = 2,
}

/// Opaque integrator configuration handle.
pub struct OscavgConfig {
    inner: IntegratorConfig,
}

/// Opaque trajectory handle.
pub struct OscavgTrajectory {
    inner: TrajectoryResult,
}

unsafe fn write_out<T>(out: *mut T, value: T) -> OscavgStatus {
    if out.is_null() {
        return OscavgStatus::NullPointer;
    }
    unsafe { *out = value };
    OscavgStatus::Ok
}

macro_rules! try_ffi {
    ($expr:expr) => {
        match $expr {
            Ok(v) => v,
            Err(e) => return status_of(&e),
        }
    };
}

/// Logarithmic norm (euclidean) of a 2x2 matrix given row-major.
///
/// # Safety
/// `m` must point to 4 readable doubles and `out` to a writable double.
#[no_mangle]
pub unsafe extern "C" fn oscavg_log_norm(m: *const f64, out: *mut f64) -> OscavgStatus {
    if m.is_null() || out.is_null() {
        return OscavgStatus::NullPointer;
    }
    let vals = unsafe { std::slice::from_raw_parts(m, 4) };
    let matrix = nalgebra_matrix(vals);
    let v = try_ffi!(oscavg::averaging::log_norm(&matrix));
    unsafe { write_out(out, v) }
}

fn nalgebra_matrix(vals: &[f64]) -> nalgebra::Matrix2<f64> {
    nalgebra::Matrix2::new(vals[0], vals[1], vals[2], vals[3])
}

/// C0 averaging error bound `b~(t)/|kappa|` on the ball of radius `r`.
///
/// # Safety
/// `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn oscavg_c0_error_closed(
    t: f64,
    r: f64,
    kappa: f64,
    out: *mut f64,
) -> OscavgStatus {
    let v = try_ffi!(planar::c0_error_closed(t, r, kappa));
    unsafe { write_out(out, v) }
}

/// C1 averaging error bound `B~(t,R)/|kappa|` on the ball of radius `r`.
///
/// # Safety
/// `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn oscavg_c1_error_closed(
    t: f64,
    r: f64,
    kappa: f64,
    out: *mut f64,
) -> OscavgStatus {
    let v = try_ffi!(planar::c1_error_closed(t, r, kappa));
    unsafe { write_out(out, v) }
}

/// Frequency threshold for hyperbolicity on the ball B(0, r0).
///
/// # Safety
/// `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn oscavg_kappa_threshold(r0: f64, out: *mut f64) -> OscavgStatus {
    let v = try_ffi!(hyp::kappa_threshold(r0));
    unsafe { write_out(out, v) }
}

/// Fills a hyperbolicity certificate for B(0, r0) at frequency `kappa`.
///
/// # Safety
/// `out` must point to a writable `OscavgCertificate`.
#[no_mangle]
pub unsafe extern "C" fn oscavg_certify(
    r0: f64,
    kappa: f64,
    out: *mut OscavgCertificate,
) -> OscavgStatus {
    let c = try_ffi!(hyp::certify(r0, kappa));
    unsafe {
        write_out(
            out,
            OscavgCertificate {
                r0: c.r0,
                r: c.r,
                h: c.h,
                kappa: c.kappa,
                b_tilde_cap: c.b_tilde_cap,
                delta_bound: c.delta_bound,
                xi_lower: c.xi_lower,
                mu_upper: c.mu_upper,
                kappa_threshold: c.kappa_threshold,
                valid: c.valid as c_int,
            },
        )
    }
}

/// Infimum isolating-square half-side R with R^2(R^2-1) > (1/2 + kappa/4)^2.
///
/// # Safety
/// `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn oscavg_segment_radius_bound(kappa: f64, out: *mut f64) -> OscavgStatus {
    unsafe { write_out(out, orbits::segment_radius_bound(kappa)) }
}

/// Squared-norm escape threshold for frequency `kappa > 0`. Pass `delta <= 0`
/// to use the optimal angle.
///
/// # Safety
/// `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn oscavg_escape_norm_sq_threshold(
    kappa: f64,
    delta: f64,
    out: *mut f64,
) -> OscavgStatus {
    let d = if delta <= 0.0 { orbits::optimal_escape_angle() } else { delta };
    let p = try_ffi!(orbits::escape_threshold(kappa, d));
    unsafe { write_out(out, p.norm_sq_threshold) }
}

/// Evaluates the generic C0 averaging bound from a constants bundle given as
/// JSON ({"l", "c_F", "c_DzF", "c_DzzF", "omega", "terms": [...]}).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` a writable double.
#[no_mangle]
pub unsafe extern "C" fn oscavg_c0_bound_json(
    json: *const c_char,
    t: f64,
    out: *mut f64,
) -> OscavgStatus {
    if json.is_null() || out.is_null() {
        return OscavgStatus::NullPointer;
    }
    let text = match unsafe { std::ffi::CStr::from_ptr(json) }.to_str() {
        Ok(s) => s,
        Err(_) => return OscavgStatus::InvalidInput,
    };
    let bundle = try_ffi!(oscavg::averaging::bundle_from_json(text));
    let v = try_ffi!(oscavg::averaging::c0_bound(&bundle, t));
    unsafe { write_out(out, v) }
}

/// Evaluates the generic C1 averaging bound from a constants bundle given as
/// JSON; same schema as [`oscavg_c0_bound_json`].
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` a writable double.
#[no_mangle]
pub unsafe extern "C" fn oscavg_c1_bound_json(
    json: *const c_char,
    t: f64,
    out: *mut f64,
) -> OscavgStatus {
    if json.is_null() || out.is_null() {
        return OscavgStatus::NullPointer;
    }
    let text = match unsafe { std::ffi::CStr::from_ptr(json) }.to_str() {
        Ok(s) => s,
        Err(_) => return OscavgStatus::InvalidInput,
    };
    let bundle = try_ffi!(oscavg::averaging::bundle_from_json(text));
    let v = try_ffi!(oscavg::averaging::c1_bound(&bundle, t));
    unsafe { write_out(out, v) }
}

/// Creates an integrator configuration with the default tolerances.
#[no_mangle]
pub extern "C" fn oscavg_config_new() -> *mut OscavgConfig {
    Box::into_raw(Box::new(OscavgConfig { inner: IntegratorConfig::default() }))
}

/// Overrides the relative/absolute tolerances.
///
/// # Safety
/// `cfg` must be a live pointer from [`oscavg_config_new`].
#[no_mangle]
pub unsafe extern "C" fn oscavg_config_set_tolerances(
    cfg: *mut OscavgConfig,
    rel_tol: f64,
    abs_tol: f64,
) -> OscavgStatus {
    if cfg.is_null() {
        return OscavgStatus::NullPointer;
    }
    let cfg = unsafe { &mut *cfg };
    let candidate = IntegratorConfig { rel_tol, abs_tol, ..cfg.inner };
    if candidate.validate().is_err() {
        return OscavgStatus::InvalidInput;
    }
    cfg.inner = candidate;
    OscavgStatus::Ok
}

/// Overrides the blow-up detection norm.
///
/// # Safety
/// `cfg` must be a live pointer from [`oscavg_config_new`].
#[no_mangle]
pub unsafe extern "C" fn oscavg_config_set_blowup_norm(
    cfg: *mut OscavgConfig,
    blowup_norm: f64,
) -> OscavgStatus {
    if cfg.is_null() {
        return OscavgStatus::NullPointer;
    }
    let cfg = unsafe { &mut *cfg };
    let candidate = IntegratorConfig { blowup_norm, ..cfg.inner };
    if candidate.validate().is_err() {
        return OscavgStatus::InvalidInput;
    }
    cfg.inner = candidate;
    OscavgStatus::Ok
}

/// Releases a configuration handle.
///
/// # Safety
/// `cfg` must come from [`oscavg_config_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn oscavg_config_free(cfg: *mut OscavgConfig) {
    if !cfg.is_null() {
        drop(unsafe { Box::from_raw(cfg) });
    }
}

/// Integrates the flow from `(x0, y0)` at `t0` over `duration` (may be
/// negative). With `variational != 0` the first variational equation is
/// co-integrated. On success `*out` owns a trajectory handle.
///
/// # Safety
/// `cfg` must be live (or null for defaults); `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oscavg_integrate(
    cfg: *const OscavgConfig,
    kappa: f64,
    t0: f64,
    x0: f64,
    y0: f64,
    duration: f64,
    variational: c_int,
    out: *mut *mut OscavgTrajectory,
) -> OscavgStatus {
    if out.is_null() {
        return OscavgStatus::NullPointer;
    }
    let config = if cfg.is_null() { IntegratorConfig::default() } else { unsafe { (*cfg).inner } };
    let forcing = match Forcing::new(kappa) {
        Ok(f) => f,
        Err(e) => return status_of(&e),
    };
    let z0 = PlanarPoint::new(x0, y0);
    let run = std::panic::catch_unwind(|| {
        if variational != 0 {
            integrator::integrate_variational(t0, z0, duration, &forcing, &config)
        } else {
            integrator::integrate(t0, z0, duration, &forcing, &config)
        }
    });
    match run {
        Ok(Ok(traj)) => {
            let handle = Box::into_raw(Box::new(OscavgTrajectory { inner: traj }));
            unsafe { write_out(out, handle) }
        }
        Ok(Err(e)) => status_of(&e),
        Err(_) => OscavgStatus::NumericalError,
    }
}

/// Outcome of a finished integration.
///
/// # Safety
/// `traj` must be a live pointer from [`oscavg_integrate`].
#[no_mangle]
pub unsafe extern "C" fn oscavg_trajectory_outcome(traj: *const OscavgTrajectory) -> OscavgOutcome {
    match unsafe { &*traj }.inner.outcome {
        Outcome::Completed => OscavgOutcome::Completed,
        Outcome::BlewUp { .. } => OscavgOutcome::BlewUp,
        Outcome::StepLimit => OscavgOutcome::StepLimit,
    }
}

/// Final time and state `(t, x, y)` of the trajectory.
///
/// # Safety
/// `traj` must be live; `out` must point to 3 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn oscavg_trajectory_final(
    traj: *const OscavgTrajectory,
    out: *mut f64,
) -> OscavgStatus {
    if traj.is_null() || out.is_null() {
        return OscavgStatus::NullPointer;
    }
    let inner = &unsafe { &*traj }.inner;
    let slice = unsafe { std::slice::from_raw_parts_mut(out, 3) };
    slice[0] = inner.final_time;
    slice[1] = inner.final_state.x;
    slice[2] = inner.final_state.y;
    OscavgStatus::Ok
}

/// First blow-up crossing time; `DomainError` unless the outcome is `BlewUp`.
///
/// # Safety
/// `traj` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oscavg_trajectory_escape_time(
    traj: *const OscavgTrajectory,
    out: *mut f64,
) -> OscavgStatus {
    if traj.is_null() || out.is_null() {
        return OscavgStatus::NullPointer;
    }
    match unsafe { &*traj }.inner.outcome {
        Outcome::BlewUp { t_escape } => unsafe { write_out(out, t_escape) },
        _ => OscavgStatus::DomainError,
    }
}

/// Monodromy matrix as 4 doubles row-major; `DomainError` for trajectories
/// integrated without the variational equation.
///
/// # Safety
/// `traj` must be live; `out` must point to 4 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn oscavg_trajectory_monodromy(
    traj: *const OscavgTrajectory,
    out: *mut f64,
) -> OscavgStatus {
    if traj.is_null() || out.is_null() {
        return OscavgStatus::NullPointer;
    }
    match &unsafe { &*traj }.inner.monodromy {
        Some(m) => {
            let slice = unsafe { std::slice::from_raw_parts_mut(out, 4) };
            slice[0] = m[(0, 0)];
            slice[1] = m[(0, 1)];
            slice[2] = m[(1, 0)];
            slice[3] = m[(1, 1)];
            OscavgStatus::Ok
        }
        None => OscavgStatus::DomainError,
    }
}

/// Number of stored samples.
///
/// # Safety
/// `traj` must be live.
#[no_mangle]
pub unsafe extern "C" fn oscavg_trajectory_sample_count(traj: *const OscavgTrajectory) -> size_t {
    unsafe { &*traj }.inner.samples.len()
}

/// Copies up to `cap` samples as `(t, x, y)` triples into `out` (row-major,
/// `3*cap` doubles) and returns the number of samples written.
///
/// # Safety
/// `traj` must be live; `out` must point to `3*cap` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn oscavg_trajectory_samples(
    traj: *const OscavgTrajectory,
    out: *mut f64,
    cap: size_t,
) -> size_t {
    if traj.is_null() || out.is_null() {
        return 0;
    }
    let samples = &unsafe { &*traj }.inner.samples;
    let n = samples.len().min(cap);
    let slice = unsafe { std::slice::from_raw_parts_mut(out, 3 * n) };
    for (i, &(t, z)) in samples.iter().take(n).enumerate() {
        slice[3 * i] = t;
        slice[3 * i + 1] = z.x;
        slice[3 * i + 2] = z.y;
    }
    n
}

/// Releases a trajectory handle.
///
/// # Safety
/// `traj` must come from [`oscavg_integrate`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn oscavg_trajectory_free(traj: *mut OscavgTrajectory) {
    if !traj.is_null() {
        drop(unsafe { Box::from_raw(traj) });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_functions_roundtrip() {
        let mut v = 0.0_f64;
        let m = [1.0, 2.0, 0.0, 1.0];
        assert_eq!(unsafe { oscavg_log_norm(m.as_ptr(), &mut v) }, OscavgStatus::Ok);
        assert!((v - 2.0).abs() < 1e-14);

        assert_eq!(
            unsafe { oscavg_c0_error_closed(0.125, std::f64::consts::SQRT_2, 1e4, &mut v) },
            OscavgStatus::Ok
        );
        assert!((v - 2.4118132172239785e-3).abs() < 1e-15);

        assert_eq!(unsafe { oscavg_kappa_threshold(10.0, &mut v) }, OscavgStatus::Ok);
        assert!((v - 2.2347252354157448e7).abs() < 1.0);

        assert_eq!(unsafe { oscavg_kappa_threshold(0.5, &mut v) }, OscavgStatus::InvalidInput);
        assert_eq!(
            unsafe { oscavg_c0_error_closed(9.0, std::f64::consts::SQRT_2, 1e4, &mut v) },
            OscavgStatus::DomainError
        );
        assert_eq!(
            unsafe { oscavg_log_norm(std::ptr::null(), &mut v) },
            OscavgStatus::NullPointer
        );

        assert_eq!(unsafe { oscavg_segment_radius_bound(2.0, &mut v) }, OscavgStatus::Ok);
        assert!((v - 1.272_019_649_514_069).abs() < 1e-12);

        assert_eq!(
            unsafe { oscavg_escape_norm_sq_threshold(50.0, -1.0, &mut v) },
            OscavgStatus::Ok
        );
        assert!((v - 50.0 * 4.702190227677481).abs() < 1e-9);
    }

    #[test]
    fn certificate_roundtrip() {
        let mut cert = OscavgCertificate {
            r0: 0.0,
            r: 0.0,
            h: 0.0,
            kappa: 0.0,
            b_tilde_cap: 0.0,
            delta_bound: 0.0,
            xi_lower: 0.0,
            mu_upper: 0.0,
            kappa_threshold: 0.0,
            valid: -1,
        };
        assert_eq!(unsafe { oscavg_certify(10.0, 3e7, &mut cert) }, OscavgStatus::Ok);
        assert_eq!(cert.valid, 1);
        assert!(cert.xi_lower > 1.0 && cert.mu_upper < 1.0);
        assert_eq!(unsafe { oscavg_certify(10.0, 1e7, &mut cert) }, OscavgStatus::Ok);
        assert_eq!(cert.valid, 0);
    }

    #[test]
    fn trajectory_handle_lifecycle() {
        let cfg = oscavg_config_new();
        assert_eq!(unsafe { oscavg_config_set_tolerances(cfg, 1e-9, 1e-11) }, OscavgStatus::Ok);
        assert_eq!(
            unsafe { oscavg_config_set_tolerances(cfg, -1.0, 1e-11) },
            OscavgStatus::InvalidInput
        );
        let mut traj: *mut OscavgTrajectory = std::ptr::null_mut();
        let status = unsafe { oscavg_integrate(cfg, 40.0, 0.0, 0.4, 0.3, 0.125, 1, &mut traj) };
        assert_eq!(status, OscavgStatus::Ok);
        assert!(!traj.is_null());
        assert_eq!(unsafe { oscavg_trajectory_outcome(traj) }, OscavgOutcome::Completed);

        let mut fin = [0.0_f64; 3];
        assert_eq!(unsafe { oscavg_trajectory_final(traj, fin.as_mut_ptr()) }, OscavgStatus::Ok);
        assert!((fin[0] - 0.125).abs() < 1e-12);

        let mut mono = [0.0_f64; 4];
        assert_eq!(
            unsafe { oscavg_trajectory_monodromy(traj, mono.as_mut_ptr()) },
            OscavgStatus::Ok
        );
        assert!(mono[0] * mono[3] - mono[1] * mono[2] > 0.0);

        let n = unsafe { oscavg_trajectory_sample_count(traj) };
        assert!(n >= 2);
        let mut buf = vec![0.0_f64; 3 * n];
        let written = unsafe { oscavg_trajectory_samples(traj, buf.as_mut_ptr(), n) };
        assert_eq!(written, n);
        assert_eq!(buf[0], 0.0);

        let mut t_escape = 0.0_f64;
        assert_eq!(
            unsafe { oscavg_trajectory_escape_time(traj, &mut t_escape) },
            OscavgStatus::DomainError
        );

        unsafe { oscavg_trajectory_free(traj) };
        unsafe { oscavg_config_free(cfg) };
    }

    #[test]
    fn blowup_is_reported_through_the_abi() {
        let mut traj: *mut OscavgTrajectory = std::ptr::null_mut();
        let status =
            unsafe { oscavg_integrate(std::ptr::null(), 50.0, 0.0, 20.0, 0.0, 1.0, 0, &mut traj) };
        assert_eq!(status, OscavgStatus::Ok);
        assert_eq!(unsafe { oscavg_trajectory_outcome(traj) }, OscavgOutcome::BlewUp);
        let mut t_escape = 0.0_f64;
        assert_eq!(
            unsafe { oscavg_trajectory_escape_time(traj, &mut t_escape) },
            OscavgStatus::Ok
        );
        assert!(t_escape > 0.0 && t_escape < 0.01);
        unsafe { oscavg_trajectory_free(traj) };
    }

    #[test]
    fn bundle_json_bound_evaluation() {
        let bundle = oscavg::planar::decomposition_constants(std::f64::consts::SQRT_2)
            .unwrap()
            .with_frequency(1e4)
            .unwrap();
        let json =
            std::ffi::CString::new(oscavg::averaging::bundle_to_json(&bundle).unwrap()).unwrap();
        let mut v = 0.0_f64;
        assert_eq!(unsafe { oscavg_c0_bound_json(json.as_ptr(), 0.125, &mut v) }, OscavgStatus::Ok);
        assert!((v - 24.118132172239785).abs() < 1e-12);
        assert_eq!(unsafe { oscavg_c1_bound_json(json.as_ptr(), 0.125, &mut v) }, OscavgStatus::Ok);
        assert!((v - 174.67258584558545).abs() < 1e-10);
        let bad = std::ffi::CString::new("{\"l\": 1.0}").unwrap();
        assert_eq!(
            unsafe { oscavg_c0_bound_json(bad.as_ptr(), 0.1, &mut v) },
            OscavgStatus::InvalidInput
        );
    }
}
