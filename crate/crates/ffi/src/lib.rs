//! C ABI for the srrsim core: opaque tag handles, status codes, and flat
//! argument lists so any language with a C FFI can drive the model.
//!
//! Conventions:
//!
//! * constructors return `NULL` on invalid input;
//! * every other function returns a `SrrsimStatus` and writes results
//!   through out-pointers, which must be non-null and correctly sized;
//! * handles are freed exactly once with [`srrsim_tag_free`].

use std::ffi::{c_char, CStr};
use std::ptr;

use srrsim_core::circuit::TagModel;
use srrsim_core::consts::C0;
use srrsim_core::detect::{default_pencil, matrix_pencil, DEFAULT_SV_THRESHOLD};
use srrsim_core::error::Error;
use srrsim_core::geometry::{MaterialProperties, SensitivityCurve, SrrGeometry};
use srrsim_core::link::{max_range, NoiseModel};

/// Status codes returned by fallible calls.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SrrsimStatus {
    Ok = 0,
    InvalidArgument = 1,
    ModelValidity = 2,
    NoResonance = 3,
    NoTagDetected = 4,
    EstimatorInput = 5,
    LinkInfeasible = 6,
    NullPointer = 7,
}

fn status_of(err: &Error) -> SrrsimStatus {
    match err {
        Error::InvalidGeometry(_) | Error::InvalidMaterial(_) | Error::InvalidConfig(_) => {
            SrrsimStatus::InvalidArgument
        }
        Error::ModelValidity(_) => SrrsimStatus::ModelValidity,
        Error::NoResonance { .. } => SrrsimStatus::NoResonance,
        Error::NoTagDetected(_) => SrrsimStatus::NoTagDetected,
        Error::EstimatorInput(_) => SrrsimStatus::EstimatorInput,
        Error::LinkInfeasible(_) => SrrsimStatus::LinkInfeasible,
        _ => SrrsimStatus::InvalidArgument,
    }
}

/// Opaque tag handle: geometry, material, and band of interest.
pub struct SrrsimTag {
    model: TagModel,
}

/// Creates the built-in prototype tag over its default 4.8..5.8 GHz band.
#[no_mangle]
pub extern "C" fn srrsim_tag_new_prototype() -> *mut SrrsimTag {
    Box::into_raw(Box::new(SrrsimTag {
        model: TagModel::prototype(),
    }))
}

/// Creates a tag from explicit dimensions (meters), substrate permittivity,
/// a log-linear sensitive-resistance curve (ohm at psi = 0 and psi = 100),
/// and the band of interest. Returns `NULL` if any invariant fails.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub extern "C" fn srrsim_tag_new(
    l_m: f64,
    d_m: f64,
    s_m: f64,
    w_m: f64,
    t_m: f64,
    h_m: f64,
    eps_re: f64,
    tan_delta: f64,
    r_dry_ohm: f64,
    r_wet_ohm: f64,
    band_lo_hz: f64,
    band_hi_hz: f64,
) -> *mut SrrsimTag {
    let geometry = SrrGeometry {
        l: l_m,
        d: d_m,
        s: s_m,
        w: w_m,
        t: t_m,
        h: h_m,
    };
    let material = MaterialProperties {
        eps_re,
        tan_delta,
        sensitivity: SensitivityCurve::LogLinear {
            r_dry: r_dry_ohm,
            r_wet: r_wet_ohm,
        },
    };
    if geometry.validate().is_err()
        || material.validate().is_err()
        || !(band_hi_hz > band_lo_hz)
        || !(band_lo_hz > 0.0)
    {
        return ptr::null_mut();
    }
    Box::into_raw(Box::new(SrrsimTag {
        model: TagModel::new(geometry, material, (band_lo_hz, band_hi_hz)),
    }))
}

/// Frees a tag handle. Passing `NULL` is a no-op.
///
/// # Safety
/// `tag` must be a pointer previously returned by a constructor and not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn srrsim_tag_free(tag: *mut SrrsimTag) {
    if !tag.is_null() {
        drop(Box::from_raw(tag));
    }
}

/// Complex scattering coefficient of the tag at `f_hz` and state `psi_pct`.
///
/// # Safety
/// `tag`, `out_re`, and `out_im` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn srrsim_tag_gamma(
    tag: *const SrrsimTag,
    f_hz: f64,
    psi_pct: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> SrrsimStatus {
    if tag.is_null() || out_re.is_null() || out_im.is_null() {
        return SrrsimStatus::NullPointer;
    }
    match (*tag).model.gamma(f_hz, psi_pct) {
        Ok(g) => {
            *out_re = g.re;
            *out_im = g.im;
            SrrsimStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Scattering coefficient over a caller-supplied frequency grid.
///
/// # Safety
/// `freq_hz`, `gamma_re`, and `gamma_im` must point to `n` elements each.
#[no_mangle]
pub unsafe extern "C" fn srrsim_tag_spectrum(
    tag: *const SrrsimTag,
    psi_pct: f64,
    freq_hz: *const f64,
    n: usize,
    gamma_re: *mut f64,
    gamma_im: *mut f64,
) -> SrrsimStatus {
    if tag.is_null() || freq_hz.is_null() || gamma_re.is_null() || gamma_im.is_null() {
        return SrrsimStatus::NullPointer;
    }
    let model = &(*tag).model;
    let cp = match model.circuit(psi_pct) {
        Ok(cp) => cp,
        Err(e) => return status_of(&e),
    };
    let freqs = std::slice::from_raw_parts(freq_hz, n);
    for (k, &f) in freqs.iter().enumerate() {
        match srrsim_core::circuit::scattering_coefficient(
            f,
            &cp,
            &model.geometry,
            &model.material,
        ) {
            Ok(g) => {
                *gamma_re.add(k) = g.re;
                *gamma_im.add(k) = g.im;
            }
            Err(e) => return status_of(&e),
        }
    }
    SrrsimStatus::Ok
}

/// Canonical resonance of the tag at state `psi_pct`.
///
/// # Safety
/// All out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn srrsim_tag_resonance(
    tag: *const SrrsimTag,
    psi_pct: f64,
    out_f0_hz: *mut f64,
    out_q: *mut f64,
    out_gamma_min: *mut f64,
    out_r_total_ohm: *mut f64,
) -> SrrsimStatus {
    if tag.is_null()
        || out_f0_hz.is_null()
        || out_q.is_null()
        || out_gamma_min.is_null()
        || out_r_total_ohm.is_null()
    {
        return SrrsimStatus::NullPointer;
    }
    match (*tag).model.resonance(psi_pct) {
        Ok(res) => {
            *out_f0_hz = res.f0_hz;
            *out_q = res.q;
            *out_gamma_min = res.gamma_min;
            *out_r_total_ohm = res.r_total;
            SrrsimStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Two-leg free-space backscatter budget for one tag.
///
/// # Safety
/// `out_w` must be a valid pointer.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn srrsim_received_power_w(
    p_tx_w: f64,
    sigma_m2: f64,
    f_hz: f64,
    gamma_abs: f64,
    g_tx: f64,
    g_rx: f64,
    r_tx_m: f64,
    r_rx_m: f64,
    out_w: *mut f64,
) -> SrrsimStatus {
    if out_w.is_null() {
        return SrrsimStatus::NullPointer;
    }
    if !(r_tx_m > 0.0) || !(r_rx_m > 0.0) || !(f_hz > 0.0) {
        return SrrsimStatus::InvalidArgument;
    }
    let lambda = C0 / f_hz;
    *out_w = p_tx_w * sigma_m2 * lambda * lambda
        / (32.0 * std::f64::consts::PI.powi(3) * r_tx_m * r_tx_m * r_rx_m * r_rx_m)
        * gamma_abs
        * gamma_abs
        * g_tx
        * g_rx;
    SrrsimStatus::Ok
}

/// Monostatic maximum range against a thermal noise floor.
///
/// # Safety
/// `out_m` must be a valid pointer.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn srrsim_max_range_m(
    p_tx_w: f64,
    sigma_m2: f64,
    f_hz: f64,
    gamma_abs: f64,
    g_tx: f64,
    g_rx: f64,
    snr_threshold_db: f64,
    bandwidth_hz: f64,
    noise_figure_db: f64,
    temperature_k: f64,
    out_m: *mut f64,
) -> SrrsimStatus {
    if out_m.is_null() {
        return SrrsimStatus::NullPointer;
    }
    let noise = NoiseModel {
        bandwidth_hz,
        noise_figure_db,
        temperature_k,
    };
    match max_range(
        p_tx_w,
        sigma_m2,
        f_hz,
        gamma_abs,
        g_tx,
        g_rx,
        snr_threshold_db,
        &noise,
    ) {
        Ok(r) => {
            *out_m = r;
            SrrsimStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Matrix Pencil pole extraction over a uniformly sampled complex sequence.
///
/// Pass `pencil_l = 0` for the default `n/3`, and `sv_threshold <= 0` for
/// the default cutoff. On success `*n_poles` holds how many poles (up to
/// `max_poles`) were written, ordered by residue magnitude.
///
/// # Safety
/// `re`/`im` must point to `n` samples; the four output arrays must hold
/// `max_poles` elements; `n_poles` must be valid.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn srrsim_matrix_pencil(
    re: *const f64,
    im: *const f64,
    n: usize,
    dt_s: f64,
    pencil_l: usize,
    sv_threshold: f64,
    pole_re: *mut f64,
    pole_im: *mut f64,
    residue_re: *mut f64,
    residue_im: *mut f64,
    max_poles: usize,
    n_poles: *mut usize,
) -> SrrsimStatus {
    if re.is_null()
        || im.is_null()
        || pole_re.is_null()
        || pole_im.is_null()
        || residue_re.is_null()
        || residue_im.is_null()
        || n_poles.is_null()
    {
        return SrrsimStatus::NullPointer;
    }
    let res = std::slice::from_raw_parts(re, n);
    let ims = std::slice::from_raw_parts(im, n);
    let samples: Vec<num_complex::Complex64> = res
        .iter()
        .zip(ims)
        .map(|(&a, &b)| num_complex::Complex64::new(a, b))
        .collect();
    let l = if pencil_l == 0 {
        default_pencil(n)
    } else {
        pencil_l
    };
    let thr = if sv_threshold > 0.0 {
        sv_threshold
    } else {
        DEFAULT_SV_THRESHOLD
    };
    match matrix_pencil(&samples, dt_s, l, thr) {
        Ok(set) => {
            let count = set.poles.len().min(max_poles);
            for (k, p) in set.poles.iter().take(count).enumerate() {
                *pole_re.add(k) = p.s.re;
                *pole_im.add(k) = p.s.im;
                *residue_re.add(k) = p.residue.re;
                *residue_im.add(k) = p.residue.im;
            }
            *n_poles = count;
            SrrsimStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Short description of a status code; static storage, never freed.
#[no_mangle]
pub extern "C" fn srrsim_status_message(status: SrrsimStatus) -> *const c_char {
    let msg: &CStr = match status {
        SrrsimStatus::Ok => c"ok",
        SrrsimStatus::InvalidArgument => c"invalid argument",
        SrrsimStatus::ModelValidity => c"outside model validity",
        SrrsimStatus::NoResonance => c"no resonance in band",
        SrrsimStatus::NoTagDetected => c"no tag detected",
        SrrsimStatus::EstimatorInput => c"estimator input rejected",
        SrrsimStatus::LinkInfeasible => c"link infeasible",
        SrrsimStatus::NullPointer => c"null pointer",
    };
    msg.as_ptr()
}

/// Library version string; static storage, never freed.
#[no_mangle]
pub extern "C" fn srrsim_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}
