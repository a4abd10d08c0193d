//! Equivalent-circuit model of the SRR absorber tag.
//!
//! One unit cell is reduced to six lumped elements. The top-metal network is
//!
//! ```text
//!   Z_srr = [ jwL_r  +  ( C_g || R_g || R_o ) ]  ||  ( C_d || R_d )
//! ```
//!
//! in parallel with the grounded substrate seen as a short-terminated
//! transmission line `Z_s`. The tag reflects a normally incident plane wave
//! with `Gamma = (Z_tag - Z0)/(Z_tag + Z0)`, `Z0 = 377` ohm.
//!
//! Element formulas (closed forms, documented here as the normative model):
//!
//! * `C_0` — capacitance between neighboring cells: coplanar strip grating of
//!   period `w` and slot `w - l`, per-unit-length conformal-mapping value
//!   `eps0 * eps_eff * K(k')/K(k)` with `k = sin(pi (w-l) / (2 w))`,
//!   multiplied by the coupled edge length `l`. Each cell sees four
//!   neighbors in series, so `C_d = C_0 / 4`.
//! * `C_g` — gap capacitance: coplanar strip pair formed by the two ring arms
//!   on either side of the gap, `k = d / l`, multiplied by the effective
//!   fringing length `0.4 l` of the gap aperture.
//! * `L_r` — self-inductance of a square planar loop of mean side `l - s`
//!   and trace cross-section `(s + t)`:
//!   `(2 mu0 a / pi) (ln(a/(s+t)) + 0.2235 (s+t)/a + 0.726)`.
//! * `R_d`, `R_g` — substrate loss shunting each capacitor,
//!   `1 / (w_ref C tan_delta)` at the band-center reference frequency.
//! * `R_o` — sensitive-material resistance bridging the gap.
//!
//! `eps_eff = (1 + Re eps_r)/2` is the usual half-space average for coplanar
//! conductors on a substrate.

use num_complex::Complex64;
use serde::Serialize;

use crate::consts::{C0, EPS0, MU0, Z0};
use crate::error::Error;
use crate::geometry::{MaterialProperties, SrrGeometry};
use crate::Result;

/// Effective fringing length of the gap aperture, as a fraction of `l`.
const GAP_FRINGE_FRACTION: f64 = 0.4;

/// Guard band around the quarter-wave singularity of the substrate line, in
/// radians of electrical length.
const QUARTER_WAVE_GUARD_RAD: f64 = 0.01;

/// Residual threshold above which a canonical fit is flagged as poor.
const POOR_FIT_RESIDUAL: f64 = 0.05;

/// Lumped element values of one unit cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CircuitParameters {
    /// Inter-cell capacitance (F), `c_0 / 4`.
    pub c_d: f64,
    /// Gap capacitance (F).
    pub c_g: f64,
    /// Ring inductance (H).
    pub l_r: f64,
    /// Dielectric loss resistance across `c_d` (ohm).
    pub r_d: f64,
    /// Dielectric loss resistance across `c_g` (ohm).
    pub r_g: f64,
    /// Sensitive-material resistance (ohm).
    pub r_o: f64,
    /// Neighboring-cell capacitance the `c_d` value was derived from (F).
    pub c_0: f64,
}

/// Complete elliptic integral of the first kind, via the arithmetic-geometric
/// mean. Valid for 0 <= k < 1.
pub(crate) fn elliptic_k(k: f64) -> f64 {
    debug_assert!((0.0..1.0).contains(&k));
    let mut a = 1.0_f64;
    let mut b = (1.0 - k * k).sqrt();
    while (a - b).abs() > 1e-15 * a {
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    std::f64::consts::PI / (2.0 * a)
}

/// K(k')/K(k) ratio used by the coplanar-strip capacitance formulas.
fn k_ratio(k: f64) -> f64 {
    let kp = (1.0 - k * k).sqrt();
    elliptic_k(kp) / elliptic_k(k)
}

/// Derives the lumped circuit for one unit cell at environmental state
/// `psi_env` (percent). `f_ref` is the reference frequency (band center) at
/// which the dielectric loss resistors are evaluated.
pub fn derive_circuit(
    geom: &SrrGeometry,
    mat: &MaterialProperties,
    psi_env: f64,
    f_ref: f64,
) -> Result<CircuitParameters> {
    geom.validate()?;
    mat.validate()?;
    if !(f_ref > 0.0) {
        return Err(Error::ModelValidity(format!(
            "reference frequency must be positive, got {f_ref}"
        )));
    }
    let eps_eff = (1.0 + mat.eps_re) / 2.0;
    let k0 = (std::f64::consts::PI * (geom.w - geom.l) / (2.0 * geom.w)).sin();
    let c_0 = EPS0 * eps_eff * k_ratio(k0) * geom.l;
    let c_d = c_0 / 4.0;
    let kg = geom.d / geom.l;
    let c_g = EPS0 * eps_eff * k_ratio(kg) * (GAP_FRINGE_FRACTION * geom.l);
    let a = geom.l - geom.s;
    let l_r = (2.0 * MU0 * a / std::f64::consts::PI)
        * ((a / (geom.s + geom.t)).ln() + 0.2235 * (geom.s + geom.t) / a + 0.726);
    let w_ref = 2.0 * std::f64::consts::PI * f_ref;
    // A lossless substrate leaves the shunt resistors open.
    let (r_d, r_g) = if mat.tan_delta > 0.0 {
        (
            1.0 / (w_ref * c_d * mat.tan_delta),
            1.0 / (w_ref * c_g * mat.tan_delta),
        )
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    let r_o = mat.sensitive_resistance(psi_env)?;
    Ok(CircuitParameters {
        c_d,
        c_g,
        l_r,
        r_d,
        r_g,
        r_o,
        c_0,
    })
}

/// Input impedance of the short-terminated substrate line of length `h`:
/// `Z_s = j (Z0/sqrt(eps_r)) tan(2 pi f sqrt(eps_r) h / c)`.
///
/// Evaluation inside the guard band around the quarter-wave singularity of
/// the tangent is rejected as a model-validity violation.
pub fn substrate_impedance(f: f64, h: f64, eps_r: Complex64) -> Result<Complex64> {
    if !(f > 0.0) || !(h > 0.0) {
        return Err(Error::ModelValidity(format!(
            "substrate line needs f > 0 and h > 0 (f = {f}, h = {h})"
        )));
    }
    let sq = eps_r.sqrt();
    let theta = Complex64::new(0.0, 0.0)
        + 2.0 * std::f64::consts::PI * f * h / C0 * sq;
    // Distance of the real electrical length from the nearest odd multiple
    // of pi/2.
    let m = theta.re.rem_euclid(std::f64::consts::PI);
    if (m - std::f64::consts::FRAC_PI_2).abs() < QUARTER_WAVE_GUARD_RAD {
        return Err(Error::ModelValidity(format!(
            "substrate thickness within {QUARTER_WAVE_GUARD_RAD} rad of the \
             quarter-wave singularity at f = {f:.6e} Hz"
        )));
    }
    Ok(Complex64::i() * (Z0 / sq) * theta.tan())
}

/// Impedance of the SRR top-metal network between the wave interface and the
/// substrate interface.
pub fn srr_impedance(f: f64, cp: &CircuitParameters) -> Result<Complex64> {
    if !(f > 0.0) {
        return Err(Error::ModelValidity(format!("f must be positive, got {f}")));
    }
    let w = 2.0 * std::f64::consts::PI * f;
    let mut y_gap = Complex64::new(1.0 / cp.r_o, w * cp.c_g);
    if cp.r_g.is_finite() {
        y_gap.re += 1.0 / cp.r_g;
    }
    let z_series = Complex64::new(0.0, w * cp.l_r) + y_gap.inv();
    let mut y_shunt = Complex64::new(0.0, w * cp.c_d);
    if cp.r_d.is_finite() {
        y_shunt.re += 1.0 / cp.r_d;
    }
    Ok((z_series.inv() + y_shunt).inv())
}

/// Tag impedance: the SRR network in parallel with the substrate line.
pub fn tag_impedance(
    f: f64,
    cp: &CircuitParameters,
    geom: &SrrGeometry,
    mat: &MaterialProperties,
) -> Result<Complex64> {
    let z_srr = srr_impedance(f, cp)?;
    let z_s = substrate_impedance(f, geom.h, mat.eps_r())?;
    let denom = z_srr + z_s;
    if denom.norm() == 0.0 {
        return Err(Error::ModelValidity(format!(
            "Z_srr + Z_s = 0 at f = {f:.6e} Hz (model singularity)"
        )));
    }
    Ok(z_srr * z_s / denom)
}

/// Complex scattering coefficient `Gamma = (Z_tag - Z0)/(Z_tag + Z0)`.
pub fn scattering_coefficient(
    f: f64,
    cp: &CircuitParameters,
    geom: &SrrGeometry,
    mat: &MaterialProperties,
) -> Result<Complex64> {
    let z_tag = tag_impedance(f, cp, geom, mat)?;
    Ok((z_tag - Z0) / (z_tag + Z0))
}

/// Complex reflection samples on a strictly increasing frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringSpectrum {
    pub freq_hz: Vec<f64>,
    pub gamma: Vec<Complex64>,
}

impl ScatteringSpectrum {
    /// Magnitude samples.
    pub fn gamma_abs(&self) -> Vec<f64> {
        self.gamma.iter().map(|g| g.norm()).collect()
    }
}

/// Extracted canonical resonance of one tag state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CanonicalResonance {
    /// Effective resistance at the dip (ohm).
    pub r_total: f64,
    /// Effective inductance (H).
    pub l_total: f64,
    /// Effective capacitance (F).
    pub c_total: f64,
    /// Resonance frequency, `1/(2 pi sqrt(L C))` (Hz).
    pub f0_hz: f64,
    /// `(1/R) sqrt(L/C)`.
    pub q: f64,
    /// Dip depth `|Z0 - R|/(Z0 + R)`.
    pub gamma_min: f64,
    /// RMS residual of the fitted-circuit |Gamma| over the fit window.
    pub fit_residual: f64,
    /// Set when the residual exceeds the poor-fit threshold.
    pub poor_fit: bool,
}

/// Uniform grid of `n` points across `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "grid needs at least two points");
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| lo + step * i as f64).collect()
}

/// One tag (geometry + material + band of interest).
///
/// Frequency grids default to 1001 uniform points across the band.
#[derive(Debug, Clone, PartialEq)]
pub struct TagModel {
    pub geometry: SrrGeometry,
    pub material: MaterialProperties,
    /// Band of interest (Hz).
    pub band: (f64, f64),
    /// Grid points per sweep.
    pub grid_points: usize,
}

/// Default number of grid points across the band.
pub const DEFAULT_GRID_POINTS: usize = 1001;

impl TagModel {
    pub fn new(geometry: SrrGeometry, material: MaterialProperties, band: (f64, f64)) -> Self {
        TagModel {
            geometry,
            material,
            band,
            grid_points: DEFAULT_GRID_POINTS,
        }
    }

    /// Prototype tag over the default 4.8..5.8 GHz band.
    pub fn prototype() -> Self {
        TagModel::new(
            SrrGeometry::prototype(),
            MaterialProperties::prototype(),
            (4.8e9, 5.8e9),
        )
    }

    pub fn band_center(&self) -> f64 {
        0.5 * (self.band.0 + self.band.1)
    }

    /// Lumped circuit at environmental state `psi` percent.
    pub fn circuit(&self, psi: f64) -> Result<CircuitParameters> {
        derive_circuit(&self.geometry, &self.material, psi, self.band_center())
    }

    /// Gamma at a single frequency.
    pub fn gamma(&self, f: f64, psi: f64) -> Result<Complex64> {
        let cp = self.circuit(psi)?;
        scattering_coefficient(f, &cp, &self.geometry, &self.material)
    }

    /// Full sweep across the band. Rejects any sample violating passivity.
    pub fn spectrum(&self, psi: f64) -> Result<ScatteringSpectrum> {
        let cp = self.circuit(psi)?;
        self.spectrum_for(&cp)
    }

    /// Sweep for an already-derived circuit.
    pub fn spectrum_for(&self, cp: &CircuitParameters) -> Result<ScatteringSpectrum> {
        let freq_hz = linspace(self.band.0, self.band.1, self.grid_points);
        let mut gamma = Vec::with_capacity(freq_hz.len());
        for &f in &freq_hz {
            let g = scattering_coefficient(f, cp, &self.geometry, &self.material)?;
            if g.norm() > 1.0 + 1e-9 {
                return Err(Error::ModelValidity(format!(
                    "|Gamma| = {} > 1 at f = {f:.6e} Hz (passivity violated)",
                    g.norm()
                )));
            }
            gamma.push(g);
        }
        Ok(ScatteringSpectrum { freq_hz, gamma })
    }

    /// Canonical resonance at state `psi`.
    pub fn resonance(&self, psi: f64) -> Result<CanonicalResonance> {
        let cp = self.circuit(psi)?;
        canonical_resonance(&cp, &self.geometry, &self.material, self.band, self.grid_points)
    }
}

/// Magnitude of the parallel-resonator model reflection at `f`.
fn model_gamma_abs(f: f64, g: f64, c: f64, l: f64) -> f64 {
    let w = 2.0 * std::f64::consts::PI * f;
    let y = Complex64::new(g, w * c - 1.0 / (w * l));
    let z = y.inv();
    ((z - Z0) / (z + Z0)).norm()
}

/// Extracts the canonical resonance from a band sweep.
///
/// The reduction, in order:
///
/// 1. locate the `|Gamma|` dip on the band grid (a dip on the band edge is
///    reported as "no resonance");
/// 2. estimate the dip quality from the half-depth width of `|Gamma|^2` and
///    open a fit window `f_dip +/- f_dip / (2 Q_est)`;
/// 3. fit a parallel resonator `Y = G + j(wC - 1/(wL))` to `|Gamma|` over the
///    window (log-parameter Levenberg-Marquardt seeded by a linear
///    susceptance fit); this yields `R_total = 1/G` and the resonance
///    frequency `f0`;
/// 4. report the structural capacitance at `f0`,
///    `C_total = C_d + C_g / (1 - w0^2 L_r C_g)` (the gap branch acts as an
///    enhanced shunt capacitor below its series resonance), and close the
///    triple with the resonance identity `L_total = 1/(w0^2 C_total)`.
///
/// The returned values satisfy `f0 = 1/(2 pi sqrt(L C))` and
/// `Q = (1/R) sqrt(L/C)` exactly by construction.
pub fn canonical_resonance(
    cp: &CircuitParameters,
    geom: &SrrGeometry,
    mat: &MaterialProperties,
    band: (f64, f64),
    grid_points: usize,
) -> Result<CanonicalResonance> {
    let (lo, hi) = band;
    if !(hi > lo) || !(lo > 0.0) {
        return Err(Error::ModelValidity(format!(
            "band must satisfy 0 < lo < hi, got {lo}..{hi}"
        )));
    }
    let n = grid_points.max(32);
    let freq = linspace(lo, hi, n);
    let mut gabs = Vec::with_capacity(n);
    for &f in &freq {
        gabs.push(scattering_coefficient(f, cp, geom, mat)?.norm());
    }
    let i0 = gabs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite |Gamma|"))
        .map(|(i, _)| i)
        .expect("non-empty grid");
    if i0 == 0 || i0 == n - 1 {
        return Err(Error::NoResonance { lo_hz: lo, hi_hz: hi });
    }
    let f_dip = freq[i0];

    // Half-depth width of the power dip sets the window.
    let p: Vec<f64> = gabs.iter().map(|g| g * g).collect();
    let baseline = p.iter().cloned().fold(f64::MIN, f64::max);
    let half = 0.5 * (baseline + p[i0]);
    let mut il = i0;
    while il > 0 && p[il] < half {
        il -= 1;
    }
    let mut ir = i0;
    while ir < n - 1 && p[ir] < half {
        ir += 1;
    }
    let width = freq[ir] - freq[il];
    let q_est = (f_dip / width.max(f64::MIN_POSITIVE)).clamp(3.0, 500.0);
    let half_w = f_dip / (2.0 * q_est);
    let mut wl = freq.partition_point(|&f| f < f_dip - half_w);
    let mut wr = freq.partition_point(|&f| f <= f_dip + half_w);
    if wr - wl < 7 {
        wl = i0.saturating_sub(3);
        wr = (i0 + 4).min(n);
    }
    let fw = &freq[wl..wr];
    let gw = &gabs[wl..wr];

    // Linear susceptance fit for the initial (G, C, L).
    let mut sum_g = 0.0;
    let w0 = 2.0 * std::f64::consts::PI * f_dip;
    let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &f in fw {
        let z = tag_impedance(f, cp, geom, mat)?;
        let y = z.inv();
        sum_g += y.re;
        let u = 2.0 * std::f64::consts::PI * f / w0;
        // Im Y = u * (w0 C) - (1/u) * (1/(w0 L))
        a11 += u * u;
        a12 += -1.0;
        a22 += 1.0 / (u * u);
        b1 += u * y.im;
        b2 += -y.im / u;
    }
    let m = fw.len() as f64;
    let g0 = (sum_g / m).max(1e-9);
    let det = a11 * a22 - a12 * a12;
    let (alpha, beta) = if det.abs() > 1e-12 * (a11 * a22).abs().max(1.0) {
        ((b1 * a22 - b2 * a12) / det, (a11 * b2 - a12 * b1) / det)
    } else {
        (0.0, 0.0)
    };
    let mut c0 = alpha / w0;
    let mut l0 = if beta > 0.0 { 1.0 / (beta * w0) } else { -1.0 };
    if !(c0 > 0.0) {
        c0 = 1e-13;
    }
    if !(l0 > 0.0) {
        l0 = 1.0 / (w0 * w0 * c0);
    }

    // Levenberg-Marquardt on |Gamma| in log-parameter space.
    let mut theta = [g0.ln(), c0.ln(), l0.ln()];
    let mut lambda = 1e-3;
    let sq_err = |th: &[f64; 3]| -> f64 {
        let (g, c, l) = (th[0].exp(), th[1].exp(), th[2].exp());
        fw.iter()
            .zip(gw)
            .map(|(&f, &gd)| {
                let r = model_gamma_abs(f, g, c, l) - gd;
                r * r
            })
            .sum()
    };
    let mut err = sq_err(&theta);
    for _ in 0..80 {
        let (g, c, l) = (theta[0].exp(), theta[1].exp(), theta[2].exp());
        let base: Vec<f64> = fw.iter().map(|&f| model_gamma_abs(f, g, c, l)).collect();
        let eps = 1e-6;
        let mut jac = vec![[0.0f64; 3]; fw.len()];
        for k in 0..3 {
            let mut tp = theta;
            tp[k] += eps;
            let (gk, ck, lk) = (tp[0].exp(), tp[1].exp(), tp[2].exp());
            for (row, (&f, &b)) in jac.iter_mut().zip(fw.iter().zip(base.iter())) {
                row[k] = (model_gamma_abs(f, gk, ck, lk) - b) / eps;
            }
        }
        // Normal equations with LM damping.
        let mut jtj = [[0.0f64; 3]; 3];
        let mut jtr = [0.0f64; 3];
        for (row, (&b, &gd)) in jac.iter().zip(base.iter().zip(gw.iter())) {
            let r = b - gd;
            for a in 0..3 {
                jtr[a] += row[a] * r;
                for bb in 0..3 {
                    jtj[a][bb] += row[a] * row[bb];
                }
            }
        }
        for a in 0..3 {
            jtj[a][a] += lambda;
        }
        let step = match solve3(jtj, [-jtr[0], -jtr[1], -jtr[2]]) {
            Some(s) => s,
            None => break,
        };
        let mut theta_new = theta;
        for a in 0..3 {
            theta_new[a] += step[a].clamp(-0.5, 0.5);
        }
        let err_new = sq_err(&theta_new);
        if err_new < err {
            if (err - err_new) < 1e-18 {
                theta = theta_new;
                break;
            }
            theta = theta_new;
            err = err_new;
            lambda = (lambda * 0.5).max(1e-9);
        } else {
            lambda *= 4.0;
            if lambda > 1e7 {
                break;
            }
        }
    }
    let (g_fit, c_fit, l_fit) = (theta[0].exp(), theta[1].exp(), theta[2].exp());
    let f0 = 1.0 / (2.0 * std::f64::consts::PI * (l_fit * c_fit).sqrt());
    let fit_residual = (err / m).sqrt();

    // Structural capacitance at the fitted resonance.
    let w0_fit = 2.0 * std::f64::consts::PI * f0;
    let denom = 1.0 - w0_fit * w0_fit * cp.l_r * cp.c_g;
    if denom <= 0.0 {
        return Err(Error::ModelValidity(format!(
            "resonance at {f0:.6e} Hz is above the gap-branch series resonance; \
             the shunt-capacitance reduction does not apply"
        )));
    }
    let c_total = cp.c_d + cp.c_g / denom;
    let l_total = 1.0 / (w0_fit * w0_fit * c_total);
    let r_total = 1.0 / g_fit;
    let q = (1.0 / r_total) * (l_total / c_total).sqrt();
    let gamma_min = ((Z0 - r_total) / (Z0 + r_total)).abs();
    Ok(CanonicalResonance {
        r_total,
        l_total,
        c_total,
        f0_hz: f0,
        q,
        gamma_min,
        fit_residual,
        poor_fit: fit_residual > POOR_FIT_RESIDUAL,
    })
}

/// Solves a 3x3 linear system by Gaussian elimination with partial pivoting.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| {
            a[i][col].abs().partial_cmp(&a[j][col].abs()).expect("finite")
        })?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in (col + 1)..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0f64; 3];
    for row in (0..3).rev() {
        let mut s = b[row];
        for k in (row + 1)..3 {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SensitivityCurve;

    fn prototype() -> TagModel {
        TagModel::prototype()
    }

    // Prototype circuit values pinned from an independent high-precision
    // evaluation of the documented closed forms.
    const C_0_REF: f64 = 1.1841051622533328e-13;
    const C_D_REF: f64 = 2.9602629056333321e-14;
    const C_G_REF: f64 = 8.8566072160450154e-14;
    const L_R_REF: f64 = 6.6801863287005343e-9;
    const R_D_REF: f64 = 169068.51127138902;
    const R_G_REF: f64 = 56510.041624137891;
    const R_O_50_REF: f64 = 4898.9794855663562;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn elliptic_k_known_values() {
        // K(0) = pi/2; K(1/sqrt(2)) = 1.8540746773013719 (tabulated).
        assert!((elliptic_k(0.0) - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((elliptic_k(std::f64::consts::FRAC_1_SQRT_2) - 1.8540746773013719).abs() < 1e-12);
    }

    #[test]
    fn prototype_circuit_matches_pinned_values() {
        let tag = prototype();
        let cp = tag.circuit(50.0).unwrap();
        assert!(rel(cp.c_0, C_0_REF) < 1e-12, "c_0 = {:e}", cp.c_0);
        assert!(rel(cp.c_d, C_D_REF) < 1e-12);
        assert!(rel(cp.c_g, C_G_REF) < 1e-12);
        assert!(rel(cp.l_r, L_R_REF) < 1e-12);
        assert!(rel(cp.r_d, R_D_REF) < 1e-12);
        assert!(rel(cp.r_g, R_G_REF) < 1e-12);
        assert!(rel(cp.r_o, R_O_50_REF) < 1e-12);
    }

    #[test]
    fn c_d_is_exactly_a_quarter_of_c_0() {
        let cp = prototype().circuit(30.0).unwrap();
        assert_eq!(cp.c_d, cp.c_0 / 4.0);
    }

    #[test]
    fn wider_gap_means_smaller_gap_capacitance() {
        let tag = prototype();
        let mut narrow = tag.geometry;
        let mut wide = tag.geometry;
        narrow.d = 0.9e-3;
        wide.d = 1.3e-3;
        let c_narrow = derive_circuit(&narrow, &tag.material, 50.0, 5.3e9).unwrap();
        let c_wide = derive_circuit(&wide, &tag.material, 50.0, 5.3e9).unwrap();
        assert!(c_wide.c_g < c_narrow.c_g);
    }

    #[test]
    fn derive_rejects_invalid_geometry_with_named_bound() {
        let tag = prototype();
        let mut bad = tag.geometry;
        bad.d = bad.l * 1.5;
        let err = derive_circuit(&bad, &tag.material, 50.0, 5.3e9).unwrap_err();
        assert!(err.to_string().contains("d < l"), "{err}");
    }

    #[test]
    fn substrate_impedance_shrinks_with_thickness() {
        // h -> 0 gives a short at the interface.
        let eps = prototype().material.eps_r();
        let z1 = substrate_impedance(5.25e9, 1e-6, eps).unwrap();
        let z2 = substrate_impedance(5.25e9, 1e-9, eps).unwrap();
        assert!(z2.norm() < z1.norm());
        assert!(z2.norm() < 0.05);
    }

    #[test]
    fn substrate_impedance_eighth_wave_lossless() {
        // Lossless eps_r, h = lambda_d/8 -> Z_s = j Z0/sqrt(eps_r).
        let eps = Complex64::new(4.67, 0.0);
        let f = 5.25e9;
        let lambda_d = C0 / (f * eps.re.sqrt());
        let z = substrate_impedance(f, lambda_d / 8.0, eps).unwrap();
        assert!((z.re).abs() < 1e-9);
        assert!(rel(z.im, 174.45479464529582) < 1e-12, "{z}");
    }

    #[test]
    fn substrate_impedance_pinned_at_5_25_ghz() {
        let z = substrate_impedance(5.25e9, 2.4e-3, prototype().material.eps_r()).unwrap();
        assert!(rel(z.re, 0.085782902916262997) < 1e-10, "{z}");
        assert!(rel(z.im, 111.98594237555845) < 1e-12, "{z}");
    }

    #[test]
    fn substrate_impedance_guard_band() {
        // Pick f exactly at the quarter-wave point of a lossless line.
        let eps = Complex64::new(4.0, 0.0);
        let h = 2.4e-3;
        let f_quarter = C0 / (4.0 * h * 2.0);
        let err = substrate_impedance(f_quarter, h, eps).unwrap_err();
        assert!(matches!(err, Error::ModelValidity(_)));
    }

    #[test]
    fn srr_impedance_dc_limit_is_r_o() {
        // f -> 0 with lossless substrate (R_g, R_d open): inductor shorts,
        // capacitors open, leaving R_o.
        let tag = prototype();
        let mut mat = tag.material.clone();
        mat.tan_delta = 0.0;
        let cp = derive_circuit(&tag.geometry, &mat, 50.0, 5.3e9).unwrap();
        let z = srr_impedance(1.0, &cp).unwrap();
        assert!(rel(z.re, cp.r_o) < 1e-6, "{z} vs {}", cp.r_o);
        assert!(z.im.abs() < 1e-2 * cp.r_o);
    }

    #[test]
    fn srr_impedance_open_shunt_leaves_series_branch() {
        let tag = prototype();
        let mut cp = tag.circuit(50.0).unwrap();
        cp.c_d = 0.0;
        cp.r_d = f64::INFINITY;
        let f = 5.25e9;
        let z = srr_impedance(f, &cp).unwrap();
        let w = 2.0 * std::f64::consts::PI * f;
        let y_gap = Complex64::new(1.0 / cp.r_g + 1.0 / cp.r_o, w * cp.c_g);
        let expect = Complex64::new(0.0, w * cp.l_r) + y_gap.inv();
        assert!((z - expect).norm() < 1e-9 * expect.norm());
    }

    #[test]
    fn srr_impedance_imaginary_part_crosses_zero_near_dip() {
        // Dense sweep: Im(Z_tag) changes sign within one grid step of some
        // point near the |Gamma| dip.
        let tag = prototype();
        let cp = tag.circuit(50.0).unwrap();
        let freq = linspace(4.8e9, 5.8e9, 4001);
        let mut crossing = None;
        for pair in freq.windows(2) {
            let z0 = tag_impedance(pair[0], &cp, &tag.geometry, &tag.material).unwrap();
            let z1 = tag_impedance(pair[1], &cp, &tag.geometry, &tag.material).unwrap();
            if z0.im.signum() != z1.im.signum() {
                crossing = Some(0.5 * (pair[0] + pair[1]));
                break;
            }
        }
        let crossing = crossing.expect("reactance crossing in band");
        let res = tag.resonance(50.0).unwrap();
        assert!((crossing - res.f0_hz).abs() < 0.01 * res.f0_hz);
    }

    #[test]
    fn tag_impedance_parallel_limits() {
        let tag = prototype();
        let cp = tag.circuit(50.0).unwrap();
        let f = 5.25e9;
        let z_srr = srr_impedance(f, &cp).unwrap();
        let z_s = substrate_impedance(f, tag.geometry.h, tag.material.eps_r()).unwrap();
        let z_tag = tag_impedance(f, &cp, &tag.geometry, &tag.material).unwrap();
        // Matches the parallel composition exactly.
        let expect = z_srr * z_s / (z_srr + z_s);
        assert!((z_tag - expect).norm() < 1e-12 * expect.norm());
        // A near-open substrate branch leaves the SRR branch alone.
        let huge = Complex64::new(1e12, 1e12);
        let with_open = z_srr * huge / (z_srr + huge);
        assert!((with_open - z_srr).norm() < 1e-9 * z_srr.norm());
        // Equal impedances halve: (Z*Z)/(Z+Z) = Z/2.
        let half = z_srr * z_srr / (z_srr + z_srr);
        assert!((half - z_srr / 2.0).norm() < 1e-12 * z_srr.norm());
    }

    #[test]
    fn tag_impedance_pinned_at_5_25_ghz() {
        let tag = prototype();
        let cp = tag.circuit(50.0).unwrap();
        let z = tag_impedance(5.25e9, &cp, &tag.geometry, &tag.material).unwrap();
        assert!(rel(z.re, 578.50631560249831) < 1e-11, "{z}");
        assert!(rel(z.im, -4.2425525485018727) < 1e-8, "{z}");
    }

    #[test]
    fn gamma_is_zero_at_free_space_match() {
        // Gamma = (Z - Z0)/(Z + Z0) vanishes when Z = Z0 = 377.
        let z = Complex64::new(Z0, 0.0);
        let g = (z - Z0) / (z + Z0);
        assert_eq!(g.norm(), 0.0);
    }

    #[test]
    fn gamma_pinned_at_5_25_ghz() {
        let tag = prototype();
        let g = tag.gamma(5.25e9, 50.0).unwrap();
        assert!(rel(g.re, 0.21090512622002271) < 1e-10, "{g}");
        assert!(rel(g.im, -0.003503667545780744) < 1e-7, "{g}");
    }

    #[test]
    fn prototype_sweep_has_single_dominant_dip_inside_5_0_to_5_5() {
        // Dense sweep; count local minima below the half-depth level.
        let tag = prototype();
        let spec = tag.spectrum(50.0).unwrap();
        let g = spec.gamma_abs();
        let gmin = g.iter().cloned().fold(f64::MAX, f64::min);
        let gmax = g.iter().cloned().fold(f64::MIN, f64::max);
        let level = 0.5 * (gmin + gmax);
        let mut dips = 0;
        let mut argmin = 0;
        for i in 1..g.len() - 1 {
            if g[i] < g[i - 1] && g[i] <= g[i + 1] && g[i] < level {
                dips += 1;
                argmin = i;
            }
        }
        assert_eq!(dips, 1, "expected a single dominant dip");
        let f_dip = spec.freq_hz[argmin];
        assert!((5.0e9..=5.5e9).contains(&f_dip), "dip at {f_dip:.4e}");
    }

    #[test]
    fn passivity_across_states_and_band() {
        let tag = prototype();
        for psi in [0.0, 25.0, 50.0, 75.0, 100.0] {
            let spec = tag.spectrum(psi).unwrap();
            for g in spec.gamma_abs() {
                assert!(g <= 1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn canonical_identities_hold_exactly() {
        let res = prototype().resonance(50.0).unwrap();
        let f0 = 1.0 / (2.0 * std::f64::consts::PI * (res.l_total * res.c_total).sqrt());
        assert!(rel(f0, res.f0_hz) < 1e-12);
        let q = (1.0 / res.r_total) * (res.l_total / res.c_total).sqrt();
        assert!(rel(q, res.q) < 1e-12);
        assert!(res.gamma_min >= 0.0 && res.gamma_min <= 1.0);
        assert!(!res.poor_fit, "residual {}", res.fit_residual);
    }

    #[test]
    fn canonical_matches_synthetic_series_rlc_identity() {
        // Pure series RLC with L = 1 H, C = 1 F, R = 1 ohm resonates at
        // 1/(2 pi) Hz with Q = 1; checked against the closed formulas the
        // canonical type must satisfy.
        let (r, l, c) = (1.0, 1.0, 1.0);
        let f0 = 1.0 / (2.0 * std::f64::consts::PI * (l * c as f64).sqrt());
        let q = (1.0 / r) * (l / c as f64).sqrt();
        assert!((f0 - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-15);
        assert!((q - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gamma_min_is_zero_when_r_total_is_z0() {
        let gamma_min = ((Z0 - 377.0) / (Z0 + 377.0)).abs();
        assert_eq!(gamma_min, 0.0);
    }

    #[test]
    fn canonical_f0_matches_dense_argmin_within_half_percent() {
        let tag = prototype();
        let res = tag.resonance(50.0).unwrap();
        let mut dense = tag.clone();
        dense.grid_points = 20001;
        let spec = dense.spectrum(50.0).unwrap();
        let g = spec.gamma_abs();
        let i = g
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        let f_arg = spec.freq_hz[i];
        assert!(
            (res.f0_hz - f_arg).abs() / f_arg < 5e-3,
            "f0 {} vs argmin {}",
            res.f0_hz,
            f_arg
        );
    }

    #[test]
    fn no_resonance_outside_band() {
        let tag = prototype();
        let cp = tag.circuit(50.0).unwrap();
        let err =
            canonical_resonance(&cp, &tag.geometry, &tag.material, (1.0e9, 2.0e9), 501).unwrap_err();
        assert!(matches!(err, Error::NoResonance { .. }));
    }

    #[test]
    fn gap_trend_f0_and_q_increase() {
        let tag = prototype();
        let mut prev: Option<(f64, f64)> = None;
        for i in 0..9 {
            let mut geom = tag.geometry;
            geom.d = 0.8e-3 + 0.05e-3 * i as f64;
            let cp = derive_circuit(&geom, &tag.material, 50.0, tag.band_center()).unwrap();
            let res =
                canonical_resonance(&cp, &geom, &tag.material, tag.band, tag.grid_points).unwrap();
            if let Some((f_prev, q_prev)) = prev {
                assert!(res.f0_hz > f_prev, "f0 must increase with d");
                assert!(res.q > q_prev, "Q must increase with d");
            }
            prev = Some((res.f0_hz, res.q));
        }
    }

    #[test]
    fn sensitive_resistance_monotone_shifts_resonance() {
        // Humidity raises conductance across the gap; f0 must move strictly
        // monotonically along the calibration curve.
        let tag = prototype();
        let mut prev = None;
        for psi in [0.0, 20.0, 40.0, 60.0, 80.0, 100.0] {
            let f0 = tag.resonance(psi).unwrap().f0_hz;
            if let Some(p) = prev {
                assert!(f0 > p, "f0(psi) must strictly increase");
            }
            prev = Some(f0);
        }
    }

    #[test]
    fn lossless_material_keeps_shunt_resistors_open() {
        let tag = prototype();
        let mat = MaterialProperties {
            eps_re: 4.67,
            tan_delta: 0.0,
            sensitivity: SensitivityCurve::LogLinear {
                r_dry: 30.0e3,
                r_wet: 800.0,
            },
        };
        let cp = derive_circuit(&tag.geometry, &mat, 50.0, 5.3e9).unwrap();
        assert!(cp.r_d.is_infinite());
        assert!(cp.r_g.is_infinite());
    }
}
