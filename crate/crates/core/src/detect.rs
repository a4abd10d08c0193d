//! Recovery of tag resonance parameters and the sensed state from noisy
//! swept-frequency measurements.
//!
//! Two estimation paths are provided:
//!
//! * a direct dip fit (`peak_fit`): parabolic refinement of the absorption
//!   dip on log-power plus a half-depth width estimate;
//! * a pole path: the calibrated spectrum is windowed (Hann), transformed to
//!   the time domain by an inverse DFT, and fed to the Matrix Pencil Method,
//!   whose dominant pole yields the resonance and its quality factor.
//!
//! Both end in `classify_humidity`, which inverts a strictly monotone
//! calibration map psi -> f0 and bins the estimate into ten 10% categories.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::Error;
use crate::link::ReceivedSpectrum;
use crate::Result;

/// Background-normalized measurement on the same grid as its source.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibratedSpectrum {
    pub freq_hz: Vec<f64>,
    /// Power response after empty-scene subtraction (W); may dip negative
    /// under noise.
    pub response: Vec<f64>,
}

/// Pointwise subtraction of the empty-scene measurement from the tag-scene
/// measurement. The grids must match exactly.
pub fn background_subtract(
    meas: &ReceivedSpectrum,
    empty: &ReceivedSpectrum,
) -> Result<CalibratedSpectrum> {
    if meas.freq_hz != empty.freq_hz {
        return Err(Error::GridMismatch(format!(
            "tag measurement has {} points, empty measurement has {}",
            meas.freq_hz.len(),
            empty.freq_hz.len()
        )));
    }
    let response = meas
        .p_total_w
        .iter()
        .zip(&empty.p_total_w)
        .map(|(a, b)| a - b)
        .collect();
    Ok(CalibratedSpectrum {
        freq_hz: meas.freq_hz.clone(),
        response,
    })
}

/// Minimum relative dip depth for a detection, as a fraction of the
/// baseline response.
pub const DEFAULT_PROMINENCE: f64 = 0.05;

/// Locates the absorption dip of a calibrated spectrum.
///
/// Returns `(f0_hat, q_hat)`: the dip position refined by three-point
/// parabolic interpolation on log-power, and `q_hat = f0 / width` with the
/// width read at half depth (linear interpolation between grid points).
pub fn peak_fit(cal: &CalibratedSpectrum) -> Result<(f64, f64)> {
    peak_fit_with(cal, DEFAULT_PROMINENCE)
}

/// [`peak_fit`] with an explicit prominence threshold.
pub fn peak_fit_with(cal: &CalibratedSpectrum, prominence: f64) -> Result<(f64, f64)> {
    let n = cal.freq_hz.len();
    if n < 5 {
        return Err(Error::EstimatorInput(format!(
            "peak fit needs at least 5 grid points, got {n}"
        )));
    }
    let r = &cal.response;
    let baseline = r.iter().cloned().fold(f64::MIN, f64::max);
    let (i0, &rmin) = r
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite response"))
        .expect("non-empty");
    let depth = baseline - rmin;
    if !(baseline > 0.0) || depth < prominence * baseline {
        return Err(Error::NoTagDetected(format!(
            "dip depth {depth:.3e} below {prominence} of baseline {baseline:.3e}"
        )));
    }
    if i0 == 0 || i0 == n - 1 {
        return Err(Error::NoTagDetected("dip sits on the band edge".into()));
    }

    // Parabolic refinement on log-power; responses are floored at a tiny
    // fraction of the baseline so noisy samples near zero stay finite.
    let floor = baseline * 1e-12;
    let ln = |v: f64| v.max(floor).ln();
    let (y0, y1, y2) = (ln(r[i0 - 1]), ln(r[i0]), ln(r[i0 + 1]));
    let denom = y0 - 2.0 * y1 + y2;
    let step = cal.freq_hz[1] - cal.freq_hz[0];
    let offset = if denom.abs() > 0.0 {
        (0.5 * (y0 - y2) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    let f0_hat = cal.freq_hz[i0] + offset * step;

    // Half-depth crossings around the dip.
    let half = 0.5 * (baseline + rmin);
    let mut fl = cal.freq_hz[0];
    for k in (0..i0).rev() {
        if r[k] >= half {
            let t = (half - r[k + 1]) / (r[k] - r[k + 1]);
            fl = cal.freq_hz[k + 1] + t * (cal.freq_hz[k] - cal.freq_hz[k + 1]);
            break;
        }
    }
    let mut fr = cal.freq_hz[n - 1];
    for k in (i0 + 1)..n {
        if r[k] >= half {
            let t = (half - r[k - 1]) / (r[k] - r[k - 1]);
            fr = cal.freq_hz[k - 1] + t * (cal.freq_hz[k] - cal.freq_hz[k - 1]);
            break;
        }
    }
    let width = (fr - fl).max(step);
    Ok((f0_hat, f0_hat / width))
}

/// Removes the known `lambda^2` tilt of the two-leg link budget by scaling
/// each power sample with `(f / f_lo)^2`, so the dip of the equalized
/// response coincides with the dip of `|Gamma|^2`.
pub fn equalize_link_tilt(cal: &CalibratedSpectrum) -> CalibratedSpectrum {
    let f_ref = cal.freq_hz[0];
    CalibratedSpectrum {
        freq_hz: cal.freq_hz.clone(),
        response: cal
            .response
            .iter()
            .zip(&cal.freq_hz)
            .map(|(&v, &f)| v * (f / f_ref) * (f / f_ref))
            .collect(),
    }
}

/// One extracted complex-frequency pole with its residue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pole {
    /// s = alpha + j 2 pi f, in 1/s.
    pub s: Complex64,
    pub residue: Complex64,
}

/// Matrix-pencil estimate: poles sorted by residue magnitude, descending.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleSet {
    pub poles: Vec<Pole>,
    /// Number of singular values retained.
    pub model_order: usize,
}

/// Matrix Pencil Method over a uniformly sampled complex sequence.
///
/// Builds the Hankel matrix of the samples, truncates its SVD at
/// `sv_threshold` times the largest singular value, solves the reduced
/// shifted eigenproblem for the signal poles `z_k`, and recovers residues by
/// least squares. Returns `s_k = ln(z_k) / dt`.
///
/// An all-below-threshold spectrum returns an empty pole set.
pub fn matrix_pencil(
    samples: &[Complex64],
    dt: f64,
    pencil_l: usize,
    sv_threshold: f64,
) -> Result<PoleSet> {
    let n = samples.len();
    if n < 8 {
        return Err(Error::EstimatorInput(format!(
            "matrix pencil needs at least 8 samples, got {n}"
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::EstimatorInput(format!("dt must be positive, got {dt}")));
    }
    if !(0.0..1.0).contains(&sv_threshold) || sv_threshold == 0.0 {
        return Err(Error::EstimatorInput(format!(
            "singular-value threshold must lie in (0, 1), got {sv_threshold}"
        )));
    }
    if pencil_l < n / 4 || pencil_l > n / 2 {
        return Err(Error::EstimatorInput(format!(
            "pencil parameter {pencil_l} outside N/4..=N/2 for N = {n}"
        )));
    }

    let rows = n - pencil_l;
    let cols = pencil_l + 1;
    let hankel = DMatrix::<Complex64>::from_fn(rows, cols, |i, j| samples[i + j]);
    let svd = hankel.svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    if smax <= 0.0 {
        return Ok(PoleSet {
            poles: Vec::new(),
            model_order: 0,
        });
    }
    let order = svd
        .singular_values
        .iter()
        .filter(|&&s| s >= sv_threshold * smax)
        .count();
    if order == 0 {
        return Ok(PoleSet {
            poles: Vec::new(),
            model_order: 0,
        });
    }

    // Right singular vectors of the retained subspace, as columns.
    let v_t = svd.v_t.expect("requested");
    let v = v_t.rows(0, order).adjoint(); // (cols) x order
    let v1 = v.rows(0, cols - 1).into_owned();
    let v2 = v.rows(1, cols - 1).into_owned();
    // z_k are the eigenvalues of pinv(V1) V2, conjugated to undo the
    // conjugation carried by the right singular vectors of a Hankel matrix.
    let a = (v1.adjoint() * &v1)
        .try_inverse()
        .ok_or_else(|| Error::EstimatorInput("singular pencil subspace".into()))?
        * (v1.adjoint() * &v2);
    let eig = a
        .eigenvalues()
        .ok_or_else(|| Error::EstimatorInput("pencil eigenvalues did not converge".into()))?;
    let z: Vec<Complex64> = eig.iter().map(|e| e.conj()).collect();

    // Residues by least squares on the Vandermonde system.
    let vanderm = DMatrix::<Complex64>::from_fn(n, order, |i, k| z[k].powu(i as u32));
    let rhs = DMatrix::<Complex64>::from_fn(n, 1, |i, _| samples[i]);
    let residues = vanderm
        .svd(true, true)
        .solve(&rhs, 1e-300)
        .map_err(|e| Error::EstimatorInput(format!("residue solve failed: {e}")))?;

    let mut poles: Vec<Pole> = z
        .iter()
        .enumerate()
        .map(|(k, &zk)| Pole {
            s: zk.ln() / dt,
            residue: residues[(k, 0)],
        })
        .collect();
    poles.sort_by(|a, b| {
        b.residue
            .norm()
            .partial_cmp(&a.residue.norm())
            .expect("finite residues")
    });
    Ok(PoleSet {
        poles,
        model_order: order,
    })
}

/// Picks the dominant-residue pole with positive frequency and converts it
/// to `(f0_hat, q_hat)` via `q = pi f / |alpha|`.
pub fn poles_to_resonance(set: &PoleSet) -> Result<(f64, f64)> {
    let pole = set
        .poles
        .iter()
        .find(|p| p.s.im > 0.0)
        .ok_or_else(|| Error::NoTagDetected("no retained pole with positive frequency".into()))?;
    let f = pole.s.im / (2.0 * std::f64::consts::PI);
    let alpha = pole.s.re.abs();
    if alpha == 0.0 {
        return Err(Error::NoTagDetected("dominant pole has zero damping".into()));
    }
    Ok((f, std::f64::consts::PI * f / alpha))
}

/// Default pencil parameter: N/3.
pub fn default_pencil(n: usize) -> usize {
    (n / 3).clamp(n / 4, n / 2)
}

/// Default singular-value cutoff.
pub const DEFAULT_SV_THRESHOLD: f64 = 1e-3;

/// Converts a calibrated band-limited power spectrum to complex-frequency
/// poles.
///
/// A linear baseline (anchored on the band-edge sample means) is removed so
/// the dip becomes the dominant feature, the residual is Hann-windowed to
/// kill edge leakage (windowing convolves the time sequence with a three-tap
/// kernel, which leaves pole locations untouched), and an inverse DFT takes
/// it to the time domain. The Matrix Pencil then runs on the early decaying
/// run; pole frequencies are reported in absolute terms by restoring the
/// band origin.
pub fn spectrum_to_poles(
    cal: &CalibratedSpectrum,
    pencil_l: Option<usize>,
    sv_threshold: f64,
) -> Result<PoleSet> {
    let n = cal.freq_hz.len();
    if n < 32 {
        return Err(Error::EstimatorInput(format!(
            "pole extraction needs at least 32 grid points, got {n}"
        )));
    }
    let span = cal.freq_hz[n - 1] - cal.freq_hz[0];
    let dt = 1.0 / span;

    // Linear baseline between the means of the outer 5% on each side.
    let edge = (n / 20).max(2);
    let mean = |slice: &[f64]| slice.iter().sum::<f64>() / slice.len() as f64;
    let left = mean(&cal.response[..edge]);
    let right = mean(&cal.response[n - edge..]);
    let f_left = mean(&cal.freq_hz[..edge]);
    let f_right = mean(&cal.freq_hz[n - edge..]);
    let slope = (right - left) / (f_right - f_left);

    let mut buf: Vec<Complex64> = cal
        .response
        .iter()
        .zip(&cal.freq_hz)
        .enumerate()
        .map(|(k, (&v, &f))| {
            let base = left + slope * (f - f_left);
            let w = 0.5
                * (1.0
                    - (2.0 * std::f64::consts::PI * k as f64 / (n as f64 - 1.0)).cos());
            Complex64::new((base - v) * w, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);

    // The conjugate tail holds the negative-time image; a couple of leading
    // samples still carry window transients. Keep the decaying run between.
    let skip = 2usize;
    let keep = n / 2 - skip;
    let seq: Vec<Complex64> = buf[skip..skip + keep].to_vec();
    let pencil = pencil_l.unwrap_or_else(|| default_pencil(seq.len()));
    let raw = matrix_pencil(&seq, dt, pencil, sv_threshold)?;

    // Restore the band origin in the pole frequencies, unwrapping aliased
    // negative frequencies onto the band.
    let f_lo = cal.freq_hz[0];
    let poles = raw
        .poles
        .iter()
        .map(|p| {
            let mut f_rel = p.s.im / (2.0 * std::f64::consts::PI);
            if f_rel < 0.0 {
                f_rel += span;
            }
            Pole {
                s: Complex64::new(p.s.re, 2.0 * std::f64::consts::PI * (f_lo + f_rel)),
                residue: p.residue,
            }
        })
        .collect();
    Ok(PoleSet {
        poles,
        model_order: raw.model_order,
    })
}

/// Resonance estimate from the pole path of a calibrated spectrum.
pub fn pole_resonance(cal: &CalibratedSpectrum) -> Result<(f64, f64)> {
    let set = spectrum_to_poles(cal, None, DEFAULT_SV_THRESHOLD)?;
    poles_to_resonance(&set)
}

/// Strictly monotone calibration map psi (percent) -> f0 (Hz), stored as
/// piecewise-linear anchors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationCurve {
    /// (psi_pct, f0_hz) anchors with strictly increasing psi and strictly
    /// monotone f0.
    pub anchors: Vec<(f64, f64)>,
}

impl CalibrationCurve {
    pub fn new(anchors: Vec<(f64, f64)>) -> Result<Self> {
        if anchors.len() < 2 {
            return Err(Error::EstimatorInput(
                "calibration needs at least two anchors".into(),
            ));
        }
        let increasing = anchors[1].1 > anchors[0].1;
        for pair in anchors.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(Error::EstimatorInput(format!(
                    "calibration psi values must strictly increase ({} then {})",
                    pair[0].0, pair[1].0
                )));
            }
            let up = pair[1].1 > pair[0].1;
            if up != increasing || pair[1].1 == pair[0].1 {
                return Err(Error::EstimatorInput(
                    "calibration f0 values must be strictly monotone".into(),
                ));
            }
        }
        Ok(CalibrationCurve { anchors })
    }

    /// Builds the calibration from the circuit model of a tag, anchored at
    /// `points` uniform humidity values.
    ///
    /// Each anchor is the dip of `|Gamma(f)|^2` located with the same
    /// estimator the detection pipeline uses, so a noiseless measurement
    /// round-trips through the inverse map without estimator bias.
    pub fn from_tag(tag: &crate::circuit::TagModel, points: usize) -> Result<Self> {
        let points = points.max(2);
        let anchors = (0..points)
            .map(|i| {
                let psi = 100.0 * i as f64 / (points - 1) as f64;
                let spec = tag.spectrum(psi)?;
                let cal = CalibratedSpectrum {
                    freq_hz: spec.freq_hz.clone(),
                    response: spec.gamma.iter().map(|g| g.norm_sqr()).collect(),
                };
                let (f0, _q) = peak_fit(&cal)?;
                Ok((psi, f0))
            })
            .collect::<Result<Vec<_>>>()?;
        CalibrationCurve::new(anchors)
    }

    /// Forward map psi -> f0 (clamped to the anchor span).
    pub fn f0_at(&self, psi: f64) -> f64 {
        let a = &self.anchors;
        if psi <= a[0].0 {
            return a[0].1;
        }
        if psi >= a[a.len() - 1].0 {
            return a[a.len() - 1].1;
        }
        for pair in a.windows(2) {
            if psi <= pair[1].0 {
                let t = (psi - pair[0].0) / (pair[1].0 - pair[0].0);
                return pair[0].1 + t * (pair[1].1 - pair[0].1);
            }
        }
        unreachable!()
    }

    /// Inverse map f0 -> psi. Returns `(psi, clamped)`.
    pub fn invert(&self, f0: f64) -> (f64, bool) {
        let a = &self.anchors;
        let increasing = a[a.len() - 1].1 > a[0].1;
        let (fmin, fmax) = if increasing {
            (a[0].1, a[a.len() - 1].1)
        } else {
            (a[a.len() - 1].1, a[0].1)
        };
        if f0 <= fmin {
            let psi = if increasing { a[0].0 } else { a[a.len() - 1].0 };
            return (psi, f0 < fmin);
        }
        if f0 >= fmax {
            let psi = if increasing { a[a.len() - 1].0 } else { a[0].0 };
            return (psi, f0 > fmax);
        }
        for pair in a.windows(2) {
            let (p0, f_a) = pair[0];
            let (p1, f_b) = pair[1];
            let inside = if increasing {
                f0 >= f_a && f0 <= f_b
            } else {
                f0 <= f_a && f0 >= f_b
            };
            if inside {
                let t = (f0 - f_a) / (f_b - f_a);
                return (p0 + t * (p1 - p0), false);
            }
        }
        unreachable!()
    }
}

/// Final classification of one measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectionResult {
    pub f0_hat_hz: f64,
    pub q_hat: f64,
    /// Humidity bin 0..=9.
    pub category: u8,
    /// Triangular confidence, 1 at the bin center.
    pub confidence: f64,
    /// Estimate fell outside the calibration span.
    pub clamped: bool,
    /// The upstream fit was marked poor.
    pub poor_fit: bool,
}

/// Maps a resonance estimate to a humidity bin through the calibration.
///
/// `category = floor(psi/10)` clamped to 0..=9 (psi = 100 maps to 9);
/// confidence is `1 - 2 |pos - 5| / 10` with `pos` the position inside the
/// bin, maximal at the center.
pub fn classify_humidity(
    f0_hat: f64,
    q_hat: f64,
    calibration: &CalibrationCurve,
) -> DetectionResult {
    let (psi, clamped) = calibration.invert(f0_hat);
    let category = ((psi / 10.0).floor() as i64).clamp(0, 9) as u8;
    let pos = psi - 10.0 * category as f64;
    let confidence = (1.0 - 2.0 * (pos - 5.0).abs() / 10.0).clamp(0.0, 1.0);
    DetectionResult {
        f0_hat_hz: f0_hat,
        q_hat,
        category,
        confidence,
        clamped,
        poor_fit: false,
    }
}
