//! Backscatter radio link: per-tag received power, interference, noise, and
//! synthetic swept-frequency measurements.
//!
//! The two-leg free-space budget for the `i`-th tag is
//!
//! ```text
//! P_rec,i(f) = P_tx * sigma * lambda^2 / (32 pi^3 r_tx,i^2 r_rx,i^2)
//!              * |Gamma_i(f)|^2 * G_tx,i * G_rx,i
//! ```
//!
//! with `lambda = c/f`. Interference on the measurement of tag `i` is the
//! same term summed over every other tag plus the ambient-clutter term
//! `eta * P_tx * Gamma_env,i`. Interference adds in power.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{linspace, scattering_coefficient, CircuitParameters};
use crate::consts::{C0, K_B};
use crate::error::Error;
use crate::geometry::{MaterialProperties, SrrGeometry};
use crate::Result;

/// A single-frequency tone with explicit amplitude/phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulatedTone {
    /// Amplitude in sqrt(W): the tone carries `amplitude^2` watts.
    pub amplitude: f64,
    /// Phase in radians.
    pub phase_rad: f64,
    /// Carrier frequency in Hz.
    pub freq_hz: f64,
}

/// Reflects a tone off a tag: the scattering coefficient scales the
/// amplitude by `|Gamma|` and adds `arg(Gamma)` to the phase.
pub fn backscatter_tone(tone: &ModulatedTone, gamma: Complex64) -> ModulatedTone {
    ModulatedTone {
        amplitude: tone.amplitude * gamma.norm(),
        phase_rad: tone.phase_rad + gamma.arg(),
        freq_hz: tone.freq_hz,
    }
}

/// One tag placed in a scene.
#[derive(Debug, Clone, PartialEq)]
pub struct TagInstance {
    pub geometry: SrrGeometry,
    pub material: MaterialProperties,
    /// Environmental state at the tag (percent).
    pub psi_env: f64,
    /// Position in meters.
    pub position: [f64; 3],
    /// Radar cross-section area sigma (m^2).
    pub sigma_m2: f64,
}

/// Scene: tags, transceiver placement, per-tag gains, and clutter.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub tags: Vec<TagInstance>,
    pub tx_position: [f64; 3],
    pub rx_position: [f64; 3],
    /// Linear Tx gain toward each tag.
    pub g_tx: Vec<f64>,
    /// Linear Rx gain toward each tag.
    pub g_rx: Vec<f64>,
    /// Transmit power (W).
    pub p_tx_w: f64,
    /// Ambient scattering fraction eta (dimensionless, >= 0).
    pub eta: f64,
    /// Ambient reflection coefficient per tag measurement.
    pub gamma_env: Vec<f64>,
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        if self.tags.is_empty() {
            return Err(Error::InvalidScene("scene needs at least one tag".into()));
        }
        let n = self.tags.len();
        if self.g_tx.len() != n || self.g_rx.len() != n || self.gamma_env.len() != n {
            return Err(Error::InvalidScene(format!(
                "per-tag arrays must match tag count {n} (g_tx {}, g_rx {}, gamma_env {})",
                self.g_tx.len(),
                self.g_rx.len(),
                self.gamma_env.len()
            )));
        }
        if !(self.p_tx_w > 0.0) {
            return Err(Error::InvalidScene(format!(
                "transmit power must be positive, got {}",
                self.p_tx_w
            )));
        }
        if !(self.eta >= 0.0) {
            return Err(Error::InvalidScene(format!(
                "eta must be >= 0, got {}",
                self.eta
            )));
        }
        for (i, tag) in self.tags.iter().enumerate() {
            if !(tag.sigma_m2 > 0.0) {
                return Err(Error::InvalidScene(format!(
                    "tag {i}: sigma must be positive"
                )));
            }
            if self.g_tx[i] <= 0.0 || self.g_rx[i] <= 0.0 {
                return Err(Error::InvalidScene(format!(
                    "tag {i}: gains must be positive"
                )));
            }
            if distance(self.tx_position, tag.position) == 0.0
                || distance(self.rx_position, tag.position) == 0.0
            {
                return Err(Error::InvalidScene(format!(
                    "tag {i} collocated with an antenna"
                )));
            }
        }
        Ok(())
    }

    fn ranges(&self, i: usize) -> (f64, f64) {
        (
            distance(self.tx_position, self.tags[i].position),
            distance(self.rx_position, self.tags[i].position),
        )
    }

    /// Derived circuit for tag `i` with the loss reference at `f_ref`.
    pub fn tag_circuit(&self, i: usize, f_ref: f64) -> Result<CircuitParameters> {
        let tag = &self.tags[i];
        crate::circuit::derive_circuit(&tag.geometry, &tag.material, tag.psi_env, f_ref)
    }
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Geometry-independent link factor for tag `i` at frequency `f`:
/// everything in the budget except `|Gamma|^2`.
pub fn link_factor(scene: &Scene, i: usize, f: f64) -> Result<f64> {
    if i >= scene.tags.len() {
        return Err(Error::InvalidScene(format!("tag index {i} out of range")));
    }
    let (r_tx, r_rx) = scene.ranges(i);
    if r_tx == 0.0 || r_rx == 0.0 {
        return Err(Error::InvalidScene(format!(
            "tag {i} collocated with an antenna"
        )));
    }
    let lambda = C0 / f;
    Ok(scene.p_tx_w * scene.tags[i].sigma_m2 * lambda * lambda
        / (32.0 * std::f64::consts::PI.powi(3) * r_tx * r_tx * r_rx * r_rx)
        * scene.g_tx[i]
        * scene.g_rx[i])
}

/// Received signal power from tag `i` at frequency `f` (W).
pub fn received_power(scene: &Scene, i: usize, f: f64) -> Result<f64> {
    let cp = scene.tag_circuit(i, f)?;
    received_power_with(scene, i, f, &cp)
}

/// Same as [`received_power`] with a pre-derived circuit (hot path).
pub fn received_power_with(
    scene: &Scene,
    i: usize,
    f: f64,
    cp: &CircuitParameters,
) -> Result<f64> {
    let tag = &scene.tags[i];
    let gamma = scattering_coefficient(f, cp, &tag.geometry, &tag.material)?;
    Ok(link_factor(scene, i, f)? * gamma.norm_sqr())
}

/// Interference power on the measurement of tag `i`: reflections from every
/// other tag plus the ambient-clutter term `eta * P_tx * Gamma_env,i`.
pub fn interference_power(scene: &Scene, i: usize, f: f64) -> Result<f64> {
    if i >= scene.tags.len() {
        return Err(Error::InvalidScene(format!("tag index {i} out of range")));
    }
    let mut total = scene.eta * scene.p_tx_w * scene.gamma_env[i];
    for j in 0..scene.tags.len() {
        if j != i {
            total += received_power(scene, j, f)?;
        }
    }
    Ok(total)
}

/// Thermal-noise description: floor = k_B * T * B * NF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    pub temperature_k: f64,
}

impl NoiseModel {
    pub fn floor_w(&self) -> f64 {
        K_B * self.temperature_k * self.bandwidth_hz * 10f64.powf(self.noise_figure_db / 10.0)
    }
}

/// SNR of the tag-`i` measurement against the thermal floor, in dB.
pub fn snr(scene: &Scene, i: usize, f: f64, noise: &NoiseModel) -> Result<f64> {
    if !(noise.bandwidth_hz > 0.0) {
        return Err(Error::InvalidScene(format!(
            "noise bandwidth must be positive, got {}",
            noise.bandwidth_hz
        )));
    }
    let p = received_power(scene, i, f)?;
    Ok(10.0 * (p / noise.floor_w()).log10())
}

/// SINR variant: signal over noise-plus-interference, in dB.
pub fn sinr(scene: &Scene, i: usize, f: f64, noise: &NoiseModel) -> Result<f64> {
    let p = received_power(scene, i, f)?;
    let interference = interference_power(scene, i, f)?;
    Ok(10.0 * (p / (noise.floor_w() + interference)).log10())
}

/// Monostatic maximum range: the `r` with `r_tx = r_rx = r` at which the
/// measurement SNR falls to `snr_threshold_db`:
///
/// `r_max = [P_tx sigma lambda^2 |Gamma|^2 G_tx G_rx /
///           (32 pi^3 P_floor SNR_min)]^(1/4)`.
#[allow(clippy::too_many_arguments)]
pub fn max_range(
    p_tx_w: f64,
    sigma_m2: f64,
    f: f64,
    gamma_abs: f64,
    g_tx: f64,
    g_rx: f64,
    snr_threshold_db: f64,
    noise: &NoiseModel,
) -> Result<f64> {
    let lambda = C0 / f;
    let snr_lin = 10f64.powf(snr_threshold_db / 10.0);
    let numer = p_tx_w * sigma_m2 * lambda * lambda * gamma_abs * gamma_abs * g_tx * g_rx;
    let denom = 32.0 * std::f64::consts::PI.powi(3) * noise.floor_w() * snr_lin;
    let arg = numer / denom;
    if !(arg > 0.0) || !arg.is_finite() {
        return Err(Error::LinkInfeasible(format!(
            "range argument {arg} is not positive and finite"
        )));
    }
    Ok(arg.powf(0.25))
}

/// How synthetic-measurement noise is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSpec {
    /// No perturbation; the measurement is exact.
    None,
    /// Gaussian power perturbation with standard deviation equal to the
    /// thermal floor of the model.
    Thermal(NoiseModel),
    /// Gaussian power perturbation whose standard deviation is the peak
    /// clutter-free signal power divided by the linear SNR.
    RelativeToPeak { snr_db: f64 },
}

/// Swept-frequency measurement of one tag.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedSpectrum {
    pub freq_hz: Vec<f64>,
    pub p_sig_w: Vec<f64>,
    pub p_inf_w: Vec<f64>,
    pub p_noise_w: Vec<f64>,
    pub p_total_w: Vec<f64>,
}

impl ReceivedSpectrum {
    pub fn len(&self) -> usize {
        self.freq_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freq_hz.is_empty()
    }
}

/// Standard normal draw via Box-Muller on a seeded stream.
fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Derives the per-tag noise stream from the master seed so that concurrent
/// generation across tags stays deterministic.
fn tag_stream(seed: u64, tag: usize) -> ChaCha8Rng {
    let mixed = splitmix(seed ^ (tag as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    ChaCha8Rng::seed_from_u64(mixed)
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Synthesizes the swept measurement of tag `i` on `freq_hz`.
///
/// Per frequency: signal via the link budget, interference from the other
/// tags and clutter, and an additive Gaussian perturbation on the power
/// sample. The total is clamped at zero; the stored noise sample is the
/// post-clamp difference so `total = signal + interference + noise` holds
/// pointwise exactly. Reproducible per `(seed, i)`.
pub fn synth_measurement(
    scene: &Scene,
    i: usize,
    freq_hz: &[f64],
    noise: &NoiseSpec,
    seed: u64,
) -> Result<ReceivedSpectrum> {
    scene.validate()?;
    if freq_hz.len() < 2 || freq_hz.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::GridMismatch(
            "frequency grid must be strictly increasing with at least 2 points".into(),
        ));
    }
    if i >= scene.tags.len() {
        return Err(Error::InvalidScene(format!("tag index {i} out of range")));
    }
    let f_ref = 0.5 * (freq_hz[0] + freq_hz[freq_hz.len() - 1]);
    let circuits: Vec<CircuitParameters> = (0..scene.tags.len())
        .map(|j| scene.tag_circuit(j, f_ref))
        .collect::<Result<_>>()?;

    let n = freq_hz.len();
    let mut p_sig = Vec::with_capacity(n);
    let mut p_inf = Vec::with_capacity(n);
    for &f in freq_hz {
        p_sig.push(received_power_with(scene, i, f, &circuits[i])?);
        let mut inf = scene.eta * scene.p_tx_w * scene.gamma_env[i];
        for j in 0..scene.tags.len() {
            if j != i {
                inf += received_power_with(scene, j, f, &circuits[j])?;
            }
        }
        p_inf.push(inf);
    }

    let sigma = match noise {
        NoiseSpec::None => 0.0,
        NoiseSpec::Thermal(nm) => nm.floor_w(),
        NoiseSpec::RelativeToPeak { snr_db } => {
            if snr_db.is_infinite() {
                0.0
            } else {
                let peak = p_sig.iter().cloned().fold(0.0f64, f64::max);
                peak / 10f64.powf(snr_db / 10.0)
            }
        }
    };

    let mut rng = tag_stream(seed, i);
    let mut p_noise = Vec::with_capacity(n);
    let mut p_total = Vec::with_capacity(n);
    for k in 0..n {
        let raw = if sigma > 0.0 {
            sigma * gaussian(&mut rng)
        } else {
            0.0
        };
        let total = (p_sig[k] + p_inf[k] + raw).max(0.0);
        p_total.push(total);
        p_noise.push(total - p_sig[k] - p_inf[k]);
    }
    Ok(ReceivedSpectrum {
        freq_hz: freq_hz.to_vec(),
        p_sig_w: p_sig,
        p_inf_w: p_inf,
        p_noise_w: p_noise,
        p_total_w: p_total,
    })
}

/// Default monostatic-ish single-tag scene used by examples and tests.
pub fn single_tag_scene(psi: f64) -> Scene {
    Scene {
        tags: vec![TagInstance {
            geometry: SrrGeometry::prototype(),
            material: MaterialProperties::prototype(),
            psi_env: psi,
            position: [0.0, 0.0, 0.0],
            sigma_m2: 0.01,
        }],
        tx_position: [0.0, 0.0, 2.0],
        rx_position: [0.05, 0.0, 2.0],
        g_tx: vec![200.0],
        g_rx: vec![200.0],
        p_tx_w: 0.1,
        eta: 0.0,
        gamma_env: vec![0.0],
    }
}

/// Uniform measurement grid helper.
pub fn measurement_grid(band: (f64, f64), points: usize) -> Vec<f64> {
    linspace(band.0, band.1, points)
}
