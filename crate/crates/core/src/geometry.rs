//! Tag geometry and sensitive-material descriptions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// Physical dimensions of one SRR unit cell. All lengths in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SrrGeometry {
    /// Ring side length.
    pub l: f64,
    /// Gap width.
    pub d: f64,
    /// Ring trace width.
    pub s: f64,
    /// Unit-cell pitch, center to center.
    pub w: f64,
    /// Ring metal thickness.
    pub t: f64,
    /// Substrate thickness.
    pub h: f64,
}

impl SrrGeometry {
    /// Reference unit cell: 10.09 mm pitch, 2.4 mm substrate, ring sized for
    /// an absorption dip near 5.25 GHz with the default material.
    pub fn prototype() -> Self {
        SrrGeometry {
            l: 4.85e-3,
            d: 1.1e-3,
            s: 0.96e-3,
            w: 10.09e-3,
            t: 35e-6,
            h: 2.4e-3,
        }
    }

    /// Checks every geometric invariant, naming the violated bound.
    pub fn validate(&self) -> Result<()> {
        let &SrrGeometry { l, d, s, w, t, h } = self;
        let pos = [
            (l, "l"),
            (d, "d"),
            (s, "s"),
            (w, "w"),
            (t, "t"),
            (h, "h"),
        ];
        for (v, name) in pos {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidGeometry(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if d >= l {
            return Err(Error::InvalidGeometry(format!(
                "gap width d must satisfy d < l (d = {d}, l = {l})"
            )));
        }
        if s >= l / 2.0 {
            return Err(Error::InvalidGeometry(format!(
                "trace width s must satisfy s < l/2 (s = {s}, l/2 = {})",
                l / 2.0
            )));
        }
        // Cells must not overlap, and the inter-cell coupling formula needs a
        // positive gap between neighboring rings.
        if w <= l {
            return Err(Error::InvalidGeometry(format!(
                "cell pitch w must satisfy w > l (w = {w}, l = {l})"
            )));
        }
        if t >= l / 10.0 {
            return Err(Error::InvalidGeometry(format!(
                "metal thickness t must satisfy t << l (t = {t}, l/10 = {})",
                l / 10.0
            )));
        }
        Ok(())
    }
}

/// Sensitive-material resistance as a function of the sensed quantity
/// `psi` (percent, 0..=100). Must be strictly monotone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SensitivityCurve {
    /// log R interpolates linearly between the dry (psi = 0) and wet
    /// (psi = 100) endpoints: R(psi) = r_dry * (r_wet/r_dry)^(psi/100).
    LogLinear { r_dry: f64, r_wet: f64 },
    /// Piecewise-linear resistance through (psi, r) anchors sorted by psi.
    PiecewiseLinear { anchors: Vec<(f64, f64)> },
}

impl SensitivityCurve {
    pub fn validate(&self) -> Result<()> {
        match self {
            SensitivityCurve::LogLinear { r_dry, r_wet } => {
                if !(*r_dry > 0.0) || !(*r_wet > 0.0) {
                    return Err(Error::InvalidMaterial(format!(
                        "sensitivity endpoints must be positive (r_dry = {r_dry}, r_wet = {r_wet})"
                    )));
                }
                if r_dry == r_wet {
                    return Err(Error::InvalidMaterial(
                        "sensitivity curve must be strictly monotone; r_dry == r_wet".into(),
                    ));
                }
                Ok(())
            }
            SensitivityCurve::PiecewiseLinear { anchors } => {
                if anchors.len() < 2 {
                    return Err(Error::InvalidMaterial(
                        "piecewise sensitivity curve needs at least two anchors".into(),
                    ));
                }
                let increasing = anchors[1].1 > anchors[0].1;
                for pair in anchors.windows(2) {
                    let (p0, r0) = pair[0];
                    let (p1, r1) = pair[1];
                    if p1 <= p0 {
                        return Err(Error::InvalidMaterial(format!(
                            "anchor psi values must strictly increase ({p0} then {p1})"
                        )));
                    }
                    if r0 <= 0.0 || r1 <= 0.0 {
                        return Err(Error::InvalidMaterial(
                            "anchor resistances must be positive".into(),
                        ));
                    }
                    if (r1 > r0) != increasing || r1 == r0 {
                        return Err(Error::InvalidMaterial(
                            "anchor resistances must be strictly monotone in psi".into(),
                        ));
                    }
                }
                Ok(())
            }
        }
    }

    /// Evaluates the curve at `psi` percent.
    pub fn resistance(&self, psi: f64) -> Result<f64> {
        if !(0.0..=100.0).contains(&psi) {
            return Err(Error::InvalidMaterial(format!(
                "psi = {psi} outside the calibrated range 0..=100"
            )));
        }
        match self {
            SensitivityCurve::LogLinear { r_dry, r_wet } => {
                Ok(r_dry * (r_wet / r_dry).powf(psi / 100.0))
            }
            SensitivityCurve::PiecewiseLinear { anchors } => {
                let first = anchors.first().expect("validated");
                let last = anchors.last().expect("validated");
                if psi <= first.0 {
                    return Ok(first.1);
                }
                if psi >= last.0 {
                    return Ok(last.1);
                }
                for pair in anchors.windows(2) {
                    let (p0, r0) = pair[0];
                    let (p1, r1) = pair[1];
                    if psi <= p1 {
                        return Ok(r0 + (r1 - r0) * (psi - p0) / (p1 - p0));
                    }
                }
                unreachable!("psi covered by anchor span")
            }
        }
    }
}

/// Substrate permittivity and gap-material sensitivity of one tag.
///
/// The imaginary part of `eps_r` is stored with the lossy-medium sign
/// convention Im(eps_r) <= 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialProperties {
    /// Complex relative permittivity of the substrate.
    pub eps_re: f64,
    /// Loss part, stored as a non-negative loss tangent.
    pub tan_delta: f64,
    /// Resistance of the sensitive material bridging the gap.
    pub sensitivity: SensitivityCurve,
}

impl MaterialProperties {
    /// Default lossy substrate with a hygristor-style gap load whose
    /// resistance falls log-linearly from 30 kohm (dry) to 800 ohm (wet).
    pub fn prototype() -> Self {
        MaterialProperties {
            eps_re: 4.67,
            tan_delta: 0.006,
            sensitivity: SensitivityCurve::LogLinear {
                r_dry: 30.0e3,
                r_wet: 800.0,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_re >= 1.0) {
            return Err(Error::InvalidMaterial(format!(
                "Re(eps_r) must be >= 1, got {}",
                self.eps_re
            )));
        }
        if !(self.tan_delta >= 0.0) || self.tan_delta >= 1.0 {
            return Err(Error::InvalidMaterial(format!(
                "loss tangent must lie in [0, 1), got {}",
                self.tan_delta
            )));
        }
        self.sensitivity.validate()
    }

    /// Complex relative permittivity, Im <= 0.
    pub fn eps_r(&self) -> Complex64 {
        Complex64::new(self.eps_re, -self.eps_re * self.tan_delta)
    }

    /// Sensitive-material resistance at environmental state `psi` percent.
    pub fn sensitive_resistance(&self, psi: f64) -> Result<f64> {
        self.sensitivity.resistance(psi)
    }
}
