//! Run configuration: a versioned TOML schema with strict unknown-key
//! rejection, plus unit-suffix parsing for dimensioned CLI values.
//!
//! Files carry SI units only (meters, hertz, watts); field names spell the
//! unit. The CLI accepts suffixed quantities (`0.8mm`, `5.25GHz`, `10mW`)
//! and converts on entry.

use serde::{Deserialize, Serialize};

use crate::circuit::TagModel;
use crate::design::{AxisRange, DesignSpace};
use crate::error::Error;
use crate::experiment::{DetectionPath, GridExperimentConfig, MeasurementMode, SweepParameter};
use crate::geometry::{MaterialProperties, SensitivityCurve, SrrGeometry};
use crate::link::{NoiseModel, NoiseSpec, Scene, TagInstance};
use crate::Result;

/// Supported schema version.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TagSection {
    pub l_m: f64,
    pub d_m: f64,
    pub s_m: f64,
    pub w_m: f64,
    pub t_m: f64,
    pub h_m: f64,
}

impl Default for TagSection {
    fn default() -> Self {
        let g = SrrGeometry::prototype();
        TagSection {
            l_m: g.l,
            d_m: g.d,
            s_m: g.s,
            w_m: g.w,
            t_m: g.t,
            h_m: g.h,
        }
    }
}

impl TagSection {
    pub fn geometry(&self) -> SrrGeometry {
        SrrGeometry {
            l: self.l_m,
            d: self.d_m,
            s: self.s_m,
            w: self.w_m,
            t: self.t_m,
            h: self.h_m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSection {
    pub eps_re: f64,
    pub tan_delta: f64,
    pub sensitivity: SensitivityCurve,
}

impl Default for MaterialSection {
    fn default() -> Self {
        let m = MaterialProperties::prototype();
        MaterialSection {
            eps_re: m.eps_re,
            tan_delta: m.tan_delta,
            sensitivity: m.sensitivity,
        }
    }
}

impl MaterialSection {
    pub fn material(&self) -> MaterialProperties {
        MaterialProperties {
            eps_re: self.eps_re,
            tan_delta: self.tan_delta,
            sensitivity: self.sensitivity.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandSection {
    pub lo_hz: f64,
    pub hi_hz: f64,
    pub points: usize,
}

impl Default for BandSection {
    fn default() -> Self {
        BandSection {
            lo_hz: 4.8e9,
            hi_hz: 5.8e9,
            points: crate::circuit::DEFAULT_GRID_POINTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: SweepParameter,
    /// Values in SI units (meters or ohms).
    pub values: Vec<f64>,
    #[serde(default = "default_psi_ref")]
    pub psi_ref: f64,
}

fn default_psi_ref() -> f64 {
    50.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSection {
    pub d: AxisRange,
    pub s: AxisRange,
    pub h: AxisRange,
    pub w: AxisRange,
    pub l: AxisRange,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default)]
    pub psi_lo: f64,
    #[serde(default = "default_psi_hi")]
    pub psi_hi: f64,
}

fn default_budget() -> usize {
    200
}

fn default_psi_hi() -> f64 {
    100.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSection {
    /// Environmental state per tag (percent).
    pub psi: Vec<f64>,
    /// Tag positions in meters.
    pub positions: Vec<[f64; 3]>,
    pub tx_position: [f64; 3],
    pub rx_position: [f64; 3],
    pub g_tx: Vec<f64>,
    pub g_rx: Vec<f64>,
    pub p_tx_w: f64,
    #[serde(default)]
    pub eta: f64,
    #[serde(default)]
    pub gamma_env: Vec<f64>,
    #[serde(default = "default_sigma")]
    pub sigma_m2: f64,
    /// Which tag the measurement tracks.
    #[serde(default)]
    pub tag_index: usize,
    #[serde(default = "default_noise")]
    pub noise: NoiseSpec,
}

fn default_sigma() -> f64 {
    0.01
}

fn default_noise() -> NoiseSpec {
    NoiseSpec::None
}

impl Default for SceneSection {
    fn default() -> Self {
        SceneSection {
            psi: vec![50.0],
            positions: vec![[0.0, 0.0, 0.0]],
            tx_position: [0.0, 0.0, 2.0],
            rx_position: [0.05, 0.0, 2.0],
            g_tx: vec![200.0],
            g_rx: vec![200.0],
            p_tx_w: 0.1,
            eta: 0.0,
            gamma_env: vec![0.0],
            sigma_m2: 0.01,
            tag_index: 0,
            noise: NoiseSpec::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSection {
    pub p_tx_w: Vec<f64>,
    pub gain: Vec<f64>,
    pub gamma_abs: f64,
    #[serde(default = "default_sigma")]
    pub sigma_m2: f64,
    pub f_hz: f64,
    pub snr_threshold_db: f64,
    pub noise_model: NoiseModel,
}

impl Default for RangeSection {
    fn default() -> Self {
        RangeSection {
            p_tx_w: vec![0.1, 1.6],
            gain: vec![10.0, 100.0],
            gamma_abs: 0.5,
            sigma_m2: 0.01,
            f_hz: 5.25e9,
            snr_threshold_db: 10.0,
            noise_model: NoiseModel {
                bandwidth_hz: 1.0e6,
                noise_figure_db: 5.0,
                temperature_k: 290.0,
            },
        }
    }
}

/// Top-level run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: Option<u32>,
    #[serde(default)]
    pub tag: TagSection,
    #[serde(default)]
    pub material: MaterialSection,
    #[serde(default)]
    pub band: BandSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub design_space: Option<DesignSection>,
    #[serde(default)]
    pub scene: Option<SceneSection>,
    #[serde(default)]
    pub grid: Option<GridSection>,
    #[serde(default)]
    pub range: Option<RangeSection>,
}

/// Same surface as [`GridExperimentConfig`] with defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub rows: usize,
    pub cols: usize,
    pub pitch_m: f64,
    pub humidity_pct: Vec<f64>,
    pub standoff_m: f64,
    pub g_main: f64,
    pub g_side: f64,
    pub p_tx_w: f64,
    pub sigma_m2: f64,
    pub eta: f64,
    pub gamma_env: f64,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub mode: MeasurementMode,
    pub detection: DetectionPath,
    pub prominence: f64,
    pub calibration_points: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        let g = GridExperimentConfig::default();
        GridSection {
            rows: g.rows,
            cols: g.cols,
            pitch_m: g.pitch_m,
            humidity_pct: g.humidity_pct,
            standoff_m: g.standoff_m,
            g_main: g.g_main,
            g_side: g.g_side,
            p_tx_w: g.p_tx_w,
            sigma_m2: g.sigma_m2,
            eta: g.eta,
            gamma_env: g.gamma_env,
            snr_db: g.snr_db,
            trials: g.trials,
            mode: g.mode,
            detection: g.detection,
            prominence: g.prominence,
            calibration_points: g.calibration_points,
        }
    }
}

impl RunConfig {
    /// Parses and validates a TOML configuration, reporting every violation.
    pub fn from_toml(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = toml::from_str(text)
            .map_err(|e| Error::InvalidConfig(vec![format!("toml: {e}")]))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Validates all sections, returning the full violation list.
    pub fn validate(&self) -> Result<()> {
        let mut problems: Vec<String> = Vec::new();
        match self.schema_version {
            Some(SCHEMA_VERSION) => {}
            Some(v) => problems.push(format!(
                "schema_version {v} not supported (expected {SCHEMA_VERSION})"
            )),
            None => problems.push(format!(
                "schema_version missing (expected {SCHEMA_VERSION})"
            )),
        }
        if let Err(e) = self.tag.geometry().validate() {
            problems.push(e.to_string());
        }
        if let Err(e) = self.material.material().validate() {
            problems.push(e.to_string());
        }
        if !(self.band.hi_hz > self.band.lo_hz) || !(self.band.lo_hz > 0.0) {
            problems.push(format!(
                "band must satisfy 0 < lo < hi, got {}..{}",
                self.band.lo_hz, self.band.hi_hz
            ));
        }
        if self.band.points < 16 {
            problems.push(format!("band.points must be >= 16, got {}", self.band.points));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                problems.push("sweep.values must not be empty".into());
            }
            if !(0.0..=100.0).contains(&sweep.psi_ref) {
                problems.push(format!("sweep.psi_ref {} outside 0..=100", sweep.psi_ref));
            }
        }
        if let Some(scene) = &self.scene {
            if let Err(e) = self.build_scene(scene) {
                problems.push(e.to_string());
            }
        }
        if let Some(grid) = &self.grid {
            if let Err(e) = self.grid_experiment(grid) {
                problems.push(e.to_string());
            }
        }
        if let Some(range) = &self.range {
            if range.p_tx_w.is_empty() || range.gain.is_empty() {
                problems.push("range.p_tx_w and range.gain must not be empty".into());
            }
            if !(range.gamma_abs >= 0.0) {
                problems.push("range.gamma_abs must be >= 0".into());
            }
        }
        if let Some(ds) = &self.design_space {
            if let Err(e) = self.design_space(ds).and_then(|d| d.validate()) {
                problems.push(e.to_string());
            }
            if ds.budget == 0 {
                problems.push("design_space.budget must be >= 1".into());
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(problems))
        }
    }

    /// Tag model from the tag/material/band sections.
    pub fn tag_model(&self) -> TagModel {
        let mut model = TagModel::new(
            self.tag.geometry(),
            self.material.material(),
            (self.band.lo_hz, self.band.hi_hz),
        );
        model.grid_points = self.band.points;
        model
    }

    /// Scene assembled from a scene section and the configured tag.
    pub fn build_scene(&self, s: &SceneSection) -> Result<Scene> {
        let n = s.psi.len();
        if s.positions.len() != n {
            return Err(Error::InvalidScene(format!(
                "scene.positions has {} entries for {} tags",
                s.positions.len(),
                n
            )));
        }
        let gamma_env = if s.gamma_env.is_empty() {
            vec![0.0; n]
        } else {
            s.gamma_env.clone()
        };
        let geometry = self.tag.geometry();
        let material = self.material.material();
        let scene = Scene {
            tags: (0..n)
                .map(|i| TagInstance {
                    geometry,
                    material: material.clone(),
                    psi_env: s.psi[i],
                    position: s.positions[i],
                    sigma_m2: s.sigma_m2,
                })
                .collect(),
            tx_position: s.tx_position,
            rx_position: s.rx_position,
            g_tx: s.g_tx.clone(),
            g_rx: s.g_rx.clone(),
            p_tx_w: s.p_tx_w,
            eta: s.eta,
            gamma_env,
        };
        scene.validate()?;
        if s.tag_index >= n {
            return Err(Error::InvalidScene(format!(
                "scene.tag_index {} out of range for {} tags",
                s.tag_index, n
            )));
        }
        Ok(scene)
    }

    /// Grid experiment configuration with the file's band and seed applied
    /// by the caller.
    pub fn grid_experiment(&self, g: &GridSection) -> Result<GridExperimentConfig> {
        let cfg = GridExperimentConfig {
            rows: g.rows,
            cols: g.cols,
            pitch_m: g.pitch_m,
            humidity_pct: g.humidity_pct.clone(),
            standoff_m: g.standoff_m,
            g_main: g.g_main,
            g_side: g.g_side,
            p_tx_w: g.p_tx_w,
            sigma_m2: g.sigma_m2,
            eta: g.eta,
            gamma_env: g.gamma_env,
            snr_db: g.snr_db.clone(),
            trials: g.trials,
            seed: 0,
            mode: g.mode,
            detection: g.detection,
            band: (self.band.lo_hz, self.band.hi_hz),
            grid_points: self.band.points,
            prominence: g.prominence,
            calibration_points: g.calibration_points,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Design space from the design section plus the shared material/band.
    pub fn design_space(&self, d: &DesignSection) -> Result<DesignSpace> {
        Ok(DesignSpace {
            d: d.d,
            s: d.s,
            h: d.h,
            w: d.w,
            l: d.l,
            t: self.tag.t_m,
            material: self.material.material(),
            band: (self.band.lo_hz, self.band.hi_hz),
            env_pair: (d.psi_lo, d.psi_hi),
        })
    }
}

/// Parses a dimensioned CLI quantity with an explicit unit suffix.
///
/// Lengths: `m`, `cm`, `mm`, `um`. Frequencies: `Hz`, `kHz`, `MHz`, `GHz`.
/// Powers: `W`, `mW`, `uW`. Resistances: `ohm`, `kohm`. The bare number is
/// rejected so units are never guessed.
pub fn parse_quantity(text: &str) -> Result<(f64, &'static str)> {
    let t = text.trim();
    let suffixes: &[(&str, f64, &'static str)] = &[
        ("GHz", 1e9, "hz"),
        ("MHz", 1e6, "hz"),
        ("kHz", 1e3, "hz"),
        ("Hz", 1.0, "hz"),
        ("kohm", 1e3, "ohm"),
        ("ohm", 1.0, "ohm"),
        ("um", 1e-6, "m"),
        ("mm", 1e-3, "m"),
        ("cm", 1e-2, "m"),
        ("mW", 1e-3, "w"),
        ("uW", 1e-6, "w"),
        ("W", 1.0, "w"),
        ("m", 1.0, "m"),
    ];
    for (suffix, scale, dim) in suffixes {
        if let Some(num) = t.strip_suffix(suffix) {
            let v: f64 = num.trim().parse().map_err(|_| {
                Error::InvalidConfig(vec![format!("cannot parse number in quantity '{t}'")])
            })?;
            return Ok((v * scale, dim));
        }
    }
    Err(Error::InvalidConfig(vec![format!(
        "quantity '{t}' is missing a unit suffix (m/mm/um, Hz/kHz/MHz/GHz, W/mW/uW, ohm/kohm)"
    )]))
}

/// Parses a comma-separated list of quantities sharing one dimension.
pub fn parse_quantity_list(text: &str, expect_dim: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let (v, dim) = parse_quantity(part)?;
        if dim != expect_dim {
            return Err(Error::InvalidConfig(vec![format!(
                "quantity '{part}' has dimension {dim}, expected {expect_dim}"
            )]));
        }
        out.push(v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_documented_defaults() {
        let cfg = RunConfig::from_toml("schema_version = 1\n").unwrap();
        assert_eq!(cfg.tag.geometry(), SrrGeometry::prototype());
        assert_eq!(cfg.band.points, 1001);
        assert_eq!(cfg.band.lo_hz, 4.8e9);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::from_toml("schema_version = 1\nbanana = 3\n").unwrap_err();
        assert!(err.to_string().contains("banana"), "{err}");
    }

    #[test]
    fn schema_version_is_mandatory_and_checked() {
        assert!(RunConfig::from_toml("").is_err());
        let err = RunConfig::from_toml("schema_version = 99\n").unwrap_err();
        assert!(err.to_string().contains("schema_version 99"), "{err}");
    }

    #[test]
    fn invalid_geometry_is_named() {
        let text = r#"
schema_version = 1
[tag]
l_m = 4.85e-3
d_m = 6.0e-3
s_m = 0.96e-3
w_m = 10.09e-3
t_m = 35e-6
h_m = 2.4e-3
"#;
        let err = RunConfig::from_toml(text).unwrap_err();
        assert!(err.to_string().contains("d < l"), "{err}");
    }

    #[test]
    fn all_violations_are_listed() {
        let text = r#"
schema_version = 1
[band]
lo_hz = 5.0e9
hi_hz = 4.0e9
points = 4
"#;
        let err = RunConfig::from_toml(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("band must satisfy"), "{msg}");
        assert!(msg.contains("points must be"), "{msg}");
    }

    #[test]
    fn round_trip_preserves_config() {
        let mut cfg = RunConfig::default();
        cfg.schema_version = Some(SCHEMA_VERSION);
        cfg.sweep = Some(SweepSection {
            parameter: SweepParameter::D,
            values: vec![0.8e-3, 1.0e-3],
            psi_ref: 50.0,
        });
        let text = cfg.to_toml();
        let back = RunConfig::from_toml(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn quantities_need_unit_suffixes() {
        assert!(parse_quantity("1.2").is_err());
        assert_eq!(parse_quantity("1.2mm").unwrap(), (1.2e-3, "m"));
        assert_eq!(parse_quantity("5.25GHz").unwrap(), (5.25e9, "hz"));
        assert_eq!(parse_quantity("10mW").unwrap(), (0.01, "w"));
        assert_eq!(parse_quantity("2kohm").unwrap(), (2000.0, "ohm"));
        let list = parse_quantity_list("0.8mm, 1.0mm,1.2mm", "m").unwrap();
        assert_eq!(list, vec![0.8e-3, 1.0e-3, 1.2e-3]);
        assert!(parse_quantity_list("0.8mm,5GHz", "m").is_err());
    }
}
