//! End-to-end studies: component-sweep trend tables, the humidity-grid
//! estimation experiment, and the transmission-range study.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{canonical_resonance, derive_circuit, TagModel, DEFAULT_GRID_POINTS};
use crate::detect::{
    background_subtract, classify_humidity, equalize_link_tilt, peak_fit_with, pole_resonance,
    CalibrationCurve, DetectionResult,
};
use crate::error::Error;
use crate::geometry::SensitivityCurve;
use crate::link::{max_range, measurement_grid, synth_measurement, NoiseModel, NoiseSpec, Scene,
    TagInstance};
use crate::Result;

/// Which circuit input a component sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Sensitive-material resistance (ohm), overriding the humidity curve.
    RO,
    /// Gap width (m).
    D,
    /// Substrate thickness (m).
    H,
    /// Trace width (m).
    S,
}

impl SweepParameter {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParameter::RO => "r_o",
            SweepParameter::D => "d",
            SweepParameter::H => "h",
            SweepParameter::S => "s",
        }
    }
}

/// One row of a component-sweep table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrendRow {
    pub value: f64,
    pub f0_hz: f64,
    pub q: f64,
    pub gamma_min: f64,
    pub r_total_ohm: f64,
}

/// Trend table for one swept component.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendTable {
    pub parameter: SweepParameter,
    pub rows: Vec<TrendRow>,
    /// Values skipped because they violated an invariant or lost the dip,
    /// with diagnostics.
    pub skipped: Vec<(f64, String)>,
}

/// Sweeps one component of the base tag and tabulates the canonical
/// resonance per value. Invalid values are skipped with a diagnostic rather
/// than aborting the sweep.
pub fn sweep_component(
    parameter: SweepParameter,
    values: &[f64],
    base: &TagModel,
    psi_ref: f64,
) -> Result<TrendTable> {
    if values.is_empty() {
        return Err(Error::InvalidConfig(vec![
            "component sweep needs at least one value".into(),
        ]));
    }
    let mut rows = Vec::with_capacity(values.len());
    let mut skipped = Vec::new();
    for &v in values {
        let run = || -> Result<TrendRow> {
            let mut geom = base.geometry;
            let mut material = base.material.clone();
            match parameter {
                SweepParameter::D => geom.d = v,
                SweepParameter::H => geom.h = v,
                SweepParameter::S => geom.s = v,
                SweepParameter::RO => {
                    if !(v > 0.0) {
                        return Err(Error::InvalidMaterial(format!(
                            "swept R_o must be positive, got {v}"
                        )));
                    }
                    // Pin the sensitive resistance to the swept value.
                    material.sensitivity = SensitivityCurve::PiecewiseLinear {
                        anchors: vec![(0.0, v), (100.0, v * (1.0 + 1e-12))],
                    };
                }
            }
            let cp = derive_circuit(&geom, &material, psi_ref, base.band_center())?;
            let res = canonical_resonance(&cp, &geom, &material, base.band, base.grid_points)?;
            Ok(TrendRow {
                value: v,
                f0_hz: res.f0_hz,
                q: res.q,
                gamma_min: res.gamma_min,
                r_total_ohm: res.r_total,
            })
        };
        match run() {
            Ok(row) => rows.push(row),
            Err(e) => skipped.push((v, e.to_string())),
        }
    }
    Ok(TrendTable {
        parameter,
        rows,
        skipped,
    })
}

/// Which estimator the grid experiment runs on each measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionPath {
    PeakFit,
    MatrixPencil,
}

/// How cells are illuminated during a measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementMode {
    /// All other cells reflect during each measurement (worst case).
    Simultaneous,
    /// Cells are measured one at a time; no inter-cell interference.
    Sequenced,
}

/// Configuration of the humidity-grid experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridExperimentConfig {
    pub rows: usize,
    pub cols: usize,
    /// Cell pitch in meters.
    pub pitch_m: f64,
    /// Ground-truth humidity per cell, row-major, percent.
    pub humidity_pct: Vec<f64>,
    /// Transceiver standoff from the wall plane (m).
    pub standoff_m: f64,
    /// Main-beam linear gain toward the measured cell.
    pub g_main: f64,
    /// Sidelobe linear gain toward every other cell.
    pub g_side: f64,
    /// Transmit power (W).
    pub p_tx_w: f64,
    /// Tag radar cross-section (m^2).
    pub sigma_m2: f64,
    /// Ambient scattering fraction.
    pub eta: f64,
    /// Ambient reflection coefficient (same for every measurement).
    pub gamma_env: f64,
    /// Measurement SNRs in dB; `inf` runs the noiseless case.
    pub snr_db: Vec<f64>,
    /// Trials per SNR.
    pub trials: usize,
    /// Master seed.
    pub seed: u64,
    pub mode: MeasurementMode,
    pub detection: DetectionPath,
    /// Measurement band (Hz).
    pub band: (f64, f64),
    /// Grid points per sweep.
    pub grid_points: usize,
    /// Dip prominence threshold for the peak-fit path.
    pub prominence: f64,
    /// Calibration anchors generated from the circuit model.
    pub calibration_points: usize,
}

impl Default for GridExperimentConfig {
    fn default() -> Self {
        GridExperimentConfig {
            rows: 4,
            cols: 4,
            pitch_m: 0.5,
            humidity_pct: vec![
                5.0, 15.0, 25.0, 35.0, 45.0, 55.0, 65.0, 75.0, 85.0, 95.0, 12.0, 38.0, 62.0, 88.0,
                28.0, 72.0,
            ],
            standoff_m: 2.0,
            g_main: 200.0,
            g_side: 0.5,
            p_tx_w: 0.1,
            sigma_m2: 0.01,
            eta: 0.05,
            gamma_env: 0.1,
            snr_db: vec![f64::INFINITY, 40.0, 30.0, 20.0, 10.0],
            trials: 10,
            seed: 1,
            mode: MeasurementMode::Simultaneous,
            detection: DetectionPath::PeakFit,
            band: (4.8e9, 5.8e9),
            grid_points: DEFAULT_GRID_POINTS,
            prominence: 0.05,
            calibration_points: 21,
        }
    }
}

impl GridExperimentConfig {
    pub fn cells(&self) -> usize {
        self.rows * self.cols
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.rows == 0 || self.cols == 0 {
            problems.push("grid dims must be positive".into());
        }
        if self.humidity_pct.len() != self.cells() {
            problems.push(format!(
                "humidity list has {} entries for {} cells",
                self.humidity_pct.len(),
                self.cells()
            ));
        }
        for (i, &h) in self.humidity_pct.iter().enumerate() {
            if !(0.0..=100.0).contains(&h) {
                problems.push(format!("cell {i}: humidity {h} outside 0..=100"));
            }
        }
        if self.trials == 0 {
            problems.push("trial count must be >= 1".into());
        }
        if !(self.pitch_m > 0.0) {
            problems.push("pitch must be positive".into());
        }
        if self.snr_db.is_empty() {
            problems.push("snr list must not be empty".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(problems))
        }
    }

    fn cell_position(&self, idx: usize) -> [f64; 3] {
        let r = (idx / self.cols) as f64;
        let c = (idx % self.cols) as f64;
        let x0 = -0.5 * (self.cols as f64 - 1.0) * self.pitch_m;
        let y0 = -0.5 * (self.rows as f64 - 1.0) * self.pitch_m;
        [x0 + c * self.pitch_m, y0 + r * self.pitch_m, 0.0]
    }

    /// Scene for the measurement of `cell`: main-beam gain toward it,
    /// sidelobe gain toward every other cell.
    fn scene_for(&self, cell: usize, tag: &TagModel) -> Scene {
        let cells = self.cells();
        let tags = (0..cells)
            .map(|i| TagInstance {
                geometry: tag.geometry,
                material: tag.material.clone(),
                psi_env: self.humidity_pct[i],
                position: self.cell_position(i),
                sigma_m2: self.sigma_m2,
            })
            .collect();
        let gains: Vec<f64> = (0..cells)
            .map(|i| if i == cell { self.g_main } else { self.g_side })
            .collect();
        Scene {
            tags,
            tx_position: [0.0, 0.0, self.standoff_m],
            rx_position: [0.05, 0.0, self.standoff_m],
            g_tx: gains.clone(),
            g_rx: gains,
            p_tx_w: self.p_tx_w,
            eta: self.eta,
            gamma_env: vec![self.gamma_env; cells],
        }
    }
}

/// Outcome of one cell measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellOutcome {
    pub cell: usize,
    pub truth_category: u8,
    pub result: Option<DetectionResult>,
}

/// Aggregated report of the grid experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub snr_db: Vec<f64>,
    /// Accuracy per SNR, averaged over trials and cells.
    pub accuracy: Vec<f64>,
    /// 10x10 confusion matrix per SNR: `confusion[snr][truth][est]`.
    pub confusion: Vec<[[u32; 10]; 10]>,
    /// Per-trial accuracy, `per_trial_accuracy[snr][trial]`.
    pub per_trial_accuracy: Vec<Vec<f64>>,
    /// Cells whose link failed per SNR (counted, not fatal).
    pub failed_cells: Vec<u32>,
    /// Per-cell outcomes of the first trial at the first SNR.
    pub first_trial: Vec<CellOutcome>,
    /// Calibration used for classification.
    pub calibration: CalibrationCurve,
}

fn truth_category(psi: f64) -> u8 {
    ((psi / 10.0).floor() as i64).clamp(0, 9) as u8
}

/// Runs the grid experiment: for each SNR, trial, and cell the pipeline is
/// humidity -> R_o -> scene -> measurement -> background subtraction ->
/// estimator -> classification. Deterministic for a fixed master seed; cells
/// and trials evaluate in parallel with index-ordered aggregation.
pub fn run_grid_experiment(
    cfg: &GridExperimentConfig,
    tag: &TagModel,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut tag = tag.clone();
    tag.band = cfg.band;
    tag.grid_points = cfg.grid_points;
    let calibration = CalibrationCurve::from_tag(&tag, cfg.calibration_points)?;
    let grid = measurement_grid(cfg.band, cfg.grid_points);
    let cells = cfg.cells();

    // Empty-scene totals depend only on the clutter term, which is flat, but
    // keep the general path: a no-tag scene measurement per cell.
    let clutter = cfg.eta * cfg.p_tx_w * cfg.gamma_env;

    let mut accuracy = Vec::with_capacity(cfg.snr_db.len());
    let mut per_trial_accuracy = Vec::with_capacity(cfg.snr_db.len());
    let mut confusion = Vec::with_capacity(cfg.snr_db.len());
    let mut failed_cells = Vec::with_capacity(cfg.snr_db.len());
    let mut first_trial = Vec::new();

    for (snr_idx, &snr_db) in cfg.snr_db.iter().enumerate() {
        let jobs: Vec<(usize, usize)> = (0..cfg.trials)
            .flat_map(|t| (0..cells).map(move |c| (t, c)))
            .collect();
        let outcomes: Vec<(usize, CellOutcome)> = jobs
            .par_iter()
            .map(|&(trial, cell)| {
                let outcome = measure_cell(cfg, &tag, &grid, &calibration, clutter, snr_db,
                    trial, cell, snr_idx);
                (trial, outcome)
            })
            .collect();

        let mut conf = [[0u32; 10]; 10];
        let mut correct = 0u64;
        let mut total = 0u64;
        let mut failed = 0u32;
        let mut trial_correct = vec![0u32; cfg.trials];
        let mut trial_total = vec![0u32; cfg.trials];
        for (trial, o) in &outcomes {
            match &o.result {
                Some(r) => {
                    conf[o.truth_category as usize][r.category as usize] += 1;
                    total += 1;
                    trial_total[*trial] += 1;
                    if r.category == o.truth_category {
                        correct += 1;
                        trial_correct[*trial] += 1;
                    }
                }
                None => failed += 1,
            }
            if snr_idx == 0 && *trial == 0 {
                first_trial.push(*o);
            }
        }
        accuracy.push(if total > 0 {
            correct as f64 / total as f64
        } else {
            0.0
        });
        per_trial_accuracy.push(
            trial_correct
                .iter()
                .zip(&trial_total)
                .map(|(&c, &t)| if t > 0 { c as f64 / t as f64 } else { 0.0 })
                .collect(),
        );
        confusion.push(conf);
        failed_cells.push(failed);
    }
    first_trial.sort_by_key(|o| o.cell);
    Ok(ExperimentReport {
        snr_db: cfg.snr_db.clone(),
        accuracy,
        per_trial_accuracy,
        confusion,
        failed_cells,
        first_trial,
        calibration,
    })
}

#[allow(clippy::too_many_arguments)]
fn measure_cell(
    cfg: &GridExperimentConfig,
    tag: &TagModel,
    grid: &[f64],
    calibration: &CalibrationCurve,
    clutter: f64,
    snr_db: f64,
    trial: usize,
    cell: usize,
    snr_idx: usize,
) -> CellOutcome {
    let truth = truth_category(cfg.humidity_pct[cell]);
    let mut scene = cfg.scene_for(cell, tag);
    if cfg.mode == MeasurementMode::Sequenced {
        // Only the measured cell reflects: single-tag scene.
        let t = scene.tags[cell].clone();
        scene.tags = vec![t];
        scene.g_tx = vec![cfg.g_main];
        scene.g_rx = vec![cfg.g_main];
        scene.gamma_env = vec![cfg.gamma_env];
    }
    let tag_index = if cfg.mode == MeasurementMode::Sequenced {
        0
    } else {
        cell
    };
    let noise = if snr_db.is_infinite() {
        NoiseSpec::None
    } else {
        NoiseSpec::RelativeToPeak { snr_db }
    };
    // Deterministic per (snr, trial, cell) stream.
    let seed = cfg
        .seed
        .wrapping_add((snr_idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add((trial as u64).wrapping_mul(0xD1B5_4A32_D192_ED03))
        .wrapping_add((cell as u64).wrapping_mul(0x8CB9_2BA7_2F3D_8DD7));
    let run = || -> Result<DetectionResult> {
        let meas = synth_measurement(&scene, tag_index, grid, &noise, seed)?;
        // Empty-scene measurement: clutter only, no tags, no noise seed reuse.
        let empty = crate::link::ReceivedSpectrum {
            freq_hz: meas.freq_hz.clone(),
            p_sig_w: vec![0.0; grid.len()],
            p_inf_w: vec![clutter; grid.len()],
            p_noise_w: vec![0.0; grid.len()],
            p_total_w: vec![clutter; grid.len()],
        };
        let cal = equalize_link_tilt(&background_subtract(&meas, &empty)?);
        let (f0_hat, q_hat) = match cfg.detection {
            DetectionPath::PeakFit => peak_fit_with(&cal, cfg.prominence)?,
            DetectionPath::MatrixPencil => pole_resonance(&cal)?,
        };
        Ok(classify_humidity(f0_hat, q_hat, calibration))
    };
    CellOutcome {
        cell,
        truth_category: truth,
        result: run().ok(),
    }
}

/// One row of the range study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RangeRow {
    pub p_tx_w: f64,
    pub gain: f64,
    pub gamma_abs: f64,
    /// None marks an infeasible link.
    pub r_max_m: Option<f64>,
}

/// Tabulates the maximum monostatic range over a (P_tx, gain) grid for a
/// fixed tag reflectivity, and numerically verifies the fourth-root power
/// law on the way.
pub fn range_study(
    p_tx_values: &[f64],
    gain_values: &[f64],
    gamma_abs: f64,
    sigma_m2: f64,
    f: f64,
    snr_threshold_db: f64,
    noise: &NoiseModel,
) -> Result<Vec<RangeRow>> {
    let mut rows = Vec::new();
    for &p in p_tx_values {
        for &g in gain_values {
            let r = max_range(p, sigma_m2, f, gamma_abs, g, g, snr_threshold_db, noise).ok();
            rows.push(RangeRow {
                p_tx_w: p,
                gain: g,
                gamma_abs,
                r_max_m: r,
            });
        }
    }
    // Spot-check the fourth-root law between the first two power levels.
    if p_tx_values.len() >= 2 && !gain_values.is_empty() {
        let g = gain_values[0];
        if let (Ok(r1), Ok(r2)) = (
            max_range(p_tx_values[0], sigma_m2, f, gamma_abs, g, g, snr_threshold_db, noise),
            max_range(p_tx_values[1], sigma_m2, f, gamma_abs, g, g, snr_threshold_db, noise),
        ) {
            let expect = (p_tx_values[1] / p_tx_values[0]).powf(0.25);
            if ((r2 / r1) / expect - 1.0).abs() > 1e-9 {
                return Err(Error::LinkInfeasible(
                    "range table violates the fourth-root power law".into(),
                ));
            }
        }
    }
    Ok(rows)
}
