//! Output files: CSV writers, atomic file creation, and run manifests.
//!
//! Every CSV carries a header row, uses `.` as the decimal separator, and LF
//! line endings. Floats print in Rust's shortest round-trip form so reruns
//! are byte-identical.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::circuit::{CanonicalResonance, ScatteringSpectrum};
use crate::design::ParetoSet;
use crate::detect::{CalibrationCurve, DetectionResult};
use crate::error::Error;
use crate::experiment::{ExperimentReport, RangeRow, TrendTable};
use crate::link::ReceivedSpectrum;
use crate::Result;

/// Writes `content` atomically: a temp file in the target directory is
/// renamed over the destination.
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        path.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "out".into()),
        std::process::id()
    ));
    std::fs::write(&tmp, content)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn spectrum_csv(spec: &ScatteringSpectrum) -> String {
    let mut out = String::from("freq_hz,gamma_re,gamma_im,gamma_abs\n");
    for (f, g) in spec.freq_hz.iter().zip(&spec.gamma) {
        let _ = writeln!(out, "{},{},{},{}", f, g.re, g.im, g.norm());
    }
    out
}

pub fn resonance_csv(res: &CanonicalResonance) -> String {
    let mut out = String::from("r_total_ohm,l_total_h,c_total_f,f0_hz,q,gamma_min,fit_residual,poor_fit\n");
    let _ = writeln!(
        out,
        "{},{},{},{},{},{},{},{}",
        res.r_total,
        res.l_total,
        res.c_total,
        res.f0_hz,
        res.q,
        res.gamma_min,
        res.fit_residual,
        res.poor_fit
    );
    out
}

pub fn trend_csv(table: &TrendTable) -> String {
    let mut out = format!("{},f0_hz,q,gamma_min,r_total_ohm\n", table.parameter.name());
    for r in &table.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.value, r.f0_hz, r.q, r.gamma_min, r.r_total_ohm
        );
    }
    out
}

pub fn pareto_csv(set: &ParetoSet) -> String {
    let mut out = String::from("d,s,h,w,l,delta_f0_hz,q_factor,p_min_reflected\n");
    for (g, m) in &set.entries {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            g.d, g.s, g.h, g.w, g.l, m.delta_f0_hz, m.q_factor, m.p_min_reflected
        );
    }
    out
}

pub fn measurement_csv(m: &ReceivedSpectrum) -> String {
    let mut out = String::from("freq_hz,p_sig_w,p_inf_w,p_noise_w,p_total_w\n");
    for k in 0..m.len() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            m.freq_hz[k], m.p_sig_w[k], m.p_inf_w[k], m.p_noise_w[k], m.p_total_w[k]
        );
    }
    out
}

/// Parses a measurement CSV produced by [`measurement_csv`].
pub fn parse_measurement_csv(text: &str) -> Result<ReceivedSpectrum> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidConfig(vec!["empty measurement csv".into()]))?;
    if header != "freq_hz,p_sig_w,p_inf_w,p_noise_w,p_total_w" {
        return Err(Error::InvalidConfig(vec![format!(
            "unexpected measurement header: {header}"
        )]));
    }
    let mut m = ReceivedSpectrum {
        freq_hz: vec![],
        p_sig_w: vec![],
        p_inf_w: vec![],
        p_noise_w: vec![],
        p_total_w: vec![],
    };
    for (n, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(Error::InvalidConfig(vec![format!(
                "measurement line {}: expected 5 columns",
                n + 2
            )]));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::InvalidConfig(vec![format!("bad float '{s}' on line {}", n + 2)]))
        };
        m.freq_hz.push(parse(cols[0])?);
        m.p_sig_w.push(parse(cols[1])?);
        m.p_inf_w.push(parse(cols[2])?);
        m.p_noise_w.push(parse(cols[3])?);
        m.p_total_w.push(parse(cols[4])?);
    }
    Ok(m)
}

pub fn detection_csv(results: &[(usize, DetectionResult)]) -> String {
    let mut out = String::from("tag_id,f0_hz,q,category,confidence,flags\n");
    for (id, r) in results {
        let mut flags = Vec::new();
        if r.clamped {
            flags.push("clamped");
        }
        if r.poor_fit {
            flags.push("poor-fit");
        }
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            id,
            r.f0_hat_hz,
            r.q_hat,
            r.category,
            r.confidence,
            flags.join("|")
        );
    }
    out
}

pub fn calibration_csv(cal: &CalibrationCurve) -> String {
    let mut out = String::from("psi_pct,f0_hz\n");
    for (psi, f0) in &cal.anchors {
        let _ = writeln!(out, "{},{}", psi, f0);
    }
    out
}

pub fn accuracy_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("snr_db,accuracy,failed_cells\n");
    for k in 0..report.snr_db.len() {
        let _ = writeln!(
            out,
            "{},{},{}",
            report.snr_db[k], report.accuracy[k], report.failed_cells[k]
        );
    }
    out
}

pub fn confusion_csv(confusion: &[[u32; 10]; 10]) -> String {
    let mut out = String::from("truth\\est,0,1,2,3,4,5,6,7,8,9\n");
    for (truth, row) in confusion.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(out, "{},{}", truth, cells.join(","));
    }
    out
}

pub fn cells_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("cell,truth_category,f0_hz,q,category,confidence,flags\n");
    for o in &report.first_trial {
        match &o.result {
            Some(r) => {
                let mut flags = Vec::new();
                if r.clamped {
                    flags.push("clamped");
                }
                if r.poor_fit {
                    flags.push("poor-fit");
                }
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    o.cell,
                    o.truth_category,
                    r.f0_hat_hz,
                    r.q_hat,
                    r.category,
                    r.confidence,
                    flags.join("|")
                );
            }
            None => {
                let _ = writeln!(out, "{},{},,,,,link-failed", o.cell, o.truth_category);
            }
        }
    }
    out
}

pub fn range_csv(rows: &[RangeRow]) -> String {
    let mut out = String::from("p_tx_w,gain,gamma_abs,feasible,r_max_m\n");
    for r in rows {
        match r.r_max_m {
            Some(v) => {
                let _ = writeln!(out, "{},{},{},true,{}", r.p_tx_w, r.gain, r.gamma_abs, v);
            }
            None => {
                let _ = writeln!(out, "{},{},{},false,", r.p_tx_w, r.gain, r.gamma_abs);
            }
        }
    }
    out
}

/// Run manifest: everything needed to regenerate an output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub manifest_schema: String,
    /// Subcommand name.
    pub command: String,
    /// CLI overrides that affect outputs, normalized.
    pub args: BTreeMap<String, String>,
    /// SHA-256 of the embedded configuration text.
    pub config_sha256: String,
    /// Full configuration TOML as supplied.
    pub config_toml: String,
    pub seed: u64,
    /// Package version that produced the run.
    pub version: String,
    /// Output files written (relative names, sorted).
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(
        command: &str,
        args: BTreeMap<String, String>,
        config_toml: &str,
        seed: u64,
        outputs: Vec<String>,
    ) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(config_toml.as_bytes());
        let config_sha256 = format!("{:x}", hasher.finalize());
        let mut outputs = outputs;
        outputs.sort();
        RunManifest {
            manifest_schema: "srrsim-manifest/1".into(),
            command: command.into(),
            args,
            config_sha256,
            config_toml: config_toml.into(),
            seed,
            version: env!("CARGO_PKG_VERSION").into(),
            outputs,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::InvalidConfig(vec![format!("manifest: {e}")]))
    }
}

/// Resolves the output directory: explicit flag, else `SRRSIM_OUT`, else
/// `./srrsim-out`.
pub fn resolve_out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("SRRSIM_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("srrsim-out"))
}
