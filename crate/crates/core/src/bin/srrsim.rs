//! Command-line driver for the metamaterial backscatter tag simulator.
//!
//! Every subcommand reads one TOML configuration, writes CSV outputs plus a
//! `manifest.json` into the output directory, and exits nonzero with a
//! machine-readable JSON error record on stderr when anything fails.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use srrsim_core::config::{parse_quantity_list, RunConfig};
use srrsim_core::detect::{
    background_subtract, classify_humidity, equalize_link_tilt, peak_fit, pole_resonance,
    CalibrationCurve,
};
use srrsim_core::error::Error;
use srrsim_core::experiment::{range_study, run_grid_experiment, sweep_component, SweepParameter};
use srrsim_core::io::{
    accuracy_csv, calibration_csv, cells_csv, confusion_csv, detection_csv, measurement_csv,
    parse_measurement_csv, pareto_csv, range_csv, resolve_out_dir, resonance_csv, spectrum_csv,
    trend_csv, write_atomic, RunManifest,
};
use srrsim_core::link::{measurement_grid, synth_measurement, ReceivedSpectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "srrsim", version, about = "Metamaterial backscatter tag simulator")]
struct Cli {
    /// Configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master random seed.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    /// Worker-thread cap (0 = library default).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    /// Output directory (default: $SRRSIM_OUT or ./srrsim-out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sweep the configured tag and report its spectrum and resonance.
    Tag {
        /// Environmental state in percent.
        #[arg(long, default_value_t = 50.0)]
        psi: f64,
    },
    /// Sweep one circuit component and tabulate the resonance trends.
    Sweep {
        /// Override the configured sweep parameter (r-o, d, h, s).
        #[arg(long)]
        parameter: Option<String>,
        /// Override the configured values; unit suffixes required
        /// (for example `0.8mm,1.0mm` or `2kohm,5kohm`).
        #[arg(long)]
        values: Option<String>,
    },
    /// Search the design space and export the Pareto front.
    Design {
        /// Override the evaluation budget.
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Synthesize a swept measurement of the configured scene.
    Simulate,
    /// Recover resonance and humidity category from a measurement CSV.
    Detect {
        /// Measurement file (output of `simulate`).
        #[arg(long)]
        input: PathBuf,
        /// Optional empty-scene measurement to subtract.
        #[arg(long)]
        empty: Option<PathBuf>,
        /// Use the pole path instead of the dip fit.
        #[arg(long, default_value_t = false)]
        poles: bool,
    },
    /// Run the humidity-grid experiment.
    Grid,
    /// Tabulate maximum range over transmit power and gain.
    Range,
    /// Re-execute a previous run from its manifest.
    Rerun {
        /// Path to a manifest.json from an earlier run.
        #[arg(long)]
        manifest: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.jobs > 0 {
        // Ignore failure: the pool may already be initialized in-process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = serde_json::json!({
                "error": { "kind": e.kind(), "message": e.to_string() }
            });
            eprintln!("{record}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<(RunConfig, String), Error> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p)?,
        None => "schema_version = 1\n".to_string(),
    };
    let cfg = RunConfig::from_toml(&text)?;
    Ok((cfg, text))
}

struct OutDir {
    dir: PathBuf,
    files: Vec<String>,
}

impl OutDir {
    fn new(dir: PathBuf) -> Self {
        OutDir { dir, files: vec![] }
    }

    fn write(&mut self, name: &str, content: &str) -> Result<(), Error> {
        write_atomic(&self.dir.join(name), content)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn finish(
        mut self,
        command: &str,
        args: BTreeMap<String, String>,
        config_toml: &str,
        seed: u64,
    ) -> Result<(), Error> {
        self.files.push("manifest.json".into());
        let manifest = RunManifest::new(command, args, config_toml, seed, self.files.clone());
        write_atomic(&self.dir.join("manifest.json"), &manifest.to_json())?;
        println!("wrote {} file(s) to {}", self.files.len(), self.dir.display());
        Ok(())
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let out = resolve_out_dir(cli.out.clone());
    match &cli.command {
        Command::Rerun { manifest } => {
            let m = RunManifest::from_json(&std::fs::read_to_string(manifest)?)?;
            let cfg = RunConfig::from_toml(&m.config_toml)?;
            execute(
                &m.command,
                &m.args,
                cfg,
                m.config_toml.clone(),
                m.seed,
                OutDir::new(out),
            )
        }
        _ => {
            let (cfg, text) = load_config(&cli.config)?;
            let (command, args) = normalize(&cli);
            execute(&command, &args, cfg, text, cli.seed, OutDir::new(out))
        }
    }
}

/// Normalizes the subcommand and its output-affecting flags into the
/// manifest representation.
fn normalize(cli: &Cli) -> (String, BTreeMap<String, String>) {
    let mut args = BTreeMap::new();
    let command = match &cli.command {
        Command::Tag { psi } => {
            args.insert("psi".into(), psi.to_string());
            "tag"
        }
        Command::Sweep { parameter, values } => {
            if let Some(p) = parameter {
                args.insert("parameter".into(), p.clone());
            }
            if let Some(v) = values {
                args.insert("values".into(), v.clone());
            }
            "sweep"
        }
        Command::Design { budget } => {
            if let Some(b) = budget {
                args.insert("budget".into(), b.to_string());
            }
            "design"
        }
        Command::Simulate => "simulate",
        Command::Detect {
            input,
            empty,
            poles,
        } => {
            args.insert("input".into(), input.display().to_string());
            if let Some(e) = empty {
                args.insert("empty".into(), e.display().to_string());
            }
            args.insert("poles".into(), poles.to_string());
            "detect"
        }
        Command::Grid => "grid",
        Command::Range => "range",
        Command::Rerun { .. } => unreachable!("handled by caller"),
    };
    (command.to_string(), args)
}

fn execute(
    command: &str,
    args: &BTreeMap<String, String>,
    cfg: RunConfig,
    config_text: String,
    seed: u64,
    mut out: OutDir,
) -> Result<(), Error> {
    match command {
        "tag" => {
            let psi: f64 = args
                .get("psi")
                .and_then(|s| s.parse().ok())
                .unwrap_or(50.0);
            let tag = cfg.tag_model();
            let spec = tag.spectrum(psi)?;
            let res = tag.resonance(psi)?;
            out.write("spectrum.csv", &spectrum_csv(&spec))?;
            out.write("resonance.csv", &resonance_csv(&res))?;
        }
        "sweep" => {
            let tag = cfg.tag_model();
            let (parameter, values, psi_ref) = sweep_inputs(&cfg, args)?;
            let table = sweep_component(parameter, &values, &tag, psi_ref)?;
            out.write("trend.csv", &trend_csv(&table))?;
            if !table.skipped.is_empty() {
                let mut text = String::from("value,diagnostic\n");
                for (v, msg) in &table.skipped {
                    text.push_str(&format!("{},{}\n", v, msg.replace(',', ";")));
                }
                out.write("skipped.csv", &text)?;
            }
        }
        "design" => {
            let section = cfg.design_space.clone().ok_or_else(|| {
                Error::InvalidConfig(vec!["design requires a [design_space] section".into()])
            })?;
            let budget = args
                .get("budget")
                .and_then(|b| b.parse().ok())
                .unwrap_or(section.budget);
            let space = cfg.design_space(&section)?;
            let front = srrsim_core::design::search(&space, budget, seed)?;
            out.write("pareto.csv", &pareto_csv(&front))?;
        }
        "simulate" => {
            let section = cfg.scene.clone().ok_or_else(|| {
                Error::InvalidConfig(vec!["simulate requires a [scene] section".into()])
            })?;
            let scene = cfg.build_scene(&section)?;
            let grid = measurement_grid((cfg.band.lo_hz, cfg.band.hi_hz), cfg.band.points);
            let meas = synth_measurement(&scene, section.tag_index, &grid, &section.noise, seed)?;
            out.write("measurement.csv", &measurement_csv(&meas))?;
            // Clutter-only reference for later background subtraction.
            let clutter = scene.eta * scene.p_tx_w * scene.gamma_env[section.tag_index];
            let empty = ReceivedSpectrum {
                freq_hz: grid.clone(),
                p_sig_w: vec![0.0; grid.len()],
                p_inf_w: vec![clutter; grid.len()],
                p_noise_w: vec![0.0; grid.len()],
                p_total_w: vec![clutter; grid.len()],
            };
            out.write("empty.csv", &measurement_csv(&empty))?;
        }
        "detect" => {
            let input = args
                .get("input")
                .ok_or_else(|| Error::InvalidConfig(vec!["detect needs --input".into()]))?;
            let meas = parse_measurement_csv(&std::fs::read_to_string(input)?)?;
            let empty = match args.get("empty") {
                Some(path) => parse_measurement_csv(&std::fs::read_to_string(path)?)?,
                None => ReceivedSpectrum {
                    freq_hz: meas.freq_hz.clone(),
                    p_sig_w: vec![0.0; meas.len()],
                    p_inf_w: vec![0.0; meas.len()],
                    p_noise_w: vec![0.0; meas.len()],
                    p_total_w: vec![0.0; meas.len()],
                },
            };
            let cal = equalize_link_tilt(&background_subtract(&meas, &empty)?);
            let use_poles = args.get("poles").map(|p| p == "true").unwrap_or(false);
            let (f0_hat, q_hat) = if use_poles {
                pole_resonance(&cal)?
            } else {
                peak_fit(&cal)?
            };
            let tag = cfg.tag_model();
            let calibration = CalibrationCurve::from_tag(&tag, 21)?;
            let result = classify_humidity(f0_hat, q_hat, &calibration);
            out.write("detection.csv", &detection_csv(&[(0, result)]))?;
            out.write("calibration.csv", &calibration_csv(&calibration))?;
        }
        "grid" => {
            let section = cfg.grid.clone().unwrap_or_default();
            let mut grid_cfg = cfg.grid_experiment(&section)?;
            grid_cfg.seed = seed;
            let tag = cfg.tag_model();
            let report = run_grid_experiment(&grid_cfg, &tag)?;
            out.write("accuracy.csv", &accuracy_csv(&report))?;
            out.write("cells.csv", &cells_csv(&report))?;
            out.write("calibration.csv", &calibration_csv(&report.calibration))?;
            for (k, conf) in report.confusion.iter().enumerate() {
                let label = if report.snr_db[k].is_infinite() {
                    "inf".to_string()
                } else {
                    format!("{}", report.snr_db[k])
                };
                out.write(&format!("confusion_snr_{label}.csv"), &confusion_csv(conf))?;
            }
            let summary = serde_json::json!({
                "snr_db": report.snr_db,
                "accuracy": report.accuracy,
                "failed_cells": report.failed_cells,
                "cells": grid_cfg.cells(),
                "trials": grid_cfg.trials,
            });
            out.write(
                "summary.json",
                &format!("{}\n", serde_json::to_string_pretty(&summary).expect("json")),
            )?;
        }
        "range" => {
            let section = cfg.range.clone().unwrap_or_default();
            let rows = range_study(
                &section.p_tx_w,
                &section.gain,
                section.gamma_abs,
                section.sigma_m2,
                section.f_hz,
                section.snr_threshold_db,
                &section.noise_model,
            )?;
            out.write("range.csv", &range_csv(&rows))?;
        }
        other => {
            return Err(Error::InvalidConfig(vec![format!(
                "manifest references unknown command '{other}'"
            )]));
        }
    }
    out.finish(command, args.clone(), &config_text, seed)
}

fn sweep_inputs(
    cfg: &RunConfig,
    args: &BTreeMap<String, String>,
) -> Result<(SweepParameter, Vec<f64>, f64), Error> {
    let from_cfg = cfg.sweep.clone();
    let parameter = match args.get("parameter") {
        Some(p) => match p.as_str() {
            "r-o" | "r_o" | "ro" => SweepParameter::RO,
            "d" => SweepParameter::D,
            "h" => SweepParameter::H,
            "s" => SweepParameter::S,
            other => {
                return Err(Error::InvalidConfig(vec![format!(
                    "unknown sweep parameter '{other}' (expected r-o, d, h, s)"
                )]))
            }
        },
        None => {
            from_cfg
                .as_ref()
                .ok_or_else(|| {
                    Error::InvalidConfig(vec![
                        "sweep needs --parameter or a [sweep] config section".into(),
                    ])
                })?
                .parameter
        }
    };
    let values = match args.get("values") {
        Some(text) => {
            let dim = if parameter == SweepParameter::RO {
                "ohm"
            } else {
                "m"
            };
            parse_quantity_list(text, dim)?
        }
        None => {
            from_cfg
                .as_ref()
                .ok_or_else(|| {
                    Error::InvalidConfig(vec![
                        "sweep needs --values or a [sweep] config section".into(),
                    ])
                })?
                .values
                .clone()
        }
    };
    let psi_ref = from_cfg.map(|s| s.psi_ref).unwrap_or(50.0);
    Ok((parameter, values, psi_ref))
}
