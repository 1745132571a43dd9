//! Command line front end.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::analysis::{compare_spectra, find_peaks, line_ratios, Comparison};
use crate::config::{
    load_config, parse_config, preset, Normalization, ScenarioConfig, PRESET_NAMES,
};
use crate::error::{Error, Result};
use crate::output::{
    column_name, config_from_params, read_spectrum_csv, write_compare_csv, write_manifest,
    write_peaks_csv, write_spectrum_csv,
};
use crate::pipeline;
use crate::spectrum::{Column, Spectrum};

const COLUMNS: [Column; 2] = [Column::Detection, Column::Integrated];

#[derive(Debug, Parser)]
#[command(
    name = "lfscatter",
    version,
    about = "Scattering spectra of a pulsed dense two-level medium"
)]
pub struct Cli {
    /// Scenario file (`key = value` sections).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Start from a named preset; keys in --config override it.
    #[arg(long, global = true, value_name = "NAME")]
    pub preset: Option<String>,
    /// Output directory (overrides output.directory).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads for the mode sweep (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the atom and all detector modes; writes simulate.csv.
    Simulate,
    /// First-order perturbative spectrum; writes analytic.csv.
    Analytic,
    /// Compare two spectrum tables on the same grid; writes compare.csv.
    Compare { a: PathBuf, b: PathBuf },
    /// Peak table of a spectrum file, or of a fresh simulation; writes peaks.csv.
    Peaks { file: Option<PathBuf> },
    /// List the built-in presets.
    Presets,
}

/// Resolves `--preset` and `--config` into one scenario.
pub fn resolve_config(config: Option<&Path>, preset_name: Option<&str>) -> Result<ScenarioConfig> {
    match (config, preset_name) {
        (None, None) => Ok(ScenarioConfig::default()),
        (None, Some(name)) => preset(name).ok_or_else(|| {
            Error::InvalidInput(format!(
                "unknown preset `{name}`; known: {}",
                PRESET_NAMES.join(", ")
            ))
        }),
        (Some(path), None) => load_config(path),
        (Some(path), Some(name)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
            if preset(name).is_none() {
                return Err(Error::InvalidInput(format!("unknown preset `{name}`")));
            }
            // the preset line goes first so that line numbers shift by one
            parse_config(&format!("preset = {name}\n{text}")).map_err(|e| match e {
                Error::ConfigParse { line, message } if line > 1 => Error::ConfigParse {
                    line: line - 1,
                    message,
                },
                other => other,
            })
        }
    }
}

fn out_dir(cli: &Cli, config: &ScenarioConfig) -> Result<PathBuf> {
    let dir = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&config.output.directory));
    std::fs::create_dir_all(&dir)
        .map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    Ok(dir)
}

fn normalized(spec: Spectrum, config: &ScenarioConfig) -> Spectrum {
    match config.output.normalization {
        Normalization::Raw => spec,
        Normalization::UnitMax => spec.unit_max(),
    }
}

pub fn run_simulate(config: &ScenarioConfig, dir: &Path) -> Result<Spectrum> {
    let spec = normalized(pipeline::simulate(config)?, config);
    write_spectrum_csv(&dir.join("simulate.csv"), &spec, "lfscatter simulate")?;
    write_manifest(&dir.join("manifest.txt"), config, &spec.params)?;
    Ok(spec)
}

pub fn run_analytic(config: &ScenarioConfig, dir: &Path) -> Result<Spectrum> {
    let spec = normalized(pipeline::analytic(config)?, config);
    write_spectrum_csv(&dir.join("analytic.csv"), &spec, "lfscatter analytic")?;
    write_manifest(&dir.join("manifest.txt"), config, &spec.params)?;
    Ok(spec)
}

pub fn run_compare(a: &Path, b: &Path, dir: &Path) -> Result<Vec<(Column, Comparison)>> {
    let sa = read_spectrum_csv(a)?;
    let sb = read_spectrum_csv(b)?;
    let rows = COLUMNS
        .iter()
        .map(|&c| compare_spectra(&sa, &sb, c).map(|m| (c, m)))
        .collect::<Result<Vec<_>>>()?;
    let params = vec![
        ("a".to_string(), a.display().to_string()),
        ("b".to_string(), b.display().to_string()),
    ];
    write_compare_csv(&dir.join("compare.csv"), &params, &rows)?;
    Ok(rows)
}

pub fn run_peaks(
    spec: &Spectrum,
    config: &ScenarioConfig,
    dir: &Path,
) -> Result<Vec<(Column, usize, usize)>> {
    let rabi = config.pulse.rabi;
    let mut rows = Vec::new();
    for c in COLUMNS {
        let set = find_peaks(spec, c, config.numerics.peak_threshold)?;
        let ratios = line_ratios(&set, rabi)?;
        rows.push((c, set, ratios));
    }
    write_peaks_csv(&dir.join("peaks.csv"), &spec.params, rabi, &rows)?;
    Ok(rows
        .iter()
        .map(|(c, s, r)| (*c, s.len(), r.sideband_count()))
        .collect())
}

fn describe(name: &str) -> String {
    let c = preset(name).expect("listed preset");
    format!(
        "{name:<15} R={:.6} T={} detuning={:.6} B={} gamma={} gamma2={} eta={}",
        c.pulse.rabi,
        c.pulse.duration,
        c.pulse.detuning,
        c.strength(),
        c.medium.gamma,
        c.medium.gamma2,
        c.grid.eta
    )
}

/// Executes one parsed command line; the caller maps errors to exit codes.
pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Presets => {
            for name in PRESET_NAMES {
                println!("{}", describe(name));
            }
        }
        Command::Simulate => {
            let config = resolve_config(cli.config.as_deref(), cli.preset.as_deref())?;
            let dir = out_dir(cli, &config)?;
            let spec = run_simulate(&config, &dir)?;
            println!(
                "wrote {} modes to {}",
                spec.len(),
                dir.join("simulate.csv").display()
            );
        }
        Command::Analytic => {
            let config = resolve_config(cli.config.as_deref(), cli.preset.as_deref())?;
            let dir = out_dir(cli, &config)?;
            let spec = run_analytic(&config, &dir)?;
            println!(
                "wrote {} modes to {}",
                spec.len(),
                dir.join("analytic.csv").display()
            );
        }
        Command::Compare { a, b } => {
            let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
            std::fs::create_dir_all(&dir)
                .map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
            for (c, m) in run_compare(a, b, &dir)? {
                println!(
                    "{:<10} max_rel_peak_diff={:.6e} l2_rel={:.6e}",
                    column_name(c),
                    m.max_rel_peak_diff,
                    m.l2_rel
                );
            }
        }
        Command::Peaks { file } => {
            let (spec, config) = match file {
                Some(path) => {
                    let spec = read_spectrum_csv(path)?;
                    let config = if cli.config.is_some() || cli.preset.is_some() {
                        resolve_config(cli.config.as_deref(), cli.preset.as_deref())?
                    } else {
                        config_from_params(&spec.params).map_err(|e| {
                            Error::InvalidInput(format!(
                                "{}: no usable parameter header ({e}); pass --config or --preset",
                                path.display()
                            ))
                        })?
                    };
                    (spec, config)
                }
                None => {
                    let config = resolve_config(cli.config.as_deref(), cli.preset.as_deref())?;
                    (normalized(pipeline::simulate(&config)?, &config), config)
                }
            };
            let dir = out_dir(cli, &config)?;
            for (c, n, sidebands) in run_peaks(&spec, &config, &dir)? {
                println!(
                    "{:<10} peaks={n} assigned_sidebands={sidebands}",
                    column_name(c)
                );
            }
        }
    }
    Ok(())
}
