//! Scenario configuration: a line-oriented `key = value` format with
//! `[pulse] [medium] [grid] [numerics] [output]` sections.
//!
//! ```text
//! # optional: start from a named preset, later keys override it
//! preset = fig2a
//!
//! [pulse]
//! rabi = 31.41592653589793
//! duration = 1.9
//!
//! [medium]
//! strength = 0.32        # or: local_field = <C>
//! ```
//!
//! `#` starts a comment. Optional numeric keys accept `auto`. Without a
//! preset, keys that are not given take the `fig2a` values.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use crate::analytic::{default_order, LineShape};
use crate::bloch::{AtomSettings, MediumParams, PulseParams};
use crate::error::{Error, Result};
use crate::field::ModeGrid;

/// Rabi frequency shared by all figure presets.
pub const PRESET_RABI: f64 = 10.0 * PI;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coupling {
    /// Dimensionless `B = C / 2R`.
    Strength(f64),
    /// `C` itself.
    LocalField(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Normalization {
    Raw,
    UnitMax,
}

impl Normalization {
    pub fn name(self) -> &'static str {
        match self {
            Normalization::Raw => "raw",
            Normalization::UnitMax => "unit_max",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PulseSection {
    pub rabi: f64,
    pub duration: f64,
    pub detuning: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MediumSection {
    pub coupling: Coupling,
    pub gamma: f64,
    pub gamma2: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSection {
    pub nu_min: f64,
    pub nu_max: f64,
    pub n_modes: usize,
    pub eta: f64,
    pub kappa: f64,
    pub intensity_scale: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NumericsSection {
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub detection_time: Option<f64>,
    pub truncation_j: Option<usize>,
    /// `None` disables the step-halving audit.
    pub halving_tolerance: Option<f64>,
    pub settle_tolerance: f64,
    pub analytic_shape: LineShape,
    pub peak_threshold: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputSection {
    pub directory: String,
    pub normalization: Normalization,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub preset: Option<String>,
    pub pulse: PulseSection,
    pub medium: MediumSection,
    pub grid: GridSection,
    pub numerics: NumericsSection,
    pub output: OutputSection,
}

pub const PRESET_NAMES: &[&str] = &[
    "fig2a",
    "fig2b",
    "fig2c",
    "fig2d",
    "fig3a",
    "fig3b",
    "fig4",
    "lowb",
    "detuned_weak",
    "detuned_strong",
];

fn figure(
    b: f64,
    gamma: f64,
    gamma2: f64,
    eta: f64,
    duration: f64,
    detuning: f64,
) -> ScenarioConfig {
    let r = PRESET_RABI;
    ScenarioConfig {
        preset: None,
        pulse: PulseSection {
            rabi: r,
            duration,
            detuning,
        },
        medium: MediumSection {
            coupling: Coupling::Strength(b),
            gamma,
            gamma2,
        },
        grid: GridSection {
            nu_min: -12.0 * r,
            nu_max: 12.0 * r,
            n_modes: 2001,
            eta,
            kappa: 1.0,
            intensity_scale: 1.0,
        },
        numerics: NumericsSection {
            dt: None,
            t_end: None,
            detection_time: None,
            truncation_j: None,
            halving_tolerance: Some(AtomSettings::DEFAULT_HALVING_TOLERANCE),
            settle_tolerance: AtomSettings::DEFAULT_SETTLE_TOLERANCE,
            analytic_shape: LineShape::Exact,
            peak_threshold: crate::analysis::DEFAULT_THRESHOLD,
        },
        output: OutputSection {
            directory: "out".into(),
            normalization: Normalization::Raw,
        },
    }
}

/// Named scenario, or `None` for an unknown name.
pub fn preset(name: &str) -> Option<ScenarioConfig> {
    let r = PRESET_RABI;
    let mut c = match name {
        "fig2a" => figure(0.32, 0.01, 0.0, 5.0, 1.9, 0.0),
        "fig2b" => figure(0.64, 0.01, 0.0, 5.0, 1.9, 0.0),
        "fig2c" => figure(0.85, 0.01, 0.0, 5.0, 1.9, 0.0),
        "fig2d" => figure(1.2, 0.01, 0.0, 5.0, 1.9, 0.0),
        "fig3a" => figure(0.28, 0.01, 0.0, 0.1, 0.3, 0.0),
        "fig3b" => figure(0.36, 0.01, 0.0, 0.1, 0.5, 0.0),
        "fig4" => figure(0.74, 0.5, 9.0, 1.0, 1.0, 0.0),
        "lowb" => figure(0.1, 0.01, 0.0, 5.0, 1.9, 0.0),
        "detuned_weak" => figure(0.32, 0.01, 0.0, 5.0, 1.9, 0.1 * r),
        "detuned_strong" => figure(0.32, 0.01, 0.0, 5.0, 1.9, 0.8 * r),
        _ => return None,
    };
    c.preset = Some(name.to_string());
    Some(c)
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let mut c = preset("fig2a").expect("builtin preset");
        c.preset = None;
        c
    }
}

/// Shortest text that parses back to the same value.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn field_err(field: &str, message: impl Into<String>) -> Error {
    Error::ConfigField {
        field: field.to_string(),
        message: message.into(),
    }
}

impl ScenarioConfig {
    /// `B = C / 2R`.
    pub fn strength(&self) -> f64 {
        match self.medium.coupling {
            Coupling::Strength(b) => b,
            Coupling::LocalField(c) => c / (2.0 * self.pulse.rabi),
        }
    }

    pub fn local_field(&self) -> f64 {
        match self.medium.coupling {
            Coupling::Strength(b) => 2.0 * self.pulse.rabi * b,
            Coupling::LocalField(c) => c,
        }
    }

    pub fn pulse_params(&self) -> Result<PulseParams> {
        PulseParams::new(self.pulse.rabi, self.pulse.duration, self.pulse.detuning)
    }

    pub fn medium_params(&self) -> Result<MediumParams> {
        MediumParams::new(self.local_field(), self.medium.gamma, self.medium.gamma2)
    }

    pub fn atom_settings(&self) -> Result<AtomSettings> {
        let mut s = AtomSettings::new(self.pulse_params()?, self.medium_params()?);
        s.dt = self.numerics.dt;
        s.halving_tolerance = self.numerics.halving_tolerance;
        s.settle_tolerance = self.numerics.settle_tolerance;
        Ok(s)
    }

    pub fn mode_grid(&self) -> Result<ModeGrid> {
        let g = &self.grid;
        ModeGrid::uniform(
            g.nu_min,
            g.nu_max,
            g.n_modes,
            g.eta,
            g.kappa,
            g.intensity_scale,
        )
    }

    /// `T + 10/η + 5/max(γ/2 + γ₂, 10⁻³)` unless set.
    pub fn resolved_t_end(&self) -> f64 {
        self.numerics.t_end.unwrap_or_else(|| {
            let relax = (0.5 * self.medium.gamma + self.medium.gamma2).max(1e-3);
            self.pulse.duration + 10.0 / self.grid.eta + 5.0 / relax
        })
    }

    /// End of the pulse unless set.
    pub fn resolved_detection_time(&self) -> f64 {
        self.numerics.detection_time.unwrap_or(self.pulse.duration)
    }

    pub fn resolved_truncation(&self) -> usize {
        self.numerics
            .truncation_j
            .unwrap_or_else(|| default_order(self.strength()))
    }

    /// Checks every constraint, naming the offending field.
    pub fn validate(&self) -> Result<()> {
        let positive = |field: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(field_err(field, format!("must be finite and > 0, got {v}")))
            }
        };
        let non_negative = |field: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(field_err(
                    field,
                    format!("must be finite and >= 0, got {v}"),
                ))
            }
        };
        positive("pulse.rabi", self.pulse.rabi)?;
        positive("pulse.duration", self.pulse.duration)?;
        if !self.pulse.detuning.is_finite() {
            return Err(field_err("pulse.detuning", "must be finite"));
        }
        match self.medium.coupling {
            Coupling::Strength(b) => non_negative("medium.strength", b)?,
            Coupling::LocalField(c) => non_negative("medium.local_field", c)?,
        }
        non_negative("medium.gamma", self.medium.gamma)?;
        non_negative("medium.gamma2", self.medium.gamma2)?;
        let g = &self.grid;
        if !(g.nu_min.is_finite() && g.nu_max.is_finite() && g.nu_min < g.nu_max) {
            return Err(field_err("grid.nu_min", "must be finite and < grid.nu_max"));
        }
        if g.n_modes < 3 {
            return Err(field_err(
                "grid.n_modes",
                format!("must be >= 3, got {}", g.n_modes),
            ));
        }
        positive("grid.eta", g.eta)?;
        positive("grid.kappa", g.kappa)?;
        positive("grid.intensity_scale", g.intensity_scale)?;
        let n = &self.numerics;
        if let Some(dt) = n.dt {
            positive("numerics.dt", dt)?;
        }
        if let Some(tol) = n.halving_tolerance {
            positive("numerics.halving_tolerance", tol)?;
        }
        positive("numerics.settle_tolerance", n.settle_tolerance)?;
        if !(n.peak_threshold > 0.0 && n.peak_threshold < 1.0) {
            return Err(field_err("numerics.peak_threshold", "must lie in (0, 1)"));
        }
        if let Some(j) = n.truncation_j {
            if j < 1 {
                return Err(field_err("numerics.truncation_j", "must be >= 1"));
            }
        }
        let t_end = self.resolved_t_end();
        if !(t_end >= self.pulse.duration && t_end.is_finite()) {
            return Err(field_err(
                "numerics.t_end",
                "must be finite and >= pulse.duration",
            ));
        }
        let det = self.resolved_detection_time();
        if !(det >= 0.0 && det <= t_end) {
            return Err(field_err(
                "numerics.detection_time",
                format!("must lie in [0, t_end = {t_end}]"),
            ));
        }
        if self.output.directory.trim().is_empty() {
            return Err(field_err("output.directory", "must not be empty"));
        }
        self.atom_settings()
            .and_then(|s| s.resolved_dt())
            .map_err(|e| field_err("numerics.dt", e.to_string()))?;
        Ok(())
    }

    /// Flat `section.key = value` view, in file order.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let opt = |v: Option<f64>| v.map_or_else(|| "auto".to_string(), num);
        let mut p: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: String| p.push((k.to_string(), v));
        if let Some(name) = &self.preset {
            push("preset", name.clone());
        }
        push("pulse.rabi", num(self.pulse.rabi));
        push("pulse.duration", num(self.pulse.duration));
        push("pulse.detuning", num(self.pulse.detuning));
        match self.medium.coupling {
            Coupling::Strength(b) => push("medium.strength", num(b)),
            Coupling::LocalField(c) => push("medium.local_field", num(c)),
        }
        push("medium.gamma", num(self.medium.gamma));
        push("medium.gamma2", num(self.medium.gamma2));
        push("grid.nu_min", num(self.grid.nu_min));
        push("grid.nu_max", num(self.grid.nu_max));
        push("grid.n_modes", self.grid.n_modes.to_string());
        push("grid.eta", num(self.grid.eta));
        push("grid.kappa", num(self.grid.kappa));
        push("grid.intensity_scale", num(self.grid.intensity_scale));
        let n = &self.numerics;
        push("numerics.dt", opt(n.dt));
        push("numerics.t_end", opt(n.t_end));
        push("numerics.detection_time", opt(n.detection_time));
        push(
            "numerics.truncation_j",
            n.truncation_j
                .map_or_else(|| "auto".into(), |j| j.to_string()),
        );
        push(
            "numerics.halving_tolerance",
            n.halving_tolerance.map_or_else(|| "off".into(), num),
        );
        push("numerics.settle_tolerance", num(n.settle_tolerance));
        push("numerics.analytic_shape", n.analytic_shape.name().into());
        push("numerics.peak_threshold", num(n.peak_threshold));
        push("output.directory", self.output.directory.clone());
        push(
            "output.normalization",
            self.output.normalization.name().into(),
        );
        p
    }

    fn set(&mut self, section: &str, key: &str, value: &str) -> std::result::Result<(), String> {
        let num = || -> std::result::Result<f64, String> {
            value
                .parse::<f64>()
                .map_err(|_| format!("`{value}` is not a number"))
        };
        let opt_num = || -> std::result::Result<Option<f64>, String> {
            if value == "auto" {
                Ok(None)
            } else {
                num().map(Some)
            }
        };
        let count = || -> std::result::Result<usize, String> {
            value
                .parse::<usize>()
                .map_err(|_| format!("`{value}` is not a non-negative integer"))
        };
        match (section, key) {
            ("pulse", "rabi") => self.pulse.rabi = num()?,
            ("pulse", "duration") => self.pulse.duration = num()?,
            ("pulse", "detuning") => self.pulse.detuning = num()?,
            ("medium", "strength") => self.medium.coupling = Coupling::Strength(num()?),
            ("medium", "local_field") => self.medium.coupling = Coupling::LocalField(num()?),
            ("medium", "gamma") => self.medium.gamma = num()?,
            ("medium", "gamma2") => self.medium.gamma2 = num()?,
            ("grid", "nu_min") => self.grid.nu_min = num()?,
            ("grid", "nu_max") => self.grid.nu_max = num()?,
            ("grid", "n_modes") => self.grid.n_modes = count()?,
            ("grid", "eta") => self.grid.eta = num()?,
            ("grid", "kappa") => self.grid.kappa = num()?,
            ("grid", "intensity_scale") => self.grid.intensity_scale = num()?,
            ("numerics", "dt") => self.numerics.dt = opt_num()?,
            ("numerics", "t_end") => self.numerics.t_end = opt_num()?,
            ("numerics", "detection_time") => self.numerics.detection_time = opt_num()?,
            ("numerics", "truncation_j") => {
                self.numerics.truncation_j = if value == "auto" {
                    None
                } else {
                    Some(count()?)
                }
            }
            ("numerics", "halving_tolerance") => {
                self.numerics.halving_tolerance = if value == "off" { None } else { Some(num()?) }
            }
            ("numerics", "settle_tolerance") => self.numerics.settle_tolerance = num()?,
            ("numerics", "analytic_shape") => {
                self.numerics.analytic_shape = LineShape::parse(value).ok_or_else(|| {
                    format!("`{value}` is not one of exact, long_pulse, short_pulse")
                })?
            }
            ("numerics", "peak_threshold") => self.numerics.peak_threshold = num()?,
            ("output", "directory") => self.output.directory = value.to_string(),
            ("output", "normalization") => {
                self.output.normalization = match value {
                    "raw" => Normalization::Raw,
                    "unit_max" => Normalization::UnitMax,
                    _ => return Err(format!("`{value}` is not one of raw, unit_max")),
                }
            }
            _ => return Err(format!("unknown key `{key}` in [{section}]")),
        }
        Ok(())
    }
}

const SECTIONS: &[&str] = &["pulse", "medium", "grid", "numerics", "output"];

/// Parses configuration text, applies it over its preset (or the defaults)
/// and validates the result.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let mut section: Option<String> = None;
    let mut entries: Vec<(usize, Option<String>, String, String)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| Error::ConfigParse {
                    line: line_no,
                    message: "unterminated section header".into(),
                })?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(Error::ConfigParse {
                    line: line_no,
                    message: format!("unknown section [{name}]"),
                });
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::ConfigParse {
            line: line_no,
            message: "expected `key = value`".into(),
        })?;
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        if key.is_empty() || value.is_empty() {
            return Err(Error::ConfigParse {
                line: line_no,
                message: "empty key or value".into(),
            });
        }
        let is_coupling = |k: &str| k == "strength" || k == "local_field";
        let clash = entries.iter().find(|(_, s, k, _)| {
            *s == section
                && (*k == key
                    || (section.as_deref() == Some("medium")
                        && is_coupling(k)
                        && is_coupling(&key)))
        });
        if let Some((first, ..)) = clash {
            return Err(Error::ConfigParse {
                line: line_no,
                message: format!("`{key}` conflicts with the value set on line {first}"),
            });
        }
        entries.push((line_no, section.clone(), key, value));
    }

    let mut config = ScenarioConfig::default();
    for (line, s, key, value) in &entries {
        if s.is_none() {
            if key != "preset" {
                return Err(Error::ConfigParse {
                    line: *line,
                    message: format!("`{key}` must appear inside a section"),
                });
            }
            config = preset(value).ok_or_else(|| Error::ConfigParse {
                line: *line,
                message: format!(
                    "unknown preset `{value}`; known: {}",
                    PRESET_NAMES.join(", ")
                ),
            })?;
        }
    }
    for (line, s, key, value) in &entries {
        if let Some(s) = s {
            config
                .set(s, key, value)
                .map_err(|message| Error::ConfigParse {
                    line: *line,
                    message: format!("{s}.{key}: {message}"),
                })?;
        }
    }
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    parse_config(&text)
}

/// Serializes every field; `parse_config(&write_config(c)) == c`.
pub fn write_config(config: &ScenarioConfig) -> String {
    let mut out = String::new();
    let mut current = String::new();
    for (key, value) in config.to_pairs() {
        match key.split_once('.') {
            None => {
                let _ = writeln!(out, "{key} = {value}");
            }
            Some((section, name)) => {
                if section != current {
                    let _ = writeln!(out, "\n[{section}]");
                    current = section.to_string();
                }
                let _ = writeln!(out, "{name} = {value}");
            }
        }
    }
    out
}
