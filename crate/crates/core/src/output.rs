//! Delimiter-separated result tables with `#`-prefixed manifest headers.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::analysis::{Comparison, LineRatios, PeakSet};
use crate::config::{parse_config, ScenarioConfig};
use crate::error::{Error, Result};
use crate::pipeline::DERIVED_PREFIX;
use crate::spectrum::{Column, Spectrum};

pub const SPECTRUM_HEADER: [&str; 3] = ["nu", "I_detection", "I_integrated"];

/// 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(format!("creating {}", path.display()), e))
}

fn write_header(
    out: &mut impl Write,
    path: &Path,
    title: &str,
    params: &[(String, String)],
) -> Result<()> {
    let io = |e| Error::io(format!("writing {}", path.display()), e);
    writeln!(out, "# {title}").map_err(io)?;
    for (k, v) in params {
        writeln!(out, "# {k} = {v}").map_err(io)?;
    }
    Ok(())
}

fn finish<W: Write>(w: csv::Writer<W>, path: &Path) -> Result<()> {
    let mut inner = w
        .into_inner()
        .map_err(|e| Error::io(format!("writing {}", path.display()), e.into_error()))?;
    inner
        .flush()
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn write_spectrum_csv(path: &Path, spec: &Spectrum, title: &str) -> Result<()> {
    let mut out = create(path)?;
    write_header(&mut out, path, title, &spec.params)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SPECTRUM_HEADER)?;
    for i in 0..spec.len() {
        w.write_record([
            fmt_num(spec.nu[i]),
            fmt_num(spec.intensity_at_detection[i]),
            fmt_num(spec.integrated[i]),
        ])?;
    }
    finish(w, path)
}

/// Reads a table written by `write_spectrum_csv`, header parameters included.
pub fn read_spectrum_csv(path: &Path) -> Result<Spectrum> {
    let file = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    let mut params = Vec::new();
    for line in BufReader::new(&file).lines() {
        let line = line.map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let Some(rest) = line.strip_prefix('#') else {
            break;
        };
        if let Some((k, v)) = rest.split_once('=') {
            params.push((k.trim().to_string(), v.trim().to_string()));
        }
    }
    let file = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(file);
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != SPECTRUM_HEADER {
        return Err(Error::InvalidInput(format!(
            "{}: expected columns {}",
            path.display(),
            SPECTRUM_HEADER.join(",")
        )));
    }
    let (mut nu, mut det, mut int) = (Vec::new(), Vec::new(), Vec::new());
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "{}: bad number in data row {}",
                        path.display(),
                        row + 1
                    ))
                })
        };
        nu.push(parse(0)?);
        det.push(parse(1)?);
        int.push(parse(2)?);
    }
    let lookup = |key: &str| {
        params
            .iter()
            .find(|(k, _)| k == key)
            .and_then(|(_, v)| v.parse::<f64>().ok())
            .unwrap_or(f64::NAN)
    };
    Ok(Spectrum {
        detection_time: lookup("derived.detection_time"),
        t_end: lookup("derived.t_end"),
        nu,
        intensity_at_detection: det,
        integrated: int,
        params,
    })
}

/// Rebuilds the scenario recorded in a table's header.
pub fn config_from_params(params: &[(String, String)]) -> Result<ScenarioConfig> {
    let mut text = String::new();
    let mut section = "";
    for (k, v) in params {
        if k.starts_with(DERIVED_PREFIX) {
            continue;
        }
        match k.split_once('.') {
            None => text.push_str(&format!("{k} = {v}\n")),
            Some((s, name)) => {
                if s != section {
                    text.push_str(&format!("[{s}]\n"));
                    section = s;
                }
                text.push_str(&format!("{name} = {v}\n"));
            }
        }
    }
    parse_config(&text)
}

pub fn column_name(c: Column) -> &'static str {
    match c {
        Column::Detection => "detection",
        Column::Integrated => "integrated",
    }
}

/// One row per peak; `j` is empty for peaks not assigned to a Rabi multiple.
pub fn write_peaks_csv(
    path: &Path,
    params: &[(String, String)],
    rabi: f64,
    rows: &[(Column, PeakSet, LineRatios)],
) -> Result<()> {
    let mut out = create(path)?;
    write_header(&mut out, path, "lfscatter peaks", params)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "column",
        "nu_center",
        "height",
        "fwhm",
        "prominence",
        "threshold",
        "j",
        "relative_height",
    ])?;
    for (col, set, ratios) in rows {
        for p in &set.peaks {
            let (j, rel) = if ratios.unassigned.contains(p) {
                (String::new(), String::new())
            } else {
                let j = (p.nu_center / (2.0 * rabi)).round() as i64;
                (
                    j.to_string(),
                    ratios.get(j).map(fmt_num).unwrap_or_default(),
                )
            };
            w.write_record([
                column_name(*col).to_string(),
                fmt_num(p.nu_center),
                fmt_num(p.height),
                fmt_num(p.fwhm),
                fmt_num(p.prominence),
                fmt_num(set.threshold_used),
                j,
                rel,
            ])?;
        }
    }
    finish(w, path)
}

pub fn write_compare_csv(
    path: &Path,
    params: &[(String, String)],
    rows: &[(Column, Comparison)],
) -> Result<()> {
    let mut out = create(path)?;
    write_header(&mut out, path, "lfscatter compare", params)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["column", "max_rel_peak_diff", "l2_rel"])?;
    for (col, c) in rows {
        w.write_record([
            column_name(*col).to_string(),
            fmt_num(c.max_rel_peak_diff),
            fmt_num(c.l2_rel),
        ])?;
    }
    finish(w, path)
}

/// Loadable configuration followed by the derived quantities as comments.
pub fn write_manifest(
    path: &Path,
    config: &ScenarioConfig,
    params: &[(String, String)],
) -> Result<()> {
    let mut out = create(path)?;
    let io = |e| Error::io(format!("writing {}", path.display()), e);
    out.write_all(crate::config::write_config(config).as_bytes())
        .map_err(io)?;
    writeln!(out, "\n# derived").map_err(io)?;
    for (k, v) in params.iter().filter(|(k, _)| k.starts_with(DERIVED_PREFIX)) {
        writeln!(out, "# {} = {v}", &k[DERIVED_PREFIX.len()..]).map_err(io)?;
    }
    writeln!(out, "# version = {}", env!("CARGO_PKG_VERSION")).map_err(io)?;
    out.flush().map_err(io)
}
