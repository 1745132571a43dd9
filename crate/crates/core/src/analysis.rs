//! Peak extraction, line assignment and spectrum comparison.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::spectrum::{Column, Spectrum};

pub const DEFAULT_THRESHOLD: f64 = 0.02;

/// Fraction of the line spacing `2R` within which a peak is assigned to a
/// Rabi multiple (half of the `0.5 · 2R` window on each side).
pub const ASSIGNMENT_HALF_WIDTH: f64 = 0.25;

/// Smallest `prominence / height` for a secondary maximum to count as a
/// resolved modulation sidelobe.
pub const SIDELOBE_MIN_PROMINENCE: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Peak {
    pub nu_center: f64,
    pub height: f64,
    pub fwhm: f64,
    /// Height above the higher of the two minima bounding the peak.
    pub prominence: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeakSet {
    /// Ordered by `nu_center`.
    pub peaks: Vec<Peak>,
    pub threshold_used: f64,
}

impl PeakSet {
    pub fn len(&self) -> usize {
        self.peaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }

    pub fn tallest(&self) -> Option<&Peak> {
        self.peaks
            .iter()
            .max_by(|a, b| a.height.total_cmp(&b.height))
    }
}

/// Vertex of the parabola through three points; falls back to the middle
/// point when they are collinear.
fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> (f64, f64) {
    let d01 = (y[1] - y[0]) / (x[1] - x[0]);
    let d12 = (y[2] - y[1]) / (x[2] - x[1]);
    let a = (d12 - d01) / (x[2] - x[0]);
    if !(a < 0.0) {
        return (x[1], y[1]);
    }
    let b = d01 - a * (x[0] + x[1]);
    let xv = (-b / (2.0 * a)).clamp(x[0], x[2]);
    let yv = y[1] + d01 * (xv - x[1]) + a * (xv - x[0]) * (xv - x[1]);
    (xv, yv.max(y[1]))
}

fn bounding_minimum(v: &[f64], from: usize, step: isize) -> f64 {
    let mut i = from as isize;
    loop {
        let j = i + step;
        if j < 0 || j as usize >= v.len() || v[j as usize] > v[i as usize] {
            return v[i as usize];
        }
        i = j;
    }
}

fn half_crossing(nu: &[f64], v: &[f64], apex: usize, half: f64, step: isize) -> Option<f64> {
    let mut i = apex as isize;
    loop {
        let j = i + step;
        if j < 0 || j as usize >= v.len() {
            return None;
        }
        let (iu, ju) = (i as usize, j as usize);
        if v[ju] <= half {
            let w = (v[iu] - half) / (v[iu] - v[ju]);
            return Some(nu[iu] + w * (nu[ju] - nu[iu]));
        }
        i = j;
    }
}

/// Local maxima of `values` above `rel_threshold · max`, with parabolic
/// centre refinement and half-height widths from linear interpolation. A
/// width with only one resolvable half-height crossing is mirrored.
pub fn find_peaks_in(nu: &[f64], values: &[f64], rel_threshold: f64) -> Result<PeakSet> {
    if nu.len() != values.len() {
        return Err(Error::InvalidInput(
            "nu and intensity lengths differ".into(),
        ));
    }
    if nu.len() < 3 {
        return Err(Error::InvalidInput("need at least 3 grid points".into()));
    }
    if !(rel_threshold > 0.0 && rel_threshold < 1.0) {
        return Err(Error::param("rel_threshold", "must lie in (0, 1)"));
    }
    let max = values.iter().cloned().fold(0.0, f64::max);
    let mut peaks = Vec::new();
    if !(max > 0.0) {
        return Ok(PeakSet {
            peaks,
            threshold_used: rel_threshold,
        });
    }
    let floor = rel_threshold * max;
    let n = values.len();
    let mut i = 1;
    while i < n - 1 {
        if values[i] > values[i - 1] && values[i] >= values[i + 1] {
            // step over a plateau; it is a maximum only if it falls afterwards
            let mut k = i;
            while k + 1 < n && values[k + 1] == values[i] {
                k += 1;
            }
            if k + 1 < n && values[i] >= floor {
                let (center, height) = if k == i {
                    parabola_vertex(
                        [nu[i - 1], nu[i], nu[i + 1]],
                        [values[i - 1], values[i], values[i + 1]],
                    )
                } else {
                    (0.5 * (nu[i] + nu[k]), values[i])
                };
                let half = 0.5 * height;
                let left = half_crossing(nu, values, i, half, -1);
                let right = half_crossing(nu, values, k, half, 1);
                let fwhm = match (left, right) {
                    (Some(l), Some(r)) => r - l,
                    (Some(l), None) => 2.0 * (center - l),
                    (None, Some(r)) => 2.0 * (r - center),
                    (None, None) => nu[n - 1] - nu[0],
                };
                let base = bounding_minimum(values, i, -1).max(bounding_minimum(values, k, 1));
                peaks.push(Peak {
                    nu_center: center,
                    height,
                    fwhm: fwhm.max(f64::MIN_POSITIVE),
                    prominence: height - base,
                });
            }
            i = k + 1;
        } else {
            i += 1;
        }
    }
    Ok(PeakSet {
        peaks,
        threshold_used: rel_threshold,
    })
}

pub fn find_peaks(spec: &Spectrum, column: Column, rel_threshold: f64) -> Result<PeakSet> {
    find_peaks_in(&spec.nu, spec.column(column), rel_threshold)
}

/// Peaks sorted onto Rabi multiples `ν ≈ 2jR`.
#[derive(Clone, Debug, PartialEq)]
pub struct LineRatios {
    /// Height of the peak assigned to `j`, relative to the tallest peak.
    pub assigned: BTreeMap<i64, f64>,
    pub unassigned: Vec<Peak>,
}

impl LineRatios {
    /// Number of assigned lines other than the central one.
    pub fn sideband_count(&self) -> usize {
        self.assigned.keys().filter(|&&j| j != 0).count()
    }

    pub fn get(&self, j: i64) -> Option<f64> {
        self.assigned.get(&j).copied()
    }
}

/// Assigns each peak to the nearest multiple `j · 2R` if it lies within
/// `ASSIGNMENT_HALF_WIDTH · 2R` of it; when several peaks compete for one
/// `j` the tallest wins.
pub fn line_ratios(peaks: &PeakSet, rabi: f64) -> Result<LineRatios> {
    if !(rabi > 0.0) {
        return Err(Error::param("rabi", "must be > 0"));
    }
    let spacing = 2.0 * rabi;
    let top = peaks.tallest().map(|p| p.height).unwrap_or(0.0);
    let mut best: BTreeMap<i64, Peak> = BTreeMap::new();
    let mut unassigned = Vec::new();
    for p in &peaks.peaks {
        let j = (p.nu_center / spacing).round();
        if (p.nu_center - j * spacing).abs() > ASSIGNMENT_HALF_WIDTH * spacing {
            unassigned.push(*p);
            continue;
        }
        let j = j as i64;
        match best.get(&j) {
            Some(q) if q.height >= p.height => unassigned.push(*p),
            Some(q) => {
                unassigned.push(*q);
                best.insert(j, *p);
            }
            None => {
                best.insert(j, *p);
            }
        }
    }
    unassigned.sort_by(|a, b| a.nu_center.total_cmp(&b.nu_center));
    Ok(LineRatios {
        assigned: best.into_iter().map(|(j, p)| (j, p.height / top)).collect(),
        unassigned,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Comparison {
    /// Largest `|a - b| / min(a, b)` over the peaks of either spectrum.
    pub max_rel_peak_diff: f64,
    /// `‖a - b‖ / mean(‖a‖, ‖b‖)`.
    pub l2_rel: f64,
}

fn same_grid(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0))
}

pub fn compare_columns(nu_a: &[f64], a: &[f64], nu_b: &[f64], b: &[f64]) -> Result<Comparison> {
    if !same_grid(nu_a, nu_b) || a.len() != nu_a.len() || b.len() != nu_b.len() {
        return Err(Error::InvalidInput(
            "spectra are not on the same grid".into(),
        ));
    }
    let pa = find_peaks_in(nu_a, a, DEFAULT_THRESHOLD)?;
    let pb = find_peaks_in(nu_b, b, DEFAULT_THRESHOLD)?;
    let mut idx: Vec<usize> = pa
        .peaks
        .iter()
        .chain(&pb.peaks)
        .map(|p| nearest_index(nu_a, p.nu_center))
        .collect();
    idx.sort_unstable();
    idx.dedup();
    let mut max_rel: f64 = 0.0;
    for i in idx {
        let (x, y) = (a[i], b[i]);
        if x == y {
            continue;
        }
        let lo = x.min(y);
        max_rel = max_rel.max(if lo > 0.0 {
            (x - y).abs() / lo
        } else {
            f64::INFINITY
        });
    }
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    let mean = 0.5 * (norm(a) + norm(b));
    let l2_rel = if diff == 0.0 { 0.0 } else { diff / mean };
    Ok(Comparison {
        max_rel_peak_diff: max_rel,
        l2_rel,
    })
}

pub fn compare_spectra(a: &Spectrum, b: &Spectrum, column: Column) -> Result<Comparison> {
    compare_columns(&a.nu, a.column(column), &b.nu, b.column(column))
}

fn nearest_index(grid: &[f64], x: f64) -> usize {
    let hi = grid.partition_point(|&g| g < x);
    if hi == 0 {
        0
    } else if hi >= grid.len() {
        grid.len() - 1
    } else if x - grid[hi - 1] <= grid[hi] - x {
        hi - 1
    } else {
        hi
    }
}

/// Largest sample with `|ν - center| ≤ half_width`.
pub fn window_max(spec: &Spectrum, column: Column, center: f64, half_width: f64) -> f64 {
    spec.nu
        .iter()
        .zip(spec.column(column))
        .filter(|(nu, _)| (*nu - center).abs() <= half_width)
        .map(|(_, v)| *v)
        .fold(0.0, f64::max)
}

/// Strongest intensity away from the centre (`|ν| ≥ R`) over the strongest
/// intensity near it (`|ν| < R`).
pub fn sideband_to_center(spec: &Spectrum, column: Column, rabi: f64) -> f64 {
    let (mut side, mut center) = (0.0f64, 0.0f64);
    for (nu, v) in spec.nu.iter().zip(spec.column(column)) {
        if nu.abs() < rabi {
            center = center.max(*v);
        } else {
            side = side.max(*v);
        }
    }
    side / center
}

/// Resolved secondary maxima strictly between the central peak and the
/// strongest peak in `[R, 3R]`, on the positive-detuning side. Shallow
/// ripples below `SIDELOBE_MIN_PROMINENCE` of their height are ignored.
pub fn modulation_sidelobes(peaks: &PeakSet, rabi: f64) -> Vec<Peak> {
    let central = peaks
        .peaks
        .iter()
        .filter(|p| p.nu_center.abs() < rabi)
        .max_by(|a, b| a.height.total_cmp(&b.height));
    let line = peaks
        .peaks
        .iter()
        .filter(|p| p.nu_center >= rabi && p.nu_center <= 3.0 * rabi)
        .max_by(|a, b| a.height.total_cmp(&b.height));
    let lo = central.map(|p| p.nu_center).unwrap_or(0.0).max(0.0);
    let hi = line.map(|p| p.nu_center).unwrap_or(2.0 * rabi);
    peaks
        .peaks
        .iter()
        .filter(|p| p.nu_center > lo && p.nu_center < hi)
        .filter(|p| p.prominence >= SIDELOBE_MIN_PROMINENCE * p.height)
        .copied()
        .collect()
}

/// `|I(+ν) - I(-ν)| / max(I(+ν), I(-ν))` using window maxima around `±ν`.
pub fn mirror_asymmetry(spec: &Spectrum, column: Column, nu: f64, half_width: f64) -> f64 {
    let p = window_max(spec, column, nu, half_width);
    let m = window_max(spec, column, -nu, half_width);
    let top = p.max(m);
    if top == 0.0 {
        0.0
    } else {
        (p - m).abs() / top
    }
}
