//! First-order perturbative spectrum.
//!
//! To first order in the local-field strength `B` the coherence during the
//! pulse is `σ(t) = sin(V(2Rt)) / 2` with `V(u) = u - B(1 - cos u)`. Expanding
//! `sin V(u) = Σ_j Y_j e^{iju}` splits the scattered light into lines at
//! `ν = -2jR` with weights `|Y_j|²`; cross terms between different `j` and
//! the radiation of the residual coherence after the pulse are dropped.

mod bessel;

pub use bessel::{bessel_j, bessel_j_upto};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::field::ModeGrid;
use crate::phi::phi1;
use crate::spectrum::Spectrum;

/// Largest admissible tail weight `Σ_{|j|>J} |Y_j|²`.
pub const TRUNCATION_TOLERANCE: f64 = 1e-10;

/// Fourier coefficients `Y_j`, `j ∈ [-J, J]`, of `sin(u - B(1 - cos u))`.
#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicCoefficients {
    pub b: f64,
    pub max_order: usize,
    /// `Y_{-J} ..= Y_J`.
    pub values: Vec<C64>,
    /// `Σ_{|j|>J} |Y_j|²`, from Parseval.
    pub tail: f64,
}

impl HarmonicCoefficients {
    pub fn get(&self, j: i64) -> C64 {
        let idx = j + self.max_order as i64;
        if idx < 0 || idx as usize >= self.values.len() {
            C64::new(0.0, 0.0)
        } else {
            self.values[idx as usize]
        }
    }

    pub fn orders(&self) -> impl Iterator<Item = (i64, C64)> + '_ {
        let j0 = -(self.max_order as i64);
        self.values
            .iter()
            .enumerate()
            .map(move |(i, y)| (j0 + i as i64, *y))
    }

    pub fn power(&self, j: i64) -> f64 {
        self.get(j).norm_sqr()
    }

    pub fn total_power(&self) -> f64 {
        self.values.iter().map(|y| y.norm_sqr()).sum()
    }
}

/// `(1/2π) ∫ sin²(u - B(1 - cos u)) du = 1/2 + cos(2B) J_2(2B) / 2`.
pub fn mean_square(b: f64) -> f64 {
    0.5 + 0.5 * (2.0 * b).cos() * bessel_j(2, 2.0 * b)
}

/// Default truncation order for strength `b`.
pub fn default_order(b: f64) -> usize {
    8usize.max((2.0 + 3.0 * b * std::f64::consts::E).ceil() as usize)
}

/// Closed form from `e^{i(u-B)} e^{iB cos u} = e^{-iB} Σ_n i^n J_n(B) e^{i(n+1)u}`:
///
/// `Y_m = [e^{-iB} i^{m-1} J_{m-1}(B) - e^{iB} (-i)^{-m-1} J_{-m-1}(B)] / 2i`.
pub fn harmonic_coefficients(b: f64, max_order: usize) -> Result<HarmonicCoefficients> {
    if !(b >= 0.0 && b.is_finite()) {
        return Err(Error::param(
            "B",
            format!("must be finite and >= 0, got {b}"),
        ));
    }
    if max_order < 1 {
        return Err(Error::param("truncation_J", "must be >= 1"));
    }
    let jn = bessel_j_upto(max_order + 2, b);
    let j_signed = |n: i64| -> f64 {
        let v = jn[n.unsigned_abs() as usize];
        if n < 0 && n % 2 != 0 {
            -v
        } else {
            v
        }
    };
    let i_pow = |k: i64| -> C64 {
        match k.rem_euclid(4) {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        }
    };
    let ph = C64::from_polar(1.0, b);
    let jmax = max_order as i64;
    let values: Vec<C64> = (-jmax..=jmax)
        .map(|m| {
            // (-i)^k = i^{-k}
            let a = ph.conj() * i_pow(m - 1) * j_signed(m - 1);
            let c = ph * i_pow(m + 1) * j_signed(-m - 1);
            (a - c) / C64::new(0.0, 2.0)
        })
        .collect();
    let captured: f64 = values.iter().map(|y| y.norm_sqr()).sum();
    let tail = (mean_square(b) - captured).max(0.0);
    if tail > TRUNCATION_TOLERANCE {
        return Err(Error::Truncation {
            order: max_order,
            tail,
        });
    }
    Ok(HarmonicCoefficients {
        b,
        max_order,
        values,
        tail,
    })
}

/// `S(m) = (e^{i(ε+m)U_e} - 1) / (i(ε+m))` in units where `2R = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResonanceFactor {
    pub value: C64,
    pub abs_squared: f64,
    /// The same factor in dimensional frequency including the decay of the
    /// mode: `e^{-ηT} |S|² / (2R)²`.
    pub dimensional: f64,
}

/// `ε = (ν - iη/2) / 2R`, `U_e = 2RT`.
pub fn resonance_factor(m: i64, nu: f64, eta: f64, rabi: f64, duration: f64) -> ResonanceFactor {
    let two_r = 2.0 * rabi;
    let ue = two_r * duration;
    let eps = C64::new(nu, -0.5 * eta) / two_r + m as f64;
    let value = phi1(C64::new(0.0, 1.0) * eps * ue) * ue;
    let abs_squared = value.norm_sqr();
    ResonanceFactor {
        value,
        abs_squared,
        dimensional: (-eta * duration).exp() * abs_squared / (two_r * two_r),
    }
}

/// Line shape used for each harmonic.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LineShape {
    /// `|1 - e^{-(η/2 - iδ)T}|² / (δ² + η²/4)`.
    Exact,
    /// `1 / (δ² + η²/4)`, valid for `ηT ≫ 1`.
    LongPulse,
    /// `2(1 - cos δT) / (δ² + η²/4)`, valid for `ηT ≪ 1`.
    ShortPulse,
}

impl LineShape {
    pub fn name(self) -> &'static str {
        match self {
            LineShape::Exact => "exact",
            LineShape::LongPulse => "long_pulse",
            LineShape::ShortPulse => "short_pulse",
        }
    }

    pub fn parse(s: &str) -> Option<LineShape> {
        match s {
            "exact" => Some(LineShape::Exact),
            "long_pulse" => Some(LineShape::LongPulse),
            "short_pulse" => Some(LineShape::ShortPulse),
            _ => None,
        }
    }
}

/// `|β|²` per unit `κ²|Y|²/4` after driving for time `t`, for one harmonic
/// detuned by `delta` from a mode of damping `eta`.
fn line_power(shape: LineShape, delta: f64, eta: f64, t: f64) -> f64 {
    let d = delta * delta + 0.25 * eta * eta;
    match shape {
        LineShape::Exact => t * t * phi1(C64::new(-0.5 * eta * t, delta * t)).norm_sqr(),
        LineShape::LongPulse => 1.0 / d,
        LineShape::ShortPulse => {
            let s = (0.5 * delta * t).sin();
            4.0 * s * s / d
        }
    }
}

/// `T - sin(δT)/δ` without cancellation.
fn t_minus_sinc(delta: f64, t: f64) -> f64 {
    let x = delta * t;
    if x.abs() < 1e-2 {
        let x2 = x * x;
        t * x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0))
    } else {
        t - x.sin() / delta
    }
}

/// `∫₀^T line_power(t) dt`.
fn line_energy_during(shape: LineShape, delta: f64, eta: f64, t: f64) -> f64 {
    let d = delta * delta + 0.25 * eta * eta;
    match shape {
        LineShape::Exact => {
            // T [1 + φ₁(-ηT) - 2 Re φ₁(-aT)] / |a|², a = η/2 - iδ
            let a = C64::new(0.5 * eta, -delta);
            let z = -a * t;
            if z.norm() <= 1.0 {
                // the k = 0, 1 terms of the φ₁ series cancel exactly
                let mut sum = 0.0;
                let mut pe = 1.0; // (-ηT)^k / (k+1)!
                let mut pa = C64::new(1.0, 0.0);
                for k in 1..40 {
                    pe *= -eta * t / (k + 1) as f64;
                    pa *= z / (k + 1) as f64;
                    if k >= 2 {
                        sum += pe - 2.0 * pa.re;
                    }
                }
                t * sum / d
            } else {
                t * (1.0 + phi1(C64::new(-eta * t, 0.0)).re - 2.0 * phi1(z).re) / d
            }
        }
        LineShape::LongPulse => t / d,
        LineShape::ShortPulse => 2.0 * t_minus_sinc(delta, t) / d,
    }
}

/// Analytic counterpart of the simulated spectrum.
///
/// `intensity_at_detection` is taken `delay` after the end of the pulse,
/// `I = scale · η κ²/4 · e^{-η·delay} Σ_j |Y_j|² P_j(T)`; `integrated` adds
/// the driven build-up and the free decay of every line to infinity.
pub fn perturbative_spectrum(
    grid: &ModeGrid,
    b: f64,
    rabi: f64,
    duration: f64,
    delay: f64,
    shape: LineShape,
) -> Result<Spectrum> {
    perturbative_spectrum_with_order(grid, b, rabi, duration, delay, shape, default_order(b))
}

pub fn perturbative_spectrum_with_order(
    grid: &ModeGrid,
    b: f64,
    rabi: f64,
    duration: f64,
    delay: f64,
    shape: LineShape,
    order: usize,
) -> Result<Spectrum> {
    if !(rabi > 0.0 && rabi.is_finite()) {
        return Err(Error::param("rabi", "must be finite and > 0"));
    }
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::param("duration", "must be finite and > 0"));
    }
    if !(delay >= 0.0 && delay.is_finite()) {
        return Err(Error::param("delay", "must be finite and >= 0"));
    }
    let y = harmonic_coefficients(b, order)?;
    let weights: Vec<(f64, f64)> = y
        .orders()
        .filter(|(_, c)| c.norm_sqr() > 0.0)
        .map(|(j, c)| (2.0 * j as f64 * rabi, c.norm_sqr()))
        .collect();
    let k2 = 0.25 * grid.coupling * grid.coupling * grid.intensity_scale;
    let mut at_detection = Vec::with_capacity(grid.len());
    let mut integrated = Vec::with_capacity(grid.len());
    for mode in &grid.modes {
        let (mut now, mut total) = (0.0, 0.0);
        for &(shift, w) in &weights {
            let delta = mode.nu + shift;
            let p_end = line_power(shape, delta, mode.eta, duration);
            now += w * p_end;
            total += w * (line_energy_during(shape, delta, mode.eta, duration) + p_end / mode.eta);
        }
        at_detection.push(k2 * mode.eta * (-mode.eta * delay).exp() * now);
        integrated.push(k2 * mode.eta * total);
    }
    Ok(Spectrum {
        nu: grid.nu(),
        intensity_at_detection: at_detection,
        integrated,
        detection_time: duration + delay,
        t_end: duration + delay,
        params: Vec::new(),
    })
}

/// Relative line intensities `|Y_j|² / |Y_1|²`, one row per `B`.
#[derive(Clone, Debug, PartialEq)]
pub struct LineIntensityTable {
    pub orders: Vec<i64>,
    pub b_values: Vec<f64>,
    pub ratios: Vec<Vec<f64>>,
}

pub fn line_intensity_curve(b_values: &[f64], orders: &[i64]) -> Result<LineIntensityTable> {
    let mut ratios = Vec::with_capacity(b_values.len());
    for &b in b_values {
        let max_j = orders
            .iter()
            .map(|j| j.unsigned_abs() as usize)
            .max()
            .unwrap_or(1);
        let y = harmonic_coefficients(b, default_order(b).max(max_j))?;
        let reference = y.power(1);
        ratios.push(orders.iter().map(|&j| y.power(j) / reference).collect());
    }
    Ok(LineIntensityTable {
        orders: orders.to_vec(),
        b_values: b_values.to_vec(),
        ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Midpoint-rule Fourier coefficient of `sin(u - B(1 - cos u))`.
    fn fourier_oracle(b: f64, j: i64, points: usize) -> C64 {
        let h = 2.0 * PI / points as f64;
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..points {
            let u = (k as f64 + 0.5) * h;
            let f = (u - b * (1.0 - u.cos())).sin();
            acc += C64::from_polar(f, -(j as f64) * u);
        }
        acc / points as f64
    }

    #[test]
    fn pure_sine_at_zero_strength() {
        let y = harmonic_coefficients(0.0, 8).unwrap();
        for (j, c) in y.orders() {
            let expected = match j {
                1 => C64::new(0.0, -0.5),
                -1 => C64::new(0.0, 0.5),
                _ => C64::new(0.0, 0.0),
            };
            assert!((c - expected).norm() < 1e-16, "Y_{j} = {c}");
        }
    }

    #[test]
    fn closed_form_matches_quadrature_oracle() {
        for b in [0.05, 0.1, 0.32, 0.64, 0.85, 1.2] {
            let y = harmonic_coefficients(b, default_order(b)).unwrap();
            for (j, c) in y.orders() {
                let oracle = fourier_oracle(b, j, 4096);
                assert!((c - oracle).norm() < 1e-12, "B={b} Y_{j}: {c} vs {oracle}");
            }
            let direct: f64 = (0..4096)
                .map(|k| {
                    let u = (k as f64 + 0.5) * 2.0 * PI / 4096.0;
                    (u - b * (1.0 - u.cos())).sin().powi(2)
                })
                .sum::<f64>()
                / 4096.0;
            assert!((y.total_power() - direct).abs() < 1e-12);
            assert!((mean_square(b) - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn dc_term_small_strength() {
        for b in [1e-3, 1e-2] {
            let y0 = harmonic_coefficients(b, 8).unwrap().get(0);
            assert!((y0.re - b / 2.0).abs() < b * b, "{y0}");
            assert!(y0.im.abs() < b * b);
            assert!((y0.re - bessel_j(1, b) * b.cos()).abs() < 1e-16);
        }
    }

    #[test]
    fn coefficients_are_hermitian() {
        let y = harmonic_coefficients(0.64, 12).unwrap();
        for j in 0..=12 {
            assert!((y.get(-j) - y.get(j).conj()).norm() < 1e-16);
        }
    }

    #[test]
    fn truncation_is_flagged() {
        assert!(matches!(
            harmonic_coefficients(1.2, 2),
            Err(Error::Truncation { order: 2, .. })
        ));
        assert!(harmonic_coefficients(1.2, default_order(1.2)).is_ok());
    }

    #[test]
    fn resonance_factor_limits() {
        let r = 10.0 * PI;
        let t = 1.9;
        for m in [-2, 0, 1, 3] {
            let s = resonance_factor(m, -2.0 * m as f64 * r, 0.0, r, t);
            assert!((s.value - C64::new(2.0 * r * t, 0.0)).norm() < 1e-13 * 2.0 * r * t);
            assert!((s.abs_squared - s.value.norm_sqr()).abs() <= 1e-12 * s.abs_squared);
        }
        // line centre, short times: P → T²
        let s = resonance_factor(0, 0.0, 0.0, r, 1e-3);
        assert!((s.dimensional - 1e-6).abs() < 1e-18);
        // ηT = 20: Lorentzian limit
        let (eta, t) = (5.0, 4.0);
        for nu in [-3.0 * r, -2.0 * r + 1.0, 0.5] {
            let s = resonance_factor(1, nu, eta, r, t);
            let delta = nu + 2.0 * r;
            let lorentz = 1.0 / (delta * delta + eta * eta / 4.0);
            assert!((s.dimensional / lorentz - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn dimensional_factor_matches_line_power() {
        let r = 10.0 * PI;
        for (nu, eta, t) in [(3.0, 5.0, 1.9), (-60.0, 0.1, 0.3), (0.0, 1.0, 1.0)] {
            let s = resonance_factor(1, nu, eta, r, t);
            let p = line_power(LineShape::Exact, nu + 2.0 * r, eta, t);
            assert!((s.dimensional - p).abs() < 1e-12 * p.max(1e-300));
        }
    }

    #[test]
    fn line_energy_matches_quadrature() {
        for shape in [
            LineShape::Exact,
            LineShape::LongPulse,
            LineShape::ShortPulse,
        ] {
            for (delta, eta, t) in [
                (0.0, 0.1, 0.3),
                (1e-3, 0.1, 0.3),
                (20.0, 5.0, 1.9),
                (3.0, 0.5, 2.0),
            ] {
                let n = 20_000;
                let h = t / n as f64;
                let quad: f64 = (0..n)
                    .map(|k| line_power(shape, delta, eta, (k as f64 + 0.5) * h))
                    .sum::<f64>()
                    * h;
                let exact = line_energy_during(shape, delta, eta, t);
                assert!(
                    (quad - exact).abs() < 1e-7 * exact.abs().max(1e-12),
                    "{shape:?} {delta} {quad} vs {exact}"
                );
            }
        }
    }

    fn grid(eta: f64) -> ModeGrid {
        let r = 10.0 * PI;
        ModeGrid::uniform(-12.0 * r, 12.0 * r, 2001, eta, 1.0, 1.0).unwrap()
    }

    #[test]
    fn zero_strength_gives_two_lines() {
        let r = 10.0 * PI;
        let s = perturbative_spectrum(&grid(5.0), 0.0, r, 1.9, 0.0, LineShape::Exact).unwrap();
        let v = &s.intensity_at_detection;
        let maxima: Vec<f64> = (1..v.len() - 1)
            .filter(|&i| {
                v[i] > v[i - 1]
                    && v[i] >= v[i + 1]
                    && v[i] > 0.02 * v.iter().cloned().fold(0.0, f64::max)
            })
            .map(|i| s.nu[i])
            .collect();
        assert_eq!(maxima.len(), 2, "{maxima:?}");
        let h = s.nu[1] - s.nu[0];
        assert!((maxima[0] + 2.0 * r).abs() < h && (maxima[1] - 2.0 * r).abs() < h);
    }

    #[test]
    fn delay_is_a_pure_prefactor() {
        let r = 10.0 * PI;
        let g = grid(5.0);
        let a = perturbative_spectrum(&g, 0.32, r, 1.9, 0.1, LineShape::Exact).unwrap();
        let b = perturbative_spectrum(&g, 0.32, r, 1.9, 0.2, LineShape::Exact).unwrap();
        for (x, y) in a
            .intensity_at_detection
            .iter()
            .zip(&b.intensity_at_detection)
        {
            assert!((y / x - (-0.5f64).exp()).abs() < 1e-12);
        }
        assert_eq!(a.integrated, b.integrated);
    }

    #[test]
    fn long_pulse_limit_consistency() {
        let r = 10.0 * PI;
        let g = grid(5.0);
        let t = 6.0;
        let exact = perturbative_spectrum(&g, 0.32, r, t, 0.0, LineShape::Exact).unwrap();
        let long = perturbative_spectrum(&g, 0.32, r, t, 0.0, LineShape::LongPulse).unwrap();
        for (x, y) in exact
            .intensity_at_detection
            .iter()
            .zip(&long.intensity_at_detection)
        {
            assert!((x / y - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn short_pulse_central_width() {
        let r = 10.0 * PI;
        for t in [0.3, 0.5] {
            let eta = 0.1;
            let g = ModeGrid::uniform(-2.0 * r, 2.0 * r, 4001, eta, 1.0, 1.0).unwrap();
            let s = perturbative_spectrum(&g, 0.0, r, t, 0.0, LineShape::ShortPulse).unwrap();
            // B = 0: the line at +2R; measure its FWHM
            let v = &s.intensity_at_detection;
            let peak = (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap();
            let half = v[peak] / 2.0;
            let mut lo = peak;
            while v[lo] > half {
                lo -= 1;
            }
            let mut hi = peak;
            while v[hi] > half {
                hi += 1;
            }
            let fwhm = s.nu[hi] - s.nu[lo];
            assert!((2.0..=9.0).contains(&(fwhm * t)), "{}", fwhm * t);
        }
    }

    #[test]
    fn relative_line_intensities() {
        let t = line_intensity_curve(&[0.0, 0.1, 0.32, 0.5], &[1, 2, 3, 4]).unwrap();
        assert_eq!(t.ratios[0], vec![1.0, 0.0, 0.0, 0.0]);
        for row in &t.ratios[1..] {
            assert!(row.windows(2).all(|w| w[1] < w[0]), "{row:?}");
        }
        let r2 = t.ratios[2][1];
        assert!(r2 > 0.0 && r2 < 0.1, "{r2}");
    }

    #[test]
    fn high_orders_follow_bessel_asymptotics() {
        // |Y_j| ≈ |J_{j-1}(B)|/2 for j ≫ B, and J_n(B) ≈ (eB/2n)^n / √(2πn)
        let b = 0.32;
        let y = harmonic_coefficients(b, 14).unwrap();
        for j in 6..12i64 {
            let n = (j - 1) as f64;
            let slope = (y.get(j + 1).norm() / y.get(j).norm()).ln();
            let approx =
                |n: f64| n * (std::f64::consts::E * b / (2.0 * n)).ln() - 0.5 * (2.0 * PI * n).ln();
            let predicted = approx(n + 1.0) - approx(n);
            assert!(
                (slope - predicted).abs() < 0.05 * predicted.abs(),
                "j={j}: {slope} vs {predicted}"
            );
        }
    }
}
