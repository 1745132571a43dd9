//! Scattered-field modes driven by the recorded atomic coherence.
//!
//! Each detector mode carries a coherent amplitude obeying
//!
//! ```text
//! dβ'/dt = -(iν + η/2) β' - κ σ₂₁(t),    β'(0) = 0
//! ```
//!
//! and radiates `I = η |β'|²` (times a lumped scale). The atom does not feel
//! the modes, so every mode is an independent linear filter of one shared
//! trajectory.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::bloch::{AtomSettings, AtomicState, MediumParams, PolarizationTrajectory};
use crate::error::{Error, Result};
use crate::phi::{phi1, phi2};
use crate::spectrum::Spectrum;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mode {
    /// Detuning ν from the laser carrier.
    pub nu: f64,
    /// Damping η.
    pub eta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeGrid {
    pub modes: Vec<Mode>,
    /// Lumped atom-mode coupling `N g*`.
    pub coupling: f64,
    /// Lumped `ħω` and volume factors.
    pub intensity_scale: f64,
}

impl ModeGrid {
    pub fn new(modes: Vec<Mode>, coupling: f64, intensity_scale: f64) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::param("modes", "grid is empty"));
        }
        if !(coupling > 0.0 && coupling.is_finite()) {
            return Err(Error::param("kappa", "must be finite and > 0"));
        }
        if !(intensity_scale > 0.0 && intensity_scale.is_finite()) {
            return Err(Error::param("intensity_scale", "must be finite and > 0"));
        }
        for m in &modes {
            if !(m.eta > 0.0 && m.eta.is_finite()) {
                return Err(Error::param(
                    "eta",
                    format!("must be finite and > 0, got {}", m.eta),
                ));
            }
            if !m.nu.is_finite() {
                return Err(Error::param("nu", "must be finite"));
            }
        }
        if modes.windows(2).any(|w| w[1].nu <= w[0].nu) {
            return Err(Error::param("nu", "must be strictly increasing"));
        }
        Ok(ModeGrid {
            modes,
            coupling,
            intensity_scale,
        })
    }

    /// `n` equally spaced modes on `[nu_min, nu_max]` sharing one damping.
    pub fn uniform(
        nu_min: f64,
        nu_max: f64,
        n: usize,
        eta: f64,
        coupling: f64,
        intensity_scale: f64,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::param("n_modes", "need at least 2 modes"));
        }
        if !(nu_min < nu_max) {
            return Err(Error::param("nu_min", "must be < nu_max"));
        }
        let step = (nu_max - nu_min) / (n - 1) as f64;
        let modes = (0..n)
            .map(|i| Mode {
                nu: if i == n - 1 {
                    nu_max
                } else {
                    nu_min + i as f64 * step
                },
                eta,
            })
            .collect();
        Self::new(modes, coupling, intensity_scale)
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn nu(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.nu).collect()
    }
}

/// Closed-form continuation `β(t_start + s)` for a mode forced by a coherence
/// decaying as `σ e^{-μ s}`:
///
/// `β(s) = e^{-λs} β₀ - f (e^{-μs} - e^{-λs}) / (λ - μ)`, with `f = κσ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RingDown {
    pub t_start: f64,
    pub beta0: C64,
    pub forcing: C64,
    /// Mode rate `iν + η/2`.
    pub lambda: C64,
    /// Coherence rate after the pulse.
    pub mu: C64,
}

impl RingDown {
    pub fn value(&self, s: f64) -> C64 {
        let decay = (-self.lambda * s).exp();
        let delta = self.lambda - self.mu;
        let driven = if (delta * s).norm() <= 1.0 {
            // s e^{-λs} φ₁(δs) == (e^{-μs} - e^{-λs}) / δ without cancellation
            decay * phi1(delta * s) * s
        } else {
            ((-self.mu * s).exp() - decay) / delta
        };
        self.beta0 * decay - self.forcing * driven
    }

    /// Exact `∫₀^∞ |β(s)|² ds`; infinite if the forcing never decays.
    pub fn integral_abs2(&self) -> f64 {
        let p = 2.0 * self.lambda.re;
        let q = 2.0 * self.mu.re;
        let c = self.lambda + self.mu.conj();
        let a = self.beta0;
        let f = self.forcing;
        let free = a.norm_sqr() / p;
        if f.norm_sqr() == 0.0 {
            return free;
        }
        if !(q > 0.0) {
            return f64::INFINITY;
        }
        // |c|² - pq = |λ - μ|², which keeps this form regular at λ = μ
        let cross = -2.0 * (a * f.conj() / (c * p)).re;
        let forced = f.norm_sqr() * (p + q) / (p * q * c.norm_sqr());
        (free + cross + forced).max(0.0)
    }

    fn shifted(&self, s: f64) -> RingDown {
        RingDown {
            t_start: self.t_start + s,
            beta0: self.value(s),
            forcing: self.forcing * (-self.mu * s).exp(),
            ..*self
        }
    }
}

/// Sampled `β'_k(t)` on a uniform grid, optionally followed by an exact tail.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeAmplitudeSeries {
    pub mode_index: usize,
    pub nu: f64,
    pub eta: f64,
    pub coupling: f64,
    pub t0: f64,
    pub dt: f64,
    pub beta: Vec<C64>,
    /// Closed-form continuation from the last sample on.
    pub tail: Option<RingDown>,
}

impl ModeAmplitudeSeries {
    pub fn time(&self, index: usize) -> f64 {
        self.t0 + index as f64 * self.dt
    }

    pub fn end_time(&self) -> f64 {
        self.time(self.beta.len() - 1)
    }

    /// `β'` at `t`: nearest sample inside the sampled span, the closed-form
    /// tail beyond it.
    pub fn value_at(&self, t: f64) -> Option<C64> {
        let end = self.end_time();
        if t <= end + 0.5 * self.dt {
            let idx = ((t - self.t0) / self.dt).round();
            if idx < 0.0 {
                return None;
            }
            return self.beta.get(idx as usize).copied();
        }
        self.tail.map(|tail| tail.value(t - tail.t_start))
    }
}

fn mode_rate(nu: f64, eta: f64) -> C64 {
    C64::new(0.5 * eta, nu)
}

/// Integrates one mode across the trajectory. Between samples the coherence
/// is taken as linear and the step is integrated exactly (second-order
/// exponential time differencing), so the stiff `e^{-(iν+η/2)t}` part has no
/// step-size restriction.
pub fn evolve_mode(
    traj: &PolarizationTrajectory,
    nu: f64,
    eta: f64,
    coupling: f64,
) -> Result<ModeAmplitudeSeries> {
    if traj.is_empty() {
        return Err(Error::InvalidInput("empty polarization trajectory".into()));
    }
    if !(eta > 0.0) {
        return Err(Error::param("eta", "must be > 0"));
    }
    let h = traj.dt;
    let z = -mode_rate(nu, eta) * h;
    let propagator = z.exp();
    let p2 = phi2(z);
    let w_old = (phi1(z) - p2) * (h * coupling);
    let w_new = p2 * (h * coupling);

    let sigma = &traj.samples;
    let mut beta = Vec::with_capacity(sigma.len());
    let mut b = C64::new(0.0, 0.0);
    beta.push(b);
    for pair in sigma.windows(2) {
        b = propagator * b - (w_old * pair[0] + w_new * pair[1]);
        beta.push(b);
    }
    Ok(ModeAmplitudeSeries {
        mode_index: 0,
        nu,
        eta,
        coupling,
        t0: traj.t0,
        dt: h,
        beta,
        tail: None,
    })
}

/// Continues a mode past the end of the sampled trajectory in closed form.
///
/// Beyond the last atom sample the drive is off and the coherence decays as
/// `σ(t) = σ_h e^{-μ(t - t_h)}` with `μ = iΔ + γ/2 + γ₂ + C(ρ₁₁ - ρ₂₂)`. The
/// atom integrator only stops once the local-field term has either vanished
/// (`C = 0`) or the coherence has settled to a negligible level, so this is
/// exact in the first case and accurate to the settle tolerance otherwise.
/// Samples are materialized up to `t_end`; the returned series carries the
/// exact tail from its last sample onwards.
pub fn ringdown_extend(
    mut series: ModeAmplitudeSeries,
    final_state: &AtomicState,
    pulse_duration: f64,
    medium: &MediumParams,
    detuning: f64,
    t_end: f64,
) -> Result<ModeAmplitudeSeries> {
    let t_h = series.end_time();
    if t_h < pulse_duration - 1e-9 * pulse_duration.max(1.0) {
        return Err(Error::InvalidInput(format!(
            "series ends at {t_h} before the pulse end {pulse_duration}"
        )));
    }
    if t_end < pulse_duration {
        return Err(Error::param("t_end", "must be >= pulse duration"));
    }
    let tail = RingDown {
        t_start: t_h,
        beta0: *series.beta.last().expect("nonempty series"),
        forcing: final_state.coherence * series.coupling,
        lambda: mode_rate(series.nu, series.eta),
        mu: medium.free_decay_rate(final_state, detuning),
    };
    let extra = ((t_end - t_h) / series.dt + 1e-9).floor().max(0.0) as usize;
    series
        .beta
        .extend((1..=extra).map(|k| tail.value(k as f64 * series.dt)));
    series.tail = Some(tail.shifted(extra as f64 * series.dt));
    Ok(series)
}

/// `I = scale · η · |β'|²`.
pub fn mode_intensity(beta: C64, eta: f64, scale: f64) -> f64 {
    scale * eta * beta.norm_sqr()
}

/// `∫ I dt` from the series start: trapezoid over the samples plus the exact
/// integral of the closed-form tail (if any) to infinity.
pub fn integrated_intensity(series: &ModeAmplitudeSeries, eta: f64, scale: f64) -> f64 {
    let b = &series.beta;
    let mut sum = 0.0;
    if b.len() > 1 {
        let inner: f64 = b[1..b.len() - 1].iter().map(|x| x.norm_sqr()).sum();
        sum = series.dt * (inner + 0.5 * (b[0].norm_sqr() + b[b.len() - 1].norm_sqr()));
    }
    if let Some(tail) = &series.tail {
        sum += tail.integral_abs2();
    }
    scale * eta * sum
}

fn sweep_one(
    traj: &PolarizationTrajectory,
    index: usize,
    grid: &ModeGrid,
    atom: &AtomSettings,
    detection_time: f64,
) -> Result<(f64, f64)> {
    let mode = grid.modes[index];
    let mut series = evolve_mode(traj, mode.nu, mode.eta, grid.coupling)?;
    series.mode_index = index;
    let series = ringdown_extend(
        series,
        &traj.final_state,
        atom.pulse.duration,
        &atom.medium,
        atom.pulse.detuning,
        traj.end_time().max(atom.pulse.duration),
    )?;
    let beta = series
        .value_at(detection_time)
        .ok_or_else(|| Error::InvalidInput(format!("no amplitude at t = {detection_time}")))?;
    let at_detection = mode_intensity(beta, mode.eta, grid.intensity_scale);
    let integrated = integrated_intensity(&series, mode.eta, grid.intensity_scale);
    if !integrated.is_finite() {
        return Err(Error::NumericalFailure {
            t: f64::INFINITY,
            detail: "time-integrated intensity diverges: residual coherence never decays".into(),
        });
    }
    Ok((at_detection, integrated))
}

/// Runs every mode of `grid` against one trajectory. Modes are independent,
/// so they are evaluated in parallel on the current rayon pool; the output is
/// ordered by mode index and does not depend on scheduling.
///
/// The time-integrated intensity is exact beyond the atom trajectory, so
/// `t_end` only bounds `detection_time` and is recorded in the result.
pub fn spectrum_sweep(
    traj: &PolarizationTrajectory,
    grid: &ModeGrid,
    atom: &AtomSettings,
    detection_time: f64,
    t_end: f64,
) -> Result<Spectrum> {
    if !(detection_time >= 0.0 && detection_time <= t_end) {
        return Err(Error::param(
            "detection_time",
            format!("must lie in [0, t_end = {t_end}], got {detection_time}"),
        ));
    }
    let results: Vec<Result<(f64, f64)>> = (0..grid.len())
        .into_par_iter()
        .map(|i| sweep_one(traj, i, grid, atom, detection_time))
        .collect();
    let mut at_detection = Vec::with_capacity(grid.len());
    let mut integrated = Vec::with_capacity(grid.len());
    for (index, r) in results.into_iter().enumerate() {
        let (a, b) = r.map_err(|e| Error::Mode {
            index,
            source: Box::new(e),
        })?;
        at_detection.push(a);
        integrated.push(b);
    }
    Ok(Spectrum {
        nu: grid.nu(),
        intensity_at_detection: at_detection,
        integrated,
        detection_time,
        t_end,
        params: Vec::new(),
    })
}
