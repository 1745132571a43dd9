//! Two-level atom driven by a rectangular pulse, with a local-field
//! (cooperative) feedback term and radiative/collisional relaxation.
//!
//! Conventions: the coherence is `σ₂₁ = ⟨2|ρ|1⟩` in the frame rotating at the
//! laser carrier. The local field enters as a coherence-dependent shift of the
//! drive, `R_eff = R(t) - C σ₂₁`, which makes the first-order phase
//! `V(t) = 2Rt - B(1 - cos 2Rt)` with `B = C / 2R`. Rates are angular
//! frequencies in inverse time units.
//!
//! The equations of motion integrated here are
//!
//! ```text
//! dρ₂₂/dt = 2 Re(R_eff* σ₂₁) - γ ρ₂₂
//! dρ₁₁/dt = -dρ₂₂/dt
//! dσ₂₁/dt = R_eff (ρ₁₁ - ρ₂₂) - (iΔ + γ/2 + γ₂) σ₂₁
//! ```

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{ensure_finite, Error, Result};

/// Tolerance for the trace/positivity checks on every integrator sample.
pub const STATE_TOLERANCE: f64 = 1e-9;

/// 2×2 atomic density matrix in the rotating frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AtomicState {
    /// ρ₁₁
    pub pop_ground: f64,
    /// ρ₂₂
    pub pop_excited: f64,
    /// σ₂₁ = ⟨2|ρ|1⟩; ρ₁₂ is its conjugate.
    pub coherence: C64,
}

impl AtomicState {
    pub const GROUND: AtomicState = AtomicState {
        pop_ground: 1.0,
        pop_excited: 0.0,
        coherence: C64 { re: 0.0, im: 0.0 },
    };

    pub const EXCITED: AtomicState = AtomicState {
        pop_ground: 0.0,
        pop_excited: 1.0,
        coherence: C64 { re: 0.0, im: 0.0 },
    };

    /// ρ₁₁ - ρ₂₂
    pub fn inversion(&self) -> f64 {
        self.pop_ground - self.pop_excited
    }

    pub fn trace(&self) -> f64 {
        self.pop_ground + self.pop_excited
    }

    /// `ρ₁₁ρ₂₂ - |σ₂₁|²`, the determinant of ρ. Zero for pure states.
    pub fn purity_defect(&self) -> f64 {
        self.pop_ground * self.pop_excited - self.coherence.norm_sqr()
    }

    /// Checks trace, population bounds and positivity within `tol`.
    pub fn check(&self, tol: f64) -> std::result::Result<(), String> {
        let finite = self.pop_ground.is_finite()
            && self.pop_excited.is_finite()
            && self.coherence.re.is_finite()
            && self.coherence.im.is_finite();
        if !finite {
            return Err(format!("non-finite state {self:?}"));
        }
        if (self.trace() - 1.0).abs() > tol {
            return Err(format!("trace {} deviates from 1", self.trace()));
        }
        for p in [self.pop_ground, self.pop_excited] {
            if p < -tol || p > 1.0 + tol {
                return Err(format!("population {p} outside [0, 1]"));
            }
        }
        if self.purity_defect() < -tol {
            return Err(format!(
                "positivity violated: det(rho) = {}",
                self.purity_defect()
            ));
        }
        Ok(())
    }

    fn max_distance(&self, other: &AtomicState) -> f64 {
        (self.pop_excited - other.pop_excited)
            .abs()
            .max((self.pop_ground - other.pop_ground).abs())
            .max((self.coherence - other.coherence).norm())
    }
}

/// Time derivative of an [`AtomicState`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateDerivative {
    pub pop_ground: f64,
    pub pop_excited: f64,
    pub coherence: C64,
}

impl AtomicState {
    fn advanced(&self, d: &StateDerivative, h: f64) -> AtomicState {
        AtomicState {
            pop_ground: self.pop_ground + h * d.pop_ground,
            pop_excited: self.pop_excited + h * d.pop_excited,
            coherence: self.coherence + d.coherence * h,
        }
    }
}

/// Rectangular pulse: drive `R` on `0 <= t < T`, zero elsewhere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulseParams {
    pub rabi: f64,
    pub duration: f64,
    /// Δ₂₁ = ω₂₁ - ω_L
    pub detuning: f64,
}

impl PulseParams {
    pub fn new(rabi: f64, duration: f64, detuning: f64) -> Result<Self> {
        ensure_finite("rabi", rabi)?;
        ensure_finite("duration", duration)?;
        ensure_finite("detuning", detuning)?;
        if rabi < 0.0 {
            return Err(Error::param("rabi", "must be >= 0"));
        }
        if duration <= 0.0 {
            return Err(Error::param("duration", "must be > 0"));
        }
        Ok(PulseParams {
            rabi,
            duration,
            detuning,
        })
    }

    /// Pulse area `U_e = 2RT`.
    pub fn area(&self) -> f64 {
        2.0 * self.rabi * self.duration
    }

    pub fn drive_at(&self, t: f64) -> f64 {
        if (0.0..self.duration).contains(&t) {
            self.rabi
        } else {
            0.0
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MediumParams {
    /// Cooperative coefficient `C`; the dimensionless strength is `B = C / 2R`.
    pub local_field: f64,
    /// Radiative decay rate γ.
    pub gamma: f64,
    /// Collisional dephasing rate γ₂.
    pub gamma2: f64,
}

impl MediumParams {
    pub fn new(local_field: f64, gamma: f64, gamma2: f64) -> Result<Self> {
        for (name, v) in [
            ("local_field", local_field),
            ("gamma", gamma),
            ("gamma2", gamma2),
        ] {
            ensure_finite(name, v)?;
            if v < 0.0 {
                return Err(Error::param(name, "must be >= 0"));
            }
        }
        Ok(MediumParams {
            local_field,
            gamma,
            gamma2,
        })
    }

    /// Builds the medium from the dimensionless strength `B` at Rabi frequency `R`.
    pub fn from_strength(b: f64, rabi: f64, gamma: f64, gamma2: f64) -> Result<Self> {
        ensure_finite("B", b)?;
        Self::new(2.0 * rabi * b, gamma, gamma2)
    }

    /// Builds the medium from density, geometric factor and wavelength.
    pub fn from_microscopic(
        density: f64,
        geometry: f64,
        wavelength: f64,
        gamma: f64,
        gamma2: f64,
    ) -> Result<Self> {
        let c = local_field_coefficient(density, geometry, wavelength, gamma)?;
        Self::new(c, gamma, gamma2)
    }

    /// `B = C / 2R`; infinite when `R = 0` and `C > 0`.
    pub fn strength(&self, rabi: f64) -> f64 {
        if self.local_field == 0.0 {
            0.0
        } else {
            self.local_field / (2.0 * rabi)
        }
    }

    /// Coherence relaxation rate `γ/2 + γ₂`.
    pub fn transverse_rate(&self) -> f64 {
        0.5 * self.gamma + self.gamma2
    }

    /// Decay rate of the coherence once the drive is off, linearized around
    /// `state`: `iΔ + γ/2 + γ₂ + C (ρ₁₁ - ρ₂₂)`. Exact when `C = 0`.
    pub fn free_decay_rate(&self, state: &AtomicState, detuning: f64) -> C64 {
        C64::new(
            self.transverse_rate() + self.local_field * state.inversion(),
            detuning,
        )
    }
}

/// Cooperative-field coefficient `C = (3 n G λ³ / 8π²) · γ/2`.
pub fn local_field_coefficient(
    density: f64,
    geometry: f64,
    wavelength: f64,
    gamma: f64,
) -> Result<f64> {
    ensure_finite("density", density)?;
    ensure_finite("geometry", geometry)?;
    ensure_finite("wavelength", wavelength)?;
    ensure_finite("gamma", gamma)?;
    if density < 0.0 {
        return Err(Error::param("density", "must be >= 0"));
    }
    if wavelength <= 0.0 {
        return Err(Error::param("wavelength", "must be > 0"));
    }
    if gamma < 0.0 {
        return Err(Error::param("gamma", "must be >= 0"));
    }
    Ok(3.0 * density * geometry * wavelength.powi(3) / (8.0 * PI * PI) * (0.5 * gamma))
}

/// Drive seen by an atom once the local field of its neighbours is included.
pub fn effective_drive(coherence: C64, drive: f64, local_field: f64) -> C64 {
    C64::new(drive, 0.0) - coherence * local_field
}

fn derivative(
    state: &AtomicState,
    drive: f64,
    medium: &MediumParams,
    detuning: f64,
) -> StateDerivative {
    let sigma = state.coherence;
    let r_eff = effective_drive(sigma, drive, medium.local_field);
    let pumping = 2.0 * (r_eff.conj() * sigma).re;
    let d_excited = pumping - medium.gamma * state.pop_excited;
    let d_sigma = r_eff * state.inversion() - C64::new(medium.transverse_rate(), detuning) * sigma;
    StateDerivative {
        pop_ground: -d_excited,
        pop_excited: d_excited,
        coherence: d_sigma,
    }
}

/// Right-hand side of the damped atomic equation at time `t`.
pub fn bloch_derivative(
    state: &AtomicState,
    t: f64,
    pulse: &PulseParams,
    medium: &MediumParams,
) -> StateDerivative {
    derivative(state, pulse.drive_at(t), medium, pulse.detuning)
}

fn rk4_step(
    state: &AtomicState,
    drive: f64,
    h: f64,
    medium: &MediumParams,
    detuning: f64,
) -> AtomicState {
    let k1 = derivative(state, drive, medium, detuning);
    let k2 = derivative(&state.advanced(&k1, 0.5 * h), drive, medium, detuning);
    let k3 = derivative(&state.advanced(&k2, 0.5 * h), drive, medium, detuning);
    let k4 = derivative(&state.advanced(&k3, h), drive, medium, detuning);
    let sixth = h / 6.0;
    let d_excited = k1.pop_excited + 2.0 * (k2.pop_excited + k3.pop_excited) + k4.pop_excited;
    let d_sigma = k1.coherence + (k2.coherence + k3.coherence) * 2.0 + k4.coherence;
    AtomicState {
        // ground and excited rates are exact negatives, so the trace is
        // conserved to rounding
        pop_ground: state.pop_ground - sixth * d_excited,
        pop_excited: state.pop_excited + sixth * d_excited,
        coherence: state.coherence + d_sigma * sixth,
    }
}

/// Closed-form state without local field, exact resonance and no damping.
pub fn zero_order_state(t: f64, rabi: f64) -> AtomicState {
    first_order_state(t, rabi, 0.0)
}

/// First successive approximation in `B`: the zeroth-order rotation with the
/// phase `V(t) = 2Rt - B(1 - cos 2Rt)`.
pub fn first_order_state(t: f64, rabi: f64, b: f64) -> AtomicState {
    let phase = first_order_phase(t, rabi, b);
    AtomicState {
        pop_ground: 0.5 * (1.0 + phase.cos()),
        pop_excited: 0.5 * (1.0 - phase.cos()),
        coherence: C64::new(0.5 * phase.sin(), 0.0),
    }
}

pub fn first_order_phase(t: f64, rabi: f64, b: f64) -> f64 {
    let u = 2.0 * rabi * t;
    u - b * (1.0 - u.cos())
}

/// Controls for [`integrate_atom`].
#[derive(Clone, Debug, PartialEq)]
pub struct AtomSettings {
    pub pulse: PulseParams,
    pub medium: MediumParams,
    /// Requested step; snapped down so that `T` is a grid point. `None`
    /// picks [`default_dt`].
    pub dt: Option<f64>,
    /// Step-halving audit tolerance (max-norm on the state). `None` skips
    /// the audit.
    pub halving_tolerance: Option<f64>,
    /// After the pulse the local-field term keeps the atom nonlinear; the
    /// integration continues until `|σ₂₁|` drops below this fraction of its
    /// peak value during the pulse.
    pub settle_tolerance: f64,
    /// Upper bound on the post-pulse continuation. `None` uses
    /// `min(40 / (γ/2 + γ₂ + C), 20 T)`.
    pub settle_window: Option<f64>,
}

impl AtomSettings {
    pub const DEFAULT_HALVING_TOLERANCE: f64 = 1e-7;
    pub const DEFAULT_SETTLE_TOLERANCE: f64 = 1e-10;

    pub fn new(pulse: PulseParams, medium: MediumParams) -> Self {
        AtomSettings {
            pulse,
            medium,
            dt: None,
            halving_tolerance: Some(Self::DEFAULT_HALVING_TOLERANCE),
            settle_tolerance: Self::DEFAULT_SETTLE_TOLERANCE,
            settle_window: None,
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }

    pub fn without_audit(mut self) -> Self {
        self.halving_tolerance = None;
        self
    }

    /// Largest step allowed for an explicitly requested `dt`.
    pub fn max_dt(&self) -> f64 {
        let p = &self.pulse;
        let by_rabi = if p.rabi > 0.0 {
            1.0 / (20.0 * p.rabi)
        } else {
            f64::INFINITY
        };
        let by_detuning = 1.0 / (20.0 * p.detuning.abs() + 1e-300);
        by_rabi.min(by_detuning).min(p.duration / 100.0)
    }

    /// Step actually used: the requested (or default) step snapped down so
    /// that the pulse end falls on the grid.
    pub fn resolved_dt(&self) -> Result<f64> {
        let target = match self.dt {
            Some(dt) => {
                if !(dt > 0.0 && dt.is_finite()) {
                    return Err(Error::param("dt", "must be finite and > 0"));
                }
                let limit = self.max_dt();
                if dt > limit * (1.0 + 1e-12) {
                    return Err(Error::param(
                        "dt",
                        format!("{dt} does not resolve the fastest scale; need dt <= {limit}"),
                    ));
                }
                dt
            }
            None => default_dt(&self.pulse, &self.medium),
        };
        let steps = pulse_steps(self.pulse.duration, target);
        Ok(self.pulse.duration / steps as f64)
    }

    fn settle_window_or_default(&self) -> f64 {
        self.settle_window.unwrap_or_else(|| {
            let m = &self.medium;
            (40.0 / (m.transverse_rate() + m.local_field)).min(20.0 * self.pulse.duration)
        })
    }
}

fn pulse_steps(duration: f64, dt: f64) -> usize {
    ((duration / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

/// Default step: 0.01 rad of the fastest rate in the problem, and at least
/// 200 steps across the pulse.
pub fn default_dt(pulse: &PulseParams, medium: &MediumParams) -> f64 {
    let rate =
        2.0 * pulse.rabi + medium.local_field + pulse.detuning.abs() + medium.gamma + medium.gamma2;
    let by_rate = if rate > 0.0 {
        0.01 / rate
    } else {
        f64::INFINITY
    };
    by_rate.min(pulse.duration / 200.0)
}

/// Dense record of the atomic evolution on a uniform grid starting at `t0`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolarizationTrajectory {
    pub t0: f64,
    pub dt: f64,
    /// σ₂₁ at `t0 + i dt`.
    pub samples: Vec<C64>,
    /// (ρ₁₁, ρ₂₂) at the same times.
    pub populations: Vec<(f64, f64)>,
    pub final_state: AtomicState,
    /// First sample with `t >= T`.
    pub pulse_end_index: usize,
    /// Max-norm difference against the half-step run, when audited.
    pub halving_discrepancy: Option<f64>,
}

impl PolarizationTrajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, index: usize) -> f64 {
        self.t0 + index as f64 * self.dt
    }

    pub fn end_time(&self) -> f64 {
        self.time(self.len().saturating_sub(1))
    }

    pub fn state(&self, index: usize) -> AtomicState {
        let (g, e) = self.populations[index];
        AtomicState {
            pop_ground: g,
            pop_excited: e,
            coherence: self.samples[index],
        }
    }

    pub fn states(&self) -> impl Iterator<Item = AtomicState> + '_ {
        (0..self.len()).map(|i| self.state(i))
    }

    /// Keeps samples `0..=index`; used to check causality downstream.
    pub fn truncated(&self, index: usize) -> PolarizationTrajectory {
        let n = (index + 1).min(self.len());
        let mut out = self.clone();
        out.samples.truncate(n);
        out.populations.truncate(n);
        out.final_state = out.state(n - 1);
        out.pulse_end_index = out.pulse_end_index.min(n - 1);
        out
    }
}

fn run_fixed(
    settings: &AtomSettings,
    dt: f64,
    pulse_steps: usize,
    total_steps: usize,
) -> Vec<AtomicState> {
    let p = &settings.pulse;
    let mut states = Vec::with_capacity(total_steps + 1);
    let mut s = AtomicState::GROUND;
    states.push(s);
    for n in 0..total_steps {
        let drive = if n < pulse_steps { p.rabi } else { 0.0 };
        s = rk4_step(&s, drive, dt, &settings.medium, p.detuning);
        states.push(s);
    }
    states
}

/// Integrates the atom from the ground state over the pulse with a fixed-step
/// classical Runge-Kutta scheme, then continues past `T` while the local-field
/// term still shapes the coherence.
pub fn integrate_atom(settings: &AtomSettings) -> Result<PolarizationTrajectory> {
    let dt = settings.resolved_dt()?;
    let p = &settings.pulse;
    let m = &settings.medium;
    let n_pulse = pulse_steps(p.duration, dt);

    let mut states = run_fixed(settings, dt, n_pulse, n_pulse);
    let peak = states
        .iter()
        .map(|s| s.coherence.norm())
        .fold(0.0, f64::max);

    if m.local_field > 0.0 && peak > 0.0 {
        let max_extra = (settings.settle_window_or_default() / dt).ceil() as usize;
        let threshold = settings.settle_tolerance * peak;
        let mut s = *states.last().expect("nonempty");
        for _ in 0..max_extra {
            if s.coherence.norm() <= threshold {
                break;
            }
            s = rk4_step(&s, 0.0, dt, m, p.detuning);
            states.push(s);
        }
    }

    for (i, s) in states.iter().enumerate() {
        if let Err(detail) = s.check(STATE_TOLERANCE) {
            return Err(Error::NumericalFailure {
                t: i as f64 * dt,
                detail,
            });
        }
    }

    let total = states.len() - 1;
    let halving_discrepancy = match settings.halving_tolerance {
        Some(tol) => {
            let fine = run_fixed(settings, 0.5 * dt, 2 * n_pulse, 2 * total);
            let disc = states
                .iter()
                .zip(fine.iter().step_by(2))
                .map(|(a, b)| a.max_distance(b))
                .fold(0.0, f64::max);
            if !(disc <= tol) {
                let factor = if disc.is_finite() && disc > 0.0 {
                    0.8 * (tol / disc).powf(0.25)
                } else {
                    0.1
                };
                return Err(Error::Accuracy {
                    discrepancy: disc,
                    tolerance: tol,
                    suggested_dt: dt * factor.min(0.5),
                });
            }
            Some(disc)
        }
        None => None,
    };

    let final_state = *states.last().expect("nonempty");
    Ok(PolarizationTrajectory {
        t0: 0.0,
        dt,
        samples: states.iter().map(|s| s.coherence).collect(),
        populations: states
            .iter()
            .map(|s| (s.pop_ground, s.pop_excited))
            .collect(),
        final_state,
        pulse_end_index: n_pulse,
        halving_discrepancy,
    })
}
