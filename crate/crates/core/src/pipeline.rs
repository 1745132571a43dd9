//! End-to-end runs of a scenario.

use crate::analytic::perturbative_spectrum_with_order;
use crate::bloch::integrate_atom;
use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::field::spectrum_sweep;
use crate::spectrum::Spectrum;

/// Prefix of parameter keys that are computed rather than configured.
pub const DERIVED_PREFIX: &str = "derived.";

fn derived(params: &mut Vec<(String, String)>, key: &str, value: impl ToString) {
    params.push((format!("{DERIVED_PREFIX}{key}"), value.to_string()));
}

fn common_params(config: &ScenarioConfig) -> Vec<(String, String)> {
    let mut p = config.to_pairs();
    derived(&mut p, "strength", config.strength());
    derived(&mut p, "local_field", config.local_field());
    derived(
        &mut p,
        "pulse_area",
        2.0 * config.pulse.rabi * config.pulse.duration,
    );
    derived(&mut p, "detection_time", config.resolved_detection_time());
    derived(&mut p, "t_end", config.resolved_t_end());
    p
}

/// Integrates the atom, then every detector mode.
pub fn simulate(config: &ScenarioConfig) -> Result<Spectrum> {
    config.validate()?;
    let atom = config.atom_settings()?;
    let dt = atom.resolved_dt()?;
    let traj = integrate_atom(&atom)?;
    let grid = config.mode_grid()?;
    let mut spec = spectrum_sweep(
        &traj,
        &grid,
        &atom,
        config.resolved_detection_time(),
        config.resolved_t_end(),
    )?;
    let mut p = common_params(config);
    derived(&mut p, "kind", "simulate");
    derived(&mut p, "dt", dt);
    derived(&mut p, "atom_samples", traj.len());
    derived(&mut p, "atom_end_time", traj.end_time());
    derived(
        &mut p,
        "residual_coherence",
        traj.final_state.coherence.norm(),
    );
    if let Some(d) = traj.halving_discrepancy {
        derived(&mut p, "halving_discrepancy", d);
    }
    spec.params = p;
    Ok(spec)
}

/// First-order perturbative spectrum on the configured grid. Detection
/// times before the end of the pulse are evaluated at the end of the pulse.
pub fn analytic(config: &ScenarioConfig) -> Result<Spectrum> {
    config.validate()?;
    let grid = config.mode_grid()?;
    let delay = (config.resolved_detection_time() - config.pulse.duration).max(0.0);
    let order = config.resolved_truncation();
    let mut spec = perturbative_spectrum_with_order(
        &grid,
        config.strength(),
        config.pulse.rabi,
        config.pulse.duration,
        delay,
        config.numerics.analytic_shape,
        order,
    )?;
    let mut p = common_params(config);
    derived(&mut p, "kind", "analytic");
    derived(&mut p, "truncation_j", order);
    derived(&mut p, "analytic_delay", delay);
    spec.params = p;
    Ok(spec)
}
