use lfscatter::analysis::{compare_spectra, find_peaks, line_ratios, DEFAULT_THRESHOLD};
use lfscatter::analytic::{default_order, harmonic_coefficients};
use lfscatter::config::{preset, ScenarioConfig};
use lfscatter::pipeline;
use lfscatter::spectrum::Column;

#[test]
fn zero_strength_analytic_spectrum_assigns_first_lines_only() {
    let mut c = preset("lowb").unwrap();
    c.medium.coupling = lfscatter::config::Coupling::Strength(0.0);
    let s = pipeline::analytic(&c).unwrap();
    for col in [Column::Detection, Column::Integrated] {
        let lr = line_ratios(
            &find_peaks(&s, col, DEFAULT_THRESHOLD).unwrap(),
            c.pulse.rabi,
        )
        .unwrap();
        assert_eq!(lr.assigned.keys().copied().collect::<Vec<_>>(), vec![-1, 1]);
        assert!((lr.get(-1).unwrap() - 1.0).abs() < 1e-12);
        assert!((lr.get(1).unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn identical_spectra_compare_to_zero() {
    let s = pipeline::analytic(&preset("fig2a").unwrap()).unwrap();
    for col in [Column::Detection, Column::Integrated] {
        let m = compare_spectra(&s, &s, col).unwrap();
        assert_eq!((m.max_rel_peak_diff, m.l2_rel), (0.0, 0.0));
    }
}

/// Narrow lines (η = 0.5, ηT = 10) so neighbouring harmonics do not
/// contaminate each other's heights, and weak damping: the harmonic weights
/// assume a Bloch vector of unit length, and the effective strength decays
/// with it as `B e^{-γt/2}`.
fn narrow_line_config() -> ScenarioConfig {
    let mut c = preset("lowb").unwrap();
    let r = c.pulse.rabi;
    c.pulse.duration = 20.0;
    c.medium.gamma = 1e-3;
    c.grid.eta = 0.5;
    c.grid.nu_min = -5.0 * r;
    c.grid.nu_max = 5.0 * r;
    c.grid.n_modes = 2601;
    c
}

#[test]
fn weak_field_line_ratio_follows_harmonic_weights() {
    let c = narrow_line_config();
    let h = (c.grid.nu_max - c.grid.nu_min) / (c.grid.n_modes - 1) as f64;
    assert!(h <= c.grid.eta / 4.0);
    let s = pipeline::simulate(&c).unwrap();
    let peaks = find_peaks(&s, Column::Integrated, 1e-3).unwrap();
    let lr = line_ratios(&peaks, c.pulse.rabi).unwrap();
    let y = harmonic_coefficients(0.1, default_order(0.1)).unwrap();
    let expected = y.power(2) / y.power(1);
    for sign in [-1, 1] {
        let got = lr.get(2 * sign).unwrap() / lr.get(sign).unwrap();
        let err = (got - expected).abs() / expected;
        assert!(
            err <= 0.15,
            "j = {}: {got} vs {expected} ({:.1}%)",
            2 * sign,
            100.0 * err
        );
    }
}

#[test]
fn strongest_field_has_no_sidebands() {
    let c = preset("fig2d").unwrap();
    let s = pipeline::simulate(&c).unwrap();
    for col in [Column::Detection, Column::Integrated] {
        let lr = line_ratios(
            &find_peaks(&s, col, DEFAULT_THRESHOLD).unwrap(),
            c.pulse.rabi,
        )
        .unwrap();
        assert_eq!(lr.sideband_count(), 0);
    }
}

#[test]
fn sidebands_sit_near_rabi_multiples() {
    let c = preset("fig2a").unwrap();
    let r = c.pulse.rabi;
    let s = pipeline::simulate(&c).unwrap();
    let peaks = find_peaks(&s, Column::Integrated, DEFAULT_THRESHOLD).unwrap();
    let lr = line_ratios(&peaks, r).unwrap();
    for j in [-2i64, -1, 1, 2] {
        assert!(lr.get(j).is_some(), "line {j} missing");
        let p = peaks
            .peaks
            .iter()
            .min_by(|a, b| {
                (a.nu_center - 2.0 * j as f64 * r)
                    .abs()
                    .total_cmp(&(b.nu_center - 2.0 * j as f64 * r).abs())
            })
            .unwrap();
        // pulled toward the centre by the local field, never pushed out
        assert!(p.nu_center.abs() <= 2.0 * j.unsigned_abs() as f64 * r + 1e-9);
        assert!((p.nu_center - 2.0 * j as f64 * r).abs() < 0.25 * 2.0 * r);
    }
}
