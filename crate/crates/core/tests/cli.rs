use std::path::Path;
use std::process::{Command, Output};

use lfscatter::config::{load_config, preset};
use lfscatter::output::{config_from_params, read_spectrum_csv};

fn lfscatter(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lfscatter"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("run lfscatter")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    std::fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

#[test]
fn presets_are_listed() {
    let tmp = tempfile::tempdir().unwrap();
    let text = ok(&lfscatter(&["presets"], tmp.path()));
    for name in ["fig2a", "fig3b", "fig4", "lowb", "detuned_strong"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
}

#[test]
fn zero_strength_analytic_run_has_exactly_two_peaks() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "b0.conf",
        "preset = lowb\n[medium]\nstrength = 0\n",
    );
    ok(&lfscatter(
        &["analytic", "--config", &cfg, "--out", "run"],
        tmp.path(),
    ));
    let text = ok(&lfscatter(
        &["peaks", "run/analytic.csv", "--out", "run"],
        tmp.path(),
    ));
    for line in text.lines() {
        assert!(line.contains("peaks=2 "), "{line}");
    }
    let table = std::fs::read_to_string(tmp.path().join("run/peaks.csv")).unwrap();
    let rows: Vec<&str> = table
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .collect();
    assert_eq!(rows.len(), 4);
}

#[test]
fn weak_field_analytic_and_simulated_agree_at_detection() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&lfscatter(
        &["analytic", "--preset", "lowb", "--out", "a"],
        tmp.path(),
    ));
    ok(&lfscatter(
        &["simulate", "--preset", "lowb", "--out", "s"],
        tmp.path(),
    ));
    let text = ok(&lfscatter(
        &["compare", "a/analytic.csv", "s/simulate.csv"],
        tmp.path(),
    ));
    let line = text.lines().find(|l| l.starts_with("detection")).unwrap();
    let diff: f64 = line
        .split_whitespace()
        .find_map(|w| w.strip_prefix("max_rel_peak_diff="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(diff <= 0.10, "{line}");
    assert!(tmp.path().join("compare.csv").exists());
}

#[test]
fn manifest_reloads_to_the_run_configuration() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&lfscatter(
        &["simulate", "--preset", "fig3a", "--out", "r"],
        tmp.path(),
    ));
    let manifest = load_config(&tmp.path().join("r/manifest.txt")).unwrap();
    let expected = preset("fig3a").unwrap();
    assert_eq!(manifest, expected);
    let spec = read_spectrum_csv(&tmp.path().join("r/simulate.csv")).unwrap();
    assert_eq!(config_from_params(&spec.params).unwrap(), expected);
    assert_eq!(spec.len(), expected.grid.n_modes);
    let text = std::fs::read_to_string(tmp.path().join("r/manifest.txt")).unwrap();
    for key in [
        "dt",
        "t_end",
        "detection_time",
        "strength",
        "local_field",
        "halving_discrepancy",
    ] {
        assert!(
            text.contains(&format!("# {key} = ")),
            "{key} missing from manifest"
        );
    }
}

#[test]
fn config_keys_override_the_preset() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "small.conf", "[grid]\nn_modes = 41\n");
    ok(&lfscatter(
        &[
            "analytic", "--preset", "fig4", "--config", &cfg, "--out", "o",
        ],
        tmp.path(),
    ));
    let spec = read_spectrum_csv(&tmp.path().join("o/analytic.csv")).unwrap();
    assert_eq!(spec.len(), 41);
    let c = config_from_params(&spec.params).unwrap();
    assert_eq!(c.medium.gamma2, 9.0);
}

#[test]
fn invalid_configuration_exits_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    let bad_key = write(tmp.path(), "a.conf", "[pulse]\nrabi = 3\nwidth = 1\n");
    let out = lfscatter(&["analytic", "--config", &bad_key], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let bad_value = write(tmp.path(), "b.conf", "[grid]\neta = -1\n");
    let out = lfscatter(&["analytic", "--config", &bad_value], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid.eta"));

    let out = lfscatter(&["simulate", "--preset", "nope"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let out = lfscatter(
        &["simulate", "--preset", "fig2a", "--threads", "0"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn mismatched_grids_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "g.conf", "[grid]\nn_modes = 101\n");
    ok(&lfscatter(
        &["analytic", "--preset", "fig2a", "--out", "a"],
        tmp.path(),
    ));
    ok(&lfscatter(
        &[
            "analytic", "--preset", "fig2a", "--config", &cfg, "--out", "b",
        ],
        tmp.path(),
    ));
    let out = lfscatter(&["compare", "a/analytic.csv", "b/analytic.csv"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn underresolved_step_exits_with_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "dt.conf",
        "[grid]\nn_modes = 11\n[numerics]\ndt = 0.001\n",
    );
    let out = lfscatter(
        &["simulate", "--preset", "fig2a", "--config", &cfg],
        tmp.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("dt"));
}

#[test]
fn missing_input_file_exits_with_1() {
    let tmp = tempfile::tempdir().unwrap();
    let out = lfscatter(&["compare", "none.csv", "none.csv"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
}
