use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nmrdeco::cli::TCE_CONFIG;
use nmrdeco_core::pulseq::Builtin;

fn nmrdeco(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nmrdeco"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Writes the bundled config with `edit` applied, plus the two scripts it
/// names, into `dir`.
fn config_with(dir: &Path, edit: impl Fn(&str) -> String) -> PathBuf {
    let path = dir.join("exp.cfg");
    fs::write(&path, edit(TCE_CONFIG)).unwrap();
    fs::write(dir.join("prep.seq"), Builtin::Prep.script()).unwrap();
    fs::write(dir.join("entangle.seq"), Builtin::Entangle.script()).unwrap();
    path
}

fn assert_single_diagnostic(o: &Output, code: i32, prefix: &str) {
    assert_eq!(o.status.code(), Some(code), "{}", stderr(o));
    let err = stderr(o);
    let diag: Vec<&str> = err.lines().filter(|l| l.starts_with("error[")).collect();
    assert_eq!(diag.len(), 1, "{err}");
    assert!(diag[0].starts_with(prefix), "{err}");
}

#[test]
fn bundled_assets_match_builtins() {
    let assets = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets");
    assert_eq!(fs::read_to_string(assets.join("prep.seq")).unwrap(), Builtin::Prep.script());
    assert_eq!(
        fs::read_to_string(assets.join("entangle.seq")).unwrap(),
        Builtin::Entangle.script()
    );
    assert_eq!(fs::read_to_string(assets.join("tce.cfg")).unwrap(), TCE_CONFIG);
}

#[test]
fn state_reports_prepared_populations() {
    let dir = tempfile::tempdir().unwrap();
    let o = nmrdeco(&["state", "--out", "."], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("Iz1 Iz2"), "{text}");
    assert!(text.contains("-2.000"), "{text}");
    assert_eq!(fs::read_to_string(dir.path().join("state.txt")).unwrap() + "\nwritten: ./state.txt\n", text);
}

#[test]
fn empty_script_echoes_equilibrium() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("empty.seq"), "# nothing\n").unwrap();
    let o = nmrdeco(&["state", "--script", "empty.seq", "--out", "."], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("events: 0"), "{text}");
    let terms: Vec<&str> = text
        .lines()
        .skip_while(|l| !l.starts_with("product-operator"))
        .skip(1)
        .take_while(|l| !l.is_empty())
        .collect();
    assert_eq!(terms.len(), 2, "{text}");
    assert!(terms[0].trim_start().starts_with("Iz1") && terms[0].ends_with("1.000"));
    assert!(terms[1].trim_start().starts_with("Iz2") && terms[1].ends_with("1.000"));
}

#[test]
fn unknown_spin_is_a_parse_error_with_span() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.seq"), "pulse x pi on 9\n").unwrap();
    let o = nmrdeco(&["state", "--script", "bad.seq"], dir.path());
    assert_single_diagnostic(&o, 2, "error[parse]: bad.seq:1:15:");
}

#[test]
fn asymmetric_couplings_are_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_with(dir.path(), |t| t.replacen("[103.1, 0.0, 201.3]", "[103.2, 0.0, 201.3]", 1));
    let o = nmrdeco(&["verify", "--config", cfg.to_str().unwrap()], dir.path());
    assert_single_diagnostic(&o, 1, "error[config]:");
}

#[test]
fn missing_config_and_bad_flags_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = nmrdeco(&["scan", "--config", "nope.cfg"], dir.path());
    assert_single_diagnostic(&o, 1, "error[config]:");
    let o = nmrdeco(&["scan", "--jobs", "0"], dir.path());
    assert_single_diagnostic(&o, 1, "error[usage]:");
    let o = nmrdeco(&["spectrum", "--t", "-1"], dir.path());
    assert_single_diagnostic(&o, 1, "error[usage]:");
    let o = nmrdeco(&["frobnicate"], dir.path());
    assert_single_diagnostic(&o, 1, "error[usage]:");
}

#[test]
fn scan_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<PathBuf> = ["1", "4", "4"]
        .iter()
        .enumerate()
        .map(|(i, jobs)| {
            let out = format!("run{i}");
            let o = nmrdeco(&["scan", "--jobs", jobs, "--out", &out], dir.path());
            assert!(o.status.success(), "{}", stderr(&o));
            dir.path().join(out)
        })
        .collect();
    for name in ["curve.csv", "envelope.csv", "fit.json"] {
        let first = fs::read(runs[0].join(name)).unwrap();
        for r in &runs[1..] {
            assert_eq!(first, fs::read(r.join(name)).unwrap(), "{name}");
        }
    }
    let curve = fs::read_to_string(runs[0].join("curve.csv")).unwrap();
    assert_eq!(curve.lines().next(), Some("t_seconds,amplitude"));
    assert_eq!(curve.lines().count(), 82);
}

#[test]
fn flat_curve_warns_but_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_with(dir.path(), |t| t.replace("9.23", "0.0").replace("201.3", "0.0"));
    let o = nmrdeco(&["scan", "--config", cfg.to_str().unwrap(), "--out", "flat"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("warning: fit failed:"), "{}", stderr(&o));
    let json = fs::read_to_string(dir.path().join("flat/fit.json")).unwrap();
    assert!(json.contains("\"fit\": null"), "{json}");
}

#[test]
fn configured_output_directory_is_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_with(dir.path(), |t| t.replace("n_points = 81", "n_points = 9"));
    let elsewhere = tempfile::tempdir().unwrap();
    let o = nmrdeco(&["scan", "--config", cfg.to_str().unwrap()], elsewhere.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("out/curve.csv").exists());
}

#[test]
fn four_environment_spins_pass_verify() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = String::from(
        "gamma_ratio = 1.0\n\n\
         [[spin]]\nlabel = \"A\"\noffset_hz = 450.0\nrole = \"system\"\n\n\
         [[spin]]\nlabel = \"B\"\noffset_hz = -450.0\nrole = \"system\"\n",
    );
    for k in 1..=4 {
        cfg.push_str(&format!(
            "\n[[spin]]\nlabel = \"E{k}\"\noffset_hz = 0.0\ngradient_weight = 3.977\nrole = \"environment\"\n"
        ));
    }
    let j = [
        [0.0, 103.1, 12.0, -40.0, 77.5, 3.0],
        [103.1, 0.0, 150.0, 22.0, -8.0, 60.0],
        [12.0, 150.0, 0.0, 0.0, 0.0, 0.0],
        [-40.0, 22.0, 0.0, 0.0, 0.0, 0.0],
        [77.5, -8.0, 0.0, 0.0, 0.0, 0.0],
        [3.0, 60.0, 0.0, 0.0, 0.0, 0.0],
    ];
    let rows: Vec<String> = j.iter().map(|r| format!("    {r:?},")).collect();
    cfg.push_str(&format!("\n[couplings]\nj_hz = [\n{}\n]\n", rows.join("\n")));
    cfg.push_str("\n[acquisition]\nn_samples = 1024\n\n[scan]\nt_start = 0.0\nt_stop = 0.02\nn_points = 21\n");
    let path = dir.path().join("n4.cfg");
    fs::write(&path, cfg).unwrap();

    let o = nmrdeco(&["verify", "--config", path.to_str().unwrap()], dir.path());
    let text = stdout(&o);
    assert!(o.status.success(), "{text}{}", stderr(&o));
    assert!(text.contains("[PASS] configured environment: product of cosines"), "{text}");
    assert!(text.contains("[PASS] multi-environment product of cosines"), "{text}");

    let o = nmrdeco(&["scan", "--config", path.to_str().unwrap(), "--out", "n4"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let env = fs::read_to_string(dir.path().join("n4/envelope.csv")).unwrap();
    for line in env.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let product: f64 = [(12.0, 150.0), (-40.0, 22.0), (77.5, -8.0), (3.0, 60.0)]
            .iter()
            .map(|(a, b): &(f64, f64)| (std::f64::consts::PI * (a + b) * v[0]).cos())
            .product();
        assert!((v[1] - product).abs() < 1e-12, "{line}");
        assert!((v[2] + product).abs() < 1e-9, "{line}");
    }
}

#[test]
fn verify_passes_on_bundled_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = nmrdeco(&["verify"], dir.path());
    let text = stdout(&o);
    assert!(o.status.success(), "{text}");
    assert!(!text.contains("[FAIL]"), "{text}");
    assert!(text.contains("[INFO] preparation yields exactly"), "{text}");
    assert!(text.ends_with("all checks passed\n"), "{text}");
}

#[test]
fn spectrum_csv_has_ppm_column() {
    let dir = tempfile::tempdir().unwrap();
    let o = nmrdeco(&["spectrum", "--t", "0.0035", "--mode", "magnitude", "--out", "s"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("s/spectrum.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("freq_hz,re,im,ppm"));
    assert_eq!(csv.lines().count(), 4097);
}
