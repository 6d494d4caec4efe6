//! End-to-end tests of the command-line interface: exit codes, output
//! formats, determinism and record round-trips.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gaussdyne"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("gaussdyne-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(path: &Path, contents: &str) {
    std::fs::write(path, contents).unwrap();
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("failed to launch binary")
}

const OPO_UNCONDITIONAL: &str = r#"
[scenario]
preset = "opo"
chi = 0.25
gamma = 1.0
n_th = 0.0

[measurement]
type = "none"
"#;

const OPO_MONITORED: &str = r#"
[scenario]
preset = "opo"
chi = 0.25
gamma = 1.0
n_th = 0.0

[measurement]
type = "homodyne_x"

[run]
duration = 0.5
dt = 0.001
trajectories = 1
seed = 7
"#;

#[test]
fn steady_state_unconditional_opo_prints_closed_form() {
    let dir = temp_dir("ss");
    let config = dir.join("opo.toml");
    write(&config, OPO_UNCONDITIONAL);
    let out = run(bin().arg("steady-state").arg("--config").arg(&config));
    assert!(out.status.success(), "{out:?}");
    let stdout = String::from_utf8(out.stdout).unwrap();
    // diag(2/3, 2) for chi = 0.25 gamma.
    assert!(stdout.contains("unconditional steady-state covariance"));
    assert!(stdout.contains("6.666666666"), "{stdout}");
    assert!(stdout.contains("2.0000000000"), "{stdout}");
}

#[test]
fn steady_state_writes_record_that_validates() {
    let dir = temp_dir("ss-record");
    let config = dir.join("opo.toml");
    write(&config, OPO_UNCONDITIONAL);
    let out_file = dir.join("steady.toml");
    let out = run(bin()
        .arg("steady-state")
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(&out_file));
    assert!(out.status.success(), "{out:?}");
    assert!(out_file.exists());
    let validate = run(bin().arg("validate").arg(&out_file));
    assert!(validate.status.success(), "{validate:?}");
    let text = String::from_utf8(validate.stdout).unwrap();
    assert!(
        text.contains("satisfies the uncertainty relation"),
        "{text}"
    );
}

#[test]
fn scattering_without_measurement_reports_instability() {
    let dir = temp_dir("unstable");
    let config = dir.join("scatter.toml");
    write(
        &config,
        r#"
[scenario]
preset = "scattering"
omega = 1.0
rate = 0.7

[measurement]
type = "none"
"#,
    );
    let out = run(bin().arg("steady-state").arg("--config").arg(&config));
    assert_eq!(out.status.code(), Some(4), "{out:?}");
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("error[stability]"), "{stderr}");
    assert!(stderr.contains("Hurwitz"), "{stderr}");
}

#[test]
fn scattering_monitored_steady_state_is_pure() {
    let dir = temp_dir("scatter-mon");
    let config = dir.join("scatter.toml");
    write(
        &config,
        r#"
[scenario]
preset = "scattering"
omega = 1.0
rate = 0.7

[measurement]
type = "homodyne_x"
"#,
    );
    let out = run(bin().arg("steady-state").arg("--config").arg(&config));
    assert!(out.status.success(), "{out:?}");
}

#[test]
fn simulate_is_byte_identical_for_fixed_seed() {
    let dir = temp_dir("sim");
    let config = dir.join("opo.toml");
    write(&config, OPO_MONITORED);
    for sub in ["a", "b"] {
        let out = run(bin()
            .arg("simulate")
            .arg("--config")
            .arg(&config)
            .arg("--out")
            .arg("run")
            .env("GAUSSDYNE_OUT_DIR", dir.join(sub).to_str().unwrap()));
        assert!(out.status.success(), "{out:?}");
    }
    let a = std::fs::read(dir.join("a/run.csv")).unwrap();
    let b = std::fs::read(dir.join("b/run.csv")).unwrap();
    assert_eq!(a, b, "CSV output is not deterministic");
    let a_cov = std::fs::read(dir.join("a/run_cov.csv")).unwrap();
    let b_cov = std::fs::read(dir.join("b/run_cov.csv")).unwrap();
    assert_eq!(a_cov, b_cov);

    // Different seed changes the trajectory.
    let out = run(bin()
        .arg("simulate")
        .arg("--config")
        .arg(&config)
        .arg("--seed")
        .arg("8")
        .arg("--out")
        .arg("run")
        .env("GAUSSDYNE_OUT_DIR", dir.join("c").to_str().unwrap()));
    assert!(out.status.success(), "{out:?}");
    let c = std::fs::read(dir.join("c/run.csv")).unwrap();
    assert_ne!(a, c);
}

#[test]
fn simulate_csv_has_expected_header_and_rows() {
    let dir = temp_dir("sim-shape");
    let config = dir.join("opo.toml");
    write(&config, OPO_MONITORED);
    let out = run(bin()
        .arg("simulate")
        .arg("--config")
        .arg(&config)
        .arg("--trajectories")
        .arg("2")
        .arg("--out")
        .arg(dir.join("ens").to_str().unwrap()));
    assert!(out.status.success(), "{out:?}");
    let csv = std::fs::read_to_string(dir.join("ens_traj0000.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,r1,r2,y1,y2");
    // 500 steps -> 501 rows after the header.
    assert_eq!(lines.count(), 501);
    assert!(dir.join("ens_traj0001_cov.csv").exists());
}

#[test]
fn validate_rejects_unphysical_state() {
    let dir = temp_dir("validate");
    let state = dir.join("bad_state.toml");
    write(
        &state,
        r#"
kind = "state"
n = 1
mean = [0.0, 0.0]
cov = [0.5, 0.0, 0.0, 0.5]
"#,
    );
    let out = run(bin().arg("validate").arg(&state));
    assert_eq!(out.status.code(), Some(3), "{out:?}");
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("error[physics]"), "{stderr}");
    assert!(stderr.contains("uncertainty relation"), "{stderr}");
}

#[test]
fn validate_accepts_loss_channel_and_admissible_pair() {
    let dir = temp_dir("validate-ok");
    let channel = dir.join("loss.toml");
    // Loss with eta = 0.36: X = 0.6 I, Y = 0.64 I.
    write(
        &channel,
        r#"
kind = "channel"
n = 1
x = [0.6, 0.0, 0.0, 0.6]
y = [0.64, 0.0, 0.0, 0.64]
"#,
    );
    let out = run(bin().arg("validate").arg(&channel));
    assert!(out.status.success(), "{out:?}");

    let dd = dir.join("dd.toml");
    write(
        &dd,
        r#"
kind = "drift_diffusion"
n = 1
a = [-0.5, 0.0, 0.0, -0.5]
d = [1.0, 0.0, 0.0, 1.0]
"#,
    );
    let out = run(bin().arg("validate").arg(&dd));
    assert!(out.status.success(), "{out:?}");

    // Damping with no noise is inadmissible.
    let bad = dir.join("bad_dd.toml");
    write(
        &bad,
        r#"
kind = "drift_diffusion"
n = 1
a = [-0.5, 0.0, 0.0, -0.5]
d = [0.0, 0.0, 0.0, 0.0]
"#,
    );
    let out = run(bin().arg("validate").arg(&bad));
    assert_eq!(out.status.code(), Some(3), "{out:?}");
}

#[test]
fn malformed_config_reports_parse_position() {
    let dir = temp_dir("parse");
    let config = dir.join("broken.toml");
    write(&config, "[scenario]\npreset = \"opo\"\nchi = oops\n");
    let out = run(bin().arg("steady-state").arg("--config").arg(&config));
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("error[config]"), "{stderr}");
    assert!(stderr.contains("line 3"), "{stderr}");
}

#[test]
fn dilate_emits_symplectic_record_that_validates() {
    let dir = temp_dir("dilate");
    let channel = dir.join("loss.toml");
    write(
        &channel,
        r#"
kind = "channel"
n = 1
x = [0.7071067811865476, 0.0, 0.0, 0.7071067811865476]
y = [0.5, 0.0, 0.0, 0.5]
"#,
    );
    let out_file = dir.join("dilation.toml");
    let out = run(bin()
        .arg("dilate")
        .arg(&channel)
        .arg("--out")
        .arg(&out_file));
    assert!(out.status.success(), "{out:?}");
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("symplectic residual"), "{stdout}");

    let validate = run(bin().arg("validate").arg(&out_file));
    assert!(validate.status.success(), "{validate:?}");
    let text = String::from_utf8(validate.stdout).unwrap();
    assert!(text.contains("matrix is symplectic"), "{text}");
}

#[test]
fn shipped_sample_configs_stay_valid() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&configs).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("toml") {
            continue;
        }
        seen += 1;
        let out = run(bin().arg("steady-state").arg("--config").arg(&path));
        assert!(out.status.success(), "{}: {out:?}", path.display());
    }
    assert!(seen >= 5, "expected the sample configs to be present");
}

#[test]
fn dilate_rejects_wrong_record_kind() {
    let dir = temp_dir("dilate-bad");
    let state = dir.join("state.toml");
    write(
        &state,
        r#"
kind = "state"
n = 1
mean = [0.0, 0.0]
cov = [1.0, 0.0, 0.0, 1.0]
"#,
    );
    let out = run(bin().arg("dilate").arg(&state));
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}
