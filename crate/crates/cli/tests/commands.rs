mod support;

use std::fs;
use std::process::Command;

use stefan_cli::output::csv_body;
use stefan_cli::run::{EXIT_OK, EXIT_VALIDATION};
use support::j01;

const MODEL: &str = r#"
[model]
alpha = "1.1"
gamma = "0.1"
beta = "1"
d = 1
mu = 1
h0 = 1.5
N = 2
T = 1
u0 = "0.5*cos(pi*r/3)"
"#;

fn stefan(config: &str, out: &std::path::Path) -> (i32, String) {
    let path = out.join("config.toml");
    fs::create_dir_all(out).unwrap();
    fs::write(&path, config).unwrap();
    let output = Command::new(env!("CARGO_BIN_EXE_stefan"))
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap();
    (output.status.code().unwrap(), String::from_utf8_lossy(&output.stderr).into_owned())
}

fn rows(path: &std::path::Path) -> Vec<Vec<String>> {
    csv_body(&fs::read_to_string(path).unwrap())
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn eigen_sweep_is_decreasing_and_crosses_at_the_bessel_radius() {
    let dir = tempfile::tempdir().unwrap();
    let config = format!("command = \"eigen\"\n{MODEL}\n[eigen]\nradii = [1.0, 2.0, 2.4, 2.5, 3.0]\nn = 256\n");
    let (code, err) = stefan(&config, dir.path());
    assert_eq!(code, EXIT_OK, "{err}");
    let table = rows(&dir.path().join("eigen_sweep.csv"));
    let lambdas: Vec<f64> = table.iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(lambdas.len(), 5);
    assert!(lambdas.windows(2).all(|w| w[1] < w[0]));
    assert!(lambdas[2] > 0.0 && lambdas[3] < 0.0, "{lambdas:?} around {}", j01());
}

#[test]
fn one_cell_sweep_writes_phase_and_overlay() {
    let dir = tempfile::tempdir().unwrap();
    let config = format!(
        "command = \"sweep\"\n{MODEL}\n[numerics]\nn = 128\n\n[sweep]\naxis1 = \"mu\"\naxis1_values = [1.0]\naxis2 = \"h0\"\naxis2_values = [3.0]\n"
    );
    let (code, err) = stefan(&config, dir.path());
    assert_eq!(code, EXIT_OK, "{err}");
    let table = rows(&dir.path().join("phase.csv"));
    assert_eq!(table.len(), 1);
    assert_eq!(table[0][2], "Spreading");
    let overlay: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("overlay.json")).unwrap()).unwrap();
    let h_star = overlay["h_star"].as_f64().unwrap();
    assert!((h_star - j01()).abs() < 2e-3);
    assert_eq!(overlay["meta"]["command"], "sweep");
}

#[test]
fn simulate_writes_all_artifacts_with_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let config = format!("command = \"simulate\"\nseed = 7\n{MODEL}\n[numerics]\nn = 64\nt_max = 5\n");
    let (code, err) = stefan(&config, dir.path());
    assert_eq!(code, EXIT_OK, "{err}");
    let text = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let meta: Vec<&str> = text.lines().take_while(|l| l.starts_with('#')).collect();
    assert_eq!(meta.len(), 5);
    assert!(meta.contains(&"# seed: 7"));
    assert!(meta.iter().any(|l| l.starts_with("# config_sha256: ") && l.len() == 17 + 64));
    assert!(dir.path().join("snapshots.csv").exists());
    let outcome: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("outcome.json")).unwrap()).unwrap();
    assert!(outcome["meta"]["wall_time_s"].is_number());
    let first = &rows(&dir.path().join("trajectory.csv"))[0];
    assert!(first.iter().skip(1).all(|v| v.contains('e')), "{first:?}");
}

#[test]
fn configuration_errors_exit_with_the_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let broken = MODEL.replace("mu = 1\n", "");
    let (code, err) = stefan(&format!("command = \"simulate\"\n{broken}"), dir.path());
    assert_eq!(code, EXIT_VALIDATION);
    assert!(err.contains("mu"), "{err}");

    let negative = MODEL.replace("d = 1\n", "d = -1\n");
    let (code, _) = stefan(&format!("command = \"simulate\"\n{negative}"), dir.path());
    assert_eq!(code, EXIT_VALIDATION);

    let zero_gamma = MODEL.replace("gamma = \"0.1\"", "gamma = \"0\"");
    let (code, err) = stefan(&format!("command = \"simulate\"\n{zero_gamma}"), dir.path());
    assert_eq!(code, EXIT_VALIDATION, "{err}");
}

#[test]
fn missing_config_file_is_reported() {
    let output = Command::new(env!("CARGO_BIN_EXE_stefan"))
        .args(["--config", "/nonexistent/stefan.toml"])
        .output()
        .unwrap();
    assert_ne!(output.status.code(), Some(EXIT_OK));
}
