//! Integration tests for the command-line surface: exit codes, artifact
//! layout, and byte-identical reruns across thread counts.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fluxlat"))
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fluxlat_cli_{tag}"));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(path: &Path, body: &str) {
    fs::write(path, body).unwrap();
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).to_string()
}

#[test]
fn missing_config_exits_2_naming_the_path() {
    let dir = tmp_dir("missing");
    let out = bin()
        .args(["ed", "--config", "/nonexistent/x.toml"])
        .args(["--out", dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("/nonexistent/x.toml"), "{}", stderr(&out));
}

#[test]
fn unknown_config_key_exits_2_naming_the_key() {
    let dir = tmp_dir("unknown_key");
    let cfg = dir.join("bad.toml");
    write(
        &cfg,
        "[lattice]\nlx = 3\nly = 3\nalpha = 0.0\nn_particles = 1\nbananas = 7\n",
    );
    let out = bin()
        .args(["ed", "--config", cfg.to_str().unwrap()])
        .args(["--out", dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bananas"), "{}", stderr(&out));
}

#[test]
fn invalid_flux_exits_2() {
    let dir = tmp_dir("bad_flux");
    let cfg = dir.join("flux.toml");
    write(
        &cfg,
        "[lattice]\nlx = 3\nly = 3\nalpha = 0.21\nn_particles = 1\n",
    );
    let out = bin()
        .args(["ed", "--config", cfg.to_str().unwrap()])
        .args(["--out", dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("integer"), "{}", stderr(&out));
}

#[test]
fn qubit_flags_print_effective_model() {
    let dir = tmp_dir("qubit");
    let out = bin()
        .args(["qubit", "--Ec", "0.05", "--EL", "1.4", "--phix", "2.68"])
        .args(["--out", dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("omega0"), "{stdout}");
    assert!(stdout.contains("U2"));
    assert!(stdout.contains("U3"));
    assert!(dir.join("qubit.json").exists());
    assert!(dir.join("manifest.json").exists());
}

#[test]
fn ed_writes_spectrum_and_prints_gap() {
    let dir = tmp_dir("ed");
    let cfg = dir.join("ed.toml");
    write(
        &cfg,
        "[lattice]\nlx = 3\nly = 3\nalpha = 0.333333333333333333\nn_particles = 2\n\n[interaction]\nu3 = \"hardcore\"\n\n[solver]\nk = 6\n",
    );
    let out = bin()
        .args(["ed", "--config", cfg.to_str().unwrap()])
        .args(["--out", dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("gap/J"));
    let spectrum = fs::read_to_string(dir.join("spectrum.csv")).unwrap();
    assert_eq!(spectrum.lines().next().unwrap(), "n,E_over_J");
    assert_eq!(spectrum.lines().count(), 7); // header + 6 levels
    let manifest = fs::read_to_string(dir.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"subcommand\": \"ed\""));
}

#[test]
fn qubit_sweep_is_byte_identical_across_thread_counts() {
    let cfg_body = "[qubit_sweep]\nec = 0.05\nbasis_size = 40\nel = [0.8, 1.4]\nphi_x = { start = 2.4, stop = 2.9, count = 5 }\n";
    let mut outputs = Vec::new();
    for threads in ["1", "2"] {
        let dir = tmp_dir(&format!("sweep_t{threads}"));
        let cfg = dir.join("sweep.toml");
        write(&cfg, cfg_body);
        let out = bin()
            .args(["qubit-sweep", "--config", cfg.to_str().unwrap()])
            .args(["--out", dir.to_str().unwrap(), "--threads", threads])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        outputs.push(fs::read(dir.join("qubit_sweep.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1], "CSV bytes differ across thread counts");
}

#[test]
fn two_site_csv_has_time_column_and_unit_rows() {
    let dir = tmp_dir("two_site");
    let out = bin()
        .args(["two-site", "--initial", "1,0", "--j-eff", "1e-5"])
        .args(["--out", dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.join("two_site.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("t,"), "{header}");
    assert!(header.contains("P10"));
    assert!(dir.join("two_site.json").exists());
}

#[test]
fn fig4b_writes_order_parameter_table() {
    let dir = tmp_dir("fig4b");
    let cfg = dir.join("f.toml");
    // A single coarse cell keeps this at integration-smoke scale.
    write(
        &cfg,
        "[fig4b]\nu2 = [0.0]\nu3 = [60.0]\nscheme = \"nnn\"\n\n[solver]\nk = 4\n",
    );
    let out = bin()
        .args(["fig4b", "--config", cfg.to_str().unwrap()])
        .args(["--out", dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.join("order_parameter.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "U2,U3,lambda,gap,spread");
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn feasibility_flags_override() {
    let dir = tmp_dir("feas");
    let out = bin()
        .args(["feasibility", "--ej-ghz", "40", "--j-mhz", "10"])
        .args(["--out", dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.join("feasibility.csv")).unwrap();
    assert!(csv.lines().count() == 2);
    assert!(csv.contains("true"));
}
