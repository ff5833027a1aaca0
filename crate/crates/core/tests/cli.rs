use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tprabi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tprabi")).args(args).output().unwrap()
}

fn run(cmd: &str, config: &str, dir: &Path, extra: &[&str]) -> Output {
    let cfg = dir.join(format!("{cmd}.toml"));
    fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    tprabi(&args)
}

const SPECTRUM: &str = r#"
schema_version = 1
command = "spectrum"

[model]
variant = "two_photon_jc"
g2 = 0.01

[numerics]
cutoff = 30
k_levels = 6
"#;

#[test]
fn spectrum_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("spectrum", SPECTRUM, dir.path(), &["--workers", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("out/spectrum.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "g2,level_0,level_1,level_2,level_3,level_4,level_5,parity_0,parity_1,parity_2,parity_3,parity_4,parity_5,converged"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let l2: f64 = row[3].parse().unwrap();
    let l3: f64 = row[4].parse().unwrap();
    assert!(((l3 - l2) - 2.0 * 2f64.sqrt() * 0.01).abs() < 1e-9);
    assert_eq!(*row.last().unwrap(), "true");

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "spectrum");
    assert_eq!(manifest["converged"], true);
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["files"][0]["name"], "spectrum.csv");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let cfg = r#"
schema_version = 1
[model]
variant = "two_photon_qrm_full"
[scan]
start = 0.0
stop = 0.1
points = 5
[numerics]
cutoff = 24
k_levels = 4
"#;
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run("coupling-scan", cfg, a.path(), &["--workers", "1"]).status.success());
    assert!(run("coupling-scan", cfg, b.path(), &["--workers", "1"]).status.success());
    let x = fs::read(a.path().join("out/spectrum.csv")).unwrap();
    let y = fs::read(b.path().join("out/spectrum.csv")).unwrap();
    assert_eq!(x, y);
}

#[test]
fn negative_gamma_exits_2_naming_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
schema_version = 1
[model]
variant = "two_photon_jc"
g2 = 0.01
[drive]
gamma = -0.001
intensity_over_gamma = 0.01
[scan]
start = 1.99
stop = 2.01
points = 3
"#;
    let o = run("transmission-scan", cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "validation");
    assert_eq!(err["error"]["field"], "drive.gamma");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn unknown_key_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("spectrum", &format!("{SPECTRUM}\n[output]\nfromat = \"csv\"\n"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("fromat"));
}

#[test]
fn mismatched_command_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("coupling-scan", SPECTRUM, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn collapse_full_quadratic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
schema_version = 1
[model]
variant = "two_photon_qrm_full"
"#;
    let o = run("collapse", cfg, dir.path(), &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/collapse.json")).unwrap()).unwrap();
    let g = v["g_col"].as_f64().unwrap();
    assert!((g / 0.25 - 1.0).abs() < 0.01, "{g}");
}

#[test]
fn collapse_of_rwa_model_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "schema_version = 1\n[model]\nvariant = \"jc\"\ng = 0.01\n";
    let o = run("collapse", cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn transmission_scan_rows_carry_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
schema_version = 1
[model]
variant = "two_photon_jc"
g2 = 0.01
[drive]
target = "cavity"
gamma = 0.001
gamma_q = 0.0001
gamma_phi = 0.00005
intensity_over_gamma = 0.01
[scan]
values = [0.999, 1.0, 1.001]
[numerics]
cutoff = 10
"#;
    let o = run("transmission-scan", cfg, dir.path(), &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("out/transmission.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "omega_d,D,T,g2,g3,n_out,converged");
    assert_eq!(lines.len(), 4);
    for l in &lines[1..] {
        let last = l.rsplit(',').next().unwrap();
        assert!(last == "true" || last == "false");
    }
}

#[test]
fn circuit_params_prints_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
schema_version = 1
[circuit]
i_c_ua = 1.0
squid_ghz = 5.0
mutual_ph = 5.0
i_p_na = 300.0
flux_dc = 0.1
"#;
    let o = run("circuit-params", cfg, dir.path(), &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let w = v["omega_sq"].as_f64().unwrap();
    assert!((w / (2.0 * std::f64::consts::PI * 5e9) - 1.0).abs() < 1e-12);
    assert!(v["g2"].as_f64().unwrap() < 0.0);
    assert_eq!(v["g1"].as_f64().unwrap(), 0.0);
}

#[test]
fn unwritable_output_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    // a regular file where the output directory should go
    fs::write(dir.path().join("out"), "").unwrap();
    let o = run("spectrum", SPECTRUM, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(4));
}
