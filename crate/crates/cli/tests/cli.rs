use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
fock_dim = 30
[optimizer]
coarse_n = 5
refine_rounds = 1
[propagation]
steps = 300
samples = 600
[spectrum]
delta_points = 5
alpha2_points = 3
[robust_line]
points = 3
[noise]
scheme = "z_straight"
alpha2 = 2.0
duration = 30.0
realizations = 4
[noise.model]
kind = "ornstein_uhlenbeck"
sigma = 5e-3
tau_c = 300.0
[[sweep]]
label = "x"
scheme = "x"
alpha2 = [1.0]
durations = [20.0]
[[sweep]]
label = "zr"
scheme = "z_robust"
alpha2 = [0.5]
durations = [30.0]
[[sweep]]
label = "kerr"
scheme = "kerr"
alpha2 = [2.0]
durations = [3.141592653589793]
"#;

fn kerrcat(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kerrcat"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn every_row_carries_version_and_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    for cmd in ["spectrum", "robust-line", "twoqubit"] {
        let o = kerrcat(&[cmd], &cfg, &out);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let config: serde_json::Value = serde_json::from_str(&read(&out.join("config.json"))).unwrap();
    let hash = config["config_hash"].as_str().unwrap().to_string();
    assert_eq!(hash.len(), 64);
    for name in ["spectrum.csv", "spectrum_robust_line.csv", "robust_line.csv", "twoqubit_coefficients.csv"] {
        let text = read(&out.join(name));
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("version,config_hash,"));
        for l in lines {
            assert!(l.starts_with(&format!("kerrcat-{},{hash},", env!("CARGO_PKG_VERSION"))), "{name}: {l}");
        }
    }
}

#[test]
fn spectrum_zero_detuning_column_is_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    assert!(kerrcat(&["spectrum"], &cfg, &out).status.success());
    let text = read(&out.join("spectrum.csv"));
    let mut seen = 0;
    for l in text.lines().skip(1) {
        let f: Vec<&str> = l.split(',').collect();
        let (delta, gap): (f64, f64) = (f[2].parse().unwrap(), f[4].parse().unwrap());
        if delta == 0.0 {
            assert!(gap.abs() < 1e-9, "{l}");
            seen += 1;
        }
    }
    assert_eq!(seen, 3);
}

#[test]
fn gate_sweep_flags_small_cats_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let o = kerrcat(&["gate-sweep"], &cfg, &a);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = kerrcat(&["gate-sweep", "--threads", "2"], &cfg, &b);
    assert!(o.status.success());
    for name in ["gate_sweep.csv", "gate_traces.csv", "gate_sweep.json", "config.json"] {
        assert_eq!(read(&a.join(name)), read(&b.join(name)), "{name} differs between runs");
    }
    let summary = read(&a.join("gate_sweep.csv"));
    let status: Vec<&str> = summary.lines().skip(1).map(|l| l.split(',').nth(6).unwrap()).collect();
    assert_eq!(status, ["ok", "infeasible", "ok"]);
}

#[test]
fn seed_override_changes_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(kerrcat(&["robust-line"], &cfg, &a).status.success());
    assert!(kerrcat(&["robust-line", "--seed", "7"], &cfg, &b).status.success());
    let hash = |p: &Path| read(&p.join("robust_line.csv")).lines().nth(1).unwrap().split(',').nth(1).unwrap().to_string();
    assert_ne!(hash(&a), hash(&b));
}

#[test]
fn under_truncation_fails_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[propagation]\nsteps = 300\nsamples = 600\n[[sweep]]\nlabel = \"x\"\nscheme = \"x\"\nalpha2 = [3.0]\ndurations = [30.0]\n",
    );
    let out = dir.path().join("out");
    let o = kerrcat(&["convergence", "--fock-dim", "12"], &cfg, &out);
    assert_eq!(o.status.code(), Some(2));
    let text = read(&out.join("convergence.csv"));
    assert!(text.lines().nth(1).unwrap().contains(",fail,"));
}

#[test]
fn converged_points_pass() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[propagation]\nsteps = 500\nsamples = 600\n[[sweep]]\nlabel = \"x\"\nscheme = \"x\"\nalpha2 = [2.0]\ndurations = [30.0]\n\
         [[sweep]]\nlabel = \"idle\"\nscheme = \"idle\"\nalpha2 = [2.0]\ndurations = [10.0]\n",
    );
    let out = dir.path().join("out");
    let o = kerrcat(&["convergence"], &cfg, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(&out.join("convergence.csv"));
    assert_eq!(text.lines().filter(|l| l.contains(",pass,")).count(), 2);
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let bad = write_config(dir.path(), "delta_max = -1.0\n");
    assert_eq!(kerrcat(&["spectrum"], &bad, &out).status.code(), Some(1));
    let missing = dir.path().join("nope.toml");
    assert_eq!(kerrcat(&["spectrum"], &missing, &out).status.code(), Some(1));
    let typo = write_config(dir.path(), "[optimiser]\ncoarse_n = 3\n");
    assert_eq!(kerrcat(&["spectrum"], &typo, &out).status.code(), Some(1));
}

#[test]
fn noise_summary_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let o = kerrcat(&["noise"], &cfg, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value = serde_json::from_str(&read(&out.join("noise_summary.json"))).unwrap();
    let d = &doc["data"];
    assert_eq!(d["realizations"], 4);
    assert!(d["spectral_infidelity"].as_f64().unwrap() >= 0.0);
    assert_eq!(read(&out.join("noise_traces.csv")).lines().count(), 5);
}

#[test]
fn presets_resolve_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    for name in ["fig2bc", "fig2ef", "fig3cd", "figS1", "figS2"] {
        // twoqubit is cheap and only needs a valid config.
        let o = Command::new(env!("CARGO_BIN_EXE_kerrcat"))
            .args(["twoqubit", "--config", name, "--out"])
            .arg(&out)
            .output()
            .unwrap();
        assert!(o.status.success(), "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
}
