use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nls-lab-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.conf");
    std::fs::write(&path, text).unwrap();
    path
}

fn nls_lab(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nls-lab"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

const ROUGH: &str = "dim = 1\npower = 3\nsign = defocusing\ns = 0.9\nbox_length = 1\npoints = 64\n\
                     dt = 1e-5\nt_end = 0.002\nsample_every = 20\nN_list = 4, 8, 16\nsigma_list = 3\n";

#[test]
fn exponents_for_the_quintic_line() {
    let dir = scratch("exponents");
    let config = write_config(&dir, &ROUGH.replace("power = 3", "power = 5"));
    let out = nls_lab(&["exponents"], &config, &dir.join("out"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.join("out/exponents.txt")).unwrap();
    for line in ["# experiment = exponents", "s_c = 0", "r0 = 7", "q0 = 56/3", "r1 = 14/3", "q1 = 7"] {
        assert!(text.lines().any(|l| l == line), "missing {line:?} in\n{text}");
    }
    assert_eq!(text.lines().filter(|l| l.starts_with("relation.") && l.ends_with("= true")).count(), 5);
}

#[test]
fn ground_state_file_is_written() {
    let dir = scratch("gs");
    let config = write_config(&dir, &ROUGH.replace("defocusing", "focusing").replace("box_length = 1", "box_length = 50"));
    let out = nls_lab(&["ground-state"], &config, &dir.join("out"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.join("out/ground_state.csv")).unwrap();
    let q0: f64 = text.lines().find_map(|l| l.strip_prefix("# q0 = ")).unwrap().parse().unwrap();
    assert!((q0 - 2f64.sqrt()).abs() < 1e-8);
}

#[test]
fn drift_then_rescaling_pipeline() {
    let dir = scratch("pipeline");
    let config = write_config(&dir, ROUGH);
    let out_dir = dir.join("out");
    let out = nls_lab(&["exp", "almost-conservation"], &config, &out_dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for n in [4, 8, 16] {
        assert!(out_dir.join(format!("almost_conservation_N{n}.csv")).exists());
    }
    let summary = out_dir.join("almost_conservation_summary.jsonl");
    let out = Command::new(env!("CARGO_BIN_EXE_nls-lab"))
        .args(["exp", "rescaling", "--alpha-from"])
        .arg(&summary)
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(out_dir.join("rescaling_summary.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().next().unwrap().starts_with("{\"manifest\""));
}

#[test]
fn simulate_and_growth_run() {
    let dir = scratch("simulate");
    let config = write_config(&dir, ROUGH);
    assert!(nls_lab(&["simulate"], &config, &dir.join("sim")).status.success());
    assert!(dir.join("sim/simulate_N8.csv").exists());
    assert!(nls_lab(&["exp", "growth"], &config, &dir.join("growth")).status.success());
    assert!(dir.join("growth/growth_summary.jsonl").exists());
}

#[test]
fn errors_exit_nonzero() {
    let dir = scratch("errors");
    let config = write_config(&dir, &format!("{ROUGH}bogus = 1\n"));
    let out = nls_lab(&["simulate"], &config, &dir.join("out"));
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));

    let config = write_config(&dir, ROUGH);
    let out = nls_lab(&["exp", "rescaling"], &config, &dir.join("out"));
    assert!(!out.status.success());
    let out = nls_lab(&["exp", "stability"], &config, &dir.join("out"));
    assert!(!out.status.success());
}
