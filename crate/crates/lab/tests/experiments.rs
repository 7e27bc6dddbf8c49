use std::path::{Path, PathBuf};

use nls_lab::config::ExperimentConfig;
use nls_lab::experiments::{
    alpha_from_summary, run_almost_conservation, run_growth, run_rescaling, run_stability, simulate,
    write_almost_conservation, write_growth, write_simulation, write_stability, ExperimentError,
};
use nls_lab::output::{read_diagnostics_csv, read_summary};
use nls_lab::scaling::ParameterChoice;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nls-lab-exp-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn rough_config(extra: &str) -> ExperimentConfig {
    let text = format!(
        "dim = 1\npower = 3\nsign = defocusing\ns = 0.9\nbox_length = 1\npoints = 64\n\
         dt = 1e-5\nt_end = 0.002\nsample_every = 20\nN_list = 4, 8, 16\nsigma_list = 3\nseed = 5\n{extra}"
    );
    ExperimentConfig::parse(&text).unwrap()
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn drift_runs_are_bit_reproducible() {
    let config = rough_config("");
    let (a, b) = (scratch("det-a"), scratch("det-b"));
    write_almost_conservation(&a, &config, &run_almost_conservation(&config).unwrap()).unwrap();
    write_almost_conservation(&b, &config, &run_almost_conservation(&config).unwrap()).unwrap();
    let (fa, fb) = (read_all(&a), read_all(&b));
    assert_eq!(fa.len(), 4);
    assert_eq!(fa, fb);
}

#[test]
fn other_seed_changes_the_data() {
    let a = run_almost_conservation(&rough_config("")).unwrap();
    let b = run_almost_conservation(&ExperimentConfig::parse(
        &rough_config("").to_text().replace("seed = 5", "seed = 6"),
    )
    .unwrap())
    .unwrap();
    assert_ne!(a.series[0][0], b.series[0][0]);
}

#[test]
fn multiplier_above_the_grid_is_the_identity() {
    // every resolved |ξ| ≤ 32 lies below N, so I_N u = u
    let mut config = rough_config("");
    config.n_list = vec![64.0, 128.0];
    let result = run_almost_conservation(&config).unwrap();
    for records in &result.series {
        for r in records {
            assert_eq!(r.modified_hamiltonian, r.hamiltonian);
            assert_eq!(r.modified_lyapunov, r.lyapunov);
            assert!(r.commutator.unwrap() < 1e-12 * r.sobolev_norm.powi(3));
        }
    }
    let h0 = result.series[0][0].hamiltonian.abs();
    assert!((result.rows[0].drift_hamiltonian / h0 - result.hamiltonian_drift).abs() < 1e-15);
    assert!(result.mass_drift < 1e-12);
}

#[test]
fn drift_decreases_with_n() {
    let result = run_almost_conservation(&rough_config("")).unwrap();
    assert!(result.aborted.is_none());
    let drifts: Vec<f64> = result.rows.iter().map(|r| r.drift_hamiltonian).collect();
    assert!(drifts.windows(2).all(|w| w[1] < w[0]), "{drifts:?}");
}

#[test]
fn tiny_data_evolve_almost_linearly() {
    let mut config = rough_config("");
    config.sigma_list = vec![1e-6];
    let growth = run_growth(&config).unwrap();
    assert!((growth.max_norm_ratio - 1.0).abs() < 1e-8);
    assert!(growth.mass_drift < 1e-10);
    let norms: Vec<f64> = growth.records.iter().map(|r| r.sobolev_norm).collect();
    assert!(norms.iter().all(|n| (n / norms[0] - 1.0).abs() < 1e-8));

    let dir = scratch("growth");
    write_growth(&dir, &config, &growth).unwrap();
    let (manifest, records) = read_diagnostics_csv(&dir.join("growth.csv")).unwrap();
    assert_eq!(records, growth.records);
    assert_eq!(manifest.get("experiment"), Some("growth"));
}

#[test]
fn preconditions_are_enforced() {
    let focusing_quintic = ExperimentConfig::parse(
        &rough_config("").to_text().replace("defocusing", "focusing").replace("power = 3", "power = 5"),
    )
    .unwrap();
    assert!(matches!(run_almost_conservation(&focusing_quintic), Err(ExperimentError::Precondition(_))));
    assert!(matches!(run_stability(&rough_config("")), Err(ExperimentError::Precondition(_))));
    let focusing = ExperimentConfig::parse(&rough_config("").to_text().replace("defocusing", "focusing")).unwrap();
    assert!(matches!(run_growth(&focusing), Err(ExperimentError::Precondition(_))));
}

#[test]
fn unperturbed_soliton_stays_on_the_cylinder() {
    let config = ExperimentConfig::parse(
        "dim = 1\npower = 2\nsign = focusing\ns = 0.9\nbox_length = 50\npoints = 256\n\
         dt = 1e-3\nt_end = 1\nsample_every = 100\nsigma_list = 0.02, 0.01\na = 2\nseed = 7\n",
    )
    .unwrap();
    let result = run_stability(&config).unwrap();
    assert!(result.control.max_distance < 1e-5, "{}", result.control.max_distance);
    assert!(result.control.initial_distance < 1e-10);
    assert_eq!(result.rows.len(), 2);
    for row in &result.rows {
        assert_eq!(row.n_cutoff, Some(row.sigma.powf(-2.0)));
        assert!(row.initial_distance <= row.sigma * (1.0 + 1e-9));
        assert!(row.mass_drift < 1e-10);
        assert!((row.radius - 2.0 * row.initial_norm).abs() < 1e-15);
    }
    let dir = scratch("stability");
    write_stability(&dir, &config, &result).unwrap();
    let names: Vec<String> = read_all(&dir).into_iter().map(|(n, _)| n).collect();
    assert_eq!(
        names,
        ["stability_sigma0.01.csv", "stability_sigma0.02.csv", "stability_sigma0.csv", "stability_summary.jsonl"]
    );
    let lines = read_summary(&dir.join("stability_summary.jsonl")).unwrap();
    assert_eq!(lines[1]["sigma"], 0.0);
}

#[test]
fn alpha_read_back_from_summary() {
    let config = rough_config("");
    let result = run_almost_conservation(&config).unwrap();
    let dir = scratch("alpha");
    write_almost_conservation(&dir, &config, &result).unwrap();
    let alpha = alpha_from_summary(&dir.join("almost_conservation_summary.jsonl")).unwrap();
    assert_eq!(alpha, -result.hamiltonian_fit.as_ref().unwrap().slope);

    let rescaled = run_rescaling(&rough_config("lambda = 4\n"), alpha).unwrap();
    assert!((rescaled.homogeneous_ratio / rescaled.homogeneous_predicted - 1.0).abs() < 1e-9);
    assert!((rescaled.l2_ratio / rescaled.l2_predicted - 1.0).abs() < 1e-9);
    assert!(matches!(rescaled.choice, ParameterChoice::Feasible { .. }), "{:?}", rescaled.choice);

    let missing = scratch("alpha-missing").join("empty.jsonl");
    std::fs::write(&missing, "{\"manifest\":{}}\n").unwrap();
    assert!(alpha_from_summary(&missing).is_err());
}

#[test]
fn simulate_writes_one_file_per_cutoff() {
    let config = rough_config("");
    let sim = simulate(&config).unwrap();
    assert_eq!(sim.series.len(), 3);
    let dir = scratch("simulate");
    write_simulation(&dir, &config, &sim).unwrap();
    for n in [4, 8, 16] {
        let (manifest, records) = read_diagnostics_csv(&dir.join(format!("simulate_N{n}.csv"))).unwrap();
        assert_eq!(manifest.get("N"), Some(n.to_string().as_str()));
        assert_eq!(records.len(), 11);
    }
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "conf") {
            ExperimentConfig::from_path(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            count += 1;
        }
    }
    assert!(count >= 5);
}
