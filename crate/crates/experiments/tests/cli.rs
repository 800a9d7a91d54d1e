use std::path::Path;
use std::process::Command;

use noma_experiments::config::{OUT_DIR_ENV, DEFAULT_OUT_DIR};
use noma_experiments::output::mean_std;
use noma_experiments::*;

/// Two users, two antennas, one budget: cheap enough for repeated runs.
fn small() -> ExperimentConfig {
    ExperimentConfig::from_toml(
        r#"
        [system]
        antennas = 2
        distances_m = [1.0, 3.0]

        [sweep]
        alphas = [0.0, 1.0]
        tx_snr_db = [20.0]
        seeds = [3, 4]
        "#,
    )
    .unwrap()
}

fn bytes(t: &Table) -> Vec<u8> {
    let mut buf = Vec::new();
    t.write_csv(&mut buf).unwrap();
    buf
}

#[test]
fn defaults_describe_the_reference_cell() {
    let cfg = ExperimentConfig::from_toml("").unwrap();
    assert_eq!(cfg, ExperimentConfig::default());
    assert_eq!(cfg.system.antennas, 3);
    assert_eq!(cfg.system.distances_m, vec![1.0, 2.0, 3.0, 4.0, 50.0]);
    assert_eq!(cfg.sweep.seeds.len(), 20);
    let p = cfg.params(20.0, cfg.sweep.eta_th);
    assert_eq!(p.num_users, 5);
    assert!((p.p_ava - 100.0).abs() < 1e-12);
    assert!((p.p_loss - 10.0).abs() < 1e-12);
    assert_eq!(p.eps0, 0.65);
    assert_eq!(p.bandwidth, 1e6);
    assert!(p.sinr_thresholds().iter().all(|e| *e == 0.01));
    cfg.validate().unwrap();
    // the printed configuration reads back unchanged
    assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
}

#[test]
fn file_values_override_defaults() {
    let cfg = small();
    assert_eq!(cfg.num_users(), 2);
    assert_eq!(cfg.sweep.seeds, vec![3, 4]);
    assert_eq!(cfg.system.path_loss_exp, 1.0);
    assert!(matches!(
        ExperimentConfig::from_toml("[system]\nantenas = 2"),
        Err(ExperimentError::Config(_))
    ));
    assert_eq!(ExperimentConfig::default().pareto_alphas().len(), 11);
}

#[test]
fn empty_seed_list_fails_before_solving() {
    let mut cfg = small();
    cfg.sweep.seeds.clear();
    for e in [Experiment::AlphaSweep, Experiment::Benchmark, Experiment::Feasibility] {
        assert!(matches!(e.run(&cfg, 1), Err(ExperimentError::Config(m)) if m.contains("seeds")));
    }
    let mut cfg = small();
    cfg.sweep.alphas = vec![1.5];
    assert!(cfg.validate().is_err());
    let mut cfg = small();
    cfg.solver.sdp_tol = 0.0;
    assert!(cfg.validate().is_err());
}

#[test]
fn output_directory_precedence() {
    let mut cfg = small();
    std::env::remove_var(OUT_DIR_ENV);
    assert_eq!(cfg.out_dir(None), Path::new(DEFAULT_OUT_DIR));
    cfg.output.dir = Some("from_file".into());
    assert_eq!(cfg.out_dir(None), Path::new("from_file"));
    std::env::set_var(OUT_DIR_ENV, "from_env");
    assert_eq!(cfg.out_dir(None), Path::new("from_env"));
    assert_eq!(cfg.out_dir(Some(Path::new("from_flag"))), Path::new("from_flag"));
    std::env::remove_var(OUT_DIR_ENV);
}

#[test]
fn sweeps_are_bit_identical_across_pool_sizes() {
    let cfg = small();
    let a = run_alpha_sweep(&cfg, 1).unwrap();
    let b = run_alpha_sweep(&cfg, 3).unwrap();
    assert_eq!(bytes(&a), bytes(&b));
    assert_eq!(a.rows.len(), 4);
    assert!(a.values("status").iter().all(|s| *s == "ok"), "{:?}", a.rows);
    let seeds = a.values("seed");
    assert_eq!(seeds, vec!["3", "3", "4", "4"]);
    // energy efficiency rises and spectral efficiency falls towards alpha = 1
    let se: Vec<f64> = a.values("se").iter().map(|s| s.parse().unwrap()).collect();
    let gee: Vec<f64> = a.values("gee").iter().map(|s| s.parse().unwrap()).collect();
    for s in 0..2 {
        assert!(se[2 * s] >= se[2 * s + 1] * (1.0 - 1e-6));
        assert!(gee[2 * s] <= gee[2 * s + 1] * (1.0 + 1e-6));
    }
}

#[test]
fn snr_sweep_flags_saturation_only_for_energy_weight() {
    let mut cfg = small();
    cfg.sweep.seeds = vec![5];
    cfg.sweep.tx_snr_db = vec![0.0, 30.0];
    let t = run_snr_sweep(&cfg, 1).unwrap();
    let alpha = t.values("alpha");
    let sat = t.values("saturated");
    assert_eq!(alpha, vec!["0", "0", "1", "1"]);
    assert_eq!(&sat[..2], &["", ""]);
    // 30 dB is far past the green power of a two-user cell
    assert_eq!(sat[3], "true");
    let se: Vec<f64> = t.values("se").iter().map(|s| s.parse().unwrap()).collect();
    assert!(se[1] >= se[0]);
}

#[test]
fn feasibility_map_properties() {
    let mut cfg = ExperimentConfig::default();
    cfg.sweep.seeds = (0..5).collect();
    cfg.feasibility.tx_snr_db = vec![20.0];
    cfg.feasibility.eta_th = vec![0.0, 0.1, 0.5, 2.0];
    let t = run_feasibility_map(&cfg, 2).unwrap();
    assert_eq!(bytes(&t), bytes(&run_feasibility_map(&cfg, 1).unwrap()));
    assert_eq!(t.rows.len(), 20);
    let p: Vec<f64> = t.values("p_star_w").iter().map(|s| s.parse().unwrap()).collect();
    let feasible = t.values("feasible");
    let mut infeasible_at_two = 0;
    for seed in 0..5 {
        let row = |j: usize| 4 * seed + j;
        assert_eq!(feasible[row(0)], "true");
        assert_eq!(p[row(0)], 0.0);
        for j in 1..4 {
            assert!(p[row(j)] >= p[row(j - 1)] * (1.0 - 1e-6), "seed {seed}");
        }
        if feasible[row(3)] == "false" {
            infeasible_at_two += 1;
        }
    }
    assert!(infeasible_at_two >= 4, "{infeasible_at_two}/5");
}

#[test]
fn benchmark_rows_and_fallback_marker() {
    let mut cfg = ExperimentConfig::default();
    cfg.system.distances_m = vec![1.0, 2.0, 3.0];
    cfg.sweep.seeds = vec![0];
    cfg.benchmark.alphas = vec![0.5];
    let t = run_benchmark_table(&cfg, 1).unwrap();
    assert_eq!(t.header.len(), 2 + 3 + 5);
    assert_eq!(t.column("rate_3_bps_hz"), Some(4));
    let gap: f64 = t.values("gap")[0].parse().unwrap();
    assert!(gap >= -1e-6 && gap <= 0.02, "{gap}");
    assert!(["ok", "not_converged", "rank_failure"].contains(&t.values("status")[0]));

    // thresholds no budget can meet turn every row into the SE-Max marker
    cfg.benchmark.eta_th = 50.0;
    let t = run_benchmark_table(&cfg, 1).unwrap();
    assert_eq!(t.values("status"), vec!["se_max_fallback"]);
    assert_eq!(t.values("sdr_power_w"), vec![""]);
    let power: f64 = t.values("sca_power_w")[0].parse().unwrap();
    assert!(power <= 100.0 * (1.0 + 1e-8));
}

#[test]
fn summary_uses_sample_deviation() {
    let mut t = Table::new("demo", &["k", "v", "status"]);
    for (k, v, s) in [("a", "1", "ok"), ("a", "3", "ok"), ("b", "5", "ok"), ("a", "100", "error: x"), ("b", "", "ok")] {
        t.push(vec![k.into(), v.into(), s.into()]);
    }
    let s = summarize(&t, &["k"], &["v"]);
    assert_eq!(s.name, "demo_summary");
    assert_eq!(s.header, vec!["k", "n", "v_mean", "v_std"]);
    assert_eq!(s.rows[0], vec!["a", "2", "2", &2f64.sqrt().to_string()]);
    assert_eq!(s.rows[1], vec!["b", "1", "5", ""]);
    assert_eq!(mean_std(&[]), (None, None));
}

#[test]
fn binary_writes_versioned_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.toml");
    std::fs::write(&cfg_path, "[feasibility]\neta_th = [0.1]\ntx_snr_db = [10.0, 20.0]\n").unwrap();
    let out = dir.path().join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_noma-experiments"))
        .args(["feasibility", "--seeds", "2", "--jobs", "1", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    assert!(status.status.success());
    let main = std::fs::read_to_string(out.join("feasibility.v1.csv")).unwrap();
    assert_eq!(main.lines().next(), Some("seed,eta_th,tx_snr_db,p_star_w,p_ava_w,feasible,status"));
    assert_eq!(main.lines().count(), 1 + 4);
    assert!(out.join("feasibility_summary.v1.csv").exists());

    std::fs::write(&cfg_path, "[sweep]\nseeds = []\n").unwrap();
    let failed = Command::new(env!("CARGO_BIN_EXE_noma-experiments"))
        .args(["alpha-sweep", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(!failed.status.success());
    assert!(String::from_utf8_lossy(&failed.stderr).contains("seeds"));
}
