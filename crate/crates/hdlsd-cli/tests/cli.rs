//! End-to-end tests of the `hdlsd` binary: artifact layout, summary
//! consistency against offline recomputation, determinism, exit codes,
//! and the documented accuracy of the shipped comparison pipeline.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use hdlsd::io::{read_curve_csv, read_esd_csv};
use hdlsd::lsd_solver::SolverConfig;
use hdlsd::model::{
    CoefficientFamily, InnovationLaw, ProcessModel, RotationKind, SpectralParamDistribution,
    TaperKind, TaperSpec,
};
use hdlsd::spectra::ks_distance;
use hdlsd_cli::config::{ExperimentConfig, Mode};
use hdlsd_cli::run::Summary;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hdlsd"))
}

fn identity_model() -> ProcessModel {
    ProcessModel::new(
        CoefficientFamily::identity(),
        SpectralParamDistribution::point_mass(vec![0.0]),
        InnovationLaw::RealGaussian,
        RotationKind::IdentityU,
    )
    .unwrap()
}

fn ma1_model() -> ProcessModel {
    ProcessModel::new(
        CoefficientFamily::tabulated_ma(),
        SpectralParamDistribution::from_weighted([(vec![0.2], 0.5), (vec![0.8], 0.5)]).unwrap(),
        InnovationLaw::RealGaussian,
        RotationKind::IdentityU,
    )
    .unwrap()
}

fn base_config(model: ProcessModel, mode: Mode) -> ExperimentConfig {
    ExperimentConfig {
        mode,
        model,
        c: 0.5,
        p_list: vec![60],
        taus: vec![0, 1],
        replicates: 3,
        seed: 11,
        solver: SolverConfig {
            nu_grid_size: 128,
            ..SolverConfig::default()
        },
        truncation: None,
        curve_points: 129,
        v_sequence: None,
        taper: None,
        eta: 0.0,
    }
}

fn write_config(dir: &Path, cfg: &ExperimentConfig) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path
}

fn run_sub(sub: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg(sub)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("process exited")
}

fn read_summary(out: &Path) -> Summary {
    serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap()
}

/// Summary JSON with wall-clock fields nulled, for determinism diffs.
fn summary_modulo_runtimes(out: &Path) -> serde_json::Value {
    let mut v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    v["total_runtime_s"] = 0.0.into();
    for cell in v["cells"].as_array_mut().unwrap() {
        cell["runtime_s"] = 0.0.into();
    }
    v
}

#[test]
fn compare_emits_expected_files_and_summary_matches_offline_recompute() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = base_config(ma1_model(), Mode::Compare);
    let config = write_config(dir.path(), &cfg);
    let out = dir.path().join("out");

    let output = run_sub("compare", &config, &out, &[]);
    assert_eq!(code(&output), 0, "stderr: {}", String::from_utf8_lossy(&output.stderr));

    // The effective config is copied next to the artifacts.
    let copied: ExperimentConfig =
        serde_json::from_str(&fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(copied.seed, cfg.seed);
    assert_eq!(copied.p_list, cfg.p_list);

    let summary = read_summary(&out);
    assert_eq!(summary.mode, "compare");
    assert_eq!(summary.failed_cells, 0);
    assert_eq!(summary.cells.len(), 2);

    for cell in &summary.cells {
        let (p, tau) = (cell.p.unwrap(), cell.tau.unwrap());
        assert_eq!(cell.n, Some(120));
        assert_eq!(cell.ks.len(), 3);
        assert!(cell.kernel_converged.unwrap());
        assert!(cell.kernel_residual.unwrap() <= 1e-10);

        let curve_file = out.join(format!("curve_tau{tau}_p{p}.csv"));
        let curve = read_curve_csv(&mut BufReader::new(fs::File::open(curve_file).unwrap())).unwrap();
        for (r, &ks) in cell.ks.iter().enumerate() {
            let esd_file = out.join(format!("esd_tau{tau}_p{p}_r{r}.csv"));
            let esd = read_esd_csv(&mut BufReader::new(fs::File::open(esd_file).unwrap())).unwrap();
            let recomputed = ks_distance(&esd, &curve, &[]).unwrap();
            assert!(
                (recomputed - ks).abs() <= 1e-9,
                "tau {tau} r {r}: summary {ks} vs offline {recomputed}"
            );
        }
        let mut sorted = cell.ks.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(cell.ks_median, Some(sorted[1]));
        assert_eq!(cell.ks_max, Some(sorted[2]));
    }
}

#[test]
fn fixed_seed_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config(ma1_model(), Mode::Compare);
    cfg.replicates = 1;
    let config = write_config(dir.path(), &cfg);
    let (out_a, out_b) = (dir.path().join("a"), dir.path().join("b"));

    assert_eq!(code(&run_sub("compare", &config, &out_a, &[])), 0);
    assert_eq!(code(&run_sub("compare", &config, &out_b, &[])), 0);

    let mut names: Vec<String> = fs::read_dir(&out_a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert!(names.contains(&"curve_tau0_p60.csv".to_string()));
    assert!(names.contains(&"esd_tau1_p60_r0.csv".to_string()));
    for name in &names {
        if name == "summary.json" {
            continue;
        }
        let a = fs::read(out_a.join(name)).unwrap();
        let b = fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
    assert_eq!(summary_modulo_runtimes(&out_a), summary_modulo_runtimes(&out_b));
}

#[test]
fn seed_flag_overrides_config_seed() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config(ma1_model(), Mode::Esd);
    cfg.replicates = 1;
    cfg.taus = vec![0];
    let config = write_config(dir.path(), &cfg);
    let (out_a, out_b) = (dir.path().join("a"), dir.path().join("b"));

    assert_eq!(code(&run_sub("esd", &config, &out_a, &[])), 0);
    assert_eq!(code(&run_sub("esd", &config, &out_b, &["--seed", "99"])), 0);

    let copied: ExperimentConfig =
        serde_json::from_str(&fs::read_to_string(out_b.join("config.json")).unwrap()).unwrap();
    assert_eq!(copied.seed, 99);

    let a = fs::read(out_a.join("esd_tau0_p60_r0.csv")).unwrap();
    let b = fs::read(out_b.join("esd_tau0_p60_r0.csv")).unwrap();
    assert_ne!(a, b, "different seeds must give different spectra");
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");

    // Malformed JSON.
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    assert_eq!(code(&run_sub("compare", &bad, &out, &[])), 1);

    // Unknown field.
    let mut v = serde_json::to_value(base_config(ma1_model(), Mode::Compare)).unwrap();
    v.as_object_mut().unwrap().insert("pee_list".into(), serde_json::json!([1]));
    let unknown = dir.path().join("unknown.json");
    fs::write(&unknown, serde_json::to_string(&v).unwrap()).unwrap();
    assert_eq!(code(&run_sub("compare", &unknown, &out, &[])), 1);

    // Inconsistent dimensions: n = round(p / c) below max lag + 1.
    let mut cfg = base_config(ma1_model(), Mode::Compare);
    cfg.c = 100.0;
    let inconsistent = write_config(dir.path(), &cfg);
    assert_eq!(code(&run_sub("compare", &inconsistent, &out, &[])), 1);

    // No artifacts are produced for config errors.
    assert!(!out.exists());

    // Usage errors behave like config errors; --help succeeds.
    let usage = bin().arg("compare").arg("--bogus").output().unwrap();
    assert_eq!(usage.status.code().unwrap(), 1);
    let help = bin().arg("--help").output().unwrap();
    assert_eq!(help.status.code().unwrap(), 0);
}

#[test]
fn failing_cells_exit_two_while_siblings_proceed() {
    let dir = tempfile::tempdir().unwrap();
    // The second rung exceeds the eigensolver dimension cap; the first
    // stays comfortably inside it.
    let mut cfg = base_config(identity_model(), Mode::Esd);
    cfg.c = 500.0;
    cfg.p_list = vec![1000, 4100];
    cfg.taus = vec![0];
    cfg.replicates = 1;
    let config = write_config(dir.path(), &cfg);
    let out = dir.path().join("out");

    let output = run_sub("esd", &config, &out, &[]);
    assert_eq!(code(&output), 2, "stderr: {}", String::from_utf8_lossy(&output.stderr));

    let summary = read_summary(&out);
    assert_eq!(summary.failed_cells, 1);
    let ok_cell = summary.cells.iter().find(|c| c.p == Some(1000)).unwrap();
    assert!(ok_cell.error.is_none());
    assert_eq!(ok_cell.files, vec!["esd_tau0_p1000_r0.csv".to_string()]);
    assert!(out.join("esd_tau0_p1000_r0.csv").exists());
    let bad_cell = summary.cells.iter().find(|c| c.p == Some(4100)).unwrap();
    assert!(bad_cell.error.is_some());
}

#[test]
fn degenerate_taper_reproduces_lag_zero_compare() {
    let dir = tempfile::tempdir().unwrap();
    let mut compare_cfg = base_config(ma1_model(), Mode::Compare);
    compare_cfg.taus = vec![0];
    let mut taper_cfg = compare_cfg.clone();
    taper_cfg.mode = Mode::Taper;
    taper_cfg.taper = Some(TaperSpec::lag_zero_only());
    taper_cfg.eta = 0.3;

    let out_c = dir.path().join("compare");
    let out_t = dir.path().join("taper");
    assert_eq!(code(&run_sub("compare", &write_config(dir.path(), &compare_cfg), &out_c, &[])), 0);
    let taper_path = dir.path().join("taper.json");
    fs::write(&taper_path, serde_json::to_string_pretty(&taper_cfg).unwrap()).unwrap();
    assert_eq!(code(&run_sub("taper", &taper_path, &out_t, &[])), 0);

    // A taper that keeps only the lag-0 term realizes the lag-0 estimator
    // and its limit exactly, file for file.
    let curve_c = fs::read(out_c.join("curve_tau0_p60.csv")).unwrap();
    let curve_t = fs::read(out_t.join("curve_taper.csv")).unwrap();
    assert_eq!(curve_c, curve_t);
    for r in 0..3 {
        let a = fs::read(out_c.join(format!("esd_tau0_p60_r{r}.csv"))).unwrap();
        let b = fs::read(out_t.join(format!("esd_taper_p60_r{r}.csv"))).unwrap();
        assert_eq!(a, b, "replicate {r}");
    }
    let sc = read_summary(&out_c);
    let st = read_summary(&out_t);
    assert_eq!(sc.cells[0].ks, st.cells[0].ks);
}

#[test]
fn white_noise_lag_zero_ladder_matches_its_limit() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config(identity_model(), Mode::Compare);
    cfg.p_list = vec![200];
    cfg.taus = vec![0];
    cfg.replicates = 10;
    cfg.seed = 42;
    cfg.curve_points = 512;
    cfg.solver = SolverConfig {
        max_iter: 20_000,
        ..SolverConfig::default()
    };
    let config = write_config(dir.path(), &cfg);
    let out = dir.path().join("out");

    let output = run_sub("compare", &config, &out, &[]);
    assert_eq!(code(&output), 0, "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let summary = read_summary(&out);
    let cell = &summary.cells[0];
    assert_eq!(cell.n, Some(400));
    assert!(
        cell.ks_median.unwrap() <= 0.05,
        "median KS {} above 0.05",
        cell.ks_median.unwrap()
    );
}

#[test]
fn two_atom_ma_lag_one_stays_close_at_small_dimension() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config(ma1_model(), Mode::Compare);
    cfg.p_list = vec![50];
    cfg.taus = vec![1];
    cfg.replicates = 10;
    cfg.seed = 3;
    cfg.curve_points = 512;
    cfg.solver = SolverConfig {
        max_iter: 20_000,
        ..SolverConfig::default()
    };
    let config = write_config(dir.path(), &cfg);
    let out = dir.path().join("out");

    assert_eq!(code(&run_sub("compare", &config, &out, &[])), 0);
    let summary = read_summary(&out);
    let med = summary.cells[0].ks_median.unwrap();
    assert!(med <= 0.12, "median KS {med} above 0.12 at p = 50");
}

#[test]
fn esd_mode_stays_under_a_second_per_replicate() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config(identity_model(), Mode::Esd);
    cfg.p_list = vec![20];
    cfg.taus = vec![0, 1, 2];
    cfg.replicates = 5;
    let config = write_config(dir.path(), &cfg);
    let out = dir.path().join("out");

    let t = Instant::now();
    assert_eq!(code(&run_sub("esd", &config, &out, &[])), 0);
    let per_replicate = t.elapsed().as_secs_f64() / 5.0;
    assert!(per_replicate < 1.0, "{per_replicate:.3} s per replicate");
    for tau in 0..=2 {
        for r in 0..5 {
            assert!(out.join(format!("esd_tau{tau}_p20_r{r}.csv")).exists());
        }
    }
}

#[test]
fn lsd_mode_emits_one_curve_per_lag() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config(ma1_model(), Mode::Lsd);
    cfg.taus = vec![0, 1, 2];
    cfg.curve_points = 65;
    let config = write_config(dir.path(), &cfg);
    let out = dir.path().join("out");

    assert_eq!(code(&run_sub("lsd", &config, &out, &["--threads", "2"])), 0);
    for tau in 0..=2 {
        let file = out.join(format!("curve_tau{tau}.csv"));
        let curve = read_curve_csv(&mut BufReader::new(fs::File::open(&file).unwrap())).unwrap();
        assert!(curve.cdf.windows(2).all(|w| w[1] >= w[0]), "lag {tau}: cdf not monotone");
        assert!(*curve.cdf.last().unwrap() <= 1.0 + 1e-3);
    }
    let summary = read_summary(&out);
    assert_eq!(summary.cells.len(), 3);
    assert!(summary.cells.iter().all(|c| c.kernel_converged == Some(true)));
}

#[test]
fn validate_reports_assumptions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = base_config(ma1_model(), Mode::Compare);
    let config = write_config(dir.path(), &cfg);

    let output = bin().arg("validate").arg("--config").arg(&config).output().unwrap();
    assert_eq!(output.status.code().unwrap(), 0);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("[ok] f0_is_one"));
    assert!(stdout.contains("p = 60 -> n = 120"));

    // A model violating the standing assumptions is a config error.
    let mut v = serde_json::to_value(&cfg).unwrap();
    v["model"]["param_distribution"]["atoms"][0]["weight"] = 0.9.into();
    let bad = dir.path().join("bad_weights.json");
    fs::write(&bad, serde_json::to_string(&v).unwrap()).unwrap();
    let output = bin().arg("validate").arg("--config").arg(&bad).output().unwrap();
    assert_eq!(output.status.code().unwrap(), 1);
}

#[test]
fn taper_with_geometric_weights_tracks_its_limit() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config(ma1_model(), Mode::Taper);
    cfg.p_list = vec![200];
    cfg.replicates = 4;
    cfg.taper = Some(TaperSpec::new(TaperKind::Geometric { beta: 0.5 }, 8).unwrap());
    cfg.eta = 1.1;
    cfg.curve_points = 257;
    let config = write_config(dir.path(), &cfg);
    let out = dir.path().join("out");

    let output = run_sub("taper", &config, &out, &[]);
    assert_eq!(code(&output), 0, "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let summary = read_summary(&out);
    let cell = &summary.cells[0];
    assert_eq!(cell.eta, Some(1.1));
    assert!(cell.kernel_converged.unwrap());
    // An horizon-8 taper sums eight noisy lag terms, so convergence is
    // slower than the single-lag pipelines; p = 200 keeps the distance
    // comfortably inside a loose sampling bound.
    assert!(cell.ks_median.unwrap() <= 0.15, "median KS {}", cell.ks_median.unwrap());
}
