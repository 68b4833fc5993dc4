use cauchy_bench::report::{summary_csv, ERRORS_HEADER, SUMMARY_HEADER};
use cauchy_bench::{emit_plots, run_pipeline, run_stages, sweep, BenchError, ExperimentConfig, RunReport, Stages};
use sha2::{Digest, Sha256};

fn small(eps: Vec<f64>) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.domain.resolution = vec![256];
    cfg.domain.modes = 32;
    cfg.noise.eps = eps;
    cfg
}

#[test]
fn zero_noise_linear_run_recovers_the_law() {
    let report = run_pipeline(&small(vec![0.0])).unwrap().report;
    let p = &report.points[0];
    let id = p.identification.as_ref().unwrap();
    // oracle: f(u) = 0.2 u, bound 5 · width · L
    let bound = 5.0 * id.bin_width * 0.2;
    assert!(id.sup_error.unwrap() <= bound, "{:?} vs {bound}", id.sup_error);
    assert!(p.trace_error < 1e-12 && p.flux_error < 1e-12);
    assert_eq!(p.eps_regularization, 1e-12);
    for row in &id.table {
        assert!((row.truth - 0.2 * row.center).abs() < 1e-15);
    }
}

#[test]
fn noisy_sweep_has_monotone_error_columns() {
    let report = run_pipeline(&small(vec![1e-1, 1e-2, 1e-3, 1e-4])).unwrap().report;
    let trace: Vec<f64> = report.points.iter().map(|p| p.trace_error).collect();
    let flux: Vec<f64> = report.points.iter().map(|p| p.flux_error).collect();
    let f: Vec<f64> = report.points.iter().map(|p| p.identification.as_ref().unwrap().sup_error.unwrap()).collect();
    for col in [&trace, &flux, &f] {
        assert!(col.windows(2).all(|w| w[1] <= 1.5 * w[0]), "{col:?}");
        assert!(col.iter().all(|&e| e >= 0.0));
    }
    for p in &report.points {
        assert_eq!(p.gamma, 0.5);
        assert_eq!(p.policy, "mu-squared");
        assert!((p.alpha - p.eps).abs() < 1e-18);
    }
}

#[test]
fn cauchy_stage_skips_identification() {
    let out = run_stages(&small(vec![1e-3]), Stages::Cauchy).unwrap();
    assert!(out.report.points[0].identification.is_none());
    assert_eq!(out.report.errors_csv().lines().nth(1).unwrap().split(',').count(), 7);
}

#[test]
fn four_point_sweep_emits_four_reports_and_a_summary() {
    let out = sweep(&small(vec![0.0]), &[1e-1, 1e-2, 1e-3, 1e-4]).unwrap();
    assert_eq!(out.reports.len(), 4);
    let lines: Vec<&str> = out.summary.lines().collect();
    assert_eq!(lines[0], SUMMARY_HEADER);
    assert_eq!(lines.len(), 5);
    let ratio_cols = [4, 6, 8];
    for line in &lines[2..] {
        let cells: Vec<&str> = line.split(',').collect();
        for &c in &ratio_cols {
            let r: f64 = cells[c].parse().unwrap();
            assert!(r.is_finite() && r > 0.0, "{line}");
        }
    }
    for (r, eps) in out.reports.iter().zip([1e-1, 1e-2, 1e-3, 1e-4]) {
        assert_eq!(r.config.noise.eps, vec![eps]);
        assert_eq!(r.points.len(), 1);
    }
    assert_eq!(summary_csv(&out.reports), out.summary);
}

#[test]
fn sweep_points_match_single_runs() {
    // seeds depend on the level only, so a sweep point equals a lone run
    let cfg = small(vec![1e-3]);
    let lone = run_pipeline(&cfg).unwrap().report;
    let swept = sweep(&cfg, &[1e-2, 1e-3]).unwrap();
    assert_eq!(swept.reports[1].points[0], lone.points[0]);
}

#[test]
fn report_reloads_bit_identically() {
    let report = run_pipeline(&small(vec![1e-2, 1e-4])).unwrap().report;
    let json = report.to_json();
    let back = RunReport::from_json(&json).unwrap();
    assert_eq!(back, report);
    assert_eq!(back.to_json(), json);
}

#[test]
fn written_tables_have_named_headers() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_pipeline(&small(vec![1e-3])).unwrap().report;
    let files = report.write(dir.path()).unwrap();
    let names: Vec<String> = files.iter().map(|f| f.file_name().unwrap().to_string_lossy().into_owned()).collect();
    assert_eq!(names, ["report.json", "errors.csv", "table_0.csv"]);
    let errors = std::fs::read_to_string(dir.path().join("errors.csv")).unwrap();
    assert_eq!(errors.lines().next().unwrap(), ERRORS_HEADER);
    assert_eq!(errors.lines().count(), 2);
}

#[test]
fn empty_report_gives_no_plots() {
    let mut report = run_pipeline(&small(vec![1e-3])).unwrap().report;
    report.points.clear();
    let dir = tempfile::tempdir().unwrap();
    assert!(emit_plots(&report, dir.path()).unwrap().is_empty());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn linear_run_writes_a_two_curve_overlay() {
    let report = run_pipeline(&small(vec![0.0])).unwrap().report;
    let dir = tempfile::tempdir().unwrap();
    let files = emit_plots(&report, dir.path()).unwrap();
    let overlay = dir.path().join("f_overlay.dat");
    assert!(files.contains(&overlay));
    let text = std::fs::read_to_string(&overlay).unwrap();
    let row: Vec<f64> = text.lines().find(|l| !l.starts_with('#')).unwrap().split(' ').map(|v| v.parse().unwrap()).collect();
    assert_eq!(row.len(), 4);
    assert!((row[1] - row[2]).abs() < 1e-3);
    let script = std::fs::read_to_string(dir.path().join("plots.gp")).unwrap();
    assert!(script.contains("f_overlay.dat") && script.contains("errors.dat") && script.contains("gamma1_traces.dat"));
}

fn hash_dir(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), Sha256::digest(std::fs::read(&p).unwrap()).to_vec()))
        .collect();
    out.sort();
    out
}

#[test]
fn plot_bytes_are_stable() {
    let report = run_pipeline(&small(vec![1e-2, 1e-3])).unwrap().report;
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    emit_plots(&report, a.path()).unwrap();
    let reloaded = RunReport::from_json(&report.to_json()).unwrap();
    emit_plots(&reloaded, b.path()).unwrap();
    assert_eq!(hash_dir(a.path()), hash_dir(b.path()));
}

#[test]
fn seeded_reruns_are_byte_identical_and_seeds_matter() {
    let cfg = small(vec![1e-2, 1e-3]);
    let a = run_pipeline(&cfg).unwrap().report.to_json();
    let b = run_pipeline(&cfg).unwrap().report.to_json();
    assert_eq!(Sha256::digest(&a), Sha256::digest(&b));
    let mut other = cfg.clone();
    other.noise.seed += 1;
    assert_ne!(run_pipeline(&other).unwrap().report.to_json(), a);
}

fn general_trace_error(n: usize) -> (f64, f64) {
    let mut cfg = small(vec![0.0]);
    cfg.domain.resolution = vec![n];
    cfg.domain.modes = 16;
    cfg.general.enabled = true;
    cfg.general.axial_cells = n;
    cfg.general.gamma_modes = 8;
    cfg.general.sigma_modes = 8;
    // discretization error acts as noise of order 1e-4, so regularize at that level
    cfg.noise.zero_floor = 1e-6;
    let report = run_pipeline(&cfg).unwrap().report;
    assert_eq!(report.method, "general");
    let p = &report.points[0];
    assert!(p.identification.as_ref().unwrap().sup_error.is_some());
    let exact = &report.direct.u_gamma1;
    let scale = exact.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let worst = p.u_gamma1.iter().zip(exact).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
    (worst, scale)
}

#[test]
fn general_path_converges_to_exact_data() {
    // the top trace is a near-cancellation of the two data terms, which
    // magnifies the relative discretization error; check its order
    let (e64, _) = general_trace_error(64);
    let (e128, scale) = general_trace_error(128);
    assert!(e64 / e128 > 3.5, "{e64} {e128}");
    assert!(e128 < 2e-2 * scale, "{e128} vs {scale}");
}

#[test]
fn general_pipeline_rejects_a_conductivity_file() {
    let mut cfg = small(vec![0.0]);
    cfg.general.enabled = true;
    cfg.general.conductivity = Some("sigma.txt".into());
    match run_pipeline(&cfg) {
        Err(BenchError::Field { field, .. }) => assert_eq!(field, "general.conductivity"),
        other => panic!("unexpected {:?}", other.err()),
    }
}

#[test]
fn numerical_failures_are_stage_tagged() {
    let mut cfg = small(vec![0.0]);
    cfg.law.a = -5.0;
    cfg.direct.max_iter = 3;
    let err = run_pipeline(&cfg).err().unwrap();
    assert_eq!(err.exit_code(), 3);
    assert!(err.to_string().starts_with("direct solve stage:"), "{err}");
}
