use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use clap::Parser;
use fdout_cli::commands::{Cli, Command as Sub, MethodConfig};
use fdout_cli::io::{self, HeaderMode};
use fdout_cli::DetectionReport;
use fdout_core::depths::DepthMethod;
use fdout_core::detect::{self, MsplotConfig, SeqConfig, Stage, TvdmssConfig};
use fdout_core::muod::CutMethod;
use fdout_core::sample::{CurveSample, Grid, SampleData};
use fdout_core::simmodels::{simulation_model, ModelParams};

fn fdout(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_fdout")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn resolve(extra: &[&str]) -> fdout_cli::CliResult<fdout_cli::DetectConfig> {
    let mut argv = vec!["fdout", "detect", "--in", "x.csv", "--report", "r.json"];
    argv.extend_from_slice(extra);
    match Cli::try_parse_from(argv).unwrap().command {
        Sub::Detect(a) => a.resolve(),
        _ => unreachable!(),
    }
}

const CONSTANT_FIXTURE: &str = "0,0,0,0\n1,1,1,1\n2,2,2,2\n3,3,3,3\n10,10,10,10\n";

#[test]
fn cli_defaults_equal_library_defaults() {
    assert_eq!(
        resolve(&["--method", "msplot"]).unwrap().method,
        MethodConfig::Msplot(MsplotConfig::default())
    );
    assert_eq!(
        resolve(&["--method", "tvdmss"]).unwrap().method,
        MethodConfig::Tvdmss(TvdmssConfig::default())
    );
    assert_eq!(
        resolve(&["--method", "seq"]).unwrap().method,
        MethodConfig::Seq {
            sequence: vec![Stage::T0, Stage::T1, Stage::T2],
            config: SeqConfig::default(),
        }
    );
    assert_eq!(
        resolve(&["--method", "muod"]).unwrap().method,
        MethodConfig::Muod(CutMethod::default())
    );
    assert_eq!(
        resolve(&["--method", "fbplot"]).unwrap().method,
        MethodConfig::Fbplot {
            depth: SeqConfig::default().depth,
            central_region: detect::DEFAULT_CENTRAL_REGION,
            factor: detect::DEFAULT_FENCE_FACTOR,
        }
    );
    assert_eq!(resolve(&["--method", "msplot"]).unwrap().seed, 0);
}

#[test]
fn method_flags() {
    let cfg = resolve(&["--method", "fbplot", "--depth", "erld", "--erld-type", "one_sided_right"]).unwrap();
    assert!(matches!(
        cfg.method,
        MethodConfig::Fbplot { depth: DepthMethod::Erld(fdout_core::ErldType::OneSidedRight), .. }
    ));
    let cfg = resolve(&["--method", "seq", "--depth", "mbd", "--erld-type", "one_sided_right"]).unwrap();
    assert_eq!(cfg.warnings.len(), 1);
    for bad in [
        &["--method", "muod", "--level", "0.1"][..],
        &["--method", "msplot", "--depth", "mbd"],
        &["--method", "tvdmss", "--save-data"],
    ] {
        assert_eq!(resolve(bad).unwrap_err().exit_code(), 2);
    }
    assert_eq!(resolve(&["--method", "seq", "--sequence", "T0,T9"]).unwrap_err().kind(), "UnknownStage");
    assert_eq!(resolve(&["--method", "muod", "--cut-method", "knee"]).unwrap_err().exit_code(), 2);
}

#[test]
fn reads_header_grid_and_ids() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "a.csv", "0,0.25,0.5,0.75\n1,2,3,4\n5,6,7,8\n9,10,11,12\n");
    let SampleData::Univariate(c) = io::read_curves(&[p], HeaderMode::Auto).unwrap() else {
        panic!()
    };
    // A numeric first row is data unless forced.
    assert_eq!(c.n(), 4);
    let p = write(dir.path(), "b.csv", "0,0.25,0.5,0.75\n1,2,3,4\n5,6,7,8\n9,10,11,12\n");
    let c = io::read_wide(&p, HeaderMode::Present).unwrap();
    assert_eq!((c.n(), c.p()), (3, 4));
    assert_eq!(c.grid().points(), &[0.0, 0.25, 0.5, 0.75]);
    assert!(c.ids().is_none());

    let p = write(dir.path(), "c.csv", "id,0,0.5,1\na,1,2,3\nb,4,5,6\n");
    let c = io::read_wide(&p, HeaderMode::Auto).unwrap();
    assert_eq!(c.ids().unwrap(), &["a".to_string(), "b".to_string()]);
    assert_eq!(c.grid().points(), &[0.0, 0.5, 1.0]);

    let p = write(dir.path(), "d.csv", "x,y,z\n1,2,3\n4,5,6\n");
    let c = io::read_wide(&p, HeaderMode::Auto).unwrap();
    assert_eq!(c.grid().points(), &[0.0, 0.5, 1.0]);
}

#[test]
fn per_dimension_files() {
    let dir = tempfile::tempdir().unwrap();
    let row = |k: usize, p: usize| (0..p).map(|t| (k * t) as f64).map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    let body = |p: usize| (0..5).map(|k| row(k, p)).collect::<Vec<_>>().join("\n");
    let a = write(dir.path(), "a.csv", &body(10));
    let b = write(dir.path(), "b.csv", &body(10));
    let c = write(dir.path(), "c.csv", &body(9));
    let data = io::read_curves(&[a.clone(), b], HeaderMode::Auto).unwrap();
    assert_eq!((data.n(), data.p(), data.dims()), (5, 10, 2));
    let e = io::read_curves(&[a, c], HeaderMode::Auto).unwrap_err();
    assert_eq!(e.kind(), "ShapeMismatch");
}

#[test]
fn csv_round_trip_is_exact() {
    let sim = simulation_model(5, 20, 15, 0.1, true, 3, &ModelParams::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "d.csv", &io::curves_to_csv(&sim.data));
    let back = io::read_wide(&path, HeaderMode::Auto).unwrap();
    assert_eq!(back.values(), sim.data.values());
    assert_eq!(back.grid(), sim.data.grid());
    let truth = write(dir.path(), "t.csv", &io::truth_to_csv(&sim.true_outliers));
    assert_eq!(io::read_truth(&truth).unwrap(), sim.true_outliers);
}

#[test]
fn parse_errors_locate_the_cell() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "bad.csv", "1,2,3\n4,oops,6\n7,8,9\n");
    match io::read_wide(&p, HeaderMode::Absent).unwrap_err() {
        fdout_cli::CliError::Parse { line, column, .. } => assert_eq!((line, column), (2, 2)),
        e => panic!("{e:?}"),
    }
    let p = write(dir.path(), "ragged.csv", "1,2,3\n4,5\n");
    assert_eq!(io::read_wide(&p, HeaderMode::Auto).unwrap_err().kind(), "ParseError");
}

#[test]
fn malformed_csv_exits_2_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "bad.csv", "1,2,3\n4,5\n");
    let report = dir.path().join("r.json");
    let (code, _) = fdout(&["detect", "--method", "fbplot", "--in", s(&p), "--report", s(&report)]);
    assert_eq!(code, 2);
    let r = DetectionReport::from_json(&fs::read_to_string(&report).unwrap(), &report).unwrap();
    assert_eq!(r.error.unwrap().kind, "ParseError");
}

#[test]
fn fbplot_on_constant_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "c.csv", CONSTANT_FIXTURE);
    let report = dir.path().join("r.json");
    let svg = dir.path().join("c.svg");
    let (code, err) = fdout(&[
        "detect", "--method", "fbplot", "--in", s(&p), "--report", s(&report), "--plot", s(&svg),
    ]);
    assert_eq!(code, 0, "{err}");
    let r = DetectionReport::from_json(&fs::read_to_string(&report).unwrap(), &report).unwrap();
    assert_eq!(r.outliers["all"], vec![5]);
    assert_eq!((r.n, r.p, r.d), (5, 4, 1));
    assert_eq!(r.diagnostics["fence_upper"].as_vector(), vec![6.0; 4]);
    assert_eq!(r.diagnostics["fence_lower"].as_vector(), vec![-2.0; 4]);
    assert_eq!(r.diagnostics["envelope_lower"].as_vector(), vec![1.0; 4]);
    let text = fs::read_to_string(&svg).unwrap();
    assert_eq!(text.matches("<polyline").count(), 5);
}

#[test]
fn plot_subcommand_matches_detect_plot() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "c.csv", CONSTANT_FIXTURE);
    let report = dir.path().join("r.json");
    let a = dir.path().join("a.svg");
    let b = dir.path().join("b.svg");
    let (code, _) = fdout(&[
        "detect", "--method", "fbplot", "--in", s(&p), "--report", s(&report), "--plot", s(&a),
    ]);
    assert_eq!(code, 0);
    let (code, _) = fdout(&["plot", "--report", s(&report), "--in", s(&p), "--out", s(&b)]);
    assert_eq!(code, 0);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    // msplot kind needs MO/VO diagnostics an fbplot report does not carry.
    let (code, err) = fdout(&["plot", "--report", s(&report), "--in", s(&p), "--kind", "msplot", "--out", s(&b)]);
    assert_eq!(code, 2);
    assert!(err.contains("InconsistentReport"));
}

#[test]
fn simulate_writes_readable_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let (code, err) = fdout(&[
        "simulate", "--model", "5", "--n", "100", "--p", "50", "--rate", "0.1", "--seed", "7",
        "--deterministic", "--out", s(&out),
    ]);
    assert_eq!(code, 0, "{err}");
    let data = io::read_wide(&out.join("data.csv"), HeaderMode::Auto).unwrap();
    assert_eq!((data.n(), data.p()), (100, 50));
    assert_eq!(io::read_truth(&out.join("truth.csv")).unwrap().len(), 10);
    let sim = simulation_model(5, 100, 50, 0.1, true, 7, &ModelParams::default()).unwrap();
    assert_eq!(data.values(), sim.data.values());

    let zero = dir.path().join("zero");
    let (code, _) = fdout(&[
        "simulate", "--model", "1", "--n", "20", "--p", "10", "--rate", "0", "--out", s(&zero),
    ]);
    assert_eq!(code, 0);
    assert_eq!(fs::read_to_string(zero.join("truth.csv")).unwrap(), "outlier\n");

    let (code, err) = fdout(&[
        "simulate", "--model", "10", "--n", "20", "--p", "10", "--rate", "0.1", "--out", s(&zero),
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("BadModel"));
}

#[test]
fn depth_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "c.csv", "0,0,0\n1,1,1\n2,2,2\n");
    let out = dir.path().join("d.csv");
    let (code, _) = fdout(&["depth", "--method", "mbd", "--in", s(&p), "--out", s(&out)]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "curve,mbd");
    let values: Vec<f64> = lines[1..].iter().map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    let want = [2.0 / 3.0, 1.0, 2.0 / 3.0];
    for (v, w) in values.iter().zip(want) {
        assert!((v - w).abs() < 1e-15);
    }
    let (code, _) = fdout(&["depth", "--method", "nope", "--in", s(&p), "--out", s(&out)]);
    assert_eq!(code, 2);
}

#[test]
fn numeric_failures_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "flat.csv", &"5,5,5,5,5\n".repeat(12));
    let report = dir.path().join("r.json");
    let (code, err) = fdout(&["detect", "--method", "muod", "--in", s(&p), "--report", s(&report)]);
    assert_eq!(code, 3, "{err}");
    let r = DetectionReport::from_json(&fs::read_to_string(&report).unwrap(), &report).unwrap();
    assert_eq!(r.error.unwrap().kind, "AllDegenerate");
}

#[test]
fn unknown_flags_exit_2() {
    let (code, _) = fdout(&["detect", "--method", "msplot", "--bogus"]);
    assert_eq!(code, 2);
    let (code, _) = fdout(&["--help"]);
    assert_eq!(code, 0);
}

#[test]
fn in_memory_detect_matches_cli() {
    let dir = tempfile::tempdir().unwrap();
    let sim = simulation_model(1, 40, 20, 0.1, true, 11, &ModelParams::default()).unwrap();
    let p = write(dir.path(), "d.csv", &io::curves_to_csv(&sim.data));
    for method in ["msplot", "tvdmss", "seq", "muod", "fbplot"] {
        let report = dir.path().join(format!("{method}.json"));
        let (code, err) = fdout(&[
            "detect", "--method", method, "--in", s(&p), "--report", s(&report), "--seed", "5",
        ]);
        assert_eq!(code, 0, "{method}: {err}");
        let from_cli = DetectionReport::from_json(&fs::read_to_string(&report).unwrap(), &report).unwrap();
        let cfg = resolve(&["--method", method, "--seed", "5"]).unwrap();
        let data = SampleData::Univariate(sim.data.clone());
        let in_memory = fdout_cli::detect(&data, &cfg).unwrap();
        assert_eq!(from_cli.outliers, in_memory.outliers, "{method}");
        assert_eq!(from_cli.diagnostics, in_memory.diagnostics, "{method}");
    }
}

#[test]
fn seq_report_lists_stages() {
    let grid = Grid::uniform(5, 0.0, 1.0).unwrap();
    let rows: Vec<Vec<f64>> = (0..12)
        .map(|i| (0..5).map(|t| if i == 3 { (t * t) as f64 } else { (i + t) as f64 * 0.1 }).collect())
        .collect();
    let sample = CurveSample::from_rows(&rows, grid).unwrap();
    let cfg = resolve(&["--method", "seq", "--sequence", "T0,T1,T1", "--save-data"]).unwrap();
    let r = fdout_cli::detect(&SampleData::Univariate(sample), &cfg).unwrap();
    let labels: Vec<&str> = r.stages.iter().map(|s| s.label.as_str()).collect();
    assert_eq!(labels, ["T0", "T1_1", "T1_2"]);
    assert!(r.stages.iter().all(|s| s.data.as_ref().is_some_and(|d| d.len() == 12)));
    assert!(r.outliers.contains_key("T1_2") && r.outliers.contains_key("all"));
    assert!(!r.warnings.is_empty());
}
