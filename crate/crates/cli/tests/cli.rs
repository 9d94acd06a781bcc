use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ensemble_forecast::backtest::{read_cells_csv, read_mape_by_lead_csv, read_rank_csv, mape_by_lead, BacktestReport, RankCounts};
use ensemble_forecast::dataset::read_feeds;
use ensemble_forecast::ensemble::read_curve_csv;
use ensemble_forecast::importance::{read_importance_csv, ImportanceReport};
use ensemble_forecast::FeatureTable;
use serde::Deserialize;

const SMALL: &str = r#"{
  "version": 1,
  "seed": 7,
  "synth": {"n_years": 5},
  "features": {"leads": [1, 5]},
  "train": {"kind": "MLR", "search": {"subsets": {"k_max": 3, "cap": 60}, "max_members": 10}},
  "backtest": {"config": {"methods": ["MLR", "GBT"], "leads": [1, 5], "test_span": [157, 159],
     "search": {"subsets": {"k_max": 2, "cap": 20}, "max_members": 5},
     "hyperparams": {"GBT": {"n_trees": 50, "learning_rate": 0.1}}}},
  "importance": {"iterations": 10}
}"#;

fn efc(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_efc"));
    cmd.args(args);
    for v in ["EFC_CONFIG", "EFC_SEED", "EFC_WORKERS", "EFC_OUT"] {
        cmd.env_remove(v);
    }
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = efc(args, &[]);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synth_twice_gives_identical_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["--config", s(&cfg), "--out", s(&a), "synth"]);
    ok(&["--config", s(&cfg), "--out", s(&b), "synth"]);
    let ma = std::fs::read(a.join("data/manifest.json")).unwrap();
    assert_eq!(ma, std::fs::read(b.join("data/manifest.json")).unwrap());
    let text = String::from_utf8(ma).unwrap();
    assert!(text.contains("\"seed\": 7") && text.contains("data/sales.csv"));
}

#[test]
fn env_seed_matches_flag_and_differs_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    ok(&["--config", s(&cfg), "--out", s(&a), "--seed", "9", "synth"]);
    let out = efc(&["synth"], &[("EFC_CONFIG", s(&cfg)), ("EFC_OUT", s(&b)), ("EFC_SEED", "9")]);
    assert!(out.status.success());
    ok(&["--config", s(&cfg), "--out", s(&c), "synth"]);
    let read = |d: &Path| std::fs::read(d.join("data/sales.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
}

#[test]
fn missing_input_exits_2_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = efc(&["--out", s(dir.path()), "features"], &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("calendar.csv"), "{err}");
}

#[test]
fn bad_configs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for (text, needle) in [
        (r#"{"version": 1, "bogus": 2}"#, "bogus"),
        (r#"{"seed": 1}"#, "version"),
        (r#"{"version": 2}"#, "version"),
        (r#"{"version": 1, "train": {"search": {"cap": 3}}}"#, "cap"),
        (r#"{"version": 1, "workers": 0}"#, "workers"),
    ] {
        let cfg = write_config(dir.path(), text);
        let out = efc(&["--config", s(&cfg), "--out", s(dir.path()), "synth"], &[]);
        assert_eq!(out.status.code(), Some(2), "{text}");
        assert!(String::from_utf8_lossy(&out.stderr).contains(needle), "{text}");
    }
    let out = efc(&["--workers", "0", "--out", s(dir.path()), "synth"], &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_module_config_names_module_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"version": 1, "synth": {"noise_sigma": -1.0}}"#);
    let out = efc(&["--config", s(&cfg), "--out", s(dir.path()), "synth"], &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("datagen") && err.contains("noise_sigma"), "{err}");
}

#[test]
fn short_history_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    ok(&["--config", s(&cfg), "--out", s(dir.path()), "synth"]);
    ok(&["--config", s(&cfg), "--out", s(dir.path()), "features"]);
    let short = SMALL.replace(r#""kind": "MLR""#, r#""kind": "MLR", "test_week": 20"#);
    let cfg = write_config(dir.path(), &short);
    let out = efc(&["--config", s(&cfg), "--out", s(dir.path()), "decollinear"], &[]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn report_without_backtest_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = efc(&["--out", s(dir.path()), "report"], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("DT_report.json"));
}

#[derive(Deserialize)]
struct Bundle {
    report: BacktestReport,
    ranks: RankCounts,
}

fn table(path: &Path) -> FeatureTable {
    let sidecar = std::fs::read_to_string(path.with_extension("json")).unwrap();
    FeatureTable::read_csv(File::open(path).unwrap(), &sidecar).unwrap()
}

#[test]
fn pipeline_outputs_round_trip_through_readers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    for c in ["synth", "features", "decollinear", "train", "backtest", "importance", "report"] {
        ok(&["--config", s(&cfg), "--out", s(&out), c]);
        assert!(out.join(if c == "synth" { "data" } else { c }).join("manifest.json").exists(), "{c}");
    }

    let feeds = read_feeds(&out.join("data"), None).unwrap();
    assert_eq!(feeds.lobs(), ["DT", "MB", "SVR"]);

    let t = table(&out.join("features/DT_lead1.csv"));
    assert_eq!(t.lead_time(), 1);
    let reduced = table(&out.join("decollinear/reduced.csv"));
    assert!(reduced.column_names().len() < t.column_names().len());

    let curve = read_curve_csv(File::open(out.join("train/curve.csv")).unwrap()).unwrap();
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("train/summary.json")).unwrap()).unwrap();
    let mapes: Vec<f64> = summary["curve"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(curve.iter().map(|r| r.mape).collect::<Vec<_>>(), mapes);
    assert!(curve.windows(2).all(|w| w[0].mape <= w[1].mape));

    let bundle: Bundle =
        serde_json::from_str(&std::fs::read_to_string(out.join("backtest/DT_report.json")).unwrap()).unwrap();
    let cells = read_cells_csv(File::open(out.join("backtest/DT_cells.csv")).unwrap()).unwrap();
    assert_eq!(cells.len(), bundle.report.cells.len());
    assert_eq!(cells.len(), 2 * 2 * 3);
    for (a, b) in cells.iter().zip(&bundle.report.cells) {
        assert_eq!((a.method, a.test_week, a.lead_time), (b.method, b.test_week, b.lead_time));
        assert_eq!((a.actual, a.prediction, a.mape, a.m), (b.actual, b.prediction, b.mape, b.m));
    }
    let ranks = read_rank_csv(File::open(out.join("backtest/DT_ranks.csv")).unwrap()).unwrap();
    assert_eq!((&ranks.methods, &ranks.all, &ranks.short, &ranks.long), (&bundle.ranks.methods, &bundle.ranks.all, &bundle.ranks.short, &bundle.ranks.long));
    let curves = read_mape_by_lead_csv(File::open(out.join("backtest/DT_mape_by_lead.csv")).unwrap()).unwrap();
    assert_eq!(curves, mape_by_lead(&bundle.report));

    let rows = read_importance_csv(File::open(out.join("importance/importance.csv")).unwrap()).unwrap();
    let rep: ImportanceReport =
        serde_json::from_str(&std::fs::read_to_string(out.join("importance/report.json")).unwrap()).unwrap();
    assert_eq!(rows.len(), rep.variables.len());
    for (r, v) in rows.iter().zip(&rep.variables) {
        assert_eq!((&r.variable, r.mean_delta, r.std), (&v.variable, v.mean_delta, v.std));
    }

    let table1 = read_rank_csv(File::open(out.join("report/table1_DT.csv")).unwrap()).unwrap();
    let ranked = bundle.ranks.ranked_cells;
    assert!(table1.all.iter().all(|row| row.iter().sum::<u32>() == ranked));
    assert_eq!(ranked + bundle.ranks.flagged_cells, 6);
    for f in ["fig3_before.svg", "fig3_after.svg", "fig4.svg", "fig6_DT.svg", "fig7.svg", "summary.md"] {
        assert!(out.join("report").join(f).exists(), "{f}");
    }
}
