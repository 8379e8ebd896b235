mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use chrono::{Datelike, Duration, NaiveDate};
use common::*;
use crimefis::cli::{cmd_evaluate, cmd_export_grid, cmd_ingest, cmd_predict, cmd_train, write_rmse_logs};
use crimefis::config::{Config, EnsembleVariant};
use crimefis::dataset::write_processed;
use crimefis::model_io::{model_file_name, model_from_str, model_to_string, save_ensemble};
use crimefis::{train_hybrid, Consequent, ExpertEnsemble, GaussianMf, HolidayCalendar, ProcessedRecord, Rule, SugenoFis, TrainingConfig, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

const CALENDAR: &str = "# test calendar\n2013-09-24\n2013-12-25\n";

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        let ws = Workspace { dir: tempfile::tempdir().unwrap() };
        fs::write(ws.path("holidays.txt"), CALENDAR).unwrap();
        ws
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write_records(&self, name: &str, records: &[ProcessedRecord]) -> PathBuf {
        let mut out = Vec::new();
        write_processed(&mut out, records).unwrap();
        let p = self.path(name);
        fs::write(&p, out).unwrap();
        p
    }

    fn config(&self, data: &Path) -> Config {
        Config {
            data_path: Some(data.to_path_buf()),
            holiday_calendar_path: Some(self.path("holidays.txt")),
            model_dir: self.path("models"),
            ..Config::default()
        }
    }
}

fn calendar() -> HolidayCalendar {
    HolidayCalendar::parse(CALENDAR).unwrap()
}

fn three_point_records() -> Vec<ProcessedRecord> {
    [(23.777, 90.555), (23.666, 90.666), (23.888, 90.777)]
        .iter()
        .map(|&(la, lo)| ProcessedRecord::new("kidnapping", la, lo, 5, 3).unwrap())
        .collect()
}

fn cluster_data(seed: u64, n: usize) -> Vec<ProcessedRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, test) = separable_dataset(&mut rng, n - n / 5, n / 5);
    train.extend(test);
    train
}

#[test]
fn ingest_reproduces_processed_rows() {
    let ws = Workspace::new();
    let raw = ws.path("raw.csv");
    fs::write(&raw, "label,latitude,longitude,date\nKidnapping,23.754655,90.369399,2013-09-30\n").unwrap();
    let out = cmd_ingest(&raw, &calendar()).unwrap();
    assert_eq!(out, "label,latitude,longitude,day,holiday_diff\nkidnapping,23.754655,90.369399,30,6\n");

    fs::write(&raw, "label,latitude,longitude,date\n").unwrap();
    assert_eq!(cmd_ingest(&raw, &calendar()).unwrap(), "label,latitude,longitude,day,holiday_diff\n");
}

#[test]
fn ingest_ten_rows_against_script() {
    let ws = Workspace::new();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let holidays = [NaiveDate::from_ymd_opt(2013, 9, 24).unwrap(), NaiveDate::from_ymd_opt(2013, 12, 25).unwrap()];
    let mut text = String::from("label,latitude,longitude,date\n");
    let mut expected = Vec::new();
    for i in 0..10 {
        let date = NaiveDate::from_ymd_opt(2013, 6, 1).unwrap() + Duration::days(rng.random_range(0..300));
        let (lat, lon) = (rng.random_range(23.7..23.9), rng.random_range(90.3..90.5));
        let label = if i % 3 == 0 { "Murder" } else { "kidnapping " };
        text.push_str(&format!("{label},{lat},{lon},{}\n", date.format("%Y-%m-%d")));
        let diff = holidays.iter().map(|h| (*h - date).num_days().abs()).min().unwrap();
        expected.push(format!("{},{lat},{lon},{},{diff}", label.trim().to_lowercase(), date.day()));
    }
    let raw = ws.path("raw10.csv");
    fs::write(&raw, text).unwrap();
    let out = cmd_ingest(&raw, &calendar()).unwrap();
    let lines: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(lines, expected);
}

#[test]
fn fis_toy_model_has_table_vi_constants() {
    let ws = Workspace::new();
    let data = ws.write_records("t3.csv", &three_point_records());
    let config = Config { variant: EnsembleVariant::Fis, mf_counts: vec![2, 2, 1, 1], ..ws.config(&data) };
    cmd_train(&config).unwrap();
    let text = fs::read_to_string(ws.path("models").join(model_file_name("kidnapping", Variant::Fis))).unwrap();
    let model = model_from_str(&text).unwrap();
    let shown: Vec<i64> = model
        .rules()
        .iter()
        .map(|r| match r.consequent {
            Consequent::Constant(v) => v.round() as i64,
            _ => panic!("constant consequents expected"),
        })
        .collect();
    assert_eq!(shown, vec![67, 33, 33, 33]);
}

#[test]
fn untrained_anfis_outputs_zero() {
    let ws = Workspace::new();
    let data = ws.write_records("c.csv", &cluster_data(1, 60));
    let config = Config {
        variant: EnsembleVariant::Anfis,
        training: TrainingConfig { epochs: 0, ..Default::default() },
        ..ws.config(&data)
    };
    let outcome = cmd_train(&config).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (_, ensemble) in &outcome.ensembles {
        for (_, expert) in ensemble.experts() {
            for _ in 0..20 {
                let x = [rng.random_range(23.6..24.0), rng.random_range(90.3..90.6), 15.0, 7.0];
                assert_eq!(expert.evaluate(&x), 0.0);
            }
        }
    }
}

#[test]
fn training_is_repeatable_to_the_byte() {
    let ws = Workspace::new();
    let data = ws.write_records("c.csv", &cluster_data(3, 80));
    let config = Config {
        mf_counts: vec![2, 2, 2, 2],
        training: TrainingConfig { epochs: 15, ..Default::default() },
        ..ws.config(&data)
    };
    let snapshot = |dir: &Path| {
        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        files
    };
    cmd_train(&config).unwrap();
    let first = snapshot(&config.model_dir);
    cmd_train(&config).unwrap();
    assert_eq!(snapshot(&config.model_dir), first);
    assert!(first.len() >= 7, "{:?}", first.iter().map(|f| &f.0).collect::<Vec<_>>());

    // load a trained expert and run zero further epochs: same bytes
    let name = model_file_name("murder", Variant::Anfis);
    let text = fs::read_to_string(config.model_dir.join(&name)).unwrap();
    let loaded = model_from_str(&text).unwrap();
    let cfg0 = TrainingConfig { epochs: 0, ..Default::default() };
    let pts = vec![[23.8, 90.45, 10.0, 5.0]];
    let (again, _) = train_hybrid(&loaded, &pts, &[1.0], &cfg0).unwrap();
    assert_eq!(model_to_string(&again), text);
}

#[test]
fn predict_follows_the_hot_cell() {
    let ws = Workspace::new();
    let data = ws.write_records("c.csv", &cluster_data(4, 120));
    let config = Config { variant: EnsembleVariant::Fis, ..ws.config(&data) };
    cmd_train(&config).unwrap();
    let (lat_lo, lat_hi) = LAT_RANGE;
    let (lon_lo, lon_hi) = LON_RANGE;
    let sw = (lat_lo + 0.25 * (lat_hi - lat_lo), lon_lo + 0.25 * (lon_hi - lon_lo));
    let ne = (lat_hi - 0.25 * (lat_hi - lat_lo), lon_hi - 0.25 * (lon_hi - lon_lo));
    let p = cmd_predict(&config.model_dir, EnsembleVariant::Fis, sw.0, sw.1, "2013-05-10", &calendar()).unwrap();
    assert_eq!(p.label, "kidnapping");
    let p = cmd_predict(&config.model_dir, EnsembleVariant::Fis, ne.0, ne.1, "2013-05-10", &calendar()).unwrap();
    assert_eq!(p.label, "murder");
    assert!(cmd_predict(&config.model_dir, EnsembleVariant::Fis, 0.0, 0.0, "2013-02-30", &calendar()).is_err());
    assert!(cmd_predict(&ws.path("nowhere"), EnsembleVariant::Fis, 0.0, 0.0, "2013-02-03", &calendar()).is_err());
}

fn one_dim_expert(centers_and_values: &[(f64, f64)], dim: usize) -> SugenoFis {
    let mut banks: Vec<Vec<GaussianMf>> = vec![vec![GaussianMf::new(0.0, 1e3).unwrap()]; 4];
    banks[dim] = centers_and_values.iter().map(|&(c, _)| GaussianMf::new(c, 1.0).unwrap()).collect();
    let rules = centers_and_values
        .iter()
        .enumerate()
        .map(|(i, &(_, v))| {
            let mut antecedent = vec![0; 4];
            antecedent[dim] = i;
            Rule { antecedent, consequent: Consequent::Constant(v) }
        })
        .collect();
    SugenoFis::new(DIMS.iter().map(|s| s.to_string()).collect(), banks, rules, Variant::Fis).unwrap()
}

#[test]
fn predict_ties_and_holidays() {
    let ws = Workspace::new();
    let dir = ws.path("m");
    let same = one_dim_expert(&[(0.0, 40.0), (20.0, 70.0)], 3);
    let twins = ExpertEnsemble::new(vec![("first".into(), same.clone()), ("second".into(), same)]).unwrap();
    save_ensemble(&dir, "fis", &twins).unwrap();
    let p = cmd_predict(&dir, EnsembleVariant::Fis, 23.8, 90.4, "2013-07-01", &calendar()).unwrap();
    assert_eq!(p.label, "first");

    // "holiday" wins only when holiday_diff is 0, i.e. on a holiday
    let holiday = one_dim_expert(&[(0.0, 90.0), (10.0, 10.0)], 3);
    let flat = SugenoFis::new(
        holiday.dimension_names().to_vec(),
        vec![vec![GaussianMf::new(0.0, 1.0).unwrap()]; 4],
        vec![Rule { antecedent: vec![0; 4], consequent: Consequent::Constant(50.0) }],
        Variant::Fis,
    )
    .unwrap();
    let e = ExpertEnsemble::new(vec![("other".into(), flat), ("holiday".into(), holiday)]).unwrap();
    save_ensemble(&dir, "fis", &e).unwrap();
    let p = cmd_predict(&dir, EnsembleVariant::Fis, 23.8, 90.4, "2013-12-25", &calendar()).unwrap();
    assert_eq!(p.label, "holiday");
    let p = cmd_predict(&dir, EnsembleVariant::Fis, 23.8, 90.4, "2013-10-04", &calendar()).unwrap();
    assert_eq!(p.label, "other");
}

#[test]
fn evaluate_reports_three_tables() {
    let ws = Workspace::new();
    let data = ws.write_records("c184.csv", &cluster_data(5, 184));
    let config = Config {
        mf_counts: vec![2, 2, 2, 2],
        training: TrainingConfig { epochs: 10, ..Default::default() },
        ..ws.config(&data)
    };
    cmd_train(&config).unwrap();
    let report = cmd_evaluate(&config).unwrap();
    assert_eq!(report.tables.len(), 3);
    let total = |v| report.table(v).unwrap().total_predicted();
    for (_, t) in &report.tables {
        assert_eq!(t.total_actual(), 37);
    }
    assert_eq!(report.table(EnsembleVariant::Fis).unwrap().total_accuracy(), 100.0);
    assert!(total(EnsembleVariant::Hybrid) >= total(EnsembleVariant::Fis).max(total(EnsembleVariant::Anfis)));
    let text = report.render(false);
    assert!(text.contains("Total"));
    assert!(text.contains("hybrid was selected on these same test records"));
    assert!(report.render(true).contains("Label,Actual,Predicted,Accuracy"));
}

#[test]
fn export_grid_and_rmse_logs() {
    let ws = Workspace::new();
    let data = ws.write_records("t3.csv", &three_point_records());
    let config = Config { mf_counts: vec![2, 2, 1, 1], ..ws.config(&data) };
    let grid = cmd_export_grid(&config, Some("Kidnapping")).unwrap();
    let rows: Vec<&str> = grid.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    let counts: Vec<&str> = rows.iter().map(|r| r.split('\t').rev().nth(1).unwrap()).collect();
    assert_eq!(counts, vec!["2", "1", "1", "1"]);
    assert!(cmd_export_grid(&config, Some("arson")).is_err());

    let config = Config { variant: EnsembleVariant::Anfis, training: TrainingConfig { epochs: 3, ..Default::default() }, ..config };
    let outcome = cmd_train(&config).unwrap();
    let files = write_rmse_logs(&ws.path("rmse.csv"), &outcome.reports).unwrap();
    assert_eq!(files, vec![ws.path("rmse_kidnapping.csv")]);
    let log = fs::read_to_string(&files[0]).unwrap();
    assert!(log.starts_with("epoch,rmse\n"));
}

fn crimefis(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_crimefis")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn binary_commands_and_exit_codes() {
    let ws = Workspace::new();
    ws.write_records("c.csv", &cluster_data(6, 60));
    let models = ws.path("models");
    let cfg = ws.path("run.conf");
    fs::write(
        &cfg,
        "data_path = c.csv\nholiday_calendar_path = holidays.txt\nmodel_dir = models\nmf_counts = 2,2,2,2\nepochs = 5\n",
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();

    let (code, out, err) = crimefis(&["--config", cfg, "train", "--rmse-log", ws.path("log.csv").to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("hybrid:"), "{out}");
    assert!(models.join("ensemble.hybrid.txt").exists());
    assert!(ws.path("log_murder.csv").exists());

    let (code, out, _) = crimefis(&["--config", cfg, "--variant", "fis", "predict", "--lat", "23.86", "--lon", "90.5", "--date", "2013-12-25"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("prediction: murder"), "{out}");

    let (code, out, _) = crimefis(&["--config", cfg, "evaluate", "--csv"]);
    assert_eq!(code, 0);
    assert!(out.contains("== hybrid"));

    let (code, out, _) = crimefis(&["--config", cfg, "--mf-counts", "1,1,1,1", "export-grid", "--label", "murder"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().filter(|l| !l.starts_with('#')).count(), 2);

    let raw = ws.path("raw.csv");
    fs::write(&raw, "label,latitude,longitude,date\nmurder,23.8,90.4,2013-09-30\n").unwrap();
    let (code, out, _) = crimefis(&["--holiday_calendar_path", ws.path("holidays.txt").to_str().unwrap(), "ingest", "--input", raw.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().nth(1), Some("murder,23.8,90.4,30,6"));

    // usage / config errors
    assert_eq!(crimefis(&["--config", cfg, "frobnicate"]).0, 1);
    assert_eq!(crimefis(&["--config", cfg, "--epochs", "many", "train"]).0, 1);
    assert_eq!(crimefis(&["--config", cfg, "--variant", "fis", "predict", "--lat", "1", "--lon", "1", "--date", "30.09.13"]).0, 1);
    // data errors
    fs::write(&raw, "label,latitude,longitude,date\nmurder,north,90.4,2013-09-30\n").unwrap();
    let (code, _, err) = crimefis(&["--holiday_calendar_path", ws.path("holidays.txt").to_str().unwrap(), "ingest", "--input", raw.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("row 2"), "{err}");
    assert_eq!(crimefis(&["--config", cfg, "--model_dir", ws.path("empty").to_str().unwrap(), "predict", "--lat", "1", "--lon", "1", "--date", "2013-01-01"]).0, 2);
}
