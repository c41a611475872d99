use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ota_cli::{Overrides, INVALID_MARKER};
use ota_core::bounds;
use ota_core::montecarlo::{estimate_risk, point_seed};
use ota_core::schemes;

const BIN: &str = env!("CARGO_BIN_EXE_ota-sim");

const SMALL: &str = r#"
[model]
kind = "gaussian"
d = [1, 3]
sample_var = 10.0
radius_b = 4.0

[channel]
power_p = 0.1
noise_var = 1.0
n = [10, 200]

[run]
trials = 50
seed = 99
"#;

fn figure(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("../../configs/{name}.toml"))
}

fn sim(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

struct CsvRow {
    fields: Vec<String>,
}

impl CsvRow {
    fn get(&self, i: usize) -> &str {
        &self.fields[i]
    }

    fn num(&self, i: usize) -> f64 {
        self.fields[i].parse().unwrap()
    }
}

fn read_csv(path: &Path) -> Vec<CsvRow> {
    let text = std::fs::read_to_string(path).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(ota_cli::output::CSV_HEADER));
    lines
        .map(|l| CsvRow {
            fields: l.split(',').map(str::to_string).collect(),
        })
        .collect()
}

#[test]
fn csv_rows_match_library_calls() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_config(dir.path(), "small.toml", SMALL);
    let out = sim(&["run", cfg_path.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let cfg = ota_cli::load_config(&cfg_path, &Overrides::default()).unwrap();
    let rows = read_csv(&dir.path().join("small.csv"));
    assert_eq!(rows.len(), 2 * 2 * 4);
    for row in &rows {
        assert_eq!(row.get(0), "gaussian");
        let d: usize = row.get(1).parse().unwrap();
        let n: usize = row.get(2).parse().unwrap();
        assert_eq!(row.get(3), d.to_string());
        let model = cfg.family.model_at(d).unwrap();
        let chan = cfg.family.channel_at(d, n).unwrap();
        let value = row.num(7);
        match row.get(6) {
            "analog_sim" => {
                let plan = cfg.plan().with_seed(point_seed(cfg.seed, d, n));
                let r = estimate_risk(&cfg.family.build(d, n).unwrap(), &plan).unwrap();
                assert_eq!(value, r.mean_sq_error);
                assert_eq!(row.num(8), r.std_error);
            }
            "analog_formula" => {
                assert_eq!(value, schemes::minimax_risk(&model, &chan, cfg.family.regime).unwrap());
                assert_eq!(row.get(8), "");
            }
            "analog_lb" => {
                assert_eq!(value, bounds::analog_lb(&model, &chan, cfg.epsilon_mode).unwrap().value);
            }
            "digital_lb" => {
                let b = bounds::digital_lb(&model, &chan, cfg.epsilon_mode).unwrap();
                assert_eq!(value, b.value);
                assert_eq!(row.get(9), b.valid.to_string());
            }
            other => panic!("unexpected series {other}"),
        }
    }

    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("small.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 99);
    assert_eq!(meta["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(meta["config"]["trials"], 50);
    assert!(meta["wall_time_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn seed_and_trials_flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_config(dir.path(), "small.toml", SMALL);
    let run = |seed: &str, sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = sim(&[
            "run",
            cfg_path.to_str().unwrap(),
            "--seed",
            seed,
            "--trials",
            "20",
            "--out-dir",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        std::fs::read_to_string(out_dir.join("small.csv")).unwrap()
    };
    let a = run("1", "a");
    let b = run("1", "b");
    let c = run("2", "c");
    assert_eq!(a, b);
    assert_ne!(a, c);
    let meta = std::fs::read_to_string(dir.path().join("a/small.meta.json")).unwrap();
    assert!(meta.contains("\"trials\": 20"));
}

#[test]
fn json_format_writes_rows_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_config(dir.path(), "small.toml", SMALL);
    let out = sim(&[
        "run",
        cfg_path.to_str().unwrap(),
        "--format",
        "json",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let rows: Vec<serde_json::Value> =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("small.json")).unwrap()).unwrap();
    assert_eq!(rows.len(), 16);
    assert_eq!(rows[0]["series"], "analog_sim");
    assert!(rows[1]["std_error"].is_null());
    assert!(dir.path().join("small.meta.json").exists());
}

#[test]
fn invalid_configs_exit_with_2_and_a_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let empty_n = write_config(dir.path(), "empty.toml", &SMALL.replace("n = [10, 200]", "n = []"));
    for verb in ["run", "compare", "validate"] {
        let out = sim(&[verb, empty_n.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{verb}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains("empty.toml:11: n list is empty"), "{err}");
    }
    let bad_type = write_config(dir.path(), "bad.toml", &SMALL.replace("power_p = 0.1", "power_p = \"high\""));
    let out = sim(&["validate", bad_type.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.toml:9:"));

    let out = sim(&["validate", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = sim(&["run", empty_n.to_str().unwrap(), "--trials", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numeric_failures_exit_with_3() {
    // a noiseless channel simulates fine but has no finite capacity for the bounds
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_config(dir.path(), "noiseless.toml", &SMALL.replace("noise_var = 1.0", "noise_var = 0.0"));
    let out = sim(&["validate", cfg_path.to_str().unwrap()]);
    assert!(out.status.success());
    let out = sim(&["run", cfg_path.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let out = sim(&["compare", cfg_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn fig5_analog_beats_digital_at_large_n() {
    let dir = tempfile::tempdir().unwrap();
    let out = sim(&[
        "run",
        figure("fig5").to_str().unwrap(),
        "--trials",
        "10",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_csv(&dir.path().join("fig5.csv"));
    assert_eq!(rows.len(), 3 * 6 * 4);
    let series = ["analog_sim", "analog_formula", "analog_lb", "digital_lb"];
    for chunk in rows.chunks(4) {
        for (row, name) in chunk.iter().zip(series) {
            assert_eq!(row.get(6), name);
            assert_eq!(row.get(0), "bernoulli");
            assert_eq!(row.get(4), "1000");
        }
        let n: usize = chunk[0].get(2).parse().unwrap();
        let digital = &chunk[3];
        if n >= 10_000 {
            assert_eq!(digital.get(9), "true");
            assert!(chunk[1].num(7) < digital.num(7));
            assert!(chunk[0].num(7) < digital.num(7));
        }
    }
}

#[test]
fn compare_marks_invalid_rows_and_log_gaps() {
    let out = sim(&["compare", figure("fig3").to_str().unwrap()]);
    assert!(out.status.success());
    let table = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert!(lines[0].contains("analog_lb") && lines[0].contains("digital_lb"));
    let n10: Vec<&&str> = lines.iter().filter(|l| l.split_whitespace().nth(1) == Some("10")).collect();
    assert_eq!(n10.len(), 3);
    assert!(n10.iter().all(|l| l.contains(INVALID_MARKER)));
    assert!(!table.contains(" log-gap"));

    let dir = tempfile::tempdir().unwrap();
    let wide = SMALL.replace("sample_var = 10.0", "sample_var = 0.01").replace("radius_b = 4.0", "radius_b = 1.0");
    let cfg_path = write_config(dir.path(), "wide.toml", &wide);
    let out = sim(&["compare", cfg_path.to_str().unwrap()]);
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.lines().skip(1).take(4).all(|l| l.contains("  log-gap")), "{table}");
}

#[test]
fn validate_reports_the_grid() {
    let out = sim(&["validate", figure("fig2").to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("ok: gaussian model"));
    assert!(text.contains("18 grid points"));
}

#[test]
fn bounds_only_allows_fewer_uses_than_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let body = SMALL
        .replace("n = [10, 200]", "n = [10, 200]\ns_rule = \"explicit\"\ns = 2")
        .replace("seed = 99", "seed = 99\nbounds_only = true");
    let cfg_path = write_config(dir.path(), "bounds.toml", &body);
    let out = sim(&["run", cfg_path.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_csv(&dir.path().join("bounds.csv"));
    // d = 1 keeps its formula row; d = 3 > s = 2 has bounds only
    assert_eq!(rows.len(), 2 * 3 + 2 * 2);
    assert!(rows.iter().all(|r| r.get(6) != "analog_sim"));
    assert!(rows.iter().filter(|r| r.get(1) == "3").all(|r| r.get(6) != "analog_formula"));
}
