use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn config(name: &str) -> Value {
    let text = fs::read_to_string(configs().join(name)).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn write_config(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn hamepi(command: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hamepi"))
        .arg(command)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .env_remove("HAMEPI_LOG")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Csv {
    fn read(path: &Path) -> Csv {
        let mut r = csv::Reader::from_path(path).unwrap();
        let header = r.headers().unwrap().iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| rec.unwrap().iter().map(|x| x.parse().unwrap()).collect())
            .collect();
        Csv { header, rows }
    }

    fn column(&self, name: &str) -> Vec<f64> {
        let k = self.header.iter().position(|h| h == name).unwrap();
        self.rows.iter().map(|r| r[k]).collect()
    }
}

fn json_file(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn interior_maxima(x: &[f64]) -> usize {
    x.windows(3).filter(|w| w[1] > w[0] && w[1] >= w[2]).count()
}

#[test]
fn simulate_sir_has_one_interior_peak() {
    let dir = TempDir::new().unwrap();
    let o = hamepi("simulate", &configs().join("sir.json"), dir.path(), &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = Csv::read(&dir.path().join("trajectory.csv"));
    assert_eq!(csv.header, ["t", "S", "I", "R", "H", "C"]);
    assert_eq!(csv.rows.len(), 10001);
    let i = csv.column("I");
    assert_eq!(interior_maxima(&i), 1);
    assert!(*i.last().unwrap() < 1e-3);

    let diag = json_file(&dir.path().join("diagnostics.json"));
    assert!(diag["h_drift"].as_f64().unwrap() <= 1e-9);
    assert!(diag["domain_exit"].is_null());
    // the reported drift is the largest deviation of the H column
    let h = csv.column("H");
    let drift = h.iter().map(|x| (x - h[0]).abs()).fold(0.0, f64::max);
    assert_eq!(diag["h_drift"].as_f64().unwrap(), drift);
}

#[test]
fn simulate_vital_dynamics_stays_endemic() {
    let dir = TempDir::new().unwrap();
    let o = hamepi("simulate", &configs().join("vital.json"), dir.path(), &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = Csv::read(&dir.path().join("trajectory.csv"));
    assert_eq!(csv.header, ["t", "S", "I", "R", "H"]);
    assert_eq!(*csv.column("t").last().unwrap(), 200.0);
    assert!(*csv.column("I").last().unwrap() > 0.01);
}

#[test]
fn custom_model_matches_builtin_run() {
    let dir = TempDir::new().unwrap();
    let custom = config("sir_custom.json");
    let mut builtin = custom.clone();
    builtin["model"] = json!("sir");
    builtin["params"] = json!({"alpha": 0.1, "beta": 1.0});
    let b = write_config(dir.path(), "builtin.json", &builtin);
    let o1 = hamepi("simulate", &configs().join("sir_custom.json"), &dir.path().join("a"), &[]);
    let o2 = hamepi("simulate", &b, &dir.path().join("b"), &[]);
    assert_eq!((code(&o1), code(&o2)), (0, 0));
    let a = Csv::read(&dir.path().join("a/trajectory.csv"));
    let b = Csv::read(&dir.path().join("b/trajectory.csv"));
    assert_eq!(a.column("t").len(), 201);
    for name in ["S", "I", "R"] {
        assert_eq!(a.column(name), b.column(name));
    }
}

#[test]
fn negative_step_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let mut cfg = config("sir.json");
    cfg["dt"] = json!(-1.0);
    let path = write_config(dir.path(), "bad.json", &cfg);
    let o = hamepi("simulate", &path, &dir.path().join("out"), &[]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("dt"), "{}", stderr(&o));
    assert!(!dir.path().join("out/trajectory.csv").exists());
}

#[test]
fn config_errors_name_the_field() {
    let dir = TempDir::new().unwrap();
    let mut cfg = config("sir_custom.json");
    cfg["model"]["flows"][1]["rate"] = json!("alpha*");
    let path = write_config(dir.path(), "bad.json", &cfg);
    let o = hamepi("simulate", &path, dir.path(), &[]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("model.flows[1].rate"), "{}", stderr(&o));

    let mut cfg = config("sir.json");
    cfg["initial"] = json!([0.99, 0.01]);
    let path = write_config(dir.path(), "short.json", &cfg);
    let o = hamepi("simulate", &path, dir.path(), &[]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("initial"), "{}", stderr(&o));

    let o = hamepi("simulate", &dir.path().join("missing.json"), dir.path(), &[]);
    assert_eq!(code(&o), 2);
}

#[test]
fn leaving_the_orthant_is_a_runtime_error() {
    let dir = TempDir::new().unwrap();
    let mut cfg = config("three_populations.json");
    cfg["nonneg_guard"] = json!(true);
    let path = write_config(dir.path(), "guarded.json", &cfg);
    let o = hamepi("couple", &path, dir.path(), &[]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let summary = json_file(&dir.path().join("couple.json"));
    let exit = summary["domain_exit"]["time"].as_f64().unwrap();
    assert!(exit > 0.0 && exit < 1.0, "{exit}");
    // the stored samples stop before the exit and stay non-negative
    let pop = Csv::read(&dir.path().join("population_1.csv"));
    assert!(pop.rows.iter().all(|r| r[1..].iter().all(|&x| x >= 0.0)));
}

#[test]
fn exact_sirs_matches_integration() {
    let dir = TempDir::new().unwrap();
    let o = hamepi("exact", &configs().join("sirs_exact.json"), dir.path(), &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = Csv::read(&dir.path().join("exact.csv"));
    assert_eq!(
        csv.header,
        ["t", "S_exact", "I_exact", "R_exact", "S_num", "I_num", "R_num", "max_abs_diff"]
    );
    assert_eq!(csv.rows.len(), 241);
    assert_eq!(csv.rows[0][1..4], [0.99, 1.0 - 0.99, 0.0]);
    let mut worst: f64 = 0.0;
    for r in &csv.rows {
        let d = (0..3).map(|k| (r[1 + k] - r[4 + k]).abs()).fold(0.0, f64::max);
        assert_eq!(d, r[7]);
        assert!((r[1] + r[2] + r[3] - 1.0).abs() <= 1e-12);
        worst = worst.max(d);
    }
    assert!(worst <= 1e-6, "{worst}");
    let summary = json_file(&dir.path().join("exact.json"));
    assert_eq!(summary["max_abs_diff"].as_f64().unwrap(), worst);
    assert!(summary["horizon"].as_f64().unwrap() > 60.0);
}

#[test]
fn exact_vaccination_models_match_integration() {
    for (name, bound) in [("vacc_i_exact.json", 1e-6), ("vacc_s_exact.json", 1e-5)] {
        let dir = TempDir::new().unwrap();
        let o = hamepi("exact", &configs().join(name), dir.path(), &[]);
        assert_eq!(code(&o), 0, "{name}: {}", stderr(&o));
        let summary = json_file(&dir.path().join("exact.json"));
        assert!(summary["max_abs_diff"].as_f64().unwrap() <= bound, "{name}: {summary}");
    }
}

#[test]
fn sirs_without_recovery_loss_is_the_sir_path() {
    let dir = TempDir::new().unwrap();
    let mut sirs = config("sirs_exact.json");
    sirs["model"]["params"]["mu"] = json!(0.0);
    let mut sir = sirs.clone();
    sir["model"] = json!({"builtin": "sir", "params": {"alpha": 0.1, "beta": 1.0}});
    let a = write_config(dir.path(), "sirs.json", &sirs);
    let b = write_config(dir.path(), "sir.json", &sir);
    assert_eq!(code(&hamepi("exact", &a, &dir.path().join("a"), &[])), 0);
    assert_eq!(code(&hamepi("exact", &b, &dir.path().join("b"), &[])), 0);
    let a = Csv::read(&dir.path().join("a/exact.csv"));
    let b = Csv::read(&dir.path().join("b/exact.csv"));
    for name in ["t", "S_exact", "I_exact", "R_exact"] {
        assert_eq!(a.column(name), b.column(name), "{name}");
    }
}

#[test]
fn exact_refuses_other_models() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "model": {"builtin": "seir", "params": {"alpha": 0.1, "beta": 1.0, "epsilon": 0.2}},
        "s0": 0.99,
        "t_end": 10.0
    });
    let path = write_config(dir.path(), "seir.json", &cfg);
    let o = hamepi("exact", &path, dir.path(), &[]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("exact solution not available"), "{}", stderr(&o));
}

#[test]
fn verify_sir_passes() {
    let dir = TempDir::new().unwrap();
    let o = hamepi("verify", &configs().join("sir.json"), dir.path(), &[]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).trim_end().ends_with("PASS"));
    let report = json_file(&dir.path().join("verify.json"));
    assert_eq!(report["status"], "PASS");
    assert_eq!(report["points"], 1000);
    assert_eq!(report["seed"], 0);
    let checks = report["checks"].as_array().unwrap();
    assert!(checks.len() >= 8);
    for c in checks {
        assert!(c["max_residual"].as_f64().unwrap() <= 1e-10, "{c}");
    }
}

#[test]
fn verify_reports_a_corrupted_bracket() {
    let dir = TempDir::new().unwrap();
    let o = hamepi("verify", &configs().join("corrupted_bracket.json"), dir.path(), &[]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).trim_end().ends_with("FAIL"));
    let report = json_file(&dir.path().join("verify.json"));
    let check = &report["checks"][0];
    assert_eq!(check["passed"], false);
    let p: Vec<f64> = check["worst_point"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    // With {S,I} = S R, {S,R} = -beta S I, {I,R} = beta S I - alpha I the
    // cyclic sum works out by hand to S R (beta S - alpha).
    let (alpha, beta) = (0.1, 1.0);
    let oracle = (p[0] * p[2] * (beta * p[0] - alpha)).abs();
    let reported = check["max_residual"].as_f64().unwrap();
    assert!((reported - oracle).abs() <= 1e-14 * oracle, "{reported} vs {oracle}");
    // nothing in the sampling box does worse
    assert!(reported <= 0.99 * 0.99 * (0.99 - alpha) + 1e-12);
}

#[test]
fn verify_coupled_system() {
    let dir = TempDir::new().unwrap();
    let o = hamepi("verify", &configs().join("three_populations.json"), dir.path(), &[]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let report = json_file(&dir.path().join("verify.json"));
    for c in report["checks"].as_array().unwrap() {
        assert!(c["max_residual"].as_f64().unwrap() <= 1e-10, "{c}");
    }
}

#[test]
fn verify_options_override_the_config() {
    let dir = TempDir::new().unwrap();
    let cfg = configs().join("corrupted_bracket.json");
    let a = hamepi("verify", &cfg, &dir.path().join("a"), &["--points", "10", "--seed", "7"]);
    let b = hamepi("verify", &cfg, &dir.path().join("b"), &["--points", "10", "--seed", "8"]);
    let loose = hamepi("verify", &cfg, &dir.path().join("c"), &["--tol", "10"]);
    assert_eq!((code(&a), code(&b), code(&loose)), (1, 1, 0));
    let (ra, rb) = (json_file(&dir.path().join("a/verify.json")), json_file(&dir.path().join("b/verify.json")));
    assert_eq!(ra["points"], 10);
    assert_eq!(ra["seed"], 7);
    assert_ne!(ra["checks"][0]["worst_point"], rb["checks"][0]["worst_point"]);
}

#[test]
fn couple_conserves_the_grand_total() {
    let dir = TempDir::new().unwrap();
    let o = hamepi("couple", &configs().join("three_populations.json"), dir.path(), &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let totals = Csv::read(&dir.path().join("totals.csv"));
    assert_eq!(totals.header, ["t", "N_1", "N_2", "N_3", "N_total"]);
    let total = totals.column("N_total");
    let drift = total.iter().map(|x| (x - total[0]).abs()).fold(0.0, f64::max);
    assert!(drift <= 1e-9, "{drift}");
    let moved = (1..=3)
        .map(|a| {
            let n = totals.column(&format!("N_{a}"));
            n.iter().map(|x| (x - n[0]).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    assert!(moved > 1e-3, "{moved}");

    for a in 1..=3 {
        let pop = Csv::read(&dir.path().join(format!("population_{a}.csv")));
        assert_eq!(pop.header, ["t", &format!("S_{a}"), &format!("I_{a}"), &format!("R_{a}"), &format!("N_{a}")]);
        for r in &pop.rows {
            assert!((r[1] + r[2] + r[3] - r[4]).abs() <= 1e-15);
        }
    }
}

#[test]
fn couple_without_transfers_keeps_each_total() {
    let dir = TempDir::new().unwrap();
    let mut cfg = config("three_populations.json");
    for t in cfg["interacting"]["transfers"].as_array_mut().unwrap() {
        t["rate"] = json!("0");
    }
    let path = write_config(dir.path(), "decoupled.json", &cfg);
    let o = hamepi("couple", &path, dir.path(), &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary = json_file(&dir.path().join("couple.json"));
    for change in summary["population_change"].as_array().unwrap() {
        assert!(change.as_f64().unwrap() <= 1e-14, "{summary}");
    }
}

#[test]
fn couple_rejects_inconsistent_reverse_transfers() {
    let dir = TempDir::new().unwrap();
    let mut cfg = config("three_populations.json");
    cfg["interacting"]["transfers"]
        .as_array_mut()
        .unwrap()
        .push(json!({"a": 2, "b": 1, "rate": "kappa*(S_1 + S_2 + I_1 - I_2)"}));
    let path = write_config(dir.path(), "bad.json", &cfg);
    let o = hamepi("couple", &path, dir.path(), &[]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("interacting.transfers[3]"), "{}", stderr(&o));

    // the negated reverse is consistent and changes nothing
    let mut cfg = config("three_populations.json");
    cfg["t_end"] = json!(1.0);
    let plain = write_config(dir.path(), "plain.json", &cfg);
    cfg["interacting"]["transfers"]
        .as_array_mut()
        .unwrap()
        .push(json!({"a": 2, "b": 1, "rate": "-kappa*(S_1 + S_2 + I_1 - I_2)"}));
    let both = write_config(dir.path(), "both.json", &cfg);
    assert_eq!(code(&hamepi("couple", &plain, &dir.path().join("a"), &[])), 0);
    assert_eq!(code(&hamepi("couple", &both, &dir.path().join("b"), &[])), 0);
    assert_eq!(
        fs::read(dir.path().join("a/totals.csv")).unwrap(),
        fs::read(dir.path().join("b/totals.csv")).unwrap()
    );
}

#[test]
fn sweep_peak_grows_with_contact_rate() {
    let dir = TempDir::new().unwrap();
    let o = hamepi("sweep", &configs().join("sir_sweep.json"), dir.path(), &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = json_file(&dir.path().join("sweep.json"));
    let points = report["points"].as_array().unwrap();
    let betas: Vec<f64> = points.iter().map(|p| p["params"]["beta"].as_f64().unwrap()).collect();
    assert_eq!(betas, [0.5, 1.0, 2.0]);
    let peaks: Vec<f64> = points.iter().map(|p| p["peak_infection"].as_f64().unwrap()).collect();
    assert!(peaks.windows(2).all(|w| w[1] > w[0]), "{peaks:?}");
}

#[test]
fn sweep_of_one_point_is_the_simulation_summary() {
    let dir = TempDir::new().unwrap();
    let mut cfg = config("sir_sweep.json");
    cfg["grid"] = json!({"beta": [1.0]});
    let path = write_config(dir.path(), "one.json", &cfg);
    assert_eq!(code(&hamepi("sweep", &path, &dir.path().join("sweep"), &[])), 0);
    assert_eq!(code(&hamepi("simulate", &configs().join("sir.json"), &dir.path().join("sim"), &[])), 0);
    let mut point = json_file(&dir.path().join("sweep/sweep.json"))["points"][0].clone();
    point.as_object_mut().unwrap().remove("params");
    assert_eq!(point, json_file(&dir.path().join("sim/diagnostics.json")));
}

#[test]
fn sweep_drops_duplicates_and_rejects_empty_grids() {
    let dir = TempDir::new().unwrap();
    let mut cfg = config("sir_sweep.json");
    cfg["grid"] = json!({"beta": [1.0, 2.0, 1.0]});
    cfg["t_end"] = json!(5.0);
    let path = write_config(dir.path(), "dup.json", &cfg);
    let o = hamepi("sweep", &path, dir.path(), &[]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("duplicate"), "{}", stderr(&o));
    assert_eq!(json_file(&dir.path().join("sweep.json"))["points"].as_array().unwrap().len(), 2);

    for grid in [json!({}), json!({"beta": []})] {
        cfg["grid"] = grid;
        let path = write_config(dir.path(), "empty.json", &cfg);
        assert_eq!(code(&hamepi("sweep", &path, dir.path(), &[])), 2);
    }
    cfg["grid"] = json!({"gamma": [1.0]});
    let path = write_config(dir.path(), "unknown.json", &cfg);
    let o = hamepi("sweep", &path, dir.path(), &[]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("grid.gamma"), "{}", stderr(&o));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let runs = [
        ("simulate", "sir_custom.json", vec!["trajectory.csv", "diagnostics.json"]),
        ("exact", "vacc_s_exact.json", vec!["exact.csv", "exact.json"]),
        ("verify", "sir.json", vec!["verify.json"]),
        ("couple", "three_populations.json", vec!["totals.csv", "population_2.csv", "couple.json"]),
        ("sweep", "sir_sweep.json", vec!["sweep.json"]),
    ];
    for (command, cfg, files) in runs {
        let (a, b) = (dir.path().join(format!("{command}-a")), dir.path().join(format!("{command}-b")));
        assert_eq!(code(&hamepi(command, &configs().join(cfg), &a, &[])), 0);
        assert_eq!(code(&hamepi(command, &configs().join(cfg), &b, &[])), 0);
        for f in files {
            assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{command}/{f}");
        }
    }
}

#[test]
fn model_can_live_in_its_own_file() {
    let dir = TempDir::new().unwrap();
    let custom = config("sir_custom.json");
    write_config(dir.path(), "model.json", &custom["model"]);
    let mut cfg = custom.clone();
    cfg["model"] = json!("model.json");
    let path = write_config(dir.path(), "run.json", &cfg);
    let o = hamepi("simulate", &path, &dir.path().join("out"), &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn log_level_comes_from_the_environment() {
    let dir = TempDir::new().unwrap();
    let run = |level: &str| {
        Command::new(env!("CARGO_BIN_EXE_hamepi"))
            .args(["exact", "--config"])
            .arg(configs().join("sirs_exact.json"))
            .arg("--out")
            .arg(dir.path())
            .env("HAMEPI_LOG", level)
            .output()
            .unwrap()
    };
    assert!(stderr(&run("info")).contains("max |exact - numeric|"));
    assert!(stderr(&run("off")).is_empty());
}
