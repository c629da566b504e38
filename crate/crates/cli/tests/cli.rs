use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn halfline(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_halfline"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let mut rows = vec![r.headers().unwrap().iter().map(String::from).collect()];
    for rec in r.records() {
        rows.push(rec.unwrap().iter().map(String::from).collect());
    }
    rows
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL_PDE: &str = "[green_eval.pde_grid]\nlength = 30.0\nnx = 600\n";

#[test]
fn single_point_has_twelve_entry_columns() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "c.toml", SMALL_PDE);
    let o = halfline(
        tmp.path(),
        &[
            "green-eval",
            "--config",
            "c.toml",
            "--point",
            "5,3,4",
            "--out",
            "o",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = csv_rows(&tmp.path().join("o/green_eval.csv"));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].len(), 3 + 12);
    assert_eq!(
        &rows[0][3..7],
        ["leading_g11", "leading_g12", "leading_g21", "leading_g22"]
    );
    let v: Vec<f64> = rows[1].iter().map(|s| s.parse().unwrap()).collect();
    // The two numerical oracles agree; the pde run is coarse here.
    for k in 0..4 {
        let (lap, pde) = (v[7 + k], v[11 + k]);
        assert!(
            (lap - pde).abs() < 0.02 * lap.abs().max(0.05),
            "entry {k}: {lap} vs {pde}"
        );
    }
}

#[test]
fn grid_request_row_count_is_the_product() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "c.toml",
        r#"
[green_eval]
evaluators = ["leading", "laplace-oracle"]
[green_eval.grid]
x = { lo = 1.0, hi = 5.0, n = 3 }
y = { lo = 2.0, hi = 4.0, n = 2 }
t = { lo = 2.0, hi = 6.0, n = 2 }
"#,
    );
    let o = halfline(
        tmp.path(),
        &["green-eval", "--config", "c.toml", "--out", "o"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = csv_rows(&tmp.path().join("o/green_eval.csv"));
    assert_eq!(rows.len() - 1, 3 * 2 * 2);
    assert_eq!(rows[0].len(), 3 + 8);
}

#[test]
fn unstable_leading_evaluation_names_the_pole() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "c.toml",
        "[model]\nc = 1.0\nnu = 1.0\na1 = 1.0\na2 = 1.0\n",
    );
    let o = halfline(
        tmp.path(),
        &[
            "green-eval",
            "--config",
            "c.toml",
            "--point",
            "5,3,4",
            "--evaluators",
            "leading",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("1.618033988"), "{}", stderr(&o));
}

#[test]
fn unknown_keys_and_bad_values_are_config_errors() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "a.toml", "[solver]\ncfl = 0.3\n");
    write(tmp.path(), "b.toml", "[solver]\ncfl_hyp = 2.0\n");
    write(
        tmp.path(),
        "c.toml",
        "[solver.pressure]\ngamma = 2.0\ncoefficient = 3.0\n",
    );
    let o = halfline(tmp.path(), &["stability-map", "--config", "a.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cfl"), "{}", stderr(&o));
    let o = halfline(tmp.path(), &["solve", "linear", "--config", "b.toml"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = halfline(tmp.path(), &["solve", "linear", "--config", "c.toml"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = halfline(tmp.path(), &["stability-map", "--config", "missing.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unreachable_quadrature_tolerance_is_an_accuracy_failure() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "c.toml",
        "[transforms]\ntol = 1e-16\nn_nodes = 16\n",
    );
    let o = halfline(
        tmp.path(),
        &[
            "green-eval",
            "--config",
            "c.toml",
            "--point",
            "5,3,4",
            "--evaluators",
            "laplace-oracle",
        ],
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

const SOLVE: &str = r#"
[solver]
t_end = 4.0
output_times = [1.0, 2.0, 3.0]
[solver.grid]
length = 40.0
nx = 400
[initial.profile]
kind = "gaussian"
amplitude = 0.01
center = 8.0
width = 2.0
"#;

#[test]
fn solve_is_deterministic_and_writes_plot_data() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "c.toml", SOLVE);
    for out in ["a", "b"] {
        let o = halfline(
            tmp.path(),
            &[
                "solve",
                "nonlinear",
                "--config",
                "c.toml",
                "--out",
                out,
                "--plot-data",
            ],
        );
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("a/manifest.json")).unwrap())
            .unwrap();
    let snaps = m["snapshots"].as_array().unwrap();
    assert_eq!(snaps.len(), 5);
    assert_eq!(m["config"]["solver"]["t_end"], 4.0);
    for s in snaps {
        let f = s["file"].as_str().unwrap();
        let a = fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = fs::read(tmp.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
        let rows = csv_rows(&tmp.path().join("a").join(f));
        assert_eq!(rows[0], ["x", "rho", "m"]);
        assert_eq!(rows.len() - 1, 401);
    }
    let plots = fs::read_dir(tmp.path().join("a/plot")).unwrap().count();
    assert_eq!(plots, 2 * 5);
    let text = fs::read_to_string(tmp.path().join("a/plot/m_0004.dat")).unwrap();
    let pairs = text.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(pairs, 401);
    // The echoed configuration reproduces the run.
    let o = halfline(
        tmp.path(),
        &[
            "solve",
            "nonlinear",
            "--config",
            "a/config.toml",
            "--out",
            "c",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        fs::read(tmp.path().join("a/snapshots/snapshot_0004.csv")).unwrap(),
        fs::read(tmp.path().join("c/snapshots/snapshot_0004.csv")).unwrap()
    );
}

#[test]
fn divergence_reports_last_good_snapshot() {
    let tmp = TempDir::new().unwrap();
    // cfl_par = 0.9 is past the RK4 limit for the viscous term.
    let cfg = SOLVE
        .replace("t_end = 4.0", "t_end = 4.0\ncfl_par = 0.9")
        .replace("nx = 400", "nx = 800");
    write(tmp.path(), "c.toml", &cfg);
    let o = halfline(
        tmp.path(),
        &["solve", "linear", "--config", "c.toml", "--out", "o"],
    );
    assert_eq!(o.status.code(), Some(5), "{}", stderr(&o));
    let err = stderr(&o);
    let named = err.trim().rsplit("last good snapshot: ").next().unwrap();
    assert!(named.starts_with("o/snapshots/snapshot_"), "{err}");
    assert!(tmp.path().join(named).exists(), "{err}");
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("o/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(m["exit_code"], 5);
}

#[test]
fn stability_map_classifies_every_cell() {
    let tmp = TempDir::new().unwrap();
    let o = halfline(tmp.path(), &["stability-map", "--out", "o"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = csv_rows(&tmp.path().join("o/stability_map.csv"));
    assert_eq!(rows.len() - 1, 81);
    for r in &rows[1..] {
        let (a1, a2): (f64, f64) = (r[0].parse().unwrap(), r[1].parse().unwrap());
        let has_pole = !r[3].is_empty();
        assert_eq!(has_pole, a1 * a2 > 0.0, "{r:?}");
        if a1 == 1.0 && a2 == 1.0 {
            assert_eq!(r[2], "mixed-unstable");
            let s: f64 = r[3].parse().unwrap();
            assert!((s - 0.5 * (1.0 + 5f64.sqrt())).abs() < 1e-12);
        }
    }
}

const LEMMA: &str = r#"
[verify.lemma42]
cases = [[2.0, 0.0, 0.5]]
[verify.lemma42.grid]
x = { lo = -10.0, hi = 10.0, n = 5 }
t = { lo = 0.0, hi = 8.0, n = 3 }
"#;

#[test]
fn lemma_check_writes_report_and_table() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "c.toml", LEMMA);
    let o = halfline(
        tmp.path(),
        &["verify", "lemma42", "--config", "c.toml", "--out", "o"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(tmp.path().join("o/verify/lemma42-2-0-0.5.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(r["status"], "pass");
    assert_eq!(r["artifacts"][0], "verify/lemma42-2-0-0.5.csv");
    let rows = csv_rows(&tmp.path().join("o/verify/lemma42-2-0-0.5.csv"));
    assert_eq!(rows[0], ["x", "y", "t", "lhs", "rhs", "ratio"]);
}

#[test]
fn lemma_outside_its_hypotheses_is_refused() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "c.toml",
        &LEMMA.replace("[[2.0, 0.0, 0.5]]", "[[3.0, 0.0, 0.5]]"),
    );
    let o = halfline(tmp.path(), &["verify", "lemma42", "--config", "c.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("diverges logarithmically"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn short_stored_trajectory_is_inconclusive() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "c.toml", SOLVE);
    let o = halfline(
        tmp.path(),
        &["solve", "nonlinear", "--config", "c.toml", "--out", "run"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = halfline(
        tmp.path(),
        &["verify", "decay", "--trajectory", "run", "--out", "o"],
    );
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(tmp.path().join("o/verify/decay.json").exists());
}

#[test]
fn stable_class_has_no_instability_to_show() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "c.toml",
        "[verify.instability]\na1 = -1.0\na2 = 1.0\n[verify.instability.solver.grid]\nlength = 20.0\nnx = 200\n",
    );
    let o = halfline(tmp.path(), &["verify", "instability", "--config", "c.toml"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}
