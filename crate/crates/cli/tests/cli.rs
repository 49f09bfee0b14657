use serde_json::Value;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_holonomic"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).expect("stderr is one JSON object")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("config.toml");
    fs::write(&p, body).unwrap();
    p
}

/// Data rows of a CSV artifact (header comment and column names skipped).
fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .unwrap()
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect()
}

#[test]
fn corner_demo_reports_minus_two_and_not_critical() {
    let dir = TempDir::new().unwrap();
    let o = run(&["corner-demo"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("pairing <eta, |v|> = -2\n"), "{text}");
    assert!(text.contains("verdict: not critical"), "{text}");
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("corner_demo.json")).unwrap()).unwrap();
    assert_eq!(report["pairing"], -2.0);
    assert_eq!(report["verdict"], "not critical");
    assert_eq!(report["seed"], 0);
}

#[test]
fn stencil_second_difference() {
    let dir = TempDir::new().unwrap();
    let o = run(&["stencil", "--index", "2", "--nodes", "-1,0,1"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "1,-2,1");
    let rows = csv_rows(&dir.path().join("stencil.csv"));
    let w: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    for (a, b) in w.iter().zip([1.0, -2.0, 1.0]) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn stencil_reports_too_few_nodes_as_input_error() {
    let dir = TempDir::new().unwrap();
    let o = run(&["stencil", "--index", "3", "--nodes", "-1,0,1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr_json(&o);
    assert_eq!(err["error"], "input");
    assert_eq!(err["exit_code"], 2);
}

#[test]
fn minimize_then_scan_the_minimizer() {
    let dir = TempDir::new().unwrap();
    let o = run(
        &["minimize", "--config", configs().join("minimize_homological.toml").to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.starts_with("# holonomic minimize seed=7\n"));
    let row = &csv_rows(&dir.path().join("summary.csv"))[0];
    let objective: f64 = row[0].parse().unwrap();
    assert!((objective - 0.5).abs() <= 0.025, "objective {objective}");
    let hol: f64 = row[6].parse().unwrap();
    assert!(hol <= 1e-8);

    let measure = dir.path().join("measure.json");
    let cfg = write_config(
        dir.path(),
        &format!(
            "seed = 3\n[lagrangian]\nname = \"mechanical\"\n[measure]\nkind = \"file\"\npath = {:?}\n[criticality.battery]\nhomological = true\n",
            measure.to_str().unwrap()
        ),
    );
    let scan_out = dir.path().join("scan");
    let o = run(&["check-critical", "--config", cfg.to_str().unwrap()], &scan_out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_str(&fs::read_to_string(scan_out.join("criticality.json")).unwrap()).unwrap();
    assert_eq!(report["report"]["critical"], true);
    assert_eq!(report["seed"], 3);
}

#[test]
fn tampered_measure_fails_revalidation() {
    let dir = TempDir::new().unwrap();
    let o = run(
        &["minimize", "--config", configs().join("minimize_homological.toml").to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let path = dir.path().join("measure.json");
    let mut m: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    // move the first atom half a cell over: still a probability measure,
    // no longer holonomic
    m["atoms"][0]["x"][0] = Value::from(0.0625);
    fs::write(&path, serde_json::to_string(&m).unwrap()).unwrap();
    let cfg = write_config(dir.path(), &format!("[measure]\nkind = \"file\"\npath = {:?}\n", path.to_str().unwrap()));
    let o = run(&["energy", "--config", cfg.to_str().unwrap()], &dir.path().join("e"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr_json(&o)["message"].as_str().unwrap().contains("re-validation"));
}

#[test]
fn non_critical_measure_exits_one_with_json_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "[lagrangian]\nname = \"length\"\n[measure]\nkind = \"corner\"\n[criticality]\ncorner_generator = true\n[criticality.battery]\nhorizontal = 2\nvertical = 2\ntranspositional = 2\n",
    );
    let o = run(&["check-critical", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let err = stderr_json(&o);
    assert_eq!(err["error"], "verification");
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("criticality.json")).unwrap()).unwrap();
    let w = report["report"]["witness"].as_u64().unwrap() as usize;
    assert!(report["report"]["values"][w]["value"].as_f64().unwrap() <= -1.9);
}

#[test]
fn input_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let o = run(&["minimize", "--config", "/nonexistent/config.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"], "input");

    let cfg = write_config(dir.path(), "[minimize]\nsampels = 8\n");
    let o = run(&["minimize", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr_json(&o)["message"].as_str().unwrap().contains("sampels"));

    let o = run(&["energy"], dir.path());
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["no-such-command"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["exit_code"], 2);
}

#[test]
fn line_energy_weak_kam_and_transport() {
    let dir = TempDir::new().unwrap();
    let line = configs().join("line.toml");
    let o = run(&["energy", "--config", line.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let comp = &csv_rows(&dir.path().join("components.csv"))[0];
    assert_eq!(comp[4].parse::<f64>().unwrap(), -0.5);

    let o = run(&["weak-kam", "--config", line.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let fit = csv_rows(&dir.path().join("fit.csv"));
    let dx1 = fit.iter().find(|r| r[0] == "dx1").unwrap();
    assert!((dx1[1].parse::<f64>().unwrap() - 1.0).abs() <= 1e-6);

    // two speeds in one component: the energy constant is not constant
    let mixed = dir.path().join("mixed.json");
    fs::write(
        &mixed,
        r#"{"d": 2, "n": 1, "atoms": [{"x": [0.1, 0.1], "v": [[1.0, 0.0]], "w": 0.5}, {"x": [0.11, 0.1], "v": [[2.0, 0.0]], "w": 0.5}]}"#,
    )
    .unwrap();
    let cfg = write_config(
        dir.path(),
        &format!("[measure]\nkind = \"file\"\npath = {:?}\n[energy]\nradius = 5.0\n", mixed.to_str().unwrap()),
    );
    let o = run(&["energy", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"], "verification");
    let o = run(&["energy", "--config", cfg.to_str().unwrap(), "--tol=-1"], dir.path());
    assert_eq!(o.status.code(), Some(2));

    let cfg = write_config(
        dir.path(),
        "[measure]\nkind = \"grid\"\nsamples = 6\nvelocity = [0.6, -0.4]\n[transport]\nradius = 0.08\n[[transport.field]]\naxis = 0\nterms = [{ freq = [0, 0], phase = \"cos\", coeff = 1.0 }]\n",
    );
    let o = run(&["transport", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for row in csv_rows(&dir.path().join("transport.csv")) {
        let u: Vec<f64> = row[5..9].iter().map(|c| c.parse().unwrap()).collect();
        for (a, b) in u.iter().zip([1.0, 0.0, 0.0, 0.0]) {
            assert!((a - b).abs() <= 1e-6, "{u:?}");
        }
    }
}

#[test]
fn variation_families_pass_their_checks() {
    let dir = TempDir::new().unwrap();
    let o = run(&["variation", "--config", configs().join("variation_explicit.toml").to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let cfg = write_config(
        dir.path(),
        "[measure]\nkind = \"corner\"\nsamples = 32\n[variation]\nkind = \"vertical\"\ntests = 4\n[[variation.shift]]\nslot = 0\naxis = 1\nterms = [{ freq = [1, 0], phase = \"sin\", coeff = 0.3 }]\n",
    );
    let o = run(&["variation", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let orders = csv_rows(&dir.path().join("orders.csv"));
    assert_eq!(orders.len(), 4);
    assert!(orders.iter().all(|r| r[10] == "true"));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let battery = write_config(
        a.path(),
        "[measure]\nkind = \"corner\"\nsamples = 16\n[variation]\ntests = 3\n[variation.battery]\nhorizontal = 2\nvertical = 2\ntranspositional = 2\n",
    );
    let minimize = configs().join("minimize_homological.toml");
    for dir in [a.path(), b.path()] {
        for args in [
            vec!["minimize", "--config", minimize.to_str().unwrap()],
            vec!["variation", "--config", battery.to_str().unwrap(), "--seed", "11"],
        ] {
            assert_eq!(run(&args, dir).status.code(), Some(0));
        }
    }
    for name in ["measure.json", "summary.csv", "convergence.csv", "orders.csv"] {
        let (x, y) = (fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap());
        assert!(x == y, "{name} differs between runs");
    }
    let head = fs::read_to_string(a.path().join("orders.csv")).unwrap();
    assert!(head.starts_with("# holonomic variation seed=11\n"));

    let c = TempDir::new().unwrap();
    assert_eq!(run(&["variation", "--config", battery.to_str().unwrap(), "--seed", "12"], c.path()).status.code(), Some(0));
    assert_ne!(
        fs::read(a.path().join("convergence.csv")).unwrap(),
        fs::read(c.path().join("convergence.csv")).unwrap()
    );
}

#[test]
fn readme_config_example_parses() {
    let readme = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../README.md")).unwrap();
    let start = readme.find("```toml\n").expect("README has a TOML example") + 8;
    let body = &readme[start..start + readme[start..].find("```").unwrap()];
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), body);
    let o = run(&["stencil", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).trim(), "1,-2,1");
}
