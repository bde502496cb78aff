use std::io::Write;
use std::path::Path;
use std::process::{Command, Stdio};

fn sitlab() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sitlab"));
    c.env_remove("SITLAB_DATA_DIR");
    c
}

fn ok(c: &mut Command) -> Vec<u8> {
    let out = c.output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn column(csv: &[u8], name: &str) -> Vec<f64> {
    let mut rd = csv::Reader::from_reader(csv);
    let j = rd.headers().unwrap().iter().position(|h| h == name).unwrap();
    rd.records().map(|r| r.unwrap()[j].parse().unwrap()).collect()
}

#[test]
fn simulate_pipes_into_score_sit() {
    let ratings = ok(sitlab().args(["simulate", "--n", "200", "--seed", "1"]));
    let mut child = sitlab()
        .arg("score-sit")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(&ratings).unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let sit = column(&out.stdout, "sit");
    assert_eq!(sit.len(), 200);
    let n = sit.len() as f64;
    let mean = sit.iter().sum::<f64>() / n;
    let sd = (sit.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!(mean.abs() < 1e-9 && (sd - 1.0).abs() < 1e-9);
}

fn simulate(dir: &Path, seed: &str) {
    ok(sitlab()
        .args(["simulate", "--n", "300", "--seed", seed, "--out"])
        .arg(dir));
}

#[test]
fn pipeline_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str| -> Vec<(String, Vec<u8>)> {
        let d = tmp.path().join(name);
        simulate(&d, "3");
        ok(sitlab().arg("score").arg("--data").arg(&d));
        let mut out = Vec::new();
        for mode in ["split-half", "test-retest"] {
            let draws = d.join(format!("{mode}.csv"));
            let summary = d.join(format!("{mode}.json"));
            ok(sitlab()
                .args(["reliability", "--mode", mode, "--draws", "500", "--seed", "7", "--data"])
                .arg(&d)
                .arg("--out")
                .arg(&draws)
                .arg("--summary")
                .arg(&summary));
        }
        let table = ok(sitlab()
            .args(["regress", "--spec", "table2_col6", "--data"])
            .arg(&d)
            .arg("--out")
            .arg(d.join("coef.csv")));
        out.push(("table".into(), table));
        for f in [
            "events.ndjson",
            "ratings.csv",
            "scores.csv",
            "split-half.csv",
            "split-half.json",
            "test-retest.csv",
            "coef.csv",
        ] {
            out.push((f.into(), std::fs::read(d.join(f)).unwrap()));
        }
        out
    };
    let a = run("a");
    let b = run("b");
    for ((name, x), (_, y)) in a.iter().zip(&b) {
        assert!(x == y, "{name} differs");
    }
    let text = String::from_utf8(a[0].1.clone()).unwrap();
    assert!(text.contains("IAT Revelation") && text.contains("R-squared"));
}

#[test]
fn analysis_commands_run_on_a_data_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().join("d");
    simulate(&d, "4");
    let alpha: f64 = String::from_utf8(ok(sitlab().arg("alpha").arg("--data").arg(&d)))
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!(alpha > 0.8);
    let idx = ok(sitlab().arg("indices").arg(d.join("questionnaire.csv")));
    assert_eq!(column(&idx, "growth_mindset").len(), 300);
    let iat = ok(sitlab().arg("score-iat").arg(d.join("iat_trials.csv")));
    assert!(String::from_utf8(iat).unwrap().starts_with("session_id,d_score"));
    let text = String::from_utf8(ok(sitlab().arg("textmetrics").arg("--data").arg(&d))).unwrap();
    assert!(text.contains("mean TTR") && text.contains("kappa"));
    let tags = String::from_utf8(ok(sitlab()
        .arg("tagstats")
        .arg("--data")
        .arg(&d)
        .args(["--override", "p0=none"])))
    .unwrap();
    assert!(tags.contains("images: 100"));
    // Item matrices: alpha and a one-factor solution.
    let items = tmp.path().join("items.csv");
    let mut body = String::from("respondent_id,a,b,c\n");
    for i in 0..50 {
        let x = (i % 7) as f64;
        body.push_str(&format!("r{i},{},{},{}\n", x, x + (i % 2) as f64, x - (i % 3) as f64));
    }
    std::fs::write(&items, body).unwrap();
    ok(sitlab().arg("alpha").arg("--items").arg(&items));
    let f = ok(sitlab().arg("factor").arg(&items));
    assert_eq!(column(&f, "loading").len(), 3);
    let out = tmp.path().join("report");
    let rep = String::from_utf8(ok(sitlab()
        .arg("report")
        .arg("--data")
        .arg(&d)
        .arg("--out")
        .arg(&out)
        .args(["--draws", "200"])))
    .unwrap();
    assert!(rep.contains("RELIABILITY") && out.join("report.txt").exists());
}

#[test]
fn bad_input_exits_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.csv");
    std::fs::write(&bad, "session_id,image_id,rating\nS1,i1,3\n").unwrap();
    let out = sitlab().arg("score-sit").arg(&bad).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    assert!(!sitlab()
        .args(["reliability", "--mode", "sideways"])
        .output()
        .unwrap()
        .status
        .success());
    assert!(!sitlab()
        .args(["regress", "--spec", "no_such_model", "--scores"])
        .arg(&bad)
        .output()
        .unwrap()
        .status
        .success());
    assert!(!sitlab()
        .args(["simulate", "--n", "1"])
        .output()
        .unwrap()
        .status
        .success());
}
