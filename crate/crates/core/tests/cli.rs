use std::path::Path;
use std::process::{Command, Output};

fn betbound(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_betbound"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn verify_passes() {
    let o = betbound(&["verify"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    for (label, value) in [
        ("T(7/18) threshold best", "14/3"),
        ("T(7/18) counterexample", "13/3"),
        ("ratio", "14/13"),
        ("T(1/16) Kelly", "12"),
        ("T(7/9)", "5/3"),
    ] {
        let line = out
            .lines()
            .find(|l| l.starts_with(label))
            .unwrap_or_else(|| panic!("{label}"));
        let fields: Vec<&str> = line[label.len()..].split_whitespace().collect();
        assert_eq!(fields, [value, value, "pass"], "{line}");
    }
}

#[test]
fn verify_rejects_other_games() {
    let o = betbound(&["--game", "p=3/5 b=1", "verify"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn eval_examples() {
    let cases = [
        ("threshold:9/25", "7/18", "14/3 ≈ 4.6667"),
        ("kelly", "1/8", "9"),
        (
            "table:7/18=5/36,2/3=1/6,1/2=1/4;fallback=kelly",
            "7/18",
            "13/3 ≈ 4.3333",
        ),
    ];
    for (policy, x0, expect) in cases {
        let o = betbound(&["eval", "--policy", policy, "--x0", x0]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert_eq!(stdout(&o).trim_end(), expect);
    }
}

#[test]
fn eval_errors() {
    let o = betbound(&["eval", "--policy", "threshold:1/4", "--x0", "7/18"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("1/4"));
    let o = betbound(&["eval", "--policy", "kelly", "--x0", "seven"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("seven"));
    let o = betbound(&["eval", "--policy", "threshold:3/5", "--x0", "7/18"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("warning"));
}

#[test]
fn counterexample_report() {
    let o = betbound(&["counterexample"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o)
        .contains("threshold: 14/3, alternative: 13/3, threshold/alternative = 14/13 ≈ 1.0769"));
    // every threshold in (1/3, 1/2] at step 1/100
    let samples: Vec<String> = (34..=50).map(|k| format!("{k}/100")).collect();
    let o = betbound(&["counterexample", "--xi0-samples", &samples.join(",")]);
    let out = stdout(&o);
    let values: Vec<&str> = out.lines().filter(|l| l.starts_with("xi0")).collect();
    assert_eq!(values.len(), 17);
    assert!(
        values
            .iter()
            .all(|l| l.ends_with("T(7/18) = 14/3 ≈ 4.6667")),
        "{out}"
    );
    let o = betbound(&["--game", "p=3/5 b=1", "counterexample"]);
    assert!(stdout(&o).contains("does not apply"));
}

#[test]
fn simulate_reports_and_is_deterministic() {
    let args = [
        "simulate",
        "--policy",
        "kelly",
        "--x0",
        "1/2",
        "--episodes",
        "20000",
        "--seed",
        "9",
    ];
    let a = betbound(&args);
    let b = betbound(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let out = stdout(&a);
    let z: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("z-score:"))
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!(z.abs() <= 4.0);
    let o = betbound(&[
        "simulate",
        "--policy",
        "kelly",
        "--x0",
        "1",
        "--episodes",
        "10",
    ]);
    let out = stdout(&o);
    assert!(
        out.contains("mean rounds: 0.000000") && out.contains("std error:   0.000000"),
        "{out}"
    );
}

#[test]
fn bounds_export_and_bump() {
    let dir = tempfile::tempdir().unwrap();
    let seed = dir.path().join("seed.csv");
    let o = betbound(&[
        "bounds",
        "--iters",
        "0",
        "--pieces",
        "1024",
        "--grid",
        "2000",
        "--out",
        seed.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = rows(&seed);
    assert_eq!(r.len(), 2000);
    let xs: Vec<f64> = r.iter().map(|row| row[0].parse().unwrap()).collect();
    assert!(xs.windows(2).all(|w| w[0] < w[1]));
    let at = |x: &str| r.iter().find(|row| row[0] == x).unwrap().clone();
    assert_eq!(at("0.3")[1..], ["3", "6"]);
    assert_eq!(at("0.5")[1..], ["3", "3"]);

    let two = dir.path().join("two.csv");
    let args = [
        "bounds",
        "--iters",
        "2",
        "--pieces",
        "1024",
        "--grid",
        "2000",
        "--out",
        two.to_str().unwrap(),
    ];
    let first = betbound(&args);
    let text = std::fs::read(&two).unwrap();
    let second = betbound(&args);
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(std::fs::read(&two).unwrap(), text);
    let near = rows(&two)
        .into_iter()
        .min_by(|a, b| {
            let d = |row: &Vec<String>| (row[0].parse::<f64>().unwrap() - 7.0 / 18.0).abs();
            d(a).total_cmp(&d(b))
        })
        .unwrap();
    assert!(near[2].parse::<f64>().unwrap() <= 4.3334, "{near:?}");

    let o = betbound(&["bump", "--curve", two.to_str().unwrap(), "--window", "41"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("bump at x = "));
}

#[test]
fn bump_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let convex = dir.path().join("convex.csv");
    let mut text = String::from("x,lower,upper\n");
    for i in 1..200 {
        let x = i as f64 / 200.0;
        let v = -3.0 * x.log2();
        text.push_str(&format!("{x},{v},{v}\n"));
    }
    std::fs::write(&convex, text).unwrap();
    let o = betbound(&["bump", "--curve", convex.to_str().unwrap()]);
    assert_eq!(stdout(&o).trim_end(), "no bump detected");

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "x,lower,upper\n0.1,2,3\n0.2,oops,3\n").unwrap();
    let o = betbound(&["bump", "--curve", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(betbound(&[]).status.code(), Some(2));
    assert_eq!(betbound(&["nonsense"]).status.code(), Some(2));
    assert_eq!(
        betbound(&["--game", "p=1/2", "verify"]).status.code(),
        Some(2)
    );
    assert_eq!(betbound(&["--help"]).status.code(), Some(0));
}
