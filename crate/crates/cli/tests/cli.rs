use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use betacp::conformal::{split_cp, SplitConfig};
use betacp::models::ModelSpec;
use betacp::scores::ScoreKind;
use betacp::simlab::{generate, Scenario, ScenarioConfig};
use betacp::Dataset;
use tempfile::TempDir;

fn betacp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_betacp"))
        .args(args)
        .env("BETACP_THREADS", "1")
        .output()
        .expect("run betacp")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write_dataset(path: &Path, d: &Dataset, with_y: bool) {
    let mut w = csv::Writer::from_path(path).unwrap();
    let mut header: Vec<String> = (1..=d.p()).map(|j| format!("x{j}")).collect();
    if with_y {
        header.insert(0, "y".into());
    }
    w.write_record(&header).unwrap();
    for i in 0..d.n() {
        let mut rec: Vec<String> = d.row(i).iter().map(|v| v.to_string()).collect();
        if with_y {
            rec.insert(0, d.y()[i].to_string());
        }
        w.write_record(&rec).unwrap();
    }
    w.flush().unwrap();
}

struct Fixture {
    dir: TempDir,
    train: PathBuf,
    new: PathBuf,
    train_data: Dataset,
    new_data: Dataset,
}

fn fixture() -> Fixture {
    let dir = TempDir::new().unwrap();
    let train_data = generate(&ScenarioConfig::new(Scenario::S3, 120, 1)).unwrap();
    let new_data = generate(&ScenarioConfig::new(Scenario::S3, 6, 2)).unwrap();
    let train = dir.path().join("train.csv");
    let new = dir.path().join("new.csv");
    write_dataset(&train, &train_data, true);
    write_dataset(&new, &new_data, true);
    Fixture {
        dir,
        train,
        new,
        train_data,
        new_data,
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_records(path: &Path) -> Vec<csv::StringRecord> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .unwrap()
        .records()
        .map(Result::unwrap)
        .collect()
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(code(&betacp(&["--help"])), 0);
    assert_eq!(code(&betacp(&["--version"])), 0);
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&betacp(&[])), 1);
    assert_eq!(code(&betacp(&["frobnicate"])), 1);
    let f = fixture();
    let out = f.dir.path().join("o.csv");
    let bad_alpha = betacp(&[
        "predict",
        "-i",
        s(&f.train),
        "--new",
        s(&f.new),
        "-o",
        s(&out),
        "--alpha",
        "1.5",
    ]);
    assert_eq!(code(&bad_alpha), 1);
    let bad_model = betacp(&["fit", "-i", s(&f.train), "--model", "m9"]);
    assert_eq!(code(&bad_model), 1);
    let mismatch = betacp(&[
        "predict",
        "-i",
        s(&f.train),
        "--new",
        s(&f.new),
        "-o",
        s(&out),
        "-m",
        "m1",
        "-s",
        "quantile",
    ]);
    assert_eq!(code(&mismatch), 1);
    let empty_grid = betacp(&[
        "simulate",
        "--models",
        "m1",
        "--scores",
        "quantile",
        "-o",
        s(&out),
    ]);
    assert_eq!(code(&empty_grid), 1);
    assert!(String::from_utf8_lossy(&empty_grid.stderr).contains("--help"));
}

#[test]
fn data_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "y,x\n0.5,1\n1.0,2\n0.2,3\n").unwrap();
    let out = betacp(&["fit", "-i", s(&bad)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("[2]"));

    fs::write(&bad, "a,b\n1,2\n").unwrap();
    assert_eq!(code(&betacp(&["fit", "-i", s(&bad)])), 2);
    fs::write(&bad, "y,x\n0.5,oops\n").unwrap();
    assert_eq!(code(&betacp(&["fit", "-i", s(&bad)])), 2);
    assert_eq!(code(&betacp(&["fit", "-i", "/nonexistent.csv"])), 2);
}

#[test]
fn fit_errors_exit_3() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("collinear.csv");
    let mut body = String::from("y,x1,x2\n");
    for i in 0..30 {
        let x = f64::from(i) / 10.0;
        body.push_str(&format!(
            "{},{x},{}\n",
            0.2 + 0.02 * f64::from(i % 7),
            2.0 * x
        ));
    }
    fs::write(&path, body).unwrap();
    assert_eq!(code(&betacp(&["fit", "-i", s(&path), "-m", "m3"])), 3);
}

#[test]
fn fit_prints_coefficients() {
    let f = fixture();
    let out = betacp(&["fit", "-i", s(&f.train), "-m", "m3"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["n"], 120);
    assert_eq!(v["model"]["spec"], "BetaMean");
}

#[test]
fn predicted_intervals_round_trip_bit_for_bit() {
    let f = fixture();
    let out = f.dir.path().join("pred.csv");
    let run = betacp(&[
        "predict",
        "-i",
        s(&f.train),
        "--new",
        s(&f.new),
        "-o",
        s(&out),
        "-m",
        "m3",
        "--seed",
        "5",
    ]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("coverage "));
    let recs = read_records(&out);
    assert_eq!(recs.len(), f.new_data.n());
    let cfg = SplitConfig {
        rng_seed: 5,
        ..SplitConfig::default()
    };
    for (i, rec) in recs.iter().enumerate() {
        let pi = split_cp(
            &f.train_data,
            f.new_data.row(i),
            ModelSpec::BetaMean,
            ScoreKind::Quantile,
            &cfg,
        )
        .unwrap();
        let lower: f64 = rec[5].parse().unwrap();
        let upper: f64 = rec[6].parse().unwrap();
        assert_eq!(lower.to_bits(), pi.lower.to_bits());
        assert_eq!(upper.to_bits(), pi.upper.to_bits());
        let truth: f64 = rec[8].parse().unwrap();
        assert_eq!(truth.to_bits(), f.new_data.y()[i].to_bits());
    }
}

#[test]
fn simulate_is_deterministic_apart_from_timing() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |o: &Path| {
        vec![
            "simulate".to_string(),
            "--scenarios".into(),
            "S1,S3".into(),
            "--models".into(),
            "m1,m3".into(),
            "--methods".into(),
            "split,full".into(),
            "-n".into(),
            "40".into(),
            "--reps".into(),
            "10".into(),
            "--seed".into(),
            "3".into(),
            "-o".into(),
            o.to_str().unwrap().into(),
        ]
    };
    for o in [&a, &b] {
        let v = args(o);
        let refs: Vec<&str> = v.iter().map(String::as_str).collect();
        assert_eq!(code(&betacp(&refs)), 0);
    }
    let text = fs::read_to_string(&a).unwrap();
    assert!(text.starts_with("# betacp "));
    let header = text.lines().nth(1).unwrap();
    assert_eq!(
        header,
        "scenario,model,score,method,n,alpha,replications,coverage,avg_width,cpu_mean,cpu_sd,failures"
    );
    let (ra, rb) = (read_records(&a), read_records(&b));
    // S1 and S3, each with M1 raw and M3 Pearson/quantile, each with two methods.
    assert_eq!(ra.len(), 12);
    for (x, y) in ra.iter().zip(&rb) {
        for col in [0, 1, 2, 3, 4, 5, 6, 7, 8, 11] {
            assert_eq!(x[col], y[col]);
        }
    }
}

#[test]
fn analyze_writes_results_and_plot_data() {
    let f = fixture();
    let out = f.dir.path().join("report");
    let run = betacp(&[
        "analyze",
        "-i",
        s(&f.train),
        "--methods",
        "split",
        "--combos",
        "m1:raw,m3:quantile",
        "--seed",
        "4",
        "-o",
        s(&out),
    ]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let results = read_records(&out.join("results.csv"));
    // two combinations plus union and intersection
    assert_eq!(results.len(), 4);
    let plot = read_records(&out.join("plot_data.csv"));
    assert_eq!(plot.len(), 4 * 12);
    let again = f.dir.path().join("again");
    betacp(&[
        "analyze",
        "-i",
        s(&f.train),
        "--methods",
        "split",
        "--combos",
        "m1:raw,m3:quantile",
        "--seed",
        "4",
        "-o",
        s(&again),
    ]);
    assert_eq!(
        fs::read(out.join("plot_data.csv")).unwrap(),
        fs::read(again.join("plot_data.csv")).unwrap()
    );
}

#[test]
fn failed_runs_leave_outputs_untouched() {
    let f = fixture();
    let out = f.dir.path().join("pred.csv");
    fs::write(&out, "previous contents\n").unwrap();
    let bad_new = f.dir.path().join("bad_new.csv");
    fs::write(&bad_new, "x1,x2\n0.1,0.2\n").unwrap();
    let run = betacp(&[
        "predict",
        "-i",
        s(&f.train),
        "--new",
        s(&bad_new),
        "-o",
        s(&out),
    ]);
    assert_eq!(code(&run), 2);
    assert_eq!(fs::read_to_string(&out).unwrap(), "previous contents\n");

    let fresh = f.dir.path().join("fresh.csv");
    let run = betacp(&[
        "predict",
        "-i",
        s(&f.train),
        "--new",
        s(&bad_new),
        "-o",
        s(&fresh),
    ]);
    assert_eq!(code(&run), 2);
    assert!(!fresh.exists());
    let names: Vec<String> = fs::read_dir(f.dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(names.iter().all(|n| !n.starts_with(".tmp")), "{names:?}");
}

#[test]
fn rescale_flag_maps_percentages() {
    let dir = TempDir::new().unwrap();
    let d = generate(&ScenarioConfig::new(Scenario::S3, 80, 9)).unwrap();
    let path = dir.path().join("pct.csv");
    let mut w = csv::Writer::from_path(&path).unwrap();
    w.write_record(["y", "x1", "x2", "x3"]).unwrap();
    for i in 0..d.n() {
        let mut rec = vec![(100.0 * d.y()[i]).to_string()];
        rec.extend(d.row(i).iter().map(|v| v.to_string()));
        w.write_record(&rec).unwrap();
    }
    w.flush().unwrap();
    assert_eq!(code(&betacp(&["fit", "-i", s(&path)])), 2);
    assert_eq!(
        code(&betacp(&["fit", "-i", s(&path), "--rescale", "0", "100"])),
        0
    );
}

#[test]
fn thread_variable_is_validated() {
    let out = Command::new(env!("CARGO_BIN_EXE_betacp"))
        .args(["fit", "-i", "/nonexistent.csv"])
        .env("BETACP_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
}
