use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fedflip(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fedflip"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("FEDFLIP_THREADS", t),
        None => cmd.env_remove("FEDFLIP_THREADS"),
    };
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

#[test]
fn federated_run_writes_one_history_row_per_round() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "exp.conf",
        "mode = federated\nsynth_samples = 300\noutput_dir = out\n",
    );
    let out = fedflip(&["run", "--config", &cfg], None);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let run = dir.path().join("out/seed-42/clean/federated");
    let history = fs::read_to_string(run.join("history.csv")).unwrap();
    let mut lines = history.lines();
    assert_eq!(lines.next(), Some("round,loss,accuracy"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 100);
    assert!(rows[0].starts_with("1,") && rows[99].starts_with("100,"));
    let report = fs::read_to_string(run.join("report.txt")).unwrap();
    assert!(report.contains("precision") && report.contains("weighted avg"));
    assert!(!dir.path().join("out/seed-42/clean/centralized").exists());
}

#[test]
fn output_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "exp.conf",
        "mode = centralized\ncomm_rounds = 3\nsynth_samples = 200\nflip_percent = 14\n",
    );
    let target = dir.path().join("elsewhere");
    let out = fedflip(
        &[
            "run",
            "--config",
            &cfg,
            "--output",
            target.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(target
        .join("seed-42/flip-14/centralized/history.csv")
        .exists());
    assert!(!dir.path().join("fedflip-out").exists());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let body = "comm_rounds = 4\nsynth_samples = 400\nsweep = 10, 20\nseeds = 1, 2\n";
    let a = write(dir.path(), "a.conf", &format!("{body}output_dir = a\n"));
    let b = write(dir.path(), "b.conf", &format!("{body}output_dir = b\n"));
    assert_eq!(code(&fedflip(&["run", "--config", &a], Some("1"))), 0);
    assert_eq!(code(&fedflip(&["run", "--config", &b], Some("4"))), 0);
    let files = [
        "sweep.csv",
        "seed-1/clean/federated/history.csv",
        "seed-2/flip-20/centralized/report.txt",
        "seed-2/flip-10/federated/metrics.txt",
    ];
    for f in files {
        let x = fs::read(dir.path().join("a").join(f)).unwrap();
        let y = fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
}

#[test]
fn sweep_defaults_to_two_through_twenty() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "exp.conf",
        "comm_rounds = 1\nsynth_samples = 200\nnum_clients = 2\n",
    );
    let out = fedflip(&["sweep", "--config", &cfg], None);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("fedflip-out/sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "flip_percent,clean_fl_accuracy,poisoned_fl_accuracy,clean_central_accuracy,poisoned_central_accuracy,seed"
    );
    assert_eq!(lines.len(), 11);
    let ps: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(ps, (1..=10).map(|i| 2.0 * i as f64).collect::<Vec<_>>());
    // The clean baseline is shared by every row of a seed.
    let clean: Vec<&str> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap())
        .collect();
    assert!(clean.windows(2).all(|w| w[0] == w[1]));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("flip%"));
}

#[test]
fn sweep_rows_are_sweep_times_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "exp.conf",
        "comm_rounds = 1\nsynth_samples = 200\nsweep = 4, 8, 12\nseeds = 3, 5\n",
    );
    assert_eq!(code(&fedflip(&["sweep", "--config", &cfg], None)), 0);
    let csv = fs::read_to_string(dir.path().join("fedflip-out/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 2);
}

#[test]
fn synth_writes_loadable_csv() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "synth.spec",
        &format!(
            "n_samples = 50\nclass_weights = {}\ncluster_spread = 0.2\nseed = 7\n",
            ["0.14285714285714285"; 7].join(",")
        ),
    );
    let csv = dir.path().join("data.csv");
    let out = fedflip(
        &["synth", "--spec", &spec, "--out", csv.to_str().unwrap()],
        None,
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let data = fedflip_core::dataset::load_csv(&csv).unwrap();
    assert_eq!(data.len(), 50);
    assert_eq!(data.num_features(), 784);

    // A config pointing at that CSV runs end to end.
    let cfg = write(
        dir.path(),
        "exp.conf",
        "data = data.csv\ncomm_rounds = 2\nnum_clients = 4\n",
    );
    let out = fedflip(&["run", "--config", &cfg], None);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    for (body, needle) in [
        ("learning_rat = 0.1\n", "learning_rat"),
        ("batch_size = many\n", "batch_size"),
        ("sweep = 2, 4\nflip_percent = 14\n", "flip_percent"),
        ("num_clients = 0\n", "num_clients"),
    ] {
        let cfg = write(dir.path(), "bad.conf", body);
        let out = fedflip(&["run", "--config", &cfg], None);
        assert_eq!(code(&out), 1, "{body}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(needle), "{body}: {err}");
        assert!(!dir.path().join("fedflip-out").exists());
    }
    let missing = dir.path().join("nope.conf");
    assert_eq!(
        code(&fedflip(
            &["run", "--config", missing.to_str().unwrap()],
            None
        )),
        1
    );
    assert_eq!(code(&fedflip(&["run"], None)), 1);
    let spec = write(dir.path(), "bad.spec", "class_weights = 1,1,1,1,1,1,1\n");
    let out = fedflip(&["synth", "--spec", &spec, "--out", "x.csv"], None);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("class weights"));
    let cfg = write(
        dir.path(),
        "ok.conf",
        "comm_rounds = 1\nsynth_samples = 100\n",
    );
    assert_eq!(code(&fedflip(&["run", "--config", &cfg], Some("zero"))), 1);
}

#[test]
fn data_errors_exit_two_and_leave_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "exp.conf",
        "data = missing.csv\noutput_dir = out\n",
    );
    let out = fedflip(&["run", "--config", &cfg], None);
    assert_eq!(code(&out), 2);
    assert!(!dir.path().join("out").exists());

    let mut csv = (0..784)
        .map(|i| format!("pixel{i:04}"))
        .collect::<Vec<_>>()
        .join(",");
    csv.push_str(",label\n");
    csv.push_str(&vec!["0"; 784].join(","));
    csv.push_str(",9\n");
    write(dir.path(), "bad.csv", &csv);
    let cfg = write(
        dir.path(),
        "exp2.conf",
        "data = bad.csv\noutput_dir = out\n",
    );
    let out = fedflip(&["run", "--config", &cfg], None);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("row"));
    assert!(!dir.path().join("out").exists());
}
