use std::path::Path;
use std::process::{Command, Output};

use dsinfer::textscreen::{synthetic_corpus, write_corpus, SyntheticSpec};
use dsinfer_cli::TestReport;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dsinfer"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().unwrap()
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn large_example_rejects() {
    assert!(
        stdout(&["test", "--counts", "30,20,50", "--null", "uniform"])
            .starts_with("decision: Reject")
    );
}

#[test]
fn validation_errors_exit_2() {
    assert_eq!(code(&["test", "--counts", "3,2", "--null", "0.7,0.2"]), 2);
    assert_eq!(code(&["test", "--counts", "3,-1"]), 2);
    assert_eq!(code(&["test", "--counts", "3"]), 2);
    assert_eq!(
        code(&["test", "--counts", "3,2", "--null", "0.5,0.3,0.2"]),
        2
    );
    assert_eq!(code(&["test", "--counts", "3,2", "--unknown-flag"]), 2);
    assert_eq!(
        code(&["test", "--counts", "3,2", "--estimator", "median"]),
        2
    );
    assert_eq!(code(&["--format", "json", "test", "--counts", "3,2"]), 2);
    assert_eq!(
        code(&["test", "--counts", "3,2", "--alpha", "1.5", "--seed", "1"]),
        2
    );
    assert_eq!(
        code(&[
            "simulate",
            "--study",
            "weakening",
            "--config",
            "/no/such/file",
            "--out",
            "/tmp"
        ]),
        2
    );
}

#[test]
fn json_report_round_trips() {
    let text = stdout(&[
        "--format",
        "json",
        "test",
        "--counts",
        "3,2,5",
        "--seed",
        "7",
        "--with-freq",
    ]);
    let report: TestReport = serde_json::from_str(&text).unwrap();
    assert_eq!(report.to_json(), text);
    let keys: Vec<&str> = text
        .split('"')
        .skip(1)
        .step_by(2)
        .filter(|s| s.chars().all(|c| c.is_ascii_lowercase() || c == '_'))
        .collect();
    let expected = [
        "counts",
        "null",
        "alpha",
        "replicates",
        "weaken_alpha",
        "estimator",
        "seed",
        "t_obs",
        "q_lower_env",
        "q_upper_env",
        "decision",
        "belief",
        "plausibility",
    ];
    let mut pos = 0;
    for key in expected {
        pos += keys[pos..]
            .iter()
            .position(|k| *k == key)
            .unwrap_or_else(|| panic!("missing {key}"));
    }
    assert_eq!(report.seed, 7);
    assert_eq!(report.replicates, 1000);
    assert!(report.freq_p_value.is_some());
}

#[test]
fn csv_report_has_header_and_row() {
    let text = stdout(&["--format", "csv", "test", "--counts", "4,6", "--seed", "1"]);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0].split(',').count(), lines[1].split(',').count());
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn simulate_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "s.json",
        r#"{"truth":[0.3,0.3,0.3,0.1],"sample_sizes":[30],"datasets_per_size":30,"replicates":100,"seed":4,"weaken_grid":[0,1,4,16]}"#,
    );
    let out = dir.path().join("o");
    let csv = stdout(&[
        "--format",
        "csv",
        "simulate",
        "--study",
        "weakening",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--svg",
    ]);
    assert_eq!(
        std::fs::read_to_string(out.join("weakening.csv")).unwrap(),
        csv
    );
    assert!(out.join("weakening.svg").exists());
    let unknown: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(5).unwrap().parse().unwrap())
        .collect();
    assert!(unknown.windows(2).all(|w| w[1] >= w[0]), "{unknown:?}");

    let bad = write(dir.path(), "bad.txt", "truth=0.5,0.5\nsample_sizes=10\n");
    assert_eq!(
        code(&[
            "simulate",
            "--study",
            "certainty",
            "--config",
            &bad,
            "--out",
            out.to_str().unwrap()
        ]),
        2
    );
}

#[test]
fn samplesize_null_rows_are_unknown_heavy_at_small_n() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.txt", "truth=0.3,0.3,0.3,0.1\nsample_sizes=4,200\ndatasets_per_size=60\nreplicates=200\nfreq_resamples=100\nseed=9\n");
    let csv = stdout(&[
        "--format",
        "csv",
        "simulate",
        "--study",
        "samplesize",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let rows: Vec<Vec<String>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    let unknown = |study: &str, n: &str| -> f64 {
        rows.iter().find(|r| r[0] == study && r[1] == n).unwrap()[5]
            .parse()
            .unwrap()
    };
    assert!(unknown("samplesize_null", "4") > unknown("samplesize_null", "200"));
}

fn corpus_file(dir: &Path) -> String {
    let syn = synthetic_corpus(&SyntheticSpec {
        documents: 400,
        noise_words: 30,
        seed: 6,
        ..SyntheticSpec::default()
    })
    .unwrap();
    write(dir, "corpus.csv", &write_corpus(&syn.documents).unwrap())
}

#[test]
fn screen_marks_planted_words() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = corpus_file(dir.path());
    let out = dir.path().join("screen.csv");
    let csv = stdout(&[
        "--format",
        "csv",
        "screen",
        "--corpus",
        &corpus,
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(std::fs::read_to_string(&out).unwrap(), csv);
    assert_eq!(
        csv.lines().next().unwrap(),
        "word,count,q_lower_env,q_upper_env,freq_p,ds_decision"
    );
    let planted: Vec<&str> = csv.lines().filter(|l| l.starts_with("sig")).collect();
    assert_eq!(planted.len(), 20);
    assert!(
        planted.iter().all(|l| l.ends_with(",Reject")),
        "{planted:?}"
    );
}

#[test]
fn classify_min_count_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = corpus_file(dir.path());
    let csv = stdout(&[
        "--format",
        "csv",
        "classify",
        "--corpus",
        &corpus,
        "--policy",
        "min_count",
        "--min-count",
        "50",
        "--seed",
        "1",
        "--replicates",
        "200",
    ]);
    let screen = stdout(&[
        "--format",
        "csv",
        "screen",
        "--corpus",
        &corpus,
        "--seed",
        "1",
        "--replicates",
        "200",
    ]);
    let frequent = screen
        .lines()
        .skip(1)
        .filter(|l| l.split(',').nth(1).unwrap().parse::<u64>().unwrap() >= 50)
        .count();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "min_count(50)");
    assert_eq!(row[1].parse::<usize>().unwrap(), frequent);

    let table = stdout(&[
        "--format",
        "csv",
        "classify",
        "--corpus",
        &corpus,
        "--seed",
        "1",
        "--replicates",
        "200",
    ]);
    assert_eq!(table.lines().count(), 6);

    let empty = write(dir.path(), "empty.csv", "id,cause,text\n");
    assert_eq!(code(&["screen", "--corpus", &empty, "--seed", "1"]), 2);
    let missing = write(dir.path(), "missing.csv", "id,text\n1,fever\n");
    assert_eq!(code(&["screen", "--corpus", &missing, "--seed", "1"]), 2);
    let strange = write(
        dir.path(),
        "test.csv",
        "id,cause,text\n1,nosuchcause,fever\n",
    );
    assert_eq!(
        code(&[
            "classify",
            "--corpus",
            &corpus,
            "--test-corpus",
            &strange,
            "--seed",
            "1",
            "--replicates",
            "100"
        ]),
        2
    );
    assert_eq!(
        code(&["classify", "--corpus", &corpus, "--policy", "best", "--seed", "1"]),
        2
    );
}
