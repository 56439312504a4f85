use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_margin-scope"))
        .args(args)
        .current_dir(dir)
        .env_remove("MARGIN_SCOPE_THREADS")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["toy", "--bogus", "1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn resource_cap_exit_code_names_the_module() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["dlp", "--p", "4111", "--k-exp", "2", "--out", "r.csv"], dir.path());
    assert_eq!(o.status.code(), Some(4));
    let err = stderr(&o);
    assert_eq!(err.trim_end().lines().count(), 1);
    assert!(err.starts_with("error: dlp:"), "{err}");
}

#[test]
fn bad_input_data_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("z.csv"), "z\n0.2\nabc\n").unwrap();
    let o = bin(&["margin-report", "--samples", "z.csv", "--out", "r.csv"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    let o = bin(&["dlp", "--p", "60", "--k-exp", "2"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("dlp"));
}

#[test]
fn malformed_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), "{ not json").unwrap();
    let o = bin(&["toy", "--config", "c.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_thread_override_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_margin-scope"))
        .args(["haar-moments", "--eigenvalues", "0,1"])
        .current_dir(dir.path())
        .env("MARGIN_SCOPE_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_values_yield_to_explicit_flags() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c.json"),
        r#"{"n": 5, "samples": 500, "perms": [0, 5], "seed": 4}"#,
    )
    .unwrap();
    let o = bin(&["toy", "--config", "c.json", "--n", "7", "--out", "o"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("o/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["flags"]["n"], 7);
    assert_eq!(manifest["flags"]["samples"], 500);
    assert_eq!(manifest["seed"], 4);
    assert_eq!(manifest["outputs"][0], "fig3.csv");
    let csv = std::fs::read_to_string(dir.path().join("o/fig3.csv")).unwrap();
    assert!(csv.starts_with("t,perm_count,A_t_normalized,std_error,zero_consistent\n"));
    assert_eq!(csv.lines().count(), 1 + 6 * 2);
}

#[test]
fn thread_count_does_not_change_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut outs = Vec::new();
    for threads in ["1", "0"] {
        let out = format!("h{threads}.csv");
        let o = Command::new(env!("CARGO_BIN_EXE_margin-scope"))
            .args([
                "haar-moments",
                "--projector-rank",
                "3",
                "--n",
                "3",
                "--samples",
                "3000",
                "--seed",
                "2",
                "--out",
                &out,
            ])
            .current_dir(dir.path())
            .env("MARGIN_SCOPE_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        outs.push(std::fs::read(dir.path().join(format!("h{threads}_anti_randomness.csv"))).unwrap());
    }
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn dataset_train_and_plot_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(
        bin(
            &[
                "dataset",
                "gen",
                "--seed",
                "2",
                "--grid",
                "4",
                "--test",
                "10",
                "--out",
                "d/data.csv"
            ],
            p
        )
        .status
        .code(),
        Some(0)
    );
    let train = std::fs::read_to_string(p.join("d/data.csv")).unwrap();
    assert!(train.starts_with("x1,x2,y\n"));
    assert_eq!(train.lines().count(), 17);
    assert_eq!(
        std::fs::read_to_string(p.join("d/data_test.csv"))
            .unwrap()
            .lines()
            .count(),
        11
    );

    let o = bin(
        &[
            "train",
            "--model",
            "feature-brick",
            "--n",
            "2",
            "--layers",
            "2",
            "--data",
            "d/data.csv",
            "--iters",
            "5",
            "--out",
            "m.json",
        ],
        p,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(p.join("m.json")).unwrap()).unwrap();
    assert_eq!(doc["model"], "feature-brick");
    assert_eq!(doc["shape"], serde_json::json!([2, 2]));
    assert_eq!(doc["theta"].as_array().unwrap().len(), 4);
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(p.join("m.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["notes"]["optimizer"], "adam");
    let trace = std::fs::read_to_string(p.join("m_trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1 + 6);

    let o = bin(
        &[
            "sweep",
            "--model",
            "reupload",
            "--data",
            "d/data.csv",
            "--n-list",
            "1",
            "--layer-list",
            "1,2",
            "--repeats",
            "2",
            "--iters",
            "2",
            "--bootstrap",
            "10",
            "--out",
            "s.csv",
        ],
        p,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let sweep = std::fs::read_to_string(p.join("s.csv")).unwrap();
    assert!(sweep.starts_with("model,n,L,regime,mu1_minus_half,mu1_stderr,var,var_stderr,seed\n"));
    assert_eq!(sweep.lines().count(), 1 + 2 * (2 * 2 + 1));

    let o = bin(
        &[
            "plot", "--input", "s.csv", "--kind", "fig45", "--column", "var", "--out", "s.svg",
        ],
        p,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let svg = std::fs::read_to_string(p.join("s.svg")).unwrap();
    // One series per regime at n = 1.
    assert_eq!(svg.matches("<polyline").count(), 3);
}

#[test]
fn margin_report_on_bare_values() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("z.csv"), "0.1\n0.45\n0.6\n").unwrap();
    let o = bin(
        &[
            "margin-report",
            "--samples",
            "z.csv",
            "--b",
            "0.5",
            "--M",
            "1000",
            "--delta",
            "0.05",
            "--out",
            "o",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = std::fs::read_to_string(dir.path().join("o/report.csv")).unwrap();
    assert!(report.starts_with("bound_kind,mu1,sigma2,L,b,M,delta,k_gap,bound,vacuous\n"));
    assert_eq!(report.lines().count(), 4);
    let failure = std::fs::read_to_string(dir.path().join("o/report_failure.csv")).unwrap();
    let indicator = failure.lines().nth(1).unwrap();
    assert!(indicator.starts_with("indicator,3.3333333333333331e-1,"), "{indicator}");
}
