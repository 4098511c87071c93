use std::path::PathBuf;
use std::process::{Command, Output};

fn m3inv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_m3inv")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

#[test]
fn invariants_on_witness_file() {
    let o = m3inv(&["invariants", &fixture("witness.pg"), "--collection", "ponita", "--pairs", "0:1,2:3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o),
        "i,j,j1,j2,j3\n0,1,0,1,1.5707963267948966\n2,3,0,1,1.5707963267948966\n"
    );
    let o = m3inv(&["invariants", &fixture("witness.pg"), "--pairs", "0:1,2:3"]);
    assert_eq!(stdout(&o), "i,j,i1,i2,i3,i4\n0,1,0,0,1,0\n2,3,0,1,1,0\n");
}

#[test]
fn invariants_enumerates_ordered_pairs() {
    let o = m3inv(&["invariants", &fixture("witness.pg")]);
    assert_eq!(stdout(&o).lines().count(), 1 + 4 * 3);
    let o = m3inv(&["invariants", &fixture("witness.pg"), "--include-self"]);
    assert_eq!(stdout(&o).lines().count(), 1 + 16);
}

#[test]
fn invariants_reports_parse_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.pg");
    std::fs::write(&path, "posegraph v1 2 1\n0 0 0 0 0 1 1 0\n0 0 0 0 0 nope 1 0\n").unwrap();
    let o = m3inv(&["invariants", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");

    std::fs::write(&path, "posegraph v1 0 1\n").unwrap();
    let o = m3inv(&["invariants", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "i,j,i1,i2,i3,i4\n");
}

#[test]
fn counterexample_exit_codes() {
    let o = m3inv(&["counterexample"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("ponita_j3,1.5707963267948966,1.5707963267948966"));
    assert_eq!(m3inv(&["counterexample", "--transform-seed", "4"]).status.code(), Some(0));
    // A twist about n1 keeps the PONITA collision, so the verdict still holds.
    assert_eq!(m3inv(&["counterexample", "--perturb", "0.3"]).status.code(), Some(0));
}

#[test]
fn verify_passes_small_run() {
    let o = m3inv(&["verify", "--trials", "20", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).starts_with("suite,check,seed,trials,metric,value,tolerance,failures,pass\n"));
    assert!(!stdout(&o).contains(",fail\n"));
}

#[test]
fn reconstruct_then_align() {
    let dir = tempfile::tempdir().unwrap();
    let o = m3inv(&["reconstruct", "0.5", "-0.25", "2", "0.1"]);
    assert_eq!(o.status.code(), Some(0));
    let rebuilt = dir.path().join("rebuilt.pg");
    std::fs::write(&rebuilt, &o.stdout).unwrap();

    let o = m3inv(&["invariants", rebuilt.to_str().unwrap(), "--pairs", "0:1"]);
    let row: Vec<f64> = stdout(&o).lines().nth(1).unwrap().split(',').skip(2).map(|s| s.parse().unwrap()).collect();
    for (got, want) in row.iter().zip([0.5, -0.25, 2.0, 0.1]) {
        assert!((got - want).abs() <= 1e-8);
    }

    let o = m3inv(&["align", rebuilt.to_str().unwrap(), rebuilt.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().nth(1).unwrap().starts_with("true,"));

    assert_eq!(m3inv(&["reconstruct", "2", "0", "1", "0"]).status.code(), Some(1));
}

#[test]
fn align_reports_missing_motion() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.pg");
    let q = dir.path().join("q.pg");
    std::fs::write(&p, "posegraph v1 2 1\n0 0 0 0 0 1 1 0\n1 0 0 0 1 0 1 0\n").unwrap();
    std::fs::write(&q, "posegraph v1 2 1\n0 0 0 0 0 1 1 0\n1 0 0 1 0 0 1 0\n").unwrap();
    let o = m3inv(&["align", p.to_str().unwrap(), q.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().nth(1).unwrap().starts_with("false,"));
    let o = m3inv(&["align", &fixture("witness.pg"), q.to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn experiment_with_config_and_models() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, "n_graphs = 20\nn_nodes = 4\nhidden = [8]\nepochs = 5\n").unwrap();
    let models = dir.path().join("models");
    let o = m3inv(&[
        "experiment", "--config", cfg.to_str().unwrap(), "--epochs", "3",
        "--model-dir", models.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 3);
    assert!(out.lines().nth(1).unwrap().starts_with("7,separation,universal,3,"));
    assert!(models.join("separation-universal.mlp").exists());
    assert!(models.join("separation-ponita.mlp").exists());

    let o = m3inv(&["experiment", "--config", cfg.to_str().unwrap(), "--epochs", "0"]);
    assert_eq!(o.status.code(), Some(0));

    std::fs::write(&cfg, "n_graphs = 20\nlearning_rate = 1e6\nepochs = 50\n").unwrap();
    let o = m3inv(&["experiment", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));

    std::fs::write(&cfg, "no_such_key = 1\n").unwrap();
    assert_eq!(m3inv(&["experiment", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}
