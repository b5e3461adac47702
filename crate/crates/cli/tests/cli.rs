use std::path::Path;
use std::process::Command;

fn lvae(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_lvae"))
        .args(args)
        .output()
        .expect("spawn lvae")
}

fn ok(args: &[&str]) {
    let out = lvae(args);
    assert!(
        out.status.success(),
        "lvae {args:?}:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_train_evaluate_traverse_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("mini.fds");
    ok(&["gen-data", "--out", s(&data)]);
    assert!(data.exists());

    let run = dir.path().join("run");
    let budget = [
        "--iters",
        "100",
        "--hidden",
        "32",
        "--eval-interval",
        "50",
        "--votes",
        "60",
        "--eval-votes",
        "40",
    ];
    let mut args = vec!["train", "--regime", "vae", "--data", s(&data), "--out", s(&run)];
    args.extend(budget);
    ok(&args);
    let ckpt = run.join("ckpt_final.lvae");
    assert!(ckpt.exists() && run.join("train_log.csv").exists());

    let eval = dir.path().join("eval");
    let mut args = vec!["evaluate", "--ckpt", s(&ckpt), "--data", s(&data), "--out", s(&eval)];
    args.extend(budget);
    ok(&args);
    let metrics = std::fs::read_to_string(eval.join("metrics.csv")).unwrap();
    let header = metrics.lines().next().unwrap();
    for col in ["recon", "betavae", "factorvae", "explicitness", "irs", "mig", "sap"] {
        assert!(header.split(',').any(|c| c == col), "{header}");
    }
    assert_eq!(metrics.lines().count(), 2);

    let trav = dir.path().join("trav");
    ok(&[
        "traverse",
        "--ckpt",
        s(&ckpt),
        "--data",
        s(&data),
        "--dim",
        "2",
        "--out",
        s(&trav),
    ]);
    let pgm = std::fs::read(trav.join("traverse_dim2.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n144 64\n255\n"));

    let sweep = dir.path().join("sweep");
    let mut args = vec![
        "sweep",
        "--betas",
        "1,4",
        "--seeds",
        "0",
        "--iters-grid",
        "40",
        "--data",
        s(&data),
        "--out",
        s(&sweep),
    ];
    args.extend(&budget[2..]);
    ok(&args);
    let rows = std::fs::read_to_string(sweep.join("sweep.csv")).unwrap();
    assert_eq!(rows.lines().count(), 3);
}

#[test]
fn bad_inputs_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.lvae");
    let out = lvae(&["evaluate", "--ckpt", s(&missing)]);
    assert!(!out.status.success());
    let out = lvae(&["train", "--regime", "nonsense"]);
    assert!(!out.status.success());
    let junk = dir.path().join("junk.fds");
    std::fs::write(&junk, b"not a dataset").unwrap();
    let out = lvae(&["train", "--data", s(&junk), "--iters", "10", "--out", s(dir.path())]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("magic"));
}
