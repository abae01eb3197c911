use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dyadic-gehring"))
        .args(args)
        .env("DYADIC_GEHRING_OUT", out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn example_files_feed_the_other_commands() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let o = bin(out, &["example", "interval", "--n", "128", "--weight", "power:-0.5"]);
    assert!(o.status.success());
    let space = out.join("space.txt");
    let lattice = out.join("lattice.txt");
    let weight = out.join("weight.txt");
    let (s, l, w) = (space.to_str().unwrap(), lattice.to_str().unwrap(), weight.to_str().unwrap());

    assert_eq!(bin(out, &["space", "validate", "--space", s]).status.code(), Some(0));
    assert_eq!(bin(out, &["lattice", "verify", "--space", s, "--lattice", l]).status.code(), Some(0));

    let from_files = bin(out, &["weight", "rh", "--space", s, "--weight", w, "--lattice", l, "--p", "1.5"]);
    let shorthand = bin(out, &["weight", "rh", "--space", "interval128", "--weight", "power:-0.5", "--p", "1.5"]);
    assert_eq!(stdout(&from_files), stdout(&shorthand));

    let o = bin(out, &["gehring", "certificate", "--space", s, "--weight", w, "--lattice", l, "--p", "1.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = fs::read_to_string(out.join("gehring-certificate.txt")).unwrap();
    assert!(report.starts_with("[manifest]\ncommand = gehring certificate\n"));
    assert!(report.contains("[certificate]") && report.contains("sound = true"));
}

#[test]
fn reports_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["stopping", "tree", "--space", "interval256", "--weight", "power:-0.5", "--lambda", "4"];
    let run = |dir: &Path| {
        let o = Command::new(env!("CARGO_BIN_EXE_dyadic-gehring")).args(args).arg("--out").arg(dir).output().unwrap();
        assert!(o.status.success());
        (
            fs::read_to_string(dir.join("stopping-tree.txt")).unwrap(),
            fs::read_to_string(dir.join("stopping-tree-mass.csv")).unwrap(),
        )
    };
    let (ta, ca) = run(a.path());
    let (tb, cb) = run(b.path());
    // only the out directory may differ
    assert_eq!(ta.replace(a.path().to_str().unwrap(), ""), tb.replace(b.path().to_str().unwrap(), ""));
    assert_eq!(ca, cb);
    assert!(ta.contains("summary c_measured="));
}

#[test]
fn haircomb_files_give_per_tooth_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let comb = ["--teeth", "4", "--resolution", "0.02"];
    let mut args = vec!["example", "haircomb"];
    args.extend(comb);
    assert!(bin(out, &args).status.success());
    for f in ["space.txt", "weight.txt", "haircomb.txt"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let s = out.join("space.txt");
    let w = out.join("weight.txt");
    let h = out.join("haircomb.txt");
    let o = bin(
        out,
        &[
            "weight",
            "rh",
            "--space",
            s.to_str().unwrap(),
            "--weight",
            w.to_str().unwrap(),
            "--haircomb",
            h.to_str().unwrap(),
            "--family",
            "teeth",
            "--p",
            "2",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("weight-rh-teeth.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.starts_with("tooth,value\n"));

    let mut args = vec!["example", "haircomb-report"];
    args.extend(comb);
    let o = bin(out, &args);
    assert!(o.status.success());
    let report = fs::read_to_string(out.join("haircomb-report.csv")).unwrap();
    assert_eq!(report.lines().count(), 5);
}

#[test]
fn doubling_gate_refuses_the_haircomb() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(
        dir.path(),
        &[
            "gehring",
            "thm52",
            "--space",
            "haircomb",
            "--teeth",
            "8",
            "--resolution",
            "0.01",
            "--weight",
            "haircomb",
            "--p",
            "2",
            "--q-grid",
            "2:2.2:0.1",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("refused"));
    let text = fs::read_to_string(dir.path().join("gehring-thm52.txt")).unwrap();
    assert!(text.contains("[refused]") && text.contains("witness = ball:"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert_eq!(bin(out, &["bogus"]).status.code(), Some(2));
    assert_eq!(bin(out, &["weight", "rh", "--space", "interval8", "--weight", "constant"]).status.code(), Some(2));
    assert_eq!(
        bin(out, &["weight", "rh", "--space", "interval8", "--weight", "power:-2", "--p", "2"]).status.code(),
        Some(2)
    );
    assert_eq!(
        bin(out, &["weight", "rh", "--space", "interval8", "--weight", "constant", "--p", "2"]).status.code(),
        Some(0)
    );

    let bad = out.join("bad.txt");
    fs::write(&bad, "space 2 1 euclidean\n0 0 1\n1 1 -2\n").unwrap();
    let o = bin(out, &["space", "validate", "--space", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("witness: point 1 has mass -2"));
}

#[test]
fn corrupted_lattice_is_rejected_with_a_witness() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert!(bin(out, &["example", "interval", "--n", "16"]).status.success());
    let path = out.join("lattice.txt");
    let text = fs::read_to_string(&path).unwrap();
    // drop the last finest-level cube so one point is uncovered
    let mut lines: Vec<&str> = text.lines().collect();
    lines.pop();
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    let s = out.join("space.txt");
    let o = bin(out, &["lattice", "verify", "--space", s.to_str().unwrap(), "--lattice", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("witness: Partition { level: 4, point: 15, occurrences: 0 }"));
    let report = fs::read_to_string(out.join("lattice-verify.txt")).unwrap();
    assert!(report.contains("partition_ok = false"));
}
