use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rdlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rdlab"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const RELAXING: &str = "\
# relaxing run
d1 = 1
d2 = 1
d3 = 1
n = 50
t_end = 8
u0 = homogeneous 2
v0 = homogeneous 2
w0 = homogeneous 0
record_every = 10
";

#[test]
fn equilibrium_and_duality_lines() {
    let dir = tempfile::tempdir().unwrap();
    let o = rdlab(dir.path(), &["equilibrium", "--m1", "2", "--m2", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "a_inf=1 b_inf=1 c_inf=1 residual<=1e-12");
    let o = rdlab(dir.path(), &["duality", "1", "3"]);
    assert_eq!(stdout(&o).trim(), "margin=0.5 condition_p2=SATISFIED");
}

#[test]
fn exit_codes_distinguish_usage_and_domain_errors() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.cfg"), "alpha = 0.5\n").unwrap();
    let o = rdlab(dir.path(), &["--config", "bad.cfg", "equilibrium"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha must be ≥ 1"));

    assert_eq!(
        rdlab(dir.path(), &["no-such-command"]).status.code(),
        Some(2)
    );
    assert_eq!(
        rdlab(dir.path(), &["--config", "missing.cfg", "homogeneous-scan"])
            .status
            .code(),
        Some(2)
    );
    // negative diffusivity is a domain error
    assert_eq!(
        rdlab(dir.path(), &["duality", "--", "-1", "3"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn simulate_validate_fit_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.cfg"), RELAXING).unwrap();
    let o = rdlab(
        dir.path(),
        &["--config", "run.cfg", "simulate", "--out", "a.csv"],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );

    let csv = fs::read_to_string(dir.path().join("a.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("t,dt,mass1,mass2,E,E_rel,D,fisher_u,fisher_v,fisher_w,reaction_term,l1_u,l1_v,l1_w,min_conc")
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0][6], "inf");
    let t: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(t.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(*t.last().unwrap(), 8.0);
    let l1: f64 = rows.last().unwrap()[11..14]
        .iter()
        .map(|c| c.parse::<f64>().unwrap())
        .sum();
    assert!(l1 < 1e-6, "terminal L1 {l1}");

    let o = rdlab(dir.path(), &["validate", "a.csv", "--out", "validate.txt"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("PASS validate"));
    let report = fs::read_to_string(dir.path().join("validate.txt")).unwrap();
    assert!(report.lines().all(|l| l.contains(": ")));
    assert!(report.ends_with("result: PASS\n"));

    let o = rdlab(dir.path(), &["fit-rate", "a.csv"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let rate: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("rate: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(rate > 0.0);

    // byte-identical on a second run
    rdlab(
        dir.path(),
        &["--config", "run.cfg", "simulate", "--out", "b.csv"],
    );
    assert_eq!(csv, fs::read_to_string(dir.path().join("b.csv")).unwrap());
}

#[test]
fn validator_catches_tampered_mass() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.cfg"), RELAXING).unwrap();
    rdlab(
        dir.path(),
        &[
            "--config", "run.cfg", "simulate", "--t-end", "0.1", "--out", "a.csv",
        ],
    );
    let csv = fs::read_to_string(dir.path().join("a.csv")).unwrap();
    let mut lines: Vec<String> = csv.lines().map(str::to_string).collect();
    let mut cols: Vec<String> = lines[3].split(',').map(str::to_string).collect();
    let m: f64 = cols[2].parse().unwrap();
    cols[2] = format!("{:?}", m * (1.0 + 1e-9));
    lines[3] = cols.join(",");
    fs::write(dir.path().join("bad.csv"), lines.join("\n")).unwrap();
    let o = rdlab(dir.path(), &["validate", "bad.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("mass_violations: 1"));
}

#[test]
fn verification_reports_do_not_depend_on_threads() {
    let dir = tempfile::tempdir().unwrap();
    for (cmd, extra) in [
        ("verify-eed", "--samples"),
        ("verify-ck", "--samples"),
        ("verify-sqrt-distance", "--samples"),
    ] {
        let one = rdlab(
            dir.path(),
            &[
                "--seed", "9", "--set", "n=16", cmd, extra, "64", "--out", "one.txt",
            ],
        );
        let four = rdlab(
            dir.path(),
            &[
                "--seed",
                "9",
                "--threads",
                "4",
                "--set",
                "n=16",
                cmd,
                extra,
                "64",
                "--out",
                "four.txt",
            ],
        );
        assert_eq!(
            one.status.code(),
            Some(0),
            "{cmd}: {}",
            String::from_utf8_lossy(&one.stderr)
        );
        assert_eq!(stdout(&one), stdout(&four));
        assert_eq!(
            fs::read(dir.path().join("one.txt")).unwrap(),
            fs::read(dir.path().join("four.txt")).unwrap()
        );
        assert!(stdout(&one).starts_with("PASS "), "{cmd}: {}", stdout(&one));
    }
}

#[test]
fn homogeneous_scan_report_grammar() {
    let dir = tempfile::tempdir().unwrap();
    let o = rdlab(
        dir.path(),
        &[
            "--set",
            "m1=2",
            "--set",
            "m2=2",
            "homogeneous-scan",
            "--n-grid",
            "1001",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let mut lines: Vec<&str> = out.lines().collect();
    let summary = lines.pop().unwrap();
    assert!(summary.starts_with("PASS homogeneous-scan constant_estimate="));
    for l in &lines {
        let (k, v) = l.split_once(": ").expect("key: value");
        assert!(!k.is_empty() && !v.is_empty());
    }
    let limit: f64 = lines
        .iter()
        .find_map(|l| l.strip_prefix("central_limit: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((limit - 1.0 / 3.0).abs() < 1e-6);
}

#[test]
fn config_overrides_replace_file_values() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.cfg"), "m1 = 3\nm2 = 1\nalpha = 2\n").unwrap();
    let o = rdlab(
        dir.path(),
        &["--config", "c.cfg", "equilibrium", "--m1", "2"],
    );
    assert_eq!(o.status.code(), Some(0));
    // α=2, β=γ=1, M=(2,1): c = 1/2, a = 1, b = 1/2
    let out = stdout(&o);
    let a: f64 = out.split_whitespace().next().unwrap()["a_inf=".len()..]
        .parse()
        .unwrap();
    assert!((a - 1.0).abs() < 1e-13, "{out}");
}
