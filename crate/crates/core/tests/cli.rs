use std::process::{Command, Output};

fn wsn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wsn-fusion"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn sweep_to_stdout() {
    let out = wsn(&["run", "--sweep", "N=1:2:5", "--rules", "or,majority"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# wsn-fusion sweep v1"));
    assert_eq!(
        lines[1],
        "sweep_value,rule,analytic_pe,simulated_pe,std_err,type_i,type_ii,f0,f1"
    );
    assert_eq!(lines.len(), 2 + 3 * 2);
}

#[test]
fn sweep_to_file_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    let csv = dir.path().join("out.csv");
    std::fs::write(
        &cfg,
        "# three sensors, two hops\nn = 3\nhops = 0.1, 0.05\nmode = both\ntrials = 2\nsweep = x_th=3,4.5\n",
    )
    .unwrap();
    let out = wsn(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
        "--eta",
        "500",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.contains("mode=both"));
    assert_eq!(text.lines().count(), 2 + 2 * 3);
}

#[test]
fn config_errors_exit_2() {
    assert_eq!(wsn(&["run", "--set", "bogus=1"]).status.code(), Some(2));
    assert_eq!(wsn(&["run", "--sweep", "Q=1:1:3"]).status.code(), Some(2));
    assert_eq!(wsn(&["run", "--hops", "0.1,1.4"]).status.code(), Some(2));
    assert_eq!(wsn(&["run", "--rules", "kofn:9"]).status.code(), Some(2));
    assert_eq!(
        wsn(&["run", "--config", "/no/such/file.cfg"]).status.code(),
        Some(2)
    );
    assert_eq!(wsn(&["fig", "3"]).status.code(), Some(2));
    assert_eq!(wsn(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_3() {
    let out = wsn(&["run", "--out", "/nonexistent/dir/x.csv"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn reference_table() {
    let out = wsn(&["table2", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for rule in ["OR", "AND", "MAJORITY"] {
        assert!(text.lines().any(|l| l.starts_with(rule)), "{text}");
    }
    assert!(text.contains("0.383"));
}

#[test]
fn figure_series() {
    let out = wsn(&["fig", "8"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("axis=M"));
    assert_eq!(stdout(&out).lines().count(), 2 + 20 * 3);
}

#[test]
fn trace_table() {
    let out = wsn(&["trace", "--start", "0", "--end", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.lines().next(), Some("n i j S_ij"));
    assert_eq!(text.lines().count(), 1 + 2 * 3 * 2);
    assert_eq!(
        wsn(&["trace", "--start", "5", "--end", "400"])
            .status
            .code(),
        Some(2)
    );
}
