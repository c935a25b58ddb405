use std::io::Write;
use std::net::TcpListener;
use std::process::{Command, Output, Stdio};

fn splitflow(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_splitflow"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    {
        let mut pipe = child.stdin.take().unwrap();
        if let Some(text) = stdin {
            pipe.write_all(text.as_bytes()).unwrap();
        }
    }
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn rows(o: &Output) -> Vec<Vec<String>> {
    stdout(o)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

const STEADY_NOISY: [&str; 4] = ["--channel", "30:2", "--channel", "20:6"];

#[test]
fn analyze_half_step() {
    let o = splitflow(&[&["analyze"], &STEADY_NOISY[..], &["--step", "0.5"]].concat(), None);
    assert_eq!(o.status.code(), Some(0));
    let r = rows(&o);
    assert_eq!(r[0], ["f", "mu", "var", "pareto"]);
    assert_eq!(r.len(), 4);
    assert_eq!(r[1][..3], ["0", "20", "36"]);
    assert_eq!(r[3][..3], ["1", "30", "4"]);
    let mu: f64 = r[2][1].parse().unwrap();
    let var: f64 = r[2][2].parse().unwrap();
    assert!((mu - 15.076829040319717).abs() < 1e-8);
    assert!((var - 1.0653372889915964).abs() < 1e-8);
    assert_eq!(r[2][3], "true");
}

#[test]
fn analyze_objective_footer() {
    let o = splitflow(&[&["analyze"], &STEADY_NOISY[..], &["--step", "0.01", "--objective", "min-variance"]].concat(), None);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().last().unwrap(), "# selected f=0.5");
    let o = splitflow(&[&["analyze"], &STEADY_NOISY[..], &["--step", "0.5", "--objective", "min-mean"]].concat(), None);
    assert_eq!(stdout(&o).lines().last().unwrap(), "# selected f=0.5");
}

#[test]
fn validation_exits_two() {
    let cases: &[&[&str]] = &[
        &["analyze", "--step", "0.5"],
        &["analyze", "--channel", "30:2", "--step", "0.5"],
        &["analyze", "--channel", "30:-2", "--channel", "20:6"],
        &["analyze", "--channel", "30:2", "--channel", "20:6", "--step", "0.7"],
        &["analyze", "--channel", "30:2", "--channel", "20:6", "--objective", "fastest"],
        &["simulate", "--channel", "30:2", "--channel", "20:6", "--trials", "0"],
        &["frontier", "--channel", "1:1", "--channel", "1:1", "--channel", "1:1", "--channel", "1:1", "--channel", "1:1"],
        &["no-such-command"],
    ];
    for args in cases {
        let o = splitflow(args, None);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn config_file_with_flag_override() {
    let dir = std::env::temp_dir().join(format!("splitflow-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("run.json");
    std::fs::write(&path, r#"{"channels":[{"mu":30,"sigma":2},{"mu":20,"sigma":6}],"grid":{"step":0.25}}"#).unwrap();
    let p = path.to_str().unwrap();
    let o = splitflow(&["--config", p, "analyze"], None);
    assert_eq!(rows(&o).len(), 6);
    let o = splitflow(&["--config", p, "analyze", "--step", "0.5"], None);
    assert_eq!(rows(&o).len(), 4);
    let out = dir.join("out.csv");
    let o = splitflow(&["--config", p, "--out", out.to_str().unwrap(), "analyze"], None);
    assert!(o.status.success() && o.stdout.is_empty());
    assert!(std::fs::read_to_string(&out).unwrap().starts_with("f,mu,var,pareto\n"));
    std::fs::write(&path, "{not json").unwrap();
    assert_eq!(splitflow(&["--config", p, "analyze"], None).status.code(), Some(2));
    let missing = dir.join("missing.json");
    assert_eq!(splitflow(&["--config", missing.to_str().unwrap(), "analyze"], None).status.code(), Some(4));
}

#[test]
fn frontier_output() {
    let o = splitflow(&[&["frontier"], &STEADY_NOISY[..], &["--step", "0.01"]].concat(), None);
    let r = rows(&o);
    assert_eq!(r[0], ["f_1", "f_2", "mu", "var"]);
    let fs: Vec<&str> = r[1..].iter().map(|row| row[0].as_str()).collect();
    assert_eq!(fs.first(), Some(&"0.39"));
    assert_eq!(fs.last(), Some(&"0.5"));
    assert_eq!(fs.len(), 12);
}

#[test]
fn simulate_is_reproducible_and_near_analytic() {
    let args = [&["--seed", "11", "simulate"], &STEADY_NOISY[..], &["--fractions", "0.5", "--trials", "100000"]].concat();
    let a = splitflow(&args, None);
    let b = splitflow(&args, None);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let r = rows(&a);
    assert_eq!(r[0], ["f", "empirical_mean", "empirical_var", "stderr", "trials"]);
    let mean: f64 = r[1][1].parse().unwrap();
    let se: f64 = r[1][3].parse().unwrap();
    assert!((mean - 15.076829040319717).abs() < 4.0 * se);
    assert_eq!(r[1][4], "100000");
}

#[test]
fn fit_from_stdin() {
    let o = splitflow(&["fit"], Some("10\n20\n"));
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["mu"], 15.0);
    assert!((v["sigma"].as_f64().unwrap() - 50f64.sqrt()).abs() < 1e-12);
    assert_eq!(v["n"], 2);
    for key in ["skewness", "excess_kurtosis", "normal_ok"] {
        assert!(v.get(key).is_some(), "{key}");
    }

    assert_eq!(splitflow(&["fit"], Some("10\n")).status.code(), Some(2));
    let bad = splitflow(&["fit"], Some("10\n20\nthirty\n"));
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("line 3"));
}

#[test]
fn fit_normal_samples() {
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
    let n = Normal::new(30.0, 4.0).unwrap();
    let text: String = (0..10_000).map(|_| format!("{}\n", n.sample(&mut rng))).collect();
    let o = splitflow(&["fit"], Some(&text));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["normal_ok"], true);
    assert!((v["mu"].as_f64().unwrap() - 30.0).abs() < 0.2);
}

fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

#[test]
fn netdemo_run_with_relay_process() {
    let addr = |p: u16| format!("127.0.0.1:{p}");
    let (pa, pr, pb) = (addr(free_port()), addr(free_port()), addr(free_port()));
    let o = splitflow(
        &[
            "--seed", "5", "netdemo", "run", "--payload", "100000", "--trials", "3", "--f-grid", "0,0.5,1",
            "--a-delay", "0.002", "--a-jitter", "0.0005", "--b-delay", "0.001", "--b-jitter", "0.0005",
            "--listen-a", &pa, "--relay-listen", &pr, "--listen-b", &pb,
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&o);
    assert_eq!(r[0], ["trial_id", "f", "bytes_a", "bytes_b", "completion_ns", "status"]);
    assert_eq!(r.len(), 10);
    for row in &r[1..] {
        assert_eq!(row[5], "ok");
        let (a, b): (u64, u64) = (row[2].parse().unwrap(), row[3].parse().unwrap());
        assert_eq!(a + b, 100_000);
        let expected_a = match row[1].as_str() {
            "0" => 0,
            "0.5" => 50_000,
            "1" => 100_000,
            other => panic!("unexpected f {other}"),
        };
        assert_eq!(a, expected_a);
    }
}

#[test]
fn optdemo_small() {
    let o = splitflow(&["--seed", "2", "optdemo", "--n", "300", "--d", "3", "--trials", "1", "--f-grid", "0.5", "--jitter-a", "0:0", "--jitter-b", "0:0"], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&o);
    assert_eq!(r[0], ["trial_id", "f", "completion_ns", "quality_gap", "status"]);
    assert_eq!(r[1][4], "ok");
    assert!(r[1][3].parse::<f64>().unwrap() < 0.05);
    let bad = splitflow(&["optdemo", "--jitter-a", "fast"], None);
    assert_eq!(bad.status.code(), Some(2));
}
