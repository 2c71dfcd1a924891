use std::path::Path;
use std::process::{Command, Output};

use needd_core::models::{forward, wicksell_model};

fn needd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_needd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn quad_dump_csv() {
    let o = needd(&["quad", "dump", "--alpha", "0", "--beta", "1", "--n", "5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "index,node,weight");
    assert_eq!(lines.len(), 6);
    let total: f64 = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(2).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-14);
}

#[test]
fn filter_plot_support() {
    let o = needd(&["filter", "plot", "--m", "2", "--points", "11"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for line in text.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        if v[0] <= 0.5 || v[0] >= 2.0 {
            assert_eq!(v[1], 0.0);
        }
    }
}

#[test]
fn frame_build_check_render() {
    let dir = tempfile::tempdir().unwrap();
    let exact = dir.path().join("exact.bin");
    let o = needd(&[
        "frame",
        "build",
        "--basis",
        "jacobi",
        "--alpha",
        "0",
        "--beta",
        "1",
        "--jmax",
        "5",
        "--out",
        p(&exact),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(&std::fs::read(&exact).unwrap()[..4], b"NDLT");

    let o = needd(&["frame", "check", p(&exact)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("parseval"));

    let paper = dir.path().join("paper.bin");
    needd(&[
        "frame",
        "build",
        "--jmax",
        "5",
        "--nodes-per-level",
        "paper",
        "--out",
        p(&paper),
    ]);
    let o = needd(&["frame", "check", p(&paper)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("FAIL"));

    let o = needd(&[
        "frame",
        "render",
        "--frame",
        p(&exact),
        "--j",
        "3",
        "--nu",
        "4",
        "--points",
        "50",
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 51);
}

#[test]
fn io_and_config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        needd(&["frame", "check", p(&dir.path().join("missing.bin"))])
            .status
            .code(),
        Some(1)
    );
    let junk = dir.path().join("junk.bin");
    std::fs::write(&junk, b"not a frame").unwrap();
    assert_eq!(needd(&["frame", "check", p(&junk)]).status.code(), Some(1));
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"runs": 0}"#).unwrap();
    let out = dir.path().join("r.csv");
    assert_eq!(
        needd(&["simulate", "--config", p(&cfg), "--out", p(&out)])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(needd(&["no-such-command"]).status.code(), Some(1));
}

#[test]
fn model_dump() {
    let o = needd(&["model", "dump", "--kind", "wicksell", "--kmax", "3"]);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 5);
    let b0: f64 = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!((b0 - std::f64::consts::PI / 16.0).abs() < 1e-16);
}

#[test]
fn estimate_noise_free_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let frame = dir.path().join("f.bin");
    needd(&["frame", "build", "--jmax", "4", "--out", p(&frame)]);
    let model = wicksell_model(32).unwrap();
    let f: Vec<f64> = (0..33)
        .map(|k| if k <= 16 { 1.0 / (1.0 + k as f64) } else { 0.0 })
        .collect();
    let y = forward(&model, &f).unwrap();
    let obs = dir.path().join("obs.csv");
    let mut text = String::from("i,Y\n");
    for (i, v) in y.iter().enumerate() {
        text.push_str(&format!("{i},{v}\n"));
    }
    std::fs::write(&obs, text).unwrap();
    let out = dir.path().join("fhat.csv");
    let render = dir.path().join("render.csv");
    for method in ["needd", "svd-adapt"] {
        let o = needd(&[
            "estimate",
            "--model",
            "wicksell",
            "--frame",
            p(&frame),
            "--input",
            p(&obs),
            "--method",
            method,
            "--epsilon",
            "0",
            "--out",
            p(&out),
            "--render",
            p(&render),
            "--points",
            "16",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let got: Vec<f64> = std::fs::read_to_string(&out)
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect();
        for (a, b) in got.iter().zip(&f) {
            assert!((a - b).abs() < 1e-8, "{method}: {a} vs {b}");
        }
        assert_eq!(
            std::fs::read_to_string(&render).unwrap().lines().count(),
            17
        );
    }
    let o = needd(&[
        "estimate",
        "--input",
        p(&obs),
        "--method",
        "svd-proj",
        "--epsilon",
        "0",
        "--out",
        p(&out),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"targets": ["bumps"], "rsnr": [5], "n": 128, "runs": 2, "kmax": 64,
            "frame": {"alpha": 0, "beta": 1, "jmax": 5, "m": 2, "nodes-per-level": "exact"},
            "adaptive": {"gamma": 0.1, "logbase": "natural"}, "needd": {"kappa": 1.0606601717798214}}"#,
    )
    .unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let json = dir.path().join("a.json");
    assert!(needd(&[
        "simulate",
        "--config",
        p(&cfg),
        "--out",
        p(&a),
        "--json",
        p(&json)
    ])
    .status
    .success());
    assert!(needd(&["simulate", "--config", p(&cfg), "--out", p(&b)])
        .status
        .success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(std::fs::read_to_string(&json)
        .unwrap()
        .contains("\"seeds\""));
}

#[test]
fn rates_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("r.json");
    std::fs::write(
        &cfg,
        r#"{"kmax": 128, "cutoff": 64, "runs": 10, "frame": {"jmax": 6}}"#,
    )
    .unwrap();
    let o = needd(&["rates", "--config", p(&cfg)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("model,slope,slope_se,mu,gap_se"));
    assert_eq!(text.lines().count(), 3);
    std::fs::write(&cfg, r#"{"epsilons": [0.1, 0.01], "runs": 10}"#).unwrap();
    assert_eq!(
        needd(&["rates", "--config", p(&cfg)]).status.code(),
        Some(1)
    );
}
