use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn slr_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slr-lab")).args(args).output().unwrap()
}

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs"))
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn help_lists_every_subcommand_and_flag() {
    let o = slr_lab(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    for s in ["contour", "hist", "bins", "rf-study", "bounds", "kl", "all"] {
        assert!(text.contains(s), "{s}");
    }
    let o = slr_lab(&["all", "--help"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    for f in ["--config", "--seed", "--out", "--threads", "--n-train", "--n-eval"] {
        assert!(text.contains(f), "{f}");
    }
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(slr_lab(&[]).status.code(), Some(1));
    assert_eq!(slr_lab(&["plot"]).status.code(), Some(1));
    assert_eq!(slr_lab(&["hist", "--n-eval", "0"]).status.code(), Some(1));
}

#[test]
fn contour_smoke() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("simple.json");
    let o = slr_lab(&["contour", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(tmp.path().join("contour/contour.csv")).unwrap();
    assert!(csv.starts_with("x,y,log_lr,log_slr\n"));
    assert_eq!(csv.lines().count(), 201 * 201 + 1);
    assert!(tmp.path().join("contour/contour.meta.json").exists());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().count(), 1);
    assert!(stdout.contains("contour.csv"));
}

#[test]
fn missing_config_names_the_path() {
    let o = slr_lab(&["contour", "--config", "/nonexistent/cfg.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("/nonexistent/cfg.json"));
}

#[test]
fn config_errors_name_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"family": "mvn", "mu_x": [0, 0], "mu_b": [0, 0], "Sigma_w": [[1, 0], [0, -1]], "Sigma_b": [[1, 0], [0, 1]]}"#, "Sigma_w"),
        (r#"{"family": "univariate_gaussian", "mu_x": 0, "mu_b": 0, "sigma_w": 0.2}"#, "sigma_b"),
        (r#"{"seed": 1, "colour": "red"}"#, "colour"),
    ];
    for (i, (text, field)) in cases.iter().enumerate() {
        let p = tmp.path().join(format!("c{i}.json"));
        fs::write(&p, text).unwrap();
        let o = slr_lab(&["rf-study", "--config", p.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(1), "{text}");
        assert!(stderr(&o).contains(field), "{}", stderr(&o));
    }
}

#[test]
fn subcommands_reject_unsupported_settings() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let mvn = configs().join("mvn_default.json");
    let o = slr_lab(&["contour", "--config", mvn.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(1));
    let o = slr_lab(&["all", "--config", configs().join("simple.json").to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("family"));
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 0);
}

#[test]
fn writes_only_below_the_output_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("nested/out");
    let o = slr_lab(&["hist", "--n-eval", "300", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let top: Vec<_> = fs::read_dir(tmp.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(top, vec!["nested"]);
    assert!(out.join("hist/disc_hist.csv").exists());
}

#[test]
fn reruns_and_thread_caps_give_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let out = tmp.path().join(name);
        let o = slr_lab(&[
            "rf-study",
            "--config",
            configs().join("beta_default.json").to_str().unwrap(),
            "--n-train",
            "600",
            "--n-eval",
            "300",
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        fs::read(out.join("rf_beta/scatter.csv")).unwrap()
    };
    let a = run("a", "1");
    assert_eq!(a, run("b", "1"));
    assert_eq!(a, run("c", "3"));
}

#[test]
fn seed_flag_overrides_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("simple.json");
    let run = |seed: &str| {
        let out = tmp.path().join(seed);
        let o = slr_lab(&[
            "hist",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            seed,
            "--n-eval",
            "100",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        let meta = fs::read_to_string(out.join("hist/disc_hist.meta.json")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&meta).unwrap();
        (v["seed"].as_u64().unwrap(), fs::read(out.join("hist/disc_hist.csv")).unwrap())
    };
    let (s7, a) = run("7");
    let (s8, b) = run("8");
    assert_eq!((s7, s8), (7, 8));
    assert_ne!(a, b);
}
