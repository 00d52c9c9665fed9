use std::path::PathBuf;

use fabricmodel::cli::execute;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("fabricmodel").chain(args.iter().copied());
    let code = execute(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fabricmodel-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["frobnicate"]).0, 2);
    assert_eq!(run(&["metrics", "--convention", "sideways"]).0, 2);
    assert_eq!(run(&["collective", "--algo", "ring", "--bytes", "lots"]).0, 2);
    assert_eq!(run(&["route", "e0", "nowhere"]).0, 2);
    let (code, _, err) = run(&["--preset", "aurora", "--config", "x.conf", "census"]);
    assert_eq!(code, 2);
    assert!(err.contains("--config") || err.contains("--preset"), "{err}");
}

#[test]
fn help_and_version_exit_0() {
    assert_eq!(run(&["--help"]).0, 0);
    assert_eq!(run(&["--version"]).0, 0);
}

#[test]
fn metrics_prints_injection() {
    let (code, out, _) = run(&["metrics", "--preset", "aurora"]);
    assert_eq!(code, 0);
    let line = out.lines().find(|l| l.starts_with("injection")).unwrap();
    assert!(line.contains("2.1248"), "{line}");
    let (_, csv, _) = run(&["metrics", "--format", "csv"]);
    assert!(csv.starts_with("metric,value_bytes_per_s,convention,paper_value,relative_error\n"));
}

#[test]
fn trivial_collective_is_zero() {
    let (code, out, _) = run(&["collective", "--algo", "ring", "--nodes", "1", "--bytes", "0", "--format", "csv"]);
    assert_eq!(code, 0);
    let row = out.lines().nth(1).unwrap();
    let seconds: f64 = row.split(',').next_back().unwrap().parse().unwrap();
    assert_eq!(seconds, 0.0, "{out}");
}

#[test]
fn non_power_of_two_is_a_model_error() {
    let (code, _, err) = run(&["collective", "--algo", "rabenseifner", "--nodes", "6", "--bytes", "1GB"]);
    assert_eq!(code, 2);
    assert!(err.starts_with("error:"), "{err}");
}

#[test]
fn routes() {
    let (code, out, _) = run(&["route", "e0", "e600", "--format", "csv"]);
    assert_eq!(code, 0);
    assert!(out.lines().count() >= 2);
    let (code, out, _) = run(&["route", "e0", "e600", "--valiant", "g5", "--format", "csv"]);
    assert_eq!(code, 0);
    assert!(out.contains("valiant"));
    assert_eq!(run(&["route", "e0", "e0"]).0, 2);
}

#[test]
fn reproduce_passes_and_is_stable() {
    let (a_code, a, _) = run(&["reproduce", "--preset", "aurora"]);
    let (b_code, b, _) = run(&["reproduce", "--preset", "aurora"]);
    assert_eq!((a_code, b_code), (0, 0));
    assert_eq!(a, b);
    assert!(a.lines().filter(|l| l.contains("PASS")).count() >= 12);
    assert!(!a.contains("FAIL"));
}

#[test]
fn sampled_diameter_follows_seed() {
    let (code, first, _) = run(&["diameter", "--pairs", "500"]);
    assert_eq!(code, 0);
    let (_, second, _) = run(&["diameter", "--pairs", "500"]);
    assert_eq!(first, second);
}

#[test]
fn generated_links_round_trip() {
    let path = scratch("aurora_links.csv");
    let p = path.to_str().unwrap();
    assert_eq!(run(&["generate", "-o", p]).0, 0);
    for cmd in ["census", "metrics", "validate"] {
        let (code, from_preset, _) = run(&[cmd]);
        let (code_links, from_links, _) = run(&[cmd, "--links", p]);
        assert_eq!((code, code_links), (0, 0), "{cmd}");
        assert_eq!(from_preset, from_links, "{cmd}");
    }
    std::fs::remove_file(path).ok();
}

#[test]
fn config_files() {
    let good = scratch("small.conf");
    std::fs::write(
        &good,
        "[fabric]\ncompute_groups = 4\nchassis_per_group = 1\nswitches_per_chassis = 4\nnodes_per_chassis = 2\nnics_per_node = 4\n",
    )
    .unwrap();
    let (code, out, err) = run(&["--config", good.to_str().unwrap(), "validate"]);
    assert_eq!(code, 0, "{err}");
    assert!(!out.is_empty());

    let bad = scratch("bad.conf");
    std::fs::write(&bad, "preset = \"aurora\"\n[fabric]\ncompute_groups = -1\n").unwrap();
    let (code, _, err) = run(&["--config", bad.to_str().unwrap(), "census"]);
    assert_eq!(code, 2);
    assert!(err.contains("compute_groups"), "{err}");

    assert_eq!(run(&["--config", "/nonexistent/fabric.conf", "census"]).0, 2);
}

#[test]
fn every_report_command_runs() {
    for cmd in [&["nodespec"][..], &["storage"], &["census"], &["validate"]] {
        for format in ["table", "csv"] {
            let mut args = cmd.to_vec();
            args.extend(["--format", format]);
            let (code, out, err) = run(&args);
            assert_eq!(code, 0, "{args:?}: {err}");
            assert!(!out.is_empty(), "{args:?}");
        }
    }
}

#[test]
fn collective_sweep() {
    let (code, out, _) = run(&[
        "collective", "--algo", "ring", "--bytes", "1GB", "--ranks-per-node", "12", "--sweep", "16:512", "--format",
        "csv",
    ]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 7, "{out}");
    assert_eq!(run(&["collective", "--algo", "ring", "--bytes", "1GB", "--sweep", "512:16"]).0, 2);
}
