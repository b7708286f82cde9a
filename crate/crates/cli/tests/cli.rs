use std::fs;
use std::path::Path;
use std::process::Command;

use risdeploy_cli::output::parse_scenario_echo;
use risdeploy_cli::ScenarioFile;

const COARSE: &str = r#"
[layout]
grid_resolution = 2.0

[search]
x_values = [-20.0, 0.0, 20.0]
h_values = [8.0, 12.0]
tilt_resolution_deg = 15.0
inner_draws = 5

[run]
n_draws = 12
seed = 3
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_risdeploy"))
}

fn run_ok(args: &[&str]) {
    let out = bin().args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn exit_code(args: &[&str]) -> i32 {
    bin().args(args).output().unwrap().status.code().unwrap()
}

fn write_scenario(dir: &Path, text: &str) -> String {
    let p = dir.join("scenario.toml");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn data_rows(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

const ALL: [(&str, &[&str]); 6] = [
    ("snapshot", &["status.csv", "rate.csv", "summary.csv"]),
    ("sweep-x", &["sweep.csv", "sweep_trace.csv"]),
    ("optimize", &["optimize.csv", "optimize_trace.csv"]),
    ("cdf", &["cdf_ris.csv", "cdf_no_ris.csv"]),
    ("coverage", &["coverage.csv"]),
    ("fraunhofer", &["fraunhofer.csv"]),
];

#[test]
fn every_command_writes_headed_files_that_rerun_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = write_scenario(tmp.path(), COARSE);
    let want = ScenarioFile::from_toml(COARSE).unwrap();
    for (cmd, files) in ALL {
        let a = tmp.path().join(format!("{cmd}-a"));
        let b = tmp.path().join(format!("{cmd}-b"));
        run_ok(&[cmd, "--scenario", &scenario, "--out", a.to_str().unwrap(), "--threads", "1"]);
        run_ok(&[cmd, "--scenario", &scenario, "--out", b.to_str().unwrap(), "--threads", "5"]);
        for f in files {
            let ta = fs::read_to_string(a.join(f)).unwrap();
            let tb = fs::read_to_string(b.join(f)).unwrap();
            assert_eq!(ta, tb, "{cmd}/{f} differs across thread counts");
            assert!(ta.starts_with("# risdeploy "), "{cmd}/{f}");
            assert!(ta.contains("# rng: chacha20/"), "{cmd}/{f}");
            assert!(ta.contains("# seed: 3\n"), "{cmd}/{f}");
            let mut echoed = parse_scenario_echo(&ta).unwrap();
            if cmd == "snapshot" {
                echoed.blockers.positions = want.blockers.positions.clone();
            }
            assert_eq!(echoed, want, "{cmd}/{f}");
            assert!(data_rows(&ta).len() >= 2, "{cmd}/{f}");
        }
    }
}

#[test]
fn flags_override_the_scenario_and_are_echoed() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = write_scenario(tmp.path(), COARSE);
    let out = tmp.path().join("o");
    run_ok(&["coverage", "--scenario", &scenario, "--out", out.to_str().unwrap(), "--seed", "8", "--draws", "4"]);
    let text = fs::read_to_string(out.join("coverage.csv")).unwrap();
    let echoed = parse_scenario_echo(&text).unwrap();
    assert_eq!((echoed.run.seed, echoed.run.n_draws), (8, 4));

    // Rerunning from the echoed header reproduces the file.
    let again = write_scenario(&tmp.path().join("o"), &echoed.to_toml());
    let out2 = tmp.path().join("o2");
    run_ok(&["coverage", "--scenario", &again, "--out", out2.to_str().unwrap()]);
    assert_eq!(text, fs::read_to_string(out2.join("coverage.csv")).unwrap());
}

#[test]
fn mirrored_blocker_mirrors_the_snapshot() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = write_scenario(tmp.path(), COARSE);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    // Left edges 7.3 and -7.3 - 4.8 describe mirror-image screens.
    run_ok(&["snapshot", "--scenario", &scenario, "--out", a.to_str().unwrap(), "--blockers", "7.3"]);
    run_ok(&["snapshot", "--scenario", &scenario, "--out", b.to_str().unwrap(), "--blockers=-12.1"]);
    for f in ["status.csv", "rate.csv"] {
        let ta = fs::read_to_string(a.join(f)).unwrap();
        let tb = fs::read_to_string(b.join(f)).unwrap();
        let (ra, rb) = (data_rows(&ta), data_rows(&tb));
        assert_eq!(ra[0], rb[0], "axis row");
        for (la, lb) in ra[1..].iter().zip(&rb[1..]) {
            let ca: Vec<&str> = la.split(',').collect();
            let mut cb: Vec<&str> = lb.split(',').collect();
            cb[1..].reverse();
            assert_eq!(ca, cb, "{f}");
        }
        assert_ne!(ra, rb, "{f}: the blocker should break the symmetry of a single file");
    }
}

#[test]
fn fraunhofer_report_shows_both_distances() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin().args(["fraunhofer", "--out", tmp.path().to_str().unwrap()]).output().unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("56568.5 m") && stdout.contains("quoted value 400 m"), "{stdout}");
    let table = fs::read_to_string(tmp.path().join("fraunhofer.csv")).unwrap();
    assert_eq!(data_rows(&table)[1], "40000,0.0025,0.0025,0.005,56568.5,400");
}

#[test]
fn exit_codes_separate_bad_input_from_failed_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let out = out.to_str().unwrap();
    let bad_key = write_scenario(tmp.path(), "[layout]\nhbs = 3\n");
    assert_eq!(exit_code(&["coverage", "--scenario", &bad_key, "--out", out]), 2);
    let bad_value = write_scenario(tmp.path(), "[layout]\nlane_y = 40\n");
    assert_eq!(exit_code(&["coverage", "--scenario", &bad_value, "--out", out]), 2);
    let no_blockers = write_scenario(tmp.path(), "[blockers]\npositions = []\n");
    assert_eq!(exit_code(&["snapshot", "--scenario", &no_blockers, "--out", out]), 2);
    assert_eq!(exit_code(&["snapshot", "--blockers", "46", "--out", out]), 2);
    let steep = write_scenario(tmp.path(), "[ris]\nheight = 4\ntilt_deg = 80\n");
    assert_eq!(exit_code(&["snapshot", "--scenario", &steep, "--out", out]), 2);
    assert_eq!(exit_code(&["coverage", "--scenario", "/nonexistent/s.toml"]), 2);

    // Output path is an existing file: the run itself fails.
    let blocked = tmp.path().join("file");
    fs::write(&blocked, "x").unwrap();
    assert_eq!(exit_code(&["fraunhofer", "--out", blocked.to_str().unwrap()]), 1);
}

#[test]
fn thread_count_can_come_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = write_scenario(tmp.path(), COARSE);
    let out = tmp.path().join("env");
    let status = bin()
        .args(["coverage", "--scenario", &scenario, "--out", out.to_str().unwrap()])
        .env("RISDEPLOY_THREADS", "2")
        .status()
        .unwrap();
    assert!(status.success());
    let bad = bin()
        .args(["coverage", "--scenario", &scenario, "--out", out.to_str().unwrap()])
        .env("RISDEPLOY_THREADS", "many")
        .status()
        .unwrap();
    assert_eq!(bad.code(), Some(2));
}
