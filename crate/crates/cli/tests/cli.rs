//! End-to-end runs of the `multiload` binary.

use assert_cmd::Command;
use predicates::prelude::*;

const HEADER: &str = "algorithm,snr_db,avg_throughput_bits,avg_power_mw,avg_ber,alpha_used_mean,analytic_throughput_bits,analytic_power_mw";

fn multiload() -> Command {
    Command::cargo_bin("multiload").unwrap()
}

#[test]
fn sweep_writes_csv_to_stdout() {
    multiload()
        .args([
            "sweep",
            "--subcarriers",
            "16",
            "--realizations",
            "20",
            "--snr-grid",
            "0:30:4",
        ])
        .assert()
        .success()
        .stdout(predicate::str::starts_with(HEADER))
        .stdout(predicate::str::contains("continuous,"));
}

#[test]
fn sweep_output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        multiload()
            .args([
                "sweep",
                "--fast",
                "--subcarriers",
                "32",
                "--seed",
                "3",
                "--power-budget",
                "0.1",
            ])
            .arg("--output")
            .arg(&path)
            .assert()
            .success();
        std::fs::read(path).unwrap()
    };
    assert_eq!(run("a.csv"), run("b.csv"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.conf");
    std::fs::write(
        &cfg,
        "subcarriers = 8\nrealizations = 5\nsnr_grid = 10, 20\nformat = json\n",
    )
    .unwrap();
    let out = multiload()
        .arg("--config")
        .arg(&cfg)
        .args(["compare", "--snr-grid", "25"])
        .assert()
        .success()
        .get_output()
        .stdout
        .clone();
    let text = String::from_utf8(out).unwrap();
    assert!(text.trim_start().starts_with('['));
    assert_eq!(text.matches("\"algorithm\"").count(), 4);
    assert!(text.contains("\"snr_db\""));
}

#[test]
fn allocate_with_explicit_cnr() {
    multiload()
        .args(["allocate", "--cnr", "14,100,5", "--format", "json"])
        .assert()
        .success()
        .stdout(predicate::str::contains("\"bits\": 2"))
        .stderr(predicate::str::contains("active 2/3"));
}

#[test]
fn gap_reports_summary() {
    multiload()
        .args(["gap", "--realizations", "10"])
        .assert()
        .success()
        .stderr(predicate::str::contains("bound violations 0"));
}

#[test]
fn analytic_and_verify_succeed() {
    multiload()
        .args(["analytic", "--snr-grid", "0:40:5"])
        .assert()
        .success()
        .stdout(predicate::str::starts_with(
            "mean_cnr_db,analytic_throughput_bits,analytic_power_mw",
        ));
    multiload()
        .args(["verify", "--realizations", "5", "--subcarriers", "32"])
        .assert()
        .success()
        .stderr(predicate::str::contains("0 failed"));
}

#[test]
fn configuration_errors_exit_with_2() {
    multiload()
        .args(["sweep", "--alpha", "1.5"])
        .assert()
        .code(2);
    multiload()
        .args(["sweep", "--algorithms", "exhaustive"])
        .assert()
        .code(2)
        .stderr(predicate::str::contains("at most 8"));
    multiload().args(["sweep", "--bogus"]).assert().code(2);
}

#[test]
fn invalid_channel_exits_with_2() {
    multiload()
        .args(["allocate", "--cnr", "0,-1"])
        .assert()
        .code(2)
        .stderr(predicate::str::contains("invalid argument"));
}

#[test]
fn unwritable_output_exits_with_4() {
    multiload()
        .args(["analytic", "--output", "/nonexistent-dir/out.csv"])
        .assert()
        .code(4)
        .stderr(predicate::str::contains("/nonexistent-dir/out.csv"));
}
