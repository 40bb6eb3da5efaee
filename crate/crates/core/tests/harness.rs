//! End-to-end runs through the library API and the command-line tool.

use std::path::PathBuf;
use std::process::Command;

use fqlsni::controllers::{Channel, ControllerKind};
use fqlsni::harness::run::{replay, run_scenario, simulate};
use fqlsni::harness::{PerChannel, ReferenceProfile, ScenarioConfig};

fn scenarios_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fqlsni"))
}

#[test]
fn shipped_scenarios_load() {
    let nominal = ScenarioConfig::load(&scenarios_dir().join("nominal.toml")).unwrap();
    assert_eq!(nominal, ScenarioConfig::nominal());
    let disturbed = ScenarioConfig::load(&scenarios_dir().join("disturbed.toml")).unwrap();
    assert_eq!(disturbed, ScenarioConfig::disturbed());
}

#[test]
fn files_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut cfg = ScenarioConfig::disturbed().with_seed(7);
    cfg.run.duration = 8.0;
    cfg.run.output_dir = Some(a.path().to_path_buf());
    let ma = run_scenario(&cfg).unwrap();
    cfg.run.output_dir = Some(b.path().to_path_buf());
    let mb = run_scenario(&cfg).unwrap();
    assert_eq!(ma.channels, mb.channels);
    for f in ["trajectory.csv", "metrics.csv", "qtables.csv"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{f}");
    }
    let first = std::fs::read_to_string(a.path().join("trajectory.csv")).unwrap();
    assert!(first.starts_with("# fqlsni trajectory v1\ntime,ref_roll,"));
}

#[test]
fn seed_changes_learning_and_wind() {
    let mut cfg = ScenarioConfig::disturbed();
    cfg.run.duration = 3.0;
    let a = simulate(&cfg.clone().with_seed(1)).log;
    let b = simulate(&cfg.clone().with_seed(2)).log;
    assert_ne!(a.samples[150].wind, b.samples[150].wind);
    assert_ne!(a.samples[150].gamma, b.samples[150].gamma);
    assert!(replay(&cfg).unwrap().identical);
}

#[test]
fn zero_task_rests_for_every_controller() {
    for kind in [ControllerKind::Pid, ControllerKind::Sni, ControllerKind::FuzzySni, ControllerKind::FuzzyQlSni] {
        let mut cfg = ScenarioConfig::nominal().with_controller(kind);
        cfg.references = PerChannel::splat(ReferenceProfile::zero());
        let m = run_scenario(&cfg).unwrap();
        for ch in Channel::ALL {
            assert!(m.channel(ch).rmse < 1e-12, "{kind:?} {ch:?}");
        }
    }
}

#[test]
fn cli_run_writes_outputs() {
    let out = tempfile::tempdir().unwrap();
    let status = bin()
        .arg("run")
        .arg(scenarios_dir().join("nominal.toml"))
        .args(["--seed", "3", "--out"])
        .arg(out.path())
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let stdout = String::from_utf8_lossy(&status.stdout);
    assert!(stdout.contains("roll") && stdout.contains("fuzzy-ql-sni"));
    let metrics = std::fs::read_to_string(out.path().join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 6);
}

#[test]
fn cli_check_sni_exit_codes() {
    assert!(bin().args(["check-sni", "5", "0.1", "6"]).status().unwrap().success());
    let bad = bin().args(["check-sni", "2", "0.1", "1"]).status().unwrap();
    assert_eq!(bad.code(), Some(1));
    let invalid = bin().args(["check-sni", "--", "-1", "0.1", "1"]).status().unwrap();
    assert_eq!(invalid.code(), Some(2));
}

#[test]
fn cli_sweep_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("short.toml");
    std::fs::write(&cfg_path, "[run]\nduration = 6.0\n").unwrap();
    let out = bin()
        .arg("sweep")
        .arg(&cfg_path)
        .args(["--param", "eta", "--values", "0.05,0.1,0.2,0.5"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 2 + 4);
    assert!(bin().arg("replay").arg(&cfg_path).status().unwrap().success());
}

#[test]
fn cli_reports_divergence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("unstable.toml");
    std::fs::write(
        &cfg_path,
        "[run]\nduration = 6.0\n\n[controllers]\nroll = \"pid\"\npitch = \"sni\"\nyaw = \"sni\"\nz = \"sni\"\n\n[pid.roll]\nkp = 10000.0\n\n[pid.pitch]\n[pid.yaw]\n[pid.z]\n",
    )
    .unwrap();
    let out = bin().arg("run").arg(&cfg_path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("diverged"));
}
