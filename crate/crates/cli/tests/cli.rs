use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use consensus_attack::scenario::{
    write_scenario, AttackSpec, KernelSpec, LinkSpec, NoiseSpec, ScenarioConfig, TopologySource,
    TopologySpec,
};
use proptest::prelude::*;

const BIN: &str = env!("CARGO_BIN_EXE_consensus-attack");

fn fixture(name: &str) -> String {
    format!("{}/fixtures/{name}.toml", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--out")
        .arg(out)
        .arg("--quiet")
        .env_remove("CONSENSUS_ATTACK_OUT")
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, file: &str) -> String {
    fs::read_to_string(dir.join(file)).unwrap()
}

#[test]
fn simulate_writes_trajectory_without_control_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["simulate", "--scenario", &fixture("two_node")], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let traj = read(dir.path(), "trajectory.csv");
    assert_eq!(traj.lines().next(), Some("t,x1,x2"));
    assert_eq!(traj.lines().count(), 402);
    assert!(!dir.path().join("control.csv").exists());
    assert!(!dir.path().join("broken_edges.csv").exists());
    let summary: serde_json::Value = serde_json::from_str(&read(dir.path(), "summary.json")).unwrap();
    let j = summary["objective"].as_f64().unwrap();
    assert!((j - (1.0 - (-8.0f64).exp()) / 2.0).abs() < 1e-8);
}

#[test]
fn consensus_start_reports_zero_objective() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["simulate", "--scenario", &fixture("consensus_k4")], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let summary: serde_json::Value = serde_json::from_str(&read(dir.path(), "summary.json")).unwrap();
    assert_eq!(summary["objective"].as_f64(), Some(0.0));
}

#[test]
fn attack1_outputs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        let out = run(&["attack1", "--scenario", &fixture("paper_k4")], dir);
        assert_eq!(out.status.code(), Some(0));
    }
    for file in ["trajectory.csv", "broken_edges.csv", "summary.json"] {
        assert_eq!(fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap());
    }
    let traj = read(a.path(), "trajectory.csv");
    assert_eq!(traj.lines().count(), 402);
    let edges = read(a.path(), "broken_edges.csv");
    assert_eq!(edges.lines().next(), Some("t,edge_i,edge_j"));
    // two broken links on each of the 400 steps
    assert_eq!(edges.lines().count(), 801);
    assert!(edges.lines().skip(1).all(|l| l.ends_with(",1,3") || l.ends_with(",1,4")));
}

#[test]
fn attack2_writes_costates_and_control() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["attack2", "--scenario", &fixture("paper_k4_noise"), "--steps", "100"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let traj = read(dir.path(), "trajectory.csv");
    assert_eq!(traj.lines().next(), Some("t,x1,x2,x3,x4,p1,p2,p3,p4"));
    assert_eq!(traj.lines().count(), 102);
    let last = traj.lines().last().unwrap();
    assert!(last.ends_with(",0.0000000000000000e0,0.0000000000000000e0,0.0000000000000000e0,0.0000000000000000e0"));
    let control = read(dir.path(), "control.csv");
    assert_eq!(control.lines().next(), Some("t,u1,u2,u3,u4"));
    let summary: serde_json::Value = serde_json::from_str(&read(dir.path(), "summary.json")).unwrap();
    assert_eq!(summary["noise"]["converged"], serde_json::Value::Bool(true));
    assert!(summary["noise"]["multiplier_max"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn usage_and_config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = run(&["simulate", "--scenario", "no/such/file.toml"], dir.path());
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("no/such/file.toml"));

    let wrong = run(&["attack2", "--scenario", &fixture("paper_k4")], dir.path());
    assert_eq!(wrong.status.code(), Some(2));

    let unknown = run(&["verify", "--frobnicate"], dir.path());
    assert_eq!(unknown.status.code(), Some(2));

    let no_scenario = run(&["attack1"], dir.path());
    assert_eq!(no_scenario.status.code(), Some(2));

    let bad = dir.path().join("bad.toml");
    fs::write(
        &bad,
        fs::read_to_string(fixture("paper_k4")).unwrap().replace("ell = 2", "ell = 9"),
    )
    .unwrap();
    let over = run(&["attack1", "--scenario", bad.to_str().unwrap()], dir.path());
    assert_eq!(over.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&over.stderr);
    assert!(msg.contains("bad.toml:6") && msg.contains("attack"), "{msg}");
}

#[test]
fn verify_passes_and_names_injected_fault() {
    let dir = tempfile::tempdir().unwrap();
    let ok = run(&["verify", "--steps", "50"], dir.path());
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));
    let stdout = String::from_utf8_lossy(&ok.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 10);

    let bad = run(&["verify", "--steps", "50", "--inject-sign-flip"], dir.path());
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("greedy-mp-consistency"));
}

#[test]
fn reproduce_paper_writes_every_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["reproduce-paper", "--steps", "100"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("w13(0)") && !table.contains("FAIL"));
    for sub in ["no_attack", "attack1", "attack2"] {
        assert!(dir.path().join(sub).join("summary.json").exists());
    }
    assert!(!dir.path().join("no_attack/control.csv").exists());
    assert!(dir.path().join("attack2/control.csv").exists());
    assert!(dir.path().join("checks.csv").exists());
}

#[test]
fn output_directory_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(BIN)
        .args(["simulate", "--quiet", "--scenario", &fixture("two_node")])
        .env("CONSENSUS_ATTACK_OUT", dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.path().join("summary.json").exists());
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6f64..1e6, -1e-6f64..1e-6, Just(0.0), Just(1.0 / 3.0)]
}

fn config() -> impl Strategy<Value = ScenarioConfig> {
    let topology = prop_oneof![
        (2usize..6, prop::collection::vec((1usize..6, 1usize..6, 0.01f64..5.0), 0..6))
            .prop_map(|(n, edges)| TopologySource::Inline(TopologySpec { n, edges })),
        "[a-z]{1,8}\\.toml".prop_map(|p| TopologySource::File(p.into())),
    ];
    let kernel = prop_oneof![
        (0.01f64..10.0).prop_map(KernelSpec::Constant),
        prop::collection::vec((0.0f64..5.0, 0.01f64..5.0), 1..5).prop_map(KernelSpec::Table),
    ];
    let attack = prop_oneof![
        Just(AttackSpec::None),
        (0usize..10).prop_map(|ell| AttackSpec::Link(LinkSpec { ell })),
        (0.01f64..10.0, prop::option::of(0.01f64..0.99), prop::option::of(1e-4f64..0.1))
            .prop_map(|(p_max, safety, nu)| AttackSpec::Noise(NoiseSpec { p_max, safety, nu })),
    ];
    (
        "[a-zA-Z0-9_ \"\\\\-]{0,12}",
        prop::collection::vec(finite(), 0..6),
        0.01f64..100.0,
        1usize..2000,
        attack,
        prop::option::of(any::<u32>().prop_map(u64::from)),
        topology,
        kernel,
    )
        .prop_map(|(name, x0, horizon, steps, attack, seed, topology, kernel)| ScenarioConfig {
            name,
            x0,
            horizon,
            steps,
            attack,
            seed,
            topology,
            kernel,
        })
}

proptest! {
    #[test]
    fn scenario_text_round_trips(c in config()) {
        let text = write_scenario(&c);
        let back: ScenarioConfig = toml::from_str(&text).unwrap();
        prop_assert_eq!(back, c);
    }
}
