use std::path::Path;
use std::process::{Command, Output};

fn gipps(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gipps"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn step_at_desired_speed() {
    let o = gipps(&[
        "step", "--a", "2.0", "--t", "1.0", "--vstar", "20.0", "--v", "20.0",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("va = 20.000000"), "{text}");
    assert!(text.contains("cycles 4"));
}

#[test]
fn step_from_rest() {
    let o = gipps(&[
        "step", "--a", "2.0", "--t", "0.5", "--vstar", "20.0", "--v", "0.0",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("va = 0.437500"));
    for stage in ["q ", "f ", "r ", "s ", "p1", "p2", "p3", "p4"] {
        assert!(
            text.lines().any(|l| l.starts_with(stage)),
            "missing {stage}"
        );
    }
}

#[test]
fn step_rejects_zero_desired_speed() {
    let o = gipps(&["step", "--vstar", "0"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("desired speed must be positive"));
}

#[test]
fn step_rejects_out_of_range_flag() {
    let o = gipps(&["step", "--v", "-2"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("outside the Q8.6 range"));
}

#[test]
fn sqrt_command() {
    let o = gipps(&["sqrt", "--s", "4.0"]);
    assert!(stdout(&o).contains("result 128 2.000000"));
    let o = gipps(&["sqrt", "--s", "0.03125"]);
    assert!(stdout(&o).contains("result 11 0.171875"));
    let o = gipps(&["sqrt", "--s", "-1"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("outside"));
}

#[test]
fn sweep_default_grid() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let o = gipps(&["sweep", "--out", csv.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("max_sqrt_iterations:2"));
    assert!(text.contains("oracle_mismatches:0"));
    assert!(text.contains("cycles[4]:108348"));
    let body = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(
        body.lines().next(),
        Some("a,T,vstar,v,va_fixed,va_ideal,abs_err")
    );
    assert_eq!(body.lines().count(), 108_349);
}

#[test]
fn sweep_at_desired_speed_has_zero_error() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("eq.csv");
    let o = gipps(&["sweep", "--only-at-desired", "--out", csv.to_str().unwrap()]);
    assert!(o.status.success());
    let body = std::fs::read_to_string(&csv).unwrap();
    for line in body.lines().skip(1) {
        assert!(line.ends_with(",0.000000000"), "{line}");
    }
}

#[test]
fn sweep_unwritable_output() {
    let o = gipps(&["sweep", "--out", "/nonexistent-dir/sweep.csv"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("cannot write"));
}

fn sim_to(path: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "sim",
        "--vehicles",
        "100",
        "--steps",
        "60",
        "--pes",
        "10",
        "--out",
    ];
    args.push(path.to_str().unwrap());
    args.extend_from_slice(extra);
    gipps(&args)
}

#[test]
fn sim_trace_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let o = sim_to(&a, &["--seed", "42"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = stdout(&o);
    assert!(report.contains("cycles:2400"), "{report}");
    assert!(report.contains("ops:6000"));
    assert!(sim_to(&b, &["--seed", "42"]).status.success());

    let ta = std::fs::read(&a).unwrap();
    assert_eq!(ta, std::fs::read(&b).unwrap());
    let text = String::from_utf8(ta).unwrap();
    assert_eq!(text.lines().count(), 6001);
    assert_eq!(
        text.lines().next(),
        Some("step,vehicle_id,velocity,position_m,gap_to_leader_m")
    );
    // the leader's gap field is empty
    assert!(text.lines().nth(1).unwrap().ends_with(','));
}

#[test]
fn sim_reads_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sim.cfg");
    std::fs::write(&cfg, "n_vehicles = 3\nn_steps = 2\nstep_t = 0.5\n").unwrap();
    let out = dir.path().join("t.jsonl");
    let o = gipps(&[
        "sim",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "n_steps=4",
        "--format",
        "jsonl",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let body = std::fs::read_to_string(&out).unwrap();
    assert_eq!(body.lines().count(), 12);
    assert!(body.lines().all(|l| l.starts_with("{\"step\":")));
}

#[test]
fn sim_missing_config() {
    let o = gipps(&["sim", "--config", "/nonexistent/sim.cfg"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("cannot read config"));
}

#[test]
fn sim_bad_config_value() {
    let o = gipps(&[
        "sim",
        "--set",
        "min_desired_speed=40",
        "--set",
        "max_desired_speed=30",
    ]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("inverted"));
}

#[test]
fn bench_reports_modeled_latency() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bench.csv");
    let o = gipps(&["bench", "--n-ops", "200", "--out", csv.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("modeled_ns_per_op:16.000"));
    assert!(text.contains("host_iterations:100"));
    assert!(text.contains("historical_baseline"));
    let body = std::fs::read_to_string(&csv).unwrap();
    assert!(body.starts_with("host_ns_per_op,host_iterations,modeled_ns_per_op"));
    assert_eq!(body.lines().count(), 2);
}

#[test]
fn bench_rejects_few_iterations() {
    let o = gipps(&["bench", "--iterations", "50"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("at least 100"));
}

#[test]
fn bench_modeled_time_scales_with_pes() {
    let time = |pes: &str| {
        let o = gipps(&["bench", "--n-ops", "800", "--pes", pes]);
        stdout(&o)
            .lines()
            .find_map(|l| l.strip_prefix("modeled_time_ns:"))
            .unwrap()
            .parse::<f64>()
            .unwrap()
    };
    assert_eq!(time("1"), 8.0 * time("8"));
}

#[test]
fn rejects_zero_pes() {
    let o = gipps(&["--pes", "0", "step"]);
    assert!(!o.status.success());
}
