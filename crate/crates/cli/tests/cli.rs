use std::path::Path;
use std::process::{Command, Output};

fn lrqaoa(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lrqaoa"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = lrqaoa(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn generate_run_and_mitigate() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    ok(
        d,
        &[
            "--out", "inst", "--seed", "4", "generate", "--family", "wmaxcut", "--n", "7", "--count", "2",
        ],
    );
    assert!(d.join("inst/wmaxcut_n7_s4.json").exists());
    assert!(d.join("inst/wmaxcut_n7_s5.edges").exists());

    let inst = "inst/wmaxcut_n7_s4.json";
    ok(
        d,
        &[
            "--out",
            "run",
            "run",
            "--instance",
            inst,
            "--p",
            "30",
            "--shots",
            "300",
            "--record-trajectory",
        ],
    );
    let r = json(&d.join("run/run.json"));
    let success = r["success_prob"].as_f64().unwrap();
    assert!(success > r["p_random"].as_f64().unwrap());
    assert!(r["approx_ratio"].as_f64().unwrap() <= 1.0 + 1e-12);
    let traj = std::fs::read_to_string(d.join("run/trajectory.csv")).unwrap();
    assert!(traj.starts_with("layer,energy,probability\n"));

    ok(
        d,
        &[
            "--out",
            "mit",
            "mitigate",
            "--instance",
            inst,
            "--samples",
            "run/samples.csv",
        ],
    );
    let m = json(&d.join("mit/mitigation.json"));
    assert!(m["mitigated_mean_energy"].as_f64().unwrap() <= m["mean_energy"].as_f64().unwrap() + 1e-12);
    assert_eq!(m["shots"], 300);
}

#[test]
fn run_is_seed_deterministic() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    ok(d, &["--out", "g", "generate", "--family", "mis", "--n", "8"]);
    for out in ["a", "b"] {
        ok(
            d,
            &[
                "--out",
                out,
                "--seed",
                "9",
                "run",
                "--instance",
                "g/mis_n8_s0.json",
                "--p",
                "12",
                "--shots",
                "100",
            ],
        );
    }
    let a = std::fs::read(d.join("a/samples.csv")).unwrap();
    let b = std::fs::read(d.join("b/samples.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn scan_heatmap() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    ok(d, &["--out", "g", "generate", "--family", "maxcut-3reg", "--n", "8"]);
    ok(
        d,
        &[
            "--out",
            "s",
            "scan",
            "--instance",
            "g/maxcut_3reg_n8_s0.json",
            "--p",
            "8",
            "--beta",
            "0:0.6:4",
            "--gamma",
            "0:0.9:4",
        ],
    );
    let csv = std::fs::read_to_string(d.join("s/heatmap.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "delta_beta,delta_gamma,prob,mean_energy");
    assert_eq!(lines.len(), 17);
    let s = json(&d.join("s/scan.json"));
    let origin: f64 = lines[1].split(',').nth(2).unwrap().parse().unwrap();
    assert!((origin - s["p_random"].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn noise_pipeline() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    ok(d, &["--out", "g", "generate", "--family", "wmaxcut", "--n", "5"]);
    ok(
        d,
        &[
            "--out",
            "n",
            "noise-sim",
            "--instance",
            "g/wmaxcut_n5_s0.json",
            "--p",
            "5,10",
            "--lambda",
            "0.001,0.01",
        ],
    );
    let csv = std::fs::read_to_string(d.join("n/noise.csv")).unwrap();
    assert!(csv.starts_with("N_g,lambda,eps_acc,p_success,p_ovl"));
    assert_eq!(csv.lines().count(), 5);
    ok(
        d,
        &[
            "--out",
            "n",
            "fit-noise",
            "--input",
            "n/noise.csv",
            "--target",
            "0.1",
            "--budget-lambda",
            "0.0025",
        ],
    );
    let fit = json(&d.join("n/noise_fit.json"));
    assert!(fit["k0"].as_f64().unwrap() > 0.0);
    assert!(fit["gate_budget"]["gates"].as_f64().unwrap() > 0.0);
}

#[test]
fn baselines_and_tts() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    ok(d, &["--out", "g", "generate", "--family", "fc-wmaxcut", "--n", "8"]);
    for solver in ["sa", "tabu"] {
        ok(
            d,
            &[
                "--out",
                solver,
                "baseline",
                "--solver",
                solver,
                "--instance",
                "g/fc_wmaxcut_n8_s0.json",
                "--reads",
                "20",
            ],
        );
        let b = json(&d.join(solver).join("baseline.json"));
        assert!(b["best_energy"].as_f64().unwrap() >= b["optimal_energy"].as_f64().unwrap() - 1e-9);
        let reads = std::fs::read_to_string(d.join(solver).join("reads.csv")).unwrap();
        assert_eq!(reads.lines().count(), 21);
    }
    let v: f64 = ok(d, &["tts", "--prob", "0.5", "--time", "1"]).trim().parse().unwrap();
    assert!((v - 6.6439).abs() < 1e-3);
}

#[test]
fn experiment_and_scaling_fit() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    std::fs::write(
        d.join("cfg.json"),
        r#"{"problem": {"family": "WMAXCUT"}, "sizes": [6, 8, 10], "seeds": [0, 1, 2], "p_values": [5, 20],
            "delta_policy": {"kind": "fixed", "delta_beta": 0.3, "delta_gamma": 0.6}, "n_q_min": 6}"#,
    )
    .unwrap();
    ok(
        d,
        &["--out", "exp", "--workers", "2", "experiment", "--config", "cfg.json"],
    );
    assert_eq!(std::fs::read_dir(d.join("exp/runs")).unwrap().count(), 18);
    let again = ok(d, &["--out", "exp", "experiment", "--config", "cfg.json"]);
    assert!(again.contains("0 computed, 18 reused"), "{again}");
    ok(
        d,
        &[
            "--out",
            "fit",
            "fit-scaling",
            "--input",
            "exp/aggregate.csv",
            "--n-q-min",
            "6",
        ],
    );
    let fits = json(&d.join("fit/scaling_fit.json"));
    assert_eq!(fits.as_array().unwrap().len(), 2);
    assert!(fits[0]["fit"]["eta"].as_f64().unwrap().is_finite());
}

#[test]
fn compare_small() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    std::fs::write(d.join("ext.csv"), "instance,n_qubits,tts\na,6,1e-3\nb,8,4e-3\n").unwrap();
    ok(
        d,
        &[
            "--out",
            "c",
            "compare",
            "--sizes",
            "6,8",
            "--instances",
            "3",
            "--hard-k",
            "2",
            "--reads",
            "10",
            "--external",
            "exact=ext.csv",
        ],
    );
    let report = json(&d.join("c/compare.json"));
    let names: Vec<&str> = report["solvers"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["solver"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["sa", "tabu", "lr_qaoa", "exact"]);
    let exact = &report["solvers"][3]["fit"]["exponent"];
    assert!((exact.as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn exit_codes() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    let code = |args: &[&str]| lrqaoa(d, args).status.code().unwrap();
    assert_eq!(code(&["run", "--instance", "missing.json", "--p", "3"]), 2);
    assert_eq!(code(&["generate", "--family", "knapsack", "--n", "4"]), 2);
    assert_eq!(code(&["tts", "--prob", "1.5", "--time", "1"]), 2);
    assert_eq!(code(&["run", "--no-such-flag"]), 2);
    ok(d, &["--out", "g", "generate", "--family", "wmaxcut", "--n", "27"]);
    assert_eq!(code(&["run", "--instance", "g/wmaxcut_n27_s0.json", "--p", "2"]), 3);
    ok(d, &["--out", "g", "generate", "--family", "wmaxcut", "--n", "11"]);
    assert_eq!(
        code(&[
            "noise-sim",
            "--instance",
            "g/wmaxcut_n11_s0.json",
            "--p",
            "2",
            "--lambda",
            "0.01"
        ]),
        3
    );
    std::fs::write(
        d.join("bad.json"),
        r#"{"problem": {"family": "MIS"}, "sizes": [], "seeds": [0], "p_values": [1]}"#,
    )
    .unwrap();
    assert_eq!(code(&["experiment", "--config", "bad.json"]), 2);
}
