use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use lrqaoa::baselines::{self, AnnealConfig, TabuConfig, TimeModel};
use lrqaoa::compare::{self, CompareConfig};
use lrqaoa::experiment::{self, ExperimentConfig};
use lrqaoa::metrics::{self, ScalingMode};
use lrqaoa::noise::{self, NoiseConfig, OverlapPoint};
use lrqaoa::problems::{Family, GeneratorSpec, ProblemInstance};
use lrqaoa::scan::{self, Evaluator};
use lrqaoa::schedule::{build_schedule, Axis};
use lrqaoa::simulator::{self, EnergyTable, InjectedGate, Injection, RunOptions};
use lrqaoa::{Error, SampleSet};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::{
    read_text, Backend, BaselineArgs, Cli, Clock, Command, CompareArgs, ExperimentArgs, FitNoiseArgs, FitScalingArgs,
    GenerateArgs, InstanceArg, MitigateArgs, Mode, NoiseArgs, NoiseSimArgs, RunArgs, ScanArgs, Solver, TtsArgs,
};

pub fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Generate(a) => generate(cli, a),
        Command::Run(a) => run(cli, a),
        Command::Scan(a) => scan(cli, a),
        Command::NoiseSim(a) => noise_sim(cli, a),
        Command::FitNoise(a) => fit_noise(cli, a),
        Command::Baseline(a) => baseline(cli, a),
        Command::Mitigate(a) => mitigate(cli, a),
        Command::FitScaling(a) => fit_scaling(cli, a),
        Command::Tts(a) => tts(a),
        Command::Compare(a) => compare(cli, a),
        Command::Experiment(a) => run_experiment(cli, a),
    }
}

fn config_error(msg: impl Into<String>) -> anyhow::Error {
    Error::Parameter(msg.into()).into()
}

fn out_dir(cli: &Cli) -> Result<&Path> {
    std::fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    Ok(&cli.out)
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    write(path, serde_json::to_string_pretty(value)? + "\n")
}

fn load_instance(arg: &InstanceArg) -> Result<ProblemInstance> {
    if !arg.instance.exists() {
        return Err(config_error(format!(
            "instance file {} not found",
            arg.instance.display()
        )));
    }
    ProblemInstance::read(&arg.instance, arg.graph.as_deref())
        .with_context(|| format!("loading {}", arg.instance.display()))
}

fn parse_axis(text: &str) -> Result<Axis> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || config_error(format!("axis \"{text}\" is not lo:hi:steps"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo = parts[0].trim().parse().map_err(|_| bad())?;
    let hi = parts[1].trim().parse().map_err(|_| bad())?;
    let steps = parts[2].trim().parse().map_err(|_| bad())?;
    Ok(Axis::new(lo, hi, steps)?)
}

fn noise_config(backend: Backend, lambda: f64, trajectories: usize, seed: u64) -> NoiseConfig {
    match backend {
        Backend::DensityMatrix => NoiseConfig::density(lambda),
        Backend::Trajectory => NoiseConfig::trajectory(lambda, trajectories, seed),
    }
}

fn noise_from_args(args: &NoiseArgs, seed: u64) -> Option<NoiseConfig> {
    args.lambda
        .map(|l| noise_config(args.backend, l, args.trajectories, seed))
}

fn generate(cli: &Cli, a: &GenerateArgs) -> Result<()> {
    let family = Family::parse(&a.family)?;
    let mut spec = GeneratorSpec::default_for(family)?;
    if let Some(d) = a.edge_density {
        spec = spec.with_edge_density(d);
    }
    if let Some(r) = a.clause_ratio {
        match spec {
            GeneratorSpec::Max3sat { .. } => spec = GeneratorSpec::Max3sat { clause_ratio: r },
            _ => return Err(config_error("--clause-ratio applies to max3sat only")),
        }
    }
    let dir = out_dir(cli)?;
    for k in 0..a.count {
        let seed = cli.seed + k;
        let inst = spec.generate(a.n, seed)?;
        let stem = dir.join(format!("{}_n{}_s{}", family.name().to_ascii_lowercase(), a.n, seed));
        inst.write(&stem)?;
        println!("{}", stem.with_extension("json").display());
    }
    Ok(())
}

fn run(cli: &Cli, a: &RunArgs) -> Result<()> {
    let inst = load_instance(&a.instance)?;
    let schedule = build_schedule(a.delta_beta, a.delta_gamma, a.p)?;
    let table = EnergyTable::new(&inst.model)?;
    let truth = table.ground_truth(false);
    let opts = RunOptions {
        record_trajectory: a.record_trajectory,
        injections: a
            .inject_x_at
            .map(|layer| Injection {
                layer,
                gate: InjectedGate::XLayer,
            })
            .into_iter()
            .collect(),
        tracked_states: Vec::new(),
    };
    let out = simulator::run_with_table(&table, &schedule, &opts)?;
    let probs = out.state.probabilities();
    let success = simulator::success_probability(&out.state, &truth)?;
    let mean_energy: f64 = probs.iter().zip(table.energies()).map(|(p, e)| p * e).sum();
    let exact_ratio = inst.cut_graph().and_then(|g| {
        let w = g.total_weight();
        let best = (w - inst.scale * truth.optimal_energy) / 2.0;
        (best > 0.0).then(|| (w - inst.scale * mean_energy) / 2.0 / best)
    });
    let dir = out_dir(cli)?;
    let mut result = json!({
        "instance": a.instance.instance.display().to_string(),
        "family": inst.family.name(),
        "n_qubits": inst.num_vars(),
        "p": a.p,
        "delta_beta": a.delta_beta,
        "delta_gamma": a.delta_gamma,
        "optimal_energy": truth.optimal_energy,
        "degeneracy": truth.degeneracy(),
        "success_prob": success,
        "p_random": truth.degeneracy() as f64 / probs.len() as f64,
        "mean_energy": mean_energy,
        "approx_ratio": exact_ratio,
        "inject_x_at": a.inject_x_at,
    });
    if a.shots > 0 {
        let samples = simulator::sample(&out.state, a.shots, cli.seed)?;
        let sampled_ratio = inst
            .cut_graph()
            .map(|g| metrics::approximation_ratio(&samples, g))
            .transpose()?;
        result["shots"] = json!(a.shots);
        result["sampled_success_prob"] = json!(metrics::success_probability_sampled(&samples, &truth));
        result["sampled_approx_ratio"] = json!(sampled_ratio);
        result["samples"] = samples
            .entries()
            .iter()
            .map(|e| json!({ "bits": e.bits.to_string(), "count": e.count }))
            .collect();
        write(&dir.join("samples.csv"), samples.with_energies(&inst.model)?.to_csv())?;
    }
    if let Some(tr) = &out.trajectory {
        write(&dir.join("trajectory.csv"), tr.to_csv())?;
    }
    write_json(&dir.join("run.json"), &result)?;
    println!(
        "success probability {success:.6} (uniform {:.3e})",
        result["p_random"].as_f64().unwrap_or(0.0)
    );
    Ok(())
}

fn scan(cli: &Cli, a: &ScanArgs) -> Result<()> {
    let inst = load_instance(&a.instance)?;
    let grid = scan::grid_from_axes(parse_axis(&a.beta)?, parse_axis(&a.gamma)?)?;
    let eval = Evaluator::new(&inst, noise_from_args(&a.noise, cli.seed))?;
    let diagram = scan::scan_with(&eval, a.p, &grid)?;
    let dir = out_dir(cli)?;
    write(&dir.join("heatmap.csv"), diagram.to_csv()?)?;
    let best = diagram.best().expect("grid is non-empty");
    write_json(
        &dir.join("scan.json"),
        &json!({
            "p": a.p,
            "p_random": diagram.p_random,
            "best": best,
            "cells": diagram.cells.len(),
        }),
    )?;
    println!(
        "best delta_beta {} delta_gamma {}: success {:.6}",
        best.delta_beta, best.delta_gamma, best.success_prob
    );
    Ok(())
}

fn noise_sim(cli: &Cli, a: &NoiseSimArgs) -> Result<()> {
    let inst = load_instance(&a.instance)?;
    let (db, dg) = (a.deltas[0], a.deltas[1]);
    let eval = Evaluator::new(&inst, None)?;
    let p_random = eval.p_random();
    let dir = out_dir(cli)?;
    let runs = dir.join("noise");
    std::fs::create_dir_all(&runs)?;
    let mut csv = csv::Writer::from_writer(Vec::new());
    csv.write_record([
        "N_g",
        "lambda",
        "eps_acc",
        "p_success",
        "p_ovl",
        "p",
        "p_ideal",
        "p_random",
    ])?;
    for &p in &a.p {
        let schedule = build_schedule(db, dg, p)?;
        let p_ideal = eval.success(&eval.probabilities(&schedule)?);
        let gates = noise::gate_count(&inst.model, p);
        for &lambda in &a.lambda {
            let cfg = noise_config(a.backend, lambda, a.trajectories, cli.seed);
            let probs = noise::noisy_probabilities(&inst.model, &schedule, &cfg)?;
            let p_success = eval.success(&probs);
            let p_ovl = noise::overlap_probability(p_success, p_ideal, p_random)?;
            let eps = gates as f64 * lambda;
            write_json(
                &runs.join(format!("p{p}_lambda{lambda}.json")),
                &json!({
                    "p": p, "delta_beta": db, "delta_gamma": dg, "noise": cfg,
                    "two_qubit_gates": gates, "eps_acc": eps,
                    "p_success": p_success, "p_ideal": p_ideal, "p_random": p_random, "p_ovl": p_ovl,
                }),
            )?;
            csv.serialize((gates, lambda, eps, p_success, p_ovl, p, p_ideal, p_random))?;
        }
    }
    let bytes = csv.into_inner().map_err(|e| e.into_error())?;
    write(&dir.join("noise.csv"), bytes)?;
    println!("{}", dir.join("noise.csv").display());
    Ok(())
}

#[derive(Deserialize)]
struct NoiseRow {
    #[serde(rename = "N_g")]
    gates: f64,
    lambda: f64,
    p_ovl: f64,
}

fn fit_noise(cli: &Cli, a: &FitNoiseArgs) -> Result<()> {
    let mut points = Vec::new();
    for path in &a.input {
        let text = read_text(path)?;
        for row in csv::Reader::from_reader(text.as_bytes()).deserialize::<NoiseRow>() {
            let row = row.map_err(|e| config_error(format!("{}: {e}", path.display())))?;
            points.push(OverlapPoint {
                gates: row.gates,
                lambda: row.lambda,
                p_ovl: row.p_ovl,
            });
        }
    }
    let mut report = match a.k0 {
        None => serde_json::to_value(noise::fit_noise_model(&points)?)?,
        Some(k0) => {
            let pairs: Vec<(f64, f64)> = points.iter().map(|p| (p.gates, p.p_ovl)).collect();
            json!({ "k0": k0, "lambda_est": noise::estimate_lambda(&pairs, k0)? })
        }
    };
    if let Some(target) = a.target {
        let k0 = report["k0"].as_f64().unwrap_or(f64::NAN);
        let lambda = a
            .budget_lambda
            .or(report["lambda_est"].as_f64())
            .ok_or_else(|| config_error("--target needs --budget-lambda or --k0"))?;
        report["gate_budget"] = json!({
            "target": target,
            "lambda": lambda,
            "gates": noise::gate_budget(lambda, target, k0)?,
        });
    }
    let dir = out_dir(cli)?;
    write_json(&dir.join("noise_fit.json"), &report)?;
    println!("{}", serde_json::to_string_pretty(&strip_points(report))?);
    Ok(())
}

fn strip_points(mut v: Value) -> Value {
    if let Some(o) = v.as_object_mut() {
        o.remove("points");
    }
    v
}

fn baseline(cli: &Cli, a: &BaselineArgs) -> Result<()> {
    let inst = load_instance(&a.instance)?;
    let n = inst.num_vars();
    let truth = lrqaoa::brute_force(&inst.model, false)?;
    let run = match a.solver {
        Solver::Sa => baselines::simulated_annealing(&inst.model, &AnnealConfig::new(a.sweeps, a.reads, cli.seed))?,
        Solver::Tabu => baselines::tabu_search(&inst.model, &TabuConfig::new(a.sweeps, a.reads, cli.seed))?,
    };
    let time = match a.clock {
        Clock::Wall => TimeModel::WallClock,
        Clock::Updates => TimeModel::SpinUpdates {
            seconds_per_update: a.seconds_per_update,
        },
    };
    let success = run.success_probability(&truth);
    let read_time = time.read_time(&run, a.sweeps, n);
    let tts = baselines::tts(success, read_time, a.p_d)?;
    let best = run.best().expect("at least one read");
    let dir = out_dir(cli)?;
    write(&dir.join("reads.csv"), run.to_csv())?;
    write_json(
        &dir.join("baseline.json"),
        &json!({
            "solver": format!("{:?}", a.solver).to_lowercase(),
            "n_qubits": n,
            "sweeps": a.sweeps,
            "reads": a.reads,
            "best_energy": best.energy,
            "best_bits": best.bits.to_string(),
            "optimal_energy": truth.optimal_energy,
            "success_prob": success,
            "seconds_per_read": read_time,
            "p_d": a.p_d,
            "tts": if tts.is_finite() { json!(tts) } else { json!("inf") },
        }),
    )?;
    println!("success {success:.4}, tts {tts:.4e} s");
    Ok(())
}

fn mitigate(cli: &Cli, a: &MitigateArgs) -> Result<()> {
    let inst = load_instance(&a.instance)?;
    let samples = SampleSet::read_csv(&read_text(&a.samples)?)?;
    let truth = lrqaoa::brute_force(&inst.model, false)?;
    let mitigated = metrics::mitigate_hd1(&samples, &inst.model)?;
    let energy = |s: &SampleSet| s.mean_by(|b| inst.model.energy(b).unwrap_or(f64::NAN));
    let ratio = |s: &SampleSet| inst.cut_graph().and_then(|g| metrics::approximation_ratio(s, g).ok());
    let report = json!({
        "shots": samples.total_shots(),
        "mean_energy": energy(&samples),
        "mitigated_mean_energy": energy(&mitigated),
        "success_prob": metrics::success_probability_sampled(&samples, &truth),
        "mitigated_success_prob": metrics::success_probability_sampled(&mitigated, &truth),
        "approx_ratio": ratio(&samples),
        "mitigated_approx_ratio": ratio(&mitigated),
    });
    let dir = out_dir(cli)?;
    write(
        &dir.join("mitigated.csv"),
        mitigated.with_energies(&inst.model)?.to_csv(),
    )?;
    write_json(&dir.join("mitigation.json"), &report)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn fit_scaling(cli: &Cli, a: &FitScalingArgs) -> Result<()> {
    let text = read_text(&a.input)?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| config_error(format!("{} has no column \"{name}\"", a.input.display())))
    };
    let (fam, nq, pc, prob) = (col("family")?, col("n_qubits")?, col("p")?, col(&a.column)?);
    let mut groups: BTreeMap<(String, usize), Vec<(usize, f64)>> = BTreeMap::new();
    for rec in reader.records() {
        let rec = rec?;
        let parse = |i: usize| rec.get(i).unwrap_or("").trim().to_string();
        let bad = |i: usize| config_error(format!("bad value \"{}\" in {}", parse(i), a.input.display()));
        let n: usize = parse(nq).parse().map_err(|_| bad(nq))?;
        let p: usize = parse(pc).parse().map_err(|_| bad(pc))?;
        let v = parse(prob);
        if v.is_empty() {
            continue;
        }
        let v: f64 = v.parse().map_err(|_| bad(prob))?;
        groups.entry((parse(fam), p)).or_default().push((n, v));
    }
    let mode = match a.mode {
        Mode::PerSizeMean => ScalingMode::PerSizeMean,
        Mode::PerInstance => ScalingMode::PerInstance,
    };
    let mut fits = Vec::new();
    for ((family, p), pts) in &groups {
        let entry = match metrics::fit_scaling(pts, a.n_q_min, mode) {
            Ok(f) => {
                println!(
                    "{family} p={p}: eta {:.4}, C {:.4}, eps {:.4}",
                    f.eta, f.c, f.relative_error
                );
                json!({ "family": family, "p": p, "fit": f })
            }
            Err(e) if matches!(e, Error::InsufficientData(_)) => {
                json!({ "family": family, "p": p, "fit": null, "error": e.to_string() })
            }
            Err(e) => return Err(e.into()),
        };
        fits.push(entry);
    }
    let dir = out_dir(cli)?;
    write_json(&dir.join("scaling_fit.json"), &fits)?;
    Ok(())
}

fn tts(a: &TtsArgs) -> Result<()> {
    let value = match (a.time, a.n, a.p) {
        (Some(t), _, _) => baselines::tts(a.prob, t, a.p_d)?,
        (None, Some(n), Some(p)) => baselines::lr_qaoa_tts(a.prob, n, p, a.t2q, a.p_d)?,
        _ => return Err(config_error("give --time, or --n and --p")),
    };
    println!("{value}");
    Ok(())
}

fn compare(cli: &Cli, a: &CompareArgs) -> Result<()> {
    let cfg = match &a.config {
        Some(path) => serde_json::from_str::<CompareConfig>(&read_text(path)?)
            .map_err(|e| config_error(format!("{}: {e}", path.display())))?,
        None => {
            let mut c = CompareConfig::fc_wmaxcut(a.sizes.clone(), a.instances, a.hard_k);
            c.reads = a.reads;
            c.seed = cli.seed;
            c
        }
    };
    cfg.validate()?;
    for &n in &cfg.sizes {
        simulator::check_cap(n, simulator::STATE_CAP)?;
    }
    let mut report = compare::compare_solvers(&cfg)?;
    for ext in &a.external {
        let (name, path) = ext
            .split_once('=')
            .ok_or_else(|| config_error(format!("--external expects name=path, got \"{ext}\"")))?;
        let rows = compare::external_rows(name, &read_text(&PathBuf::from(path))?)?;
        report.rows.extend(rows);
        report.solvers.push(compare::solver_scaling(name, &report.rows));
    }
    let dir = out_dir(cli)?;
    write(&dir.join("tts_rows.csv"), report.rows_csv()?)?;
    write_json(
        &dir.join("compare.json"),
        &json!({ "config": cfg, "solvers": report.solvers, "pcc": report.pcc }),
    )?;
    for s in &report.solvers {
        match &s.fit {
            Some(f) => println!("{}: TTS ~ 2^({:.4} N)", s.solver, f.exponent),
            None => println!("{}: no finite TTS to fit", s.solver),
        }
    }
    Ok(())
}

fn run_experiment(cli: &Cli, a: &ExperimentArgs) -> Result<()> {
    let text = read_text(&a.config)?;
    let cfg = ExperimentConfig::from_json(&text).with_context(|| format!("config {}", a.config.display()))?;
    let dir = cfg.output_dir.clone().unwrap_or_else(|| cli.out.clone());
    let outcome = experiment::run_experiment(&cfg, &dir, cli.workers)?;
    println!(
        "{} runs ({} computed, {} reused), {} scans computed; results in {}",
        outcome.records.len(),
        outcome.computed_runs,
        outcome.reused_runs,
        outcome.computed_scans,
        dir.display()
    );
    for f in &outcome.summary.fits {
        if let Some(fit) = &f.fit {
            println!("p={}: eta {:.4}, C {:.4}", f.p, fit.eta, fit.c);
        }
    }
    Ok(())
}
