//! Batch experiments over sizes, seeds and depths.
//!
//! Layout of an output directory:
//!
//! ```text
//! config.json          the configuration that produced it
//! runs/<hash>.json     one record per (size, seed, p)
//! scans/<hash>.csv     performance diagrams used to pick ramp slopes
//! aggregate.csv        all records, sorted by (n_qubits, p, seed)
//! summary.json         per-(size, p) quartiles and per-p scaling fits
//! ```
//!
//! Each run and scan is keyed by a SHA-256 of everything that determines
//! its result, so rerunning a finished experiment recomputes nothing, and
//! the aggregate files are identical regardless of worker count.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::mpsc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::metrics::{self, ScalingFit, ScalingMode, DEFAULT_NQ_MIN};
use crate::noise::{self, NoiseConfig};
use crate::problems::{GeneratorSpec, ProblemInstance};
use crate::scan::{self, Evaluator, PerformanceDiagram};
use crate::schedule::{build_schedule, Axis, DEFAULT_DELTA_BETA, DEFAULT_DELTA_GAMMA};
use crate::simulator;
use crate::stats;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeltaPolicy {
    Fixed {
        delta_beta: f64,
        delta_gamma: f64,
    },
    /// Scan the grid on the first seed of every (size, p) and reuse the best
    /// cell for all seeds of that size.
    Scan {
        beta: Axis,
        gamma: Axis,
    },
}

impl Default for DeltaPolicy {
    fn default() -> Self {
        DeltaPolicy::Fixed {
            delta_beta: DEFAULT_DELTA_BETA,
            delta_gamma: DEFAULT_DELTA_GAMMA,
        }
    }
}

impl DeltaPolicy {
    pub fn default_scan() -> DeltaPolicy {
        let (beta, gamma) = scan::default_axes();
        DeltaPolicy::Scan { beta, gamma }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: GeneratorSpec,
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub p_values: Vec<usize>,
    #[serde(default)]
    pub delta_policy: DeltaPolicy,
    /// Measurement shots per run; 0 skips sampling.
    #[serde(default)]
    pub shots: u64,
    /// Also report success after single-flip mitigation of the shots.
    #[serde(default)]
    pub mitigate: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseConfig>,
    #[serde(default = "default_nq_min")]
    pub n_q_min: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn default_nq_min() -> usize {
    DEFAULT_NQ_MIN
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() || self.seeds.is_empty() || self.p_values.is_empty() {
            return Err(Error::param("sizes, seeds and p_values must be non-empty"));
        }
        if self.p_values.contains(&0) {
            return Err(Error::param("p values must be positive"));
        }
        if let DeltaPolicy::Scan { beta, gamma } = &self.delta_policy {
            beta.validate()?;
            gamma.validate()?;
        }
        if let Some(n) = &self.noise {
            n.validate()?;
        }
        if self.mitigate && self.shots == 0 {
            return Err(Error::param("mitigation needs shots > 0"));
        }
        let cap = match &self.noise {
            Some(n) if n.backend == noise::NoiseBackend::DensityMatrix => noise::DENSITY_CAP,
            _ => simulator::STATE_CAP,
        };
        for &n in &self.sizes {
            simulator::check_cap(n, cap)?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One (size, seed, p) result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub family: String,
    pub n_qubits: usize,
    pub p: usize,
    pub seed: u64,
    pub delta_beta: f64,
    pub delta_gamma: f64,
    pub success_prob: f64,
    pub p_random: f64,
    pub degeneracy: usize,
    pub optimal_energy: f64,
    pub mean_energy: f64,
    /// Expected cut over optimal cut, for cut problems.
    pub approx_ratio: Option<f64>,
    pub lambda: Option<f64>,
    pub two_qubit_gates: usize,
    pub shots: u64,
    pub sampled_success: Option<f64>,
    pub mitigated_success: Option<f64>,
    pub hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub n_qubits: usize,
    pub p: usize,
    pub runs: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthFit {
    pub p: usize,
    pub fit: Option<ScalingFit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub sizes: Vec<SizeSummary>,
    pub fits: Vec<DepthFit>,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub records: Vec<RunRecord>,
    pub summary: ExperimentSummary,
    pub computed_runs: usize,
    pub reused_runs: usize,
    pub computed_scans: usize,
    pub out_dir: PathBuf,
}

fn sha256_hex(value: &serde_json::Value) -> String {
    let bytes = serde_json::to_vec(value).expect("json values serialize");
    hex::encode(Sha256::digest(&bytes))
}

/// Writes files in order from a single thread; temp-and-rename keeps
/// partially written files out of the resume cache.
fn spawn_writer(rx: mpsc::Receiver<(PathBuf, Vec<u8>)>) -> std::thread::JoinHandle<Result<()>> {
    std::thread::spawn(move || {
        for (path, bytes) in rx {
            write_atomic(&path, &bytes)?;
        }
        Ok(())
    })
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Builds a thread pool of `workers` threads (rayon default when `None`).
pub fn thread_pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        if w == 0 {
            return Err(Error::param("workers must be at least 1"));
        }
        b = b.num_threads(w);
    }
    b.build()
        .map_err(|e| Error::param(format!("cannot start worker pool: {e}")))
}

struct Job {
    n: usize,
    seed: u64,
    p: usize,
}

/// Runs (or resumes) an experiment and writes its outputs under `out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path, workers: Option<usize>) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let pool = thread_pool(workers)?;
    for sub in ["runs", "scans"] {
        std::fs::create_dir_all(out_dir.join(sub))?;
    }
    write_atomic(
        &out_dir.join("config.json"),
        serde_json::to_string_pretty(cfg)?.as_bytes(),
    )?;
    let (tx, rx) = mpsc::channel();
    let writer = spawn_writer(rx);
    let result = pool.install(|| execute(cfg, out_dir, &tx));
    drop(tx);
    writer.join().expect("writer thread panicked")?;
    let (mut records, computed_runs, reused_runs, computed_scans) = result?;
    records.sort_by(|a, b| (a.n_qubits, a.p, a.seed).cmp(&(b.n_qubits, b.p, b.seed)));
    std::fs::write(out_dir.join("aggregate.csv"), aggregate_csv(&records)?)?;
    let summary = summarize(&records, cfg.n_q_min);
    std::fs::write(out_dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(ExperimentOutcome {
        records,
        summary,
        computed_runs,
        reused_runs,
        computed_scans,
        out_dir: out_dir.to_path_buf(),
    })
}

type Executed = (Vec<RunRecord>, usize, usize, usize);

fn execute(cfg: &ExperimentConfig, out_dir: &Path, tx: &mpsc::Sender<(PathBuf, Vec<u8>)>) -> Result<Executed> {
    // slopes per (n, p)
    let mut deltas: BTreeMap<(usize, usize), (f64, f64)> = BTreeMap::new();
    let mut computed_scans = 0;
    match cfg.delta_policy {
        DeltaPolicy::Fixed {
            delta_beta,
            delta_gamma,
        } => {
            for &n in &cfg.sizes {
                for &p in &cfg.p_values {
                    deltas.insert((n, p), (delta_beta, delta_gamma));
                }
            }
        }
        DeltaPolicy::Scan { beta, gamma } => {
            let grid = scan::grid_from_axes(beta, gamma)?;
            let seed0 = cfg.seeds[0];
            for &n in &cfg.sizes {
                let inst = cfg.problem.generate(n, seed0)?;
                let eval = Evaluator::new(&inst, cfg.noise)?;
                for &p in &cfg.p_values {
                    let key = serde_json::json!({
                        "kind": "scan",
                        "problem": cfg.problem,
                        "n": n,
                        "seed": seed0,
                        "p": p,
                        "beta": beta,
                        "gamma": gamma,
                        "noise": cfg.noise,
                    });
                    let path = out_dir.join("scans").join(format!("{}.csv", sha256_hex(&key)));
                    let cached = std::fs::read_to_string(&path)
                        .ok()
                        .and_then(|t| PerformanceDiagram::from_csv(&t, p, eval.p_random()).ok())
                        .filter(|d| d.cells.len() == grid.len());
                    let diagram = match cached {
                        Some(d) => d,
                        None => {
                            computed_scans += 1;
                            let d = scan::scan_with(&eval, p, &grid)?;
                            write_atomic(&path, d.to_csv()?.as_bytes())?;
                            d
                        }
                    };
                    let best = diagram.best().expect("grid is non-empty");
                    deltas.insert((n, p), (best.delta_beta, best.delta_gamma));
                }
            }
        }
    }

    let jobs: Vec<Job> = cfg
        .sizes
        .iter()
        .flat_map(|&n| {
            cfg.seeds
                .iter()
                .flat_map(move |&seed| cfg.p_values.iter().map(move |&p| Job { n, seed, p }))
        })
        .collect();
    let outcomes = jobs
        .par_iter()
        .map_with(tx.clone(), |tx, job| {
            let (db, dg) = deltas[&(job.n, job.p)];
            run_job(cfg, job, db, dg, out_dir, tx)
        })
        .collect::<Result<Vec<_>>>()?;
    let reused = outcomes.iter().filter(|o| o.1).count();
    let records: Vec<RunRecord> = outcomes.into_iter().map(|o| o.0).collect();
    let computed = records.len() - reused;
    Ok((records, computed, reused, computed_scans))
}

/// Derived seed for measurement sampling of one run.
fn shot_seed(seed: u64, n: usize, p: usize) -> u64 {
    let key = serde_json::json!({ "shots": seed, "n": n, "p": p });
    let h = sha256_hex(&key);
    u64::from_str_radix(&h[..16], 16).expect("hex digest")
}

fn run_job(
    cfg: &ExperimentConfig,
    job: &Job,
    delta_beta: f64,
    delta_gamma: f64,
    out_dir: &Path,
    tx: &mpsc::Sender<(PathBuf, Vec<u8>)>,
) -> Result<(RunRecord, bool)> {
    let inst = cfg.problem.generate(job.n, job.seed)?;
    let key = serde_json::json!({
        "kind": "run",
        "problem": cfg.problem,
        "instance": inst.to_document(),
        "p": job.p,
        "delta_beta": delta_beta,
        "delta_gamma": delta_gamma,
        "shots": cfg.shots,
        "mitigate": cfg.mitigate,
        "noise": cfg.noise,
    });
    let hash = sha256_hex(&key);
    let path = out_dir.join("runs").join(format!("{hash}.json"));
    if let Some(rec) = std::fs::read(&path)
        .ok()
        .and_then(|b| serde_json::from_slice::<RunRecord>(&b).ok())
    {
        return Ok((rec, true));
    }
    let rec = compute_record(cfg, &inst, job, delta_beta, delta_gamma, hash)?;
    let bytes = serde_json::to_vec_pretty(&rec)?;
    tx.send((path, bytes))
        .map_err(|_| Error::Io(std::io::Error::other("result writer stopped")))?;
    Ok((rec, false))
}

fn compute_record(
    cfg: &ExperimentConfig,
    inst: &ProblemInstance,
    job: &Job,
    delta_beta: f64,
    delta_gamma: f64,
    hash: String,
) -> Result<RunRecord> {
    let eval = Evaluator::new(inst, cfg.noise)?;
    let schedule = build_schedule(delta_beta, delta_gamma, job.p)?;
    let probs = eval.probabilities(&schedule)?;
    let success_prob = eval.success(&probs);
    let mean_energy = eval.mean_energy(&probs);
    let approx_ratio = inst.cut_graph().and_then(|g| {
        let w = g.total_weight();
        let best = (w - inst.scale * eval.truth.optimal_energy) / 2.0;
        (best > 0.0).then(|| (w - inst.scale * mean_energy) / 2.0 / best)
    });
    let (mut sampled_success, mut mitigated_success) = (None, None);
    if cfg.shots > 0 {
        let samples = simulator::sample_probabilities(&probs, job.n, cfg.shots, shot_seed(job.seed, job.n, job.p))?;
        sampled_success = Some(metrics::success_probability_sampled(&samples, &eval.truth));
        if cfg.mitigate {
            let m = metrics::mitigate_hd1(&samples, &inst.model)?;
            mitigated_success = Some(metrics::success_probability_sampled(&m, &eval.truth));
        }
    }
    Ok(RunRecord {
        family: inst.family.name().to_string(),
        n_qubits: job.n,
        p: job.p,
        seed: job.seed,
        delta_beta,
        delta_gamma,
        success_prob,
        p_random: eval.p_random(),
        degeneracy: eval.truth.degeneracy(),
        optimal_energy: eval.truth.optimal_energy,
        mean_energy,
        approx_ratio,
        lambda: cfg.noise.map(|n| n.lambda),
        two_qubit_gates: if inst.model.is_quadratic() {
            noise::gate_count(&inst.model, job.p)
        } else {
            0
        },
        shots: cfg.shots,
        sampled_success,
        mitigated_success,
        hash,
    })
}

pub fn aggregate_csv(records: &[RunRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn read_aggregate_csv(text: &str) -> Result<Vec<RunRecord>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<std::result::Result<Vec<RunRecord>, _>>()?)
}

/// Quartiles per (size, p) and a scaling fit per p.
pub fn summarize(records: &[RunRecord], n_q_min: usize) -> ExperimentSummary {
    let mut groups: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    for r in records {
        groups.entry((r.n_qubits, r.p)).or_default().push(r.success_prob);
    }
    let sizes = groups
        .iter()
        .map(|(&(n, p), v)| {
            let (q1, median, q3) = stats::quartiles(v).expect("group is non-empty");
            SizeSummary {
                n_qubits: n,
                p,
                runs: v.len(),
                median,
                q1,
                q3,
            }
        })
        .collect();
    let mut by_p: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
    for r in records {
        by_p.entry(r.p).or_default().push((r.n_qubits, r.success_prob));
    }
    let fits = by_p
        .into_iter()
        .map(
            |(p, pts)| match metrics::fit_scaling(&pts, n_q_min, ScalingMode::PerSizeMean) {
                Ok(fit) => DepthFit {
                    p,
                    fit: Some(fit),
                    error: None,
                },
                Err(e) => DepthFit {
                    p,
                    fit: None,
                    error: Some(e.to_string()),
                },
            },
        )
        .collect();
    ExperimentSummary { sizes, fits }
}
