//! TTS scaling comparison between classical solvers and LR-QAOA.
//!
//! For every size: generate instances, keep the `hard_k` with the longest
//! SA TTS, then measure each solver's best TTS over its configurations on
//! that subset. Exponents come from a least-squares line through
//! `log2(median TTS)` against size.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    lr_qaoa_tts, select_hard_instances, simulated_annealing, tabu_search, tts, AnnealConfig, SolvedInstance,
    TabuConfig, TimeModel, DEFAULT_PD, DEFAULT_SWEEPS, REFERENCE_T2Q,
};
use crate::error::{Error, Result};
use crate::ising::brute_force;
use crate::problems::{Family, GeneratorSpec};
use crate::schedule::{build_schedule, DEFAULT_DELTA_BETA, DEFAULT_DELTA_GAMMA};
use crate::simulator::{run, success_probability, RunOptions};
use crate::stats;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    pub problem: GeneratorSpec,
    pub sizes: Vec<usize>,
    pub instances_per_size: usize,
    pub hard_k: usize,
    #[serde(default = "default_sweeps")]
    pub sa_sweeps: Vec<usize>,
    #[serde(default = "default_sweeps")]
    pub tabu_sweeps: Vec<usize>,
    /// Sweeps of the SA run that ranks instances by hardness.
    #[serde(default = "default_selection_sweeps")]
    pub selection_sweeps: usize,
    #[serde(default = "default_reads")]
    pub reads: usize,
    #[serde(default = "default_p_values")]
    pub p_values: Vec<usize>,
    #[serde(default = "default_db")]
    pub delta_beta: f64,
    #[serde(default = "default_dg")]
    pub delta_gamma: f64,
    #[serde(default = "default_t2q")]
    pub t_2q: f64,
    #[serde(default)]
    pub time_model: TimeModel,
    #[serde(default = "default_pd")]
    pub p_d: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_sweeps() -> Vec<usize> {
    DEFAULT_SWEEPS.to_vec()
}
fn default_selection_sweeps() -> usize {
    100
}
fn default_reads() -> usize {
    100
}
fn default_p_values() -> Vec<usize> {
    vec![50, 100]
}
fn default_db() -> f64 {
    DEFAULT_DELTA_BETA
}
fn default_dg() -> f64 {
    DEFAULT_DELTA_GAMMA
}
fn default_t2q() -> f64 {
    REFERENCE_T2Q
}
fn default_pd() -> f64 {
    DEFAULT_PD
}

impl CompareConfig {
    /// Fully connected weighted Maxcut with the reference settings.
    pub fn fc_wmaxcut(sizes: Vec<usize>, instances_per_size: usize, hard_k: usize) -> CompareConfig {
        CompareConfig {
            problem: GeneratorSpec::FcWmaxcut,
            sizes,
            instances_per_size,
            hard_k,
            sa_sweeps: default_sweeps(),
            tabu_sweeps: default_sweeps(),
            selection_sweeps: default_selection_sweeps(),
            reads: default_reads(),
            p_values: default_p_values(),
            delta_beta: DEFAULT_DELTA_BETA,
            delta_gamma: DEFAULT_DELTA_GAMMA,
            t_2q: REFERENCE_T2Q,
            time_model: TimeModel::default(),
            p_d: DEFAULT_PD,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() || self.sa_sweeps.is_empty() || self.tabu_sweeps.is_empty() || self.p_values.is_empty()
        {
            return Err(Error::param("sizes, sweeps and p_values must be non-empty"));
        }
        if self.hard_k == 0 || self.hard_k > self.instances_per_size {
            return Err(Error::param(format!(
                "hard_k must lie in 1..={}, got {}",
                self.instances_per_size, self.hard_k
            )));
        }
        if self.problem.family() == Family::Imported {
            return Err(Error::param("comparison needs a generated family"));
        }
        Ok(())
    }
}

/// Best TTS of one solver on one hard instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TtsRow {
    pub solver: String,
    pub n_qubits: usize,
    pub instance: String,
    pub tts: f64,
    /// Sweeps (classical) or layers (LR-QAOA) that gave the best TTS.
    pub setting: usize,
    pub success_prob: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeStats {
    pub n_qubits: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub finite: usize,
}

/// `TTS ~ 2^(exponent * N_q + intercept)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TtsScaling {
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverScaling {
    pub solver: String,
    pub per_size: Vec<SizeStats>,
    pub fit: Option<TtsScaling>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub rows: Vec<TtsRow>,
    pub solvers: Vec<SolverScaling>,
    /// SA/tabu TTS correlation per size over all generated instances.
    pub pcc: Vec<(usize, Option<f64>)>,
}

impl CompareReport {
    pub fn rows_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn solver(&self, name: &str) -> Option<&SolverScaling> {
        self.solvers.iter().find(|s| s.solver == name)
    }
}

/// Line through `log2(tts)` against size, using finite values only.
pub fn fit_tts_scaling(points: &[(usize, f64)]) -> Result<TtsScaling> {
    let (x, y): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|p| p.1.is_finite() && p.1 > 0.0)
        .map(|&(n, t)| (n as f64, t.log2()))
        .unzip();
    let line = stats::ols(&x, &y)?;
    Ok(TtsScaling {
        exponent: line.slope,
        intercept: line.intercept,
        r_squared: line.r_squared,
    })
}

/// Per-size quartiles of TTS and the fit through the medians.
pub fn solver_scaling(solver: &str, rows: &[TtsRow]) -> SolverScaling {
    let mut by_size: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.solver == solver) {
        by_size.entry(r.n_qubits).or_default().push(r.tts);
    }
    let per_size: Vec<SizeStats> = by_size
        .iter()
        .map(|(&n, v)| {
            let (q1, median, q3) = stats::quartiles(v).expect("non-empty");
            SizeStats {
                n_qubits: n,
                median,
                q1,
                q3,
                finite: v.iter().filter(|t| t.is_finite()).count(),
            }
        })
        .collect();
    let medians: Vec<(usize, f64)> = per_size.iter().map(|s| (s.n_qubits, s.median)).collect();
    SolverScaling {
        solver: solver.to_string(),
        fit: fit_tts_scaling(&medians).ok(),
        per_size,
    }
}

fn instance_seed(base: u64, n: usize, i: usize) -> u64 {
    base.wrapping_mul(1_000_003)
        .wrapping_add((n as u64) << 20)
        .wrapping_add(i as u64)
}

pub fn compare_solvers(cfg: &CompareConfig) -> Result<CompareReport> {
    cfg.validate()?;
    let mut rows = Vec::new();
    let mut pcc = Vec::new();
    for &n in &cfg.sizes {
        let instances = (0..cfg.instances_per_size)
            .into_par_iter()
            .map(|i| {
                let seed = instance_seed(cfg.seed, n, i);
                let inst = cfg.problem.generate(n, seed)?;
                let truth = brute_force(&inst.model, false)?;
                Ok(SolvedInstance {
                    id: format!("n{n}_s{seed}"),
                    model: inst.model,
                    truth,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let sel = select_hard_instances(
            &instances,
            &AnnealConfig::new(cfg.selection_sweeps, cfg.reads, cfg.seed),
            &TabuConfig::new(cfg.selection_sweeps, cfg.reads, cfg.seed),
            cfg.hard_k,
            cfg.time_model,
        )?;
        pcc.push((n, sel.pcc));
        for &idx in &sel.selected {
            rows.extend(solve_hard(cfg, &instances[idx])?);
        }
    }
    let solvers = ["sa", "tabu", "lr_qaoa"]
        .iter()
        .map(|s| solver_scaling(s, &rows))
        .collect();
    Ok(CompareReport { rows, solvers, pcc })
}

fn best_row(rows: Vec<TtsRow>) -> TtsRow {
    rows.into_iter()
        .reduce(|a, b| if b.tts < a.tts { b } else { a })
        .expect("at least one setting")
}

fn solve_hard(cfg: &CompareConfig, inst: &SolvedInstance) -> Result<Vec<TtsRow>> {
    let n = inst.model.num_vars();
    let row = |solver: &str, t: f64, setting: usize, prob: f64| TtsRow {
        solver: solver.to_string(),
        n_qubits: n,
        instance: inst.id.clone(),
        tts: t,
        setting,
        success_prob: prob,
    };
    let mut sa = Vec::new();
    for &sweeps in &cfg.sa_sweeps {
        let r = simulated_annealing(&inst.model, &AnnealConfig::new(sweeps, cfg.reads, cfg.seed))?;
        let prob = r.success_probability(&inst.truth);
        sa.push(row(
            "sa",
            tts(prob, cfg.time_model.read_time(&r, sweeps, n), cfg.p_d)?,
            sweeps,
            prob,
        ));
    }
    let mut tb = Vec::new();
    for &sweeps in &cfg.tabu_sweeps {
        let r = tabu_search(&inst.model, &TabuConfig::new(sweeps, cfg.reads, cfg.seed))?;
        let prob = r.success_probability(&inst.truth);
        tb.push(row(
            "tabu",
            tts(prob, cfg.time_model.read_time(&r, sweeps, n), cfg.p_d)?,
            sweeps,
            prob,
        ));
    }
    let mut qa = Vec::new();
    for &p in &cfg.p_values {
        let s = build_schedule(cfg.delta_beta, cfg.delta_gamma, p)?;
        let state = run(&inst.model, &s, &RunOptions::default())?.state;
        let prob = success_probability(&state, &inst.truth)?;
        qa.push(row("lr_qaoa", lr_qaoa_tts(prob, n, p, cfg.t_2q, cfg.p_d)?, p, prob));
    }
    Ok(vec![best_row(sa), best_row(tb), best_row(qa)])
}

/// Reads externally produced `instance,n_qubits,tts` rows (e.g. from an
/// exact solver) as rows for `solver`.
pub fn external_rows(solver: &str, text: &str) -> Result<Vec<TtsRow>> {
    #[derive(Deserialize)]
    struct Ext {
        instance: String,
        n_qubits: usize,
        tts: f64,
    }
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize::<Ext>()
        .map(|e| {
            let e = e?;
            Ok(TtsRow {
                solver: solver.to_string(),
                n_qubits: e.n_qubits,
                instance: e.instance,
                tts: e.tts,
                setting: 0,
                success_prob: f64::NAN,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_exponent_recovery() {
        let pts: Vec<(usize, f64)> = (10..=18).map(|n| (n, (0.19 * n as f64 - 3.0).exp2())).collect();
        let f = fit_tts_scaling(&pts).unwrap();
        assert!((f.exponent - 0.19).abs() < 1e-9);
        assert!((f.intercept + 3.0).abs() < 1e-9);
    }

    #[test]
    fn trivial_instance_has_finite_tts() {
        let mut cfg = CompareConfig::fc_wmaxcut(vec![4], 1, 1);
        cfg.reads = 20;
        cfg.sa_sweeps = vec![20];
        cfg.tabu_sweeps = vec![20];
        cfg.p_values = vec![10];
        let rep = compare_solvers(&cfg).unwrap();
        assert_eq!(rep.rows.len(), 3);
        assert!(rep.rows.iter().all(|r| r.tts.is_finite()));
    }

    #[test]
    fn rejects_oversized_selection() {
        let cfg = CompareConfig::fc_wmaxcut(vec![4], 2, 3);
        assert!(cfg.validate().is_err());
    }
}
