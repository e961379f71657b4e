//! Classical reference solvers and time-to-solution.
//!
//! Both solvers work on spins with O(degree) single-flip energy deltas, so
//! cubic models are supported too. Every read draws from its own RNG stream
//! `(seed, read)`, which keeps results independent of thread scheduling.

use std::time::Instant;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::ising::{GroundTruth, IsingModel, Neighborhood};
use crate::rng;
use crate::samples::SampleSet;
use crate::stats;

/// Sweep counts tried per solver when picking the best TTS.
pub const DEFAULT_SWEEPS: [usize; 4] = [50, 100, 200, 500];
/// Default target confidence for TTS.
pub const DEFAULT_PD: f64 = 0.99;
/// Two-qubit gate time used for LR-QAOA TTS curves, in seconds.
pub const REFERENCE_T2Q: f64 = 2.5e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BetaKind {
    Geometric,
    Linear,
}

/// Inverse-temperature ramp. Without an explicit range, the ends are
/// `0.1 / s` and `10 / s` where `s` is the largest single-flip `|dE|` at a
/// random state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaSchedule {
    pub kind: BetaKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<(f64, f64)>,
}

impl Default for BetaSchedule {
    fn default() -> Self {
        BetaSchedule {
            kind: BetaKind::Geometric,
            range: None,
        }
    }
}

impl BetaSchedule {
    fn betas(&self, lo: f64, hi: f64, sweeps: usize) -> Vec<f64> {
        if sweeps == 1 {
            return vec![hi];
        }
        let last = (sweeps - 1) as f64;
        (0..sweeps)
            .map(|s| {
                let t = s as f64 / last;
                match self.kind {
                    BetaKind::Geometric => lo * (hi / lo).powf(t),
                    BetaKind::Linear => lo + (hi - lo) * t,
                }
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnealConfig {
    pub sweeps: usize,
    pub reads: usize,
    #[serde(default)]
    pub beta_schedule: BetaSchedule,
    #[serde(default)]
    pub seed: u64,
}

impl AnnealConfig {
    pub fn new(sweeps: usize, reads: usize, seed: u64) -> Self {
        AnnealConfig {
            sweeps,
            reads,
            beta_schedule: BetaSchedule::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweeps == 0 || self.reads == 0 {
            return Err(Error::param("sweeps and reads must be at least 1"));
        }
        if let Some((lo, hi)) = self.beta_schedule.range {
            if !(lo > 0.0 && lo < hi && hi.is_finite()) {
                return Err(Error::param(format!("need 0 < beta_min < beta_max, got ({lo}, {hi})")));
            }
        }
        Ok(())
    }
}

/// One tabu iteration scores every variable and makes one move, so
/// `iterations` plays the role of sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabuConfig {
    pub iterations: usize,
    /// Defaults to `max(10, n / 4)`, capped at `n - 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tenure: Option<usize>,
    pub reads: usize,
    #[serde(default)]
    pub seed: u64,
}

impl TabuConfig {
    pub fn new(iterations: usize, reads: usize, seed: u64) -> Self {
        TabuConfig {
            iterations,
            tenure: None,
            reads,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.reads == 0 {
            return Err(Error::param("iterations and reads must be at least 1"));
        }
        if self.tenure == Some(0) {
            return Err(Error::param("tabu tenure must be at least 1"));
        }
        Ok(())
    }

    pub fn tenure_for(&self, n: usize) -> usize {
        self.tenure.unwrap_or(10.max(n / 4)).min(n.saturating_sub(1))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadRecord {
    pub read: usize,
    pub energy: f64,
    pub bits: BitString,
    pub seconds: f64,
}

/// Per-read results of a classical solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverRun {
    pub reads: Vec<ReadRecord>,
}

impl SolverRun {
    pub fn samples(&self) -> Result<SampleSet> {
        let set = SampleSet::from_shots(self.reads.iter().map(|r| r.bits.clone()))?;
        Ok(set)
    }

    pub fn best(&self) -> Option<&ReadRecord> {
        self.reads
            .iter()
            .min_by(|a, b| a.energy.total_cmp(&b.energy).then(a.read.cmp(&b.read)))
    }

    /// Fraction of reads that reached the optimum.
    pub fn success_probability(&self, truth: &GroundTruth) -> f64 {
        if self.reads.is_empty() {
            return 0.0;
        }
        let hits = self.reads.iter().filter(|r| truth.is_optimal_energy(r.energy)).count();
        hits as f64 / self.reads.len() as f64
    }

    pub fn median_seconds(&self) -> f64 {
        let secs: Vec<f64> = self.reads.iter().map(|r| r.seconds).collect();
        stats::median(&secs).unwrap_or(0.0)
    }

    /// `read,energy,bits,seconds` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("read,energy,bits,seconds\n");
        for r in &self.reads {
            out.push_str(&format!("{},{},{},{}\n", r.read, r.energy, r.bits, r.seconds));
        }
        out
    }
}

fn random_spins(n: usize, rng: &mut rng::Rng) -> Vec<i8> {
    (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect()
}

fn spins_to_bits(s: &[i8]) -> BitString {
    BitString::from_bools(&s.iter().map(|&v| v < 0).collect::<Vec<_>>())
}

fn energy_of_spins(model: &IsingModel, s: &[i8]) -> Result<f64> {
    model.energy(&spins_to_bits(s))
}

/// Largest single-flip `|dE|` at a random state; 1 if the model is flat.
pub fn flip_scale(model: &IsingModel, seed: u64) -> f64 {
    let nb = model.neighborhood();
    let mut rng = rng::stream(seed, u64::MAX);
    let s = random_spins(model.num_vars(), &mut rng);
    let m = (0..s.len()).map(|i| nb.flip_delta(i, &s).abs()).fold(0.0, f64::max);
    if m > 0.0 {
        m
    } else {
        1.0
    }
}

fn check_model(model: &IsingModel) -> Result<()> {
    if model.num_vars() == 0 {
        return Err(Error::param("model has no variables"));
    }
    Ok(())
}

/// Metropolis annealing with sequential single-spin updates. Each read
/// reports the lowest-energy state it visited.
pub fn simulated_annealing(model: &IsingModel, cfg: &AnnealConfig) -> Result<SolverRun> {
    cfg.validate()?;
    check_model(model)?;
    let nb = model.neighborhood();
    let (lo, hi) = cfg.beta_schedule.range.unwrap_or_else(|| {
        let s = flip_scale(model, cfg.seed);
        (0.1 / s, 10.0 / s)
    });
    let betas = cfg.beta_schedule.betas(lo, hi, cfg.sweeps);
    let reads = (0..cfg.reads)
        .into_par_iter()
        .map(|read| anneal_read(model, &nb, &betas, cfg.seed, read))
        .collect::<Result<Vec<_>>>()?;
    Ok(SolverRun { reads })
}

fn anneal_read(model: &IsingModel, nb: &Neighborhood, betas: &[f64], seed: u64, read: usize) -> Result<ReadRecord> {
    let mut rng = rng::stream(seed, read as u64);
    let start = Instant::now();
    let n = model.num_vars();
    let mut s = random_spins(n, &mut rng);
    let mut energy = energy_of_spins(model, &s)?;
    let mut best = (energy, s.clone());
    for &beta in betas {
        for i in 0..n {
            let d = nb.flip_delta(i, &s);
            if d <= 0.0 || rng.random::<f64>() < (-beta * d).exp() {
                s[i] = -s[i];
                energy += d;
                if energy < best.0 {
                    best = (energy, s.clone());
                }
            }
        }
    }
    let seconds = start.elapsed().as_secs_f64();
    // re-evaluate to shed drift from the running sum
    let energy = energy_of_spins(model, &best.1)?;
    Ok(ReadRecord {
        read,
        energy,
        bits: spins_to_bits(&best.1),
        seconds,
    })
}

/// Steepest-descent tabu search over single flips with aspiration.
pub fn tabu_search(model: &IsingModel, cfg: &TabuConfig) -> Result<SolverRun> {
    cfg.validate()?;
    check_model(model)?;
    let nb = model.neighborhood();
    let tenure = cfg.tenure_for(model.num_vars());
    let reads = (0..cfg.reads)
        .into_par_iter()
        .map(|read| tabu_read(model, &nb, cfg.iterations, tenure, cfg.seed, read))
        .collect::<Result<Vec<_>>>()?;
    Ok(SolverRun { reads })
}

fn tabu_read(
    model: &IsingModel,
    nb: &Neighborhood,
    iterations: usize,
    tenure: usize,
    seed: u64,
    read: usize,
) -> Result<ReadRecord> {
    let mut rng = rng::stream(seed, read as u64);
    let start = Instant::now();
    let n = model.num_vars();
    let mut s = random_spins(n, &mut rng);
    let mut energy = energy_of_spins(model, &s)?;
    let mut best = (energy, s.clone());
    // variable i is tabu while iteration < tabu_until[i]
    let mut tabu_until = vec![0usize; n];
    let tol = 1e-12 * energy.abs().max(1.0);
    for it in 0..iterations {
        let mut choice: Option<(usize, f64)> = None;
        for i in 0..n {
            let d = nb.flip_delta(i, &s);
            let allowed = tabu_until[i] <= it || energy + d < best.0 - tol;
            if allowed && choice.is_none_or(|(_, bd)| d < bd) {
                choice = Some((i, d));
            }
        }
        let Some((i, d)) = choice else { continue };
        s[i] = -s[i];
        energy += d;
        tabu_until[i] = it + 1 + tenure;
        if energy < best.0 - tol {
            best = (energy, s.clone());
        }
    }
    let seconds = start.elapsed().as_secs_f64();
    let energy = energy_of_spins(model, &best.1)?;
    Ok(ReadRecord {
        read,
        energy,
        bits: spins_to_bits(&best.1),
        seconds,
    })
}

/// Time to reach the optimum at least once with confidence `p_d`:
/// `T ln(1 - p_d) / ln(1 - p)`. Infinite when `p = 0`; `T` when `p >= 1`.
pub fn tts(success_prob: f64, time_per_sample: f64, p_d: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&success_prob) || success_prob.is_nan() {
        return Err(Error::param(format!(
            "success probability {success_prob} outside [0, 1]"
        )));
    }
    if !(p_d > 0.0 && p_d < 1.0) {
        return Err(Error::param(format!("target confidence {p_d} outside (0, 1)")));
    }
    if !(time_per_sample > 0.0 && time_per_sample.is_finite()) {
        return Err(Error::param("time per sample must be positive"));
    }
    if success_prob == 0.0 {
        return Ok(f64::INFINITY);
    }
    if success_prob >= 1.0 {
        return Ok(time_per_sample);
    }
    Ok(time_per_sample * (-p_d).ln_1p() / (-success_prob).ln_1p())
}

/// Duration of one LR-QAOA shot on a linear chain: `t_2q (2 N_q + 2) p`.
pub fn lr_qaoa_shot_time(n_qubits: usize, p: usize, t_2q: f64) -> f64 {
    t_2q * (2 * n_qubits + 2) as f64 * p as f64
}

pub fn lr_qaoa_tts(success_prob: f64, n_qubits: usize, p: usize, t_2q: f64, p_d: f64) -> Result<f64> {
    if n_qubits == 0 || p == 0 {
        return Err(Error::param("qubit count and layers must be positive"));
    }
    tts(success_prob, lr_qaoa_shot_time(n_qubits, p, t_2q), p_d)
}

/// How the duration of one classical read is measured.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeModel {
    /// Median measured seconds per read.
    WallClock,
    /// `sweeps * n * seconds_per_update`: machine-independent and
    /// reproducible.
    SpinUpdates { seconds_per_update: f64 },
}

impl Default for TimeModel {
    fn default() -> Self {
        TimeModel::SpinUpdates {
            seconds_per_update: 1e-9,
        }
    }
}

impl TimeModel {
    pub fn read_time(&self, run: &SolverRun, sweeps: usize, n: usize) -> f64 {
        match *self {
            TimeModel::WallClock => run.median_seconds().max(f64::MIN_POSITIVE),
            TimeModel::SpinUpdates { seconds_per_update } => (sweeps * n) as f64 * seconds_per_update,
        }
    }
}

/// A benchmark instance with its exact optimum.
#[derive(Clone, Debug)]
pub struct SolvedInstance {
    pub id: String,
    pub model: IsingModel,
    pub truth: GroundTruth,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardSelection {
    /// Indices into the input, hardest first.
    pub selected: Vec<usize>,
    pub sa_tts: Vec<f64>,
    pub tabu_tts: Vec<f64>,
    /// Correlation between SA and tabu TTS over instances where both are
    /// finite.
    pub pcc: Option<f64>,
}

/// Ranks instances by SA TTS and keeps the `k` slowest. Ties keep input
/// order.
pub fn select_hard_instances(
    instances: &[SolvedInstance],
    sa: &AnnealConfig,
    tabu: &TabuConfig,
    k: usize,
    time: TimeModel,
) -> Result<HardSelection> {
    if k > instances.len() {
        return Err(Error::param(format!(
            "cannot select {k} of {} instances",
            instances.len()
        )));
    }
    let mut sa_tts = Vec::with_capacity(instances.len());
    let mut tabu_tts = Vec::with_capacity(instances.len());
    for inst in instances {
        let n = inst.model.num_vars();
        let run = simulated_annealing(&inst.model, sa)?;
        sa_tts.push(tts(
            run.success_probability(&inst.truth),
            time.read_time(&run, sa.sweeps, n),
            DEFAULT_PD,
        )?);
        let run = tabu_search(&inst.model, tabu)?;
        tabu_tts.push(tts(
            run.success_probability(&inst.truth),
            time.read_time(&run, tabu.iterations, n),
            DEFAULT_PD,
        )?);
    }
    let mut order: Vec<usize> = (0..instances.len()).collect();
    order.sort_by(|&a, &b| sa_tts[b].total_cmp(&sa_tts[a]).then(a.cmp(&b)));
    order.truncate(k);
    let (x, y): (Vec<f64>, Vec<f64>) = sa_tts
        .iter()
        .zip(&tabu_tts)
        .filter(|(a, b)| a.is_finite() && b.is_finite())
        .map(|(a, b)| (*a, *b))
        .unzip();
    Ok(HardSelection {
        selected: order,
        pcc: stats::pearson(&x, &y),
        sa_tts,
        tabu_tts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::brute_force;

    fn edge() -> IsingModel {
        let mut m = IsingModel::new(2);
        m.add_quadratic(0, 1, 1.0).unwrap();
        m
    }

    #[test]
    fn tts_examples() {
        assert!((tts(0.5, 1.0, 0.99).unwrap() - 6.643856189774724).abs() < 1e-12);
        assert!((tts(0.99, 1.0, 0.99).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(tts(0.0, 1.0, 0.99).unwrap(), f64::INFINITY);
        assert_eq!(tts(1.0, 2.0, 0.99).unwrap(), 2.0);
        assert!(tts(1.2, 1.0, 0.99).is_err());
        assert!(tts(0.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn lr_qaoa_shot_time_example() {
        let t = lr_qaoa_shot_time(20, 100, 2.5e-9);
        assert!((t - 1.05e-5).abs() < 1e-18);
        let v = lr_qaoa_tts(0.5, 20, 100, 2.5e-9, 0.99).unwrap();
        assert!((v - 1.05e-5 * 6.643856189774724).abs() < 1e-15);
    }

    #[test]
    fn anneal_solves_single_edge() {
        let m = edge();
        let gt = brute_force(&m, false).unwrap();
        let run = simulated_annealing(&m, &AnnealConfig::new(100, 100, 7)).unwrap();
        assert!(run.success_probability(&gt) >= 0.99);
        assert_eq!(run.reads.len(), 100);
    }

    #[test]
    fn tabu_solves_single_edge_quickly() {
        let m = edge();
        let gt = brute_force(&m, false).unwrap();
        let run = tabu_search(&m, &TabuConfig::new(2, 20, 1)).unwrap();
        assert_eq!(run.success_probability(&gt), 1.0);
    }

    #[test]
    fn solvers_are_deterministic() {
        let mut m = IsingModel::new(8);
        for i in 0..8 {
            for j in i + 1..8 {
                m.add_quadratic(i, j, ((i * 7 + j * 3) % 5) as f64 - 2.0).unwrap();
            }
        }
        let cfg = AnnealConfig::new(20, 16, 5);
        let a = simulated_annealing(&m, &cfg).unwrap();
        let b = simulated_annealing(&m, &cfg).unwrap();
        let strip = |r: &SolverRun| r.reads.iter().map(|x| (x.bits.clone(), x.energy)).collect::<Vec<_>>();
        assert_eq!(strip(&a), strip(&b));
        let t = TabuConfig::new(30, 16, 5);
        assert_eq!(
            strip(&tabu_search(&m, &t).unwrap()),
            strip(&tabu_search(&m, &t).unwrap())
        );
    }

    #[test]
    fn tenure_default_and_cap() {
        let t = TabuConfig::new(10, 1, 0);
        assert_eq!(t.tenure_for(100), 25);
        assert_eq!(t.tenure_for(12), 10);
        assert_eq!(t.tenure_for(6), 5);
        assert!(TabuConfig { tenure: Some(0), ..t }.validate().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(AnnealConfig::new(0, 1, 0).validate().is_err());
        let mut c = AnnealConfig::new(10, 1, 0);
        c.beta_schedule.range = Some((1.0, 0.5));
        assert!(c.validate().is_err());
    }

    #[test]
    fn linear_and_geometric_ramps() {
        let g = BetaSchedule::default().betas(0.1, 10.0, 3);
        assert!((g[1] - 1.0).abs() < 1e-12);
        let l = BetaSchedule {
            kind: BetaKind::Linear,
            range: None,
        }
        .betas(0.0, 1.0, 3);
        assert_eq!(l, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn selecting_everything_keeps_every_index() {
        let inst: Vec<SolvedInstance> = (0..4)
            .map(|s| {
                let mut m = IsingModel::new(4);
                m.add_quadratic(0, 1, 1.0 + s as f64).unwrap();
                m.add_quadratic(2, 3, -1.0).unwrap();
                let truth = brute_force(&m, false).unwrap();
                SolvedInstance {
                    id: s.to_string(),
                    model: m,
                    truth,
                }
            })
            .collect();
        let sel = select_hard_instances(
            &inst,
            &AnnealConfig::new(5, 10, 1),
            &TabuConfig::new(5, 10, 1),
            4,
            TimeModel::default(),
        )
        .unwrap();
        let mut idx = sel.selected.clone();
        idx.sort();
        assert_eq!(idx, vec![0, 1, 2, 3]);
        assert!(select_hard_instances(
            &inst,
            &AnnealConfig::new(5, 1, 1),
            &TabuConfig::new(5, 1, 1),
            5,
            TimeModel::default()
        )
        .is_err());
    }
}
