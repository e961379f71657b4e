//! Depolarizing noise on two-qubit gates.
//!
//! A cost layer is decomposed into one `exp(-i gamma J_ij Z_i Z_j)` gate per
//! nonzero coupling, in sorted `(i, j)` order, plus noiseless single-qubit
//! `Z` phases for the fields. After every two-qubit gate on `(i, j)` the
//! channel
//!
//! ```text
//! rho <- (1 - lambda) rho + (lambda / 4) Tr_ij(rho) (x) I_ij
//! ```
//!
//! is applied. Mixer rotations are single-qubit gates and stay ideal.
//!
//! Two backends are provided. [`run_noisy_density`] evolves the full density
//! matrix (up to [`DENSITY_CAP`] qubits). [`run_noisy_trajectory`] unravels the
//! channel: after each gate, with probability `lambda`, one of the 16
//! two-qubit Paulis (identity included) is drawn uniformly and applied.
//!
//! For the analysis side, the overlap `p_ovl = (p_qpu - p_r) / (p_ideal - p_r)`
//! is modelled as `2^(-k0 eps)` with accumulated error `eps = N_g lambda`.

use num_complex::Complex64;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::ising::IsingModel;
use crate::rng;
use crate::samples::SampleSet;
use crate::schedule::LinearRampSchedule;
use crate::simulator::{
    apply_cost_phase, apply_mixer, apply_pair_kernel, check_cap, mixer_gate, EnergyTable, Gate1, StateVector, STATE_CAP,
};
use crate::stats;

/// Density matrices hold `4^n` amplitudes; 10 qubits is 16 MiB.
pub const DENSITY_CAP: usize = 10;

/// Trajectories per work unit. Fixed so that floating-point sums do not
/// depend on the number of worker threads.
const TRAJECTORY_BLOCK: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NoiseBackend {
    DensityMatrix,
    Trajectory,
}

impl NoiseBackend {
    pub fn parse(s: &str) -> Result<NoiseBackend> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "density_matrix" | "density" | "dm" => Ok(NoiseBackend::DensityMatrix),
            "trajectory" | "trajectories" => Ok(NoiseBackend::Trajectory),
            other => Err(Error::param(format!("unknown noise backend \"{other}\""))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub lambda: f64,
    pub backend: NoiseBackend,
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_trajectories() -> usize {
    1000
}

impl NoiseConfig {
    pub fn density(lambda: f64) -> NoiseConfig {
        NoiseConfig {
            lambda,
            backend: NoiseBackend::DensityMatrix,
            trajectories: 1,
            seed: 0,
        }
    }

    pub fn trajectory(lambda: f64, trajectories: usize, seed: u64) -> NoiseConfig {
        NoiseConfig {
            lambda,
            backend: NoiseBackend::Trajectory,
            trajectories,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::param(format!("lambda must lie in [0, 1], got {}", self.lambda)));
        }
        if self.trajectories == 0 {
            return Err(Error::param("at least one trajectory is required"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    /// `exp(-i gamma coeff Z_i Z_j)`
    ZZ { i: usize, j: usize, coeff: f64 },
    /// `exp(-i gamma coeff Z_i)`
    Z { i: usize, coeff: f64 },
}

/// Gates of one cost layer: all `ZZ` gates in sorted order, then the `Z`
/// phases. The angle `gamma` is applied by the caller.
pub fn decompose_cost_layer(model: &IsingModel) -> Result<Vec<Gate>> {
    if !model.is_quadratic() {
        return Err(Error::Unsupported(
            "noisy simulation needs a model without cubic terms".into(),
        ));
    }
    let zz = model
        .quadratic()
        .iter()
        .map(|(&(i, j), &coeff)| Gate::ZZ { i, j, coeff });
    let z = model.linear().iter().map(|(&i, &coeff)| Gate::Z { i, coeff });
    Ok(zz.chain(z).collect())
}

/// Two-qubit gates per cost layer.
pub fn two_qubit_gates_per_layer(model: &IsingModel) -> usize {
    model.quadratic().len()
}

/// `N_g` for a `p`-layer run. Mixer gates are single-qubit and not counted.
pub fn gate_count(model: &IsingModel, p: usize) -> usize {
    two_qubit_gates_per_layer(model) * p
}

fn zz_couplings(model: &IsingModel) -> Result<Vec<(usize, usize, f64)>> {
    decompose_cost_layer(model).map(|gates| {
        gates
            .into_iter()
            .filter_map(|g| match g {
                Gate::ZZ { i, j, coeff } => Some((i, j, coeff)),
                Gate::Z { .. } => None,
            })
            .collect()
    })
}

fn field_energies(model: &IsingModel) -> Result<EnergyTable> {
    let mut fields = IsingModel::new(model.num_vars());
    for (&i, &h) in model.linear() {
        fields.add_linear(i, h)?;
    }
    EnergyTable::with_cap(&fields, STATE_CAP)
}

/// Sign `s_i s_j` of basis index `k`.
#[inline]
fn zz_sign(k: usize, i: usize, j: usize) -> f64 {
    if ((k >> i) ^ (k >> j)) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Density matrix over `n` qubits, stored flat with row qubit `m` at bit
/// `n + m` and column qubit `m` at bit `m`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    num_qubits: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    /// `|+><+|` on `n` qubits.
    pub fn plus(n: usize) -> Result<DensityMatrix> {
        if n == 0 {
            return Err(Error::param("a state needs at least one qubit"));
        }
        check_cap(n, DENSITY_CAP)?;
        let v = Complex64::new(1.0 / (1u64 << n) as f64, 0.0);
        Ok(DensityMatrix {
            num_qubits: n,
            data: vec![v; 1 << (2 * n)],
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[(row << self.num_qubits) | col]
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|k| self.get(k, k)).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.get(k, k).re).collect()
    }

    /// `rho_rc <- exp(-i gamma (E_r - E_c)) rho_rc`.
    fn apply_diagonal(&mut self, phase_of: impl Fn(usize) -> f64 + Sync, gamma: f64) {
        let n = self.num_qubits;
        let mask = self.dim() - 1;
        self.data.par_iter_mut().enumerate().for_each(|(idx, v)| {
            let r = idx >> n;
            let c = idx & mask;
            *v *= Complex64::cis(-gamma * (phase_of(r) - phase_of(c)));
        });
    }

    /// `U rho U^dagger` for `u` acting on qubit `m`.
    pub fn apply_single(&mut self, m: usize, u: &Gate1) {
        let n = self.num_qubits;
        apply_pair_kernel(&mut self.data, n + m, u);
        let conj = [[u[0][0].conj(), u[0][1].conj()], [u[1][0].conj(), u[1][1].conj()]];
        apply_pair_kernel(&mut self.data, m, &conj);
    }

    /// Two-qubit depolarizing channel on `(i, j)`.
    pub fn depolarize(&mut self, i: usize, j: usize, lambda: f64) {
        if lambda == 0.0 {
            return;
        }
        let n = self.num_qubits;
        let offsets: [usize; 4] = [0, 1 << i, 1 << j, (1 << i) | (1 << j)];
        let mask = offsets[3] | (offsets[3] << n);
        let keep = 1.0 - lambda;
        let mut out = self.data.clone();
        for base in (0..self.data.len()).filter(|idx| idx & mask == 0) {
            let traced: Complex64 = offsets.iter().map(|&a| self.data[base | (a << n) | a]).sum();
            for &ar in &offsets {
                for &ac in &offsets {
                    let idx = base | (ar << n) | ac;
                    let mut v = keep * self.data[idx];
                    if ar == ac {
                        v += 0.25 * lambda * traced;
                    }
                    out[idx] = v;
                }
            }
        }
        self.data = out;
    }

    /// Row-major dense copy, for inspection in tests.
    pub fn to_dense(&self) -> Vec<Vec<Complex64>> {
        (0..self.dim())
            .map(|r| (0..self.dim()).map(|c| self.get(r, c)).collect())
            .collect()
    }
}

/// Full density-matrix evolution. Returns the final state.
pub fn evolve_density(model: &IsingModel, schedule: &LinearRampSchedule, lambda: f64) -> Result<DensityMatrix> {
    evolve_density_observed(model, schedule, lambda, |_| {})
}

/// As [`evolve_density`], calling `observe` after every gate.
pub fn evolve_density_observed(
    model: &IsingModel,
    schedule: &LinearRampSchedule,
    lambda: f64,
    mut observe: impl FnMut(&DensityMatrix),
) -> Result<DensityMatrix> {
    NoiseConfig::density(lambda).validate()?;
    let couplings = zz_couplings(model)?;
    let mut rho = DensityMatrix::plus(model.num_vars())?;
    let fields = field_energies(model)?;
    let fields = fields.energies();
    for (gamma, beta) in schedule.angles() {
        for &(i, j, coeff) in &couplings {
            rho.apply_diagonal(|k| coeff * zz_sign(k, i, j), gamma);
            rho.depolarize(i, j, lambda);
            observe(&rho);
        }
        if !model.linear().is_empty() {
            rho.apply_diagonal(|k| fields[k], gamma);
        }
        let u = mixer_gate(beta);
        for m in 0..rho.num_qubits {
            rho.apply_single(m, &u);
        }
        observe(&rho);
    }
    Ok(rho)
}

/// Final measurement probabilities under the density-matrix backend.
pub fn run_noisy_density(model: &IsingModel, schedule: &LinearRampSchedule, cfg: &NoiseConfig) -> Result<Vec<f64>> {
    if cfg.backend != NoiseBackend::DensityMatrix {
        return Err(Error::param("configuration selects the trajectory backend"));
    }
    Ok(evolve_density(model, schedule, cfg.lambda)?.diagonal())
}

/// Result of the trajectory backend.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryEnsemble {
    /// One measured bitstring per trajectory.
    pub samples: SampleSet,
    /// Average of the exact per-trajectory output distributions. Lower
    /// variance than the sample histogram, same expectation.
    pub mean_probabilities: Vec<f64>,
    pub trajectories: usize,
    /// Total Pauli errors drawn across all trajectories.
    pub error_events: u64,
}

impl TrajectoryEnsemble {
    pub fn probability_of(&self, indices: &[u64]) -> f64 {
        indices.iter().map(|&k| self.mean_probabilities[k as usize]).sum()
    }
}

const PAULI: [Gate1; 4] = {
    let o = Complex64::new(0.0, 0.0);
    let l = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let mi = Complex64::new(0.0, -1.0);
    let ml = Complex64::new(-1.0, 0.0);
    [[[l, o], [o, l]], [[o, l], [l, o]], [[o, mi], [i, o]], [[l, o], [o, ml]]]
};

struct TrajectoryPlan<'a> {
    couplings: &'a [(usize, usize, f64)],
    table: &'a EnergyTable,
    fields: &'a [f64],
    schedule: &'a LinearRampSchedule,
    lambda: f64,
}

impl TrajectoryPlan<'_> {
    fn apply_segment(&self, state: &mut StateVector, gates: &[(usize, usize, f64)], gamma: f64) {
        if gates.is_empty() {
            return;
        }
        state.amplitudes_mut().iter_mut().enumerate().for_each(|(k, a)| {
            let e: f64 = gates.iter().map(|&(i, j, c)| c * zz_sign(k, i, j)).sum();
            *a *= Complex64::cis(-gamma * e);
        });
    }

    /// One trajectory. Returns the final state and the number of errors.
    fn run(&self, rng: &mut rng::Rng) -> Result<(StateVector, u64)> {
        let mut state = StateVector::plus(self.table.num_qubits())?;
        let mut events = 0u64;
        let mut hits: Vec<(usize, usize)> = Vec::new();
        for (gamma, beta) in self.schedule.angles() {
            hits.clear();
            for g in 0..self.couplings.len() {
                if self.lambda > 0.0 && rng.random_bool(self.lambda) {
                    hits.push((g, rng.random_range(0..16)));
                }
            }
            if hits.is_empty() {
                apply_cost_phase(&mut state, self.table, gamma)?;
            } else {
                events += hits.len() as u64;
                let mut start = 0;
                for &(g, pauli) in &hits {
                    self.apply_segment(&mut state, &self.couplings[start..=g], gamma);
                    start = g + 1;
                    let (i, j, _) = self.couplings[g];
                    let amps = state.amplitudes_mut();
                    if pauli % 4 != 0 {
                        apply_pair_kernel(amps, i, &PAULI[pauli % 4]);
                    }
                    if pauli / 4 != 0 {
                        apply_pair_kernel(amps, j, &PAULI[pauli / 4]);
                    }
                }
                self.apply_segment(&mut state, &self.couplings[start..], gamma);
                let fields = self.fields;
                if !fields.is_empty() {
                    state
                        .amplitudes_mut()
                        .iter_mut()
                        .zip(fields)
                        .for_each(|(a, &h)| *a *= Complex64::cis(-gamma * h));
                }
            }
            apply_mixer(&mut state, beta);
        }
        Ok((state, events))
    }
}

/// Stochastic unravelling of the depolarizing channel. Trajectory `t` draws
/// from RNG stream `t` under `cfg.seed`, so results do not depend on the
/// thread count.
pub fn run_noisy_trajectory(
    model: &IsingModel,
    schedule: &LinearRampSchedule,
    cfg: &NoiseConfig,
) -> Result<TrajectoryEnsemble> {
    cfg.validate()?;
    let couplings = zz_couplings(model)?;
    let table = EnergyTable::new(model)?;
    let field_table = field_energies(model)?;
    let fields: &[f64] = if model.linear().is_empty() {
        &[]
    } else {
        field_table.energies()
    };
    let plan = TrajectoryPlan {
        couplings: &couplings,
        table: &table,
        fields,
        schedule,
        lambda: cfg.lambda,
    };
    let n = model.num_vars();
    let dim = 1usize << n;
    let blocks: Vec<usize> = (0..cfg.trajectories.div_ceil(TRAJECTORY_BLOCK)).collect();
    let partials = blocks
        .par_iter()
        .map(|&b| -> Result<(Vec<f64>, Vec<(u64, u64)>, u64)> {
            let mut probs = vec![0.0; dim];
            let mut shots = Vec::new();
            let mut events = 0;
            let lo = b * TRAJECTORY_BLOCK;
            let hi = (lo + TRAJECTORY_BLOCK).min(cfg.trajectories);
            for t in lo..hi {
                let mut rng = rng::stream(cfg.seed, t as u64);
                let (state, ev) = plan.run(&mut rng)?;
                events += ev;
                let mut u: f64 = rng.random();
                let mut outcome = dim - 1;
                for (k, a) in state.amplitudes().iter().enumerate() {
                    let p = a.norm_sqr();
                    probs[k] += p;
                    if u < p && outcome == dim - 1 {
                        outcome = k;
                    }
                    u -= p;
                }
                shots.push((outcome as u64, 1));
            }
            Ok((probs, shots, events))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut mean = vec![0.0; dim];
    let mut counts = Vec::new();
    let mut error_events = 0;
    for (probs, shots, events) in partials {
        for (m, p) in mean.iter_mut().zip(probs) {
            *m += p;
        }
        counts.extend(shots);
        error_events += events;
    }
    let scale = 1.0 / cfg.trajectories as f64;
    mean.iter_mut().for_each(|m| *m *= scale);
    let samples = SampleSet::from_counts(counts.into_iter().map(|(k, c)| (BitString::from_index(k, n), c)))?;
    Ok(TrajectoryEnsemble {
        samples,
        mean_probabilities: mean,
        trajectories: cfg.trajectories,
        error_events,
    })
}

/// Output distribution under either backend. For trajectories this is the
/// ensemble mean of exact per-trajectory distributions.
pub fn noisy_probabilities(model: &IsingModel, schedule: &LinearRampSchedule, cfg: &NoiseConfig) -> Result<Vec<f64>> {
    match cfg.backend {
        NoiseBackend::DensityMatrix => run_noisy_density(model, schedule, cfg),
        NoiseBackend::Trajectory => Ok(run_noisy_trajectory(model, schedule, cfg)?.mean_probabilities),
    }
}

/// `(p_qpu - p_random) / (p_ideal - p_random)`.
pub fn overlap_probability(p_qpu: f64, p_ideal: f64, p_random: f64) -> Result<f64> {
    let denom = p_ideal - p_random;
    if denom.abs() <= f64::EPSILON * p_ideal.abs().max(p_random.abs()).max(1e-300) || !denom.is_finite() {
        return Err(Error::UndefinedOverlap);
    }
    Ok((p_qpu - p_random) / denom)
}

/// One `(N_g, lambda, p_ovl)` observation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapPoint {
    pub gates: f64,
    pub lambda: f64,
    pub p_ovl: f64,
}

impl OverlapPoint {
    pub fn eps_acc(&self) -> f64 {
        self.gates * self.lambda
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseFit {
    pub k0: f64,
    pub lambda_est: Option<f64>,
    /// `(eps_acc, p_ovl)` pairs that entered the fit.
    pub points: Vec<(f64, f64)>,
    pub r_squared: f64,
    /// Points skipped because `p_ovl <= 0`.
    pub dropped: usize,
}

/// Least-squares `log2(p_ovl) = -k0 eps_acc` through the origin.
pub fn fit_noise_model(points: &[OverlapPoint]) -> Result<NoiseFit> {
    for p in points {
        if !(p.gates >= 0.0 && p.lambda >= 0.0) || !p.p_ovl.is_finite() {
            return Err(Error::param(format!("invalid overlap point {p:?}")));
        }
    }
    let kept: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.p_ovl > 0.0)
        .map(|p| (p.eps_acc(), p.p_ovl))
        .collect();
    if kept.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 points with p_ovl > 0, got {}",
            kept.len()
        )));
    }
    let x: Vec<f64> = kept.iter().map(|p| p.0).collect();
    let y: Vec<f64> = kept.iter().map(|p| p.1.log2()).collect();
    let fit = stats::fit_through_origin(&x, &y)?;
    Ok(NoiseFit {
        k0: -fit.slope,
        lambda_est: None,
        points: kept,
        r_squared: fit.r_squared,
        dropped: points.len() - x.len(),
    })
}

/// Two-qubit gates until the overlap falls to `target`:
/// `-log2(target) / (k0 lambda)`.
pub fn gate_budget(lambda: f64, target: f64, k0: f64) -> Result<f64> {
    if !(lambda > 0.0 && k0 > 0.0 && lambda.is_finite() && k0.is_finite()) {
        return Err(Error::param("lambda and k0 must be positive"));
    }
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::param("target overlap must lie in (0, 1)"));
    }
    Ok(-target.log2() / (k0 * lambda))
}

/// Least-squares `lambda` from `(N_g, p_ovl)` pairs at fixed `k0`.
pub fn estimate_lambda(points: &[(f64, f64)], k0: f64) -> Result<f64> {
    if !(k0 > 0.0 && k0.is_finite()) {
        return Err(Error::param("k0 must be positive"));
    }
    let kept: Vec<(f64, f64)> = points.iter().copied().filter(|p| p.1 > 0.0).collect();
    if kept.is_empty() {
        return Err(Error::InsufficientData("no point with p_ovl > 0".into()));
    }
    let x: Vec<f64> = kept.iter().map(|p| k0 * p.0).collect();
    let y: Vec<f64> = kept.iter().map(|p| p.1.log2()).collect();
    Ok(-stats::fit_through_origin(&x, &y)?.slope)
}
