//! Noiseless state-vector engine.
//!
//! The cost unitary `exp(-i gamma H)` is diagonal, so each layer multiplies
//! amplitude `k` by `exp(-i gamma E_k)` from a precomputed [`EnergyTable`].
//! The mixer `exp(+i beta sum_m X_m)` factors into one rotation per qubit,
//! applied as strided pair updates over the amplitude array.
//!
//! [`mixer_oracle`] evaluates the same mixer through its closed form
//!
//! ```text
//! alpha'_k = sum_l cos(beta)^(n - d(k,l)) (i sin(beta))^d(k,l) alpha_l
//! ```
//!
//! where `d` is the Hamming distance. It costs `O(4^n)` and exists to check
//! the fast kernel.

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::ising::{GroundTruth, IsingModel};
use crate::rng;
use crate::samples::SampleSet;
use crate::schedule::LinearRampSchedule;

/// Default qubit cap: 2^26 complex doubles is 1 GiB.
pub const STATE_CAP: usize = 26;
/// Qubit cap of the `O(4^n)` mixer oracle.
pub const ORACLE_CAP: usize = 8;
/// Energies closer than this share a trajectory level.
pub const LEVEL_TOLERANCE: f64 = 1e-12;

const PARALLEL_LEN: usize = 1 << 14;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

pub fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        return Err(Error::SizeCap { requested: n, cap });
    }
    Ok(())
}

impl StateVector {
    /// `|+>^n`, every amplitude `2^(-n/2)`.
    pub fn plus(n: usize) -> Result<StateVector> {
        Self::plus_capped(n, STATE_CAP)
    }

    pub fn plus_capped(n: usize, cap: usize) -> Result<StateVector> {
        if n == 0 {
            return Err(Error::param("a state needs at least one qubit"));
        }
        check_cap(n, cap)?;
        let a = Complex64::new((0.5f64).powf(n as f64 / 2.0), 0.0);
        Ok(StateVector {
            num_qubits: n,
            amps: vec![a; 1 << n],
        })
    }

    /// Computational basis state `|k>`.
    pub fn basis(n: usize, k: u64) -> Result<StateVector> {
        check_cap(n, STATE_CAP)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        let slot = amps
            .get_mut(k as usize)
            .ok_or_else(|| Error::param(format!("basis index {k} out of range")))?;
        *slot = Complex64::new(1.0, 0.0);
        Ok(StateVector { num_qubits: n, amps })
    }

    /// Wraps raw amplitudes; the length must be a power of two. The vector is
    /// taken as given, without renormalization.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<StateVector> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::param("amplitude count must be a power of two >= 2"));
        }
        Ok(StateVector {
            num_qubits: len.trailing_zeros() as usize,
            amps,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        if self.amps.len() >= PARALLEL_LEN {
            self.amps.par_iter().map(|a| a.norm_sqr()).sum()
        } else {
            self.amps.iter().map(|a| a.norm_sqr()).sum()
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Applies `X` to every qubit: `|k> -> |k xor (2^n - 1)>`, which reverses
    /// the amplitude array.
    pub fn apply_x_layer(&mut self) {
        self.amps.reverse();
    }
}

pub fn init_plus(n: usize) -> Result<StateVector> {
    StateVector::plus(n)
}

/// Dense table of `E_k` over all basis states.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyTable {
    num_qubits: usize,
    energies: Vec<f64>,
}

impl EnergyTable {
    pub fn new(model: &IsingModel) -> Result<EnergyTable> {
        Self::with_cap(model, STATE_CAP)
    }

    pub fn with_cap(model: &IsingModel, cap: usize) -> Result<EnergyTable> {
        let n = model.num_vars();
        if n == 0 {
            return Err(Error::param("model has no variables"));
        }
        check_cap(n, cap.min(63))?;
        Ok(EnergyTable {
            num_qubits: n,
            energies: model.compile().all_energies(),
        })
    }

    pub fn from_energies(energies: Vec<f64>) -> Result<EnergyTable> {
        let len = energies.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::param("energy table length must be a power of two >= 2"));
        }
        Ok(EnergyTable {
            num_qubits: len.trailing_zeros() as usize,
            energies,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn ground_truth(&self, with_spectrum: bool) -> GroundTruth {
        crate::ising::ground_truth_from_energies(&self.energies, self.num_qubits, with_spectrum)
    }
}

/// `alpha_k <- exp(-i gamma E_k) alpha_k`.
pub fn apply_cost_phase(state: &mut StateVector, table: &EnergyTable, gamma: f64) -> Result<()> {
    if table.num_qubits != state.num_qubits {
        return Err(Error::contract(format!(
            "energy table covers {} qubits, state has {}",
            table.num_qubits, state.num_qubits
        )));
    }
    if gamma == 0.0 {
        return Ok(());
    }
    let rotate = |(a, &e): (&mut Complex64, &f64)| *a *= Complex64::cis(-gamma * e);
    if state.amps.len() >= PARALLEL_LEN {
        state
            .amps
            .par_iter_mut()
            .zip(table.energies.par_iter())
            .for_each(rotate);
    } else {
        state.amps.iter_mut().zip(table.energies.iter()).for_each(rotate);
    }
    Ok(())
}

/// 2x2 matrix acting on one qubit, row-major.
pub type Gate1 = [[Complex64; 2]; 2];

/// Applies `u` to the pair of amplitudes that differ only in `bit`, for all
/// such pairs of `amps`.
pub fn apply_pair_kernel(amps: &mut [Complex64], bit: usize, u: &Gate1) {
    let stride = 1usize << bit;
    let block = stride << 1;
    debug_assert!(amps.len() >= block);
    let [[u00, u01], [u10, u11]] = *u;
    let update = move |(lo, hi): (&mut Complex64, &mut Complex64)| {
        let (a, b) = (*lo, *hi);
        *lo = u00 * a + u01 * b;
        *hi = u10 * a + u11 * b;
    };
    let blocks = amps.len() / block;
    if amps.len() < PARALLEL_LEN {
        for chunk in amps.chunks_mut(block) {
            let (lo, hi) = chunk.split_at_mut(stride);
            lo.iter_mut().zip(hi.iter_mut()).for_each(update);
        }
    } else if blocks >= 64 {
        amps.par_chunks_mut(block).for_each(|chunk| {
            let (lo, hi) = chunk.split_at_mut(stride);
            lo.iter_mut().zip(hi.iter_mut()).for_each(update);
        });
    } else {
        for chunk in amps.chunks_mut(block) {
            let (lo, hi) = chunk.split_at_mut(stride);
            lo.par_iter_mut().zip(hi.par_iter_mut()).for_each(update);
        }
    }
}

/// `exp(+i beta X) = [[cos b, i sin b], [i sin b, cos b]]`.
pub fn mixer_gate(beta: f64) -> Gate1 {
    let c = Complex64::new(beta.cos(), 0.0);
    let s = Complex64::new(0.0, beta.sin());
    [[c, s], [s, c]]
}

/// Applies `exp(+i beta X)` to every qubit.
pub fn apply_mixer(state: &mut StateVector, beta: f64) {
    if beta == 0.0 {
        return;
    }
    let u = mixer_gate(beta);
    for m in 0..state.num_qubits {
        apply_pair_kernel(&mut state.amps, m, &u);
    }
}

/// Mixer through the Hamming-distance closed form. Test oracle only.
pub fn mixer_oracle(state: &StateVector, beta: f64) -> Result<StateVector> {
    let n = state.num_qubits;
    if n > ORACLE_CAP {
        return Err(Error::SizeCap {
            requested: n,
            cap: ORACLE_CAP,
        });
    }
    let c = Complex64::new(beta.cos(), 0.0);
    let is = Complex64::new(0.0, beta.sin());
    // weight[d] = cos^(n-d) (i sin)^d
    let weight: Vec<Complex64> = (0..=n).map(|d| c.powu((n - d) as u32) * is.powu(d as u32)).collect();
    let dim = state.amps.len();
    let amps = (0..dim)
        .map(|k| {
            (0..dim)
                .map(|l| weight[(k ^ l).count_ones() as usize] * state.amps[l])
                .sum()
        })
        .collect();
    Ok(StateVector { num_qubits: n, amps })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectedGate {
    /// `X` on every qubit.
    XLayer,
}

/// A gate layer inserted after `layer` completed LR-QAOA layers
/// (`0` = before the first layer).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Injection {
    pub layer: usize,
    pub gate: InjectedGate,
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub record_trajectory: bool,
    pub injections: Vec<Injection>,
    /// Basis states whose raw amplitudes are kept in each snapshot.
    pub tracked_states: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerSnapshot {
    /// Completed layers at the time of the snapshot.
    pub layer: usize,
    /// Probability per energy level, aligned with [`TrajectoryRecord::levels`].
    pub level_probabilities: Vec<f64>,
    pub tracked: Vec<(u64, Complex64)>,
}

/// Probabilities grouped by energy level after every layer. Snapshots are
/// taken before any injection scheduled at the same layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    /// Distinct energies, ascending.
    pub levels: Vec<f64>,
    pub snapshots: Vec<LayerSnapshot>,
}

impl TrajectoryRecord {
    /// `layer,energy,probability` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("layer,energy,probability\n");
        for snap in &self.snapshots {
            for (e, p) in self.levels.iter().zip(&snap.level_probabilities) {
                out.push_str(&format!("{},{},{}\n", snap.layer, e, p));
            }
        }
        out
    }

    /// Probability of the lowest level at each snapshot.
    pub fn ground_level_series(&self) -> Vec<f64> {
        self.snapshots
            .iter()
            .map(|s| s.level_probabilities.first().copied().unwrap_or(0.0))
            .collect()
    }
}

struct LevelIndex {
    levels: Vec<f64>,
    level_of: Vec<u32>,
}

impl LevelIndex {
    fn new(energies: &[f64]) -> LevelIndex {
        let mut sorted = energies.to_vec();
        sorted.sort_unstable_by(f64::total_cmp);
        let mut levels: Vec<f64> = Vec::new();
        for e in sorted {
            match levels.last() {
                Some(&last) if e - last <= LEVEL_TOLERANCE => {}
                _ => levels.push(e),
            }
        }
        let level_of = energies
            .iter()
            .map(|&e| {
                // last level not above e + tol
                let idx = levels.partition_point(|&l| l <= e + LEVEL_TOLERANCE);
                (idx - 1) as u32
            })
            .collect();
        LevelIndex { levels, level_of }
    }

    fn snapshot(&self, state: &StateVector, layer: usize, tracked: &[u64]) -> LayerSnapshot {
        let mut probs = vec![0.0; self.levels.len()];
        for (a, &lvl) in state.amps.iter().zip(&self.level_of) {
            probs[lvl as usize] += a.norm_sqr();
        }
        LayerSnapshot {
            layer,
            level_probabilities: probs,
            tracked: tracked.iter().map(|&k| (k, state.amps[k as usize])).collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub state: StateVector,
    pub trajectory: Option<TrajectoryRecord>,
}

/// Runs LR-QAOA from `|+>^n`: per layer the cost phase with `gamma_i`, then
/// the mixer with `beta_i`.
pub fn run(model: &IsingModel, schedule: &LinearRampSchedule, options: &RunOptions) -> Result<RunOutput> {
    let table = EnergyTable::new(model)?;
    run_with_table(&table, schedule, options)
}

pub fn run_with_table(table: &EnergyTable, schedule: &LinearRampSchedule, options: &RunOptions) -> Result<RunOutput> {
    let p = schedule.layers();
    for inj in &options.injections {
        if inj.layer > p {
            return Err(Error::InjectionOutOfRange {
                layer: inj.layer,
                layers: p,
            });
        }
    }
    let dim = 1u64 << table.num_qubits;
    if let Some(&k) = options.tracked_states.iter().find(|&&k| k >= dim) {
        return Err(Error::param(format!("tracked state {k} out of range")));
    }
    let mut state = StateVector::plus(table.num_qubits)?;
    let index = options.record_trajectory.then(|| LevelIndex::new(&table.energies));
    let mut snapshots = Vec::new();
    let inject = |state: &mut StateVector, layer: usize| {
        for inj in options.injections.iter().filter(|i| i.layer == layer) {
            match inj.gate {
                InjectedGate::XLayer => state.apply_x_layer(),
            }
        }
    };
    if let Some(idx) = &index {
        snapshots.push(idx.snapshot(&state, 0, &options.tracked_states));
    }
    inject(&mut state, 0);
    for (i, (gamma, beta)) in schedule.angles().enumerate() {
        apply_cost_phase(&mut state, table, gamma)?;
        apply_mixer(&mut state, beta);
        if let Some(idx) = &index {
            snapshots.push(idx.snapshot(&state, i + 1, &options.tracked_states));
        }
        inject(&mut state, i + 1);
    }
    let trajectory = index.map(|idx| TrajectoryRecord {
        levels: idx.levels,
        snapshots,
    });
    Ok(RunOutput { state, trajectory })
}

/// Total probability on the optimal set.
pub fn success_probability(state: &StateVector, truth: &GroundTruth) -> Result<f64> {
    let dim = state.amps.len() as u64;
    let mut p = 0.0;
    for b in &truth.optimal_bitstrings {
        if b.len() != state.num_qubits {
            return Err(Error::contract("ground truth and state differ in size"));
        }
        let k = b.to_index().filter(|&k| k < dim).expect("width checked above");
        p += state.amps[k as usize].norm_sqr();
    }
    Ok(p)
}

/// Draws `shots` measurement outcomes from `|alpha_k|^2`.
pub fn sample(state: &StateVector, shots: u64, seed: u64) -> Result<SampleSet> {
    sample_probabilities(&state.probabilities(), state.num_qubits, shots, seed)
}

pub fn sample_probabilities(probs: &[f64], num_qubits: usize, shots: u64, seed: u64) -> Result<SampleSet> {
    if shots == 0 {
        return Err(Error::param("shots must be at least 1"));
    }
    let dist = WeightedIndex::new(probs.iter().map(|p| p.max(0.0)))
        .map_err(|e| Error::param(format!("cannot sample from distribution: {e}")))?;
    let mut rng = rng::seeded(seed);
    let mut counts = std::collections::BTreeMap::<usize, u64>::new();
    for _ in 0..shots {
        *counts.entry(dist.sample(&mut rng)).or_insert(0) += 1;
    }
    SampleSet::from_counts(
        counts
            .into_iter()
            .map(|(k, c)| (BitString::from_index(k as u64, num_qubits), c)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::brute_force;
    use crate::schedule::build_schedule;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn plus_state_amplitudes() {
        let s = init_plus(1).unwrap();
        assert!(s
            .amplitudes()
            .iter()
            .all(|&a| close(a, Complex64::new(FRAC_1_SQRT_2, 0.0), 1e-16)));
        let s = init_plus(3).unwrap();
        assert_eq!(s.amplitudes().len(), 8);
        assert!(s.amplitudes().iter().all(|a| (a.re - 2f64.powf(-1.5)).abs() < 1e-16));
        assert!((s.norm_sqr() - 1.0).abs() < 1e-15);
        assert!(matches!(StateVector::plus_capped(5, 4), Err(Error::SizeCap { .. })));
    }

    #[test]
    fn cost_phase_on_single_field() {
        let mut m = IsingModel::new(1);
        m.add_linear(0, 1.0).unwrap();
        let table = EnergyTable::new(&m).unwrap();
        assert_eq!(table.energies(), &[1.0, -1.0]);
        let mut s = init_plus(1).unwrap();
        apply_cost_phase(&mut s, &table, PI / 2.0).unwrap();
        let a = s.amplitudes();
        assert!(close(a[0], Complex64::cis(-PI / 2.0) * FRAC_1_SQRT_2, 1e-15));
        assert!(close(a[1], Complex64::cis(PI / 2.0) * FRAC_1_SQRT_2, 1e-15));
    }

    #[test]
    fn cost_phase_rejects_size_mismatch() {
        let table = EnergyTable::from_energies(vec![0.0; 4]).unwrap();
        let mut s = init_plus(3).unwrap();
        assert!(apply_cost_phase(&mut s, &table, 0.1).is_err());
    }

    #[test]
    fn full_mixer_rotation() {
        let mut s = StateVector::basis(1, 0).unwrap();
        apply_mixer(&mut s, PI / 2.0);
        assert!(close(s.amplitudes()[0], Complex64::new(0.0, 0.0), 1e-15));
        assert!(close(s.amplitudes()[1], Complex64::new(0.0, 1.0), 1e-15));
    }

    #[test]
    fn oracle_reproduces_three_qubit_expansion() {
        // alpha_000' = c^3 a000 + i s c^2 (a001 + a010 + a100)
        //              - s^2 c (a011 + a101 + a110) - i s^3 a111
        let amps: Vec<Complex64> = (0..8)
            .map(|k| Complex64::new(0.1 * (k + 1) as f64, -0.05 * k as f64))
            .collect();
        let state = StateVector::from_amplitudes(amps.clone()).unwrap();
        let beta: f64 = 0.37;
        let (c, s) = (beta.cos(), beta.sin());
        let i = Complex64::new(0.0, 1.0);
        // index bits: qubit m is bit m, so |001> in qubit-0-first text is k = 4
        let expected = amps[0] * c.powi(3) + i * s * c * c * (amps[1] + amps[2] + amps[4])
            - s * s * c * (amps[3] + amps[5] + amps[6])
            - i * s.powi(3) * amps[7];
        let out = mixer_oracle(&state, beta).unwrap();
        assert!(close(out.amplitudes()[0], expected, 1e-14));
    }

    #[test]
    fn mixer_matches_oracle_on_a_fixed_state() {
        let amps: Vec<Complex64> = (0..32)
            .map(|k| Complex64::new(((k * 7) % 11) as f64 - 5.0, ((k * 3) % 5) as f64))
            .collect();
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let state = StateVector::from_amplitudes(amps.iter().map(|a| a / norm).collect()).unwrap();
        let mut fast = state.clone();
        apply_mixer(&mut fast, 0.81);
        let slow = mixer_oracle(&state, 0.81).unwrap();
        for (a, b) in fast.amplitudes().iter().zip(slow.amplitudes()) {
            assert!(close(*a, *b, 1e-12));
        }
    }

    #[test]
    fn zero_angles_are_identity() {
        let mut m = IsingModel::new(3);
        m.add_quadratic(0, 1, 1.0).unwrap();
        m.add_linear(2, 0.5).unwrap();
        let sched = build_schedule(0.0, 0.0, 5).unwrap();
        let out = run(&m, &sched, &RunOptions::default()).unwrap();
        assert_eq!(out.state, init_plus(3).unwrap());
        assert_eq!(mixer_oracle(&out.state, 0.0).unwrap(), out.state);
    }

    #[test]
    fn mixer_alone_keeps_uniform_probabilities() {
        let mut m = IsingModel::new(3);
        m.add_quadratic(0, 2, 1.0).unwrap();
        let sched = build_schedule(0.7, 0.0, 1).unwrap();
        let out = run(&m, &sched, &RunOptions::default()).unwrap();
        for p in out.state.probabilities() {
            assert!((p - 0.125).abs() < 1e-15);
        }
    }

    #[test]
    fn injection_outside_schedule_fails() {
        let m = {
            let mut m = IsingModel::new(2);
            m.add_quadratic(0, 1, 1.0).unwrap();
            m
        };
        let sched = build_schedule(0.3, 0.6, 4).unwrap();
        let opts = RunOptions {
            injections: vec![Injection {
                layer: 5,
                gate: InjectedGate::XLayer,
            }],
            ..Default::default()
        };
        assert!(matches!(
            run(&m, &sched, &opts),
            Err(Error::InjectionOutOfRange { layer: 5, layers: 4 })
        ));
    }

    #[test]
    fn x_layer_complements_basis_states() {
        let mut s = StateVector::basis(3, 0b001).unwrap();
        s.apply_x_layer();
        assert_eq!(s.amplitudes()[0b110], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn success_probability_of_uniform_state() {
        let mut m = IsingModel::new(10);
        m.add_quadratic(0, 1, 1.0).unwrap();
        for i in 1..9 {
            m.add_quadratic(i, i + 1, 1.0).unwrap();
        }
        let gt = brute_force(&m, false).unwrap();
        assert_eq!(gt.degeneracy(), 2);
        let s = init_plus(10).unwrap();
        assert!((success_probability(&s, &gt).unwrap() - 2.0 / 1024.0).abs() < 1e-15);
        let k = gt.optimal_indices()[0];
        let s = StateVector::basis(10, k).unwrap();
        assert_eq!(success_probability(&s, &gt).unwrap(), 1.0);
    }

    #[test]
    fn sampling_basis_state_and_determinism() {
        let s = StateVector::basis(4, 9).unwrap();
        let set = sample(&s, 100, 3).unwrap();
        assert_eq!(set.entries().len(), 1);
        assert_eq!(set.entries()[0].bits.to_index(), Some(9));
        let u = init_plus(4).unwrap();
        assert_eq!(sample(&u, 500, 42).unwrap(), sample(&u, 500, 42).unwrap());
        assert!(sample(&u, 0, 42).is_err());
    }

    #[test]
    fn trajectory_snapshots_are_normalized() {
        let mut m = IsingModel::new(4);
        m.add_quadratic(0, 1, 1.0).unwrap();
        m.add_quadratic(1, 2, 0.5).unwrap();
        m.add_quadratic(2, 3, -0.7).unwrap();
        let sched = build_schedule(0.3, 0.6, 6).unwrap();
        let opts = RunOptions {
            record_trajectory: true,
            tracked_states: vec![0, 15],
            ..Default::default()
        };
        let out = run(&m, &sched, &opts).unwrap();
        let traj = out.trajectory.unwrap();
        assert_eq!(traj.snapshots.len(), 7);
        for snap in &traj.snapshots {
            let total: f64 = snap.level_probabilities.iter().sum();
            assert!((total - 1.0).abs() < 1e-10);
            assert_eq!(snap.tracked.len(), 2);
        }
        assert!(traj.levels.windows(2).all(|w| w[0] < w[1]));
        assert!(traj.to_csv().starts_with("layer,energy,probability\n0,"));
    }
}
