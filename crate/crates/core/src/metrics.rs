//! Solution-quality metrics, single-flip mitigation and scaling fits.

use std::collections::BTreeSet;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::ising::{GroundTruth, IsingModel, Neighborhood};
use crate::problems::{ProblemInstance, WeightedGraph};
use crate::rng;
use crate::samples::SampleSet;
use crate::simulator::{check_cap, STATE_CAP};
use crate::stats;

/// Smallest problem size used in scaling fits by default.
pub const DEFAULT_NQ_MIN: usize = 10;

/// Largest cut over all `2^n` partitions.
pub fn max_cut(graph: &WeightedGraph) -> Result<f64> {
    check_cap(graph.num_nodes, STATE_CAP)?;
    let dim = 1u64 << graph.num_nodes;
    // fixing node n-1 on one side halves the search
    let half = dim >> 1;
    Ok((0..half)
        .into_par_iter()
        .map(|k| graph.cut_value_of_index(k))
        .reduce(|| f64::NEG_INFINITY, f64::max))
}

/// Shot-weighted mean cut value.
pub fn mean_cut(samples: &SampleSet, graph: &WeightedGraph) -> Result<f64> {
    check_width(samples, graph.num_nodes)?;
    Ok(samples.mean_by(|b| graph.cut_value(b)))
}

/// `mean cut / max cut`.
pub fn approximation_ratio(samples: &SampleSet, graph: &WeightedGraph) -> Result<f64> {
    approximation_ratio_with(samples, graph, max_cut(graph)?)
}

pub fn approximation_ratio_with(samples: &SampleSet, graph: &WeightedGraph, best_cut: f64) -> Result<f64> {
    if best_cut <= 0.0 {
        return Err(Error::MetricUnavailable("optimal cut is not positive".into()));
    }
    if samples.is_empty() {
        return Err(Error::param("no samples"));
    }
    Ok(mean_cut(samples, graph)? / best_cut)
}

/// Approximation ratio for cut instances.
pub fn instance_approximation_ratio(samples: &SampleSet, instance: &ProblemInstance) -> Result<f64> {
    let graph = instance
        .cut_graph()
        .ok_or_else(|| Error::MetricUnavailable(format!("{} instance has no cut objective", instance.family.name())))?;
    approximation_ratio(samples, graph)
}

fn check_width(samples: &SampleSet, n: usize) -> Result<()> {
    match samples.num_bits() {
        Some(w) if w != n => Err(Error::contract(format!(
            "samples have {w} bits, problem has {n} variables"
        ))),
        _ => Ok(()),
    }
}

/// Best of the original bitstring and its `n` single-flip neighbours. The
/// original wins ties; among flips, the lowest index with the strictly
/// lowest energy wins.
pub fn mitigate_bitstring(bits: &BitString, nb: &Neighborhood) -> BitString {
    let spins = bits.spins();
    let mut best: Option<(usize, f64)> = None;
    for i in 0..spins.len() {
        let d = nb.flip_delta(i, &spins);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    match best {
        Some((i, d)) if d < -1e-12 => bits.flipped(i),
        _ => bits.clone(),
    }
}

/// Replaces every sample by its best single-flip neighbour (Hamming
/// distance 1), keeping shot counts.
pub fn mitigate_hd1(samples: &SampleSet, model: &IsingModel) -> Result<SampleSet> {
    check_width(samples, model.num_vars())?;
    let nb = model.neighborhood();
    let mitigated: Vec<(BitString, u64)> = samples
        .entries()
        .par_iter()
        .map(|e| (mitigate_bitstring(&e.bits, &nb), e.count))
        .collect();
    SampleSet::from_counts(mitigated)
}

/// Fraction of shots in the optimal set.
pub fn success_probability_sampled(samples: &SampleSet, truth: &GroundTruth) -> f64 {
    if samples.total_shots() == 0 {
        return 0.0;
    }
    let optimal: BTreeSet<&BitString> = truth.optimal_bitstrings.iter().collect();
    let hits: u64 = samples
        .entries()
        .iter()
        .filter(|e| optimal.contains(&e.bits))
        .map(|e| e.count)
        .sum();
    hits as f64 / samples.total_shots() as f64
}

/// `shots` independent uniformly random bitstrings.
pub fn uniform_samples(n: usize, shots: u64, seed: u64) -> Result<SampleSet> {
    let mut rng = rng::seeded(seed);
    SampleSet::from_shots((0..shots).map(|_| {
        let bools: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        BitString::from_bools(&bools)
    }))
}

/// `2 * 2^(-n/2)`: success probability of a search with quadratic speedup
/// over random sampling of a doubly degenerate optimum.
pub fn quadratic_speedup_reference(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::param("n must be at least 1"));
    }
    Ok(2.0 * (-(n as f64) / 2.0).exp2())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingMode {
    /// One point per size: the mean of `log2 prob` over its instances.
    #[default]
    PerSizeMean,
    /// Every instance is its own point.
    PerInstance,
}

/// `log2 prob = -eta N_q + C`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub eta: f64,
    pub c: f64,
    pub n_q_min: usize,
    /// `(N_q, log2 prob)` points that entered the fit.
    pub points: Vec<(usize, f64)>,
    /// Mean of `|1 - 2^(-eta N_q + C) / prob|` over the fitted points.
    pub relative_error: f64,
    pub r_squared: f64,
    /// Inputs skipped because their probability was not positive.
    pub dropped_zero: usize,
    pub mode: ScalingMode,
}

impl ScalingFit {
    pub fn predict(&self, n_qubits: usize) -> f64 {
        (-self.eta * n_qubits as f64 + self.c).exp2()
    }
}

/// Fits the exponential scaling of success probability with size. Points
/// below `n_q_min` are ignored and zero probabilities are dropped (and
/// counted).
pub fn fit_scaling(points: &[(usize, f64)], n_q_min: usize, mode: ScalingMode) -> Result<ScalingFit> {
    let mut dropped_zero = 0;
    let mut kept: Vec<(usize, f64)> = Vec::new();
    for &(n, prob) in points {
        if !(0.0..=1.0 + 1e-9).contains(&prob) {
            return Err(Error::param(format!("probability {prob} outside [0, 1]")));
        }
        if n < n_q_min {
            continue;
        }
        if prob <= 0.0 {
            dropped_zero += 1;
            continue;
        }
        kept.push((n, prob.log2()));
    }
    let fitted: Vec<(usize, f64)> = match mode {
        ScalingMode::PerInstance => kept,
        ScalingMode::PerSizeMean => {
            let sizes: BTreeSet<usize> = kept.iter().map(|p| p.0).collect();
            sizes
                .into_iter()
                .map(|n| {
                    let logs: Vec<f64> = kept.iter().filter(|p| p.0 == n).map(|p| p.1).collect();
                    (n, stats::mean(&logs).expect("size has at least one point"))
                })
                .collect()
        }
    };
    let distinct: BTreeSet<usize> = fitted.iter().map(|p| p.0).collect();
    if distinct.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 sizes >= {n_q_min} with positive probability, got {}",
            distinct.len()
        )));
    }
    let x: Vec<f64> = fitted.iter().map(|p| p.0 as f64).collect();
    let y: Vec<f64> = fitted.iter().map(|p| p.1).collect();
    let line = stats::ols(&x, &y)?;
    let relative_error = fitted
        .iter()
        .map(|&(n, lp)| (1.0 - (line.slope * n as f64 + line.intercept - lp).exp2()).abs())
        .sum::<f64>()
        / fitted.len() as f64;
    Ok(ScalingFit {
        eta: -line.slope,
        c: line.intercept,
        n_q_min,
        points: fitted,
        relative_error,
        r_squared: line.r_squared,
        dropped_zero,
        mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn triangle() -> WeightedGraph {
        WeightedGraph {
            num_nodes: 3,
            edges: vec![(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)],
        }
    }

    #[test]
    fn uniform_triangle_ratio() {
        let all = SampleSet::from_shots((0..8).map(|k| BitString::from_index(k, 3))).unwrap();
        let r = approximation_ratio(&all, &triangle()).unwrap();
        assert!((r - 0.75).abs() < 1e-15);
        let opt = SampleSet::from_shots([b("100"), b("011")]).unwrap();
        assert_eq!(approximation_ratio(&opt, &triangle()).unwrap(), 1.0);
    }

    #[test]
    fn mitigation_tie_rule() {
        let mut m = IsingModel::new(2);
        m.add_quadratic(0, 1, 1.0).unwrap();
        let s = SampleSet::from_shots([b("00")]).unwrap();
        let out = mitigate_hd1(&s, &m).unwrap();
        assert_eq!(out.entries()[0].bits, b("10"));
        // already optimal: both flips raise the energy
        let s = SampleSet::from_shots([b("01")]).unwrap();
        assert_eq!(mitigate_hd1(&s, &m).unwrap(), s);
    }

    #[test]
    fn mitigation_keeps_original_on_ties() {
        // flipping bit 0 of "00" is free, flipping bit 1 costs energy
        let mut m = IsingModel::new(2);
        m.add_linear(1, -1.0).unwrap();
        let s = SampleSet::from_shots([b("00")]).unwrap();
        assert_eq!(mitigate_hd1(&s, &m).unwrap(), s);
    }

    #[test]
    fn sampled_success() {
        let truth = GroundTruth {
            optimal_energy: -1.0,
            optimal_bitstrings: vec![b("01"), b("10")],
            spectrum: None,
        };
        let none = SampleSet::from_counts([(b("00"), 5)]).unwrap();
        assert_eq!(success_probability_sampled(&none, &truth), 0.0);
        let some = SampleSet::from_counts([(b("01"), 2), (b("11"), 9_998)]).unwrap();
        assert_eq!(success_probability_sampled(&some, &truth), 2e-4);
    }

    #[test]
    fn quadratic_reference_values() {
        assert_eq!(quadratic_speedup_reference(2).unwrap(), 1.0);
        assert_eq!(quadratic_speedup_reference(4).unwrap(), 0.5);
        assert!((quadratic_speedup_reference(40).unwrap() - 1.9073486328125e-6).abs() < 1e-18);
    }

    #[test]
    fn two_point_fit_is_exact() {
        let fit = fit_scaling(&[(10, 0.25), (12, 0.125)], 10, ScalingMode::PerSizeMean).unwrap();
        assert!((fit.eta - 0.5).abs() < 1e-12);
        assert!(fit.relative_error < 1e-12);
        assert!(fit_scaling(&[(10, 0.25), (10, 0.2)], 10, ScalingMode::PerInstance).is_err());
    }

    #[test]
    fn zero_probabilities_are_counted() {
        let fit = fit_scaling(
            &[(10, 0.25), (11, 0.0), (12, 0.125), (8, 0.5)],
            10,
            ScalingMode::PerInstance,
        )
        .unwrap();
        assert_eq!(fit.dropped_zero, 1);
        assert_eq!(fit.points.len(), 2);
    }

    #[test]
    fn fc_max_cut_matches_bisection() {
        let g = WeightedGraph {
            num_nodes: 4,
            edges: (0..4).flat_map(|i| (i + 1..4).map(move |j| (i, j, 1.0))).collect(),
        };
        assert_eq!(max_cut(&g).unwrap(), 4.0);
    }
}
