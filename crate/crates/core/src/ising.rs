//! Cost Hamiltonians in spin form.
//!
//! An [`IsingModel`] holds
//!
//! ```text
//! H(s) = sum_i h_i s_i + sum_{i<j} J_ij s_i s_j + sum_{i<j<k} K_ijk s_i s_j s_k + O
//! ```
//!
//! with spins `s_i = 1 - 2 b_i`, so bit 0 is spin +1 and matches
//! `Z|0> = +|0>`. Every module in the crate uses this single convention.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};

/// Default cap on exhaustive enumeration (2^26 energies, 512 MiB).
pub const BRUTE_FORCE_CAP: usize = 26;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct IsingModel {
    num_vars: usize,
    linear: BTreeMap<usize, f64>,
    quadratic: BTreeMap<(usize, usize), f64>,
    cubic: BTreeMap<(usize, usize, usize), f64>,
    offset: f64,
}

impl IsingModel {
    pub fn new(num_vars: usize) -> Self {
        IsingModel {
            num_vars,
            ..Default::default()
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn linear(&self) -> &BTreeMap<usize, f64> {
        &self.linear
    }

    pub fn quadratic(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.quadratic
    }

    pub fn cubic(&self) -> &BTreeMap<(usize, usize, usize), f64> {
        &self.cubic
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn is_quadratic(&self) -> bool {
        self.cubic.is_empty()
    }

    pub fn h(&self, i: usize) -> f64 {
        self.linear.get(&i).copied().unwrap_or(0.0)
    }

    pub fn j(&self, i: usize, j: usize) -> f64 {
        let key = if i < j { (i, j) } else { (j, i) };
        self.quadratic.get(&key).copied().unwrap_or(0.0)
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.num_vars {
            return Err(Error::contract(format!(
                "variable index {i} out of range for {} variables",
                self.num_vars
            )));
        }
        Ok(())
    }

    fn check_value(value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::contract(format!("coefficient {value} is not finite")));
        }
        Ok(())
    }

    pub fn add_offset(&mut self, value: f64) -> Result<()> {
        Self::check_value(value)?;
        self.offset += value;
        Ok(())
    }

    /// Accumulates `value` onto `h_i`; entries that cancel to zero are removed.
    pub fn add_linear(&mut self, i: usize, value: f64) -> Result<()> {
        self.check_index(i)?;
        Self::check_value(value)?;
        accumulate(&mut self.linear, i, value);
        Ok(())
    }

    /// Accumulates onto `J_ij` in either index order. `i == j` contributes
    /// to the offset since `s_i^2 = 1`.
    pub fn add_quadratic(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        self.check_index(i)?;
        self.check_index(j)?;
        Self::check_value(value)?;
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => self.offset += value,
            std::cmp::Ordering::Less => accumulate(&mut self.quadratic, (i, j), value),
            std::cmp::Ordering::Greater => accumulate(&mut self.quadratic, (j, i), value),
        }
        Ok(())
    }

    /// Accumulates a three-body term; repeated indices reduce the order.
    pub fn add_cubic(&mut self, i: usize, j: usize, k: usize, value: f64) -> Result<()> {
        self.check_index(i)?;
        self.check_index(j)?;
        self.check_index(k)?;
        Self::check_value(value)?;
        let mut idx = [i, j, k];
        idx.sort_unstable();
        let [a, b, c] = idx;
        if a == b && b == c {
            accumulate(&mut self.linear, a, value);
        } else if a == b {
            accumulate(&mut self.linear, c, value);
        } else if b == c {
            accumulate(&mut self.linear, a, value);
        } else {
            accumulate(&mut self.cubic, (a, b, c), value);
        }
        Ok(())
    }

    /// Energy of a bitstring.
    pub fn energy(&self, bits: &BitString) -> Result<f64> {
        if bits.len() != self.num_vars {
            return Err(Error::contract(format!(
                "bitstring has {} bits but the model has {} variables",
                bits.len(),
                self.num_vars
            )));
        }
        let s = |i: usize| bits.spin(i);
        let mut e = self.offset;
        for (&i, &h) in &self.linear {
            e += h * s(i);
        }
        for (&(i, j), &v) in &self.quadratic {
            e += v * s(i) * s(j);
        }
        for (&(i, j, k), &v) in &self.cubic {
            e += v * s(i) * s(j) * s(k);
        }
        Ok(e)
    }

    /// Multiplies every coefficient, offset included, by `factor`.
    pub fn scaled(&self, factor: f64) -> IsingModel {
        let mut m = self.clone();
        m.linear.values_mut().for_each(|v| *v *= factor);
        m.quadratic.values_mut().for_each(|v| *v *= factor);
        m.cubic.values_mut().for_each(|v| *v *= factor);
        m.offset *= factor;
        m.prune();
        m
    }

    /// Coefficient-wise sum of two models over the same variables.
    pub fn plus(&self, other: &IsingModel) -> Result<IsingModel> {
        if self.num_vars != other.num_vars {
            return Err(Error::contract("models differ in variable count"));
        }
        let mut m = self.clone();
        for (&i, &v) in &other.linear {
            accumulate(&mut m.linear, i, v);
        }
        for (&k, &v) in &other.quadratic {
            accumulate(&mut m.quadratic, k, v);
        }
        for (&k, &v) in &other.cubic {
            accumulate(&mut m.cubic, k, v);
        }
        m.offset += other.offset;
        Ok(m)
    }

    fn prune(&mut self) {
        self.linear.retain(|_, v| *v != 0.0);
        self.quadratic.retain(|_, v| *v != 0.0);
        self.cubic.retain(|_, v| *v != 0.0);
    }

    /// Largest absolute coefficient over the strategy's denominator set.
    pub fn normalization_factor(&self, strategy: Normalization) -> Result<f64> {
        let max_abs = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0f64, |m, v| m.max(v.abs()));
        let factor = match strategy {
            Normalization::MaxAbsJ => max_abs(&mut self.quadratic.values().copied()),
            Normalization::MaxAbsH => max_abs(&mut self.linear.values().copied()),
            Normalization::MaxAbsHJ => {
                max_abs(&mut self.linear.values().copied().chain(self.quadratic.values().copied()))
            }
        };
        if factor == 0.0 {
            return Err(Error::NormalizationUndefined(strategy.name()));
        }
        Ok(factor)
    }

    /// Divides all coefficients by the strategy's largest absolute value.
    pub fn normalize(&self, strategy: Normalization) -> Result<IsingModel> {
        let factor = self.normalization_factor(strategy)?;
        Ok(self.scaled(1.0 / factor))
    }

    pub fn compile(&self) -> CompiledModel {
        CompiledModel::new(self)
    }

    /// Per-variable incidence lists for single-flip energy differences.
    pub fn neighborhood(&self) -> Neighborhood {
        Neighborhood::new(self)
    }
}

fn accumulate<K: Ord>(map: &mut BTreeMap<K, f64>, key: K, value: f64) {
    if value == 0.0 {
        return;
    }
    let entry = map.entry(key).or_insert(0.0);
    *entry += value;
    if *entry == 0.0 {
        // cancelled terms disappear so gate counts only see real couplings
        map.retain(|_, v| *v != 0.0);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Normalization {
    /// Divide by `max |J_ij|`.
    MaxAbsJ,
    /// Divide by `max |h_i|, |J_ij|`.
    MaxAbsHJ,
    /// Divide by `max |h_i|`.
    MaxAbsH,
}

impl Normalization {
    pub fn name(self) -> &'static str {
        match self {
            Normalization::MaxAbsJ => "MAX_ABS_J",
            Normalization::MaxAbsHJ => "MAX_ABS_HJ",
            Normalization::MaxAbsH => "MAX_ABS_H",
        }
    }
}

/// Flat term lists for evaluating energies by basis index (`n <= 64`).
#[derive(Clone, Debug)]
pub struct CompiledModel {
    num_vars: usize,
    linear: Vec<(u32, f64)>,
    quadratic: Vec<(u32, u32, f64)>,
    cubic: Vec<(u32, u32, u32, f64)>,
    offset: f64,
}

impl CompiledModel {
    fn new(model: &IsingModel) -> Self {
        CompiledModel {
            num_vars: model.num_vars,
            linear: model.linear.iter().map(|(&i, &v)| (i as u32, v)).collect(),
            quadratic: model
                .quadratic
                .iter()
                .map(|(&(i, j), &v)| (i as u32, j as u32, v))
                .collect(),
            cubic: model
                .cubic
                .iter()
                .map(|(&(i, j, k), &v)| (i as u32, j as u32, k as u32, v))
                .collect(),
            offset: model.offset,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Energy of basis state `k` (bit `m` of `k` is variable `m`).
    #[inline]
    pub fn energy_of_index(&self, k: u64) -> f64 {
        // s_i s_j ... = (-1)^(parity of the selected bits)
        let sign = |parity: u64| 1.0 - 2.0 * (parity & 1) as f64;
        let mut e = self.offset;
        for &(i, v) in &self.linear {
            e += v * sign(k >> i);
        }
        for &(i, j, v) in &self.quadratic {
            e += v * sign((k >> i) ^ (k >> j));
        }
        for &(i, j, l, v) in &self.cubic {
            e += v * sign((k >> i) ^ (k >> j) ^ (k >> l));
        }
        e
    }

    /// Energies of all `2^n` basis states, indexed by basis integer.
    pub fn all_energies(&self) -> Vec<f64> {
        let dim = 1usize << self.num_vars;
        let mut out = vec![0.0; dim];
        out.par_chunks_mut(4096).enumerate().for_each(|(chunk, slice)| {
            let base = (chunk * 4096) as u64;
            for (off, e) in slice.iter_mut().enumerate() {
                *e = self.energy_of_index(base + off as u64);
            }
        });
        out
    }
}

/// Terms touching each variable, for O(degree) flip deltas.
#[derive(Clone, Debug)]
pub struct Neighborhood {
    linear: Vec<f64>,
    pairs: Vec<Vec<(usize, f64)>>,
    triples: Vec<Vec<(usize, usize, f64)>>,
}

impl Neighborhood {
    fn new(model: &IsingModel) -> Self {
        let n = model.num_vars;
        let mut linear = vec![0.0; n];
        for (&i, &v) in &model.linear {
            linear[i] = v;
        }
        let mut pairs = vec![Vec::new(); n];
        for (&(i, j), &v) in &model.quadratic {
            pairs[i].push((j, v));
            pairs[j].push((i, v));
        }
        let mut triples = vec![Vec::new(); n];
        for (&(i, j, k), &v) in &model.cubic {
            triples[i].push((j, k, v));
            triples[j].push((i, k, v));
            triples[k].push((i, j, v));
        }
        Neighborhood { linear, pairs, triples }
    }

    pub fn num_vars(&self) -> usize {
        self.linear.len()
    }

    /// Energy change from flipping variable `i` given spins `s` (each ±1).
    #[inline]
    pub fn flip_delta(&self, i: usize, s: &[i8]) -> f64 {
        let mut field = self.linear[i];
        for &(j, v) in &self.pairs[i] {
            field += v * s[j] as f64;
        }
        for &(a, b, v) in &self.triples[i] {
            field += v * (s[a] * s[b]) as f64;
        }
        -2.0 * s[i] as f64 * field
    }

    pub fn degree(&self, i: usize) -> usize {
        self.pairs[i].len() + self.triples[i].len()
    }
}

/// Binary quadratic objective `sum_{i<=j} Q_ij x_i x_j + c` over `x in {0,1}`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct QuboModel {
    num_vars: usize,
    terms: BTreeMap<(usize, usize), f64>,
    constant: f64,
}

impl QuboModel {
    pub fn new(num_vars: usize) -> Self {
        QuboModel {
            num_vars,
            ..Default::default()
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn terms(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.terms
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn add_term(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        if i >= self.num_vars || j >= self.num_vars {
            return Err(Error::contract(format!(
                "QUBO index ({i},{j}) out of range for {} variables",
                self.num_vars
            )));
        }
        IsingModel::check_value(value)?;
        let key = if i <= j { (i, j) } else { (j, i) };
        accumulate(&mut self.terms, key, value);
        Ok(())
    }

    pub fn add_constant(&mut self, value: f64) -> Result<()> {
        IsingModel::check_value(value)?;
        self.constant += value;
        Ok(())
    }

    pub fn value(&self, bits: &BitString) -> Result<f64> {
        if bits.len() != self.num_vars {
            return Err(Error::contract("bitstring length does not match the QUBO"));
        }
        let x = |i: usize| if bits.get(i) { 1.0 } else { 0.0 };
        Ok(self.constant + self.terms.iter().map(|(&(i, j), &v)| v * x(i) * x(j)).sum::<f64>())
    }
}

/// Rewrites a QUBO with `x_i = (1 - s_i) / 2`.
pub fn qubo_to_ising(q: &QuboModel) -> Result<IsingModel> {
    let mut m = IsingModel::new(q.num_vars);
    m.add_offset(q.constant)?;
    for (&(i, j), &v) in &q.terms {
        if i == j {
            m.add_offset(v / 2.0)?;
            m.add_linear(i, -v / 2.0)?;
        } else {
            m.add_offset(v / 4.0)?;
            m.add_linear(i, -v / 4.0)?;
            m.add_linear(j, -v / 4.0)?;
            m.add_quadratic(i, j, v / 4.0)?;
        }
    }
    Ok(m)
}

/// Exact optimum of a model, found by enumeration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub optimal_energy: f64,
    pub optimal_bitstrings: Vec<BitString>,
    /// Sorted `(energy, degeneracy)` pairs when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<Vec<(f64, u64)>>,
}

impl GroundTruth {
    /// Basis indices of the optimal set, sorted ascending.
    pub fn optimal_indices(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self.optimal_bitstrings.iter().filter_map(BitString::to_index).collect();
        v.sort_unstable();
        v
    }

    pub fn degeneracy(&self) -> usize {
        self.optimal_bitstrings.len()
    }

    /// Whether `energy` (from any solver) reaches the optimum, allowing for
    /// accumulated rounding.
    pub fn is_optimal_energy(&self, energy: f64) -> bool {
        energy <= self.optimal_energy + 1e-9 * self.optimal_energy.abs().max(1.0)
    }
}

/// Absolute tolerance used to decide that two energies of a table are the
/// same level. Scaled by the table's largest magnitude.
pub fn degeneracy_tolerance(energies: &[f64]) -> f64 {
    let scale = energies.iter().fold(1.0f64, |m, e| m.max(e.abs()));
    1e-10 * scale
}

/// Ground truth from a precomputed energy table.
pub fn ground_truth_from_energies(energies: &[f64], num_vars: usize, with_spectrum: bool) -> GroundTruth {
    let tol = degeneracy_tolerance(energies);
    let min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let optimal_bitstrings = energies
        .iter()
        .enumerate()
        .filter(|(_, &e)| e <= min + tol)
        .map(|(k, _)| BitString::from_index(k as u64, num_vars))
        .collect();
    let spectrum = with_spectrum.then(|| spectrum_of(energies, tol));
    GroundTruth {
        optimal_energy: min,
        optimal_bitstrings,
        spectrum,
    }
}

fn spectrum_of(energies: &[f64], tol: f64) -> Vec<(f64, u64)> {
    let mut sorted = energies.to_vec();
    sorted.par_sort_unstable_by(f64::total_cmp);
    let mut levels: Vec<(f64, u64)> = Vec::new();
    let mut anchor = f64::NAN;
    for e in sorted {
        match levels.last_mut() {
            Some(last) if e - anchor <= tol => last.1 += 1,
            _ => {
                anchor = e;
                levels.push((e, 1));
            }
        }
    }
    levels
}

/// Exhaustive search over all `2^n` bitstrings.
pub fn brute_force(model: &IsingModel, with_spectrum: bool) -> Result<GroundTruth> {
    brute_force_capped(model, with_spectrum, BRUTE_FORCE_CAP)
}

pub fn brute_force_capped(model: &IsingModel, with_spectrum: bool, cap: usize) -> Result<GroundTruth> {
    if model.num_vars > cap.min(63) {
        return Err(Error::SizeCap {
            requested: model.num_vars,
            cap: cap.min(63),
        });
    }
    let energies = model.compile().all_energies();
    Ok(ground_truth_from_energies(&energies, model.num_vars, with_spectrum))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn single_edge() -> IsingModel {
        let mut m = IsingModel::new(2);
        m.add_quadratic(0, 1, 1.0).unwrap();
        m
    }

    #[test]
    fn energy_of_single_coupling() {
        let m = single_edge();
        assert_eq!(m.energy(&bits("00")).unwrap(), 1.0);
        assert_eq!(m.energy(&bits("01")).unwrap(), -1.0);
    }

    #[test]
    fn energy_with_cubic_and_offset() {
        let mut m = IsingModel::new(3);
        m.add_linear(0, 1.0).unwrap();
        m.add_cubic(0, 1, 2, 2.0).unwrap();
        m.add_offset(0.5).unwrap();
        // s = (-1, +1, -1): -1 + 2 * (+1) + 0.5
        assert_eq!(m.energy(&bits("101")).unwrap(), 1.5);
        assert_eq!(m.compile().energy_of_index(0b101), 1.5);
    }

    #[test]
    fn energy_rejects_length_mismatch() {
        let m = single_edge();
        assert!(matches!(m.energy(&bits("011")), Err(Error::Contract(_))));
    }

    #[test]
    fn builder_rejects_bad_input() {
        let mut m = IsingModel::new(2);
        assert!(m.add_linear(2, 1.0).is_err());
        assert!(m.add_quadratic(0, 1, f64::NAN).is_err());
        m.add_quadratic(1, 0, 2.0).unwrap();
        assert_eq!(m.j(0, 1), 2.0);
        m.add_quadratic(0, 1, -2.0).unwrap();
        assert!(m.quadratic().is_empty());
    }

    #[test]
    fn normalize_by_max_abs_j() {
        let mut m = IsingModel::new(3);
        m.add_linear(0, 1.0).unwrap();
        m.add_quadratic(0, 1, 2.0).unwrap();
        m.add_quadratic(1, 2, -4.0).unwrap();
        let n = m.normalize(Normalization::MaxAbsJ).unwrap();
        assert_eq!(n.h(0), 0.25);
        assert_eq!(n.j(0, 1), 0.5);
        assert_eq!(n.j(1, 2), -1.0);
        assert_eq!(n.normalize(Normalization::MaxAbsJ).unwrap(), n);
    }

    #[test]
    fn normalize_by_max_abs_hj() {
        let mut m = IsingModel::new(2);
        m.add_linear(0, -3.0).unwrap();
        m.add_quadratic(0, 1, 2.0).unwrap();
        let n = m.normalize(Normalization::MaxAbsHJ).unwrap();
        assert_eq!(n.h(0), -1.0);
        assert!((n.j(0, 1) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn normalize_without_denominator_fails() {
        let m = single_edge();
        assert!(matches!(
            m.normalize(Normalization::MaxAbsH),
            Err(Error::NormalizationUndefined("MAX_ABS_H"))
        ));
        assert!(IsingModel::new(3).normalize(Normalization::MaxAbsJ).is_err());
    }

    #[test]
    fn qubo_product_term() {
        let mut q = QuboModel::new(2);
        q.add_term(0, 1, 1.0).unwrap();
        let m = qubo_to_ising(&q).unwrap();
        assert_eq!(m.j(0, 1), 0.25);
        assert_eq!(m.h(0), -0.25);
        assert_eq!(m.h(1), -0.25);
        assert_eq!(m.offset(), 0.25);
        for k in 0..4 {
            let b = BitString::from_index(k, 2);
            assert_eq!(m.energy(&b).unwrap(), q.value(&b).unwrap());
        }
    }

    #[test]
    fn qubo_linear_term_and_zero() {
        let mut q = QuboModel::new(1);
        q.add_term(0, 0, 1.0).unwrap();
        let m = qubo_to_ising(&q).unwrap();
        assert_eq!(m.h(0), -0.5);
        assert_eq!(m.offset(), 0.5);
        let zero = qubo_to_ising(&QuboModel::new(4)).unwrap();
        assert_eq!(zero, IsingModel::new(4));
    }

    #[test]
    fn brute_force_single_edge() {
        let gt = brute_force(&single_edge(), true).unwrap();
        assert_eq!(gt.optimal_energy, -1.0);
        let names: Vec<String> = gt.optimal_bitstrings.iter().map(|b| b.to_string()).collect();
        assert_eq!(names, vec!["10", "01"]);
        assert_eq!(gt.spectrum.unwrap(), vec![(-1.0, 2), (1.0, 2)]);
    }

    #[test]
    fn brute_force_respects_cap() {
        let m = IsingModel::new(12);
        assert!(matches!(
            brute_force_capped(&m, false, 10),
            Err(Error::SizeCap { requested: 12, cap: 10 })
        ));
    }

    #[test]
    fn flip_delta_matches_energy_difference() {
        let mut m = IsingModel::new(4);
        m.add_linear(1, 0.3).unwrap();
        m.add_quadratic(0, 1, -0.7).unwrap();
        m.add_quadratic(2, 3, 1.1).unwrap();
        m.add_cubic(0, 2, 3, 0.4).unwrap();
        let nb = m.neighborhood();
        for k in 0..16 {
            let b = BitString::from_index(k, 4);
            let s = b.spins();
            for i in 0..4 {
                let d = m.energy(&b.flipped(i)).unwrap() - m.energy(&b).unwrap();
                assert!((nb.flip_delta(i, &s) - d).abs() < 1e-12);
            }
        }
    }
}
