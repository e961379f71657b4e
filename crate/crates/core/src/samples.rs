//! Multisets of measured bitstrings.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::ising::IsingModel;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleEntry {
    pub bits: BitString,
    pub count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<f64>,
}

/// Distinct bitstrings with shot counts, sorted by bitstring.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    entries: Vec<SampleEntry>,
    total_shots: u64,
}

impl SampleSet {
    /// Merges repeated bitstrings and drops zero counts.
    pub fn from_counts<I>(counts: I) -> Result<SampleSet>
    where
        I: IntoIterator<Item = (BitString, u64)>,
    {
        let mut merged: BTreeMap<BitString, u64> = BTreeMap::new();
        let mut width = None;
        for (bits, count) in counts {
            match width {
                None => width = Some(bits.len()),
                Some(w) if w != bits.len() => return Err(Error::contract("samples have different bitstring lengths")),
                _ => {}
            }
            if count > 0 {
                *merged.entry(bits).or_insert(0) += count;
            }
        }
        let total_shots = merged.values().sum();
        let entries = merged
            .into_iter()
            .map(|(bits, count)| SampleEntry {
                bits,
                count,
                energy: None,
            })
            .collect();
        Ok(SampleSet { entries, total_shots })
    }

    /// One shot per bitstring in the list.
    pub fn from_shots<I: IntoIterator<Item = BitString>>(shots: I) -> Result<SampleSet> {
        Self::from_counts(shots.into_iter().map(|b| (b, 1)))
    }

    /// Fills in per-entry energies.
    pub fn with_energies(mut self, model: &IsingModel) -> Result<SampleSet> {
        for e in &mut self.entries {
            e.energy = Some(model.energy(&e.bits)?);
        }
        Ok(self)
    }

    pub fn entries(&self) -> &[SampleEntry] {
        &self.entries
    }

    pub fn total_shots(&self) -> u64 {
        self.total_shots
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Bitstring width, if any sample exists.
    pub fn num_bits(&self) -> Option<usize> {
        self.entries.first().map(|e| e.bits.len())
    }

    pub fn count_of(&self, bits: &BitString) -> u64 {
        self.entries
            .binary_search_by(|e| e.bits.cmp(bits))
            .map(|i| self.entries[i].count)
            .unwrap_or(0)
    }

    /// Shot-weighted mean of `f` over all samples.
    pub fn mean_by<F: FnMut(&BitString) -> f64>(&self, mut f: F) -> f64 {
        if self.total_shots == 0 {
            return f64::NAN;
        }
        let sum: f64 = self.entries.iter().map(|e| e.count as f64 * f(&e.bits)).sum();
        sum / self.total_shots as f64
    }

    /// Lowest energy among the samples.
    pub fn best(&self, model: &IsingModel) -> Result<Option<(BitString, f64)>> {
        let mut best: Option<(BitString, f64)> = None;
        for e in &self.entries {
            let energy = match e.energy {
                Some(v) => v,
                None => model.energy(&e.bits)?,
            };
            if best.as_ref().is_none_or(|(_, b)| energy < *b) {
                best = Some((e.bits.clone(), energy));
            }
        }
        Ok(best)
    }

    /// Reads `bits,count` CSV rows (a header line is allowed).
    pub fn read_csv(text: &str) -> Result<SampleSet> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let first = rec.get(0).unwrap_or("");
            if i == 0 && first.parse::<BitString>().is_err() {
                continue;
            }
            let bits: BitString = first.parse()?;
            let count = match rec.get(1) {
                Some(c) if !c.is_empty() => c
                    .parse()
                    .map_err(|_| Error::param(format!("bad count \"{c}\" on row {}", i + 1)))?,
                _ => 1,
            };
            rows.push((bits, count));
        }
        SampleSet::from_counts(rows)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bits,count,energy\n");
        for e in &self.entries {
            let energy = e.energy.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{}\n", e.bits, e.count, energy));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn merges_duplicates_and_counts_shots() {
        let s = SampleSet::from_counts([(b("01"), 2), (b("10"), 1), (b("01"), 3), (b("11"), 0)]).unwrap();
        assert_eq!(s.entries().len(), 2);
        assert_eq!(s.total_shots(), 6);
        assert_eq!(s.count_of(&b("01")), 5);
        assert_eq!(s.count_of(&b("11")), 0);
    }

    #[test]
    fn rejects_mixed_widths() {
        assert!(SampleSet::from_shots([b("01"), b("011")]).is_err());
    }

    #[test]
    fn csv_round_trip_with_header() {
        let s = SampleSet::read_csv("bits,count\n0011,4\n1100,1\n").unwrap();
        assert_eq!(s.total_shots(), 5);
        let again = SampleSet::read_csv(&s.to_csv()).unwrap();
        assert_eq!(again, s);
    }
}
