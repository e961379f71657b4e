//! JSON instance documents and edge-list sidecars.
//!
//! ```json
//! { "num_vars": 3,
//!   "linear": {"0": 0.5},
//!   "quadratic": {"0,1": 1.0, "1,2": -0.25},
//!   "cubic": {"0,1,2": 0.125},
//!   "offset": 0.0,
//!   "metadata": {} }
//! ```
//!
//! Index keys must be strictly increasing within a term. Instances built by
//! external tools (knapsack, portfolio, bin packing, TSP, Max-2-SAT) enter
//! the crate through this format.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::ising::IsingModel;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceDocument {
    pub num_vars: usize,
    #[serde(default)]
    pub linear: BTreeMap<String, f64>,
    #[serde(default)]
    pub quadratic: BTreeMap<String, f64>,
    #[serde(default)]
    pub cubic: BTreeMap<String, f64>,
    #[serde(default)]
    pub offset: f64,
    #[serde(default)]
    pub metadata: Map<String, Value>,
}

fn parse_key<const N: usize>(key: &str) -> Result<[usize; N]> {
    let parts: Vec<&str> = key.split(',').map(str::trim).collect();
    if parts.len() != N {
        return Err(Error::contract(format!(
            "term key \"{key}\" should have {N} comma-separated indices"
        )));
    }
    let mut out = [0usize; N];
    for (slot, p) in out.iter_mut().zip(&parts) {
        *slot = p
            .parse()
            .map_err(|_| Error::contract(format!("term key \"{key}\" is not a list of indices")))?;
    }
    if out.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::contract(format!(
            "term key \"{key}\" must list strictly increasing indices"
        )));
    }
    Ok(out)
}

impl InstanceDocument {
    pub fn from_model(model: &IsingModel, metadata: Map<String, Value>) -> Self {
        InstanceDocument {
            num_vars: model.num_vars(),
            linear: model.linear().iter().map(|(i, &v)| (i.to_string(), v)).collect(),
            quadratic: model
                .quadratic()
                .iter()
                .map(|((i, j), &v)| (format!("{i},{j}"), v))
                .collect(),
            cubic: model
                .cubic()
                .iter()
                .map(|((i, j, k), &v)| (format!("{i},{j},{k}"), v))
                .collect(),
            offset: model.offset(),
            metadata,
        }
    }

    pub fn to_model(&self) -> Result<IsingModel> {
        let mut m = IsingModel::new(self.num_vars);
        m.add_offset(self.offset)?;
        for (k, &v) in &self.linear {
            let [i] = parse_key::<1>(k)?;
            m.add_linear(i, v)?;
        }
        for (k, &v) in &self.quadratic {
            let [i, j] = parse_key::<2>(k)?;
            m.add_quadratic(i, j, v)?;
        }
        for (k, &v) in &self.cubic {
            let [i, j, l] = parse_key::<3>(k)?;
            m.add_cubic(i, j, l, v)?;
        }
        Ok(m)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }
}

/// Writes `model` as an instance document with empty metadata.
pub fn model_to_json(model: &IsingModel) -> Result<String> {
    InstanceDocument::from_model(model, Map::new()).to_json()
}

pub fn model_from_json(text: &str) -> Result<IsingModel> {
    InstanceDocument::from_json(text)?.to_model()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_survives_json() {
        let mut m = IsingModel::new(4);
        m.add_linear(3, 0.1).unwrap();
        m.add_quadratic(0, 2, -1.0 / 3.0).unwrap();
        m.add_cubic(0, 1, 3, 0.125).unwrap();
        m.add_offset(2.5).unwrap();
        let back = model_from_json(&model_to_json(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn rejects_unsorted_or_out_of_range_keys() {
        let bad = r#"{"num_vars": 3, "quadratic": {"2,1": 1.0}}"#;
        assert!(model_from_json(bad).is_err());
        let bad = r#"{"num_vars": 2, "linear": {"5": 1.0}}"#;
        assert!(model_from_json(bad).is_err());
        let bad = r#"{"num_vars": 3, "cubic": {"0,1": 1.0}}"#;
        assert!(model_from_json(bad).is_err());
    }

    #[test]
    fn missing_sections_default_to_empty() {
        let m = model_from_json(r#"{"num_vars": 2, "quadratic": {"0,1": 1}}"#).unwrap();
        assert_eq!(m.j(0, 1), 1.0);
        assert!(m.linear().is_empty());
    }
}
