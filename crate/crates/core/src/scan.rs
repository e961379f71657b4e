//! Success probability over a grid of ramp slopes (performance diagrams).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::GroundTruth;
use crate::noise::{self, NoiseConfig};
use crate::problems::ProblemInstance;
use crate::schedule::{build_schedule, delta_grid_axes, Axis, LinearRampSchedule};
use crate::simulator::{run_with_table, EnergyTable, RunOptions};

/// Default scan grid: 6 mixer slopes by 7 cost slopes.
pub fn default_axes() -> (Axis, Axis) {
    (
        Axis {
            lo: 0.1,
            hi: 0.6,
            steps: 6,
        },
        Axis {
            lo: 0.1,
            hi: 1.0,
            steps: 7,
        },
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanCell {
    pub delta_beta: f64,
    pub delta_gamma: f64,
    pub success_prob: f64,
    pub mean_energy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerformanceDiagram {
    pub p: usize,
    /// Success probability of uniform random sampling.
    pub p_random: f64,
    pub cells: Vec<ScanCell>,
}

impl PerformanceDiagram {
    /// Highest success probability; the first cell in grid order wins ties.
    pub fn best(&self) -> Option<&ScanCell> {
        self.cells.iter().fold(None, |best: Option<&ScanCell>, c| match best {
            Some(b) if b.success_prob >= c.success_prob => Some(b),
            _ => Some(c),
        })
    }

    /// `delta_beta,delta_gamma,prob,mean_energy` rows.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["delta_beta", "delta_gamma", "prob", "mean_energy"])?;
        for c in &self.cells {
            w.serialize((c.delta_beta, c.delta_gamma, c.success_prob, c.mean_energy))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv(text: &str, p: usize, p_random: f64) -> Result<PerformanceDiagram> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let cells = r
            .deserialize::<(f64, f64, f64, f64)>()
            .map(|row| {
                row.map(|(b, g, s, e)| ScanCell {
                    delta_beta: b,
                    delta_gamma: g,
                    success_prob: s,
                    mean_energy: e,
                })
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(PerformanceDiagram { p, p_random, cells })
    }
}

/// Shared per-instance state for repeated evaluations.
pub struct Evaluator<'a> {
    pub instance: &'a ProblemInstance,
    pub table: EnergyTable,
    pub truth: GroundTruth,
    pub noise: Option<NoiseConfig>,
}

impl<'a> Evaluator<'a> {
    pub fn new(instance: &'a ProblemInstance, noise: Option<NoiseConfig>) -> Result<Evaluator<'a>> {
        if let Some(cfg) = &noise {
            cfg.validate()?;
        }
        let table = EnergyTable::new(&instance.model)?;
        let truth = table.ground_truth(false);
        Ok(Evaluator {
            instance,
            table,
            truth,
            noise,
        })
    }

    pub fn p_random(&self) -> f64 {
        self.truth.degeneracy() as f64 / self.table.energies().len() as f64
    }

    /// Output distribution for one schedule, noiseless or noisy.
    pub fn probabilities(&self, schedule: &LinearRampSchedule) -> Result<Vec<f64>> {
        match &self.noise {
            None => Ok(run_with_table(&self.table, schedule, &RunOptions::default())?
                .state
                .probabilities()),
            Some(cfg) => noise::noisy_probabilities(&self.instance.model, schedule, cfg),
        }
    }

    pub fn success(&self, probs: &[f64]) -> f64 {
        self.truth.optimal_indices().iter().map(|&k| probs[k as usize]).sum()
    }

    pub fn mean_energy(&self, probs: &[f64]) -> f64 {
        probs.iter().zip(self.table.energies()).map(|(p, e)| p * e).sum()
    }
}

/// Evaluates every `(delta_beta, delta_gamma)` of the grid at depth `p`.
pub fn scan_performance_diagram(
    instance: &ProblemInstance,
    p: usize,
    grid: &[(f64, f64)],
    noise: Option<NoiseConfig>,
) -> Result<PerformanceDiagram> {
    let eval = Evaluator::new(instance, noise)?;
    scan_with(&eval, p, grid)
}

pub fn scan_with(eval: &Evaluator<'_>, p: usize, grid: &[(f64, f64)]) -> Result<PerformanceDiagram> {
    if grid.is_empty() {
        return Err(Error::param("empty scan grid"));
    }
    let cells = grid
        .par_iter()
        .map(|&(db, dg)| {
            let probs = eval.probabilities(&build_schedule(db, dg, p)?)?;
            Ok(ScanCell {
                delta_beta: db,
                delta_gamma: dg,
                success_prob: eval.success(&probs),
                mean_energy: eval.mean_energy(&probs),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PerformanceDiagram {
        p,
        p_random: eval.p_random(),
        cells,
    })
}

pub fn grid_from_axes(beta: Axis, gamma: Axis) -> Result<Vec<(f64, f64)>> {
    delta_grid_axes(beta, gamma)
}
