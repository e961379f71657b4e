//! Linear-ramp QAOA simulation and benchmarking.
//!
//! Problems are Ising models over spins `s_i = 1 - 2 b_i`. A state-vector
//! engine runs the fixed linear-ramp schedule, a density-matrix and a
//! trajectory engine add depolarizing noise after every two-qubit gate, and
//! classical solvers (simulated annealing, tabu search) serve as references
//! for time-to-solution comparisons.

pub mod baselines;
pub mod bits;
pub mod compare;
pub mod error;
pub mod experiment;
pub mod format;
pub mod ising;
pub mod metrics;
pub mod noise;
pub mod problems;
pub mod rng;
pub mod samples;
pub mod scan;
pub mod schedule;
pub mod simulator;
pub mod stats;

pub use bits::BitString;
pub use error::{Error, Result};
pub use ising::{brute_force, GroundTruth, IsingModel, Normalization};
pub use problems::{Family, ProblemInstance};
pub use samples::SampleSet;
pub use schedule::{build_schedule, LinearRampSchedule};
pub use simulator::{EnergyTable, StateVector};
