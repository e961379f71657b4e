//! Density-matrix backend against a dense matrix evolution in which the
//! depolarizing channel is written as a Pauli twirl.

use lrqaoa::ising::{brute_force, IsingModel};
use lrqaoa::noise::{evolve_density, gate_count, overlap_probability, run_noisy_density, NoiseConfig, DENSITY_CAP};
use lrqaoa::problems::gen_wmaxcut;
use lrqaoa::schedule::build_schedule;
use lrqaoa::simulator::{run, success_probability, RunOptions};
use lrqaoa::Error;
use nalgebra::DMatrix;
use num_complex::Complex64;

type M = DMatrix<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn paulis() -> [M; 4] {
    let o = c(0.0, 0.0);
    let l = c(1.0, 0.0);
    [
        M::from_row_slice(2, 2, &[l, o, o, l]),
        M::from_row_slice(2, 2, &[o, l, l, o]),
        M::from_row_slice(2, 2, &[o, c(0.0, -1.0), c(0.0, 1.0), o]),
        M::from_row_slice(2, 2, &[l, o, o, -l]),
    ]
}

/// `ops[q]` on qubit `q`; qubit 0 is the least significant index bit.
fn embed(n: usize, ops: &[(usize, &M)]) -> M {
    let id = M::identity(2, 2);
    let mut out = M::from_element(1, 1, c(1.0, 0.0));
    for q in (0..n).rev() {
        let op = ops.iter().find(|(m, _)| *m == q).map(|(_, o)| *o).unwrap_or(&id);
        out = out.kronecker(op);
    }
    out
}

fn spin(k: usize, m: usize) -> f64 {
    1.0 - 2.0 * ((k >> m) & 1) as f64
}

fn dense_noisy(model: &IsingModel, p: usize, db: f64, dg: f64, lambda: f64) -> M {
    let n = model.num_vars();
    let dim = 1 << n;
    let ps = paulis();
    let mut rho = M::from_element(dim, dim, c(1.0 / dim as f64, 0.0));
    let rx = |beta: f64| {
        M::from_row_slice(
            2,
            2,
            &[
                c(beta.cos(), 0.0),
                c(0.0, beta.sin()),
                c(0.0, beta.sin()),
                c(beta.cos(), 0.0),
            ],
        )
    };
    for layer in 0..p {
        let beta = (p - layer) as f64 / p as f64 * db;
        let gamma = (layer + 1) as f64 / p as f64 * dg;
        for (&(i, j), &v) in model.quadratic() {
            let u = M::from_diagonal(&nalgebra::DVector::from_fn(dim, |k, _| {
                Complex64::cis(-gamma * v * spin(k, i) * spin(k, j))
            }));
            rho = &u * rho * u.adjoint();
            let mut twirl = M::zeros(dim, dim);
            for a in &ps {
                for b in &ps {
                    let pp = embed(n, &[(i, a), (j, b)]);
                    twirl += &pp * &rho * &pp;
                }
            }
            rho = rho * c(1.0 - lambda, 0.0) + twirl * c(lambda / 16.0, 0.0);
        }
        let z = M::from_diagonal(&nalgebra::DVector::from_fn(dim, |k, _| {
            let e: f64 = model.linear().iter().map(|(&m, &h)| h * spin(k, m)).sum();
            Complex64::cis(-gamma * e)
        }));
        rho = &z * rho * z.adjoint();
        let r = rx(beta);
        let all: Vec<(usize, &M)> = (0..n).map(|q| (q, &r)).collect();
        let u = embed(n, &all);
        rho = &u * rho * u.adjoint();
    }
    rho
}

fn with_fields(n: usize, seed: u64) -> IsingModel {
    let mut m = gen_wmaxcut(n, 0.8, seed).unwrap().model;
    for i in 0..n {
        m.add_linear(i, 0.1 * (i as f64 + 1.0) - 0.2).unwrap();
    }
    m
}

#[test]
fn matches_pauli_twirl_oracle() {
    for (seed, lambda) in [(1, 0.0), (2, 0.05), (3, 0.3), (4, 1.0)] {
        let model = with_fields(4, seed);
        let s = build_schedule(0.4, 0.7, 3).unwrap();
        let rho = evolve_density(&model, &s, lambda).unwrap().to_dense();
        let oracle = dense_noisy(&model, 3, 0.4, 0.7, lambda);
        for (r, row) in rho.iter().enumerate() {
            for (col, v) in row.iter().enumerate() {
                assert!((v - oracle[(r, col)]).norm() < 1e-12, "lambda {lambda} at ({r}, {col})");
            }
        }
    }
}

#[test]
fn state_stays_physical() {
    let model = with_fields(4, 9);
    let s = build_schedule(0.3, 0.6, 6).unwrap();
    for lambda in [0.01, 0.2, 0.9] {
        let dense = evolve_density(&model, &s, lambda).unwrap().to_dense();
        let rho = M::from_fn(16, 16, |r, col| dense[r][col]);
        assert!((rho.trace() - c(1.0, 0.0)).norm() < 1e-12);
        assert!((&rho - rho.adjoint()).norm() < 1e-12);
        let eig = rho.symmetric_eigen();
        assert!(eig.eigenvalues.iter().all(|&e| e > -1e-12), "{:?}", eig.eigenvalues);
    }
}

#[test]
fn zero_noise_reproduces_pure_state() {
    let inst = gen_wmaxcut(6, 0.7, 12).unwrap();
    let s = build_schedule(0.3, 0.6, 15).unwrap();
    let ideal = run(&inst.model, &s, &RunOptions::default())
        .unwrap()
        .state
        .probabilities();
    let noisy = run_noisy_density(&inst.model, &s, &NoiseConfig::density(0.0)).unwrap();
    for (a, b) in ideal.iter().zip(&noisy) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn full_noise_approaches_uniform() {
    let inst = gen_wmaxcut(5, 1.0, 2).unwrap();
    let s = build_schedule(0.3, 0.6, 10).unwrap();
    let probs = run_noisy_density(&inst.model, &s, &NoiseConfig::density(1.0)).unwrap();
    for q in probs {
        assert!((q - 1.0 / 32.0).abs() < 1e-3);
    }
}

#[test]
fn overlap_falls_with_noise() {
    let inst = gen_wmaxcut(6, 0.7, 21).unwrap();
    let truth = brute_force(&inst.model, false).unwrap();
    let s = build_schedule(0.3, 0.6, 10).unwrap();
    let ideal = success_probability(&run(&inst.model, &s, &RunOptions::default()).unwrap().state, &truth).unwrap();
    let p_random = truth.degeneracy() as f64 / 64.0;
    let mut last = 1.0 + 1e-12;
    for lambda in [0.0, 1e-3, 1e-2, 5e-2, 1e-1] {
        let probs = run_noisy_density(&inst.model, &s, &NoiseConfig::density(lambda)).unwrap();
        let ok: f64 = truth.optimal_indices().iter().map(|&k| probs[k as usize]).sum();
        let ovl = overlap_probability(ok, ideal, p_random).unwrap();
        assert!(ovl < last, "lambda {lambda}: {ovl} >= {last}");
        last = ovl;
    }
    assert_eq!(gate_count(&inst.model, 10), inst.model.quadratic().len() * 10);
}

#[test]
fn density_size_cap() {
    let inst = gen_wmaxcut(DENSITY_CAP + 1, 0.5, 1).unwrap();
    let s = build_schedule(0.3, 0.6, 1).unwrap();
    let err = run_noisy_density(&inst.model, &s, &NoiseConfig::density(0.01)).unwrap_err();
    assert!(matches!(err, Error::SizeCap { .. }), "{err:?}");
}
