//! Shared fixtures for unit tests.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::matops::SymMatrix;
use crate::model::{ExpertSchedule, MarketModel, Rate};

/// Three-stock benchmark market (one-year horizon, m₀ = δ).
pub fn benchmark_model() -> MarketModel {
    benchmark_model_with_m0(&[0.05, 0.10, 0.08])
}

pub fn benchmark_model_with_m0(m0: &[f64]) -> MarketModel {
    let alpha = SymMatrix::from_rows(&[
        vec![2.0, 1.0, -1.0],
        vec![1.0, 2.0, -1.0],
        vec![-1.0, -1.0, 2.0],
    ])
    .unwrap();
    let beta = DMatrix::from_row_slice(3, 3, &[0.3, 0.5, 0.1, 0.5, 0.2, 0.2, 0.1, 0.2, 0.2]);
    let sigma = DMatrix::from_row_slice(3, 3, &[0.30, 0.08, 0.05, 0.08, 0.40, 0.05, 0.05, 0.05, 0.35]);
    let sigma0 = SymMatrix::from_rows(&[
        vec![0.2, 0.1, 0.1],
        vec![0.1, 0.3, 0.1],
        vec![0.1, 0.1, 0.2],
    ])
    .unwrap();
    MarketModel::new(
        alpha,
        beta,
        sigma,
        DVector::from_row_slice(&[0.05, 0.10, 0.08]),
        DVector::from_row_slice(m0),
        sigma0,
        Rate::Constant(0.0),
        1.0,
    )
    .unwrap()
}

/// Constant expert reliability of the benchmark market.
pub fn benchmark_gamma() -> SymMatrix {
    SymMatrix::from_rows(&[
        vec![0.80, 0.32, 0.16],
        vec![0.32, 0.72, 0.24],
        vec![0.16, 0.24, 0.64],
    ])
    .unwrap()
}

/// `count` equidistant expert opinions on the benchmark's one-year horizon.
pub fn benchmark_schedule(count: usize) -> ExpertSchedule {
    ExpertSchedule::equidistant(count, 1.0 / count.max(1) as f64, benchmark_gamma()).unwrap()
}

/// One-dimensional model with parameters (a, b, s) and initial variance g0.
pub fn scalar_model(a: f64, b: f64, s: f64, g0: f64, rate: f64, horizon: f64) -> MarketModel {
    MarketModel::new(
        SymMatrix::diagonal(&[a]),
        DMatrix::from_row_slice(1, 1, &[b]),
        DMatrix::from_row_slice(1, 1, &[s]),
        DVector::from_row_slice(&[0.07]),
        DVector::from_row_slice(&[0.07]),
        SymMatrix::diagonal(&[g0]),
        Rate::Constant(rate),
        horizon,
    )
    .unwrap()
}

/// β = 0, Σ₀ = 0: the drift sticks to δ.
pub fn degenerate_model() -> MarketModel {
    MarketModel::new(
        SymMatrix::diagonal(&[1.0]),
        DMatrix::from_row_slice(1, 1, &[0.0]),
        DMatrix::from_row_slice(1, 1, &[0.4]),
        DVector::from_row_slice(&[0.05]),
        DVector::from_row_slice(&[0.05]),
        SymMatrix::diagonal(&[0.0]),
        Rate::Constant(0.0),
        1.0,
    )
    .unwrap()
}

pub fn random_psd_matrix(d: usize, seed: u64) -> SymMatrix {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    SymMatrix::new(&g * g.transpose()).unwrap()
}

pub fn random_pd_matrix(d: usize, seed: u64) -> SymMatrix {
    let base = random_psd_matrix(d, seed);
    base.add(&SymMatrix::identity(d).scale(0.05)).unwrap()
}
