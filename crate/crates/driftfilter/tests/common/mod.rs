//! Shared helpers for the integration suites: the bundled benchmark
//! configuration, random valid model generation, and statistical utilities.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use driftfilter::cli::resolve_config;
use driftfilter::matops::SymMatrix;
use driftfilter::model::{ExpertSchedule, MarketModel, Rate};

/// The bundled three-stock benchmark (zero rate, unit capital).
pub fn benchmark() -> (MarketModel, ExpertSchedule) {
    let config = resolve_config("example62").expect("bundled config");
    let model = config.build_model().expect("valid model");
    let schedule = config.build_schedule(&model).expect("valid schedule");
    (model, schedule)
}

pub fn bundled_model(name: &str) -> (MarketModel, ExpertSchedule) {
    let config = resolve_config(name).expect("bundled config");
    let model = config.build_model().expect("valid model");
    let schedule = config.build_schedule(&model).expect("valid schedule");
    (model, schedule)
}

/// Random orthogonal matrix via QR of a Gaussian matrix.
fn random_orthogonal(d: usize, rng: &mut ChaCha12Rng) -> DMatrix<f64> {
    loop {
        let g = DMatrix::from_fn(d, d, |_, _| {
            rng.sample::<f64, _>(rand_distr::StandardNormal)
        });
        let qr = g.qr();
        let q = qr.q();
        if q.determinant().abs() > 0.5 {
            return q;
        }
    }
}

/// Random symmetric matrix with eigenvalues drawn from `range`.
pub fn random_spd(d: usize, range: (f64, f64), rng: &mut ChaCha12Rng) -> SymMatrix {
    let q = random_orthogonal(d, rng);
    let eigs = DVector::from_fn(d, |_, _| rng.random_range(range.0..range.1));
    SymMatrix::new(&q * DMatrix::from_diagonal(&eigs) * q.transpose()).unwrap()
}

/// Random full-rank d×d matrix with singular values in `range`.
pub fn random_full_rank(d: usize, range: (f64, f64), rng: &mut ChaCha12Rng) -> DMatrix<f64> {
    let u = random_orthogonal(d, rng);
    let v = random_orthogonal(d, rng);
    let svals = DVector::from_fn(d, |_, _| rng.random_range(range.0..range.1));
    u * DMatrix::from_diagonal(&svals) * v.transpose()
}

/// A randomized valid market configuration with d ∈ {1,...,4}.
pub fn random_model(seed: u64) -> (MarketModel, ExpertSchedule) {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let d = rng.random_range(1..=4usize);
    let alpha = random_spd(d, (0.2, 3.0), &mut rng);
    let beta = random_full_rank(d, (0.2, 1.2), &mut rng);
    let sigma = random_full_rank(d, (0.1, 0.6), &mut rng);
    let sigma0 = if rng.random_bool(0.15) {
        SymMatrix::zeros(d)
    } else {
        random_spd(d, (0.02, 0.5), &mut rng)
    };
    let delta = DVector::from_fn(d, |_, _| rng.random_range(-0.05..0.15));
    let m0 = if rng.random_bool(0.5) {
        delta.clone()
    } else {
        DVector::from_fn(d, |_, _| rng.random_range(-0.1..0.2))
    };
    let rate =
        if rng.random_bool(0.5) { Rate::Constant(0.0) } else { Rate::Constant(rng.random_range(0.0..0.04)) };
    let horizon = rng.random_range(0.5..1.5);
    let model =
        MarketModel::new(alpha, beta, sigma, delta, m0, sigma0, rate, horizon).expect("valid");

    let n = rng.random_range(0..=6usize);
    let schedule = if n == 0 {
        ExpertSchedule::empty()
    } else {
        let gammas: Vec<SymMatrix> =
            (0..n).map(|_| random_spd(d, (0.1, 3.0), &mut rng)).collect();
        let mut dates = vec![0.0];
        while dates.len() < n {
            let last = *dates.last().unwrap();
            let next = last + rng.random_range(0.05..0.3) * horizon;
            if next >= horizon * 0.98 {
                break;
            }
            dates.push(next);
        }
        let gammas = gammas[..dates.len()].to_vec();
        ExpertSchedule::explicit(dates, gammas).expect("valid schedule")
    };
    (model, schedule)
}

/// Mean and entrywise standard error of a sample of matrices.
pub struct MatrixSample {
    pub mean: DMatrix<f64>,
    pub std_err: DMatrix<f64>,
}

pub fn matrix_sample(samples: &[DMatrix<f64>]) -> MatrixSample {
    let n = samples.len();
    let (r, c) = (samples[0].nrows(), samples[0].ncols());
    let mut mean = DMatrix::zeros(r, c);
    for s in samples {
        mean += s;
    }
    mean /= n as f64;
    let mut var = DMatrix::zeros(r, c);
    for s in samples {
        let d = s - &mean;
        var += d.component_mul(&d);
    }
    var /= (n - 1) as f64;
    let std_err = var.map(|v| (v / n as f64).sqrt());
    MatrixSample { mean, std_err }
}
