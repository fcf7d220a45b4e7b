//! Market model: an unobserved Ornstein-Uhlenbeck drift `dμ = α(δ-μ)dt + β dB`
//! driving stock returns `dR = μ dt + σ dW`, observed together with discrete
//! unbiased expert opinions `Z_k = μ_{t_k} + Γ_k^{1/2} ε_k`.
//!
//! The module owns the static parameters, the closed-form moments of the
//! drift, and path simulation. Paths are reproducible: the generator is a
//! seeded ChaCha12 stream, and Monte Carlo batches derive per-path generators
//! from a master seed via `ChaCha12Rng::seed_from_u64(master)` plus
//! `set_stream(path_index)`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matops::{
    self, exp_decay_integral, min_eig, psd_sqrt, psd_tolerance, SymEigen, SymMatrix,
};

/// Deterministic continuous interest rate, constant or piecewise linear.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Rate {
    Constant(f64),
    /// Linear interpolation through `(times[i], values[i])`; clamped outside.
    PiecewiseLinear { times: Vec<f64>, values: Vec<f64> },
}

impl Rate {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            Rate::Constant(r) => *r,
            Rate::PiecewiseLinear { times, values } => {
                if times.is_empty() {
                    return 0.0;
                }
                if t <= times[0] {
                    return values[0];
                }
                for w in times.windows(2).zip(values.windows(2)) {
                    let (ts, vs) = w;
                    if t <= ts[1] {
                        let frac = (t - ts[0]) / (ts[1] - ts[0]);
                        return vs[0] + frac * (vs[1] - vs[0]);
                    }
                }
                *values.last().unwrap()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if let Rate::PiecewiseLinear { times, values } = self {
            if times.len() != values.len() || times.is_empty() {
                return Err(Error::Config(
                    "rate.times and rate.values must be non-empty and equally long".into(),
                ));
            }
            if times.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Config("rate.times must be strictly increasing".into()));
            }
        }
        Ok(())
    }
}

/// Static model parameters, validated on construction.
#[derive(Debug, Clone)]
pub struct MarketModel {
    alpha: SymMatrix,
    beta: DMatrix<f64>,
    sigma: DMatrix<f64>,
    delta: DVector<f64>,
    m0: DVector<f64>,
    sigma0: SymMatrix,
    rate: Rate,
    horizon: f64,
    // derived, cached
    bbt: SymMatrix,
    ssq: SymMatrix,
    ssq_inv: SymMatrix,
    alpha_eigen: SymEigen,
}

impl MarketModel {
    /// Validates: α symmetric positive definite, σσᵀ positive definite,
    /// Σ₀ symmetric PSD, horizon positive, shapes consistent. ββᵀ is allowed
    /// to be merely PSD so that degenerate noiseless-drift configurations
    /// (β = 0) remain expressible; the infinite-horizon results additionally
    /// need ββᵀ positive definite, which [`crate::riccati`] checks where used.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        alpha: SymMatrix,
        beta: DMatrix<f64>,
        sigma: DMatrix<f64>,
        delta: DVector<f64>,
        m0: DVector<f64>,
        sigma0: SymMatrix,
        rate: Rate,
        horizon: f64,
    ) -> Result<Self> {
        let d = alpha.dim();
        if beta.nrows() != d {
            return Err(Error::DimensionMismatch(format!(
                "beta must have {d} rows, got {}",
                beta.nrows()
            )));
        }
        if sigma.nrows() != d {
            return Err(Error::DimensionMismatch(format!(
                "sigma must have {d} rows, got {}",
                sigma.nrows()
            )));
        }
        if delta.len() != d || m0.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "delta and m0 must have length {d}"
            )));
        }
        if sigma0.dim() != d {
            return Err(Error::DimensionMismatch(format!(
                "sigma0 must be {d}x{d}, got {}x{}",
                sigma0.dim(),
                sigma0.dim()
            )));
        }
        if !(horizon > 0.0) {
            return Err(Error::Config("horizon must be positive".into()));
        }
        rate.validate()?;
        if min_eig(&alpha) <= 0.0 {
            return Err(Error::NotPd("alpha (mean reversion)".into()));
        }
        let bbt = SymMatrix::new(&beta * beta.transpose())?;
        let ssq = SymMatrix::new(&sigma * sigma.transpose())?;
        if min_eig(&ssq) <= 0.0 {
            return Err(Error::NotPd("sigma sigma^T (return covariance)".into()));
        }
        if min_eig(&sigma0) < -psd_tolerance(&sigma0) {
            return Err(Error::NotPsd("sigma0 (initial drift covariance)".into()));
        }
        let ssq_inv = {
            let chol = nalgebra::Cholesky::new(ssq.as_matrix().clone())
                .ok_or_else(|| Error::NotPd("sigma sigma^T (return covariance)".into()))?;
            SymMatrix::new(chol.inverse())?
        };
        let alpha_eigen = alpha.eigen();
        Ok(Self {
            alpha,
            beta,
            sigma,
            delta,
            m0,
            sigma0,
            rate,
            horizon,
            bbt,
            ssq,
            ssq_inv,
            alpha_eigen,
        })
    }

    /// Number of stocks.
    pub fn dim(&self) -> usize {
        self.alpha.dim()
    }

    /// Number of return Brownian dimensions (columns of σ).
    pub fn noise_dim(&self) -> usize {
        self.sigma.ncols()
    }

    pub fn alpha(&self) -> &SymMatrix {
        &self.alpha
    }

    pub fn beta(&self) -> &DMatrix<f64> {
        &self.beta
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn delta(&self) -> &DVector<f64> {
        &self.delta
    }

    pub fn initial_mean(&self) -> &DVector<f64> {
        &self.m0
    }

    pub fn initial_cov(&self) -> &SymMatrix {
        &self.sigma0
    }

    pub fn rate(&self) -> &Rate {
        &self.rate
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// ββᵀ (drift noise covariance).
    pub fn drift_noise_cov(&self) -> &SymMatrix {
        &self.bbt
    }

    /// σσᵀ (return noise covariance).
    pub fn return_cov(&self) -> &SymMatrix {
        &self.ssq
    }

    /// (σσᵀ)⁻¹.
    pub fn return_cov_inv(&self) -> &SymMatrix {
        &self.ssq_inv
    }

    /// Cached eigendecomposition of α.
    pub fn alpha_eigen(&self) -> &SymEigen {
        &self.alpha_eigen
    }

    /// `e^{-α t}`.
    pub fn decay(&self, t: f64) -> SymMatrix {
        self.alpha_eigen.map(|lam| (-lam * t).exp())
    }

    /// Unconditional mean of the drift: `m_t = δ + e^{-αt}(m₀ - δ)`.
    pub fn drift_mean(&self, t: f64) -> DVector<f64> {
        let e = self.decay(t);
        &self.delta + e.as_matrix() * (&self.m0 - &self.delta)
    }

    /// Unconditional covariance of the drift:
    /// `Σ_t = e^{-αt} Σ₀ e^{-αt} + ∫₀ᵗ e^{-αu} ββᵀ e^{-αu} du`, evaluated in
    /// closed form through the eigenbasis of α.
    pub fn drift_cov(&self, t: f64) -> SymMatrix {
        let e = self.decay(t);
        let transported =
            SymMatrix::new(e.as_matrix() * self.sigma0.as_matrix() * e.as_matrix()).expect("square");
        let pumped = exp_decay_integral(&self.alpha_eigen, &self.bbt, t);
        transported.add(&pumped).expect("same dim")
    }
}

/// Information dates and expert reliabilities. Dates are strictly increasing
/// with `t₀ = 0` (when non-empty); every Γ_k is positive definite.
#[derive(Debug, Clone)]
pub struct ExpertSchedule {
    dates: Vec<f64>,
    gammas: Vec<SymMatrix>,
}

impl ExpertSchedule {
    pub fn empty() -> Self {
        Self { dates: Vec::new(), gammas: Vec::new() }
    }

    pub fn explicit(dates: Vec<f64>, gammas: Vec<SymMatrix>) -> Result<Self> {
        if dates.len() != gammas.len() {
            return Err(Error::Config(format!(
                "schedule has {} dates but {} reliability matrices",
                dates.len(),
                gammas.len()
            )));
        }
        if let Some(&first) = dates.first() {
            if first != 0.0 {
                return Err(Error::Config("first information date must be 0".into()));
            }
        }
        if dates.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("information dates must be strictly increasing".into()));
        }
        for (k, g) in gammas.iter().enumerate() {
            if min_eig(g) <= 0.0 {
                return Err(Error::NotPd(format!("expert covariance Gamma_{k}")));
            }
        }
        Ok(Self { dates, gammas })
    }

    /// `count` equidistant dates `t_k = k·spacing`, constant reliability.
    pub fn equidistant(count: usize, spacing: f64, gamma: SymMatrix) -> Result<Self> {
        if count == 0 {
            return Ok(Self::empty());
        }
        if !(spacing > 0.0) {
            return Err(Error::Config("spacing must be positive".into()));
        }
        let dates = (0..count).map(|k| k as f64 * spacing).collect();
        Self::explicit(dates, vec![gamma; count])
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn dates(&self) -> &[f64] {
        &self.dates
    }

    pub fn gamma(&self, k: usize) -> &SymMatrix {
        &self.gammas[k]
    }

    /// Largest spectral norm among the Γ_k (the uniform reliability bound).
    pub fn reliability_bound(&self) -> f64 {
        self.gammas.iter().map(matops::spectral_norm).fold(0.0, f64::max)
    }

    pub fn validate_for(&self, model: &MarketModel) -> Result<()> {
        if let Some(&last) = self.dates.last() {
            if last >= model.horizon() {
                return Err(Error::Config(format!(
                    "information date {last} is not before the horizon {}",
                    model.horizon()
                )));
            }
        }
        for g in &self.gammas {
            if g.dim() != model.dim() {
                return Err(Error::DimensionMismatch(format!(
                    "expert covariance is {}x{} but the model has {} stocks",
                    g.dim(),
                    g.dim(),
                    model.dim()
                )));
            }
        }
        Ok(())
    }
}

/// Time grid on `[0, horizon]` that contains every information date exactly.
/// Between anchors (0, the dates, horizon) the step is uniform and no larger
/// than the requested maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
    date_indices: Vec<usize>,
}

impl TimeGrid {
    pub fn build(horizon: f64, dates: &[f64], max_step: f64) -> Result<Self> {
        if !(max_step > 0.0) {
            return Err(Error::Config("grid step must be positive".into()));
        }
        if dates.iter().any(|&t| t < 0.0 || t >= horizon) {
            return Err(Error::Config("information dates must lie in [0, horizon)".into()));
        }
        let mut anchors = vec![0.0];
        anchors.extend_from_slice(dates);
        anchors.push(horizon);
        anchors.dedup();

        let mut times = vec![0.0];
        let mut date_indices = Vec::with_capacity(dates.len());
        if dates.first() == Some(&0.0) {
            date_indices.push(0);
        }
        for w in anchors.windows(2) {
            let (a, b) = (w[0], w[1]);
            let n = ((b - a) / max_step).ceil().max(1.0) as usize;
            for j in 1..=n {
                let t = if j == n { b } else { a + (b - a) * j as f64 / n as f64 };
                times.push(t);
            }
            if dates.contains(&b) {
                date_indices.push(times.len() - 1);
            }
        }
        Ok(Self { times, date_indices })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.times[i]
    }

    /// Grid indices of the information dates, in date order.
    pub fn date_indices(&self) -> &[usize] {
        &self.date_indices
    }
}

/// An expert opinion drawn along a simulated path.
#[derive(Debug, Clone)]
pub struct ExpertSample {
    pub k: usize,
    pub grid_index: usize,
    pub time: f64,
    pub value: DVector<f64>,
}

/// One realization of drift, return increments and expert opinions.
#[derive(Debug, Clone)]
pub struct SimulationPath {
    pub grid: TimeGrid,
    pub mu: Vec<DVector<f64>>,
    /// `ΔR_i` over `[t_i, t_{i+1}]`; length `grid.len() - 1`.
    pub return_increments: Vec<DVector<f64>>,
    pub experts: Vec<ExpertSample>,
    pub seed: u64,
}

/// Simulate drift, returns and expert opinions on a grid refined so that every
/// information date is a grid point.
///
/// The drift uses the exact Gaussian transition over each step (conditional
/// mean `δ + e^{-αh}(μ-δ)`, covariance `∫₀ʰ e^{-αu} ββᵀ e^{-αu} du`), so the
/// simulated marginals carry no discretization bias. Returns use the Euler
/// increment `μ_t h + σ √h ξ`. Identical seeds produce identical paths.
pub fn simulate_path(
    model: &MarketModel,
    schedule: &ExpertSchedule,
    grid_step: f64,
    seed: u64,
) -> Result<SimulationPath> {
    schedule.validate_for(model)?;
    let grid = TimeGrid::build(model.horizon(), schedule.dates(), grid_step)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    simulate_on_grid(model, schedule, &grid, &mut rng, seed)
}

pub(crate) fn simulate_on_grid(
    model: &MarketModel,
    schedule: &ExpertSchedule,
    grid: &TimeGrid,
    rng: &mut ChaCha12Rng,
    seed: u64,
) -> Result<SimulationPath> {
    let d = model.dim();
    let m = model.noise_dim();
    let n = grid.len();

    // transition operators per distinct step size
    let mut cache: Vec<(f64, SymMatrix, SymMatrix)> = Vec::new();
    let mut op_for = |h: f64| -> Result<(SymMatrix, SymMatrix)> {
        if let Some((_, e, q)) = cache.iter().find(|(hc, _, _)| (hc - h).abs() < 1e-15) {
            return Ok((e.clone(), q.clone()));
        }
        let e = model.decay(h);
        let q = exp_decay_integral(model.alpha_eigen(), model.drift_noise_cov(), h);
        let q_sqrt = psd_sqrt(&q)?;
        cache.push((h, e.clone(), q_sqrt.clone()));
        Ok((e, q_sqrt))
    };

    let gamma_sqrts: Vec<SymMatrix> =
        (0..schedule.len()).map(|k| psd_sqrt(schedule.gamma(k))).collect::<Result<_>>()?;

    let sigma0_sqrt = psd_sqrt(model.initial_cov())?;
    let normal = |rng: &mut ChaCha12Rng, len: usize| {
        DVector::from_iterator(len, (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)))
    };

    let mut mu = Vec::with_capacity(n);
    let mut increments = Vec::with_capacity(n - 1);
    let mut experts = Vec::with_capacity(schedule.len());

    let z0 = normal(rng, d);
    mu.push(model.initial_mean() + sigma0_sqrt.as_matrix() * z0);

    let mut next_date = 0usize;
    for i in 0..n {
        if next_date < schedule.len() && grid.date_indices()[next_date] == i {
            let eps = normal(rng, d);
            let value = &mu[i] + gamma_sqrts[next_date].as_matrix() * eps;
            experts.push(ExpertSample { k: next_date, grid_index: i, time: grid.time(i), value });
            next_date += 1;
        }
        if i + 1 < n {
            let h = grid.time(i + 1) - grid.time(i);
            let (e, q_sqrt) = op_for(h)?;
            let zd = normal(rng, d);
            let zw = normal(rng, m);
            let next_mu =
                model.delta() + e.as_matrix() * (&mu[i] - model.delta()) + q_sqrt.as_matrix() * zd;
            let dr = &mu[i] * h + model.sigma() * zw * h.sqrt();
            increments.push(dr);
            mu.push(next_mu);
        }
    }

    Ok(SimulationPath { grid: grid.clone(), mu, return_increments: increments, experts, seed })
}

/// A relative expert view `Q = P μ + ξ` rewritten as an absolute view
/// `Z = μ + φ` with `φ = Pᵀ(PPᵀ)⁻¹ ξ`.
#[derive(Debug, Clone)]
pub struct AbsoluteView {
    /// The pick matrix of the original relative view.
    pub pick: DMatrix<f64>,
    /// Covariance of φ; positive semidefinite, rank ≤ rows of `pick`.
    ///
    /// For `l < d` this is singular and therefore not usable as an expert
    /// reliability Γ_k directly: the filters in this library consume absolute
    /// views with `l = d`, `P = I` only.
    pub covariance: SymMatrix,
}

/// Convert a relative view with pick matrix `P` (full row rank, l ≤ d) and
/// noise covariance `xi_cov` into the equivalent absolute-view form.
pub fn relative_to_absolute(pick: &DMatrix<f64>, xi_cov: &SymMatrix) -> Result<AbsoluteView> {
    let l = pick.nrows();
    let d = pick.ncols();
    if l > d {
        return Err(Error::DimensionMismatch(format!(
            "pick matrix has more rows ({l}) than columns ({d})"
        )));
    }
    if xi_cov.dim() != l {
        return Err(Error::DimensionMismatch(format!(
            "view covariance must be {l}x{l}, got {}x{}",
            xi_cov.dim(),
            xi_cov.dim()
        )));
    }
    let ppt = SymMatrix::new(pick * pick.transpose())?;
    if min_eig(&ppt) <= 1e-12 * (1.0 + matops::spectral_norm(&ppt)) {
        return Err(Error::NotPd("pick matrix is rank deficient (PPᵀ singular)".into()));
    }
    let chol = nalgebra::Cholesky::new(ppt.into_inner())
        .ok_or_else(|| Error::NotPd("pick matrix is rank deficient (PPᵀ singular)".into()))?;
    let ppt_inv = chol.inverse();
    let lift = pick.transpose() * &ppt_inv;
    let covariance = SymMatrix::new(&lift * xi_cov.as_matrix() * lift.transpose())?;
    Ok(AbsoluteView { pick: pick.clone(), covariance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testdata;
    use approx::assert_abs_diff_eq;

    #[test]
    fn drift_mean_fixed_point_and_t0() {
        let model = testdata::benchmark_model();
        // m0 = delta, so the mean is constant
        let m = model.drift_mean(0.5);
        for i in 0..3 {
            assert_abs_diff_eq!(m[i], model.delta()[i], epsilon = 1e-14);
        }
        let m0 = model.drift_mean(0.0);
        for i in 0..3 {
            assert_abs_diff_eq!(m0[i], model.initial_mean()[i], epsilon = 1e-14);
        }
    }

    #[test]
    fn drift_mean_decays_to_delta() {
        let model = testdata::benchmark_model_with_m0(&[0.5, -0.2, 0.9]);
        let m = model.drift_mean(40.0);
        for i in 0..3 {
            assert_abs_diff_eq!(m[i], model.delta()[i], epsilon = 1e-10);
        }
    }

    #[test]
    fn drift_cov_at_zero_is_sigma0() {
        let model = testdata::benchmark_model();
        let c = model.drift_cov(0.0);
        assert!(matops::spectral_norm(&c.sub(model.initial_cov()).unwrap()) < 1e-13);
    }

    #[test]
    fn drift_cov_scalar_stationary() {
        // scalar oracle: with Sigma0 = b^2/(2a) the variance is constant
        let (a, b) = (1.3, 0.7);
        let model = testdata::scalar_model(a, b, 0.4, b * b / (2.0 * a), 0.0, 1.0);
        for &t in &[0.1, 0.5, 2.0, 9.0] {
            let c = model.drift_cov(t);
            assert_abs_diff_eq!(c.as_matrix()[(0, 0)], b * b / (2.0 * a), epsilon = 1e-12);
        }
    }

    #[test]
    fn drift_cov_matches_quadrature_oracle() {
        // 10^4-subinterval midpoint oracle on the benchmark parameters at t=1
        let model = testdata::benchmark_model();
        let t = 1.0;
        let n = 10_000usize;
        let e = model.decay(t);
        let mut acc = e.as_matrix() * model.initial_cov().as_matrix() * e.as_matrix();
        for k in 0..n {
            let u = (k as f64 + 0.5) * t / n as f64;
            let eu = model.decay(u);
            acc += eu.as_matrix() * model.drift_noise_cov().as_matrix() * eu.as_matrix()
                * (t / n as f64);
        }
        let got = model.drift_cov(t);
        let diff = SymMatrix::new(got.as_matrix() - acc).unwrap();
        assert!(matops::spectral_norm(&diff) < 1e-7);
        assert!(matops::loewner_leq(&SymMatrix::zeros(3), &got, 1e-10).unwrap());
    }

    #[test]
    fn grid_contains_every_date_exactly() {
        let grid = TimeGrid::build(1.0, &[0.0, 0.1, 0.25], 0.03).unwrap();
        let idx = grid.date_indices();
        assert_eq!(idx.len(), 3);
        assert_eq!(grid.time(idx[0]), 0.0);
        assert_eq!(grid.time(idx[1]), 0.1);
        assert_eq!(grid.time(idx[2]), 0.25);
        assert_eq!(*grid.times().last().unwrap(), 1.0);
        for w in grid.times().windows(2) {
            assert!(w[1] - w[0] <= 0.03 + 1e-12);
        }
    }

    #[test]
    fn degenerate_noiseless_drift_is_constant() {
        let model = testdata::degenerate_model();
        let schedule = ExpertSchedule::equidistant(3, 0.25, SymMatrix::diagonal(&[0.5])).unwrap();
        let path = simulate_path(&model, &schedule, 0.05, 7).unwrap();
        for mu in &path.mu {
            assert_abs_diff_eq!(mu[0], model.delta()[0], epsilon = 1e-14);
        }
        // experts still noisy around delta
        assert_eq!(path.experts.len(), 3);
    }

    #[test]
    fn simulation_is_deterministic_per_seed() {
        let model = testdata::benchmark_model();
        let schedule = testdata::benchmark_schedule(4);
        let a = simulate_path(&model, &schedule, 0.01, 99).unwrap();
        let b = simulate_path(&model, &schedule, 0.01, 99).unwrap();
        assert_eq!(a.mu.len(), b.mu.len());
        for (x, y) in a.mu.iter().zip(&b.mu) {
            assert_eq!(x, y);
        }
        for (x, y) in a.return_increments.iter().zip(&b.return_increments) {
            assert_eq!(x, y);
        }
        let c = simulate_path(&model, &schedule, 0.01, 100).unwrap();
        assert_ne!(a.mu[1], c.mu[1]);
    }

    #[test]
    fn relative_view_identity_passthrough() {
        let p = DMatrix::<f64>::identity(3, 3);
        let cov = SymMatrix::diagonal(&[0.4, 0.5, 0.6]);
        let v = relative_to_absolute(&p, &cov).unwrap();
        assert!(matops::spectral_norm(&v.covariance.sub(&cov).unwrap()) < 1e-14);
    }

    #[test]
    fn relative_view_spread_and_single_stock() {
        // spread view on mu_1 - mu_2
        let p = DMatrix::from_row_slice(1, 3, &[1.0, -1.0, 0.0]);
        let v = relative_to_absolute(&p, &SymMatrix::diagonal(&[0.09])).unwrap();
        assert_eq!(v.covariance.dim(), 3);
        // single-stock view: phi covariance = diag(g2, 0, 0)
        let p1 = DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]);
        let g2 = 0.25;
        let v1 = relative_to_absolute(&p1, &SymMatrix::diagonal(&[g2])).unwrap();
        let want = SymMatrix::diagonal(&[g2, 0.0, 0.0]);
        assert!(matops::spectral_norm(&v1.covariance.sub(&want).unwrap()) < 1e-12);
    }

    #[test]
    fn relative_view_rejects_rank_deficient_pick() {
        let p = DMatrix::from_row_slice(2, 3, &[1.0, -1.0, 0.0, 2.0, -2.0, 0.0]);
        assert!(relative_to_absolute(&p, &SymMatrix::identity(2)).is_err());
    }

    #[test]
    fn schedule_validation() {
        assert!(ExpertSchedule::explicit(vec![0.1], vec![SymMatrix::identity(2)]).is_err());
        assert!(ExpertSchedule::explicit(
            vec![0.0, 0.5],
            vec![SymMatrix::identity(2), SymMatrix::diagonal(&[1.0, -1.0])]
        )
        .is_err());
        let s = ExpertSchedule::equidistant(3, 0.5, SymMatrix::identity(2)).unwrap();
        assert_eq!(s.dates(), &[0.0, 0.5, 1.0]);
    }
}
