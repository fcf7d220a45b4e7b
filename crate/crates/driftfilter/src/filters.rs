//! Conditional mean and conditional covariance of the drift for the four
//! information regimes:
//!
//! * `R` — stock returns only: the classical Kalman filter; the covariance
//!   follows the matrix Riccati equation `dγ = (-αγ - γα + ββᵀ - γ(σσᵀ)⁻¹γ)dt`.
//! * `E` — expert opinions only: closed-form propagation between information
//!   dates and a Bayesian update `γ_{t_k} = Λ_k γ_{t_k-}`,
//!   `Λ_k = Γ_k(γ_{t_k-}+Γ_k)⁻¹`, at each date.
//! * `C` — both: Riccati between dates, the same update at dates.
//! * `F` — full observation of the drift: `μ̂ = μ`, `γ ≡ 0`.
//!
//! Covariance paths are deterministic. Values are stored right-continuously;
//! the left limit `γ_{t_k-}` at every information date is kept separately.
//! The update at `t₀ = 0` is applied (with `γ_{0-} = Σ₀`, `μ̂_{0-} = m₀`), so
//! the reported value at zero is the post-update one.

use std::collections::BTreeMap;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matops::{exp_decay_integral, min_eig, SymMatrix};
use crate::model::{ExpertSchedule, MarketModel, SimulationPath, TimeGrid};
use crate::riccati::{interval_step_cap, substeps, RiccatiKernel};

/// Information regime of an investor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// Returns only.
    #[serde(rename = "R")]
    Returns,
    /// Expert opinions only.
    #[serde(rename = "E")]
    Experts,
    /// Returns and expert opinions combined.
    #[serde(rename = "C")]
    Combined,
    /// Full observation of the drift.
    #[serde(rename = "F")]
    Full,
}

impl Regime {
    pub const ALL: [Regime; 4] = [Regime::Returns, Regime::Experts, Regime::Combined, Regime::Full];

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Returns => "R",
            Regime::Experts => "E",
            Regime::Combined => "C",
            Regime::Full => "F",
        }
    }

    /// Whether the regime performs Bayesian updates at information dates.
    pub fn uses_experts(self) -> bool {
        matches!(self, Regime::Experts | Regime::Combined)
    }

    /// Whether the covariance follows the Riccati equation between dates.
    pub fn observes_returns(self) -> bool {
        matches!(self, Regime::Returns | Regime::Combined)
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "R" | "r" | "returns" => Ok(Regime::Returns),
            "E" | "e" | "experts" => Ok(Regime::Experts),
            "C" | "c" | "combined" => Ok(Regime::Combined),
            "F" | "f" | "full" => Ok(Regime::Full),
            other => Err(Error::Config(format!("unknown regime '{other}' (use R, E, C or F)"))),
        }
    }
}

/// Result of a Bayesian measurement update.
#[derive(Debug, Clone)]
pub struct BayesUpdate {
    /// Post-update covariance `Λγ₋`.
    pub gamma_plus: SymMatrix,
    /// The prior weight `Λ = Γ(γ₋+Γ)⁻¹`; the filter update is
    /// `μ̂₊ = Λμ̂₋ + (I-Λ)Z`.
    pub weight: DMatrix<f64>,
}

/// Fuse a prior covariance `γ₋` (PSD) with an unbiased observation of
/// covariance `Γ` (PD). Solved through a Cholesky factorization of `γ₋+Γ`,
/// never an explicit general inverse.
pub fn bayes_update(gamma_minus: &SymMatrix, gamma_expert: &SymMatrix) -> Result<BayesUpdate> {
    if gamma_minus.dim() != gamma_expert.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {}",
            gamma_minus.dim(),
            gamma_expert.dim()
        )));
    }
    if min_eig(gamma_expert) <= 0.0 {
        return Err(Error::NotPd("expert covariance".into()));
    }
    let sum = gamma_minus.add(gamma_expert)?;
    let chol = nalgebra::Cholesky::new(sum.into_inner())
        .ok_or_else(|| Error::NotPd("prior + expert covariance".into()))?;
    // X = (γ₋+Γ)⁻¹ γ₋ ; γ₊ = Γ X ; Λ = ((γ₋+Γ)⁻¹ Γ)ᵀ
    let x = chol.solve(gamma_minus.as_matrix());
    let gamma_plus = SymMatrix::new(gamma_expert.as_matrix() * &x)?;
    let weight = chol.solve(gamma_expert.as_matrix()).transpose();
    Ok(BayesUpdate { gamma_plus, weight })
}

/// Piecewise-smooth trajectory of a conditional covariance matrix, with left
/// limits at the information dates.
#[derive(Debug, Clone)]
pub struct CovariancePath {
    pub regime: Regime,
    pub grid: TimeGrid,
    /// Right-continuous values, one per grid point.
    pub values: Vec<SymMatrix>,
    /// Pre-update value `γ_{t_k-}`, keyed by the grid index of `t_k`.
    pub left_limits: BTreeMap<usize, SymMatrix>,
}

impl CovariancePath {
    /// Value at a grid index.
    pub fn at(&self, i: usize) -> &SymMatrix {
        &self.values[i]
    }
}

/// Covariance path under returns only (Riccati flow, no jumps).
pub fn gamma_r(model: &MarketModel, grid: &TimeGrid) -> Result<CovariancePath> {
    riccati_path(model, &ExpertSchedule::empty(), grid, Regime::Returns)
}

/// Covariance path under expert opinions only: exact closed-form propagation
/// between dates, Bayesian updates at dates (including `t₀ = 0`).
pub fn gamma_e(
    model: &MarketModel,
    schedule: &ExpertSchedule,
    grid: &TimeGrid,
) -> Result<CovariancePath> {
    schedule.validate_for(model)?;
    check_grid_dates(schedule, grid)?;
    let n = grid.len();
    let mut values = Vec::with_capacity(n);
    let mut left_limits = BTreeMap::new();

    let mut anchor_gamma = model.initial_cov().clone();
    let mut anchor_time = 0.0;
    let mut next_date = 0usize;
    for i in 0..n {
        let t = grid.time(i);
        let mut g = propagate_lyapunov(model, &anchor_gamma, t - anchor_time);
        if next_date < schedule.len() && grid.date_indices()[next_date] == i {
            left_limits.insert(i, g.clone());
            g = bayes_update(&g, schedule.gamma(next_date))?.gamma_plus;
            anchor_gamma = g.clone();
            anchor_time = t;
            next_date += 1;
        }
        values.push(g);
    }
    Ok(CovariancePath { regime: Regime::Experts, grid: grid.clone(), values, left_limits })
}

/// Covariance path under returns and expert opinions: Riccati flow between
/// dates, Bayesian updates at dates (including `t₀ = 0`).
pub fn gamma_c(
    model: &MarketModel,
    schedule: &ExpertSchedule,
    grid: &TimeGrid,
) -> Result<CovariancePath> {
    riccati_path(model, schedule, grid, Regime::Combined)
}

/// Covariance path under full information: identically zero.
pub fn gamma_f(model: &MarketModel, grid: &TimeGrid) -> CovariancePath {
    CovariancePath {
        regime: Regime::Full,
        grid: grid.clone(),
        values: vec![SymMatrix::zeros(model.dim()); grid.len()],
        left_limits: BTreeMap::new(),
    }
}

/// Dispatch on the regime.
pub fn gamma_path(
    model: &MarketModel,
    schedule: &ExpertSchedule,
    regime: Regime,
    grid: &TimeGrid,
) -> Result<CovariancePath> {
    match regime {
        Regime::Returns => gamma_r(model, grid),
        Regime::Experts => gamma_e(model, schedule, grid),
        Regime::Combined => gamma_c(model, schedule, grid),
        Regime::Full => Ok(gamma_f(model, grid)),
    }
}

/// A grid used with a schedule must contain every information date as a node.
fn check_grid_dates(schedule: &ExpertSchedule, grid: &TimeGrid) -> Result<()> {
    if grid.date_indices().len() != schedule.len() {
        return Err(Error::Config(format!(
            "grid marks {} information dates but the schedule has {}; build the grid from the schedule",
            grid.date_indices().len(),
            schedule.len()
        )));
    }
    for (k, &i) in grid.date_indices().iter().enumerate() {
        if (grid.time(i) - schedule.dates()[k]).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "grid date node {} is at t={} but the schedule expects t={}",
                k,
                grid.time(i),
                schedule.dates()[k]
            )));
        }
    }
    Ok(())
}

/// `e^{-αh} γ e^{-αh} + ∫₀ʰ e^{-αu} ββᵀ e^{-αu} du` (exact).
fn propagate_lyapunov(model: &MarketModel, gamma: &SymMatrix, h: f64) -> SymMatrix {
    if h == 0.0 {
        return gamma.clone();
    }
    let e = model.decay(h);
    let transported = SymMatrix::new(e.as_matrix() * gamma.as_matrix() * e.as_matrix())
        .expect("square");
    transported
        .add(&exp_decay_integral(model.alpha_eigen(), model.drift_noise_cov(), h))
        .expect("same dim")
}

fn riccati_path(
    model: &MarketModel,
    schedule: &ExpertSchedule,
    grid: &TimeGrid,
    regime: Regime,
) -> Result<CovariancePath> {
    schedule.validate_for(model)?;
    if regime.uses_experts() {
        check_grid_dates(schedule, grid)?;
    }
    let n = grid.len();
    let mut kernel = RiccatiKernel::new(model);
    let mut values: Vec<SymMatrix> = Vec::with_capacity(n);
    let mut left_limits = BTreeMap::new();

    // grid steps never exceed the caller's requested step; use the largest
    // grid gap inside each inter-date interval as its refinement base
    let date_idx = if regime.uses_experts() { grid.date_indices() } else { &[] };
    let times = grid.times();
    let horizon_idx = n - 1;
    let mut interval_ends: Vec<usize> = date_idx.iter().copied().filter(|&i| i > 0).collect();
    interval_ends.push(horizon_idx);

    let mut g = model.initial_cov().as_matrix().clone();
    let mut next_date = 0usize;
    let mut end_cursor = 0usize;
    for i in 0..n {
        if i > 0 {
            let gap = times[i] - times[i - 1];
            let interval_end = interval_ends[end_cursor];
            let interval_start_t = if end_cursor == 0 {
                0.0
            } else {
                times[interval_ends[end_cursor - 1]]
            };
            let interval_len = times[interval_end] - interval_start_t;
            let cap = interval_step_cap(interval_len, gap);
            kernel.advance(&mut g, gap, substeps(gap, cap), |_, _| {})?;
            if i == interval_end && end_cursor + 1 < interval_ends.len() {
                end_cursor += 1;
            }
        }
        let mut sym = SymMatrix::new(g.clone())?;
        if next_date < date_idx.len() && date_idx[next_date] == i {
            left_limits.insert(i, sym.clone());
            sym = bayes_update(&sym, schedule.gamma(next_date))?.gamma_plus;
            g.copy_from(sym.as_matrix());
            next_date += 1;
        }
        values.push(sym);
    }
    Ok(CovariancePath { regime, grid: grid.clone(), values, left_limits })
}

/// A node emitted by [`fold_gamma`].
pub(crate) struct GammaNode<'a> {
    pub t: f64,
    pub gamma: &'a DMatrix<f64>,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum NodeKind {
    /// First node of an inter-date interval (post-update value).
    IntervalStart,
    Interior,
    /// Last node of an inter-date interval (left limit at the next date, or
    /// the horizon value).
    IntervalEnd,
}

/// Stream the covariance trajectory interval by interval without storing it.
///
/// Each inter-date interval is emitted as `IntervalStart`, an even number of
/// further nodes at uniform spacing, ending with `IntervalEnd`, so a composite
/// Simpson rule can be applied per interval (the trajectory is smooth there).
pub(crate) fn fold_gamma(
    model: &MarketModel,
    schedule: &ExpertSchedule,
    regime: Regime,
    grid_step: f64,
    mut visit: impl FnMut(GammaNode<'_>),
) -> Result<()> {
    schedule.validate_for(model)?;
    if !(grid_step > 0.0) {
        return Err(Error::Config("grid step must be positive".into()));
    }
    let horizon = model.horizon();
    let d = model.dim();

    let anchors: Vec<f64> = if regime.uses_experts() {
        let mut a = schedule.dates().to_vec();
        if a.first() != Some(&0.0) {
            a.insert(0, 0.0);
        }
        a.push(horizon);
        a
    } else {
        vec![0.0, horizon]
    };

    if regime == Regime::Full {
        let zero = DMatrix::zeros(d, d);
        visit(GammaNode { t: 0.0, gamma: &zero, kind: NodeKind::IntervalStart });
        visit(GammaNode { t: 0.5 * horizon, gamma: &zero, kind: NodeKind::Interior });
        visit(GammaNode { t: horizon, gamma: &zero, kind: NodeKind::IntervalEnd });
        return Ok(());
    }

    let mut kernel = if regime.observes_returns() { Some(RiccatiKernel::new(model)) } else { None };
    let mut g = model.initial_cov().as_matrix().clone();
    let mut date_cursor = 0usize;

    for w in anchors.windows(2) {
        let (a, b) = (w[0], w[1]);
        if regime.uses_experts()
            && date_cursor < schedule.len()
            && schedule.dates()[date_cursor] == a
        {
            let upd = bayes_update(&SymMatrix::new(g.clone())?, schedule.gamma(date_cursor))?;
            g.copy_from(upd.gamma_plus.as_matrix());
            date_cursor += 1;
        }
        visit(GammaNode { t: a, gamma: &g, kind: NodeKind::IntervalStart });

        let len = b - a;
        let cap = interval_step_cap(len, grid_step);
        let mut n = substeps(len, cap);
        if n % 2 == 1 {
            n += 1;
        }
        match &mut kernel {
            Some(kernel) => {
                let h = len / n as f64;
                kernel.advance(&mut g, len, n, |j, gj| {
                    if j < n {
                        visit(GammaNode { t: a + h * j as f64, gamma: gj, kind: NodeKind::Interior });
                    }
                })?;
                visit(GammaNode { t: b, gamma: &g, kind: NodeKind::IntervalEnd });
            }
            None => {
                // exact one-step transition, compounded across the interval
                let h = len / n as f64;
                let e_h = model.decay(h);
                let d_h = exp_decay_integral(model.alpha_eigen(), model.drift_noise_cov(), h);
                for j in 1..=n {
                    let moved = e_h.as_matrix() * &g * e_h.as_matrix() + d_h.as_matrix();
                    g = (&moved + moved.transpose()) * 0.5;
                    let kind = if j < n { NodeKind::Interior } else { NodeKind::IntervalEnd };
                    visit(GammaNode { t: a + h * j as f64, gamma: &g, kind });
                }
            }
        }
    }
    Ok(())
}

/// Right-continuous covariance value at a single time `u` (post-update if `u`
/// is an information date), without materializing a path.
pub fn gamma_at(
    model: &MarketModel,
    schedule: &ExpertSchedule,
    regime: Regime,
    u: f64,
    grid_step: f64,
) -> Result<SymMatrix> {
    if !(0.0..=model.horizon()).contains(&u) {
        return Err(Error::Config(format!("evaluation time {u} outside [0, horizon]")));
    }
    if regime == Regime::Full {
        return Ok(SymMatrix::zeros(model.dim()));
    }
    schedule.validate_for(model)?;

    let dates: Vec<f64> = if regime.uses_experts() {
        schedule.dates().iter().copied().filter(|&t| t <= u).collect()
    } else {
        Vec::new()
    };

    let mut kernel = if regime.observes_returns() { Some(RiccatiKernel::new(model)) } else { None };
    let mut g = model.initial_cov().clone();
    let mut t_cur = 0.0;
    let advance_to = |g: &mut SymMatrix,
                          kernel: &mut Option<RiccatiKernel>,
                          from: f64,
                          to: f64,
                          interval_len: f64|
     -> Result<()> {
        if to <= from {
            return Ok(());
        }
        match kernel {
            Some(kernel) => {
                let cap = interval_step_cap(interval_len.max(to - from), grid_step);
                let mut raw = g.as_matrix().clone();
                kernel.advance(&mut raw, to - from, substeps(to - from, cap), |_, _| {})?;
                *g = SymMatrix::new(raw)?;
            }
            None => {
                *g = propagate_lyapunov(model, g, to - from);
            }
        }
        Ok(())
    };

    for (k, &tk) in dates.iter().enumerate() {
        let interval_len = if k + 1 < dates.len() { dates[k + 1] - tk } else { u - tk };
        advance_to(&mut g, &mut kernel, t_cur, tk, interval_len.max(tk - t_cur))?;
        g = bayes_update(&g, schedule.gamma(k))?.gamma_plus;
        t_cur = tk;
    }
    advance_to(&mut g, &mut kernel, t_cur, u, u - t_cur)?;
    Ok(g)
}

/// Realization of a drift filter along a simulated path.
#[derive(Debug, Clone)]
pub struct FilterPath {
    pub regime: Regime,
    pub grid: TimeGrid,
    pub mu_hat: Vec<DVector<f64>>,
    /// `(grid index of t_k, Λ_k)` for each information date, in date order.
    pub update_weights: Vec<(usize, DMatrix<f64>)>,
    pub seed: u64,
}

/// Run the filter of the given regime along a simulated path.
///
/// Regimes R and C integrate the filter equation
/// `dμ̂ = α(δ-μ̂)dt + γ(σσᵀ)⁻¹(dR - μ̂ dt)` by Euler-Maruyama on the path's
/// grid, driven by the path's return increments; regime E propagates in
/// closed form; regime F copies the drift.
pub fn filter_path(
    model: &MarketModel,
    schedule: &ExpertSchedule,
    path: &SimulationPath,
    regime: Regime,
) -> Result<FilterPath> {
    filter_path_with_cov(model, schedule, path, regime, None)
}

/// [`filter_path`] with a precomputed covariance path, so Monte Carlo batches
/// do not re-integrate the (deterministic) covariance once per path. The
/// covariance path must have been computed for the same regime and grid.
pub fn filter_path_with_cov(
    model: &MarketModel,
    schedule: &ExpertSchedule,
    path: &SimulationPath,
    regime: Regime,
    cov: Option<&CovariancePath>,
) -> Result<FilterPath> {
    if let Some(c) = cov {
        if c.regime != regime {
            return Err(Error::Config(format!(
                "covariance path is for regime {} but the filter runs {}",
                c.regime, regime
            )));
        }
        if c.grid.times() != path.grid.times() {
            return Err(Error::Config(
                "covariance path grid does not match the simulation grid".into(),
            ));
        }
    }
    let n = path.grid.len();
    if path.mu.len() != n || path.return_increments.len() + 1 != n {
        return Err(Error::DimensionMismatch("simulation path is inconsistent".into()));
    }
    if regime.uses_experts() && path.experts.len() != schedule.len() {
        return Err(Error::DimensionMismatch(format!(
            "path carries {} expert samples but the schedule has {} dates",
            path.experts.len(),
            schedule.len()
        )));
    }

    let mut mu_hat: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut update_weights = Vec::new();

    match regime {
        Regime::Full => {
            mu_hat = path.mu.clone();
        }
        Regime::Experts => {
            let computed;
            let cov = match cov {
                Some(c) => c,
                None => {
                    computed = gamma_e(model, schedule, &path.grid)?;
                    &computed
                }
            };
            let mut est = model.initial_mean().clone();
            let mut next_date = 0usize;
            for i in 0..n {
                if i > 0 {
                    let h = path.grid.time(i) - path.grid.time(i - 1);
                    let e = model.decay(h);
                    est = model.delta() + e.as_matrix() * (&est - model.delta());
                }
                if next_date < schedule.len() && path.grid.date_indices()[next_date] == i {
                    let left = &cov.left_limits[&i];
                    let upd = bayes_update(left, schedule.gamma(next_date))?;
                    let z = &path.experts[next_date].value;
                    est = &upd.weight * &est
                        + (DMatrix::identity(model.dim(), model.dim()) - &upd.weight) * z;
                    update_weights.push((i, upd.weight));
                    next_date += 1;
                }
                mu_hat.push(est.clone());
            }
        }
        Regime::Returns | Regime::Combined => {
            let computed;
            let cov = match cov {
                Some(c) => c,
                None => {
                    let effective_schedule = if regime.uses_experts() {
                        schedule.clone()
                    } else {
                        ExpertSchedule::empty()
                    };
                    computed = gamma_path(model, &effective_schedule, regime, &path.grid)?;
                    &computed
                }
            };
            let s = model.return_cov_inv().as_matrix();
            let mut est = model.initial_mean().clone();
            let mut next_date = 0usize;
            for i in 0..n {
                if i > 0 {
                    let h = path.grid.time(i) - path.grid.time(i - 1);
                    let innovation = &path.return_increments[i - 1] - &est * h;
                    est = &est
                        + model.alpha().as_matrix() * (model.delta() - &est) * h
                        + cov.at(i - 1).as_matrix() * s * innovation;
                }
                if regime.uses_experts()
                    && next_date < schedule.len()
                    && path.grid.date_indices()[next_date] == i
                {
                    let left = &cov.left_limits[&i];
                    let upd = bayes_update(left, schedule.gamma(next_date))?;
                    let z = &path.experts[next_date].value;
                    est = &upd.weight * &est
                        + (DMatrix::identity(model.dim(), model.dim()) - &upd.weight) * z;
                    update_weights.push((i, upd.weight));
                    next_date += 1;
                }
                mu_hat.push(est.clone());
            }
        }
    }

    Ok(FilterPath { regime, grid: path.grid.clone(), mu_hat, update_weights, seed: path.seed })
}
