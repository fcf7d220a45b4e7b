//! Log-utility portfolio optimization under partial information.
//!
//! The optimal fraction vector is `π*_t = (σσᵀ)⁻¹(μ̂^H_t - r_t 1)` — the full
//! information strategy with the drift replaced by its filter (certainty
//! equivalence). The optimal expected log terminal wealth splits into
//!
//! ```text
//! V^H(x₀) = log x₀
//!         + ∫₀ᵀ [ r_t - (r_t 1)ᵀ S m_t + ½ (r_t 1)ᵀ S (r_t 1) ] dt
//!         + ½ ∫₀ᵀ tr(S (Σ_t + m_t m_tᵀ)) dt
//!         - ½ ∫₀ᵀ tr(S γ^H_t) dt,            S = (σσᵀ)⁻¹,
//! ```
//!
//! where only the last piece depends on the information regime. The
//! efficiency `ρ^H = exp(-½ ∫ tr(S γ^H_t) dt)` is the initial capital ratio
//! at which the fully informed investor matches the H-investor's utility.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::filters::{filter_path, fold_gamma, NodeKind, Regime};
use crate::model::{ExpertSchedule, MarketModel, SimulationPath, TimeGrid};

/// Optimal log-utility fractions `π* = (σσᵀ)⁻¹(μ̂ - r·1)`.
pub fn optimal_strategy(model: &MarketModel, mu_hat: &DVector<f64>, rate: f64) -> DVector<f64> {
    let ones = DVector::from_element(model.dim(), 1.0);
    model.return_cov_inv().as_matrix() * (mu_hat - ones * rate)
}

/// The three additive integral pieces of the value function, plus `log x₀`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ValueBreakdown {
    pub log_x0: f64,
    /// `∫ r - (r1)ᵀS m + ½(r1)ᵀS(r1) dt` (regime independent).
    pub rate_part: f64,
    /// `½ ∫ tr(S(Σ_t + m_t m_tᵀ)) dt` (regime independent).
    pub moment_part: f64,
    /// `½ ∫ tr(S γ^H_t) dt` (the only regime-dependent piece; subtracted).
    pub covariance_part: f64,
}

impl ValueBreakdown {
    pub fn value(&self) -> f64 {
        self.log_x0 + self.rate_part + self.moment_part - self.covariance_part
    }
}

/// Composite Simpson accumulator over the nodes of one smooth interval.
struct SimpsonAccumulator {
    t_start: f64,
    values: Vec<f64>,
    total: f64,
}

impl SimpsonAccumulator {
    fn new() -> Self {
        Self { t_start: 0.0, values: Vec::new(), total: 0.0 }
    }

    fn start(&mut self, t: f64, f: f64) {
        self.t_start = t;
        self.values.clear();
        self.values.push(f);
    }

    fn push(&mut self, f: f64) {
        self.values.push(f);
    }

    fn finish(&mut self, t_end: f64, f: f64) {
        self.values.push(f);
        let n = self.values.len() - 1;
        debug_assert!(n >= 2 && n % 2 == 0, "Simpson needs an even panel count");
        let h = (t_end - self.t_start) / n as f64;
        let mut sum = self.values[0] + self.values[n];
        for (j, v) in self.values.iter().enumerate().take(n).skip(1) {
            sum += if j % 2 == 1 { 4.0 * v } else { 2.0 * v };
        }
        self.total += h / 3.0 * sum;
    }
}

/// `½ ∫₀ᵀ tr(S γ^H_t) dt`, integrated by composite Simpson on each inter-date
/// interval (the trajectory is smooth there; panels close at `t_k-` and
/// reopen at `t_k`).
pub fn covariance_value_integral(
    model: &MarketModel,
    schedule: &ExpertSchedule,
    regime: Regime,
    grid_step: f64,
) -> Result<f64> {
    let s = model.return_cov_inv().as_matrix().clone();
    let mut simpson = SimpsonAccumulator::new();
    fold_gamma(model, schedule, regime, grid_step, |node| {
        let f = (&s * node.gamma).trace();
        match node.kind {
            NodeKind::IntervalStart => simpson.start(node.t, f),
            NodeKind::Interior => simpson.push(f),
            NodeKind::IntervalEnd => simpson.finish(node.t, f),
        }
    })?;
    Ok(0.5 * simpson.total)
}

/// The two regime-independent pieces `(rate_part, moment_part)`.
pub fn common_value_parts(model: &MarketModel, grid_step: f64) -> (f64, f64) {
    let s = model.return_cov_inv().as_matrix();
    let ones = DVector::from_element(model.dim(), 1.0);
    let ones_s = (s * &ones).transpose();
    let horizon = model.horizon();
    let mut n = ((horizon / grid_step).ceil() as usize).max(200);
    if n % 2 == 1 {
        n += 1;
    }
    let h = horizon / n as f64;
    let mut rate_sum = 0.0;
    let mut moment_sum = 0.0;
    for j in 0..=n {
        let t = h * j as f64;
        let w = if j == 0 || j == n {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let r = model.rate().at(t);
        let m = model.drift_mean(t);
        let sigma_t = model.drift_cov(t);
        let rate_f = r - r * (&ones_s * &m)[0] + 0.5 * r * r * (&ones_s * &ones)[0];
        let moment_f = 0.5 * ((s * sigma_t.as_matrix()).trace() + (&m.transpose() * s * &m)[0]);
        rate_sum += w * rate_f;
        moment_sum += w * moment_f;
    }
    (h / 3.0 * rate_sum, h / 3.0 * moment_sum)
}

/// Value function with its additive pieces.
pub fn value_breakdown(
    model: &MarketModel,
    schedule: &ExpertSchedule,
    regime: Regime,
    x0: f64,
    grid_step: f64,
) -> Result<ValueBreakdown> {
    if !(x0 > 0.0) {
        return Err(Error::Config("initial capital must be positive".into()));
    }
    let (rate_part, moment_part) = common_value_parts(model, grid_step);
    let covariance_part = covariance_value_integral(model, schedule, regime, grid_step)?;
    Ok(ValueBreakdown { log_x0: x0.ln(), rate_part, moment_part, covariance_part })
}

/// Optimal expected log terminal wealth `V^H(x₀)`.
pub fn value_function(
    model: &MarketModel,
    schedule: &ExpertSchedule,
    regime: Regime,
    x0: f64,
    grid_step: f64,
) -> Result<f64> {
    Ok(value_breakdown(model, schedule, regime, x0, grid_step)?.value())
}

/// Efficiency `ρ^H = exp(-½∫ tr(S γ^H))`, cross-checked against the
/// equivalent-capital form `exp(V^H(1) - V^F(1))`; the two agree to 1e-9
/// relative by construction, and disagreement signals a quadrature fault.
pub fn efficiency(
    model: &MarketModel,
    schedule: &ExpertSchedule,
    regime: Regime,
    grid_step: f64,
) -> Result<f64> {
    let breakdown = value_breakdown(model, schedule, regime, 1.0, grid_step)?;
    let full = value_breakdown(model, schedule, Regime::Full, 1.0, grid_step)?;
    let direct = (-breakdown.covariance_part).exp();
    let via_capital = (breakdown.value() - full.value()).exp();
    if (direct - via_capital).abs() > 1e-9 * direct.abs().max(1e-300) {
        return Err(Error::Numeric(format!(
            "efficiency cross-check failed: {direct:.12e} vs {via_capital:.12e}"
        )));
    }
    Ok(direct)
}

/// Value and efficiency of one regime.
#[derive(Debug, Clone, Serialize)]
pub struct ValueEntry {
    pub regime: Regime,
    pub value: f64,
    pub efficiency: f64,
    #[serde(flatten)]
    pub breakdown: ValueBreakdown,
}

/// Values and efficiencies for all four regimes of one configuration.
#[derive(Debug, Clone, Serialize)]
pub struct ValueReport {
    pub x0: f64,
    /// Number of expert opinions in the schedule.
    pub expert_count: usize,
    pub entries: Vec<ValueEntry>,
}

impl ValueReport {
    pub fn entry(&self, regime: Regime) -> &ValueEntry {
        self.entries.iter().find(|e| e.regime == regime).expect("all regimes present")
    }
}

/// Evaluate all four regimes.
pub fn value_report(
    model: &MarketModel,
    schedule: &ExpertSchedule,
    x0: f64,
    grid_step: f64,
) -> Result<ValueReport> {
    let mut entries = Vec::with_capacity(4);
    let full = value_breakdown(model, schedule, Regime::Full, x0, grid_step)?;
    for regime in Regime::ALL {
        let breakdown = value_breakdown(model, schedule, regime, x0, grid_step)?;
        let direct = (-breakdown.covariance_part).exp();
        let via_capital = (breakdown.value() - full.value()).exp();
        if (direct - via_capital).abs() > 1e-9 * direct.abs().max(1e-300) {
            return Err(Error::Numeric(format!(
                "efficiency cross-check failed for {regime}: {direct:.12e} vs {via_capital:.12e}"
            )));
        }
        entries.push(ValueEntry { regime, value: breakdown.value(), efficiency: direct, breakdown });
    }
    Ok(ValueReport { x0, expert_count: schedule.len(), entries })
}

/// Wealth trajectory of the optimal strategy along one simulated path.
#[derive(Debug, Clone)]
pub struct WealthPath {
    pub regime: Regime,
    pub grid: TimeGrid,
    pub wealth: Vec<f64>,
    pub strategies: Vec<DVector<f64>>,
    pub log_terminal: f64,
}

/// Run the optimal strategy of the regime on a simulated path.
///
/// Log-wealth is accumulated with the exact log-SDE increment on the path's
/// grid and Brownian increments: `Δlog X = πᵀ(ΔR - r·1 h) + r h - ½‖σᵀπ‖² h`,
/// which keeps the wealth strictly positive by construction.
pub fn simulate_wealth(
    model: &MarketModel,
    schedule: &ExpertSchedule,
    path: &SimulationPath,
    regime: Regime,
    x0: f64,
) -> Result<WealthPath> {
    simulate_wealth_with_cov(model, schedule, path, regime, x0, None)
}

/// [`simulate_wealth`] with a precomputed covariance path for the filter.
pub fn simulate_wealth_with_cov(
    model: &MarketModel,
    schedule: &ExpertSchedule,
    path: &SimulationPath,
    regime: Regime,
    x0: f64,
    cov: Option<&crate::filters::CovariancePath>,
) -> Result<WealthPath> {
    if !(x0 > 0.0) {
        return Err(Error::Config("initial capital must be positive".into()));
    }
    let filter = crate::filters::filter_path_with_cov(model, schedule, path, regime, cov)?;
    let n = path.grid.len();
    let mut wealth = Vec::with_capacity(n);
    let mut strategies = Vec::with_capacity(n);
    let ones = DVector::from_element(model.dim(), 1.0);
    let mut log_x = x0.ln();
    wealth.push(x0);
    for i in 0..n - 1 {
        let t = path.grid.time(i);
        let h = path.grid.time(i + 1) - t;
        let r = model.rate().at(t);
        let pi = optimal_strategy(model, &filter.mu_hat[i], r);
        let sig_pi = model.sigma().transpose() * &pi;
        let d_log = pi.dot(&(&path.return_increments[i] - &ones * (r * h))) + r * h
            - 0.5 * sig_pi.norm_squared() * h;
        log_x += d_log;
        wealth.push(log_x.exp());
        strategies.push(pi);
    }
    // strategy at the terminal node, for completeness of the record
    let r_t = model.rate().at(path.grid.time(n - 1));
    strategies.push(optimal_strategy(model, &filter.mu_hat[n - 1], r_t));
    Ok(WealthPath { regime, grid: path.grid.clone(), wealth, strategies, log_terminal: log_x })
}

/// Monte Carlo estimate of `E[log X_T]` under the optimal strategy.
///
/// Paths are independent: path `i` uses the master-seeded generator on
/// stream `i`, so results are reproducible and independent of thread order.
pub fn expected_log_wealth(
    model: &MarketModel,
    schedule: &ExpertSchedule,
    regime: Regime,
    x0: f64,
    n_paths: usize,
    master_seed: u64,
    grid_step: f64,
) -> Result<(f64, f64)> {
    if n_paths == 0 {
        return Err(Error::Config("need at least one path".into()));
    }
    schedule.validate_for(model)?;
    let grid = TimeGrid::build(model.horizon(), schedule.dates(), grid_step)?;
    // the covariance path is deterministic; compute it once and share it
    let effective = if regime.uses_experts() { schedule.clone() } else { ExpertSchedule::empty() };
    let cov = crate::filters::gamma_path(model, &effective, regime, &grid)?;
    let logs: Vec<f64> = (0..n_paths)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
            rng.set_stream(i as u64);
            let path = crate::model::simulate_on_grid(model, schedule, &grid, &mut rng, master_seed)?;
            Ok(simulate_wealth_with_cov(model, schedule, &path, regime, x0, Some(&cov))?
                .log_terminal)
        })
        .collect::<Result<_>>()?;
    let mean = logs.iter().sum::<f64>() / n_paths as f64;
    let var = logs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n_paths - 1).max(1) as f64;
    Ok((mean, (var / n_paths as f64).sqrt()))
}
