//! Steady-state and structural analysis of the covariance flow: the algebraic
//! Riccati equation for the long-run filter covariance, stabilizability and
//! detectability checks, and the Lyapunov flow followed by the covariance when
//! no return observations are available.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matops::{
    exp_decay_integral, exp_decay_integral_limit, min_eig, psd_sqrt, spectral_norm, SymMatrix,
};
use crate::model::MarketModel;

/// Fixed-step RK4 integrator for `dγ/dt = -αγ - γα + ββᵀ - γ S γ` with
/// preallocated scratch space. `S = (σσᵀ)⁻¹` for the Kalman flow; `S = 0`
/// (None) degenerates to the Lyapunov flow.
pub(crate) struct RiccatiKernel {
    alpha: DMatrix<f64>,
    bbt: DMatrix<f64>,
    s: Option<DMatrix<f64>>,
    // scratch
    k1: DMatrix<f64>,
    k2: DMatrix<f64>,
    k3: DMatrix<f64>,
    k4: DMatrix<f64>,
    tmp: DMatrix<f64>,
    arg: DMatrix<f64>,
    blow_up_scale: f64,
}

impl RiccatiKernel {
    pub fn new(model: &MarketModel) -> Self {
        Self::from_parts(
            model.alpha().as_matrix().clone(),
            model.drift_noise_cov().as_matrix().clone(),
            Some(model.return_cov_inv().as_matrix().clone()),
        )
    }

    pub fn from_parts(alpha: DMatrix<f64>, bbt: DMatrix<f64>, s: Option<DMatrix<f64>>) -> Self {
        let d = alpha.nrows();
        let z = DMatrix::zeros(d, d);
        let blow_up_scale = 1e9 * (1.0 + bbt.norm() + alpha.norm());
        Self {
            alpha,
            bbt,
            s,
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z.clone(),
            arg: z,
            blow_up_scale,
        }
    }

    /// Writes the Riccati right-hand side of `g` into `out`.
    fn rhs(&mut self, g: &DMatrix<f64>, out: &mut DMatrix<f64>) {
        out.copy_from(&self.bbt);
        out.gemm(-1.0, &self.alpha, g, 1.0);
        out.gemm(-1.0, g, &self.alpha, 1.0);
        if let Some(s) = &self.s {
            self.tmp.gemm(1.0, g, s, 0.0);
            out.gemm(-1.0, &self.tmp, g, 1.0);
        }
    }

    fn rk4_step(&mut self, g: &mut DMatrix<f64>, h: f64) {
        fn add_scaled(dst: &mut DMatrix<f64>, src: &DMatrix<f64>, s: f64) {
            dst.iter_mut().zip(src.iter()).for_each(|(a, b)| *a += s * b);
        }

        let mut k1 = std::mem::take(&mut self.k1);
        let mut k2 = std::mem::take(&mut self.k2);
        let mut k3 = std::mem::take(&mut self.k3);
        let mut k4 = std::mem::take(&mut self.k4);
        let mut arg = std::mem::take(&mut self.arg);

        self.rhs(g, &mut k1);
        arg.copy_from(g);
        add_scaled(&mut arg, &k1, h / 2.0);
        self.rhs(&arg, &mut k2);
        arg.copy_from(g);
        add_scaled(&mut arg, &k2, h / 2.0);
        self.rhs(&arg, &mut k3);
        arg.copy_from(g);
        add_scaled(&mut arg, &k3, h);
        self.rhs(&arg, &mut k4);

        add_scaled(g, &k1, h / 6.0);
        add_scaled(g, &k2, h / 3.0);
        add_scaled(g, &k3, h / 3.0);
        add_scaled(g, &k4, h / 6.0);

        // symmetrize to kill round-off drift
        let d = g.nrows();
        for i in 0..d {
            for j in (i + 1)..d {
                let v = 0.5 * (g[(i, j)] + g[(j, i)]);
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }

        self.k1 = k1;
        self.k2 = k2;
        self.k3 = k3;
        self.k4 = k4;
        self.arg = arg;
    }

    /// Advance `g` over a span of length `dt` in `n` equal RK4 steps, calling
    /// `observe(j, g)` after step `j` (j = 1..=n). Detects blow-up and clips
    /// tiny negative eigenvalues produced by round-off.
    pub fn advance(
        &mut self,
        g: &mut DMatrix<f64>,
        dt: f64,
        n: usize,
        mut observe: impl FnMut(usize, &DMatrix<f64>),
    ) -> Result<()> {
        let h = dt / n as f64;
        for j in 1..=n {
            self.rk4_step(g, h);
            if !g.iter().all(|v| v.is_finite()) || g.norm() > self.blow_up_scale {
                return Err(Error::Numeric(format!(
                    "covariance flow blew up at step {j}/{n} (h = {h:.3e}); retry with a step no larger than {:.3e}",
                    h / 4.0
                )));
            }
            observe(j, g);
        }
        // clip round-off negatives at the end of the span
        let sm = SymMatrix::new(g.clone())?;
        let tol = crate::matops::psd_tolerance(&sm);
        let eig = sm.eigen();
        if eig.values[0] < -tol {
            return Err(Error::Numeric(format!(
                "covariance lost positive semidefiniteness (min eigenvalue {:.3e}); retry with a step no larger than {:.3e}",
                eig.values[0],
                h / 4.0
            )));
        }
        if eig.values[0] < 0.0 {
            g.copy_from(eig.map(|l| l.max(0.0)).as_matrix());
        }
        Ok(())
    }
}

/// Number of RK4 substeps needed to cover `span` with steps no larger than
/// `step_cap`.
pub(crate) fn substeps(span: f64, step_cap: f64) -> usize {
    if span <= 0.0 {
        return 1;
    }
    ((span / step_cap).ceil() as usize).max(1)
}

/// Integrator step cap for one inter-date interval: the caller's grid step,
/// but never more than 1/200 of the interval.
pub(crate) fn interval_step_cap(interval_len: f64, grid_step: f64) -> f64 {
    grid_step.min(interval_len / 200.0)
}

/// All eigenvalues in the open left half-plane.
pub fn is_stable(m: &DMatrix<f64>) -> bool {
    m.complex_eigenvalues().iter().all(|l| l.re < 0.0)
}

/// `(A, B)` is stabilizable when some feedback `L` makes `A + BL` stable; this
/// checks the candidate feedback supplied by the caller.
pub fn is_stabilizable(a: &DMatrix<f64>, b: &DMatrix<f64>, feedback: &DMatrix<f64>) -> bool {
    is_stable(&(a + b * feedback))
}

/// `(C, A)` is detectable when some injection `F` makes `FC + A` stable; this
/// checks the candidate injection supplied by the caller.
pub fn is_detectable(c: &DMatrix<f64>, a: &DMatrix<f64>, injection: &DMatrix<f64>) -> bool {
    is_stable(&(injection * c + a))
}

/// Stabilizability of the filter pair `(-α, τ)`, `τ = ((σσᵀ)⁻¹)^{1/2}`, via
/// the explicit witness `L = -I`: `-(α + τ)` must be stable.
pub fn filter_pair_stabilizable(model: &MarketModel) -> Result<bool> {
    let tau = psd_sqrt(model.return_cov_inv())?;
    let d = model.dim();
    let neg_i = -DMatrix::<f64>::identity(d, d);
    Ok(is_stabilizable(&(-model.alpha().as_matrix()), tau.as_matrix(), &neg_i))
}

/// Detectability of the filter pair `(βᵀ, -α)` via the witness `F = -β`:
/// `-(ββᵀ + α)` must be stable.
pub fn filter_pair_detectable(model: &MarketModel) -> Result<bool> {
    Ok(is_detectable(
        &model.beta().transpose(),
        &(-model.alpha().as_matrix()),
        &(-model.beta()),
    ))
}

/// Solution of the algebraic Riccati equation
/// `-αγ - γα + ββᵀ - γ(σσᵀ)⁻¹γ = 0`.
#[derive(Debug, Clone)]
pub struct AreSolution {
    pub gamma_inf: SymMatrix,
    /// Spectral norm of the equation residual at `gamma_inf`.
    pub residual_norm: f64,
    /// Newton polish iterations used after the flow phase.
    pub iterations: usize,
    pub method: String,
}

/// Residual `-αγ - γα + ββᵀ - γ S γ` of a candidate solution.
pub fn are_residual(model: &MarketModel, gamma: &SymMatrix) -> SymMatrix {
    let a = model.alpha().as_matrix();
    let g = gamma.as_matrix();
    let s = model.return_cov_inv().as_matrix();
    let r = model.drift_noise_cov().as_matrix() - a * g - g * a - g * s * g;
    SymMatrix::new(r).expect("square")
}

/// Solve the ARE for the long-run filter covariance.
///
/// The flow itself converges to the unique PSD solution under the model
/// assumptions, so the primary method integrates the Riccati flow until the
/// time derivative is small and then applies a Newton polish (a Lyapunov solve
/// for the correction, assembled as a Kronecker system; d² unknowns). The
/// uniqueness cross-check reruns the flow from the zero matrix and demands
/// agreement within 1e-7.
pub fn solve_are(model: &MarketModel, tol: f64, max_time: f64) -> Result<AreSolution> {
    if !(filter_pair_stabilizable(model)?) {
        return Err(Error::Numeric("filter pair (-α, τ) is not stabilizable".into()));
    }
    if !(filter_pair_detectable(model)?) {
        return Err(Error::Numeric(
            "filter pair (βᵀ, -α) is not detectable (is ββᵀ positive definite?)".into(),
        ));
    }

    let from_sigma0 = flow_to_stationarity(model, model.initial_cov().clone(), tol, max_time)?;
    let from_zero =
        flow_to_stationarity(model, SymMatrix::zeros(model.dim()), tol, max_time)?;
    let gap = spectral_norm(&from_sigma0.0.sub(&from_zero.0)?);
    if gap > 1e-7 {
        return Err(Error::Numeric(format!(
            "ARE solutions from two initial conditions disagree by {gap:.3e} (> 1e-7)"
        )));
    }

    let residual_norm = spectral_norm(&are_residual(model, &from_sigma0.0));
    if residual_norm > tol {
        return Err(Error::Numeric(format!(
            "ARE residual {residual_norm:.3e} exceeds tolerance {tol:.1e}"
        )));
    }
    Ok(AreSolution {
        gamma_inf: from_sigma0.0,
        residual_norm,
        iterations: from_sigma0.1,
        method: "riccati-flow + newton polish".into(),
    })
}

fn flow_to_stationarity(
    model: &MarketModel,
    start: SymMatrix,
    tol: f64,
    max_time: f64,
) -> Result<(SymMatrix, usize)> {
    let mut kernel = RiccatiKernel::new(model);
    let mut g = start.into_inner();
    let flow_threshold = (tol * min_eig(model.alpha())).max(1e-9).min(1e-6);
    let mut elapsed = 0.0;
    loop {
        let scale = model.alpha().as_matrix().norm()
            + model.return_cov_inv().as_matrix().norm() * g.norm();
        let chunk_steps = 64usize;
        let h = (0.25 / scale).min(0.05);
        kernel.advance(&mut g, h * chunk_steps as f64, chunk_steps, |_, _| {})?;
        elapsed += h * chunk_steps as f64;
        let res = spectral_norm(&are_residual(model, &SymMatrix::new(g.clone())?));
        if res <= flow_threshold {
            break;
        }
        if elapsed > max_time {
            return Err(Error::Numeric(format!(
                "Riccati flow did not reach stationarity within horizon {max_time} (residual {res:.3e})"
            )));
        }
    }

    // Newton polish: solve (α + γS) X + X (α + γS)ᵀ = residual for the update.
    let s = model.return_cov_inv().as_matrix();
    let d = model.dim();
    let mut iterations = 0usize;
    for _ in 0..5 {
        let gamma = SymMatrix::new(g.clone())?;
        let res = are_residual(model, &gamma);
        if spectral_norm(&res) <= tol {
            break;
        }
        iterations += 1;
        let a_cl = model.alpha().as_matrix() + &g * s;
        let id = DMatrix::<f64>::identity(d, d);
        let system = id.kronecker(&a_cl) + a_cl.kronecker(&id);
        let rhs = DMatrix::from_column_slice(d * d, 1, res.as_matrix().as_slice());
        let lu = system.lu();
        let x = lu
            .solve(&rhs)
            .ok_or_else(|| Error::Numeric("Newton Lyapunov system is singular".into()))?;
        let correction = DMatrix::from_column_slice(d, d, x.as_slice());
        g += &correction;
        g = (&g + g.transpose()) * 0.5;
    }
    Ok((SymMatrix::new(g)?, iterations))
}

/// The no-observation covariance flow
/// `γ̃_t = e^{-αt} γ₀ e^{-αt} + ∫₀ᵗ e^{-αu} ββᵀ e^{-αu} du` (closed form).
pub fn lyapunov_flow(model: &MarketModel, gamma0: &SymMatrix, t: f64) -> Result<SymMatrix> {
    if gamma0.dim() != model.dim() {
        return Err(Error::DimensionMismatch(format!(
            "gamma0 is {}x{} but the model has {} stocks",
            gamma0.dim(),
            gamma0.dim(),
            model.dim()
        )));
    }
    let e = model.decay(t);
    let transported = SymMatrix::new(e.as_matrix() * gamma0.as_matrix() * e.as_matrix())?;
    transported.add(&exp_decay_integral(model.alpha_eigen(), model.drift_noise_cov(), t))
}

/// Fixed point of the Lyapunov flow: the unique solution of
/// `-αγ̃ - γ̃α + ββᵀ = 0` for positive definite α.
pub fn lyapunov_fixed_point(model: &MarketModel) -> Result<SymMatrix> {
    exp_decay_integral_limit(model.alpha_eigen(), model.drift_noise_cov())
}

/// Scalar closed form for the stationary filter variance:
/// `γ∞ = s²(-a + √(a² + b²/s²))`.
pub fn scalar_stationary_variance(a: f64, b: f64, s: f64) -> f64 {
    s * s * (-a + (a * a + b * b / (s * s)).sqrt())
}
