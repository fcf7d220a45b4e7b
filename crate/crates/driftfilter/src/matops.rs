//! Symmetric-matrix primitives shared by the rest of the library.
//!
//! Everything here funnels through a single symmetric eigendecomposition
//! kernel so that exponentials, square roots and norms of the same matrix
//! never disagree with each other. Matrices are small (d ≤ 10) and dense;
//! storage is row-major via [`nalgebra::DMatrix`].

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A real symmetric d×d matrix. Symmetry is enforced on construction by
/// averaging with the transpose, so `a[(i,j)] == a[(j,i)]` holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    data: DMatrix<f64>,
}

impl SymMatrix {
    /// Build from any square matrix, symmetrizing as `(A + Aᵀ)/2`.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() == 0 || m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "symmetric matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("matrix entries must be finite".into()));
        }
        let sym = (&m + m.transpose()) * 0.5;
        Ok(Self { data: sym })
    }

    /// Build from row slices.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::DimensionMismatch(
                "row lengths must equal the number of rows".into(),
            ));
        }
        let m = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
        Self::new(m)
    }

    pub fn zeros(d: usize) -> Self {
        Self { data: DMatrix::zeros(d, d) }
    }

    pub fn identity(d: usize) -> Self {
        Self { data: DMatrix::identity(d, d) }
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        Self { data: DMatrix::from_diagonal(&DVector::from_row_slice(entries)) }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.data
    }

    /// Scale by a real factor.
    pub fn scale(&self, s: f64) -> Self {
        Self { data: &self.data * s }
    }

    pub fn add(&self, other: &SymMatrix) -> Result<Self> {
        check_same_dim(self, other)?;
        Ok(Self { data: &self.data + &other.data })
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<Self> {
        check_same_dim(self, other)?;
        Ok(Self { data: &self.data - &other.data })
    }

    /// Eigendecomposition; eigenvalues ascending, eigenvector columns orthonormal.
    pub fn eigen(&self) -> SymEigen {
        let se = self.data.clone().symmetric_eigen();
        let d = self.dim();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
        let values: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
        let mut vectors = DMatrix::zeros(d, d);
        for (col, &i) in order.iter().enumerate() {
            vectors.set_column(col, &se.eigenvectors.column(i));
        }
        SymEigen { values, vectors }
    }

    /// Eigenvalues only (ascending).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut vals: Vec<f64> = self.data.symmetric_eigenvalues().iter().copied().collect();
        vals.sort_by(f64::total_cmp);
        vals
    }
}

/// Sorted eigendecomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, column k matching `values[k]`.
    pub vectors: DMatrix<f64>,
}

impl SymEigen {
    /// Assemble `Q f(Λ) Qᵀ` for a scalar function of the eigenvalues.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let d = self.values.len();
        let lam = DMatrix::from_diagonal(&DVector::from_iterator(d, self.values.iter().map(|&v| f(v))));
        let m = &self.vectors * lam * self.vectors.transpose();
        SymMatrix { data: (&m + m.transpose()) * 0.5 }
    }
}

fn check_same_dim(a: &SymMatrix, b: &SymMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!("{} vs {}", a.dim(), b.dim())));
    }
    Ok(())
}

/// Round-off tolerance below which eigenvalues of a nominally PSD matrix are
/// clipped to zero instead of rejected.
pub fn psd_tolerance(a: &SymMatrix) -> f64 {
    1e-10 * (1.0 + spectral_norm(a))
}

/// Matrix exponential `e^{At}` of a symmetric matrix, via eigendecomposition.
pub fn sym_expm(a: &SymMatrix, t: f64) -> SymMatrix {
    a.eigen().map(|lam| (lam * t).exp())
}

/// Spectral norm; for symmetric matrices this is the largest absolute eigenvalue.
pub fn spectral_norm(a: &SymMatrix) -> f64 {
    a.eigenvalues().iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

pub fn min_eig(a: &SymMatrix) -> f64 {
    a.eigenvalues()[0]
}

pub fn max_eig(a: &SymMatrix) -> f64 {
    *a.eigenvalues().last().expect("non-empty")
}

pub fn trace(a: &SymMatrix) -> f64 {
    a.as_matrix().trace()
}

/// Unique PSD square root. Eigenvalues in `[-tol, 0)` are clipped to zero;
/// anything below `-tol` is a genuine violation and is rejected.
pub fn psd_sqrt(a: &SymMatrix) -> Result<SymMatrix> {
    let tol = psd_tolerance(a);
    let eig = a.eigen();
    if eig.values[0] < -tol {
        return Err(Error::NotPsd(format!(
            "minimal eigenvalue {:.3e} below -{:.3e}",
            eig.values[0], tol
        )));
    }
    Ok(eig.map(|lam| lam.max(0.0).sqrt()))
}

/// Loewner order test: `A ≤ B` iff `λ_min(B - A) ≥ -tol`.
pub fn loewner_leq(a: &SymMatrix, b: &SymMatrix, tol: f64) -> Result<bool> {
    let diff = b.sub(a)?;
    Ok(min_eig(&diff) >= -tol)
}

/// `∫₀ʰ e^{-Au} Q e^{-Au} du` for symmetric `A`, `Q`, evaluated in closed form
/// through the eigenbasis of `A`: entry (i,j) of the rotated integrand picks up
/// the weight `(1 - e^{-(λi+λj)h})/(λi+λj)`.
pub fn exp_decay_integral(a_eigen: &SymEigen, q: &SymMatrix, h: f64) -> SymMatrix {
    let d = a_eigen.values.len();
    let qt = a_eigen.vectors.transpose() * q.as_matrix() * &a_eigen.vectors;
    let mut w = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let s = a_eigen.values[i] + a_eigen.values[j];
            w[(i, j)] = if s.abs() > 1e-14 { (-(-s * h).exp_m1()) / s } else { h };
        }
    }
    let m = &a_eigen.vectors * qt.component_mul(&w) * a_eigen.vectors.transpose();
    SymMatrix { data: (&m + m.transpose()) * 0.5 }
}

/// Limit of [`exp_decay_integral`] as `h → ∞`; requires `λi + λj > 0` for all
/// eigenvalue pairs, which holds when `A` is positive definite.
pub fn exp_decay_integral_limit(a_eigen: &SymEigen, q: &SymMatrix) -> Result<SymMatrix> {
    let d = a_eigen.values.len();
    let qt = a_eigen.vectors.transpose() * q.as_matrix() * &a_eigen.vectors;
    let mut w = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let s = a_eigen.values[i] + a_eigen.values[j];
            if s <= 0.0 {
                return Err(Error::NotPd(
                    "decay integral limit requires a positive definite generator".into(),
                ));
            }
            w[(i, j)] = 1.0 / s;
        }
    }
    let m = &a_eigen.vectors * qt.component_mul(&w) * a_eigen.vectors.transpose();
    Ok(SymMatrix { data: (&m + m.transpose()) * 0.5 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn sym(rows: &[Vec<f64>]) -> SymMatrix {
        SymMatrix::from_rows(rows).unwrap()
    }

    /// α from the three-stock benchmark configuration.
    fn benchmark_alpha() -> SymMatrix {
        sym(&[
            vec![2.0, 1.0, -1.0],
            vec![1.0, 2.0, -1.0],
            vec![-1.0, -1.0, 2.0],
        ])
    }

    /// Characteristic-polynomial oracle for 3x3 symmetric matrices: verifies a
    /// claimed spectrum against the polynomial coefficients (trace, sum of
    /// principal 2x2 minors, determinant) computed directly from the entries,
    /// and checks each eigenvalue is a root. Independent of the QL kernel.
    fn assert_spectrum_by_char_poly(a: &SymMatrix, eigs: &[f64], tol: f64) {
        let m = a.as_matrix();
        let tr = m.trace();
        let c2 = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
            + m[(0, 0)] * m[(2, 2)]
            - m[(0, 2)] * m[(2, 0)]
            + m[(1, 1)] * m[(2, 2)]
            - m[(1, 2)] * m[(2, 1)];
        let det = m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
            - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
            + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)]);
        assert!((eigs.iter().sum::<f64>() - tr).abs() <= tol, "trace mismatch");
        let pairwise = eigs[0] * eigs[1] + eigs[0] * eigs[2] + eigs[1] * eigs[2];
        assert!((pairwise - c2).abs() <= tol, "second invariant mismatch");
        assert!((eigs.iter().product::<f64>() - det).abs() <= tol, "determinant mismatch");
        for &l in eigs {
            let p = l * l * l - tr * l * l + c2 * l - det;
            assert!(p.abs() <= tol * (1.0 + l.abs().powi(3)), "{l} is not a root (p = {p:.3e})");
        }
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let z = SymMatrix::zeros(3);
        let e = sym_expm(&z, 1.7);
        assert_abs_diff_eq!(e.as_matrix(), SymMatrix::identity(3).as_matrix(), epsilon = 1e-14);
    }

    #[test]
    fn expm_diagonal_case() {
        let a = SymMatrix::diagonal(&[1.0, 2.0]);
        let e = sym_expm(&a, 2.0_f64.ln());
        assert_abs_diff_eq!(e.as_matrix()[(0, 0)], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.as_matrix()[(1, 1)], 4.0, epsilon = 1e-12);
        assert!(e.as_matrix()[(0, 1)].abs() < 1e-14);
    }

    #[test]
    fn expm_of_negated_pd_matrix_is_contraction() {
        let alpha = benchmark_alpha();
        let eigs = alpha.eigenvalues();
        assert_spectrum_by_char_poly(&alpha, &eigs, 1e-10);
        assert!(eigs.iter().all(|&l| l > 0.0), "eigs {eigs:?}");
        let e = sym_expm(&alpha, -1.0);
        assert!(spectral_norm(&e) < 1.0);
    }

    #[test]
    fn spectral_norm_examples() {
        assert_abs_diff_eq!(spectral_norm(&SymMatrix::diagonal(&[1.0, 2.0, 3.0])), 3.0);
        assert_abs_diff_eq!(spectral_norm(&SymMatrix::zeros(4)), 0.0);
        // expert covariance with one dominant direction
        let gamma = sym(&[
            vec![5.68, 4.52, 7.58],
            vec![4.52, 3.75, 6.18],
            vec![7.58, 6.18, 10.37],
        ]);
        assert_abs_diff_eq!(spectral_norm(&gamma), 19.65, epsilon = 0.02);
    }

    #[test]
    fn psd_sqrt_examples() {
        let i = SymMatrix::identity(3);
        assert_abs_diff_eq!(psd_sqrt(&i).unwrap().as_matrix(), i.as_matrix(), epsilon = 1e-14);

        let a = SymMatrix::diagonal(&[4.0, 9.0]);
        let r = psd_sqrt(&a).unwrap();
        assert_abs_diff_eq!(r.as_matrix()[(0, 0)], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.as_matrix()[(1, 1)], 3.0, epsilon = 1e-12);

        let gamma = sym(&[
            vec![0.80, 0.32, 0.16],
            vec![0.32, 0.72, 0.24],
            vec![0.16, 0.24, 0.64],
        ]);
        let b = psd_sqrt(&gamma).unwrap();
        let sq = SymMatrix::new(b.as_matrix() * b.as_matrix()).unwrap();
        assert!(spectral_norm(&sq.sub(&gamma).unwrap()) <= 1e-10);
    }

    #[test]
    fn psd_sqrt_rejects_indefinite() {
        let a = SymMatrix::diagonal(&[1.0, -0.5]);
        assert!(matches!(psd_sqrt(&a), Err(Error::NotPsd(_))));
    }

    #[test]
    fn loewner_examples() {
        let z = SymMatrix::zeros(3);
        let i = SymMatrix::identity(3);
        assert!(loewner_leq(&z, &i, 1e-12).unwrap());
        assert!(!loewner_leq(&i, &z, 1e-12).unwrap());
        assert!(loewner_leq(&z, &SymMatrix::zeros(2), 1e-12).is_err());
    }

    #[test]
    fn eig_extremes_and_trace() {
        assert_abs_diff_eq!(trace(&SymMatrix::identity(3)), 3.0);
        assert_abs_diff_eq!(min_eig(&SymMatrix::diagonal(&[-1.0, 5.0])), -1.0);
        let gamma49 = sym(&[
            vec![155.14, 13.25, -36.59],
            vec![13.25, 1.40, -3.13],
            vec![-36.59, -3.13, 8.83],
        ]);
        assert_abs_diff_eq!(trace(&gamma49), 155.14 + 1.40 + 8.83, epsilon = 1e-12);
    }

    #[test]
    fn decay_integral_matches_quadrature_oracle() {
        // midpoint-rule oracle with 10^4 subintervals
        let alpha = benchmark_alpha();
        let q = sym(&[
            vec![0.34, 0.27, 0.15],
            vec![0.27, 0.33, 0.13],
            vec![0.15, 0.13, 0.09],
        ]);
        let h = 0.8;
        let n = 10_000;
        let mut acc = DMatrix::zeros(3, 3);
        for k in 0..n {
            let u = (k as f64 + 0.5) * h / n as f64;
            let e = sym_expm(&alpha, -u);
            acc += e.as_matrix() * q.as_matrix() * e.as_matrix() * (h / n as f64);
        }
        let got = exp_decay_integral(&alpha.eigen(), &q, h);
        let diff = SymMatrix::new(got.as_matrix() - acc).unwrap();
        assert!(spectral_norm(&diff) < 1e-7, "diff {}", spectral_norm(&diff));
    }

    fn random_psd(d: usize) -> impl Strategy<Value = SymMatrix> {
        proptest::collection::vec(-1.5f64..1.5, d * d).prop_map(move |v| {
            let g = DMatrix::from_vec(d, d, v);
            SymMatrix::new(&g * g.transpose()).unwrap()
        })
    }

    fn random_sym(d: usize) -> impl Strategy<Value = SymMatrix> {
        proptest::collection::vec(-2.0f64..2.0, d * d)
            .prop_map(move |v| SymMatrix::new(DMatrix::from_vec(d, d, v)).unwrap())
    }

    proptest! {
        #[test]
        fn expm_is_additive_in_time(a in random_sym(3), s in -1.0f64..1.0, t in -1.0f64..1.0) {
            let lhs = SymMatrix::new(sym_expm(&a, s).as_matrix() * sym_expm(&a, t).as_matrix()).unwrap();
            let rhs = sym_expm(&a, s + t);
            let scale = 1.0 + spectral_norm(&rhs);
            prop_assert!(spectral_norm(&lhs.sub(&rhs).unwrap()) <= 1e-10 * scale);
        }

        #[test]
        fn sqrt_of_square_recovers(b in random_psd(3)) {
            let sq = SymMatrix::new(b.as_matrix() * b.as_matrix()).unwrap();
            let r = psd_sqrt(&sq).unwrap();
            let scale = 1.0 + spectral_norm(&b);
            prop_assert!(spectral_norm(&r.sub(&b).unwrap()) <= 1e-9 * scale);
        }

        #[test]
        fn spectral_norm_submultiplicative(a in random_psd(3), b in random_psd(3)) {
            let prod = a.as_matrix() * b.as_matrix();
            // general spectral norm of the (non-symmetric) product via sqrt(λmax(PᵀP))
            let ptp = SymMatrix::new(prod.transpose() * &prod).unwrap();
            let norm_prod = max_eig(&ptp).max(0.0).sqrt();
            prop_assert!(norm_prod <= spectral_norm(&a) * spectral_norm(&b) * (1.0 + 1e-10) + 1e-12);
        }

        #[test]
        fn loewner_is_reflexive_and_transitive(a in random_psd(3), b in random_psd(3), c in random_psd(3)) {
            prop_assert!(loewner_leq(&a, &a, 1e-12).unwrap());
            let ab = a.add(&b).unwrap();
            let abc = ab.add(&c).unwrap();
            prop_assert!(loewner_leq(&a, &ab, 1e-10).unwrap());
            prop_assert!(loewner_leq(&ab, &abc, 1e-10).unwrap());
            prop_assert!(loewner_leq(&a, &abc, 1e-10).unwrap());
        }
    }
}
