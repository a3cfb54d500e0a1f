//! Covariance / correlation estimation and deterministic symmetric
//! eigendecomposition.

use std::cmp::Ordering;
use std::fmt;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{PlaError, Result};
use crate::ingest::{is_constant, mean_and_variance, DataMatrix};
use crate::jacobi::jacobi_eigen;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DispersionKind {
    Covariance,
    Correlation,
}

impl fmt::Display for DispersionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DispersionKind::Covariance => f.write_str("covariance"),
            DispersionKind::Correlation => f.write_str("correlation"),
        }
    }
}

/// Numerical tolerances. The defaults are tuned for `f64`; for `f32` each is
/// raised to a small multiple of machine epsilon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Max relative asymmetry `|a_ij - a_ji| / max(1, max|a|)`.
    pub symmetry: f64,
    /// Negative eigenvalues down to `-psd_clamp * ||m||_F` are clamped to zero.
    pub psd_clamp: f64,
    /// Adjacent eigenvalues closer than `degenerate * |tr(m)|` are flagged.
    pub degenerate: f64,
    /// Allowed deviation of a correlation diagonal from 1.
    pub unit_diagonal: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            symmetry: 1e-12,
            psd_clamp: 1e-10,
            degenerate: 1e-8,
            unit_diagonal: 1e-12,
        }
    }
}

/// A symmetric M x M covariance or correlation estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionMatrix<T> {
    entries: Array2<T>,
    kind: DispersionKind,
    source_n: Option<usize>,
}

impl<T: Scalar> DispersionMatrix<T> {
    pub fn new(entries: Array2<T>, kind: DispersionKind, source_n: Option<usize>) -> Result<Self> {
        Self::with_tolerances(entries, kind, source_n, &Tolerances::default())
    }

    pub fn with_tolerances(
        entries: Array2<T>,
        kind: DispersionKind,
        source_n: Option<usize>,
        tol: &Tolerances,
    ) -> Result<Self> {
        let (r, c) = entries.dim();
        if r != c || r == 0 {
            return Err(PlaError::Dimension(format!(
                "dispersion matrix must be square and non-empty, got {r}x{c}"
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(PlaError::Numerical("non-finite matrix entry".into()));
        }
        check_symmetric(&entries, tol.symmetry)?;
        if kind == DispersionKind::Correlation {
            let diag_tol = T::tolerance(tol.unit_diagonal, 64.0);
            let bound = T::one() + diag_tol;
            for i in 0..r {
                if (entries[[i, i]] - T::one()).abs() > diag_tol {
                    return Err(PlaError::Numerical(format!(
                        "correlation diagonal entry {} is {}, expected 1",
                        i + 1,
                        entries[[i, i]]
                    )));
                }
            }
            if entries.iter().any(|v| v.abs() > bound) {
                return Err(PlaError::Numerical(
                    "correlation entry outside [-1, 1]".into(),
                ));
            }
        }
        Ok(Self {
            entries,
            kind,
            source_n,
        })
    }

    pub fn entries(&self) -> &Array2<T> {
        &self.entries
    }

    pub fn kind(&self) -> DispersionKind {
        self.kind
    }

    pub fn source_n(&self) -> Option<usize> {
        self.source_n
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace(&self) -> T {
        self.entries.diag().sum()
    }

    pub fn frobenius_norm(&self) -> T {
        frobenius(&self.entries)
    }
}

pub(crate) fn frobenius<T: Scalar>(a: &Array2<T>) -> T {
    a.iter().map(|&x| x * x).sum::<T>().sqrt()
}

/// Largest absolute asymmetry relative to `max(1, max|a|)`.
pub fn relative_asymmetry<T: Scalar>(a: &Array2<T>) -> f64 {
    let n = a.nrows();
    let scale = a.iter().fold(T::one(), |m, &x| m.max(x.abs()));
    let mut worst = T::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((a[[i, j]] - a[[j, i]]).abs());
        }
    }
    (worst / scale).as_f64()
}

fn check_symmetric<T: Scalar>(a: &Array2<T>, nominal: f64) -> Result<()> {
    let tol = T::tolerance(nominal, 64.0).as_f64();
    let asym = relative_asymmetry(a);
    if asym > tol {
        return Err(PlaError::Symmetry {
            max_asymmetry: asym,
        });
    }
    Ok(())
}

/// Unbiased sample covariance (divisor N-1).
pub fn sample_covariance<T: Scalar>(data: &DataMatrix<T>) -> Result<DispersionMatrix<T>> {
    let n = data.n_rows();
    if n < 2 {
        return Err(PlaError::Dimension("covariance needs N >= 2".into()));
    }
    let means = data.values().mean_axis(Axis(0)).expect("non-empty");
    let centered = data.values() - &means;
    let mut cov = centered.t().dot(&centered) / T::from_count(n - 1);
    let m = cov.nrows();
    for i in 0..m {
        for j in 0..i {
            cov[[i, j]] = cov[[j, i]];
        }
    }
    DispersionMatrix::new(cov, DispersionKind::Covariance, Some(n))
}

/// Sample correlation matrix; diagonal exactly one.
pub fn sample_correlation<T: Scalar>(data: &DataMatrix<T>) -> Result<DispersionMatrix<T>> {
    for j in 0..data.n_cols() {
        let col = data.column(j);
        let (_, var) = mean_and_variance(col);
        if is_constant(col) || var <= T::zero() {
            return Err(PlaError::DegenerateColumn(data.names()[j].clone()));
        }
    }
    let cov = sample_covariance(data)?;
    correlation_from_covariance(&cov)
}

/// `r_ij = s_ij / sqrt(s_ii s_jj)`, clamped to [-1, 1] with a unit diagonal.
pub fn correlation_from_covariance<T: Scalar>(
    cov: &DispersionMatrix<T>,
) -> Result<DispersionMatrix<T>> {
    if cov.kind() != DispersionKind::Covariance {
        return Err(PlaError::Consistency("expected a covariance matrix".into()));
    }
    let s = cov.entries();
    let m = s.nrows();
    if let Some(i) = (0..m).position(|i| s[[i, i]] <= T::zero()) {
        return Err(PlaError::DegenerateColumn(format!("X{}", i + 1)));
    }
    let mut r = Array2::<T>::zeros((m, m));
    for i in 0..m {
        r[[i, i]] = T::one();
        for j in (i + 1)..m {
            let v = (s[[i, j]] / (s[[i, i]] * s[[j, j]]).sqrt())
                .max(-T::one())
                .min(T::one());
            r[[i, j]] = v;
            r[[j, i]] = v;
        }
    }
    DispersionMatrix::new(r, DispersionKind::Correlation, cov.source_n())
}

/// Eigenvalues in non-increasing order with matching orthonormal eigenvectors
/// stored as columns.
///
/// Sign convention: the largest-magnitude entry of each eigenvector is
/// positive (lowest index wins ties). Numerically tied eigenvalues are ordered
/// by the position of that entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSystem<T> {
    eigenvalues: Array1<T>,
    eigenvectors: Array2<T>,
    kind: Option<DispersionKind>,
}

impl<T: Scalar> EigenSystem<T> {
    /// Wrap precomputed eigenpairs (columns of `eigenvectors`) without
    /// re-sorting or normalizing them.
    pub fn from_parts(
        eigenvalues: Array1<T>,
        eigenvectors: Array2<T>,
        kind: Option<DispersionKind>,
    ) -> Result<Self> {
        let n = eigenvalues.len();
        if n == 0 || eigenvectors.dim() != (n, n) {
            return Err(PlaError::Dimension(format!(
                "{} eigenvalues with a {}x{} eigenvector matrix",
                n,
                eigenvectors.nrows(),
                eigenvectors.ncols()
            )));
        }
        Ok(Self {
            eigenvalues,
            eigenvectors,
            kind,
        })
    }

    pub fn eigenvalues(&self) -> &Array1<T> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &Array2<T> {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, j: usize) -> ArrayView1<'_, T> {
        self.eigenvectors.column(j)
    }

    pub fn kind(&self) -> Option<DispersionKind> {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Sum of eigenvalues.
    pub fn trace(&self) -> T {
        self.eigenvalues.sum()
    }

    /// `V diag(lambda) V^T`.
    pub fn reconstruct(&self) -> Array2<T> {
        let scaled = &self.eigenvectors * &self.eigenvalues;
        scaled.dot(&self.eigenvectors.t())
    }

    /// Adjacent index pairs `(j, j+1)` with `|lambda_j - lambda_{j+1}| < rel * |tr|`.
    pub fn near_degenerate_pairs(&self, rel: f64) -> Vec<(usize, usize)> {
        let scale = self
            .eigenvalues
            .iter()
            .map(|v| v.abs())
            .sum::<T>()
            .max(T::min_positive_value());
        let tol = T::lit(rel) * scale;
        (1..self.dim())
            .filter(|&j| (self.eigenvalues[j - 1] - self.eigenvalues[j]).abs() < tol)
            .map(|j| (j - 1, j))
            .collect()
    }
}

/// Index of the largest |entry|; exact ties resolve to the lowest index.
pub(crate) fn argmax_abs<T: Scalar>(v: ArrayView1<'_, T>) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate().skip(1) {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    best
}

/// Decompose any real symmetric matrix (no PSD requirement, no clamping).
pub fn symmetric_eigen<T: Scalar>(a: &Array2<T>) -> Result<EigenSystem<T>> {
    let (r, c) = a.dim();
    if r != c || r == 0 {
        return Err(PlaError::Dimension(format!(
            "expected a non-empty square matrix, got {r}x{c}"
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(PlaError::Numerical("non-finite matrix entry".into()));
    }
    check_symmetric(a, Tolerances::default().symmetry)?;
    let (values, vectors) = jacobi_eigen(a)?;
    Ok(canonicalize(values, vectors, None))
}

/// Eigendecomposition of a dispersion matrix with the default tolerances.
pub fn eigendecompose<T: Scalar>(m: &DispersionMatrix<T>) -> Result<EigenSystem<T>> {
    eigendecompose_with(m, &Tolerances::default())
}

pub fn eigendecompose_with<T: Scalar>(
    m: &DispersionMatrix<T>,
    tol: &Tolerances,
) -> Result<EigenSystem<T>> {
    let (mut values, vectors) = jacobi_eigen(m.entries())?;
    let clamp = T::tolerance(tol.psd_clamp, 1e3) * m.frobenius_norm();
    for v in values.iter_mut() {
        if *v < T::zero() {
            if -*v <= clamp {
                *v = T::zero();
            } else {
                return Err(PlaError::Numerical(format!(
                    "{} matrix is not positive semi-definite (eigenvalue {})",
                    m.kind(),
                    v
                )));
            }
        }
    }
    Ok(canonicalize(values, vectors, Some(m.kind())))
}

fn canonicalize<T: Scalar>(
    values: Array1<T>,
    mut vectors: Array2<T>,
    kind: Option<DispersionKind>,
) -> EigenSystem<T> {
    let n = values.len();
    for mut col in vectors.axis_iter_mut(Axis(1)) {
        let k = argmax_abs(col.view());
        if col[k] < T::zero() {
            col.mapv_inplace(|x| -x);
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(Ordering::Equal));

    // Runs of numerically equal eigenvalues are ordered by argmax position.
    let scale = values.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let tie = T::lit(64.0) * T::epsilon() * scale;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end - 1]] - values[order[end]] <= tie {
            end += 1;
        }
        if end - start > 1 {
            order[start..end].sort_by_key(|&j| (argmax_abs(vectors.column(j)), j));
        }
        start = end;
    }

    let eigenvalues = order.iter().map(|&j| values[j]).collect();
    let eigenvectors = vectors.select(Axis(1), &order);
    EigenSystem {
        eigenvalues,
        eigenvectors,
        kind,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn cov(a: Array2<f64>) -> DispersionMatrix<f64> {
        DispersionMatrix::new(a, DispersionKind::Covariance, None).unwrap()
    }

    #[test]
    fn covariance_of_identical_columns() {
        let d = DataMatrix::with_generated_names(array![[0.0, 0.0], [2.0, 2.0]]).unwrap();
        let c = sample_covariance(&d).unwrap();
        assert_eq!(c.entries(), &array![[2.0, 2.0], [2.0, 2.0]]);
        let r = sample_correlation(&d).unwrap();
        assert_eq!(r.entries(), &array![[1.0, 1.0], [1.0, 1.0]]);
    }

    #[test]
    fn covariance_with_constant_column() {
        let d = DataMatrix::with_generated_names(array![[1.0, 1.0], [-1.0, 1.0]]).unwrap();
        let c = sample_covariance(&d).unwrap();
        assert_eq!(c.entries(), &array![[2.0, 0.0], [0.0, 0.0]]);
        assert!(matches!(
            sample_correlation(&d),
            Err(PlaError::DegenerateColumn(name)) if name == "X2"
        ));
    }

    #[test]
    fn population_correlation() {
        let c = cov(array![[2.0, 0.5, 0.0], [0.5, 2.0, 0.0], [0.0, 0.0, 5.0]]);
        let r = correlation_from_covariance(&c).unwrap();
        let expected = array![[1.0, 0.25, 0.0], [0.25, 1.0, 0.0], [0.0, 0.0, 1.0]];
        for (a, b) in r.entries().iter().zip(expected.iter()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-15);
        }
    }

    #[test]
    fn diagonal_matrix_decomposition() {
        let es = eigendecompose(&cov(array![
            [1.0, 0.0, 0.0],
            [0.0, 3.0, 0.0],
            [0.0, 0.0, 2.0]
        ]))
        .unwrap();
        assert_eq!(es.eigenvalues().to_vec(), vec![3.0, 2.0, 1.0]);
        assert_eq!(es.eigenvector(0).to_vec(), vec![0.0, 1.0, 0.0]);
        assert_eq!(es.eigenvector(1).to_vec(), vec![0.0, 0.0, 1.0]);
        assert_eq!(es.eigenvector(2).to_vec(), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn block_matrix_decomposition() {
        let es = eigendecompose(&cov(array![
            [2.0, 0.5, 0.0],
            [0.5, 2.0, 0.0],
            [0.0, 0.0, 5.0]
        ]))
        .unwrap();
        let w = es.eigenvalues();
        assert_abs_diff_eq!(w[0], 5.0, epsilon = 1e-14);
        assert_abs_diff_eq!(w[1], 2.5, epsilon = 1e-14);
        assert_abs_diff_eq!(w[2], 1.5, epsilon = 1e-14);
        let h = 0.5f64.sqrt();
        let v = es.eigenvectors();
        assert_abs_diff_eq!(v[[2, 0]], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(v[[0, 1]], h, epsilon = 1e-14);
        assert_abs_diff_eq!(v[[1, 1]], h, epsilon = 1e-14);
        assert_abs_diff_eq!(v[[0, 2]].abs(), h, epsilon = 1e-14);
        assert_abs_diff_eq!(v[[0, 2]], -v[[1, 2]], epsilon = 1e-14);
    }

    #[test]
    fn equicorrelated_pair_eigenvalues() {
        let r = DispersionMatrix::new(
            array![[1.0, 0.25, 0.0], [0.25, 1.0, 0.0], [0.0, 0.0, 1.0]],
            DispersionKind::Correlation,
            None,
        )
        .unwrap();
        let es = eigendecompose(&r).unwrap();
        let w = es.eigenvalues();
        assert_abs_diff_eq!(w[0], 1.25, epsilon = 1e-14);
        assert_abs_diff_eq!(w[1], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(w[2], 0.75, epsilon = 1e-14);
        assert_abs_diff_eq!(es.trace(), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn tied_eigenvalues_ordered_by_argmax() {
        let es = eigendecompose(&cov(array![[1.0, 0.0], [0.0, 1.0]])).unwrap();
        assert_eq!(es.eigenvectors(), &Array2::eye(2));
        assert_eq!(es.near_degenerate_pairs(1e-8), vec![(0, 1)]);
    }

    #[test]
    fn asymmetric_input_rejected() {
        let err = DispersionMatrix::new(
            array![[1.0, 0.5], [0.4, 1.0]],
            DispersionKind::Covariance,
            None,
        )
        .unwrap_err();
        assert!(matches!(err, PlaError::Symmetry { .. }));
        assert!(matches!(
            symmetric_eigen(&array![[1.0, 0.5], [0.4, 1.0]]),
            Err(PlaError::Symmetry { .. })
        ));
    }

    #[test]
    fn tiny_negative_eigenvalue_clamped_large_rejected() {
        let es = eigendecompose(&cov(array![[1.0, 1.0], [1.0, 1.0]])).unwrap();
        assert!(es.eigenvalues().iter().all(|&w| w >= 0.0));
        assert!(eigendecompose(&cov(array![[1.0, 2.0], [2.0, 1.0]])).is_err());
    }

    #[test]
    fn largest_entry_positive() {
        let es = symmetric_eigen(&array![
            [0.0, -1.0, 0.3],
            [-1.0, 2.0, 0.1],
            [0.3, 0.1, -1.0]
        ])
        .unwrap();
        for j in 0..3 {
            let v = es.eigenvector(j);
            assert!(v[argmax_abs(v)] > 0.0);
        }
    }

    #[test]
    fn works_in_f32() {
        let c = DispersionMatrix::new(
            array![[2.0f32, 0.5], [0.5, 2.0]],
            DispersionKind::Covariance,
            None,
        )
        .unwrap();
        let es = eigendecompose(&c).unwrap();
        assert!((es.eigenvalues()[0] - 2.5).abs() < 1e-6);
    }
}
