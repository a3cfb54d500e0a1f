//! Eigenvector stability diagnostics: the eigengap bound on loading
//! perturbations and finite-difference sensitivity of eigenvector entries to a
//! variable's variance.

use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::{
    eigendecompose, frobenius, symmetric_eigen, DispersionKind, DispersionMatrix, EigenSystem,
};
use crate::error::{PlaError, Result};
use crate::scalar::Scalar;

/// Minimum |inner product| for an eigenvector to count as the same one after
/// a perturbation.
pub const TRACKING_OVERLAP: f64 = 0.7;

/// Tolerance on finite differences when checking the sign contract.
pub const SIGN_TOLERANCE: f64 = 1e-8;

const ZERO_ENTRY: f64 = 1e-10;

/// A dispersion matrix together with an additive symmetric perturbation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationPair<T> {
    base: DispersionMatrix<T>,
    delta: Array2<T>,
    frobenius_norm: T,
}

impl<T: Scalar> PerturbationPair<T> {
    pub fn new(base: DispersionMatrix<T>, delta: Array2<T>) -> Result<Self> {
        let m = base.dim();
        if delta.dim() != (m, m) {
            return Err(PlaError::Dimension(format!(
                "perturbation is {}x{}, base is {m}x{m}",
                delta.nrows(),
                delta.ncols()
            )));
        }
        if delta.iter().any(|v| !v.is_finite()) {
            return Err(PlaError::Numerical("non-finite perturbation entry".into()));
        }
        let tol = T::tolerance(1e-12, 10.0);
        let mut worst = T::zero();
        for i in 0..m {
            for j in 0..i {
                worst = worst.max((delta[[i, j]] - delta[[j, i]]).abs());
            }
        }
        if worst > tol {
            return Err(PlaError::Symmetry {
                max_asymmetry: worst.as_f64(),
            });
        }
        let frobenius_norm = frobenius(&delta);
        Ok(Self {
            base,
            delta,
            frobenius_norm,
        })
    }

    pub fn base(&self) -> &DispersionMatrix<T> {
        &self.base
    }

    pub fn delta(&self) -> &Array2<T> {
        &self.delta
    }

    pub fn frobenius_norm(&self) -> T {
        self.frobenius_norm
    }

    pub fn perturbed(&self) -> Array2<T> {
        self.base.entries() + &self.delta
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundDiagnostic<T> {
    pub tau: f64,
    pub frobenius_norm: T,
    /// `min(lambda_{j-1} - lambda_j, lambda_j - lambda_{j+1})`, infinite
    /// outer neighbours.
    pub eigengaps: Vec<T>,
    /// `2^{3/2} ||delta||_F / eigengap_j`; infinite when the gap is zero.
    pub bounds: Vec<T>,
    /// `bounds[j] < tau`. Only the true direction carries information.
    pub implies_below_tau: Vec<bool>,
}

/// Gaps to the neighbouring eigenvalues.
pub fn eigengaps<T: Scalar>(eigenvalues: ArrayView1<'_, T>) -> Vec<T> {
    let m = eigenvalues.len();
    (0..m)
        .map(|j| {
            let above = if j == 0 {
                T::infinity()
            } else {
                eigenvalues[j - 1] - eigenvalues[j]
            };
            let below = if j + 1 == m {
                T::infinity()
            } else {
                eigenvalues[j] - eigenvalues[j + 1]
            };
            above.min(below).max(T::zero())
        })
        .collect()
}

pub fn eigengap_bound<T: Scalar>(
    base_es: &EigenSystem<T>,
    pair: &PerturbationPair<T>,
    tau: f64,
) -> Result<BoundDiagnostic<T>> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(PlaError::Config(format!("tau must be positive, got {tau}")));
    }
    if base_es.dim() != pair.base.dim() {
        return Err(PlaError::Consistency(
            "eigensystem does not match the base matrix".into(),
        ));
    }
    let gaps = eigengaps(base_es.eigenvalues().view());
    let scale = T::lit(2f64.powf(1.5)) * pair.frobenius_norm;
    let bounds: Vec<T> = gaps
        .iter()
        .map(|&g| {
            if g == T::zero() {
                T::infinity()
            } else {
                scale / g
            }
        })
        .collect();
    let tau_t = T::lit(tau);
    let implies_below_tau = bounds.iter().map(|&b| b < tau_t).collect();
    Ok(BoundDiagnostic {
        tau,
        frobenius_norm: pair.frobenius_norm,
        eigengaps: gaps,
        bounds,
        implies_below_tau,
    })
}

/// `||s v~_j - v_j||_inf` per eigenvector, with the sign `s` chosen so that
/// the two vectors have non-negative inner product.
pub fn eigenvector_perturbation<T: Scalar>(
    base_es: &EigenSystem<T>,
    perturbed_es: &EigenSystem<T>,
) -> Result<Vec<T>> {
    if base_es.dim() != perturbed_es.dim() {
        return Err(PlaError::Consistency(
            "eigensystem dimensions differ".into(),
        ));
    }
    Ok((0..base_es.dim())
        .map(|j| {
            let v = base_es.eigenvector(j);
            let w = perturbed_es.eigenvector(j);
            let s = if v.dot(&w) < T::zero() {
                -T::one()
            } else {
                T::one()
            };
            v.iter()
                .zip(w.iter())
                .fold(T::zero(), |m, (&a, &b)| m.max((s * b - a).abs()))
        })
        .collect())
}

/// Decompose base and base + delta and return the measured perturbation of
/// each eigenvector.
pub fn measured_perturbation<T: Scalar>(pair: &PerturbationPair<T>) -> Result<Vec<T>> {
    let base = symmetric_eigen(pair.base.entries())?;
    let perturbed = symmetric_eigen(&pair.perturbed())?;
    eigenvector_perturbation(&base, &perturbed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackingFailure {
    pub increment: f64,
    pub overlap: f64,
}

impl From<TrackingFailure> for PlaError {
    fn from(f: TrackingFailure) -> Self {
        PlaError::Tracking {
            increment: f.increment,
            overlap: f.overlap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityProfile<T> {
    pub target_variable: usize,
    /// Index of the probed eigenvector in the unperturbed system.
    pub delta: usize,
    pub increments: Vec<f64>,
    /// `|v_delta|` of the unperturbed matrix.
    pub base_abs: Vec<T>,
    /// `|v_delta|` after each increment; `None` where tracking failed.
    pub abs_entries: Vec<Option<Vec<T>>>,
    /// Forward differences between consecutive grid points (the first one
    /// starts at increment 0), divided by the increment step.
    pub differences: Vec<Option<Vec<T>>>,
    pub tracking_failures: Vec<TrackingFailure>,
    /// Entries with `|v| > 0` (and `|v| < 1` for the target variable).
    pub eligible: Vec<bool>,
    /// Target entry grows and every other eligible entry shrinks at every
    /// grid step.
    pub sign_match: bool,
}

impl<T: Scalar> SensitivityProfile<T> {
    /// Largest finite difference over eligible off-target entries.
    pub fn max_off_target_difference(&self) -> Option<T> {
        self.eligible_differences(false).reduce(T::max)
    }

    /// Smallest finite difference of the target entry.
    pub fn min_target_difference(&self) -> Option<T> {
        self.eligible_differences(true).reduce(T::min)
    }

    fn eligible_differences(&self, target: bool) -> impl Iterator<Item = T> + '_ {
        let d = self.target_variable;
        self.differences.iter().flatten().flat_map(move |diff| {
            diff.iter()
                .enumerate()
                .filter(move |&(i, _)| self.eligible[i] && (i == d) == target)
                .map(|(_, &v)| v)
        })
    }
}

fn check_increments(increments: &[f64]) -> Result<()> {
    if increments.is_empty() {
        return Err(PlaError::Config("increment grid is empty".into()));
    }
    let mut prev = 0.0;
    for &mu in increments {
        if !(mu.is_finite() && mu > prev) {
            return Err(PlaError::Config(
                "increments must be finite, positive and strictly increasing".into(),
            ));
        }
        prev = mu;
    }
    Ok(())
}

fn with_variance_increment<T: Scalar>(
    m: &DispersionMatrix<T>,
    d: usize,
    mu: f64,
) -> Result<DispersionMatrix<T>> {
    let mut entries = m.entries().clone();
    entries[[d, d]] = entries[[d, d]] + T::lit(mu);
    DispersionMatrix::new(entries, DispersionKind::Covariance, m.source_n())
}

struct Grid<T> {
    base: EigenSystem<T>,
    perturbed: Vec<EigenSystem<T>>,
}

fn decompose_grid<T: Scalar>(
    m: &DispersionMatrix<T>,
    d: usize,
    increments: &[f64],
) -> Result<Grid<T>> {
    if m.kind() != DispersionKind::Covariance {
        return Err(PlaError::Consistency(
            "variance sensitivity needs a covariance matrix".into(),
        ));
    }
    if d >= m.dim() {
        return Err(PlaError::Dimension(format!(
            "variable index {d} out of range for dimension {}",
            m.dim()
        )));
    }
    check_increments(increments)?;
    let base = eigendecompose(m)?;
    let perturbed = increments
        .par_iter()
        .map(|&mu| eigendecompose(&with_variance_increment(m, d, mu)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(Grid { base, perturbed })
}

fn profile_for<T: Scalar>(
    grid: &Grid<T>,
    d: usize,
    delta: usize,
    increments: &[f64],
) -> SensitivityProfile<T> {
    let v = grid.base.eigenvector(delta);
    let base_abs: Vec<T> = v.iter().map(|x| x.abs()).collect();
    let zero = T::tolerance(ZERO_ENTRY, 1e3);
    let eligible: Vec<bool> = base_abs
        .iter()
        .enumerate()
        .map(|(i, &a)| a > zero && (i != d || a < T::one() - zero))
        .collect();

    let mut tracking_failures = Vec::new();
    let abs_entries: Vec<Option<Vec<T>>> = grid
        .perturbed
        .iter()
        .zip(increments)
        .map(|(es, &mu)| {
            let (best, overlap) = (0..es.dim())
                .map(|j| (j, es.eigenvector(j).dot(&v).abs()))
                .fold(
                    (0, T::neg_infinity()),
                    |acc, x| if x.1 > acc.1 { x } else { acc },
                );
            if overlap < T::lit(TRACKING_OVERLAP) {
                tracking_failures.push(TrackingFailure {
                    increment: mu,
                    overlap: overlap.as_f64(),
                });
                None
            } else {
                Some(es.eigenvector(best).iter().map(|x| x.abs()).collect())
            }
        })
        .collect();

    let differences: Vec<Option<Vec<T>>> = (0..increments.len())
        .map(|k| {
            let (prev, prev_mu) = if k == 0 {
                (Some(&base_abs), 0.0)
            } else {
                (abs_entries[k - 1].as_ref(), increments[k - 1])
            };
            let cur = abs_entries[k].as_ref()?;
            let prev = prev?;
            let step = T::lit(increments[k] - prev_mu);
            Some(
                cur.iter()
                    .zip(prev)
                    .map(|(&c, &p)| (c - p) / step)
                    .collect(),
            )
        })
        .collect();

    let mut profile = SensitivityProfile {
        target_variable: d,
        delta,
        increments: increments.to_vec(),
        base_abs,
        abs_entries,
        differences,
        tracking_failures,
        eligible,
        sign_match: false,
    };
    let tol = T::tolerance(SIGN_TOLERANCE, 1e3);
    profile.sign_match = profile.tracking_failures.is_empty()
        && profile.max_off_target_difference().is_none_or(|x| x <= tol)
        && profile.min_target_difference().is_none_or(|x| x >= -tol);
    profile
}

/// Probe how the entries of one eigenvector react to raising `Var(X_d)`.
///
/// The probed eigenvector is the first one, in descending eigenvalue order,
/// that has a non-zero entry for `d` and shows the expected sign pattern; if
/// none does, the first candidate is reported with `sign_match = false`.
pub fn variance_sensitivity<T: Scalar>(
    m: &DispersionMatrix<T>,
    d: usize,
    increments: &[f64],
) -> Result<SensitivityProfile<T>> {
    let grid = decompose_grid(m, d, increments)?;
    let zero = T::tolerance(ZERO_ENTRY, 1e3);
    let candidates: Vec<usize> = (0..grid.base.dim())
        .filter(|&j| grid.base.eigenvector(j)[d].abs() > zero)
        .collect();
    let mut first = None;
    for &delta in &candidates {
        let p = profile_for(&grid, d, delta, increments);
        if p.sign_match {
            return Ok(p);
        }
        first.get_or_insert(p);
    }
    first.ok_or_else(|| PlaError::Numerical(format!("no eigenvector loads on variable {d}")))
}

/// Same as [`variance_sensitivity`] for a fixed eigenvector `delta`.
pub fn variance_sensitivity_for<T: Scalar>(
    m: &DispersionMatrix<T>,
    d: usize,
    delta: usize,
    increments: &[f64],
) -> Result<SensitivityProfile<T>> {
    if delta >= m.dim() {
        return Err(PlaError::Dimension(format!(
            "eigenvector index {delta} out of range for dimension {}",
            m.dim()
        )));
    }
    let grid = decompose_grid(m, d, increments)?;
    Ok(profile_for(&grid, d, delta, increments))
}

/// Multiply `Var(X_d)` by `factor` and return the largest |entry| other than
/// `d` of the eigenvector that loads most on `d`.
pub fn variance_limit<T: Scalar>(m: &DispersionMatrix<T>, d: usize, factor: f64) -> Result<T> {
    if d >= m.dim() {
        return Err(PlaError::Dimension(format!(
            "variable index {d} out of range for dimension {}",
            m.dim()
        )));
    }
    let mut entries = m.entries().clone();
    entries[[d, d]] = entries[[d, d]] * T::lit(factor);
    let scaled = DispersionMatrix::new(entries, DispersionKind::Covariance, m.source_n())?;
    let es = eigendecompose(&scaled)?;
    let delta = (0..es.dim())
        .max_by(|&a, &b| {
            es.eigenvector(a)[d]
                .abs()
                .partial_cmp(&es.eigenvector(b)[d].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .expect("non-empty");
    Ok(es
        .eigenvector(delta)
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != d)
        .fold(T::zero(), |acc, (_, x)| acc.max(x.abs())))
}
