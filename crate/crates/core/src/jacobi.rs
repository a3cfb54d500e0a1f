//! Cyclic Jacobi eigensolver for dense symmetric matrices.
//!
//! Jacobi is slower than tridiagonal QR but has two properties the analysis
//! relies on: small eigenvector components are computed to high relative
//! accuracy, and the result is a pure function of the input bytes.

use ndarray::{Array1, Array2};

use crate::error::{PlaError, Result};
use crate::scalar::Scalar;

const MAX_SWEEPS: usize = 100;

/// Unsorted eigenpairs of a symmetric matrix: `(values, vectors-as-columns)`.
///
/// Only the upper triangle of `a` is read.
pub(crate) fn jacobi_eigen<T: Scalar>(a: &Array2<T>) -> Result<(Array1<T>, Array2<T>)> {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let mut a = a.clone();
    for i in 0..n {
        for j in 0..i {
            a[[i, j]] = a[[j, i]];
        }
    }
    let mut v = Array2::<T>::eye(n);
    if n == 1 {
        return Ok((Array1::from_elem(1, a[[0, 0]]), v));
    }

    let hundred = T::lit(100.0);
    let half = T::lit(0.5);
    let eps = T::epsilon();

    for sweep in 0..MAX_SWEEPS {
        let mut off = T::zero();
        let mut scale = T::zero();
        for p in 0..n {
            scale = scale + a[[p, p]] * a[[p, p]];
            for q in (p + 1)..n {
                off = off + a[[p, q]] * a[[p, q]];
            }
        }
        if off == T::zero() || off.sqrt() <= eps * eps * scale.sqrt() {
            return Ok((a.diag().to_owned(), v));
        }
        // Small rotations are skipped in the first sweeps to save work.
        let threshold = if sweep < 3 {
            T::lit(0.2) * off.sqrt() / T::from_count(n * n)
        } else {
            T::zero()
        };

        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                let g = hundred * apq.abs();
                let app = a[[p, p]];
                let aqq = a[[q, q]];
                if sweep > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    a[[p, q]] = T::zero();
                    a[[q, p]] = T::zero();
                    continue;
                }
                if apq.abs() <= threshold || apq == T::zero() {
                    continue;
                }
                let h = aqq - app;
                let t = if h.abs() + g == h.abs() {
                    apq / h
                } else {
                    let theta = half * h / apq;
                    let t = T::one() / (theta.abs() + (T::one() + theta * theta).sqrt());
                    if theta < T::zero() {
                        -t
                    } else {
                        t
                    }
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                let tau = s / (T::one() + c);
                let shift = t * apq;
                a[[p, p]] = app - shift;
                a[[q, q]] = aqq + shift;
                a[[p, q]] = T::zero();
                a[[q, p]] = T::zero();
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[[r, p]];
                    let arq = a[[r, q]];
                    let new_rp = arp - s * (arq + tau * arp);
                    let new_rq = arq + s * (arp - tau * arq);
                    a[[r, p]] = new_rp;
                    a[[p, r]] = new_rp;
                    a[[r, q]] = new_rq;
                    a[[q, r]] = new_rq;
                }
                for r in 0..n {
                    let vrp = v[[r, p]];
                    let vrq = v[[r, q]];
                    v[[r, p]] = vrp - s * (vrq + tau * vrp);
                    v[[r, q]] = vrq + s * (vrp - tau * vrq);
                }
            }
        }
    }
    Err(PlaError::Numerical(format!(
        "Jacobi eigensolver did not converge in {MAX_SWEEPS} sweeps"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn two_by_two() {
        let (w, v) = jacobi_eigen(&array![[2.0f64, 1.0], [1.0, 2.0]]).unwrap();
        let mut w = w.to_vec();
        w.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((w[0] - 1.0).abs() < 1e-14 && (w[1] - 3.0).abs() < 1e-14);
        assert!((v[[0, 0]].abs() - 0.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn diagonal_is_untouched() {
        let (w, v) = jacobi_eigen(&array![[3.0, 0.0], [0.0, 7.0]]).unwrap();
        assert_eq!(w.to_vec(), vec![3.0, 7.0]);
        assert_eq!(v, Array2::eye(2));
    }
}
