//! Small dense linear algebra: a cyclic Jacobi eigensolver for real
//! symmetric matrices and a pivoted Gaussian solver.
//!
//! The matrices involved are tiny (the benchmark Hamiltonian is 3x3 and the
//! constraint Gram matrix is at most 3x3), so simple dense algorithms are
//! both adequate and exact enough, and they stay generic over the scalar.

use crate::error::CoreError;
use crate::scalar::Float;
use ndarray::{Array1, Array2};

const MAX_JACOBI_SWEEPS: usize = 64;

/// Eigendecomposition of a real symmetric matrix.
///
/// Returns eigenvalues in ascending order and the matching orthonormal
/// eigenvectors as columns. Symmetry is assumed; only the upper triangle is
/// read in rotations but the full matrix is updated.
pub fn eigh_symmetric<T: Float>(a: &Array2<T>) -> Result<(Array1<T>, Array2<T>), CoreError> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(CoreError::DimensionMismatch(format!(
            "eigh needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let mut m = a.clone();
    let mut v = Array2::<T>::eye(n);
    if n == 1 {
        return Ok((Array1::from_elem(1, m[[0, 0]]), v));
    }

    let norm = frobenius(&m);
    let tol = T::epsilon() * norm.max(T::min_positive_value());

    for _sweep in 0..MAX_JACOBI_SWEEPS {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[[p, q]] * m[[p, q]];
            }
        }
        if off.sqrt() <= tol {
            return Ok(sort_eigenpairs(m, v));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq.abs() <= tol * T::of(1e-3) {
                    continue;
                }
                let app = m[[p, p]];
                let aqq = m[[q, q]];
                let tau = (aqq - app) / (T::of(2.0) * apq);
                let t = if tau >= T::zero() {
                    T::one() / (tau + (T::one() + tau * tau).sqrt())
                } else {
                    -T::one() / (-tau + (T::one() + tau * tau).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;

                m[[p, p]] = app - t * apq;
                m[[q, q]] = aqq + t * apq;
                m[[p, q]] = T::zero();
                m[[q, p]] = T::zero();
                for i in 0..n {
                    if i != p && i != q {
                        let aip = m[[i, p]];
                        let aiq = m[[i, q]];
                        m[[i, p]] = c * aip - s * aiq;
                        m[[p, i]] = m[[i, p]];
                        m[[i, q]] = s * aip + c * aiq;
                        m[[q, i]] = m[[i, q]];
                    }
                }
                for i in 0..n {
                    let vip = v[[i, p]];
                    let viq = v[[i, q]];
                    v[[i, p]] = c * vip - s * viq;
                    v[[i, q]] = s * vip + c * viq;
                }
            }
        }
    }
    Err(CoreError::LinearAlgebra(format!(
        "Jacobi eigensolver did not converge in {MAX_JACOBI_SWEEPS} sweeps"
    )))
}

fn frobenius<T: Float>(a: &Array2<T>) -> T {
    a.iter().map(|&x| x * x).sum::<T>().sqrt()
}

fn sort_eigenpairs<T: Float>(m: Array2<T>, v: Array2<T>) -> (Array1<T>, Array2<T>) {
    let n = m.nrows();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| {
        m[[i, i]]
            .partial_cmp(&m[[j, j]])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let vals = Array1::from_shape_fn(n, |k| m[[idx[k], idx[k]]]);
    let vecs = Array2::from_shape_fn((n, n), |(i, k)| v[[i, idx[k]]]);
    (vals, vecs)
}

/// Solves `a x = b` for a small dense system by Gaussian elimination with
/// partial pivoting. `a` is consumed by value since callers pass fresh copies.
pub fn solve_dense<T: Float>(mut a: Array2<T>, mut b: Array1<T>) -> Result<Array1<T>, CoreError> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(CoreError::DimensionMismatch(format!(
            "solve needs square a and matching b, got {}x{} and {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    for col in 0..n {
        let mut pivot = col;
        for row in (col + 1)..n {
            if a[[row, col]].abs() > a[[pivot, col]].abs() {
                pivot = row;
            }
        }
        if a[[pivot, col]].abs() < T::epsilon() * T::of(16.0) * (T::one() + frobenius(&a)) {
            return Err(CoreError::LinearAlgebra(format!(
                "singular system at column {col} (pivot {})",
                a[[pivot, col]]
            )));
        }
        if pivot != col {
            for k in 0..n {
                let tmp = a[[col, k]];
                a[[col, k]] = a[[pivot, k]];
                a[[pivot, k]] = tmp;
            }
            b.swap(col, pivot);
        }
        for row in (col + 1)..n {
            let factor = a[[row, col]] / a[[col, col]];
            if factor == T::zero() {
                continue;
            }
            for k in col..n {
                let v = a[[col, k]];
                a[[row, k]] -= factor * v;
            }
            let bv = b[col];
            b[row] -= factor * bv;
        }
    }
    let mut x = Array1::<T>::zeros(n);
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in (row + 1)..n {
            acc -= a[[row, k]] * x[k];
        }
        x[row] = acc / a[[row, row]];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn diagonal_matrix_returns_sorted_diagonal() {
        let a = array![[3.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 2.0]];
        let (vals, vecs) = eigh_symmetric(&a).unwrap();
        assert_eq!(vals.to_vec(), vec![-1.0, 2.0, 3.0]);
        // Columns are signed unit vectors.
        for k in 0..3 {
            let col = vecs.column(k);
            let norm: f64 = col.iter().map(|x| x * x).sum();
            assert!((norm - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn two_by_two_exchange_matrix() {
        let a: Array2<f64> = array![[0.0, 1.0], [1.0, 0.0]];
        let (vals, _) = eigh_symmetric(&a).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-14);
        assert!((vals[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn reconstructs_random_symmetric_matrix() {
        // Deterministic pseudo-random symmetric 6x6.
        let n = 6;
        let mut a = Array2::<f64>::zeros((n, n));
        let mut s = 1234567u64;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        for i in 0..n {
            for j in i..n {
                let x = next();
                a[[i, j]] = x;
                a[[j, i]] = x;
            }
        }
        let (vals, vecs) = eigh_symmetric(&a).unwrap();
        // V^T V = I
        let vtv = vecs.t().dot(&vecs);
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((vtv[[i, j]] - want).abs() < 1e-12);
            }
        }
        // V diag(vals) V^T = A
        let mut rec = Array2::<f64>::zeros((n, n));
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    rec[[i, j]] += vals[k] * vecs[[i, k]] * vecs[[j, k]];
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                assert!((rec[[i, j]] - a[[i, j]]).abs() < 1e-12);
            }
        }
        // Ascending order.
        for k in 1..n {
            assert!(vals[k] >= vals[k - 1]);
        }
    }

    #[test]
    fn solves_small_system() {
        let a: Array2<f64> = array![[4.0, 1.0, 0.0], [1.0, 3.0, -1.0], [0.0, -1.0, 2.0]];
        let x_true: Array1<f64> = array![1.0, -2.0, 0.5];
        let b = a.dot(&x_true);
        let x = solve_dense(a, b).unwrap();
        for k in 0..3 {
            assert!((x[k] - x_true[k]).abs() < 1e-13);
        }
    }

    #[test]
    fn singular_system_is_reported() {
        let a: Array2<f64> = array![[1.0, 1.0], [1.0, 1.0]];
        let b: Array1<f64> = array![1.0, 2.0];
        assert!(matches!(solve_dense(a, b), Err(CoreError::LinearAlgebra(_))));
    }

    #[test]
    fn f32_eigensolver_works() {
        let a = array![[2.0f32, 1.0], [1.0, 2.0]];
        let (vals, _) = eigh_symmetric(&a).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-5);
        assert!((vals[1] - 3.0).abs() < 1e-5);
    }
}
