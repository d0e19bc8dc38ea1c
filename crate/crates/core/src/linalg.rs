//! Small dense symmetric linear algebra for the simulator's quadratics.
//! Matrices are row-major `n × n` slices.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub(crate) fn matvec<T: Scalar>(a: &[T], x: &[T]) -> Vec<T> {
    let n = x.len();
    a.chunks_exact(n)
        .map(|row| {
            row.iter()
                .zip(x)
                .fold(T::zero(), |acc, (&r, &v)| acc + r * v)
        })
        .collect()
}

/// Cyclic Jacobi rotations. Returns eigenvalues ascending and the matching
/// unit eigenvectors as rows.
pub(crate) fn symmetric_eigen<T: Scalar>(a: &[T], n: usize) -> (Vec<T>, Vec<Vec<T>>) {
    let mut m = a.to_vec();
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }
    let frob = m.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt();
    let threshold = T::epsilon() * T::epsilon() * frob * frob;
    for _sweep in 0..100 {
        let mut off = T::zero();
        for p in 0..n {
            for q in p + 1..n {
                off = off + m[p * n + q] * m[p * n + q];
            }
        }
        if off <= threshold {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (T::of(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m[i * n + i]
            .partial_cmp(&m[j * n + j])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let vectors = order
        .iter()
        .map(|&i| (0..n).map(|k| v[k * n + i]).collect())
        .collect();
    (values, vectors)
}

/// Solves `A x = rhs` for symmetric positive-definite `A`.
pub(crate) fn cholesky_solve<T: Scalar>(a: &[T], rhs: &[T]) -> Result<Vec<T>> {
    let n = rhs.len();
    let mut l = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s = s - l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > T::zero()) {
                    return Err(Error::invalid("matrix is not positive definite"));
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        let mut s = rhs[i];
        for k in 0..i {
            s = s - l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s = s - l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    Ok(x)
}

/// Orthonormalizes the rows of `m` in place (modified Gram-Schmidt, two passes).
pub(crate) fn orthonormalize_rows<T: Scalar>(m: &mut [Vec<T>]) -> Result<()> {
    for _ in 0..2 {
        for i in 0..m.len() {
            for j in 0..i {
                let proj = crate::scalar::dot(&m[i], &m[j]);
                let (head, tail) = m.split_at_mut(i);
                for (x, &y) in tail[0].iter_mut().zip(&head[j]) {
                    *x = *x - proj * y;
                }
            }
            let n = crate::scalar::norm(&m[i]);
            if !(n > T::zero()) {
                return Err(Error::invalid("degenerate basis"));
            }
            m[i].iter_mut().for_each(|x| *x = *x / n);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_on_known_matrix() {
        // eigenvalues of [[2,1],[1,2]] are 1 and 3
        let (vals, vecs) = symmetric_eigen(&[2.0_f64, 1.0, 1.0, 2.0], 2);
        assert!((vals[0] - 1.0).abs() < 1e-14 && (vals[1] - 3.0).abs() < 1e-14);
        let r = matvec(&[2.0, 1.0, 1.0, 2.0], &vecs[0]);
        assert!((r[0] - vecs[0][0]).abs() < 1e-14 && (r[1] - vecs[0][1]).abs() < 1e-14);
    }

    #[test]
    fn cholesky_solves() {
        let a = [4.0_f64, 2.0, 2.0, 3.0];
        let x = cholesky_solve(&a, &[2.0, 1.0]).unwrap();
        let r = matvec(&a, &x);
        assert!((r[0] - 2.0).abs() < 1e-14 && (r[1] - 1.0).abs() < 1e-14);
        assert!(cholesky_solve(&[1.0, 2.0, 2.0, 1.0], &[1.0, 1.0]).is_err());
    }
}
