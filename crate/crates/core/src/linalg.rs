//! Small dense complex linear algebra.

use num_complex::Complex;
use num_traits::Zero;

use crate::scalar::Scalar;

/// Singular values of a row-major `rows × cols` complex matrix by one-sided
/// Jacobi (Hestenes) rotations. Unsorted.
pub fn singular_values<T: Scalar>(mat: &[Complex<T>], rows: usize, cols: usize) -> Vec<T> {
    assert_eq!(mat.len(), rows * cols);
    // Orthogonalize the shorter dimension's vectors.
    let (n_vec, len, vecs): (usize, usize, Vec<Vec<Complex<T>>>) = if cols <= rows {
        (
            cols,
            rows,
            (0..cols)
                .map(|j| (0..rows).map(|i| mat[i * cols + j]).collect())
                .collect(),
        )
    } else {
        (rows, cols, (0..rows).map(|i| mat[i * cols..(i + 1) * cols].to_vec()).collect())
    };
    let mut v = vecs;
    let eps = T::epsilon();
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n_vec {
            for q in (p + 1)..n_vec {
                let alpha = norm_sqr(&v[p]);
                let beta = norm_sqr(&v[q]);
                let gamma = dot(&v[p], &v[q]);
                let g = gamma.norm();
                if g <= eps * (alpha * beta).sqrt() || g == T::zero() {
                    continue;
                }
                rotated = true;
                // phase-align q so that <p|q> is real positive
                let phase = gamma.conj() / g;
                for x in v[q].iter_mut() {
                    *x = *x * phase;
                }
                let two = T::one() + T::one();
                let zeta = (beta - alpha) / (two * g);
                let sign = if zeta >= T::zero() { T::one() } else { -T::one() };
                let t = sign / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for k in 0..len {
                    let a = v[p][k];
                    let b = v[q][k];
                    v[p][k] = a * c - b * s;
                    v[q][k] = a * s + b * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    v.iter().map(|x| norm_sqr(x).sqrt()).collect()
}

fn norm_sqr<T: Scalar>(x: &[Complex<T>]) -> T {
    x.iter().fold(T::zero(), |a, c| a + c.norm_sqr())
}

fn dot<T: Scalar>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter()
        .zip(b)
        .fold(Complex::zero(), |acc, (x, y)| acc + x.conj() * y)
}
