//! Thin wrappers over dense eigen-decompositions and small vector helpers.

use faer::complex_native::c64;
use faer::{Mat, Side};
use num_complex::Complex64;

/// `Σ conj(a_i) b_i`.
pub fn cdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.re * y.im - x.im * y.re;
    }
    Complex64::new(re, im)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn cnorm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Ascending eigenvalues and column eigenvectors of a real symmetric matrix.
pub fn symmetric_eigen(m: &Mat<f64>) -> (Vec<f64>, Mat<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), Mat::zeros(0, 0));
    }
    let evd = m.selfadjoint_eigendecomposition(Side::Lower);
    let s = evd.s().column_vector();
    let vals: Vec<f64> = (0..n).map(|i| s.read(i)).collect();
    (vals, evd.u().to_owned())
}

/// Same as [`symmetric_eigen`] from row vectors.
pub fn symmetric_eigen_rows(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = rows.len();
    let m = Mat::from_fn(n, n, |i, j| rows[i][j]);
    let (vals, u) = symmetric_eigen(&m);
    let vecs = (0..n)
        .map(|j| (0..n).map(|i| u.read(i, j)).collect())
        .collect();
    (vals, vecs)
}

/// Ascending eigenvalues and eigenvectors of a Hermitian matrix given by rows.
pub fn hermitian_eigen(rows: &[Vec<Complex64>]) -> (Vec<f64>, Vec<Vec<Complex64>>) {
    let n = rows.len();
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    let m = Mat::<c64>::from_fn(n, n, |i, j| {
        let z = rows[i][j];
        c64::new(z.re, z.im)
    });
    let evd = m.selfadjoint_eigendecomposition(Side::Lower);
    let s = evd.s().column_vector();
    let u = evd.u();
    let vals = (0..n).map(|i| s.read(i).re).collect();
    let vecs = (0..n)
        .map(|j| {
            (0..n)
                .map(|i| {
                    let z = u.read(i, j);
                    Complex64::new(z.re, z.im)
                })
                .collect()
        })
        .collect();
    (vals, vecs)
}

/// Flip sign so the largest-magnitude component is positive.
pub fn fix_sign(v: &mut [f64]) {
    let mut best = 0.0f64;
    let mut sign = 1.0;
    for &x in v.iter() {
        if x.abs() > best + 1e-14 * best.max(1.0) {
            best = x.abs();
            sign = x.signum();
        }
    }
    if sign < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Deterministic pseudo-random vector in `[-1, 1)^n` (splitmix64).
pub fn pseudo_random(n: usize, seed: u64) -> Vec<f64> {
    let mut state = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    (0..n)
        .map(|_| {
            state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^= z >> 31;
            (z >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hermitian_two_by_two() {
        // [[1, i], [-i, 1]] has eigenvalues 0 and 2
        let rows = vec![
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)],
            vec![Complex64::new(0.0, -1.0), Complex64::new(1.0, 0.0)],
        ];
        let (vals, vecs) = hermitian_eigen(&rows);
        assert_relative_eq!(vals[0], 0.0, epsilon = 1e-14);
        assert_relative_eq!(vals[1], 2.0, epsilon = 1e-14);
        // check A v = λ v
        for (l, v) in vals.iter().zip(&vecs) {
            for i in 0..2 {
                let av: Complex64 = (0..2).map(|j| rows[i][j] * v[j]).sum();
                assert!((av - v[i] * l).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn sign_convention() {
        let mut v = vec![0.1, -0.9, 0.3];
        fix_sign(&mut v);
        assert_eq!(v, vec![-0.1, 0.9, -0.3]);
    }
}
