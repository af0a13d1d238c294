//! Oracles written independently of the library code paths.

#![allow(dead_code)]

use std::sync::Arc;

use num_complex::Complex64;
use rotgyro::basis::{build_basis, Orbital, TruncationSpec};
use rotgyro::hamiltonian::{HamiltonianModel, ModelParams};

pub fn model(n: usize, gn6: f64, a: f64) -> HamiltonianModel {
    let spec = TruncationSpec::standard(n).unwrap();
    HamiltonianModel::new(
        ModelParams::from_gn6(gn6, a, spec).unwrap(),
        Arc::new(build_basis(&spec).unwrap()),
    )
    .unwrap()
}

fn ln_fact(k: u32) -> f64 {
    (2..=k).map(|j| (j as f64).ln()).sum()
}

/// `L_n^α(x)` from the explicit finite sum.
pub fn laguerre(n: u32, alpha: u32, x: f64) -> f64 {
    (0..=n)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * (ln_fact(n + alpha) - ln_fact(n - k) - ln_fact(alpha + k) - ln_fact(k)).exp()
                * x.powi(k as i32)
        })
        .sum()
}

/// Normalised radial function, `∫ R² r dr = 1`.
pub fn radial(n: u32, m: i32, r: f64) -> f64 {
    let am = m.unsigned_abs();
    (2.0 * (ln_fact(n) - ln_fact(n + am)).exp()).sqrt()
        * r.powi(am as i32)
        * laguerre(n, am, r * r)
        * (-0.5 * r * r).exp()
}

/// Composite Simpson on `[0, 12]` with 8000 intervals.
pub fn simpson(f: impl Fn(f64) -> f64) -> f64 {
    let n = 8000;
    let h = 12.0 / n as f64;
    let mut s = f(0.0) + f(12.0);
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// `∫ φ*_a φ*_b φ_c φ_d d²r` on a radial grid, the angular part done exactly.
pub fn contact_oracle(a: (u32, i32), b: (u32, i32), c: (u32, i32), d: (u32, i32)) -> f64 {
    if a.1 + b.1 != c.1 + d.1 {
        return 0.0;
    }
    simpson(|r| {
        r * radial(a.0, a.1, r) * radial(b.0, b.1, r) * radial(c.0, c.1, r) * radial(d.0, d.1, r)
    }) / (2.0 * std::f64::consts::PI)
}

/// `⟨a|2(x² − y²)|b⟩`.
pub fn quadrupole_oracle(a: (u32, i32), b: (u32, i32)) -> f64 {
    if (a.1 - b.1).abs() != 2 {
        return 0.0;
    }
    simpson(|r| r.powi(3) * radial(a.0, a.1, r) * radial(b.0, b.1, r))
}

/// Basis size by generating every multiset of `n` orbitals drawn from
/// `n ≤ 2, |m| ≤ l_max` and keeping the admissible ones.
pub fn brute_force_dimension(n: usize, l_max: i32, n_ll_max: u32, even: bool) -> usize {
    let orbs: Vec<(u32, i32)> = (0..=2u32)
        .flat_map(|k| (-l_max..=l_max).map(move |m| (k, m)))
        .collect();
    let exc = |o: &(u32, i32)| o.0 + ((o.1.abs() - o.1) / 2) as u32;
    fn rec(
        orbs: &[(u32, i32)],
        start: usize,
        left: usize,
        l: i32,
        landau: u32,
        lim: (i32, u32, bool),
        exc: &dyn Fn(&(u32, i32)) -> u32,
    ) -> usize {
        if landau > lim.1 {
            return 0;
        }
        if left == 0 {
            return usize::from(l >= 0 && l <= lim.0 && (!lim.2 || l % 2 == 0));
        }
        (start..orbs.len())
            .map(|i| {
                rec(
                    orbs,
                    i,
                    left - 1,
                    l + orbs[i].1,
                    landau + exc(&orbs[i]),
                    lim,
                    exc,
                )
            })
            .sum()
    }
    rec(&orbs, 0, n, 0, 1, (l_max, n_ll_max, even), &exc)
}

/// Cyclic Jacobi diagonalisation of a real symmetric matrix; eigenvectors
/// are the columns of the returned matrix.
pub fn jacobi(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
        .collect();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-28 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

/// `exp(−iHt)ψ` through the Jacobi eigenbasis.
pub fn expm_apply(h: &[Vec<f64>], psi: &[Complex64], t: f64) -> Vec<Complex64> {
    let (e, v) = jacobi(h.to_vec());
    let n = psi.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        let c: Complex64 = (0..n).map(|i| psi[i] * v[i][k]).sum::<Complex64>()
            * Complex64::from_polar(1.0, -e[k] * t);
        for i in 0..n {
            out[i] += c * v[i][k];
        }
    }
    out
}

pub fn fidelity(a: &[Complex64], b: &[Complex64]) -> f64 {
    let ov: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let na: f64 = a.iter().map(|x| x.norm_sqr()).sum();
    let nb: f64 = b.iter().map(|x| x.norm_sqr()).sum();
    ov.norm_sqr() / (na * nb)
}

/// Lowest eigenvector of a dense symmetric matrix.
pub fn ground(h: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let (e, v) = jacobi(h.to_vec());
    let k = (0..e.len()).min_by(|&i, &j| e[i].total_cmp(&e[j])).unwrap();
    (e[k], v.iter().map(|row| row[k]).collect())
}

pub fn orbital(o: (u32, i32)) -> Orbital {
    Orbital::new(o.0, o.1)
}
