//! Lowest eigenpairs of real symmetric sparse operators.
//!
//! Small problems go through a dense decomposition; larger ones through a
//! thick-restart Lanczos iteration with full reorthogonalisation.

use faer::Mat;

use crate::error::{Error, Result};
use crate::linalg::{self, dot, norm};
use crate::sparse::CsrMatrix;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    /// Residual bound relative to the operator norm.
    pub tol: f64,
    /// Dense decomposition at or below this dimension.
    pub dense_threshold: usize,
    /// Krylov basis size before a thick restart.
    pub max_basis: usize,
    /// Total operator applications allowed.
    pub max_matvecs: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-10,
            dense_threshold: 2000,
            max_basis: 160,
            max_matvecs: 40_000,
        }
    }
}

/// Eigenpairs in ascending order with their residual norms.
#[derive(Clone, Debug)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
}

/// Dense eigen-decomposition of a (possibly sub-) matrix, `k` lowest.
pub fn dense_lowest(m: &CsrMatrix, k: usize) -> Eigenpairs {
    let n = m.dim();
    let mut dense = Mat::<f64>::zeros(n, n);
    for r in 0..n {
        for (c, v) in m.row(r) {
            dense.write(r, c, v);
        }
    }
    let (vals, u) = linalg::symmetric_eigen(&dense);
    let k = k.min(n);
    let mut out = Eigenpairs {
        values: vals[..k].to_vec(),
        vectors: Vec::with_capacity(k),
        residuals: Vec::with_capacity(k),
    };
    let mut hv = vec![0.0; n];
    for j in 0..k {
        let mut v: Vec<f64> = (0..n).map(|i| u.read(i, j)).collect();
        linalg::fix_sign(&mut v);
        m.matvec_real(&v, &mut hv);
        let res = hv
            .iter()
            .zip(&v)
            .map(|(h, x)| (h - vals[j] * x).powi(2))
            .sum::<f64>()
            .sqrt();
        out.residuals.push(res);
        out.vectors.push(v);
    }
    out
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, v);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
    }
}

/// Thick-restart Lanczos for the `k` lowest eigenpairs.
pub fn lanczos_lowest(
    m: &CsrMatrix,
    k: usize,
    cfg: &SolverConfig,
    seeds: &[Vec<f64>],
) -> Result<Eigenpairs> {
    let n = m.dim();
    if k > n {
        return Err(Error::TooManyEigenpairs {
            requested: k,
            dimension: n,
        });
    }
    let max_basis = cfg.max_basis.max(2 * k + 10).min(n);
    let keep = (k + 10).max(2 * k).min(max_basis.saturating_sub(5)).max(k);
    let hnorm = m.norm_bound().max(1e-300);
    let target = cfg.tol * hnorm;

    let mut v_basis: Vec<Vec<f64>> = Vec::with_capacity(max_basis);
    let mut w_basis: Vec<Vec<f64>> = Vec::with_capacity(max_basis);
    let mut proj: Vec<Vec<f64>> = Vec::new();
    let mut matvecs = 0usize;

    let push = |v: Vec<f64>,
                v_basis: &mut Vec<Vec<f64>>,
                w_basis: &mut Vec<Vec<f64>>,
                proj: &mut Vec<Vec<f64>>,
                matvecs: &mut usize| {
        let mut w = vec![0.0; n];
        m.matvec_real(&v, &mut w);
        *matvecs += 1;
        let col: Vec<f64> = v_basis.iter().map(|b| dot(b, &w)).collect();
        let diag = dot(&v, &w);
        for (row, c) in proj.iter_mut().zip(&col) {
            row.push(*c);
        }
        let mut last = col;
        last.push(diag);
        proj.push(last);
        v_basis.push(v);
        w_basis.push(w);
    };

    let mut seed_count = 0;
    for s in seeds {
        if s.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: s.len(),
            });
        }
        let mut v = s.clone();
        orthogonalize(&mut v, &v_basis);
        let nv = norm(&v);
        if nv > 1e-8 && v_basis.len() < max_basis / 2 {
            v.iter_mut().for_each(|x| *x /= nv);
            push(v, &mut v_basis, &mut w_basis, &mut proj, &mut matvecs);
            seed_count += 1;
        }
    }
    if seed_count == 0 {
        let mut v = linalg::pseudo_random(n, 0x5eed);
        let nv = norm(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        push(v, &mut v_basis, &mut w_basis, &mut proj, &mut matvecs);
    }

    let mut since_check = 0usize;
    let mut random_seed = 1u64;
    let mut best_residual = f64::INFINITY;
    let mut restart_dir: Option<Vec<f64>> = None;
    loop {
        let full = v_basis.len() >= max_basis;
        let time_to_check = full || since_check >= 8 || v_basis.len() == n;
        if time_to_check && v_basis.len() >= k {
            since_check = 0;
            let (theta, y) = linalg::symmetric_eigen_rows(&proj);
            let mut residuals = Vec::with_capacity(k);
            let mut vectors = Vec::with_capacity(k);
            let mut residual_vectors = Vec::with_capacity(k);
            for j in 0..k {
                let mut x = vec![0.0; n];
                let mut r = vec![0.0; n];
                for (c, (vb, wb)) in y[j].iter().zip(v_basis.iter().zip(&w_basis)) {
                    for i in 0..n {
                        x[i] += c * vb[i];
                        r[i] += c * wb[i];
                    }
                }
                for i in 0..n {
                    r[i] -= theta[j] * x[i];
                }
                residuals.push(norm(&r));
                vectors.push(x);
                residual_vectors.push(r);
            }
            let worst = residuals.iter().cloned().fold(0.0, f64::max);
            best_residual = best_residual.min(worst);
            if worst <= target || v_basis.len() == n {
                for v in &mut vectors {
                    let nv = norm(v);
                    v.iter_mut().for_each(|x| *x /= nv);
                    linalg::fix_sign(v);
                }
                return Ok(Eigenpairs {
                    values: theta[..k].to_vec(),
                    vectors,
                    residuals,
                });
            }
            if matvecs >= cfg.max_matvecs {
                return Err(Error::NoConvergence {
                    iterations: matvecs,
                    residual: best_residual,
                });
            }
            if full {
                let j = residuals.iter().position(|&r| r > target).unwrap_or(0);
                restart_dir = Some(std::mem::take(&mut residual_vectors[j]));
                // thick restart on the `keep` lowest Ritz vectors
                let mut nv_basis = Vec::with_capacity(max_basis);
                let mut nw_basis = Vec::with_capacity(max_basis);
                for yj in y.iter().take(keep) {
                    let mut x = vec![0.0; n];
                    let mut hx = vec![0.0; n];
                    for (c, (vb, wb)) in yj.iter().zip(v_basis.iter().zip(&w_basis)) {
                        for i in 0..n {
                            x[i] += c * vb[i];
                            hx[i] += c * wb[i];
                        }
                    }
                    nv_basis.push(x);
                    nw_basis.push(hx);
                }
                v_basis = nv_basis;
                w_basis = nw_basis;
                proj = (0..v_basis.len())
                    .map(|i| {
                        (0..v_basis.len())
                            .map(|j| if i == j { theta[i] } else { 0.0 })
                            .collect()
                    })
                    .collect();
            }
        }
        // Krylov continuation
        let mut next = restart_dir
            .take()
            .unwrap_or_else(|| w_basis.last().unwrap().clone());
        let scale = norm(&next).max(1e-300);
        orthogonalize(&mut next, &v_basis);
        let mut nn = norm(&next);
        if nn < 1e-10 * scale {
            // invariant subspace: continue from a fresh direction
            next = linalg::pseudo_random(n, random_seed);
            random_seed += 1;
            orthogonalize(&mut next, &v_basis);
            nn = norm(&next);
        }
        next.iter_mut().for_each(|x| *x /= nn);
        push(next, &mut v_basis, &mut w_basis, &mut proj, &mut matvecs);
        since_check += 1;
    }
}

/// Dense below the threshold, Lanczos above.
pub fn lowest(
    m: &CsrMatrix,
    k: usize,
    cfg: &SolverConfig,
    seeds: &[Vec<f64>],
) -> Result<Eigenpairs> {
    if k > m.dim() {
        return Err(Error::TooManyEigenpairs {
            requested: k,
            dimension: m.dim(),
        });
    }
    if m.dim() <= cfg.dense_threshold {
        Ok(dense_lowest(m, k))
    } else {
        lanczos_lowest(m, k, cfg, seeds)
    }
}
