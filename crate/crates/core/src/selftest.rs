//! Oracle checks runnable from the command line.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::basis::{build_basis, enumerate_orbitals, Orbital, TruncationSpec};
use crate::dynamics::{
    free_evolution, integrate_in_frame, IntegratorConfig, IsotropicFrame, RampSchedule,
};
use crate::eigensolver::{dense_lowest, lanczos_lowest, SolverConfig};
use crate::hamiltonian::{anisotropy_element, interaction_element, HamiltonianModel, ModelParams};
use crate::linalg;
use crate::states::ManyBodyState;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Largest deviation seen.
    pub error: f64,
    pub tolerance: f64,
}

fn ln_factorial(k: u32) -> f64 {
    (2..=k).map(|j| (j as f64).ln()).sum()
}

/// Generalised Laguerre polynomial by its explicit sum.
fn laguerre_sum(n: u32, alpha: u32, x: f64) -> f64 {
    (0..=n)
        .map(|k| {
            let binom =
                (ln_factorial(n + alpha) - ln_factorial(n - k) - ln_factorial(alpha + k)).exp();
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * binom * x.powi(k as i32) / (ln_factorial(k)).exp()
        })
        .sum()
}

/// Radial part of a normalised oscillator orbital, `∫ R² r dr = 1`.
fn radial_oracle(o: &Orbital, r: f64) -> f64 {
    let am = o.m.unsigned_abs();
    let norm = (2.0 * (ln_factorial(o.n) - ln_factorial(o.n + am)).exp()).sqrt();
    norm * r.powi(am as i32) * laguerre_sum(o.n, am, r * r) * (-0.5 * r * r).exp()
}

/// Composite Simpson rule on `[0, 12]`.
fn simpson(f: impl Fn(f64) -> f64) -> f64 {
    let n = 6000;
    let h = 12.0 / n as f64;
    let mut s = f(0.0) + f(12.0);
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Interaction elements for `m ≤ 3`, `n ≤ 1` against a Simpson-rule radial
/// integral; the angular integral is exact.
pub fn check_interaction_quadrature() -> Check {
    let orbs: Vec<Orbital> = (0..=1u32)
        .flat_map(|n| (0..=3i32).map(move |m| Orbital::new(n, m)))
        .collect();
    let mut worst: f64 = 0.0;
    for a in &orbs {
        for b in &orbs {
            for c in &orbs {
                for d in &orbs {
                    if a.m + b.m != c.m + d.m {
                        continue;
                    }
                    let oracle = simpson(|r| {
                        r * radial_oracle(a, r)
                            * radial_oracle(b, r)
                            * radial_oracle(c, r)
                            * radial_oracle(d, r)
                    }) / (2.0 * std::f64::consts::PI);
                    worst = worst.max((interaction_element(a, b, c, d) - oracle).abs());
                }
            }
        }
    }
    let mut aniso: f64 = 0.0;
    for a in &orbs {
        for b in &orbs {
            if (a.m - b.m).abs() != 2 {
                continue;
            }
            // 2(x² − y²) = r²(e^{2iθ} + e^{−2iθ}); angular factor 1
            let oracle = simpson(|r| r * r * r * radial_oracle(a, r) * radial_oracle(b, r));
            aniso = aniso.max((anisotropy_element(a, b) - oracle).abs());
        }
    }
    let error = worst.max(aniso);
    Check {
        name: "interaction and anisotropy quadrature",
        passed: error < 1e-8,
        error,
        tolerance: 1e-8,
    }
}

fn count_states(orbs: &[Orbital], spec: &TruncationSpec) -> usize {
    fn rec(orbs: &[Orbital], left: usize, l: i64, landau: u32, spec: &TruncationSpec) -> usize {
        let Some((o, rest)) = orbs.split_first() else {
            let ok_l = l >= 0 && l <= spec.l_max as i64 && (!spec.even_parity || l % 2 == 0);
            return usize::from(left == 0 && ok_l && 1 + landau <= spec.n_ll_max);
        };
        (0..=left)
            .map(|k| {
                rec(
                    rest,
                    left - k,
                    l + k as i64 * o.m as i64,
                    landau + k as u32 * o.landau_excitation(),
                    spec,
                )
            })
            .sum()
    }
    rec(orbs, spec.n_particles, 0, 0, spec)
}

/// Basis dimensions against exhaustive enumeration of occupations.
pub fn check_basis_counts() -> Check {
    let mut mismatches = 0.0;
    for n in 1..=4 {
        for extra in [2, 4] {
            let spec = TruncationSpec::new(n, n as u32 + extra, 2, true).unwrap();
            let orbs = enumerate_orbitals(&spec);
            let dim = build_basis(&spec).map(|b| b.dim()).unwrap_or(0);
            if dim != count_states(&orbs, &spec) {
                mismatches += 1.0;
            }
        }
    }
    Check {
        name: "basis dimensions",
        passed: mismatches == 0.0,
        error: mismatches,
        tolerance: 0.0,
    }
}

fn small_model(n: usize, a: f64) -> HamiltonianModel {
    let spec = TruncationSpec::standard(n).unwrap();
    let basis = Arc::new(build_basis(&spec).unwrap());
    HamiltonianModel::new(ModelParams::from_gn6(1.0, a, spec).unwrap(), basis).unwrap()
}

/// Lanczos against a dense decomposition.
pub fn check_dense_vs_sparse() -> Check {
    let m = small_model(4, 0.03);
    let h = m.assemble(0.84, 1.0);
    let dense = dense_lowest(&h.matrix, 4);
    let cfg = SolverConfig {
        dense_threshold: 0,
        ..SolverConfig::default()
    };
    let error = match lanczos_lowest(&h.matrix, 4, &cfg, &[]) {
        Ok(l) => l
            .values
            .iter()
            .zip(&dense.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max),
        Err(_) => f64::INFINITY,
    };
    Check {
        name: "lanczos vs dense",
        passed: error < 1e-9,
        error,
        tolerance: 1e-9,
    }
}

/// N = 2 evolution at fixed Ω against the dense spectral exponential.
pub fn check_tdse_oracle() -> Check {
    let m = small_model(2, 0.03);
    let frame = IsotropicFrame::new(&m).unwrap();
    let psi = ManyBodyState::from_real(Arc::clone(m.basis()), &linalg::pseudo_random(m.dim(), 11))
        .unwrap();
    let t = 20.0;
    let sched = RampSchedule::hold(0.8, t).unwrap();
    let dense = dense_lowest(&m.assemble(0.8, 1.0).matrix, m.dim());
    let mut exact = vec![Complex64::new(0.0, 0.0); m.dim()];
    for (e, v) in dense.values.iter().zip(&dense.vectors) {
        let c: Complex64 = v
            .iter()
            .zip(psi.amplitudes())
            .map(|(a, b)| b * *a)
            .sum::<Complex64>()
            * Complex64::from_polar(1.0, -e * t);
        for (x, a) in exact.iter_mut().zip(v) {
            *x += c * *a;
        }
    }
    let exact = ManyBodyState::from_amplitudes_unchecked(Arc::clone(m.basis()), exact);
    let rk = integrate_in_frame(&frame, None, &psi, &sched, &IntegratorConfig::default())
        .map(|r| 1.0 - r.state.fidelity(&exact))
        .unwrap_or(f64::INFINITY);
    let cheb = free_evolution(&psi, &m, 0.8, t, &SolverConfig::default())
        .map(|s| 1.0 - s.fidelity(&exact))
        .unwrap_or(f64::INFINITY);
    let error = rk.abs().max(cheb.abs());
    Check {
        name: "time evolution vs matrix exponential",
        passed: error < 1e-6,
        error,
        tolerance: 1e-6,
    }
}

pub fn run_all() -> Vec<Check> {
    vec![
        check_interaction_quadrature(),
        check_basis_counts(),
        check_dense_vs_sparse(),
        check_tdse_oracle(),
    ]
}
