//! Gauss–Laguerre quadrature and radial integrals of 2D oscillator
//! eigenfunctions.
//!
//! Radial functions are `R_nm(r) = c_nm r^|m| L_n^|m|(r²) e^{-r²/2}` with
//! `c_nm = sqrt(2 n! / (n+|m|)!)`, normalised so that `∫ R² r dr = 1`; the full
//! orbital is `R_nm(r) e^{imθ} / sqrt(2π)`.

use crate::basis::Orbital;

/// Nodes and weights for `∫_0^∞ x^α f(x) e^{-x} dx ≈ Σ w_i f(x_i)`.
///
/// Weights are stored divided by `Γ(α+1)` so that they sum to one; multiply
/// by `exp(ln_gamma)` to recover the true integral.
#[derive(Clone, Debug)]
pub struct GaussLaguerre {
    pub alpha: u32,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub ln_gamma: f64,
}

fn ln_factorial(k: u32) -> f64 {
    (2..=k).map(|j| (j as f64).ln()).sum()
}

impl GaussLaguerre {
    /// Newton iteration on the Laguerre three-term recurrence, with the
    /// classic asymptotic starting guesses.
    pub fn new(order: usize, alpha: u32) -> Self {
        assert!(order >= 1, "quadrature order must be positive");
        let n = order;
        let a = alpha as f64;
        let nf = n as f64;
        let ln_gamma = ln_factorial(alpha);
        // ln[Γ(n+α)/Γ(n)] for integer α
        let ln_ratio: f64 = (0..alpha).map(|j| (nf + j as f64).ln()).sum();
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let mut z = 0.0f64;
        for i in 0..n {
            if i == 0 {
                z = (1.0 + a) * (3.0 + 0.92 * a) / (1.0 + 2.4 * nf + 1.8 * a);
            } else if i == 1 {
                z += (15.0 + 6.25 * a) / (1.0 + 0.9 * a + 2.5 * nf);
            } else {
                let ai = (i - 1) as f64;
                z += ((1.0 + 2.55 * ai) / (1.9 * ai) + 1.26 * ai * a / (1.0 + 3.5 * ai))
                    * (z - nodes[i - 2])
                    / (1.0 + 0.3 * a);
            }
            let mut pp = 0.0;
            let mut p2 = 0.0;
            for _ in 0..100 {
                let mut p1 = 1.0;
                p2 = 0.0;
                for j in 1..=n {
                    let jf = j as f64;
                    let p3 = p2;
                    p2 = p1;
                    p1 = ((2.0 * jf - 1.0 + a - z) * p2 - (jf - 1.0 + a) * p3) / jf;
                }
                pp = (nf * p1 - (nf + a) * p2) / z;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 * z.abs() {
                    break;
                }
            }
            nodes[i] = z;
            // true weight: -Γ(n+α)/Γ(n) / (pp n p2); divided by Γ(α+1)
            let sign = -(pp * nf * p2).signum();
            weights[i] = sign * (ln_ratio - ln_gamma - (pp * nf * p2).abs().ln()).exp();
        }
        GaussLaguerre {
            alpha,
            nodes,
            weights,
            ln_gamma,
        }
    }

    /// `∫ x^α f(x) e^{-x} dx / Γ(α+1)`.
    pub fn normalized_integral<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Associated Laguerre polynomial `L_n^α(x)` by upward recurrence.
pub fn laguerre(n: u32, alpha: f64, x: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => 1.0 + alpha - x,
        _ => {
            let mut p0 = 1.0;
            let mut p1 = 1.0 + alpha - x;
            for k in 1..n {
                let kf = k as f64;
                let p2 = ((2.0 * kf + 1.0 + alpha - x) * p1 - (kf + alpha) * p0) / (kf + 1.0);
                p0 = p1;
                p1 = p2;
            }
            p1
        }
    }
}

/// `ln c_nm` with `c_nm² = 2 n! / (n+|m|)!`.
pub fn ln_radial_norm(orb: &Orbital) -> f64 {
    let am = orb.m.unsigned_abs();
    0.5 * (2f64.ln() + ln_factorial(orb.n) - ln_factorial(orb.n + am))
}

/// Normalised radial function `R_nm(r)`.
pub fn radial(orb: &Orbital, r: f64) -> f64 {
    let am = orb.m.unsigned_abs();
    ln_radial_norm(orb).exp()
        * r.powi(am as i32)
        * laguerre(orb.n, am as f64, r * r)
        * (-0.5 * r * r).exp()
}

/// Evaluates radial integrals with Gauss–Laguerre rules cached per weight
/// exponent.
#[derive(Clone, Debug)]
pub struct RadialIntegrator {
    order: usize,
    rules: Vec<Option<GaussLaguerre>>,
}

impl RadialIntegrator {
    pub fn new(order: usize) -> Self {
        RadialIntegrator {
            order,
            rules: Vec::new(),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn rule(&mut self, alpha: u32) -> &GaussLaguerre {
        let idx = alpha as usize;
        if self.rules.len() <= idx {
            self.rules.resize(idx + 1, None);
        }
        let order = self.order;
        self.rules[idx].get_or_insert_with(|| GaussLaguerre::new(order, alpha))
    }

    /// `∫_0^∞ R_a R_b R_c R_d r dr`.
    pub fn quartic(&mut self, orbs: [&Orbital; 4]) -> f64 {
        let s: u32 = orbs.iter().map(|o| o.m.unsigned_abs()).sum();
        // Σ|m| is even whenever m_a + m_b = m_c + m_d; odd sums are only
        // reachable through angular-momentum violating quadruples.
        debug_assert!(s % 2 == 0);
        let alpha = s / 2;
        let ln_pref: f64 = orbs.iter().map(|o| ln_radial_norm(o)).sum::<f64>()
            - alpha as f64 * 2f64.ln()
            - 4f64.ln();
        let rule = self.rule(alpha);
        let body = rule.normalized_integral(|v| {
            let u = 0.5 * v;
            orbs.iter()
                .map(|o| laguerre(o.n, o.m.unsigned_abs() as f64, u))
                .product::<f64>()
        });
        (ln_pref + rule.ln_gamma).exp() * body
    }

    /// `∫_0^∞ R_a R_b r³ dr`.
    pub fn quadratic_r2(&mut self, a: &Orbital, b: &Orbital) -> f64 {
        let s = a.m.unsigned_abs() + b.m.unsigned_abs();
        debug_assert!(s % 2 == 0);
        let beta = s / 2 + 1;
        let ln_pref = ln_radial_norm(a) + ln_radial_norm(b) - 2f64.ln();
        let rule = self.rule(beta);
        let body = rule.normalized_integral(|u| {
            laguerre(a.n, a.m.unsigned_abs() as f64, u)
                * laguerre(b.n, b.m.unsigned_abs() as f64, u)
        });
        (ln_pref + rule.ln_gamma).exp() * body
    }
}
