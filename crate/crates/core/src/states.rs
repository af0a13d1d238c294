//! Many-body states and ground-state diagnostics: one-body density matrix,
//! natural orbitals, two-mode decomposition and angular-momentum moments.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::basis::{ManyBodyBasis, Orbital};
use crate::error::{Error, Result};
use crate::linalg;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Complex amplitudes over a [`ManyBodyBasis`].
#[derive(Clone, Debug)]
pub struct ManyBodyState {
    basis: Arc<ManyBodyBasis>,
    amps: Vec<Complex64>,
}

impl ManyBodyState {
    /// Normalises `amps`; fails on dimension mismatch or a zero vector.
    pub fn new(basis: Arc<ManyBodyBasis>, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                got: amps.len(),
            });
        }
        let mut s = ManyBodyState { basis, amps };
        let n = s.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidModel("cannot normalise a zero state".into()));
        }
        s.scale(1.0 / n);
        Ok(s)
    }

    pub fn from_real(basis: Arc<ManyBodyBasis>, v: &[f64]) -> Result<Self> {
        Self::new(basis, v.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Wraps amplitudes as-is (no normalisation).
    pub fn from_amplitudes_unchecked(basis: Arc<ManyBodyBasis>, amps: Vec<Complex64>) -> Self {
        debug_assert_eq!(amps.len(), basis.dim());
        ManyBodyState { basis, amps }
    }

    pub fn basis_state(basis: Arc<ManyBodyBasis>, i: usize) -> Self {
        let mut amps = vec![ZERO; basis.dim()];
        amps[i] = Complex64::new(1.0, 0.0);
        ManyBodyState { basis, amps }
    }

    pub fn basis(&self) -> &Arc<ManyBodyBasis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, s: f64) {
        for a in &mut self.amps {
            *a *= s;
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &ManyBodyState) -> Complex64 {
        linalg::cdot(&self.amps, &other.amps)
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &ManyBodyState) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Weight carried by each L block, keyed by L.
    pub fn block_populations(&self) -> Vec<(i32, f64)> {
        self.basis
            .blocks()
            .iter()
            .map(|b| {
                (
                    b.l,
                    self.amps[b.range.clone()]
                        .iter()
                        .map(|a| a.norm_sqr())
                        .sum(),
                )
            })
            .collect()
    }
}

/// m-parity sector of a natural orbital.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
    Mixed,
}

/// Eigen-decomposition of the one-body density matrix
/// `ρ_lk = ⟨a†_k a_l⟩`.
#[derive(Clone, Debug)]
pub struct NaturalOrbitals {
    orbitals: Vec<Orbital>,
    /// `ρ` as rows `l`, columns `k`.
    pub matrix: Vec<Vec<Complex64>>,
    /// Populations, descending.
    pub populations: Vec<f64>,
    /// `vectors[i][k]`: coefficient of bare orbital k in natural orbital i.
    pub vectors: Vec<Vec<Complex64>>,
    pub parities: Vec<Parity>,
}

impl NaturalOrbitals {
    pub fn orbitals(&self) -> &[Orbital] {
        &self.orbitals
    }

    pub fn trace(&self) -> f64 {
        (0..self.matrix.len()).map(|i| self.matrix[i][i].re).sum()
    }

    /// Largest population among orbitals of the given parity.
    pub fn leading_population(&self, parity: Parity) -> Option<f64> {
        self.populations
            .iter()
            .zip(&self.parities)
            .filter(|(_, &p)| p == parity)
            .map(|(&v, _)| v)
            .next()
    }

    /// Weight of bare orbital `orb` in natural orbital `i`.
    pub fn weight_on(&self, i: usize, orb: &Orbital) -> f64 {
        self.orbitals
            .iter()
            .position(|o| o == orb)
            .map(|k| self.vectors[i][k].norm_sqr())
            .unwrap_or(0.0)
    }

    /// Indices of `(ψ₁, ψ₂)`: the two most populated natural orbitals. When
    /// their populations agree within `degeneracy_tol`, ψ₁ is the one with
    /// more weight on the `(0,0)` orbital.
    pub fn leading_pair(&self, degeneracy_tol: f64) -> (usize, usize) {
        assert!(self.populations.len() >= 2, "need two natural orbitals");
        if (self.populations[0] - self.populations[1]).abs() <= degeneracy_tol {
            let s = Orbital::new(0, 0);
            if self.weight_on(1, &s) > self.weight_on(0, &s) {
                return (1, 0);
            }
        }
        (0, 1)
    }
}

fn m_parity(o: &Orbital) -> usize {
    o.m.rem_euclid(2) as usize
}

/// One-body density matrix and its natural orbitals.
pub fn spdm(state: &ManyBodyState) -> NaturalOrbitals {
    let basis = state.basis();
    let orbs = basis.orbitals();
    let k = orbs.len();
    let mut rho = vec![vec![ZERO; k]; k];
    let mut work = vec![0u8; k];
    for (i, &ci) in state.amplitudes().iter().enumerate() {
        if ci == ZERO {
            continue;
        }
        let occ = basis.occupations(i);
        for l in (0..k).filter(|&l| occ[l] > 0) {
            work.copy_from_slice(occ);
            let out = (work[l] as f64).sqrt();
            work[l] -= 1;
            for kk in 0..k {
                let inn = (work[kk] as f64 + 1.0).sqrt();
                work[kk] += 1;
                if let Some(j) = basis.index_of_occupations(&work) {
                    // ⟨a†_kk a_l⟩ = Σ conj(c_j) c_i ⟨j|a†_kk a_l|i⟩
                    rho[l][kk] += state.amplitudes()[j].conj() * ci * (out * inn);
                }
                work[kk] -= 1;
            }
        }
    }

    // Split by m parity when the state has no parity-mixing coherences.
    let mixing: f64 = (0..k)
        .flat_map(|a| (0..k).map(move |b| (a, b)))
        .filter(|&(a, b)| m_parity(&orbs[a]) != m_parity(&orbs[b]))
        .map(|(a, b)| rho[a][b].norm())
        .fold(0.0, f64::max);
    let mut found: Vec<(f64, Vec<Complex64>, Parity)> = Vec::new();
    if mixing < 1e-12 {
        for (sector, parity) in [(0usize, Parity::Even), (1, Parity::Odd)] {
            let idx: Vec<usize> = (0..k).filter(|&a| m_parity(&orbs[a]) == sector).collect();
            if idx.is_empty() {
                continue;
            }
            let sub: Vec<Vec<Complex64>> = idx
                .iter()
                .map(|&a| idx.iter().map(|&b| rho[a][b]).collect())
                .collect();
            let (vals, vecs) = linalg::hermitian_eigen(&sub);
            for (v, u) in vals.into_iter().zip(vecs) {
                let mut full = vec![ZERO; k];
                for (p, &a) in idx.iter().enumerate() {
                    full[a] = u[p];
                }
                found.push((v, full, parity));
            }
        }
    } else {
        let (vals, vecs) = linalg::hermitian_eigen(&rho);
        for (v, u) in vals.into_iter().zip(vecs) {
            found.push((v, u, Parity::Mixed));
        }
    }
    found.sort_by(|a, b| b.0.total_cmp(&a.0));
    NaturalOrbitals {
        orbitals: orbs.to_vec(),
        matrix: rho,
        populations: found.iter().map(|f| f.0).collect(),
        vectors: found.iter().map(|f| f.1.clone()).collect(),
        parities: found.iter().map(|f| f.2).collect(),
    }
}

/// Expansion of a state over two-mode Fock states `|N-2n⟩|2n⟩`.
#[derive(Clone, Debug)]
pub struct TwoModeDecomposition {
    /// `C_n`, `n = 0..=N/2`.
    pub coefficients: Vec<Complex64>,
    /// `P_n = |C_n|²`.
    pub probabilities: Vec<f64>,
    /// `Σ_n P_n`: squared overlap with the normalised two-mode projection.
    pub fidelity: f64,
    /// Largest overlap with an odd occupation of ψ₂; nonzero values point to
    /// a parity leak.
    pub odd_sector_max: f64,
    pub mode_indices: (usize, usize),
}

impl TwoModeDecomposition {
    pub fn parity_leak(&self) -> bool {
        self.odd_sector_max > 1e-8
    }
}

/// Populations closer than this (in particles) count as degenerate when
/// choosing ψ₁.
pub const DEFAULT_DEGENERACY_TOL: f64 = 0.05;

/// `C_n = ⟨N-2n, 2n|Ψ⟩` over the two leading natural orbitals of `modes`.
pub fn two_mode_project(
    state: &ManyBodyState,
    modes: &NaturalOrbitals,
) -> Result<TwoModeDecomposition> {
    let (i1, i2) = modes.leading_pair(DEFAULT_DEGENERACY_TOL);
    let mut d = two_mode_project_with(state, &modes.vectors[i1], &modes.vectors[i2])?;
    d.mode_indices = (i1, i2);
    Ok(d)
}

type Sparse = HashMap<Box<[u8]>, Complex64>;

/// Apply `b = Σ_k conj(u_k) a_k`.
fn annihilate(v: &Sparse, u: &[Complex64]) -> Sparse {
    let mut out: Sparse = HashMap::with_capacity(v.len());
    for (occ, &amp) in v {
        for (k, &uk) in u.iter().enumerate() {
            if occ[k] == 0 || uk == ZERO {
                continue;
            }
            let mut o = occ.clone();
            let f = (o[k] as f64).sqrt();
            o[k] -= 1;
            *out.entry(o).or_insert(ZERO) += uk.conj() * amp * f;
        }
    }
    out
}

/// Same as [`two_mode_project`] with explicit mode vectors over the basis
/// orbitals.
pub fn two_mode_project_with(
    state: &ManyBodyState,
    psi1: &[Complex64],
    psi2: &[Complex64],
) -> Result<TwoModeDecomposition> {
    let basis = state.basis();
    let n = basis.spec().n_particles;
    if n % 2 != 0 {
        return Err(Error::OddParticleNumber(n));
    }
    let overlap = linalg::cdot(psi1, psi2).norm();
    if overlap > 1e-8 {
        return Err(Error::NonOrthogonalModes(overlap));
    }
    let start: Sparse = state
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(_, a)| **a != ZERO)
        .map(|(i, &a)| (basis.occupations(i).to_vec().into_boxed_slice(), a))
        .collect();

    let ln_fact = |k: usize| (2..=k).map(|j| (j as f64).ln()).sum::<f64>();
    // x_b = b2^b Ψ
    let mut powers = Vec::with_capacity(n + 1);
    powers.push(start);
    for b in 1..=n {
        let next = annihilate(&powers[b - 1], psi2);
        powers.push(next);
    }
    let mut coefficients = Vec::with_capacity(n / 2 + 1);
    let mut odd_sector_max: f64 = 0.0;
    for b in 0..=n {
        let a = n - b;
        let mut v = powers[b].clone();
        for _ in 0..a {
            v = annihilate(&v, psi1);
        }
        let vac = v.values().fold(ZERO, |acc, &x| acc + x);
        let c = vac * (-0.5 * (ln_fact(a) + ln_fact(b))).exp();
        if b % 2 == 0 {
            coefficients.push(c);
        } else {
            odd_sector_max = odd_sector_max.max(c.norm());
        }
    }
    let probabilities: Vec<f64> = coefficients.iter().map(|c| c.norm_sqr()).collect();
    let fidelity = probabilities.iter().sum();
    Ok(TwoModeDecomposition {
        coefficients,
        probabilities,
        fidelity,
        odd_sector_max,
        mode_indices: (0, 1),
    })
}

/// Von Neumann entropy (bits) of the renormalised two-mode distribution.
pub fn mode_entropy(decomp: &TwoModeDecomposition) -> f64 {
    let total: f64 = decomp.probabilities.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    decomp
        .probabilities
        .iter()
        .map(|&p| p / total)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum()
}

/// `(⟨L⟩, ⟨L²⟩, ΔL)`.
pub fn angular_momentum_moments(state: &ManyBodyState) -> (f64, f64, f64) {
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for b in state.basis().blocks() {
        let w: f64 = state.amplitudes()[b.range.clone()]
            .iter()
            .map(|a| a.norm_sqr())
            .sum();
        let l = b.l as f64;
        m1 += w * l;
        m2 += w * l * l;
    }
    let total = state.norm().powi(2);
    m1 /= total;
    m2 /= total;
    (m1, m2, (m2 - m1 * m1).max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_basis, lookup, FockState, TruncationSpec};
    use approx::assert_relative_eq;

    fn basis(n: usize, lmax: u32) -> Arc<ManyBodyBasis> {
        Arc::new(build_basis(&TruncationSpec::new(n, lmax, 2, true).unwrap()).unwrap())
    }

    #[test]
    fn condensed_state_has_single_population() {
        let b = basis(4, 8);
        let i = lookup(&b, &FockState::from_pairs([(Orbital::new(0, 2), 4)])).unwrap();
        let s = ManyBodyState::basis_state(b, i);
        let no = spdm(&s);
        assert_relative_eq!(no.populations[0], 4.0, epsilon = 1e-12);
        assert!(no.populations[1..].iter().all(|p| p.abs() < 1e-12));
        assert_relative_eq!(no.weight_on(0, &Orbital::new(0, 2)), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn moments_of_block_states() {
        let b = basis(4, 8);
        let l0 = b.block_of_l(0).unwrap().range.start;
        let l4 = b.block_of_l(4).unwrap().range.start;
        let s = ManyBodyState::basis_state(Arc::clone(&b), l4);
        let (m, m2, dl) = angular_momentum_moments(&s);
        assert_eq!((m, m2, dl), (4.0, 16.0, 0.0));
        let mut amps = vec![ZERO; b.dim()];
        amps[l0] = Complex64::new(1.0, 0.0);
        amps[l4] = Complex64::new(0.0, 1.0);
        let s = ManyBodyState::new(b, amps).unwrap();
        let (m, m2, dl) = angular_momentum_moments(&s);
        assert_relative_eq!(m, 2.0, epsilon = 1e-12);
        assert_relative_eq!(m2, 8.0, epsilon = 1e-12);
        assert_relative_eq!(dl, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn entropy_limits() {
        let mk = |p: Vec<f64>| TwoModeDecomposition {
            coefficients: p.iter().map(|x| Complex64::new(x.sqrt(), 0.0)).collect(),
            fidelity: p.iter().sum(),
            probabilities: p,
            odd_sector_max: 0.0,
            mode_indices: (0, 1),
        };
        assert_eq!(mode_entropy(&mk(vec![0.0, 0.7, 0.0])), 0.0);
        assert_relative_eq!(
            mode_entropy(&mk(vec![0.5, 0.0, 0.0, 0.5])),
            1.0,
            epsilon = 1e-14
        );
        assert_relative_eq!(
            mode_entropy(&mk(vec![0.25, 0.0, 0.25])),
            1.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn pure_two_mode_fock_state() {
        let b = basis(4, 8);
        let i = lookup(&b, &FockState::from_pairs([(Orbital::new(0, 0), 4)])).unwrap();
        let s = ManyBodyState::basis_state(Arc::clone(&b), i);
        let k = b.orbitals().len();
        let mut psi1 = vec![ZERO; k];
        let mut psi2 = vec![ZERO; k];
        psi1[b.orbital_index(&Orbital::new(0, 0)).unwrap()] = Complex64::new(1.0, 0.0);
        psi2[b.orbital_index(&Orbital::new(0, 1)).unwrap()] = Complex64::new(1.0, 0.0);
        let d = two_mode_project_with(&s, &psi1, &psi2).unwrap();
        assert_relative_eq!(d.coefficients[0].re, 1.0, epsilon = 1e-14);
        assert!(d.probabilities[1..].iter().all(|&p| p < 1e-28));
        assert_relative_eq!(d.fidelity, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn rejects_odd_n_and_overlapping_modes() {
        let b = basis(3, 7);
        let s = ManyBodyState::basis_state(Arc::clone(&b), 0);
        let k = b.orbitals().len();
        let e = |j: usize| {
            let mut v = vec![ZERO; k];
            v[j] = Complex64::new(1.0, 0.0);
            v
        };
        assert!(matches!(
            two_mode_project_with(&s, &e(0), &e(1)),
            Err(Error::OddParticleNumber(3))
        ));
        let b = basis(2, 4);
        let s = ManyBodyState::basis_state(Arc::clone(&b), 0);
        assert!(matches!(
            two_mode_project_with(&s, &e(0), &e(0)),
            Err(Error::NonOrthogonalModes(_))
        ));
    }

    #[test]
    fn basis_state_fock_superposition_on_two_modes() {
        // (|2,0⟩ + |0,2⟩)/√2 in orbitals (0,0) and (0,1) for N = 2
        let b = basis(2, 4);
        let a = lookup(&b, &FockState::from_pairs([(Orbital::new(0, 0), 2)])).unwrap();
        let c = lookup(&b, &FockState::from_pairs([(Orbital::new(0, 1), 2)])).unwrap();
        let mut amps = vec![ZERO; b.dim()];
        amps[a] = Complex64::new(1.0, 0.0);
        amps[c] = Complex64::new(1.0, 0.0);
        let s = ManyBodyState::new(Arc::clone(&b), amps).unwrap();
        let no = spdm(&s);
        assert_relative_eq!(no.trace(), 2.0, epsilon = 1e-12);
        assert_relative_eq!(no.populations[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(no.populations[1], 1.0, epsilon = 1e-12);
        let d = two_mode_project(&s, &no).unwrap();
        assert_eq!(
            d.mode_indices.0,
            if no.weight_on(0, &Orbital::new(0, 0)) > 0.5 {
                0
            } else {
                1
            }
        );
        assert_relative_eq!(d.probabilities[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(d.probabilities[1], 0.5, epsilon = 1e-12);
        assert_relative_eq!(mode_entropy(&d), 1.0, epsilon = 1e-12);
        assert!(!d.parity_leak());
    }
}
