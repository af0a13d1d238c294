//! Rotating-frame Hamiltonian of `N` contact-interacting bosons in a weakly
//! anisotropic 2D harmonic trap, in trap units.
//!
//! ```text
//! H = Σ_i [ h_osc(i) + 2A (x_i² - y_i²) - Ω L_zi ] + g Σ_{i<j} δ(r_i - r_j)
//! ```
//!
//! In second quantisation the contact term is
//! `(g/2) Σ V_abcd a†_a a†_b a_c a_d` with `V_abcd = ∫ φ*_a φ*_b φ_c φ_d`.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::basis::{ManyBodyBasis, Orbital, TruncationSpec};
use crate::error::{Error, Result};
use crate::quadrature::RadialIntegrator;
use crate::sparse::CsrMatrix;
use crate::states::ManyBodyState;

/// Gauss–Laguerre order used for all radial integrals.
pub const DEFAULT_QUADRATURE_ORDER: usize = 24;

/// Format version of the interaction-tensor cache file.
pub const TENSOR_CACHE_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Dimensionless contact coupling.
    pub g: f64,
    /// Trap anisotropy strength `A`.
    pub anisotropy: f64,
    pub spec: TruncationSpec,
}

impl ModelParams {
    pub fn new(g: f64, anisotropy: f64, spec: TruncationSpec) -> Result<Self> {
        let p = ModelParams {
            g,
            anisotropy,
            spec,
        };
        p.validate()?;
        Ok(p)
    }

    /// Parametrise the interaction by `gN/6`.
    pub fn from_gn6(gn6: f64, anisotropy: f64, spec: TruncationSpec) -> Result<Self> {
        Self::new(gn6 * 6.0 / spec.n_particles as f64, anisotropy, spec)
    }

    pub fn gn6(&self) -> f64 {
        self.g * self.spec.n_particles as f64 / 6.0
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if !(self.g >= 0.0) || !self.g.is_finite() {
            return Err(Error::InvalidModel(format!(
                "g = {} must be finite and >= 0",
                self.g
            )));
        }
        if !(0.0..1.0).contains(&self.anisotropy) {
            return Err(Error::InvalidModel(format!(
                "anisotropy A = {} must lie in [0, 1)",
                self.anisotropy
            )));
        }
        Ok(())
    }

    /// Stable content hash over every numerically relevant field.
    pub fn hash_hex(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.g.to_le_bytes());
        h.update(self.anisotropy.to_le_bytes());
        h.update(spec_bytes(&self.spec));
        hex(&h.finalize())
    }
}

pub(crate) fn spec_bytes(spec: &TruncationSpec) -> Vec<u8> {
    let mut v = Vec::new();
    v.extend((spec.n_particles as u64).to_le_bytes());
    v.extend(spec.l_max.to_le_bytes());
    v.extend(spec.n_ll_max.to_le_bytes());
    v.push(spec.even_parity as u8);
    v
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// `2n + |m| + 1 - Ω m`.
pub fn single_particle_energy(orb: &Orbital, omega: f64) -> f64 {
    orb.energy_at_rest() - omega * orb.m as f64
}

/// `∫ φ*_1 φ*_2 φ_3 φ_4 d²r` over normalised oscillator orbitals.
pub fn interaction_element(k1: &Orbital, k2: &Orbital, k3: &Orbital, k4: &Orbital) -> f64 {
    let mut integ = RadialIntegrator::new(DEFAULT_QUADRATURE_ORDER);
    interaction_element_with(&mut integ, k1, k2, k3, k4)
}

fn interaction_element_with(
    integ: &mut RadialIntegrator,
    k1: &Orbital,
    k2: &Orbital,
    k3: &Orbital,
    k4: &Orbital,
) -> f64 {
    if k1.m + k2.m != k3.m + k4.m {
        return 0.0;
    }
    integ.quartic([k1, k2, k3, k4]) / (2.0 * std::f64::consts::PI)
}

/// Closed form of [`interaction_element`] inside the lowest Landau level.
pub fn lll_interaction_element(m1: u32, m2: u32, m3: u32, m4: u32) -> f64 {
    if m1 + m2 != m3 + m4 {
        return 0.0;
    }
    let lf = |k: u32| (2..=k).map(|j| (j as f64).ln()).sum::<f64>();
    let s = m1 + m2;
    let ln = lf(s) - s as f64 * 2f64.ln() - 0.5 * (lf(m1) + lf(m2) + lf(m3) + lf(m4));
    ln.exp() / (2.0 * std::f64::consts::PI)
}

/// `⟨k| 2(x² - y²) |l⟩`.
pub fn anisotropy_element(k: &Orbital, l: &Orbital) -> f64 {
    let mut integ = RadialIntegrator::new(DEFAULT_QUADRATURE_ORDER);
    anisotropy_element_with(&mut integ, k, l)
}

fn anisotropy_element_with(integ: &mut RadialIntegrator, k: &Orbital, l: &Orbital) -> f64 {
    if (k.m - l.m).abs() != 2 {
        return 0.0;
    }
    integ.quadratic_r2(k, l)
}

type Quad = [u16; 4];

fn canonical(a: u16, b: u16, c: u16, d: u16) -> Quad {
    let p = if a <= b { (a, b) } else { (b, a) };
    let q = if c <= d { (c, d) } else { (d, c) };
    if p <= q {
        [p.0, p.1, q.0, q.1]
    } else {
        [q.0, q.1, p.0, p.1]
    }
}

/// Contact-interaction elements over the orbitals of a truncation, one entry
/// per symmetry class.
#[derive(Clone, Debug, PartialEq)]
pub struct InteractionTensor {
    orbitals: Vec<Orbital>,
    quadrature_order: usize,
    elements: HashMap<Quad, f64>,
}

impl InteractionTensor {
    pub fn compute(orbitals: &[Orbital], quadrature_order: usize) -> Self {
        let mut integ = RadialIntegrator::new(quadrature_order);
        let mut by_m: HashMap<i32, Vec<(u16, u16)>> = HashMap::new();
        for a in 0..orbitals.len() {
            for b in a..orbitals.len() {
                by_m.entry(orbitals[a].m + orbitals[b].m)
                    .or_default()
                    .push((a as u16, b as u16));
            }
        }
        let mut elements = HashMap::new();
        for pairs in by_m.values() {
            for (i, &(a, b)) in pairs.iter().enumerate() {
                for &(c, d) in &pairs[i..] {
                    let v = interaction_element_with(
                        &mut integ,
                        &orbitals[a as usize],
                        &orbitals[b as usize],
                        &orbitals[c as usize],
                        &orbitals[d as usize],
                    );
                    elements.insert(canonical(a, b, c, d), v);
                }
            }
        }
        InteractionTensor {
            orbitals: orbitals.to_vec(),
            quadrature_order,
            elements,
        }
    }

    pub fn orbitals(&self) -> &[Orbital] {
        &self.orbitals
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Element by orbital positions; zero for angular-momentum violating
    /// quadruples.
    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.elements
            .get(&canonical(a as u16, b as u16, c as u16, d as u16))
            .copied()
            .unwrap_or(0.0)
    }

    fn cache_key(spec: &TruncationSpec, quadrature_order: usize) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(spec_bytes(spec));
        h.update((quadrature_order as u64).to_le_bytes());
        h.update(TENSOR_CACHE_VERSION.to_le_bytes());
        h.finalize().into()
    }

    /// Binary layout: magic, version, key, order, orbital list, entries.
    pub fn save(&self, spec: &TruncationSpec, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        buf.extend_from_slice(b"RGIT");
        buf.extend(TENSOR_CACHE_VERSION.to_le_bytes());
        buf.extend(Self::cache_key(spec, self.quadrature_order));
        buf.extend((self.quadrature_order as u64).to_le_bytes());
        buf.extend((self.orbitals.len() as u64).to_le_bytes());
        for o in &self.orbitals {
            buf.extend(o.n.to_le_bytes());
            buf.extend(o.m.to_le_bytes());
        }
        let mut entries: Vec<(&Quad, &f64)> = self.elements.iter().collect();
        entries.sort_by(|a, b| a.0.cmp(b.0));
        buf.extend((entries.len() as u64).to_le_bytes());
        for (q, v) in entries {
            for x in q {
                buf.extend(x.to_le_bytes());
            }
            buf.extend(v.to_le_bytes());
        }
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::File::create(path)?.write_all(&buf)?;
        Ok(())
    }

    /// Refuses files written by another format version or for another
    /// truncation / quadrature order.
    pub fn load(spec: &TruncationSpec, quadrature_order: usize, path: &Path) -> Result<Self> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        let mut r = Reader { buf: &buf, pos: 0 };
        if r.take(4)? != b"RGIT" {
            return Err(Error::Cache("bad magic".into()));
        }
        let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
        if version != TENSOR_CACHE_VERSION {
            return Err(Error::Cache(format!(
                "version {version} does not match {TENSOR_CACHE_VERSION}"
            )));
        }
        if r.take(32)? != Self::cache_key(spec, quadrature_order) {
            return Err(Error::Cache("key mismatch".into()));
        }
        let order = r.u64()? as usize;
        let n_orb = r.u64()? as usize;
        let mut orbitals = Vec::with_capacity(n_orb);
        for _ in 0..n_orb {
            let n = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
            let m = i32::from_le_bytes(r.take(4)?.try_into().unwrap());
            orbitals.push(Orbital::new(n, m));
        }
        let count = r.u64()? as usize;
        let mut elements = HashMap::with_capacity(count);
        for _ in 0..count {
            let mut q = [0u16; 4];
            for x in q.iter_mut() {
                *x = u16::from_le_bytes(r.take(2)?.try_into().unwrap());
            }
            let v = f64::from_le_bytes(r.take(8)?.try_into().unwrap());
            elements.insert(q, v);
        }
        if r.pos != buf.len() {
            return Err(Error::Cache("trailing bytes".into()));
        }
        Ok(InteractionTensor {
            orbitals,
            quadrature_order: order,
            elements,
        })
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Cache("truncated file".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Single-particle matrix of `2(x² - y²)` over a set of orbitals.
#[derive(Clone, Debug, PartialEq)]
pub struct AnisotropyMatrix {
    /// `(k, l, value)` with `|m_k - m_l| = 2`, both orderings stored.
    entries: Vec<(usize, usize, f64)>,
    dim: usize,
}

impl AnisotropyMatrix {
    pub fn compute(orbitals: &[Orbital], quadrature_order: usize) -> Self {
        let mut integ = RadialIntegrator::new(quadrature_order);
        let mut entries = Vec::new();
        for (k, ok) in orbitals.iter().enumerate() {
            for (l, ol) in orbitals.iter().enumerate() {
                let v = anisotropy_element_with(&mut integ, ok, ol);
                if v != 0.0 {
                    entries.push((k, l, v));
                }
            }
        }
        AnisotropyMatrix {
            entries,
            dim: orbitals.len(),
        }
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.entries
            .iter()
            .find(|e| e.0 == k && e.1 == l)
            .map(|e| e.2)
            .unwrap_or(0.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Nonzero `(k, v)` pairs in column `l`.
    fn column(&self, l: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries
            .iter()
            .filter(move |e| e.1 == l)
            .map(|e| (e.0, e.2))
    }
}

/// Many-body Hamiltonian split into Ω- and A-independent pieces so that it
/// can be instantiated cheaply at any rotation frequency and anisotropy
/// scale.
#[derive(Clone, Debug)]
pub struct HamiltonianModel {
    params: ModelParams,
    basis: Arc<ManyBodyBasis>,
    tensor: InteractionTensor,
    aniso: AnisotropyMatrix,
    /// trap energies + g·contact
    isotropic: CsrMatrix,
    /// one-body `Σ 2(x² - y²)`, without the factor A
    quadrupole: CsrMatrix,
    l_values: Vec<f64>,
}

impl HamiltonianModel {
    pub fn new(params: ModelParams, basis: Arc<ManyBodyBasis>) -> Result<Self> {
        let tensor = InteractionTensor::compute(basis.orbitals(), DEFAULT_QUADRATURE_ORDER);
        Self::with_tensor(params, basis, tensor)
    }

    /// Build from the tensor cache at `path`, computing and storing it on a
    /// miss.
    pub fn with_tensor_cache(
        params: ModelParams,
        basis: Arc<ManyBodyBasis>,
        path: &Path,
    ) -> Result<Self> {
        let tensor = match InteractionTensor::load(&params.spec, DEFAULT_QUADRATURE_ORDER, path) {
            Ok(t) if t.orbitals() == basis.orbitals() => t,
            Ok(_) | Err(_) => {
                let t = InteractionTensor::compute(basis.orbitals(), DEFAULT_QUADRATURE_ORDER);
                t.save(&params.spec, path)?;
                t
            }
        };
        Self::with_tensor(params, basis, tensor)
    }

    pub fn with_tensor(
        params: ModelParams,
        basis: Arc<ManyBodyBasis>,
        tensor: InteractionTensor,
    ) -> Result<Self> {
        params.validate()?;
        if basis.spec() != &params.spec || tensor.orbitals() != basis.orbitals() {
            return Err(Error::BasisMismatch);
        }
        let aniso = AnisotropyMatrix::compute(basis.orbitals(), DEFAULT_QUADRATURE_ORDER);
        let isotropic = build_isotropic(&basis, &tensor, params.g)?;
        let quadrupole = build_one_body(&basis, &aniso)?;
        let l_values = basis.l_values().iter().map(|&l| l as f64).collect();
        Ok(HamiltonianModel {
            params,
            basis,
            tensor,
            aniso,
            isotropic,
            quadrupole,
            l_values,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn basis(&self) -> &Arc<ManyBodyBasis> {
        &self.basis
    }

    pub fn tensor(&self) -> &InteractionTensor {
        &self.tensor
    }

    pub fn anisotropy_matrix(&self) -> &AnisotropyMatrix {
        &self.aniso
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// Ω-independent isotropic part (trap + contact).
    pub fn isotropic_part(&self) -> &CsrMatrix {
        &self.isotropic
    }

    /// Many-body `Σ_i 2(x_i² - y_i²)`.
    pub fn quadrupole_part(&self) -> &CsrMatrix {
        &self.quadrupole
    }

    pub fn l_values(&self) -> &[f64] {
        &self.l_values
    }

    /// `H(Ω) = H_iso - Ω L + scale·A·Q`.
    pub fn assemble(&self, omega: f64, anisotropy_scale: f64) -> SparseHamiltonian {
        let a_eff = anisotropy_scale * self.params.anisotropy;
        let diag: Vec<f64> = self.l_values.iter().map(|&l| -omega * l).collect();
        let matrix = self
            .isotropic
            .linear_combination(1.0, &self.quadrupole, a_eff, Some(&diag));
        SparseHamiltonian {
            matrix,
            omega,
            anisotropy_scale,
            effective_anisotropy: a_eff,
            blocks: self
                .basis
                .blocks()
                .iter()
                .map(|b| (b.l, b.range.clone()))
                .collect(),
        }
    }

    /// `(H_iso - Ω L + a·Q) v` without materialising the matrix.
    pub fn apply_at(
        &self,
        omega: f64,
        a_eff: f64,
        v: &[num_complex::Complex64],
        out: &mut [num_complex::Complex64],
    ) {
        self.isotropic.matvec_complex(v, out);
        for ((o, x), &l) in out.iter_mut().zip(v).zip(&self.l_values) {
            *o -= x * (omega * l);
        }
        if a_eff != 0.0 {
            let mut tmp = vec![num_complex::Complex64::new(0.0, 0.0); v.len()];
            self.quadrupole.matvec_complex(v, &mut tmp);
            for (o, t) in out.iter_mut().zip(&tmp) {
                *o += t * a_eff;
            }
        }
    }
}

/// Assemble `H(Ω)` from scratch.
pub fn assemble(
    params: &ModelParams,
    basis: &Arc<ManyBodyBasis>,
    omega: f64,
    anisotropy_scale: f64,
) -> Result<SparseHamiltonian> {
    let model = HamiltonianModel::new(*params, Arc::clone(basis))?;
    Ok(model.assemble(omega, anisotropy_scale))
}

fn build_isotropic(basis: &ManyBodyBasis, tensor: &InteractionTensor, g: f64) -> Result<CsrMatrix> {
    let orbs = basis.orbitals();
    let k = orbs.len();
    let e0: Vec<f64> = orbs.iter().map(Orbital::energy_at_rest).collect();
    let mut pairs_by_m: HashMap<i32, Vec<(usize, usize)>> = HashMap::new();
    for a in 0..k {
        for b in a..k {
            pairs_by_m
                .entry(orbs[a].m + orbs[b].m)
                .or_default()
                .push((a, b));
        }
    }
    let mut trip: Vec<(u32, u32, f64)> = Vec::new();
    let mut work: Vec<u8> = vec![0; k];
    for i in 0..basis.dim() {
        let occ = basis.occupations(i);
        let diag: f64 = occ.iter().zip(&e0).map(|(&c, e)| c as f64 * e).sum();
        trip.push((i as u32, i as u32, diag));
        if g == 0.0 {
            continue;
        }
        let occupied: Vec<usize> = (0..k).filter(|&j| occ[j] > 0).collect();
        for (ci, &c) in occupied.iter().enumerate() {
            for &d in &occupied[ci..] {
                let (amp_out, f_cd) = if c == d {
                    if occ[c] < 2 {
                        continue;
                    }
                    (((occ[c] as f64) * (occ[c] as f64 - 1.0)).sqrt(), 1.0)
                } else {
                    (((occ[c] as f64) * (occ[d] as f64)).sqrt(), 2.0)
                };
                work.copy_from_slice(occ);
                work[c] -= 1;
                work[d] -= 1;
                let m_tot = orbs[c].m + orbs[d].m;
                for &(a, b) in &pairs_by_m[&m_tot] {
                    let (amp_in, f_ab) = if a == b {
                        let n = work[a] as f64;
                        (((n + 1.0) * (n + 2.0)).sqrt(), 1.0)
                    } else {
                        (
                            ((work[a] as f64 + 1.0) * (work[b] as f64 + 1.0)).sqrt(),
                            2.0,
                        )
                    };
                    work[a] += 1;
                    work[b] += 1;
                    if let Some(j) = basis.index_of_occupations(&work) {
                        let v = tensor.get(a, b, c, d);
                        if v != 0.0 {
                            let val = 0.5 * g * f_ab * f_cd * v * amp_out * amp_in;
                            trip.push((j as u32, i as u32, val));
                        }
                    }
                    work[a] -= 1;
                    work[b] -= 1;
                }
            }
        }
    }
    let m = CsrMatrix::from_triplets(basis.dim(), trip);
    check_symmetric(&m, "contact")?;
    Ok(m)
}

fn build_one_body(basis: &ManyBodyBasis, aniso: &AnisotropyMatrix) -> Result<CsrMatrix> {
    let k = basis.orbitals().len();
    let mut trip = Vec::new();
    let mut work = vec![0u8; k];
    for i in 0..basis.dim() {
        let occ = basis.occupations(i);
        for l in (0..k).filter(|&l| occ[l] > 0) {
            work.copy_from_slice(occ);
            let amp_out = (work[l] as f64).sqrt();
            work[l] -= 1;
            for (kk, v) in aniso.column(l) {
                let amp_in = (work[kk] as f64 + 1.0).sqrt();
                work[kk] += 1;
                if let Some(j) = basis.index_of_occupations(&work) {
                    trip.push((j as u32, i as u32, v * amp_out * amp_in));
                }
                work[kk] -= 1;
            }
        }
    }
    let m = CsrMatrix::from_triplets(basis.dim(), trip);
    check_symmetric(&m, "quadrupole")?;
    Ok(m)
}

fn check_symmetric(m: &CsrMatrix, what: &str) -> Result<()> {
    let asym = m.asymmetry();
    let scale = m.norm_bound().max(1.0);
    if asym > 1e-12 * scale {
        return Err(Error::NonReal(format!(
            "{what} operator asymmetric by {asym:.3e}"
        )));
    }
    Ok(())
}

/// Real symmetric `H(Ω)` in basis order.
#[derive(Clone, Debug)]
pub struct SparseHamiltonian {
    pub matrix: CsrMatrix,
    pub omega: f64,
    pub anisotropy_scale: f64,
    /// `anisotropy_scale · A`
    pub effective_anisotropy: f64,
    /// `(L, index range)` of the angular-momentum blocks.
    pub blocks: Vec<(i32, std::ops::Range<usize>)>,
}

impl SparseHamiltonian {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// With no anisotropy the operator commutes with total L.
    pub fn is_block_diagonal(&self) -> bool {
        self.effective_anisotropy == 0.0
    }
}

/// `H v` for a state over the same basis.
pub fn apply(h: &SparseHamiltonian, v: &ManyBodyState) -> Result<ManyBodyState> {
    if v.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            got: v.dim(),
        });
    }
    let mut out = vec![num_complex::Complex64::new(0.0, 0.0); h.dim()];
    h.matrix.matvec_complex(v.amplitudes(), &mut out);
    Ok(ManyBodyState::from_amplitudes_unchecked(
        Arc::clone(v.basis()),
        out,
    ))
}
