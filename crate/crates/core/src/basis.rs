//! Single-particle orbitals of the 2D oscillator and the truncated bosonic
//! occupation-number basis, organised in blocks of definite total angular
//! momentum.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of many-body states.
pub const DEFAULT_CAPACITY: usize = 500_000;

/// A level `(n, m)` of the isotropic 2D harmonic oscillator: radial quantum
/// number `n` and angular-momentum projection `m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Orbital {
    pub n: u32,
    pub m: i32,
}

impl Orbital {
    pub const fn new(n: u32, m: i32) -> Self {
        Orbital { n, m }
    }

    /// Number of Landau excitation quanta carried by one particle here,
    /// `n + (|m| - m)/2`.
    pub fn landau_excitation(&self) -> u32 {
        self.n + ((self.m.unsigned_abs() as i64 - self.m as i64) / 2) as u32
    }

    /// `1 + n + (|m| - m)/2`; the lowest Landau level is index 1.
    pub fn landau_index(&self) -> u32 {
        1 + self.landau_excitation()
    }

    /// Energy in the non-rotating trap, `2n + |m| + 1`.
    pub fn energy_at_rest(&self) -> f64 {
        (2 * self.n + self.m.unsigned_abs() + 1) as f64
    }

    fn sort_key(&self) -> (u32, i32, u32) {
        (self.landau_index(), self.m, self.n)
    }
}

/// Truncation of the many-body Hilbert space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TruncationSpec {
    pub n_particles: usize,
    pub l_max: u32,
    pub n_ll_max: u32,
    pub even_parity: bool,
}

impl TruncationSpec {
    pub fn new(n_particles: usize, l_max: u32, n_ll_max: u32, even_parity: bool) -> Result<Self> {
        let spec = TruncationSpec {
            n_particles,
            l_max,
            n_ll_max,
            even_parity,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Two Landau levels, `l_max = N + 4`, even total angular momentum only.
    pub fn standard(n_particles: usize) -> Result<Self> {
        Self::new(n_particles, n_particles as u32 + 4, 2, true)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_particles == 0 {
            return Err(Error::InvalidSpec("need at least one particle".into()));
        }
        if self.n_ll_max == 0 {
            return Err(Error::InvalidSpec("n_ll_max must be at least 1".into()));
        }
        if self.n_particles > u8::MAX as usize {
            return Err(Error::InvalidSpec(format!(
                "{} particles exceed the occupation storage",
                self.n_particles
            )));
        }
        Ok(())
    }

    fn admits_l(&self, l: i64) -> bool {
        l >= 0 && l <= self.l_max as i64 && (!self.even_parity || l % 2 == 0)
    }
}

/// Landau index of a single orbital.
pub fn orbital_landau_index(n: u32, m: i32) -> u32 {
    Orbital::new(n, m).landau_index()
}

/// Every orbital that can appear under `spec`, ordered by
/// `(landau index, m, n)`.
pub fn enumerate_orbitals(spec: &TruncationSpec) -> Vec<Orbital> {
    let max_exc = spec.n_ll_max - 1;
    let mut out = Vec::new();
    for n in 0..=max_exc {
        for m in -(max_exc as i32)..=spec.l_max as i32 {
            let orb = Orbital::new(n, m);
            if orb.landau_index() <= spec.n_ll_max {
                out.push(orb);
            }
        }
    }
    out.sort_by_key(Orbital::sort_key);
    out
}

/// An occupation-number state: orbital → count, zero counts omitted.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FockState {
    occupations: BTreeMap<Orbital, u32>,
}

impl FockState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (Orbital, u32)>>(pairs: I) -> Self {
        let mut s = FockState::new();
        for (orb, count) in pairs {
            s.add(orb, count);
        }
        s
    }

    pub fn add(&mut self, orb: Orbital, count: u32) {
        if count > 0 {
            *self.occupations.entry(orb).or_insert(0) += count;
        }
    }

    pub fn count(&self, orb: &Orbital) -> u32 {
        self.occupations.get(orb).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Orbital, &u32)> {
        self.occupations.iter()
    }

    pub fn n_particles(&self) -> usize {
        self.occupations.values().map(|&c| c as usize).sum()
    }

    pub fn total_l(&self) -> i64 {
        self.occupations
            .iter()
            .map(|(o, &c)| o.m as i64 * c as i64)
            .sum()
    }
}

/// `1 + Σ_k [n_k + (|m_k| - m_k)/2] N_k`.
pub fn landau_index(state: &FockState) -> u32 {
    1 + state
        .iter()
        .map(|(o, &c)| o.landau_excitation() * c)
        .sum::<u32>()
}

/// Contiguous run of basis states sharing total angular momentum `l`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub l: i32,
    pub range: Range<usize>,
}

/// Truncated occupation-number basis. Immutable once built.
#[derive(Clone, Debug)]
pub struct ManyBodyBasis {
    spec: TruncationSpec,
    orbitals: Vec<Orbital>,
    occ: Vec<Box<[u8]>>,
    l: Vec<i32>,
    blocks: Vec<Block>,
    index: HashMap<Box<[u8]>, usize>,
}

impl ManyBodyBasis {
    pub fn spec(&self) -> &TruncationSpec {
        &self.spec
    }

    pub fn orbitals(&self) -> &[Orbital] {
        &self.orbitals
    }

    pub fn dim(&self) -> usize {
        self.occ.len()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block_of_l(&self, l: i32) -> Option<&Block> {
        self.blocks.iter().find(|b| b.l == l)
    }

    /// Occupation vector of state `i`, indexed like [`Self::orbitals`].
    pub fn occupations(&self, i: usize) -> &[u8] {
        &self.occ[i]
    }

    pub fn total_l(&self, i: usize) -> i32 {
        self.l[i]
    }

    /// Total angular momentum of every state, in basis order.
    pub fn l_values(&self) -> &[i32] {
        &self.l
    }

    pub fn state(&self, i: usize) -> FockState {
        FockState::from_pairs(
            self.occ[i]
                .iter()
                .zip(&self.orbitals)
                .filter(|(&c, _)| c > 0)
                .map(|(&c, &o)| (o, c as u32)),
        )
    }

    /// Position of an occupation vector laid out over [`Self::orbitals`].
    pub fn index_of_occupations(&self, occ: &[u8]) -> Option<usize> {
        self.index.get(occ).copied()
    }

    pub fn orbital_index(&self, orb: &Orbital) -> Option<usize> {
        self.orbitals.iter().position(|o| o == orb)
    }

    /// One line per state: `L n_LL [n,m:count ...]`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for i in 0..self.dim() {
            let st = self.state(i);
            let _ = write!(out, "{} {} [", self.l[i], landau_index(&st));
            let mut first = true;
            for (o, c) in st.iter() {
                if !first {
                    out.push(' ');
                }
                first = false;
                let _ = write!(out, "{},{}:{}", o.n, o.m, c);
            }
            out.push_str("]\n");
        }
        out
    }
}

/// Build the basis with the default capacity limit.
pub fn build_basis(spec: &TruncationSpec) -> Result<ManyBodyBasis> {
    build_basis_with_limit(spec, DEFAULT_CAPACITY)
}

pub fn build_basis_with_limit(spec: &TruncationSpec, limit: usize) -> Result<ManyBodyBasis> {
    spec.validate()?;
    let orbitals = enumerate_orbitals(spec);
    let k = orbitals.len();
    let exc: Vec<u32> = orbitals.iter().map(Orbital::landau_excitation).collect();
    let ms: Vec<i64> = orbitals.iter().map(|o| o.m as i64).collect();
    // suffix bounds on m for pruning
    let mut suffix_min = vec![i64::MAX; k + 1];
    let mut suffix_max = vec![i64::MIN; k + 1];
    for i in (0..k).rev() {
        suffix_min[i] = suffix_min[i + 1].min(ms[i]);
        suffix_max[i] = suffix_max[i + 1].max(ms[i]);
    }

    struct Walk<'a> {
        spec: &'a TruncationSpec,
        exc: &'a [u32],
        ms: &'a [i64],
        smin: &'a [i64],
        smax: &'a [i64],
        limit: usize,
        cur: Vec<u8>,
        out: Vec<(i64, Box<[u8]>)>,
    }

    impl Walk<'_> {
        fn go(&mut self, i: usize, rem: usize, l: i64, e: u32) -> Result<()> {
            let k = self.ms.len();
            if i == k {
                if rem == 0 && self.spec.admits_l(l) {
                    if self.out.len() >= self.limit {
                        return Err(Error::Capacity {
                            dimension: self.out.len() + 1,
                            limit: self.limit,
                        });
                    }
                    self.out.push((l, self.cur.clone().into_boxed_slice()));
                }
                return Ok(());
            }
            if rem > 0 {
                let r = rem as i64;
                if l + r * self.smin[i] > self.spec.l_max as i64 || l + r * self.smax[i] < 0 {
                    return Ok(());
                }
            } else if !self.spec.admits_l(l) {
                return Ok(());
            }
            for c in (0..=rem).rev() {
                let e2 = e + c as u32 * self.exc[i];
                if 1 + e2 > self.spec.n_ll_max {
                    continue;
                }
                self.cur[i] = c as u8;
                self.go(i + 1, rem - c, l + c as i64 * self.ms[i], e2)?;
            }
            self.cur[i] = 0;
            Ok(())
        }
    }

    let mut walk = Walk {
        spec,
        exc: &exc,
        ms: &ms,
        smin: &suffix_min,
        smax: &suffix_max,
        limit,
        cur: vec![0; k],
        out: Vec::new(),
    };
    walk.go(0, spec.n_particles, 0, 0)?;

    let mut states = walk.out;
    // increasing L, then descending lexicographic occupation
    states.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| b.1.cmp(&a.1)));

    let mut blocks: Vec<Block> = Vec::new();
    let mut l = Vec::with_capacity(states.len());
    let mut occ = Vec::with_capacity(states.len());
    let mut index = HashMap::with_capacity(states.len());
    for (i, (li, o)) in states.into_iter().enumerate() {
        let li = li as i32;
        match blocks.last_mut() {
            Some(b) if b.l == li => b.range.end = i + 1,
            _ => blocks.push(Block {
                l: li,
                range: i..i + 1,
            }),
        }
        l.push(li);
        index.insert(o.clone(), i);
        occ.push(o);
    }

    Ok(ManyBodyBasis {
        spec: *spec,
        orbitals,
        occ,
        l,
        blocks,
        index,
    })
}

/// Position of `state` in `basis`, if present.
pub fn lookup(basis: &ManyBodyBasis, state: &FockState) -> Option<usize> {
    let mut occ = vec![0u8; basis.orbitals.len()];
    for (o, &c) in state.iter() {
        let j = basis.orbital_index(o)?;
        occ[j] = u8::try_from(c).ok()?;
    }
    basis.index_of_occupations(&occ)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orb(n: u32, m: i32) -> Orbital {
        Orbital::new(n, m)
    }

    #[test]
    fn orbital_landau_indices() {
        assert_eq!(orb(0, 0).landau_index(), 1);
        assert_eq!(orb(0, 5).landau_index(), 1);
        assert_eq!(orb(0, -1).landau_index(), 2);
        assert_eq!(orb(1, 2).landau_index(), 2);
        assert_eq!(orb(0, -2).landau_index(), 3);
        assert_eq!(orb(1, -1).landau_index(), 3);
        assert_eq!(orb(1, -2).energy_at_rest(), 5.0);
    }

    #[test]
    fn lll_orbitals() {
        let spec = TruncationSpec::new(2, 2, 1, true).unwrap();
        assert_eq!(
            enumerate_orbitals(&spec),
            vec![orb(0, 0), orb(0, 1), orb(0, 2)]
        );
    }

    #[test]
    fn two_level_orbitals() {
        let spec = TruncationSpec::new(2, 2, 2, true).unwrap();
        let got = enumerate_orbitals(&spec);
        assert_eq!(
            got,
            vec![
                orb(0, 0),
                orb(0, 1),
                orb(0, 2),
                orb(0, -1),
                orb(1, 0),
                orb(1, 1),
                orb(1, 2)
            ]
        );
    }

    #[test]
    fn state_landau_index() {
        let lll = FockState::from_pairs([(orb(0, 0), 3), (orb(0, 2), 2)]);
        assert_eq!(landau_index(&lll), 1);
        let neg = FockState::from_pairs([(orb(0, -1), 1), (orb(0, 1), 4)]);
        assert_eq!(landau_index(&neg), 2);
        let rad = FockState::from_pairs([(orb(1, 2), 1), (orb(0, 0), 4)]);
        assert_eq!(landau_index(&rad), 2);
    }

    #[test]
    fn small_lll_basis() {
        let spec = TruncationSpec::new(2, 2, 1, true).unwrap();
        let b = build_basis(&spec).unwrap();
        assert_eq!(b.dim(), 3);
        assert_eq!(b.blocks().len(), 2);
        assert_eq!(b.blocks()[0], Block { l: 0, range: 0..1 });
        assert_eq!(b.blocks()[1], Block { l: 2, range: 1..3 });
        assert_eq!(b.state(0), FockState::from_pairs([(orb(0, 0), 2)]));
        let l2: Vec<FockState> = (1..3).map(|i| b.state(i)).collect();
        assert!(l2.contains(&FockState::from_pairs([(orb(0, 0), 1), (orb(0, 2), 1)])));
        assert!(l2.contains(&FockState::from_pairs([(orb(0, 1), 2)])));
    }

    #[test]
    fn single_particle_basis() {
        let spec = TruncationSpec::new(1, 0, 1, false).unwrap();
        let b = build_basis(&spec).unwrap();
        assert_eq!(b.dim(), 1);
        assert_eq!(b.state(0), FockState::from_pairs([(orb(0, 0), 1)]));
    }

    #[test]
    fn lookup_rejects_out_of_truncation() {
        let spec = TruncationSpec::new(3, 6, 2, true).unwrap();
        let b = build_basis(&spec).unwrap();
        for i in 0..b.dim() {
            assert_eq!(lookup(&b, &b.state(i)), Some(i));
        }
        let odd = FockState::from_pairs([(orb(0, 0), 2), (orb(0, 1), 1)]);
        assert_eq!(lookup(&b, &odd), None);
        let ll3 = FockState::from_pairs([(orb(0, -1), 2), (orb(0, 2), 1)]);
        assert_eq!(landau_index(&ll3), 3);
        assert_eq!(lookup(&b, &ll3), None);
        let foreign = FockState::from_pairs([(orb(3, 0), 3)]);
        assert_eq!(lookup(&b, &foreign), None);
    }

    #[test]
    fn capacity_limit_is_reported() {
        let spec = TruncationSpec::standard(6).unwrap();
        match build_basis_with_limit(&spec, 10) {
            Err(Error::Capacity { limit: 10, .. }) => {}
            other => panic!("expected capacity error, got {other:?}"),
        }
    }

    #[test]
    fn dump_format() {
        let spec = TruncationSpec::new(2, 2, 1, true).unwrap();
        let b = build_basis(&spec).unwrap();
        let dump = b.dump();
        let lines: Vec<&str> = dump.lines().collect();
        assert_eq!(lines[0], "0 1 [0,0:2]");
        assert_eq!(lines.len(), 3);
        assert!(lines.contains(&"2 1 [0,1:2]"));
        assert!(lines.contains(&"2 1 [0,0:1 0,2:1]"));
    }

    #[test]
    fn invalid_specs() {
        assert!(TruncationSpec::new(0, 4, 2, true).is_err());
        assert!(TruncationSpec::new(2, 4, 0, true).is_err());
    }
}
