//! Stationary analysis: lowest eigenpairs versus Ω, gap profiles and the
//! critical rotation frequency.

use std::sync::Arc;

use crate::basis::ManyBodyBasis;
use crate::eigensolver::{self, Eigenpairs, SolverConfig};
use crate::error::{Error, Result};
use crate::hamiltonian::{HamiltonianModel, SparseHamiltonian};
use crate::output::{fmt_float, CsvTable};
use crate::sparse::CsrMatrix;
use crate::states::{spdm, ManyBodyState, Parity};

/// Lowest eigenpairs of `H(Ω)`.
#[derive(Clone, Debug)]
pub struct EigenSolution {
    pub omega: f64,
    pub values: Vec<f64>,
    /// Real, unit-norm, sign fixed by the largest component.
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
}

impl EigenSolution {
    pub fn state(&self, basis: &Arc<ManyBodyBasis>, i: usize) -> ManyBodyState {
        ManyBodyState::from_real(Arc::clone(basis), &self.vectors[i])
            .expect("eigenvectors are normalised")
    }

    pub fn gap(&self) -> f64 {
        self.values[1] - self.values[0]
    }
}

/// `k` smallest eigenpairs with residual bound `tol·‖H‖`.
pub fn lowest_eigenpairs(h: &SparseHamiltonian, k: usize, tol: f64) -> Result<EigenSolution> {
    let cfg = SolverConfig {
        tol,
        ..SolverConfig::default()
    };
    lowest_eigenpairs_with(h, k, &cfg, &[])
}

/// Block-wise when `H` commutes with L (exact degeneracies across blocks are
/// then resolved), otherwise on the full matrix.
pub fn lowest_eigenpairs_with(
    h: &SparseHamiltonian,
    k: usize,
    cfg: &SolverConfig,
    seeds: &[Vec<f64>],
) -> Result<EigenSolution> {
    let n = h.dim();
    if k > n {
        return Err(Error::TooManyEigenpairs {
            requested: k,
            dimension: n,
        });
    }
    let pairs = if h.is_block_diagonal() && h.blocks.len() > 1 {
        block_lowest(h, k, cfg)?
    } else {
        eigensolver::lowest(&h.matrix, k, cfg, seeds)?
    };
    Ok(EigenSolution {
        omega: h.omega,
        values: pairs.values,
        vectors: pairs.vectors,
        residuals: pairs.residuals,
    })
}

fn block_lowest(h: &SparseHamiltonian, k: usize, cfg: &SolverConfig) -> Result<Eigenpairs> {
    let n = h.dim();
    let mut all: Vec<(f64, Vec<f64>, f64)> = Vec::new();
    for (_, range) in &h.blocks {
        let sub = submatrix(&h.matrix, range.clone());
        let kb = k.min(range.len());
        let p = eigensolver::lowest(&sub, kb, cfg, &[])?;
        for ((v, vec), r) in p.values.into_iter().zip(p.vectors).zip(p.residuals) {
            let mut full = vec![0.0; n];
            full[range.clone()].copy_from_slice(&vec);
            all.push((v, full, r));
        }
    }
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    all.truncate(k);
    Ok(Eigenpairs {
        values: all.iter().map(|a| a.0).collect(),
        residuals: all.iter().map(|a| a.2).collect(),
        vectors: all.into_iter().map(|a| a.1).collect(),
    })
}

pub(crate) fn submatrix(m: &CsrMatrix, range: std::ops::Range<usize>) -> CsrMatrix {
    let mut t = Vec::new();
    for (i, r) in range.clone().enumerate() {
        for (c, v) in m.row(r) {
            if range.contains(&c) {
                t.push((i as u32, (c - range.start) as u32, v));
            }
        }
    }
    CsrMatrix::from_triplets(range.len(), t)
}

/// Lowest `k` levels over a grid of rotation frequencies.
#[derive(Clone, Debug)]
pub struct SpectrumSweep {
    pub omegas: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub vectors: Option<Vec<Vec<Vec<f64>>>>,
}

impl SpectrumSweep {
    pub fn levels(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    /// `E_1 - E_0` per grid point.
    pub fn gaps(&self) -> Vec<f64> {
        self.values.iter().map(|v| v[1] - v[0]).collect()
    }

    /// `(Ω, gap)` at the smallest gap on the grid.
    pub fn min_gap(&self) -> (f64, f64) {
        self.omegas
            .iter()
            .zip(self.gaps())
            .fold((f64::NAN, f64::INFINITY), |acc, (&w, g)| {
                if g < acc.1 {
                    (w, g)
                } else {
                    acc
                }
            })
    }

    /// Columns `omega, E_0 … E_{k-1}`.
    pub fn to_csv(&self) -> CsvTable {
        let mut header = vec!["omega".to_string()];
        header.extend((0..self.levels()).map(|i| format!("E_{i}")));
        let mut t = CsvTable::new(header);
        for (w, vals) in self.omegas.iter().zip(&self.values) {
            let mut row = vec![fmt_float(*w)];
            row.extend(vals.iter().map(|&v| fmt_float(v)));
            t.push(row);
        }
        t
    }
}

/// Evenly spaced grid including both ends.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Sequential sweep seeding each solve with the previous eigenvectors.
pub fn sweep(
    model: &HamiltonianModel,
    omegas: &[f64],
    k: usize,
    cfg: &SolverConfig,
    keep_vectors: bool,
) -> Result<SpectrumSweep> {
    if omegas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidModel(
            "omega grid must be strictly increasing".into(),
        ));
    }
    let mut values = Vec::with_capacity(omegas.len());
    let mut vectors = keep_vectors.then(Vec::new);
    let mut seeds: Vec<Vec<f64>> = Vec::new();
    for &w in omegas {
        let h = model.assemble(w, 1.0);
        let sol = lowest_eigenpairs_with(&h, k, cfg, &seeds).map_err(|e| e.at_omega(w))?;
        values.push(sol.values.clone());
        seeds = sol.vectors.clone();
        if let Some(v) = vectors.as_mut() {
            v.push(sol.vectors);
        }
    }
    Ok(SpectrumSweep {
        omegas: omegas.to_vec(),
        values,
        vectors,
    })
}

/// Ground state and its leading-population difference at one Ω.
#[derive(Clone, Debug)]
pub struct PopulationProbe {
    pub omega: f64,
    pub solution: EigenSolution,
    /// Leading even-m natural-orbital population minus leading odd-m one.
    pub population_difference: f64,
}

/// Diagonalise at `omega` and compare the leading natural-orbital
/// populations of the two m-parity sectors.
pub fn probe_populations(
    model: &HamiltonianModel,
    omega: f64,
    cfg: &SolverConfig,
    seeds: &[Vec<f64>],
) -> Result<PopulationProbe> {
    let h = model.assemble(omega, 1.0);
    let sol = lowest_eigenpairs_with(&h, 2, cfg, seeds).map_err(|e| e.at_omega(omega))?;
    let gs = sol.state(model.basis(), 0);
    let no = spdm(&gs);
    let even = no.leading_population(Parity::Even);
    let odd = no.leading_population(Parity::Odd);
    let diff = match (even, odd) {
        (Some(e), Some(o)) => e - o,
        (Some(e), None) => e,
        (None, Some(o)) => -o,
        (None, None) => {
            // parity-mixed ground state: compare the two leading populations
            no.populations[0] - no.populations.get(1).copied().unwrap_or(0.0)
        }
    };
    Ok(PopulationProbe {
        omega,
        solution: sol,
        population_difference: diff,
    })
}

/// Location of the natural-orbital population crossing plus the minimum
/// many-body gap near it.
#[derive(Clone, Debug)]
pub struct CriticalPoint {
    /// Ω where the two leading populations are equal.
    pub omega_c: f64,
    /// Ω of the smallest `E_1 - E_0` in the bracket.
    pub min_gap_omega: f64,
    pub min_gap: f64,
    /// Bisection evaluations performed.
    pub evaluations: usize,
}

/// Absolute tolerance of the bisection on Ω.
pub const CRITICAL_OMEGA_TOL: f64 = 1e-4;

/// Bisection stops here; narrow avoided crossings change the ground state
/// over a window much smaller than [`CRITICAL_OMEGA_TOL`].
pub const BISECTION_TOL: f64 = 1e-10;

/// Bisection on the population difference within `bracket`; the minimum gap
/// is then refined by golden-section search over the bracket.
pub fn find_critical_frequency(
    model: &HamiltonianModel,
    bracket: (f64, f64),
    cfg: &SolverConfig,
) -> Result<CriticalPoint> {
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) {
        return Err(Error::Bracket { lo, hi });
    }
    let p_lo = probe_populations(model, lo, cfg, &[])?;
    let p_hi = probe_populations(model, hi, cfg, &[])?;
    let mut f_lo = p_lo.population_difference;
    let f_hi = p_hi.population_difference;
    if f_lo.signum() == f_hi.signum() || f_lo == 0.0 || f_hi == 0.0 {
        return Err(Error::Bracket {
            lo: bracket.0,
            hi: bracket.1,
        });
    }
    let mut evaluations = 2;
    let mut seeds = p_lo.solution.vectors.clone();
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        let p = probe_populations(model, mid, cfg, &seeds)?;
        evaluations += 1;
        seeds = p.solution.vectors.clone();
        if p.population_difference.signum() == f_lo.signum() {
            lo = mid;
            f_lo = p.population_difference;
        } else {
            hi = mid;
        }
    }
    let omega_c = 0.5 * (lo + hi);
    let (min_gap_omega, min_gap) = minimize_gap(model, bracket, omega_c, cfg)?;
    Ok(CriticalPoint {
        omega_c,
        min_gap_omega,
        min_gap,
        evaluations,
    })
}

/// Grid spacing used by [`locate_critical_frequency`] to bracket the crossing.
pub const CRITICAL_SCAN_STEP: f64 = 0.01;

/// First grid interval of `range` over which the leading population switches
/// from the even-m sector to the odd-m sector.
pub fn scan_for_crossing(
    model: &HamiltonianModel,
    range: (f64, f64),
    step: f64,
    cfg: &SolverConfig,
) -> Result<(f64, f64)> {
    let (lo, hi) = range;
    if !(lo < hi) || !(step > 0.0) {
        return Err(Error::Bracket { lo, hi });
    }
    let n = ((hi - lo) / step).ceil().max(1.0) as usize;
    let grid = linspace(lo, hi, n + 1);
    let mut prev: Option<(f64, f64)> = None;
    let mut seeds: Vec<Vec<f64>> = Vec::new();
    for w in grid {
        let p = probe_populations(model, w, cfg, &seeds)?;
        seeds = p.solution.vectors.clone();
        let f = p.population_difference;
        if let Some((w0, f0)) = prev {
            if f0 > 0.0 && f <= 0.0 {
                return Ok((w0, w));
            }
        }
        prev = Some((w, f));
    }
    Err(Error::Bracket { lo, hi })
}

/// [`scan_for_crossing`] followed by [`find_critical_frequency`] on the first
/// bracket found.
pub fn locate_critical_frequency(
    model: &HamiltonianModel,
    range: (f64, f64),
    cfg: &SolverConfig,
) -> Result<CriticalPoint> {
    let bracket = scan_for_crossing(model, range, CRITICAL_SCAN_STEP, cfg)?;
    find_critical_frequency(model, bracket, cfg)
}

fn gap_at(model: &HamiltonianModel, omega: f64, cfg: &SolverConfig) -> Result<f64> {
    let h = model.assemble(omega, 1.0);
    Ok(lowest_eigenpairs_with(&h, 2, cfg, &[])
        .map_err(|e| e.at_omega(omega))?
        .gap())
}

/// Golden-section search for the smallest gap, started on a window around
/// `centre` clipped to `bracket`.
fn minimize_gap(
    model: &HamiltonianModel,
    bracket: (f64, f64),
    centre: f64,
    cfg: &SolverConfig,
) -> Result<(f64, f64)> {
    let half = 0.02;
    let mut a = (centre - half).max(bracket.0);
    let mut b = (centre + half).min(bracket.1);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = gap_at(model, c, cfg)?;
    let mut fd = gap_at(model, d, cfg)?;
    while b - a > 1e-7 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = gap_at(model, c, cfg)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = gap_at(model, d, cfg)?;
        }
    }
    Ok(if fc < fd { (c, fc) } else { (d, fd) })
}
