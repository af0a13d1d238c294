//! Time evolution of the rotating gas.
//!
//! Time-dependent runs are integrated in the eigenbasis of the isotropic
//! Hamiltonian at rest, `|Φ_i⟩`, where `H(t) = diag(E_i - Ω(t) L_i) + s(t)·A·W`
//! and `W` is the quadrupole operator rotated into that basis. Constant-Ω
//! propagation uses an exact spectral expansion instead.

use std::f64::consts::PI;
use std::ops::Range;
use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64;

use crate::basis::ManyBodyBasis;
use crate::eigensolver::{self, SolverConfig};
use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianModel;
use crate::linalg;
use crate::output::CsvTable;
use crate::spectrum::{linspace, lowest_eigenpairs_with};
use crate::states::{angular_momentum_moments, ManyBodyState};

/// Trap frequency `2π × 2.1 kHz` in rad/s.
pub const DEFAULT_TRAP_ANGULAR_FREQUENCY: f64 = 2.0 * PI * 2100.0;

/// Typical condensate lifetime in seconds.
pub const CONDENSATE_LIFETIME_S: f64 = 16.0;

/// Norm drift tolerated over one run.
pub const NORM_DRIFT_BOUND: f64 = 1e-6;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

// ---------------------------------------------------------------------------
// Schedules

/// One linear piece of `Ω(t)`. A hold has `gamma == 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RampSegment {
    pub omega_start: f64,
    pub omega_end: f64,
    /// Signed rate `dΩ/dt`.
    pub gamma: f64,
    pub duration: f64,
}

impl RampSegment {
    pub fn omega_at(&self, t: f64) -> f64 {
        if self.duration == 0.0 {
            return self.omega_end;
        }
        self.omega_start + (self.omega_end - self.omega_start) * (t / self.duration)
    }
}

/// Piecewise-linear rotation-frequency protocol.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RampSchedule {
    segments: Vec<RampSegment>,
}

impl RampSchedule {
    pub fn new() -> Self {
        Self::default()
    }

    /// Single linear ramp at rate `|gamma|`.
    pub fn linear(omega_start: f64, omega_end: f64, gamma: f64) -> Result<Self> {
        let mut s = Self::new();
        s.push_ramp(omega_end, gamma.abs(), Some(omega_start))?;
        Ok(s)
    }

    /// Constant Ω for `duration`.
    pub fn hold(omega: f64, duration: f64) -> Result<Self> {
        let mut s = Self::new();
        s.push_hold(omega, duration)?;
        s.segments[0].omega_start = omega;
        Ok(s)
    }

    fn end_or(&self, start: Option<f64>) -> Result<f64> {
        match (self.segments.last(), start) {
            (Some(last), None) => Ok(last.omega_end),
            (Some(last), Some(s)) if s == last.omega_end => Ok(s),
            (Some(last), Some(s)) => Err(Error::InvalidSchedule(format!(
                "segment starts at {s} but the previous one ends at {}",
                last.omega_end
            ))),
            (None, Some(s)) => Ok(s),
            (None, None) => Err(Error::InvalidSchedule(
                "first segment needs a start frequency".into(),
            )),
        }
    }

    /// Append a ramp to `omega_end` at rate `rate > 0`; `start` is required
    /// for the first segment only.
    pub fn push_ramp(&mut self, omega_end: f64, rate: f64, start: Option<f64>) -> Result<()> {
        let from = self.end_or(start)?;
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::InvalidSchedule(format!(
                "ramp rate {rate} must be positive"
            )));
        }
        let delta = omega_end - from;
        self.segments.push(RampSegment {
            omega_start: from,
            omega_end,
            gamma: rate.copysign(if delta == 0.0 { 1.0 } else { delta }),
            duration: delta.abs() / rate,
        });
        Ok(())
    }

    /// Append a hold at `omega`, which must equal the current end frequency.
    pub fn push_hold(&mut self, omega: f64, duration: f64) -> Result<()> {
        let from = self.end_or(Some(omega))?;
        if !(duration >= 0.0) || !duration.is_finite() {
            return Err(Error::InvalidSchedule(format!(
                "hold duration {duration} must be >= 0"
            )));
        }
        self.segments.push(RampSegment {
            omega_start: from,
            omega_end: from,
            gamma: 0.0,
            duration,
        });
        Ok(())
    }

    pub fn segments(&self) -> &[RampSegment] {
        &self.segments
    }

    pub fn total_time(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Wall-clock duration for a trap of angular frequency `omega_trap`
    /// (rad/s); one time unit is `1/ω⊥`.
    pub fn physical_time_seconds(&self, omega_trap: f64) -> f64 {
        self.total_time() / omega_trap
    }

    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.segments.iter().enumerate() {
            if i > 0 && self.segments[i - 1].omega_end != s.omega_start {
                return Err(Error::InvalidSchedule(format!(
                    "segment {i} is not continuous"
                )));
            }
            let delta = s.omega_end - s.omega_start;
            if s.gamma == 0.0 {
                if delta != 0.0 {
                    return Err(Error::InvalidSchedule(format!(
                        "segment {i} changes Ω at zero rate"
                    )));
                }
            } else {
                if delta != 0.0 && delta.signum() != s.gamma.signum() {
                    return Err(Error::InvalidSchedule(format!(
                        "segment {i} rate has the wrong sign"
                    )));
                }
                let expect = delta.abs() / s.gamma.abs();
                if (expect - s.duration).abs() > 1e-12 * expect.max(1.0) {
                    return Err(Error::InvalidSchedule(format!(
                        "segment {i} duration is inconsistent"
                    )));
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Integrator

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: f64,
    pub max_step: f64,
    pub max_steps: usize,
    /// Record a trace point every this many time units.
    pub trace_interval: Option<f64>,
    /// Compute the instantaneous ground state at each trace point.
    pub track_ground_state: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rtol: 1e-10,
            atol: 1e-12,
            initial_step: 1e-2,
            max_step: 1.0,
            max_steps: 5_000_000,
            trace_interval: None,
            track_ground_state: false,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::InvalidSchedule(
                "integrator tolerances must be > 0".into(),
            ));
        }
        if !(self.initial_step > 0.0 && self.max_step > 0.0) {
            return Err(Error::InvalidSchedule(
                "integrator steps must be > 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TracePoint {
    pub time: f64,
    pub omega: f64,
    pub anisotropy_scale: f64,
    pub ground_state_fidelity: Option<f64>,
    pub mean_l: f64,
    pub norm: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvolutionDiagnostics {
    pub steps: usize,
    pub rejected_steps: usize,
    pub norm_drift: f64,
    pub trace: Vec<TracePoint>,
    /// Population outside the initially occupied low-lying levels.
    pub leakage: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct EvolutionResult {
    pub state: ManyBodyState,
    pub diagnostics: EvolutionDiagnostics,
}

impl EvolutionResult {
    /// Columns `time, ground_state_fidelity, mean_l, norm`.
    pub fn trajectory_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(vec!["time", "ground_state_fidelity", "mean_l", "norm"]);
        for p in &self.diagnostics.trace {
            t.push_floats(&[
                p.time,
                p.ground_state_fidelity.unwrap_or(f64::NAN),
                p.mean_l,
                p.norm,
            ]);
        }
        t
    }
}

// ---------------------------------------------------------------------------
// Isotropic frame

#[derive(Clone, Debug)]
struct Coupling {
    rows: Range<usize>,
    cols: Range<usize>,
    /// row-major `U_rᵀ Q U_c`
    values: Vec<f64>,
}

/// Eigenbasis of the isotropic Hamiltonian at rest, block by block in L,
/// together with the quadrupole operator expressed in it.
#[derive(Clone, Debug)]
pub struct IsotropicFrame {
    basis: Arc<ManyBodyBasis>,
    anisotropy: f64,
    energies: Vec<f64>,
    l_values: Vec<f64>,
    blocks: Vec<(i32, Range<usize>)>,
    vectors: Vec<Mat<f64>>,
    couplings: Vec<Coupling>,
}

impl IsotropicFrame {
    pub fn new(model: &HamiltonianModel) -> Result<Self> {
        let basis = Arc::clone(model.basis());
        let iso = model.isotropic_part();
        let quad = model.quadrupole_part();
        let blocks: Vec<(i32, Range<usize>)> = basis
            .blocks()
            .iter()
            .map(|b| (b.l, b.range.clone()))
            .collect();
        let mut energies = vec![0.0; basis.dim()];
        let mut vectors = Vec::with_capacity(blocks.len());
        for (_, range) in &blocks {
            let rows = iso.dense_block(range.clone());
            let n = range.len();
            let m = Mat::from_fn(n, n, |i, j| rows[i][j]);
            let (vals, mut u) = linalg::symmetric_eigen(&m);
            for j in 0..n {
                let mut col: Vec<f64> = (0..n).map(|i| u.read(i, j)).collect();
                linalg::fix_sign(&mut col);
                for (i, x) in col.into_iter().enumerate() {
                    u.write(i, j, x);
                }
            }
            energies[range.clone()].copy_from_slice(&vals);
            vectors.push(u);
        }
        let mut couplings = Vec::new();
        for (bi, (_, rr)) in blocks.iter().enumerate() {
            for (bj, (_, cr)) in blocks.iter().enumerate().skip(bi) {
                let mut q = Mat::<f64>::zeros(rr.len(), cr.len());
                let mut any = false;
                for r in rr.clone() {
                    for (c, v) in quad.row(r) {
                        if cr.contains(&c) && v != 0.0 {
                            q.write(r - rr.start, c - cr.start, v);
                            any = true;
                        }
                    }
                }
                if !any {
                    continue;
                }
                let w = vectors[bi].as_ref().transpose() * (q.as_ref() * vectors[bj].as_ref());
                let mut values = Vec::with_capacity(rr.len() * cr.len());
                for i in 0..rr.len() {
                    for j in 0..cr.len() {
                        values.push(w.read(i, j));
                    }
                }
                couplings.push(Coupling {
                    rows: rr.clone(),
                    cols: cr.clone(),
                    values,
                });
            }
        }
        Ok(IsotropicFrame {
            l_values: model.l_values().to_vec(),
            anisotropy: model.params().anisotropy,
            basis,
            energies,
            blocks,
            vectors,
            couplings,
        })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn basis(&self) -> &Arc<ManyBodyBasis> {
        &self.basis
    }

    /// Isotropic eigenvalues at Ω = 0.
    pub fn energies_at_rest(&self) -> &[f64] {
        &self.energies
    }

    pub fn l_values(&self) -> &[f64] {
        &self.l_values
    }

    /// `E_i - Ω L_i`.
    pub fn energy(&self, i: usize, omega: f64) -> f64 {
        self.energies[i] - omega * self.l_values[i]
    }

    /// Frame indices sorted by isotropic energy at `omega`.
    pub fn levels_at(&self, omega: f64) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.dim()).collect();
        idx.sort_by(|&a, &b| {
            self.energy(a, omega)
                .total_cmp(&self.energy(b, omega))
                .then(a.cmp(&b))
        });
        idx
    }

    fn block_of(&self, i: usize) -> usize {
        self.blocks.partition_point(|(_, r)| r.end <= i)
    }

    /// Isotropic eigenvector `i` in the Fock basis.
    pub fn eigenstate(&self, i: usize) -> ManyBodyState {
        let b = self.block_of(i);
        let range = &self.blocks[b].1;
        let u = &self.vectors[b];
        let mut amps = vec![ZERO; self.dim()];
        for (k, a) in amps[range.clone()].iter_mut().enumerate() {
            *a = Complex64::new(u.read(k, i - range.start), 0.0);
        }
        ManyBodyState::from_amplitudes_unchecked(Arc::clone(&self.basis), amps)
    }

    /// Amplitudes `⟨Φ_i|ψ⟩`.
    pub fn to_frame(&self, state: &ManyBodyState) -> Result<Vec<Complex64>> {
        if !Arc::ptr_eq(state.basis(), &self.basis) && state.dim() != self.dim() {
            return Err(Error::BasisMismatch);
        }
        let psi = state.amplitudes();
        let mut c = vec![ZERO; self.dim()];
        for ((_, range), u) in self.blocks.iter().zip(&self.vectors) {
            let n = range.len();
            for j in 0..n {
                let mut acc = ZERO;
                for i in 0..n {
                    acc += psi[range.start + i] * u.read(i, j);
                }
                c[range.start + j] = acc;
            }
        }
        Ok(c)
    }

    pub fn from_frame(&self, c: &[Complex64]) -> ManyBodyState {
        let mut psi = vec![ZERO; self.dim()];
        for ((_, range), u) in self.blocks.iter().zip(&self.vectors) {
            let n = range.len();
            for j in 0..n {
                let cj = c[range.start + j];
                if cj == ZERO {
                    continue;
                }
                for i in 0..n {
                    psi[range.start + i] += cj * u.read(i, j);
                }
            }
        }
        ManyBodyState::from_amplitudes_unchecked(Arc::clone(&self.basis), psi)
    }

    /// `out = (diag(E_i - Ω L_i) - shift + a_eff W) c`.
    pub fn apply(
        &self,
        omega: f64,
        a_eff: f64,
        shift: f64,
        c: &[Complex64],
        out: &mut [Complex64],
    ) {
        for i in 0..c.len() {
            out[i] = c[i] * (self.energy(i, omega) - shift);
        }
        if a_eff == 0.0 {
            return;
        }
        for cp in &self.couplings {
            let nc = cp.cols.len();
            let same = cp.rows == cp.cols;
            for (r, row) in cp.values.chunks_exact(nc).enumerate() {
                let ri = cp.rows.start + r;
                let xs = &c[cp.cols.clone()];
                let mut acc = ZERO;
                for (w, x) in row.iter().zip(xs) {
                    acc += x * *w;
                }
                out[ri] += acc * a_eff;
                if !same {
                    let cr = c[ri] * a_eff;
                    if cr != ZERO {
                        for (o, w) in out[cp.cols.clone()].iter_mut().zip(row) {
                            *o += cr * *w;
                        }
                    }
                }
            }
        }
    }

    /// `⟨c|H(Ω, a_eff)|c⟩`.
    pub fn expectation(&self, omega: f64, a_eff: f64, c: &[Complex64]) -> f64 {
        let mut hc = vec![ZERO; c.len()];
        self.apply(omega, a_eff, 0.0, c, &mut hc);
        linalg::cdot(c, &hc).re
    }

    /// Model anisotropy `A`.
    pub fn anisotropy(&self) -> f64 {
        self.anisotropy
    }
}

// ---------------------------------------------------------------------------
// RK45 (Fehlberg)

const C: [f64; 6] = [0.0, 0.25, 0.375, 12.0 / 13.0, 1.0, 0.5];
const A2: [f64; 1] = [0.25];
const A3: [f64; 2] = [3.0 / 32.0, 9.0 / 32.0];
const A4: [f64; 3] = [1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0];
const A5: [f64; 4] = [439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0];
const A6: [f64; 5] = [
    -8.0 / 27.0,
    2.0,
    -3544.0 / 2565.0,
    1859.0 / 4104.0,
    -11.0 / 40.0,
];
const B5: [f64; 6] = [
    16.0 / 135.0,
    0.0,
    6656.0 / 12825.0,
    28561.0 / 56430.0,
    -9.0 / 50.0,
    2.0 / 55.0,
];
const B4: [f64; 6] = [
    25.0 / 216.0,
    0.0,
    1408.0 / 2565.0,
    2197.0 / 4104.0,
    -0.2,
    0.0,
];

/// Linear drive on one segment: `Ω(t)` and anisotropy scale `s(t)`.
#[derive(Clone, Copy, Debug)]
struct Drive {
    omega: (f64, f64),
    scale: (f64, f64),
    duration: f64,
}

impl Drive {
    fn at(&self, t: f64) -> (f64, f64) {
        if self.duration == 0.0 {
            return (self.omega.1, self.scale.1);
        }
        let x = t / self.duration;
        (
            self.omega.0 + (self.omega.1 - self.omega.0) * x,
            self.scale.0 + (self.scale.1 - self.scale.0) * x,
        )
    }
}

struct Workspace {
    k: [Vec<Complex64>; 6],
    tmp: Vec<Complex64>,
    next: Vec<Complex64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Workspace {
            k: std::array::from_fn(|_| vec![ZERO; n]),
            tmp: vec![ZERO; n],
            next: vec![ZERO; n],
        }
    }
}

/// Derivative `-i (H - shift) c`.
fn rhs(
    frame: &IsotropicFrame,
    drive: &Drive,
    shift: f64,
    t: f64,
    c: &[Complex64],
    out: &mut [Complex64],
) {
    let (omega, s) = drive.at(t);
    frame.apply(omega, s * frame.anisotropy, shift, c, out);
    for o in out.iter_mut() {
        *o = Complex64::new(o.im, -o.re);
    }
}

struct Stepper<'a> {
    frame: &'a IsotropicFrame,
    model: Option<&'a HamiltonianModel>,
    cfg: IntegratorConfig,
    /// Reference energy removed during integration and restored exactly.
    shift: f64,
    ws: Workspace,
    h: f64,
    diag: EvolutionDiagnostics,
    time: f64,
    next_trace: f64,
    solver: SolverConfig,
    gs_seed: Vec<Vec<f64>>,
}

impl<'a> Stepper<'a> {
    fn new(
        frame: &'a IsotropicFrame,
        model: Option<&'a HamiltonianModel>,
        cfg: &IntegratorConfig,
        shift: f64,
    ) -> Self {
        Stepper {
            frame,
            model,
            cfg: *cfg,
            shift,
            ws: Workspace::new(frame.dim()),
            h: cfg.initial_step.min(cfg.max_step),
            diag: EvolutionDiagnostics::default(),
            time: 0.0,
            next_trace: 0.0,
            solver: SolverConfig::default(),
            gs_seed: Vec::new(),
        }
    }

    fn trace(&mut self, c: &[Complex64], drive: &Drive, local_t: f64) -> Result<()> {
        let (omega, s) = drive.at(local_t);
        let state = self.frame.from_frame(c);
        let norm = state.norm();
        let (mean_l, _, _) = angular_momentum_moments(&state);
        let mut fid = None;
        if let (true, Some(model)) = (self.cfg.track_ground_state, self.model) {
            let h = model.assemble(omega, s);
            let sol = lowest_eigenpairs_with(&h, 1, &self.solver, &self.gs_seed)
                .map_err(|e| e.at_omega(omega))?;
            let gs = sol.state(model.basis(), 0);
            fid = Some(gs.fidelity(&state) / (norm * norm));
            self.gs_seed = sol.vectors;
        }
        self.diag.trace.push(TracePoint {
            time: self.time,
            omega,
            anisotropy_scale: s,
            ground_state_fidelity: fid,
            mean_l,
            norm,
        });
        Ok(())
    }

    /// Advance `c` over one drive segment.
    fn run(&mut self, c: &mut Vec<Complex64>, drive: &Drive) -> Result<()> {
        let n = c.len();
        let mut t = 0.0;
        let end = drive.duration;
        if let Some(dt) = self.cfg.trace_interval {
            if self.diag.trace.is_empty() {
                self.trace(c, drive, 0.0)?;
                self.next_trace = dt;
            }
        }
        while t < end {
            if self.diag.steps + self.diag.rejected_steps >= self.cfg.max_steps {
                return Err(Error::StepLimit(self.cfg.max_steps));
            }
            let mut h = self.h.min(self.cfg.max_step).min(end - t);
            if let Some(_) = self.cfg.trace_interval {
                let to_trace = self.next_trace - self.time;
                if to_trace > 0.0 && to_trace < h {
                    h = to_trace;
                }
            }
            if h <= 1e-14 * end.max(1.0) && end - t > 1e-14 * end.max(1.0) {
                return Err(Error::StepUnderflow(self.time));
            }
            let err = self.attempt(c, drive, t, h);
            let scale = self.cfg.atol + self.cfg.rtol * linalg::cnorm(c);
            let ratio = err / scale;
            if ratio <= 1.0 {
                t += h;
                self.time += h;
                std::mem::swap(c, &mut self.ws.next);
                self.diag.steps += 1;
                if let Some(dt) = self.cfg.trace_interval {
                    if self.time >= self.next_trace - 1e-12 {
                        self.trace(c, drive, t)?;
                        self.next_trace += dt;
                    }
                }
            } else {
                self.diag.rejected_steps += 1;
            }
            let factor = if ratio == 0.0 {
                5.0
            } else {
                (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
            };
            // keep the step from collapsing on the final partial step
            if !(ratio <= 1.0 && h < self.h) {
                self.h = h * factor;
            }
        }
        debug_assert_eq!(c.len(), n);
        Ok(())
    }

    /// One RKF45 step of size `h` into `ws.next`; returns the 2-norm of the
    /// local error estimate.
    fn attempt(&mut self, c: &[Complex64], drive: &Drive, t: f64, h: f64) -> f64 {
        let frame = self.frame;
        let shift = self.shift;
        let Workspace { k, tmp, next } = &mut self.ws;
        rhs(frame, drive, shift, t + C[0] * h, c, &mut k[0]);
        let stages: [&[f64]; 5] = [&A2, &A3, &A4, &A5, &A6];
        for (s, coeffs) in stages.iter().enumerate() {
            for i in 0..c.len() {
                let mut acc = c[i];
                for (j, a) in coeffs.iter().enumerate() {
                    acc += k[j][i] * (h * a);
                }
                tmp[i] = acc;
            }
            let (done, rest) = k.split_at_mut(s + 1);
            let _ = done;
            rhs(frame, drive, shift, t + C[s + 1] * h, tmp, &mut rest[0]);
        }
        let mut err2 = 0.0;
        for i in 0..c.len() {
            let mut y5 = c[i];
            let mut e = ZERO;
            for j in 0..6 {
                y5 += k[j][i] * (h * B5[j]);
                e += k[j][i] * (h * (B5[j] - B4[j]));
            }
            next[i] = y5;
            err2 += e.norm_sqr();
        }
        err2.sqrt()
    }

    fn finish(mut self, mut c: Vec<Complex64>, initial_norm: f64) -> Result<EvolutionResult> {
        let phase = Complex64::from_polar(1.0, -self.shift * self.time);
        for x in c.iter_mut() {
            *x *= phase;
        }
        let norm = linalg::cnorm(&c);
        self.diag.norm_drift = (norm - initial_norm).abs();
        if self.diag.norm_drift > NORM_DRIFT_BOUND {
            return Err(Error::NormDrift(self.diag.norm_drift));
        }
        Ok(EvolutionResult {
            state: self.frame.from_frame(&c),
            diagnostics: self.diag,
        })
    }
}

fn initial_shift(frame: &IsotropicFrame, c: &[Complex64], omega: f64, scale: f64) -> f64 {
    let n2 = linalg::cnorm(c).powi(2);
    if n2 == 0.0 {
        return 0.0;
    }
    frame.expectation(omega, scale * frame.anisotropy, c) / n2
}

/// Integrate `i ∂_t ψ = H(t) ψ` along `schedule` with the anisotropy fully on.
pub fn integrate_tdse(
    model: &HamiltonianModel,
    initial: &ManyBodyState,
    schedule: &RampSchedule,
    cfg: &IntegratorConfig,
) -> Result<EvolutionResult> {
    let frame = IsotropicFrame::new(model)?;
    integrate_in_frame(&frame, Some(model), initial, schedule, cfg)
}

/// [`integrate_tdse`] with a prebuilt frame. `model` is only needed when
/// ground-state tracking is requested.
pub fn integrate_in_frame(
    frame: &IsotropicFrame,
    model: Option<&HamiltonianModel>,
    initial: &ManyBodyState,
    schedule: &RampSchedule,
    cfg: &IntegratorConfig,
) -> Result<EvolutionResult> {
    cfg.validate()?;
    schedule.validate()?;
    let mut c = frame.to_frame(initial)?;
    let n0 = linalg::cnorm(&c);
    let start = schedule.segments().first().map_or(0.0, |s| s.omega_start);
    let shift = initial_shift(frame, &c, start, 1.0);
    let mut stepper = Stepper::new(frame, model, cfg, shift);
    for seg in schedule.segments() {
        let drive = Drive {
            omega: (seg.omega_start, seg.omega_end),
            scale: (1.0, 1.0),
            duration: seg.duration,
        };
        stepper.run(&mut c, &drive)?;
    }
    stepper.finish(c, n0)
}

// ---------------------------------------------------------------------------
// Adiabatic ramp planning

/// One `δΩ` piece of an adiabatic plan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlannedSegment {
    pub omega_start: f64,
    pub omega_end: f64,
    /// Smallest gap over the sub-grid of the segment.
    pub gap_subgrid: f64,
    /// Smaller of the two endpoint gaps.
    pub gap_endpoints: f64,
    pub gamma_subgrid: f64,
    pub gamma_endpoints: f64,
}

impl PlannedSegment {
    pub fn time_subgrid(&self) -> f64 {
        (self.omega_end - self.omega_start).abs() / self.gamma_subgrid
    }

    pub fn time_endpoints(&self) -> f64 {
        (self.omega_end - self.omega_start).abs() / self.gamma_endpoints
    }
}

/// Piecewise-linear ramp from `Ω₀` to `Ω_c` with the fastest rates that keep
/// the transition probability per segment below `p01`.
#[derive(Clone, Debug)]
pub struct RampPlan {
    pub segments: Vec<PlannedSegment>,
    pub n_particles: usize,
    pub p01: f64,
}

/// Sub-grid points per `δΩ` segment when searching for the smallest gap.
pub const RAMP_SUBGRID_POINTS: usize = 10;

/// `γ = ΔE²_min √p01 / N`.
pub fn adiabatic_rate(gap_min: f64, n_particles: usize, p01: f64) -> f64 {
    gap_min * gap_min * p01.sqrt() / n_particles as f64
}

impl RampPlan {
    /// Schedule using sub-grid gap minima.
    pub fn schedule(&self) -> RampSchedule {
        self.build(|s| s.gamma_subgrid)
    }

    /// Schedule using endpoint gaps only.
    pub fn endpoint_schedule(&self) -> RampSchedule {
        self.build(|s| s.gamma_endpoints)
    }

    fn build(&self, rate: impl Fn(&PlannedSegment) -> f64) -> RampSchedule {
        let mut s = RampSchedule::new();
        for (i, seg) in self.segments.iter().enumerate() {
            let start = (i == 0).then_some(seg.omega_start);
            s.push_ramp(seg.omega_end, rate(seg), start)
                .expect("planned rates are positive");
        }
        s
    }

    pub fn total_time(&self) -> f64 {
        self.segments.iter().map(PlannedSegment::time_subgrid).sum()
    }

    pub fn total_time_endpoints(&self) -> f64 {
        self.segments
            .iter()
            .map(PlannedSegment::time_endpoints)
            .sum()
    }

    pub fn seconds(&self, omega_trap: f64) -> f64 {
        self.total_time() / omega_trap
    }

    pub fn seconds_endpoints(&self, omega_trap: f64) -> f64 {
        self.total_time_endpoints() / omega_trap
    }

    /// Whether the sub-grid plan fits inside the condensate lifetime.
    pub fn feasible(&self, omega_trap: f64) -> bool {
        self.seconds(omega_trap) <= CONDENSATE_LIFETIME_S
    }

    pub fn to_csv(&self, omega_trap: f64) -> CsvTable {
        let mut t = CsvTable::new(vec![
            "omega_start",
            "omega_end",
            "gap_subgrid",
            "gap_endpoints",
            "gamma_subgrid",
            "gamma_endpoints",
            "seconds_subgrid",
            "seconds_endpoints",
        ]);
        for s in &self.segments {
            t.push_floats(&[
                s.omega_start,
                s.omega_end,
                s.gap_subgrid,
                s.gap_endpoints,
                s.gamma_subgrid,
                s.gamma_endpoints,
                s.time_subgrid() / omega_trap,
                s.time_endpoints() / omega_trap,
            ]);
        }
        t
    }
}

/// Gap below which a segment is rejected as having no gap at all.
pub const ZERO_GAP: f64 = 1e-9;

pub fn plan_adiabatic_ramp(
    model: &HamiltonianModel,
    omega_start: f64,
    omega_c: f64,
    delta_omega: f64,
    p01: f64,
    cfg: &SolverConfig,
) -> Result<RampPlan> {
    if !(omega_start < omega_c) {
        return Err(Error::InvalidSchedule(format!(
            "ramp start {omega_start} must lie below the target {omega_c}"
        )));
    }
    if !(delta_omega > 0.0) {
        return Err(Error::InvalidSchedule(format!(
            "segment width {delta_omega} must be > 0"
        )));
    }
    if !(p01 > 0.0 && p01 < 1.0) {
        return Err(Error::InvalidSchedule(format!(
            "transition tolerance {p01} must lie in (0, 1)"
        )));
    }
    let n = model.basis().spec().n_particles;
    let mut cache: Vec<(f64, f64)> = Vec::new();
    let mut seeds: Vec<Vec<f64>> = Vec::new();
    let mut gap = |omega: f64, seeds: &mut Vec<Vec<f64>>| -> Result<f64> {
        if let Some(&(_, g)) = cache.iter().find(|(w, _)| *w == omega) {
            return Ok(g);
        }
        let h = model.assemble(omega, 1.0);
        let sol = lowest_eigenpairs_with(&h, 2, cfg, seeds).map_err(|e| e.at_omega(omega))?;
        let g = sol.gap();
        *seeds = sol.vectors;
        cache.push((omega, g));
        if !(g > ZERO_GAP) {
            return Err(Error::ZeroGap { omega, gap: g });
        }
        Ok(g)
    };
    let count = ((omega_c - omega_start) / delta_omega - 1e-9)
        .ceil()
        .max(1.0) as usize;
    let mut segments = Vec::with_capacity(count);
    for i in 0..count {
        let lo = omega_start + i as f64 * delta_omega;
        let hi = if i + 1 == count {
            omega_c
        } else {
            lo + delta_omega
        };
        let mut sub = f64::INFINITY;
        for w in linspace(lo, hi, RAMP_SUBGRID_POINTS) {
            sub = sub.min(gap(w, &mut seeds)?);
        }
        let ends = gap(lo, &mut seeds)?.min(gap(hi, &mut seeds)?);
        segments.push(PlannedSegment {
            omega_start: lo,
            omega_end: hi,
            gap_subgrid: sub,
            gap_endpoints: ends,
            gamma_subgrid: adiabatic_rate(sub, n, p01),
            gamma_endpoints: adiabatic_rate(ends, n, p01),
        });
    }
    Ok(RampPlan {
        segments,
        n_particles: n,
        p01,
    })
}

// ---------------------------------------------------------------------------
// Sudden coupling

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuddenMode {
    /// Linear ramp at the maximum rate.
    Ramped,
    /// Instantaneous change of Ω, no evolution.
    Instantaneous,
}

#[derive(Clone, Debug)]
pub struct SuddenShift {
    pub result: EvolutionResult,
    /// `|⟨final|initial⟩|²`.
    pub fidelity: f64,
    /// Largest shift compatible with the sudden approximation, `√(2γ/ΔL)`.
    pub guard: f64,
    pub guard_violated: bool,
}

/// `√(2γ_max/ΔL)` for `state`; infinite for an L eigenstate.
pub fn sudden_guard(state: &ManyBodyState, gamma_max: f64) -> f64 {
    let (_, _, dl) = angular_momentum_moments(state);
    if dl == 0.0 {
        f64::INFINITY
    } else {
        (2.0 * gamma_max / dl).sqrt()
    }
}

pub fn sudden_shift(
    frame: &IsotropicFrame,
    state: &ManyBodyState,
    omega_from: f64,
    omega_to: f64,
    gamma_max: f64,
    mode: SuddenMode,
    cfg: &IntegratorConfig,
) -> Result<SuddenShift> {
    let guard = sudden_guard(state, gamma_max);
    let delta = (omega_to - omega_from).abs();
    let guard_violated = delta >= guard;
    if guard_violated {
        log::warn!("frequency shift {delta:.3e} is not small against the sudden bound {guard:.3e}");
    }
    let result = if delta == 0.0 || mode == SuddenMode::Instantaneous {
        EvolutionResult {
            state: state.clone(),
            diagnostics: EvolutionDiagnostics::default(),
        }
    } else {
        let schedule = RampSchedule::linear(omega_from, omega_to, gamma_max)?;
        integrate_in_frame(frame, None, state, &schedule, cfg)?
    };
    let fidelity = result.state.fidelity(state);
    Ok(SuddenShift {
        result,
        fidelity,
        guard,
        guard_violated,
    })
}

// ---------------------------------------------------------------------------
// Free evolution

/// Gershgorin upper bound on the spectrum.
fn spectral_upper_bound(h: &crate::sparse::CsrMatrix) -> f64 {
    (0..h.dim())
        .map(|r| {
            h.row(r)
                .map(|(c, v)| if c == r { v } else { v.abs() })
                .sum::<f64>()
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `J_0(x) … J_kmax(x)` by downward recurrence.
pub(crate) fn bessel_j_sequence(x: f64, kmax: usize) -> Vec<f64> {
    if x == 0.0 {
        let mut v = vec![0.0; kmax + 1];
        v[0] = 1.0;
        return v;
    }
    let start = kmax + 20 + (x.abs() as usize) + (10.0 * x.abs().cbrt()) as usize;
    let mut out = vec![0.0; start + 2];
    let mut next = 0.0;
    let mut cur = 1e-300;
    out[start] = cur;
    for k in (1..=start).rev() {
        let prev = 2.0 * k as f64 / x * cur - next;
        next = cur;
        cur = prev;
        out[k - 1] = cur;
        if cur.abs() > 1e250 {
            for v in out[k - 1..=start].iter_mut() {
                *v *= 1e-250;
            }
            next *= 1e-250;
            cur *= 1e-250;
        }
    }
    // J_0 + 2 Σ J_2k = 1
    let mut norm = out[0];
    let mut k = 2;
    while k <= start {
        norm += 2.0 * out[k];
        k += 2;
    }
    out.truncate(kmax + 1);
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

/// Evolve for `tau` at fixed `omega_delta` with the anisotropy on; phases are
/// measured from the ground-state energy, so the ground state is stationary.
pub fn free_evolution(
    state: &ManyBodyState,
    model: &HamiltonianModel,
    omega_delta: f64,
    tau: f64,
    cfg: &SolverConfig,
) -> Result<ManyBodyState> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidSchedule(format!(
            "waiting time {tau} must be >= 0"
        )));
    }
    if state.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: state.dim(),
        });
    }
    if tau == 0.0 {
        return Ok(state.clone());
    }
    let h = model.assemble(omega_delta, 1.0);
    let ground =
        eigensolver::lowest(&h.matrix, 1, cfg, &[]).map_err(|e| e.at_omega(omega_delta))?;
    let e0 = ground.values[0];
    let lo = e0 - 1e-8 * e0.abs().max(1.0);
    let hi = spectral_upper_bound(&h.matrix);
    propagate_chebyshev(&h.matrix, state, lo, hi, tau, e0)
}

/// `e^{iE_ref τ} e^{-iHτ} ψ` by Chebyshev expansion on the interval
/// `[lo, hi]` containing the spectrum.
pub(crate) fn propagate_chebyshev(
    h: &crate::sparse::CsrMatrix,
    state: &ManyBodyState,
    lo: f64,
    hi: f64,
    tau: f64,
    e_ref: f64,
) -> Result<ManyBodyState> {
    let n = state.dim();
    let half = 0.5 * (hi - lo).max(1e-12) * (1.0 + 1e-10);
    let mid = 0.5 * (hi + lo);
    let x = half * tau;
    let kmax = (x + 12.0 * x.cbrt() + 40.0).ceil() as usize;
    let j = bessel_j_sequence(x, kmax);
    let psi = state.amplitudes();
    let apply = |v: &[Complex64], out: &mut [Complex64]| {
        h.matvec_complex(v, out);
        for (o, x) in out.iter_mut().zip(v) {
            *o = (*o - x * mid) / half;
        }
    };
    let mut prev = psi.to_vec();
    let mut cur = vec![ZERO; n];
    apply(&prev, &mut cur);
    let mut acc: Vec<Complex64> = psi.iter().map(|p| p * j[0]).collect();
    let mut coeff = Complex64::new(0.0, -1.0);
    for (a, c) in acc.iter_mut().zip(&cur) {
        *a += c * (coeff * 2.0 * j[1]);
    }
    let mut next = vec![ZERO; n];
    for k in 2..=kmax {
        apply(&cur, &mut next);
        for i in 0..n {
            next[i] = next[i] * 2.0 - prev[i];
        }
        coeff *= Complex64::new(0.0, -1.0);
        let w = coeff * 2.0 * j[k];
        if j[k].abs() > 0.0 {
            for (a, v) in acc.iter_mut().zip(&next) {
                *a += v * w;
            }
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
        if k as f64 > x && j[k].abs() < 1e-17 {
            break;
        }
    }
    let phase = Complex64::from_polar(1.0, -(mid - e_ref) * tau);
    for a in acc.iter_mut() {
        *a *= phase;
    }
    Ok(ManyBodyState::from_amplitudes_unchecked(
        Arc::clone(state.basis()),
        acc,
    ))
}

// ---------------------------------------------------------------------------
// Anisotropy switch-off

/// Lowest levels at the fixed frequency used to define the leakage manifold.
const LEAKAGE_LEVELS: usize = 16;

/// Population threshold for a level to count as initially occupied.
const OCCUPIED: f64 = 1e-4;

/// Ramp the anisotropy linearly to zero over `duration` at fixed `omega_c`.
pub fn anisotropy_switch_off(
    frame: &IsotropicFrame,
    model: &HamiltonianModel,
    state: &ManyBodyState,
    omega_c: f64,
    duration: f64,
    cfg: &IntegratorConfig,
) -> Result<EvolutionResult> {
    if !(duration > 0.0) {
        return Err(Error::InvalidSchedule(format!(
            "switch-off duration {duration} must be > 0"
        )));
    }
    cfg.validate()?;
    let mut c = frame.to_frame(state)?;
    let n0 = linalg::cnorm(&c);
    let shift = initial_shift(frame, &c, omega_c, 1.0);

    let k = LEAKAGE_LEVELS.min(model.dim());
    let h = model.assemble(omega_c, 1.0);
    let low = lowest_eigenpairs_with(&h, k, &SolverConfig::default(), &[])
        .map_err(|e| e.at_omega(omega_c))?;
    let occupied: Vec<usize> = (0..k)
        .filter(|&i| {
            let v = low.state(model.basis(), i);
            v.fidelity(state) > OCCUPIED
        })
        .collect();

    let mut stepper = Stepper::new(frame, Some(model), cfg, shift);
    let drive = Drive {
        omega: (omega_c, omega_c),
        scale: (1.0, 0.0),
        duration,
    };
    stepper.run(&mut c, &drive)?;
    let mut result = stepper.finish(c, n0)?;
    let levels = frame.levels_at(omega_c);
    let cf = frame.to_frame(&result.state)?;
    let kept: f64 = occupied.iter().map(|&i| cf[levels[i]].norm_sqr()).sum();
    result.diagnostics.leakage = Some((1.0 - kept).max(0.0));
    Ok(result)
}

/// Full eigen-decomposition of `H(Ω_c)` with the anisotropy on, used for the
/// infinitely slow switch-off.
#[derive(Clone, Debug)]
pub struct AdiabaticReadout {
    pub omega_c: f64,
    values: Vec<f64>,
    vectors: Mat<f64>,
    levels: Vec<usize>,
}

impl AdiabaticReadout {
    pub fn new(model: &HamiltonianModel, frame: &IsotropicFrame, omega_c: f64) -> Self {
        let h = model.assemble(omega_c, 1.0);
        let n = h.dim();
        let mut dense = Mat::<f64>::zeros(n, n);
        for r in 0..n {
            for (c, v) in h.matrix.row(r) {
                dense.write(r, c, v);
            }
        }
        let (values, vectors) = linalg::symmetric_eigen(&dense);
        AdiabaticReadout {
            omega_c,
            values,
            vectors,
            levels: frame.levels_at(omega_c),
        }
    }

    pub fn energies(&self) -> &[f64] {
        &self.values
    }

    /// Map the `k`-th level with anisotropy to the `k`-th isotropic level.
    /// Dynamical phases are not tracked.
    pub fn switch_off(&self, frame: &IsotropicFrame, state: &ManyBodyState) -> ManyBodyState {
        let n = self.values.len();
        let psi = state.amplitudes();
        let mut c = vec![ZERO; n];
        for k in 0..n {
            let mut acc = ZERO;
            for i in 0..n {
                acc += psi[i] * self.vectors.read(i, k);
            }
            c[self.levels[k]] = acc;
        }
        frame.from_frame(&c)
    }
}

/// Infinitely slow switch-off; see [`AdiabaticReadout`].
pub fn anisotropy_switch_off_adiabatic(
    model: &HamiltonianModel,
    frame: &IsotropicFrame,
    state: &ManyBodyState,
    omega_c: f64,
) -> EvolutionResult {
    let readout = AdiabaticReadout::new(model, frame, omega_c);
    EvolutionResult {
        state: readout.switch_off(frame, state),
        diagnostics: EvolutionDiagnostics::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_basis, TruncationSpec};
    use crate::hamiltonian::ModelParams;
    use approx::assert_relative_eq;

    fn model(n: usize, lmax: u32, nll: u32, gn6: f64, a: f64) -> HamiltonianModel {
        let spec = TruncationSpec::new(n, lmax, nll, true).unwrap();
        let basis = Arc::new(build_basis(&spec).unwrap());
        HamiltonianModel::new(ModelParams::from_gn6(gn6, a, spec).unwrap(), basis).unwrap()
    }

    #[test]
    fn schedule_invariants() {
        let mut s = RampSchedule::new();
        s.push_ramp(0.5, 0.01, Some(0.4)).unwrap();
        assert!(s.push_hold(0.4, 3.0).is_err());
        s.push_hold(0.5, 3.0).unwrap();
        s.push_ramp(0.45, 0.05, None).unwrap();
        s.validate().unwrap();
        assert_relative_eq!(s.total_time(), 10.0 + 3.0 + 1.0, epsilon = 1e-12);
        assert!(s.segments()[2].gamma < 0.0);
        assert!(s.push_ramp(0.6, 0.01, Some(0.3)).is_err());
        assert!(s.push_ramp(0.6, 0.0, None).is_err());
        assert_relative_eq!(s.physical_time_seconds(2.0), 7.0, epsilon = 1e-12);
    }

    #[test]
    fn bessel_sequence_matches_series() {
        // J_k(x) = Σ (-1)^m (x/2)^{2m+k} / (m! (m+k)!)
        let series = |k: usize, x: f64| {
            let mut term = (x / 2.0).powi(k as i32) / (1..=k).map(|i| i as f64).product::<f64>();
            let mut sum = term;
            for m in 1..60 {
                term *= -(x / 2.0).powi(2) / (m as f64 * (m + k) as f64);
                sum += term;
            }
            sum
        };
        for &x in &[0.3, 2.0, 7.5] {
            let j = bessel_j_sequence(x, 12);
            for (k, v) in j.iter().enumerate() {
                assert_relative_eq!(*v, series(k, x), epsilon = 1e-13, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn frame_diagonalises_isotropic_part() {
        let m = model(4, 8, 2, 1.0, 0.03);
        let frame = IsotropicFrame::new(&m).unwrap();
        let h = m.assemble(0.7, 0.0);
        for i in [0, 3, frame.dim() - 1] {
            let v = frame.eigenstate(i);
            let hv = crate::hamiltonian::apply(&h, &v).unwrap();
            let e = frame.energy(i, 0.7);
            for (a, b) in hv.amplitudes().iter().zip(v.amplitudes()) {
                assert!((a - b * e).norm() < 1e-10);
            }
        }
        // frame application equals the Fock-space one
        let psi =
            ManyBodyState::from_real(Arc::clone(m.basis()), &linalg::pseudo_random(m.dim(), 3))
                .unwrap();
        let c = frame.to_frame(&psi).unwrap();
        let mut hc = vec![ZERO; c.len()];
        frame.apply(0.8, 0.03, 0.0, &c, &mut hc);
        let back = frame.from_frame(&hc);
        let mut direct = vec![ZERO; m.dim()];
        m.apply_at(0.8, 0.03, psi.amplitudes(), &mut direct);
        for (a, b) in back.amplitudes().iter().zip(&direct) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn isotropic_eigenstate_only_picks_up_phase() {
        let m = model(4, 8, 2, 1.0, 0.0);
        let frame = IsotropicFrame::new(&m).unwrap();
        let i = 5;
        let init = frame.eigenstate(i);
        let schedule = RampSchedule::linear(0.4, 0.7, 0.05).unwrap();
        let out = integrate_in_frame(&frame, None, &init, &schedule, &IntegratorConfig::default())
            .unwrap();
        // ∫(E - Ω(t)L)dt with Ω linear
        let t = schedule.total_time();
        let phase = frame.energies_at_rest()[i] * t - frame.l_values()[i] * 0.5 * (0.4 + 0.7) * t;
        let expect = Complex64::from_polar(1.0, -phase);
        let ov = init.inner(&out.state);
        assert!((ov - expect).norm() < 1e-8, "{ov} vs {expect}");
    }

    #[test]
    fn free_evolution_matches_spectral_oracle() {
        let m = model(4, 8, 2, 1.0, 0.03);
        let h = m.assemble(0.84, 1.0);
        let dense = eigensolver::dense_lowest(&h.matrix, m.dim());
        let psi =
            ManyBodyState::from_real(Arc::clone(m.basis()), &linalg::pseudo_random(m.dim(), 9))
                .unwrap();
        let tau = 7.3;
        let out = free_evolution(&psi, &m, 0.84, tau, &SolverConfig::default()).unwrap();
        let e0 = dense.values[0];
        let mut expect = vec![ZERO; m.dim()];
        for (e, v) in dense.values.iter().zip(&dense.vectors) {
            let c: Complex64 = v.iter().zip(psi.amplitudes()).map(|(a, b)| b * *a).sum();
            let ph = c * Complex64::from_polar(1.0, -(e - e0) * tau);
            for (x, a) in expect.iter_mut().zip(v) {
                *x += ph * *a;
            }
        }
        for (a, b) in out.amplitudes().iter().zip(&expect) {
            assert!((a - b).norm() < 1e-10);
        }
        assert_relative_eq!(out.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rk45_hold_matches_free_evolution() {
        let m = model(4, 8, 2, 1.0, 0.03);
        let frame = IsotropicFrame::new(&m).unwrap();
        let psi =
            ManyBodyState::from_real(Arc::clone(m.basis()), &linalg::pseudo_random(m.dim(), 4))
                .unwrap();
        let tau = 6.0;
        let held = integrate_in_frame(
            &frame,
            None,
            &psi,
            &RampSchedule::hold(0.84, tau).unwrap(),
            &IntegratorConfig::default(),
        )
        .unwrap();
        let free = free_evolution(&psi, &m, 0.84, tau, &SolverConfig::default()).unwrap();
        let e0 = eigensolver::dense_lowest(&m.assemble(0.84, 1.0).matrix, 1).values[0];
        let ph = Complex64::from_polar(1.0, -e0 * tau);
        for (a, b) in held.state.amplitudes().iter().zip(free.amplitudes()) {
            assert!((a - b * ph).norm() < 1e-8);
        }
        // energy is conserved at constant Ω
        let h = m.assemble(0.84, 1.0);
        let energy = |s: &ManyBodyState| s.inner(&crate::hamiltonian::apply(&h, s).unwrap()).re;
        assert_relative_eq!(energy(&held.state), energy(&psi), epsilon = 1e-8);
    }

    #[test]
    fn rk45_ramp_matches_sliced_exponential() {
        let m = model(2, 4, 2, 1.0, 0.03);
        let frame = IsotropicFrame::new(&m).unwrap();
        let psi =
            ManyBodyState::from_real(Arc::clone(m.basis()), &linalg::pseudo_random(m.dim(), 2))
                .unwrap();
        let schedule = RampSchedule::linear(0.5, 0.9, 0.1).unwrap();
        let out = integrate_in_frame(&frame, None, &psi, &schedule, &IntegratorConfig::default())
            .unwrap();
        // midpoint exponentials; error O(dt²)
        let slices = 4000;
        let dt = schedule.total_time() / slices as f64;
        let mut amps = psi.amplitudes().to_vec();
        for k in 0..slices {
            let omega = 0.5 + 0.4 * (k as f64 + 0.5) / slices as f64;
            let sol = eigensolver::dense_lowest(&m.assemble(omega, 1.0).matrix, m.dim());
            let mut next = vec![ZERO; amps.len()];
            for (e, v) in sol.values.iter().zip(&sol.vectors) {
                let c: Complex64 = v.iter().zip(&amps).map(|(a, b)| b * *a).sum::<Complex64>()
                    * Complex64::from_polar(1.0, -e * dt);
                for (x, a) in next.iter_mut().zip(v) {
                    *x += c * *a;
                }
            }
            amps = next;
        }
        for (a, b) in out.state.amplitudes().iter().zip(&amps) {
            assert!((a - b).norm() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn free_evolution_identity_cases() {
        let m = model(4, 8, 2, 1.0, 0.03);
        let psi =
            ManyBodyState::from_real(Arc::clone(m.basis()), &linalg::pseudo_random(m.dim(), 1))
                .unwrap();
        let same = free_evolution(&psi, &m, 0.8, 0.0, &SolverConfig::default()).unwrap();
        assert_eq!(same.amplitudes(), psi.amplitudes());
        let h = m.assemble(0.8, 1.0);
        let gs = lowest_eigenpairs_with(&h, 1, &SolverConfig::default(), &[])
            .unwrap()
            .state(m.basis(), 0);
        let out = free_evolution(&gs, &m, 0.8, 13.0, &SolverConfig::default()).unwrap();
        assert!((gs.inner(&out) - Complex64::new(1.0, 0.0)).norm() < 1e-10);
        assert!(free_evolution(&psi, &m, 0.8, -1.0, &SolverConfig::default()).is_err());
    }

    #[test]
    fn sudden_shift_trivial_cases() {
        let m = model(4, 8, 2, 1.0, 0.03);
        let frame = IsotropicFrame::new(&m).unwrap();
        let h = m.assemble(0.84, 1.0);
        let gs = lowest_eigenpairs_with(&h, 1, &SolverConfig::default(), &[])
            .unwrap()
            .state(m.basis(), 0);
        let cfg = IntegratorConfig::default();
        let none = sudden_shift(&frame, &gs, 0.84, 0.84, 5e-4, SuddenMode::Ramped, &cfg).unwrap();
        assert_eq!(none.fidelity, gs.fidelity(&gs));
        let inst = sudden_shift(
            &frame,
            &gs,
            0.84,
            0.83,
            5e-4,
            SuddenMode::Instantaneous,
            &cfg,
        )
        .unwrap();
        assert_relative_eq!(inst.fidelity, 1.0, epsilon = 1e-14);
        let ramp = sudden_shift(&frame, &gs, 0.84, 0.8376, 5e-4, SuddenMode::Ramped, &cfg).unwrap();
        assert!(ramp.fidelity > 0.96 && ramp.fidelity <= 1.0 + 1e-12);
        assert!(ramp.result.diagnostics.norm_drift < NORM_DRIFT_BOUND);
    }

    #[test]
    fn switch_off_at_zero_scale_is_identity_and_limit_is_populations() {
        let m = model(4, 8, 2, 1.0, 0.03);
        let frame = IsotropicFrame::new(&m).unwrap();
        let readout = AdiabaticReadout::new(&m, &frame, 0.84);
        // ground state with anisotropy maps onto the isotropic ground level
        let h = m.assemble(0.84, 1.0);
        let gs = lowest_eigenpairs_with(&h, 1, &SolverConfig::default(), &[])
            .unwrap()
            .state(m.basis(), 0);
        let out = readout.switch_off(&frame, &gs);
        let lvl = frame.levels_at(0.84);
        assert_relative_eq!(
            out.fidelity(&frame.eigenstate(lvl[0])),
            1.0,
            epsilon = 1e-10
        );
        assert_relative_eq!(out.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn plan_scaling_and_errors() {
        let m = model(4, 8, 2, 1.0, 0.03);
        let cfg = SolverConfig::default();
        let plan = plan_adiabatic_ramp(&m, 0.4, 0.84, 0.01, 0.01, &cfg).unwrap();
        assert_eq!(plan.segments.len(), 44);
        assert_relative_eq!(plan.segments.last().unwrap().omega_end, 0.84);
        for s in &plan.segments {
            assert!(s.gap_subgrid <= s.gap_endpoints + 1e-15);
            assert_relative_eq!(
                s.gamma_subgrid,
                s.gap_subgrid.powi(2) * 0.1 / 4.0,
                max_relative = 1e-12
            );
        }
        plan.schedule().validate().unwrap();
        assert!(plan.total_time() >= plan.total_time_endpoints());
        // doubling the gap quadruples the rate
        assert_relative_eq!(
            adiabatic_rate(0.2, 4, 0.01),
            4.0 * adiabatic_rate(0.1, 4, 0.01),
            max_relative = 1e-14
        );
        assert!(plan_adiabatic_ramp(&m, 0.9, 0.84, 0.01, 0.01, &cfg).is_err());
        // without anisotropy the lowest levels of different L cross exactly
        let iso = model(4, 8, 2, 1.0, 0.0);
        let frame = IsotropicFrame::new(&iso).unwrap();
        let a = frame.levels_at(0.6)[0];
        let e = frame.energies_at_rest();
        let l = frame.l_values();
        let cross = (0..frame.dim())
            .filter(|&i| l[i] > l[a])
            .map(|i| (e[i] - e[a]) / (l[i] - l[a]))
            .fold(f64::INFINITY, f64::min);
        assert!(matches!(
            plan_adiabatic_ramp(&iso, cross - 0.01, cross, 0.01, 0.01, &cfg),
            Err(Error::ZeroGap { .. })
        ));
    }
}
