//! Phase imprinting by an external rotation, read-out, and the precision it
//! buys.
//!
//! One protocol run prepares the ground state `|Ψ_I⟩` of `H(Ω_c)`, shifts the
//! frame frequency to `Ω_Δ = Ω_c − Ω_ext`, waits `τ`, returns to `Ω_c`, turns
//! the anisotropy off and measures over isotropic eigenstates.

use std::sync::Arc;

use num_complex::Complex64;

use crate::dynamics::{
    anisotropy_switch_off, integrate_in_frame, plan_adiabatic_ramp, propagate_chebyshev,
    sudden_shift, AdiabaticReadout, IntegratorConfig, IsotropicFrame, SuddenMode,
};
use crate::eigensolver::{self, SolverConfig};
use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianModel;
use crate::linalg;
use crate::output::CsvTable;
use crate::spectrum::lowest_eigenpairs_with;
use crate::states::{angular_momentum_moments, ManyBodyState};

/// Default maximum rate of the sudden frequency shift.
pub const DEFAULT_GAMMA_MAX: f64 = 0.5e-3;

/// Default start of the preparation ramp.
pub const DEFAULT_OMEGA_START: f64 = 0.4;

/// Derivatives at or below this magnitude count as zero.
pub const DERIVATIVE_FLOOR: f64 = 1e-10;

/// Relative disagreement between the δ and δ/2 QFI estimates that is tolerated.
pub const QFI_DELTA_TOL: f64 = 0.01;

/// Relative disagreement above which the quadratic QFI is flagged invalid.
pub const QFI_QUADRATIC_TOL: f64 = 0.10;

/// `1/√N`.
pub fn shot_noise_limit(n: usize) -> f64 {
    1.0 / (n as f64).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasurementScheme {
    /// Projective measurement of total angular momentum, estimator `⟨L⟩`.
    LMoment,
    /// Whether the gas ends in the lowest isotropic level.
    Binomial,
}

/// How the entangled initial state is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preparation {
    /// Diagonalise `H(Ω_c)` directly.
    Direct,
    /// Simulate the planned adiabatic ramp from `omega_start`.
    Ramp,
}

/// How the anisotropy is removed before measurement.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Readout {
    /// Infinitely slow switch-off.
    Adiabatic,
    /// Linear switch-off over `duration`.
    Simulated { duration: f64 },
}

#[derive(Clone, Debug)]
pub struct ProtocolConfig {
    pub omega_c: f64,
    pub omega_start: f64,
    pub tau: f64,
    pub omega_ext: Vec<f64>,
    pub gamma_max: f64,
    pub sudden: SuddenMode,
    pub preparation: Preparation,
    pub readout: Readout,
    /// Segment width for the preparation ramp.
    pub delta_omega: f64,
    pub p01: f64,
    pub integrator: IntegratorConfig,
    pub solver: SolverConfig,
}

impl ProtocolConfig {
    pub fn new(omega_c: f64, tau: f64, omega_ext: Vec<f64>) -> Self {
        ProtocolConfig {
            omega_c,
            omega_start: DEFAULT_OMEGA_START,
            tau,
            omega_ext,
            gamma_max: DEFAULT_GAMMA_MAX,
            sudden: SuddenMode::Ramped,
            preparation: Preparation::Direct,
            readout: Readout::Adiabatic,
            delta_omega: 0.01,
            p01: 0.01,
            integrator: IntegratorConfig::default(),
            solver: SolverConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSchedule(m));
        if !(self.tau >= 0.0) || !self.tau.is_finite() {
            return bad(format!("waiting time {} must be >= 0", self.tau));
        }
        if !(self.gamma_max > 0.0) {
            return bad(format!("gamma_max {} must be > 0", self.gamma_max));
        }
        if !(self.omega_c > 0.0 && self.omega_c < 1.0) {
            return bad(format!("omega_c {} must lie in (0, 1)", self.omega_c));
        }
        if self.omega_ext.iter().any(|w| !w.is_finite()) {
            return bad("omega_ext grid contains a non-finite value".into());
        }
        if let Readout::Simulated { duration } = self.readout {
            if !(duration > 0.0) {
                return bad(format!("switch-off duration {duration} must be > 0"));
            }
        }
        self.integrator.validate()
    }
}

/// Uniform grid of `points` values over `[-half_width, half_width]`.
pub fn symmetric_grid(half_width: f64, points: usize) -> Vec<f64> {
    crate::spectrum::linspace(-half_width, half_width, points)
}

// ---------------------------------------------------------------------------
// Measurement

/// Outcome probabilities for one final state.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    /// `(L, p(L))` in ascending L.
    pub l_probabilities: Vec<(i32, f64)>,
    /// Probability of the lowest isotropic level, `x = 0`.
    pub p_ground: f64,
}

impl Distribution {
    pub fn total(&self) -> f64 {
        self.l_probabilities.iter().map(|(_, p)| p).sum()
    }

    pub fn mean_l(&self) -> f64 {
        self.l_probabilities
            .iter()
            .map(|&(l, p)| l as f64 * p)
            .sum::<f64>()
            / self.total()
    }

    pub fn variance_l(&self) -> f64 {
        let m = self.mean_l();
        let m2 = self
            .l_probabilities
            .iter()
            .map(|&(l, p)| (l as f64).powi(2) * p)
            .sum::<f64>()
            / self.total();
        (m2 - m * m).max(0.0)
    }

    /// `(p0, p1)`, summing to one exactly.
    pub fn binary(&self) -> (f64, f64) {
        let p0 = (self.p_ground / self.total()).clamp(0.0, 1.0);
        (p0, 1.0 - p0)
    }

    /// Estimator mean and variance for `scheme`.
    pub fn moments(&self, scheme: MeasurementScheme) -> (f64, f64) {
        match scheme {
            MeasurementScheme::LMoment => (self.mean_l(), self.variance_l()),
            MeasurementScheme::Binomial => {
                let (p0, p1) = self.binary();
                (p1, p0 * p1)
            }
        }
    }
}

/// Projectors onto the isotropic eigenstates at `Ω_c`.
#[derive(Clone, Debug)]
pub struct MeasurementModel {
    frame: Arc<IsotropicFrame>,
    omega_c: f64,
    ground: usize,
}

impl MeasurementModel {
    pub fn new(frame: Arc<IsotropicFrame>, omega_c: f64) -> Self {
        let ground = frame.levels_at(omega_c)[0];
        MeasurementModel {
            frame,
            omega_c,
            ground,
        }
    }

    pub fn omega_c(&self) -> f64 {
        self.omega_c
    }

    /// Angular momentum of the lowest isotropic level at `Ω_c`.
    pub fn ground_l(&self) -> i32 {
        self.frame.l_values()[self.ground].round() as i32
    }

    pub fn distribution(&self, state: &ManyBodyState) -> Result<Distribution> {
        let c = self.frame.to_frame(state)?;
        let l = self.frame.l_values();
        let mut by_l: Vec<(i32, f64)> = Vec::new();
        for (i, a) in c.iter().enumerate() {
            let li = l[i].round() as i32;
            match by_l.last_mut() {
                Some((lv, p)) if *lv == li => *p += a.norm_sqr(),
                _ => by_l.push((li, a.norm_sqr())),
            }
        }
        by_l.sort_by_key(|&(l, _)| l);
        by_l.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        Ok(Distribution {
            l_probabilities: by_l,
            p_ground: c[self.ground].norm_sqr(),
        })
    }
}

// ---------------------------------------------------------------------------
// Protocol

/// Per-point record of one protocol run.
#[derive(Clone, Debug)]
pub struct ProtocolPoint {
    pub omega_ext: f64,
    pub omega_delta: f64,
    pub distribution: Distribution,
    /// `|⟨after|before⟩|²` for the shift to `Ω_Δ` and the return to `Ω_c`.
    pub shift_fidelity: f64,
    pub return_fidelity: f64,
    pub guard_violated: bool,
    /// Largest norm drift over all stages.
    pub norm_drift: f64,
    /// Relative `⟨H(Ω_Δ)⟩` change during the wait.
    pub energy_drift: f64,
    /// Population lost from the low-lying manifold during a simulated switch-off.
    pub leakage: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ProtocolRun {
    pub omega_c: f64,
    pub tau: f64,
    pub n_particles: usize,
    pub initial: ManyBodyState,
    /// Distribution without any rotation signal.
    pub reference: Distribution,
    pub points: Vec<ProtocolPoint>,
}

impl ProtocolRun {
    pub fn distributions(&self) -> Vec<(f64, Distribution)> {
        self.points
            .iter()
            .map(|p| (p.omega_ext, p.distribution.clone()))
            .collect()
    }
}

/// Everything that does not depend on `Ω_ext`, built once per run.
pub struct Protocol<'a> {
    model: &'a HamiltonianModel,
    cfg: ProtocolConfig,
    frame: Arc<IsotropicFrame>,
    initial: ManyBodyState,
    measurement: MeasurementModel,
    readout: Option<AdiabaticReadout>,
}

/// State after the wait and its bookkeeping.
struct Imprinted {
    state: ManyBodyState,
    shift_fidelity: f64,
    return_fidelity: f64,
    guard_violated: bool,
    norm_drift: f64,
    energy_drift: f64,
}

impl<'a> Protocol<'a> {
    pub fn new(model: &'a HamiltonianModel, cfg: ProtocolConfig) -> Result<Self> {
        let frame = Arc::new(IsotropicFrame::new(model)?);
        Self::with_frame(model, frame, cfg)
    }

    pub fn with_frame(
        model: &'a HamiltonianModel,
        frame: Arc<IsotropicFrame>,
        cfg: ProtocolConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let initial = prepare(model, &frame, &cfg).map_err(|e| e.at_stage("preparation", 0.0))?;
        let measurement = MeasurementModel::new(Arc::clone(&frame), cfg.omega_c);
        let readout = match cfg.readout {
            Readout::Adiabatic => Some(AdiabaticReadout::new(model, &frame, cfg.omega_c)),
            Readout::Simulated { .. } => None,
        };
        Ok(Protocol {
            model,
            cfg,
            frame,
            initial,
            measurement,
            readout,
        })
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.cfg
    }

    pub fn initial(&self) -> &ManyBodyState {
        &self.initial
    }

    pub fn frame(&self) -> &Arc<IsotropicFrame> {
        &self.frame
    }

    pub fn measurement(&self) -> &MeasurementModel {
        &self.measurement
    }

    /// State after the shift, the wait and the return to `Ω_c`.
    pub fn imprinted_state(&self, omega_ext: f64) -> Result<ManyBodyState> {
        self.imprinted_state_after(omega_ext, self.cfg.tau)
    }

    /// [`Protocol::imprinted_state`] with waiting time `tau`.
    pub fn imprinted_state_after(&self, omega_ext: f64, tau: f64) -> Result<ManyBodyState> {
        Ok(self.imprint(omega_ext, tau)?.state)
    }

    fn imprint(&self, omega_ext: f64, tau: f64) -> Result<Imprinted> {
        let cfg = &self.cfg;
        let omega_c = cfg.omega_c;
        let omega_delta = omega_c - omega_ext;
        let shift = sudden_shift(
            &self.frame,
            &self.initial,
            omega_c,
            omega_delta,
            cfg.gamma_max,
            cfg.sudden,
            &cfg.integrator,
        )
        .map_err(|e| e.at_stage("shift", omega_ext))?;
        let shifted = shift.result.state;

        let h = self.model.assemble(omega_delta, 1.0);
        let ground = eigensolver::lowest(&h.matrix, 1, &cfg.solver, &[])
            .map_err(|e| e.at_omega(omega_delta).at_stage("wait", omega_ext))?;
        let e0 = ground.values[0];
        let lo = e0 - 1e-8 * e0.abs().max(1.0);
        let hi = h.matrix.norm_bound();
        let waited = propagate_chebyshev(&h.matrix, &shifted, lo, hi, tau, e0)
            .map_err(|e| e.at_stage("wait", omega_ext))?;
        let energy = |s: &ManyBodyState| {
            let mut out = vec![Complex64::new(0.0, 0.0); s.dim()];
            h.matrix.matvec_complex(s.amplitudes(), &mut out);
            linalg::cdot(s.amplitudes(), &out).re
        };
        let (e_before, e_after) = (energy(&shifted), energy(&waited));
        let energy_drift = (e_after - e_before).abs() / e_before.abs().max(1.0);
        let wait_drift = (waited.norm() - shifted.norm()).abs();

        let back = sudden_shift(
            &self.frame,
            &waited,
            omega_delta,
            omega_c,
            cfg.gamma_max,
            cfg.sudden,
            &cfg.integrator,
        )
        .map_err(|e| e.at_stage("return", omega_ext))?;
        let norm_drift = shift
            .result
            .diagnostics
            .norm_drift
            .max(back.result.diagnostics.norm_drift)
            .max(wait_drift);
        Ok(Imprinted {
            state: back.result.state,
            shift_fidelity: shift.fidelity,
            return_fidelity: back.fidelity,
            guard_violated: shift.guard_violated || back.guard_violated,
            norm_drift,
            energy_drift,
        })
    }

    fn read_out(
        &self,
        state: &ManyBodyState,
        omega_ext: f64,
    ) -> Result<(ManyBodyState, Option<f64>, f64)> {
        match (&self.readout, self.cfg.readout) {
            (Some(r), _) => Ok((r.switch_off(&self.frame, state), None, 0.0)),
            (None, Readout::Simulated { duration }) => {
                let res = anisotropy_switch_off(
                    &self.frame,
                    self.model,
                    state,
                    self.cfg.omega_c,
                    duration,
                    &self.cfg.integrator,
                )
                .map_err(|e| e.at_stage("switch-off", omega_ext))?;
                let drift = res.diagnostics.norm_drift;
                Ok((res.state, res.diagnostics.leakage, drift))
            }
            (None, Readout::Adiabatic) => unreachable!("adiabatic read-out is built eagerly"),
        }
    }

    pub fn run_point(&self, omega_ext: f64) -> Result<ProtocolPoint> {
        let imp = self.imprint(omega_ext, self.cfg.tau)?;
        let (fin, leakage, drift) = self.read_out(&imp.state, omega_ext)?;
        let distribution = self.measurement.distribution(&fin)?;
        Ok(ProtocolPoint {
            omega_ext,
            omega_delta: self.cfg.omega_c - omega_ext,
            distribution,
            shift_fidelity: imp.shift_fidelity,
            return_fidelity: imp.return_fidelity,
            guard_violated: imp.guard_violated,
            norm_drift: imp.norm_drift.max(drift),
            energy_drift: imp.energy_drift,
            leakage,
        })
    }

    pub fn run(&self) -> Result<ProtocolRun> {
        let (reference_state, _, _) = self.read_out(&self.initial, 0.0)?;
        let reference = self.measurement.distribution(&reference_state)?;
        let points = self
            .cfg
            .omega_ext
            .iter()
            .map(|&w| self.run_point(w))
            .collect::<Result<Vec<_>>>()?;
        Ok(ProtocolRun {
            omega_c: self.cfg.omega_c,
            tau: self.cfg.tau,
            n_particles: self.model.basis().spec().n_particles,
            initial: self.initial.clone(),
            reference,
            points,
        })
    }
}

fn prepare(
    model: &HamiltonianModel,
    frame: &IsotropicFrame,
    cfg: &ProtocolConfig,
) -> Result<ManyBodyState> {
    match cfg.preparation {
        Preparation::Direct => {
            let h = model.assemble(cfg.omega_c, 1.0);
            let sol = lowest_eigenpairs_with(&h, 1, &cfg.solver, &[])
                .map_err(|e| e.at_omega(cfg.omega_c))?;
            Ok(sol.state(model.basis(), 0))
        }
        Preparation::Ramp => {
            let plan = plan_adiabatic_ramp(
                model,
                cfg.omega_start,
                cfg.omega_c,
                cfg.delta_omega,
                cfg.p01,
                &cfg.solver,
            )?;
            let h = model.assemble(cfg.omega_start, 1.0);
            let start = lowest_eigenpairs_with(&h, 1, &cfg.solver, &[])
                .map_err(|e| e.at_omega(cfg.omega_start))?
                .state(model.basis(), 0);
            Ok(integrate_in_frame(frame, None, &start, &plan.schedule(), &cfg.integrator)?.state)
        }
    }
}

/// Full protocol on every grid point of `cfg`.
pub fn run_protocol(model: &HamiltonianModel, cfg: ProtocolConfig) -> Result<ProtocolRun> {
    Protocol::new(model, cfg)?.run()
}

// ---------------------------------------------------------------------------
// Precision

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrecisionPoint {
    pub omega_ext: f64,
    pub estimator_mean: f64,
    pub estimator_variance: f64,
    pub estimator_derivative: f64,
    /// Difference to the derivative from the doubled stencil, when available.
    pub richardson_error: Option<f64>,
    /// `ΔΩ_ext` for a single repetition.
    pub delta_omega: f64,
    /// `τ·ΔΩ_ext`.
    pub delta_omega_scaled: f64,
    pub divergent: bool,
}

/// Precision per grid point; `√n` is factored out and `τ` multiplied in.
#[derive(Clone, Debug)]
pub struct PrecisionCurve {
    pub scheme: MeasurementScheme,
    pub tau: f64,
    pub n_particles: usize,
    pub shot_noise: f64,
    pub points: Vec<PrecisionPoint>,
}

impl PrecisionCurve {
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(vec![
            "omega_ext",
            "estimator_mean",
            "estimator_derivative",
            "delta_omega_scaled",
            "shot_noise",
            "divergence_flag",
        ]);
        for p in &self.points {
            t.push(vec![
                crate::output::fmt_float(p.omega_ext),
                crate::output::fmt_float(p.estimator_mean),
                crate::output::fmt_float(p.estimator_derivative),
                crate::output::fmt_float(p.delta_omega_scaled),
                crate::output::fmt_float(self.shot_noise),
                u8::from(p.divergent).to_string(),
            ]);
        }
        t
    }

    pub fn regular_points(&self) -> impl Iterator<Item = &PrecisionPoint> {
        self.points.iter().filter(|p| !p.divergent)
    }
}

/// Three-point derivative on a possibly non-uniform grid.
fn derivative(x: &[f64], y: &[f64], i: usize, stride: usize) -> Option<f64> {
    let n = x.len();
    let (a, b, c) = if i >= stride && i + stride < n {
        (i - stride, i, i + stride)
    } else if i + 2 * stride < n && i < stride {
        (i, i + stride, i + 2 * stride)
    } else if i >= 2 * stride {
        (i - 2 * stride, i - stride, i)
    } else {
        return None;
    };
    // derivative of the interpolating parabola through (a, b, c) at x[i]
    let (x0, x1, x2) = (x[a], x[b], x[c]);
    let t = x[i];
    let l0 = (2.0 * t - x1 - x2) / ((x0 - x1) * (x0 - x2));
    let l1 = (2.0 * t - x0 - x2) / ((x1 - x0) * (x1 - x2));
    let l2 = (2.0 * t - x0 - x1) / ((x2 - x0) * (x2 - x1));
    Some(l0 * y[a] + l1 * y[b] + l2 * y[c])
}

/// Error propagation on the estimator of `scheme`.
pub fn estimate_precision(
    distributions: &[(f64, Distribution)],
    scheme: MeasurementScheme,
    tau: f64,
    n_particles: usize,
) -> Result<PrecisionCurve> {
    if distributions.len() < 3 {
        return Err(Error::GridTooSmall {
            needed: 3,
            got: distributions.len(),
        });
    }
    let x: Vec<f64> = distributions.iter().map(|(w, _)| *w).collect();
    if x.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidSchedule(
            "omega_ext grid must be strictly increasing".into(),
        ));
    }
    let moments: Vec<(f64, f64)> = distributions
        .iter()
        .map(|(_, d)| d.moments(scheme))
        .collect();
    let y: Vec<f64> = moments.iter().map(|m| m.0).collect();
    let d: Vec<f64> = (0..x.len())
        .map(|i| derivative(&x, &y, i, 1).expect("grid has three points"))
        .collect();
    let mut divergent: Vec<bool> = d.iter().map(|v| v.abs() <= DERIVATIVE_FLOOR).collect();
    // a sign change brackets a zero of the derivative
    for i in 0..d.len() - 1 {
        if d[i] * d[i + 1] < 0.0 {
            let j = if d[i].abs() <= d[i + 1].abs() {
                i
            } else {
                i + 1
            };
            divergent[j] = true;
        }
    }
    let points = (0..x.len())
        .map(|i| {
            let (mean, var) = moments[i];
            let delta = if divergent[i] {
                f64::INFINITY
            } else {
                var.sqrt() / d[i].abs()
            };
            PrecisionPoint {
                omega_ext: x[i],
                estimator_mean: mean,
                estimator_variance: var,
                estimator_derivative: d[i],
                richardson_error: derivative(&x, &y, i, 2).map(|d2| (d[i] - d2).abs() / 3.0),
                delta_omega: delta,
                delta_omega_scaled: tau * delta,
                divergent: divergent[i],
            }
        })
        .collect();
    Ok(PrecisionCurve {
        scheme,
        tau,
        n_particles,
        shot_noise: shot_noise_limit(n_particles),
        points,
    })
}

// ---------------------------------------------------------------------------
// Quantum Fisher information

/// `4τ²⟨(ΔL)²⟩`.
pub fn qfi_quadratic_approx(initial: &ManyBodyState, tau: f64) -> f64 {
    let (_, _, dl) = angular_momentum_moments(initial);
    4.0 * tau * tau * dl * dl
}

fn aligned(reference: &[Complex64], state: &ManyBodyState) -> Vec<Complex64> {
    let ov = linalg::cdot(state.amplitudes(), reference);
    let phase = if ov.norm() > 0.0 {
        ov / ov.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    state.amplitudes().iter().map(|a| a * phase).collect()
}

fn qfi_at<F>(family: &F, omega: f64, centre: &[Complex64], delta: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<ManyBodyState>,
{
    let plus = aligned(centre, &family(omega + delta)?);
    let minus = aligned(centre, &family(omega - delta)?);
    let deriv: Vec<Complex64> = plus
        .iter()
        .zip(&minus)
        .map(|(p, m)| (p - m) / (2.0 * delta))
        .collect();
    let dd = linalg::cdot(&deriv, &deriv).re;
    let dpsi = linalg::cdot(&deriv, centre).norm_sqr();
    Ok((4.0 * (dd - dpsi)).max(0.0))
}

/// `4[⟨Ψ′|Ψ′⟩ − |⟨Ψ′|Ψ⟩|²]` by central differences. The value at `delta/2` is
/// returned after checking it against the one at `delta`.
pub fn qfi_pure<F>(family: F, omega: f64, delta: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<ManyBodyState>,
{
    if !(delta > 0.0) {
        return Err(Error::InvalidSchedule(format!(
            "QFI step {delta} must be > 0"
        )));
    }
    let centre = family(omega)?;
    let n = centre.norm();
    let c: Vec<Complex64> = centre.amplitudes().iter().map(|a| a / n).collect();
    let coarse = qfi_at(&family, omega, &c, delta)?;
    let fine = qfi_at(&family, omega, &c, 0.5 * delta)?;
    let scale = coarse.abs().max(fine.abs());
    if scale > 1e-10 && (coarse - fine).abs() > QFI_DELTA_TOL * scale {
        return Err(Error::DeltaUnstable { coarse, fine });
    }
    Ok(fine)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QfiComparison {
    pub tau: f64,
    pub pure: f64,
    pub quadratic: f64,
    /// `|pure − quadratic| / pure`.
    pub relative_difference: f64,
    /// The quadratic form is within [`QFI_QUADRATIC_TOL`] of the exact value.
    pub quadratic_valid: bool,
}

impl QfiComparison {
    pub fn new(tau: f64, pure: f64, quadratic: f64) -> Self {
        let rel = if pure == 0.0 && quadratic == 0.0 {
            0.0
        } else {
            (pure - quadratic).abs() / pure.abs().max(quadratic.abs())
        };
        QfiComparison {
            tau,
            pure,
            quadratic,
            relative_difference: rel,
            quadratic_valid: rel <= QFI_QUADRATIC_TOL,
        }
    }
}
