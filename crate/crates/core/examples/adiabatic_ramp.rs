// Plan the slowest-needed ramp from Ω₀ = 0.4 up to Ω_c and simulate it.

use std::sync::Arc;

use rotgyro::basis::{build_basis, TruncationSpec};
use rotgyro::dynamics::{
    integrate_tdse, plan_adiabatic_ramp, IntegratorConfig, DEFAULT_TRAP_ANGULAR_FREQUENCY,
};
use rotgyro::eigensolver::SolverConfig;
use rotgyro::hamiltonian::{HamiltonianModel, ModelParams};
use rotgyro::spectrum::{locate_critical_frequency, lowest_eigenpairs};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = TruncationSpec::standard(4)?;
    let model = HamiltonianModel::new(
        ModelParams::from_gn6(1.0, 0.03, spec)?,
        Arc::new(build_basis(&spec)?),
    )?;
    let solver = SolverConfig::default();
    let omega_c = locate_critical_frequency(&model, (0.6, 0.9999), &solver)?.omega_c;
    let plan = plan_adiabatic_ramp(&model, 0.4, omega_c, 0.01, 0.01, &solver)?;
    let w = DEFAULT_TRAP_ANGULAR_FREQUENCY;
    println!(
        "{} segments, T = {:.1} ({:.3} s at 2.1 kHz; endpoint-gap variant {:.3} s), fits in 16 s: {}",
        plan.segments.len(),
        plan.total_time(),
        plan.seconds(w),
        plan.seconds_endpoints(w),
        plan.feasible(w)
    );

    let start = lowest_eigenpairs(&model.assemble(0.4, 1.0), 1, 1e-10)?.state(model.basis(), 0);
    let cfg = IntegratorConfig {
        rtol: 1e-8,
        trace_interval: Some(plan.total_time() / 8.0),
        track_ground_state: true,
        ..IntegratorConfig::default()
    };
    let res = integrate_tdse(&model, &start, &plan.schedule(), &cfg)?;
    for p in &res.diagnostics.trace {
        println!(
            "t = {:8.1}  Ω = {:.4}  ground-state fidelity {:.5}  <L> = {:.3}",
            p.time,
            p.omega,
            p.ground_state_fidelity.unwrap_or(f64::NAN),
            p.mean_l
        );
    }
    println!(
        "{} steps ({} rejected), norm drift {:.1e}",
        res.diagnostics.steps, res.diagnostics.rejected_steps, res.diagnostics.norm_drift
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
