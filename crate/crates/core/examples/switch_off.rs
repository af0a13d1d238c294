// Turning the anisotropy off at Ω_c: finite-duration ramps against the
// infinitely slow limit.

use std::sync::Arc;

use rotgyro::basis::{build_basis, TruncationSpec};
use rotgyro::dynamics::{
    anisotropy_switch_off, anisotropy_switch_off_adiabatic, IntegratorConfig, IsotropicFrame,
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
    let omega_c =
        locate_critical_frequency(&model, (0.6, 0.9999), &SolverConfig::default())?.omega_c;
    let psi = lowest_eigenpairs(&model.assemble(omega_c, 1.0), 1, 1e-10)?.state(model.basis(), 0);
    let frame = IsotropicFrame::new(&model)?;
    let limit = anisotropy_switch_off_adiabatic(&model, &frame, &psi, omega_c)
        .state
        .block_populations();
    println!("adiabatic limit: {limit:.4?}");
    for duration in [100.0, 1000.0, 4000.0] {
        let res = anisotropy_switch_off(
            &frame,
            &model,
            &psi,
            omega_c,
            duration,
            &IntegratorConfig::default(),
        )?;
        println!(
            "T = {duration:6.0}: {:.4?}, leakage {:.2e}",
            res.state.block_populations(),
            res.diagnostics.leakage.unwrap_or(0.0)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
