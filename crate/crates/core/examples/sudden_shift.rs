// How well the entangled state survives a fast change of the frame frequency.

use std::sync::Arc;

use rotgyro::basis::{build_basis, TruncationSpec};
use rotgyro::dynamics::{sudden_shift, IntegratorConfig, IsotropicFrame, SuddenMode};
use rotgyro::eigensolver::SolverConfig;
use rotgyro::hamiltonian::{HamiltonianModel, ModelParams};
use rotgyro::spectrum::{locate_critical_frequency, lowest_eigenpairs};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = TruncationSpec::standard(6)?;
    let model = HamiltonianModel::new(
        ModelParams::from_gn6(1.0, 0.03, spec)?,
        Arc::new(build_basis(&spec)?),
    )?;
    let omega_c =
        locate_critical_frequency(&model, (0.6, 0.9999), &SolverConfig::default())?.omega_c;
    let psi = lowest_eigenpairs(&model.assemble(omega_c, 1.0), 1, 1e-10)?.state(model.basis(), 0);
    let frame = IsotropicFrame::new(&model)?;
    for shift in [0.0005, 0.001, 0.0024, 0.01] {
        let s = sudden_shift(
            &frame,
            &psi,
            omega_c,
            omega_c - shift,
            0.5e-3,
            SuddenMode::Ramped,
            &IntegratorConfig::default(),
        )?;
        println!(
            "ΔΩ = {shift:.4}: fidelity {:.5}, bound √(2γ/ΔL) = {:.4}{}",
            s.fidelity,
            s.guard,
            if s.guard_violated { " (violated)" } else { "" }
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
