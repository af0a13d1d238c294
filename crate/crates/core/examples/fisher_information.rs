// Quantum Fisher information of the imprinted state against its
// small-waiting-time form 4τ²ΔL².

use std::sync::Arc;

use rotgyro::basis::{build_basis, TruncationSpec};
use rotgyro::dynamics::SuddenMode;
use rotgyro::eigensolver::SolverConfig;
use rotgyro::hamiltonian::{HamiltonianModel, ModelParams};
use rotgyro::metrology::{qfi_pure, qfi_quadratic_approx, Protocol, ProtocolConfig, QfiComparison};
use rotgyro::spectrum::locate_critical_frequency;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = TruncationSpec::standard(6)?;
    let model = HamiltonianModel::new(
        ModelParams::from_gn6(1.0, 0.03, spec)?,
        Arc::new(build_basis(&spec)?),
    )?;
    let omega_c =
        locate_critical_frequency(&model, (0.6, 0.9999), &SolverConfig::default())?.omega_c;
    let mut cfg = ProtocolConfig::new(omega_c, 1.0, vec![0.0]);
    cfg.sudden = SuddenMode::Instantaneous;
    let proto = Protocol::new(&model, cfg)?;
    for tau in [0.1, 0.5, 1.0, 5.0, 20.0] {
        let f = qfi_pure(|w| proto.imprinted_state_after(w, tau), 0.0, 1e-5)?;
        let c = QfiComparison::new(tau, f, qfi_quadratic_approx(proto.initial(), tau));
        println!(
            "τ = {tau:5.1}: F_Q = {:10.3}, 4τ²ΔL² = {:10.3} ({})",
            c.pure,
            c.quadratic,
            if c.quadratic_valid { "close" } else { "apart" }
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
