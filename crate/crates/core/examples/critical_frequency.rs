// Locate the rotation frequency where the two leading natural orbitals are
// equally populated, then decompose the ground state there over two modes.
//
// `cargo run --release --example critical_frequency -- 12 1.0`

use std::sync::Arc;

use rotgyro::basis::{build_basis, TruncationSpec};
use rotgyro::eigensolver::SolverConfig;
use rotgyro::hamiltonian::{HamiltonianModel, ModelParams};
use rotgyro::spectrum::{locate_critical_frequency, lowest_eigenpairs};
use rotgyro::states::{angular_momentum_moments, mode_entropy, spdm, two_mode_project};

fn arg<T: std::str::FromStr>(i: usize, default: T) -> T {
    std::env::args()
        .nth(i)
        .and_then(|s| s.parse().ok())
        .unwrap_or(default)
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let n: usize = arg(1, 4);
    let gn6: f64 = arg(2, 1.0);
    let spec = TruncationSpec::standard(n)?;
    let model = HamiltonianModel::new(
        ModelParams::from_gn6(gn6, 0.03, spec)?,
        Arc::new(build_basis(&spec)?),
    )?;
    let cp = locate_critical_frequency(&model, (0.6, 0.9999), &SolverConfig::default())?;
    println!(
        "Ω_c = {:.6}; smallest gap {:.3e} at Ω = {:.6}",
        cp.omega_c, cp.min_gap, cp.min_gap_omega
    );

    let gs = lowest_eigenpairs(&model.assemble(cp.omega_c, 1.0), 1, 1e-10)?.state(model.basis(), 0);
    let modes = spdm(&gs);
    let d = two_mode_project(&gs, &modes)?;
    println!("leading populations {:.4?}", &modes.populations[..2]);
    for (k, p) in d.probabilities.iter().enumerate() {
        println!(
            "  P_{k} = {p:.4} {}",
            "#".repeat((p * 60.0).round() as usize)
        );
    }
    let (_, _, dl) = angular_momentum_moments(&gs);
    println!(
        "two-mode fidelity {:.4}, entropy {:.4}, ΔL = {dl:.4}",
        d.fidelity,
        mode_entropy(&d)
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
