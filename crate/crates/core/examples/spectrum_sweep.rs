// Lowest many-body levels as the trap rotation speeds up.
//
// `cargo run --release --example spectrum_sweep -- 8 1.0` for N = 8, gN/6 = 1.

use std::sync::Arc;

use rotgyro::basis::{build_basis, TruncationSpec};
use rotgyro::eigensolver::SolverConfig;
use rotgyro::hamiltonian::{HamiltonianModel, ModelParams};
use rotgyro::spectrum::{linspace, sweep};

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
    let sw = sweep(
        &model,
        &linspace(0.7, 0.95, 11),
        4,
        &SolverConfig::default(),
        false,
    )?;
    for (w, e) in sw.omegas.iter().zip(&sw.values) {
        println!(
            "Ω = {w:.3}  E = {:.6} {:.6} {:.6} {:.6}",
            e[0], e[1], e[2], e[3]
        );
    }
    let (w, gap) = sw.min_gap();
    println!("smallest gap on the grid: {gap:.5} at Ω = {w:.3}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
