// Full sensing sequence over a window of external rotations, with the
// precision of both read-out schemes against the shot-noise limit.
//
// `cargo run --release --example protocol_precision -- 12 1.0 10`

use std::sync::Arc;

use rotgyro::basis::{build_basis, TruncationSpec};
use rotgyro::eigensolver::SolverConfig;
use rotgyro::hamiltonian::{HamiltonianModel, ModelParams};
use rotgyro::metrology::{
    estimate_precision, run_protocol, symmetric_grid, MeasurementScheme, ProtocolConfig,
};
use rotgyro::spectrum::locate_critical_frequency;

fn arg<T: std::str::FromStr>(i: usize, default: T) -> T {
    std::env::args()
        .nth(i)
        .and_then(|s| s.parse().ok())
        .unwrap_or(default)
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let n: usize = arg(1, 4);
    let gn6: f64 = arg(2, 1.0);
    let tau: f64 = arg(3, 10.0);
    let spec = TruncationSpec::standard(n)?;
    let model = HamiltonianModel::new(
        ModelParams::from_gn6(gn6, 0.03, spec)?,
        Arc::new(build_basis(&spec)?),
    )?;
    let omega_c =
        locate_critical_frequency(&model, (0.6, 0.9999), &SolverConfig::default())?.omega_c;
    let run = run_protocol(
        &model,
        ProtocolConfig::new(omega_c, tau, symmetric_grid(0.005 * omega_c, 11)),
    )?;
    let moment = estimate_precision(&run.distributions(), MeasurementScheme::LMoment, tau, n)?;
    let binomial = estimate_precision(&run.distributions(), MeasurementScheme::Binomial, tau, n)?;
    println!(
        "Ω_c = {omega_c:.5}, shot noise 1/√N = {:.4}",
        moment.shot_noise
    );
    println!("   Ω_ext    τΔΩ (L)   τΔΩ (binary)");
    for (a, b) in moment.points.iter().zip(&binomial.points) {
        let show = |p: &rotgyro::metrology::PrecisionPoint| {
            if p.divergent {
                "   divergent".to_string()
            } else {
                format!("{:12.4}", p.delta_omega_scaled)
            }
        };
        println!("{:+.5} {} {}", a.omega_ext, show(a), show(b));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
