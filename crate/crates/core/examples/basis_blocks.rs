// Occupation-number basis of a few bosons, split into angular-momentum blocks.

use rotgyro::basis::{build_basis, landau_index, TruncationSpec};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = TruncationSpec::standard(6)?;
    let basis = build_basis(&spec)?;
    println!(
        "N = {}, l_max = {}, {} orbitals, dimension {}",
        spec.n_particles,
        spec.l_max,
        basis.orbitals().len(),
        basis.dim()
    );
    for b in basis.blocks() {
        let first = basis.state(b.range.start);
        println!(
            "  L = {:2}: {:4} states, e.g. {:?} (Landau index {})",
            b.l,
            b.range.len(),
            first,
            landau_index(&first)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
