// Contact-interaction and quadrupole matrix elements between oscillator
// orbitals, compared with the closed form inside the lowest Landau level.

use rotgyro::basis::Orbital;
use rotgyro::hamiltonian::{anisotropy_element, interaction_element, lll_interaction_element};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for (m1, m2, m3, m4) in [(0, 0, 0, 0), (1, 1, 2, 0), (2, 2, 1, 3), (3, 1, 2, 2)] {
        let o = |m: u32| Orbital::new(0, m as i32);
        let q = interaction_element(&o(m1), &o(m2), &o(m3), &o(m4));
        let exact = lll_interaction_element(m1, m2, m3, m4);
        println!("V({m1}{m2};{m3}{m4}) = {q:.12}  closed form {exact:.12}");
    }
    let pairs = [
        (Orbital::new(0, 0), Orbital::new(0, 2)),
        (Orbital::new(0, 1), Orbital::new(0, -1)),
        (Orbital::new(1, 0), Orbital::new(0, 2)),
    ];
    for (a, b) in pairs {
        println!(
            "<{a:?}|2(x²-y²)|{b:?}> = {:.12}",
            anisotropy_element(&a, &b)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
