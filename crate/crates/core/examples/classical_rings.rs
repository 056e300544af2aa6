//! Classical genvalue states of the oscillator: energy shells, and the check that
//! they are stationary under the Poisson flow of H.
//!
//! `cargo run --release --example classical_rings`

use moyal::genvalue::{classical_spectrum, classical_spectrum_with, pb_expectation_check, LevelBand};
use moyal::{ObservableSpec, PhaseGrid, Polynomial};

fn main() -> moyal::Result<()> {
    let grid = PhaseGrid::square(128, 8.0, 1.0)?;
    let h: ObservableSpec = Polynomial::harmonic(1.0).into();
    let probe: ObservableSpec = Polynomial::zero().with_term(3, 1, 1.0).with_term(0, 2, -0.5).into();
    for energy in [1.0, 2.5, 4.0, 6.0] {
        let sharp = classical_spectrum(&h, &grid, energy)?;
        let cells = sharp.values().iter().filter(|v| v.re != 0.0).count();
        let smooth = classical_spectrum_with(&h, &grid, energy, LevelBand::Smooth { width: 1.0 })?;
        let pb = pb_expectation_check(&h, &probe, &smooth)?;
        println!("E = {energy:3}: sharp shell on {cells:4} cells, <{{H, q^3 p - p^2/2}}> on smooth shell {pb:+.2e}");
    }
    Ok(())
}
