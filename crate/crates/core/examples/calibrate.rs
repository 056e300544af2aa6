//! Recover the deformation parameter b from the oscillator ground-state energy.
//!
//! `cargo run --release --example calibrate`

use moyal::analysis::{calibrate_b, calibrate_b_numerical};
use moyal::PhaseGrid;

fn main() -> moyal::Result<()> {
    let grid = PhaseGrid::square(64, 8.0, 1.0)?;
    for omega in [0.3, 1.0, 2.0, 7.0] {
        let closed = calibrate_b(&grid, 1.0, omega)?;
        println!("omega {omega:>4}: b = {closed:.15}");
    }
    let numerical = calibrate_b_numerical(&grid, 1.0)?;
    println!("from a numerical ground-state solve: b = {numerical:.10}");
    Ok(())
}
