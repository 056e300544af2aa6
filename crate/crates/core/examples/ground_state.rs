//! Oscillator ground state from the star-genvalue equations.
//!
//! Run with `cargo run --release --example ground_state`.

use std::time::Instant;

use moyal::genvalue::{build_operators, solve_spectrum, SolveOptions};
use moyal::{DeformationParams, Field, PhaseGrid, Polynomial};

fn main() -> moyal::Result<()> {
    let grid = PhaseGrid::square(64, 8.0, 1.0)?;
    let params = DeformationParams::quantum(1.0);
    let h = Polynomial::harmonic(1.0);

    let start = Instant::now();
    let op = build_operators(&h.into(), &grid, &params)?;
    let res = solve_spectrum(&op, 1, &SolveOptions::default())?;
    let elapsed = start.elapsed();

    // exp(-(q^2 + p^2)) / pi is the closed-form answer for hbar = omega = 1.
    let exact = Field::from_fn(&grid, |q, p| (-(q * q + p * p)).exp() / std::f64::consts::PI);
    let err = res.eigenfields[0].linf_distance(&exact)?;

    println!("E0            = {:.12}", res.eigenvalues[0]);
    println!("|E0 - 1/2|    = {:.3e}", (res.eigenvalues[0] - 0.5).abs());
    println!("L-inf vs exp  = {err:.3e}");
    println!("residual L+   = {:.3e}", res.residual_plus[0]);
    println!("residual L-   = {:.3e}", res.residual_minus[0]);
    println!("spectrum      = {:?}", res.spectrum_kind);
    println!("solve time    = {:.2?}", elapsed);
    Ok(())
}
