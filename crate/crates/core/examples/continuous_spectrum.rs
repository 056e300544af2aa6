//! The position observable has no normalizable eigenfields; the solver returns
//! ridges P(q, p) concentrated on single q columns and labels the spectrum continuous.
//!
//! `cargo run --release --example continuous_spectrum`

use moyal::genvalue::{build_operators, solve_spectrum, SolveOptions};
use moyal::{DeformationParams, PhaseGrid, Polynomial};

fn main() -> moyal::Result<()> {
    let grid = PhaseGrid::square(64, 8.0, 1.0)?;
    let ops = build_operators(&Polynomial::q().into(), &grid, &DeformationParams::quantum(1.0))?;
    let res = solve_spectrum(&ops, 5, &SolveOptions::default())?;
    println!("spectrum kind: {:?}", res.spectrum_kind);
    for (e, f) in res.eigenvalues.iter().zip(&res.eigenfields) {
        let col = grid.nearest_q(*e);
        let on_ridge: f64 = (0..grid.n_p()).map(|j| f.at(col, j).re).sum::<f64>() * grid.cell_area();
        println!(
            "eigenvalue {e:+.6}  weight on column q = {:+.4}: {on_ridge:.12}",
            grid.q(col)
        );
    }
    Ok(())
}
