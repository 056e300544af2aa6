//! Lowest five oscillator levels, checked against a truncated Fock-space diagonalization.
//!
//! `cargo run --release --example excited_spectrum`

use moyal::analysis::StateReport;
use moyal::genvalue::{build_operators, solve_spectrum, SolveOptions};
use moyal::oracle::{oracle_spectrum, BasisParams};
use moyal::{DeformationParams, ObservableSpec, PhaseGrid, Polynomial};

fn main() -> moyal::Result<()> {
    let grid = PhaseGrid::square(64, 8.0, 1.0)?;
    let h: ObservableSpec = Polynomial::harmonic(1.0).into();
    let ops = build_operators(&h, &grid, &DeformationParams::quantum(1.0))?;
    let res = solve_spectrum(&ops, 5, &SolveOptions::default())?;
    let oracle = oracle_spectrum(&h, 128, 5, BasisParams::default())?;

    println!(" n   phase space        matrix            n + 1/2");
    for (n, e) in res.eigenvalues.iter().enumerate() {
        println!("{n:2}   {e:.12}   {:.12}   {:.1}", oracle[n].0, n as f64 + 0.5);
    }

    let report = StateReport::for_family(&res.eigenfields)?;
    for (n, s) in report.states.iter().enumerate() {
        println!(
            "state {n}: purity {:.6}  volume {:.6}  min {:+.4}",
            s.purity.unwrap_or(f64::NAN),
            s.uncertainty_volume.unwrap_or(f64::NAN),
            s.min_value
        );
    }
    if let Some(m) = report.overlap_matrix {
        let off = (0..m.len())
            .flat_map(|i| (0..m.len()).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j].abs())
            .fold(0.0, f64::max);
        println!("largest off-diagonal overlap {off:.2e}");
    }
    Ok(())
}
