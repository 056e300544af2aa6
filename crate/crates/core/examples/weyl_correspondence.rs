//! Phase-space averages of star products against operator expectation values.
//! For a random superposition of number states, the grid products of two Weyl
//! harmonics reproduce Re<AB> and Im<AB> computed with matrices.
//!
//! `cargo run --release --example weyl_correspondence`

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use moyal::oracle::{product_expectation, wigner_of, BasisParams, WaveVector};
use moyal::{
    moyal_bracket, observable_from_symbol, sym_star, symbol_of, DeformationParams, Field, ObservableSpec, PhaseGrid,
};

fn main() -> moyal::Result<()> {
    let grid = PhaseGrid::square(64, 8.0, 1.0)?;
    let params = DeformationParams::quantum(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let amps = (0..6)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let psi = WaveVector::normalized(amps, BasisParams::default())?;
    let w = wigner_of(&psi, &grid)?;

    let symbol = |ki: i64, yi: i64, sine: bool| -> moyal::Result<Field> {
        let (k, y) = (ki as f64 * grid.dk(), yi as f64 * grid.dy());
        let table = Field::from_fn(&grid, |q, p| {
            let phase = (k * q + y * p) / grid.hbar();
            if sine {
                phase.sin()
            } else {
                phase.cos()
            }
        });
        symbol_of(&ObservableSpec::Tabulated(table), &grid)?.to_field(&grid)
    };
    let average = |s: &Field| -> moyal::Result<f64> {
        let obs = observable_from_symbol(s)?;
        Ok(obs
            .values()
            .iter()
            .zip(w.values())
            .map(|(a, b)| a.re * b.re)
            .sum::<f64>()
            * grid.cell_area())
    };

    println!("   A            B              2<A o B>    2Re<AB>      <[A,B]>     2Im<AB>");
    for (a, b) in [
        ((1, 0, false), (0, 1, false)),
        ((2, -1, true), (1, 3, false)),
        ((0, 4, true), (3, 0, true)),
    ] {
        let (sa, sb) = (symbol(a.0, a.1, a.2)?, symbol(b.0, b.1, b.2)?);
        let sym = 2.0 * average(&sym_star(&sa, &sb, &params)?)?;
        let br = average(&moyal_bracket(&sa, &sb, &params)?)?;
        let ab = product_expectation(
            &psi,
            (a.0 as f64 * grid.dk(), a.1 as f64 * grid.dy(), a.2),
            (b.0 as f64 * grid.dk(), b.1 as f64 * grid.dy(), b.2),
            256,
        )?;
        println!(
            "{a:?} {b:?}  {sym:+.8}  {:+.8}  {br:+.8}  {:+.8}",
            2.0 * ab.re,
            2.0 * ab.im
        );
    }
    Ok(())
}
