//! Writing and reading fields: binary psf round trip, plus csv and json exports.
//!
//! `cargo run --release --example field_io`

use std::path::Path;

use moyal::io::{read_psf, write_field, Format};
use moyal::{char_from_density, Field, PhaseGrid};

fn main() -> moyal::Result<()> {
    let dir = Path::new("target/field_io");
    std::fs::create_dir_all(dir)?;
    let grid = PhaseGrid::square(32, 6.0, 1.0)?;
    let w = Field::from_fn(&grid, |q, p| (-(q * q + p * p)).exp() / std::f64::consts::PI);
    let chi = char_from_density(&w)?;

    for (stem, field) in [("density", &w), ("characteristic", &chi)] {
        for format in [Format::Psf, Format::Csv, Format::Json] {
            let path = write_field(field, dir, stem, format)?;
            println!("{:<40} {:>8} bytes", path.display(), std::fs::metadata(&path)?.len());
        }
        let back = read_psf(&dir.join(format!("{stem}.psf")))?;
        let exact = back.values().iter().zip(field.values()).all(|(a, b)| a == b);
        println!("{stem}: psf round trip exact = {exact}, domain {:?}", back.domain());
    }
    Ok(())
}
