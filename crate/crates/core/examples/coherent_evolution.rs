//! A displaced Gaussian makes one full oscillator period and returns to its start.
//! Writes the trajectory as psf frames plus a manifest under `target/coherent/`.
//!
//! `cargo run --release --example coherent_evolution`

use std::f64::consts::PI;
use std::path::Path;

use moyal::dynamics::{evolve, purity_ratio, EvolutionPlan, Integrator, Monitor};
use moyal::io::{export_trajectory, Format};
use moyal::{DeformationParams, Field, PhaseGrid, Polynomial};

fn main() -> moyal::Result<()> {
    let grid = PhaseGrid::square(64, 8.0, 1.0)?;
    let p0 = Field::from_fn(&grid, |q, p| (-(q - 2.0).powi(2) - p * p).exp() / PI);
    let steps = 2000;
    let plan = EvolutionPlan::new(
        &Polynomial::harmonic(1.0).into(),
        &grid,
        &DeformationParams::quantum(1.0),
        2.0 * PI / steps as f64,
        steps,
        Integrator::Rk4,
    )?
    .with_stride(250);
    println!("spectral radius {:.3}, dt {:.5}", plan.spectral_radius(), plan.dt);

    let traj = evolve(&p0, &plan)?;
    for (t, f) in traj.times.iter().zip(&traj.frames) {
        let mean_q = moyal::analysis::marginals(f)
            .map(|(m, _)| m.iter().enumerate().map(|(i, w)| grid.q(i) * w).sum::<f64>() * grid.dq())?;
        println!("t = {t:6.3}   <q> = {mean_q:+.6}");
    }
    println!("L2 distance after one period {:.3e}", traj.last().l2_distance(&p0)?);
    for m in [Monitor::Norm, Monitor::Purity, Monitor::Energy] {
        println!("{} drift {:.2e}", m.name(), traj.drift(m).unwrap_or(f64::NAN));
    }
    println!("purity ratio {:.12}", purity_ratio(&traj)?);

    let out = Path::new("target/coherent");
    let manifest = export_trajectory(&traj, out, Format::Psf)?;
    println!("{} frames written to {}", manifest.frames.len(), out.display());
    Ok(())
}
