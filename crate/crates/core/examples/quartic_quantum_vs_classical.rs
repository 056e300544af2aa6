//! Quartic oscillator: the b = 1/2 flow tracks the exact quantum evolution while
//! the classical b = 0 flow does not.
//!
//! `cargo run --release --example quartic_quantum_vs_classical`

use moyal::dynamics::{evolve, EvolutionPlan, Integrator, Monitor};
use moyal::oracle::{build_matrix, wigner_of, BasisParams, Propagator, WaveVector};
use moyal::{DeformationParams, GridSpec, ObservableSpec, PhaseGrid, Polynomial};

fn main() -> moyal::Result<()> {
    // The q^4 force drives momentum tails far out, hence the wide p window.
    let grid = PhaseGrid::new(GridSpec {
        n_q: 96,
        n_p: 192,
        q_min: -6.0,
        q_max: 6.0,
        p_min: -18.0,
        p_max: 18.0,
        hbar: 1.0,
    })?;
    let h: ObservableSpec = Polynomial::quartic().into();
    let basis = BasisParams::default();
    let psi0 = WaveVector::coherent(1.0, 0.0, 200, basis)?;
    let propagator = Propagator::new(&build_matrix(&h, 200, basis)?)?;
    let w0 = wigner_of(&psi0, &grid)?;

    let steps = 1000;
    let runs = [
        ("quantum b=1/2", DeformationParams::quantum(1.0)),
        ("classical b=0", DeformationParams::classical(1.0)),
    ];
    for (label, params) in runs {
        let plan = EvolutionPlan::new(&h, &grid, &params, 1.0 / steps as f64, steps, Integrator::SplitStep)?
            .with_stride(250)
            .with_tolerance(1e-3);
        let traj = evolve(&w0, &plan)?;
        println!(
            "{label}   (energy drift {:.1e})",
            traj.drift(Monitor::Energy).unwrap_or(f64::NAN)
        );
        for (t, f) in traj.times.iter().zip(&traj.frames) {
            let exact = wigner_of(&propagator.evolve(&psi0, *t)?, &grid)?;
            println!(
                "  t = {t:.2}   L2 vs exact {:.3e}   min W {:+.4}",
                f.l2_distance(&exact)?,
                f.values().iter().map(|v| v.re).fold(f64::INFINITY, f64::min)
            );
        }
    }
    Ok(())
}
