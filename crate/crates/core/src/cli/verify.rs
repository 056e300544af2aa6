//! Self-contained numerical checks runnable from the command line.
//!
//! Each suite uses fixed fixtures (apart from `star_algebra`, which sweeps the
//! run's deformation parameters) so reports are comparable across runs.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::calibrate_b;
use crate::dynamics::{evolve, EvolutionPlan, Integrator, Monitor};
use crate::error::Result;
use crate::genvalue::{build_operators, solve_spectrum, SolveOptions};
use crate::grid::{Domain, Field, PhaseGrid};
use crate::observable::{ObservableSpec, Polynomial};
use crate::oracle::{wigner_of, BasisParams, WaveVector};
use crate::star::{jacobi_residual, mixed_identity_residual, moyal_bracket, sym_star, DeformationParams};

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub passed: bool,
    pub checks: BTreeMap<String, Check>,
}

impl SuiteReport {
    fn new() -> Self {
        SuiteReport {
            passed: true,
            checks: BTreeMap::new(),
        }
    }

    fn check(&mut self, name: &str, value: f64, threshold: f64) {
        let passed = value <= threshold;
        self.passed &= passed;
        self.checks.insert(
            name.to_string(),
            Check {
                value,
                threshold,
                passed,
            },
        );
    }
}

pub fn run_suite(name: &str, params: &DeformationParams) -> Result<SuiteReport> {
    match name {
        "star_algebra" => star_algebra(params),
        "genvalue" => genvalue(),
        "oracle" => oracle(),
        "dynamics" => dynamics(),
        "calibration" => calibration(),
        other => Err(crate::Error::Config(format!("unknown suite '{other}'"))),
    }
}

const TRIPLES: usize = 10_000;

fn star_algebra(params: &DeformationParams) -> Result<SuiteReport> {
    let mut r = SuiteReport::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let span = 10.0 * params.hbar;
    let (mut jac, mut mixed) = (0.0f64, 0.0f64);
    for _ in 0..TRIPLES {
        let [l, m, n]: [f64; 3] = std::array::from_fn(|_| rng.random_range(-span..span));
        jac = jac.max(jacobi_residual(l, m, n, params).abs());
        mixed = mixed.max(mixed_identity_residual(l, m, n, params).abs());
    }
    r.check("max_jacobi_residual", jac, 1e-12);
    r.check("max_mixed_identity_residual", mixed, 1e-12);

    // Symbols concentrated well inside the characteristic grid, so the
    // periodic convolution does not wrap.
    let g = PhaseGrid::square(32, 8.0, params.hbar)?;
    let a = char_gaussian(&g, 0.2, -0.4, 0.3)?;
    let b = char_gaussian(&g, -0.5, 0.1, 0.5)?;
    let scale = a.max_abs() * b.max_abs();
    let ab = sym_star(&a, &b, params)?;
    let ba = sym_star(&b, &a, params)?;
    r.check("sym_star_commutator", ab.linf_distance(&ba)? / scale, 1e-12);
    let br = moyal_bracket(&a, &b, params)?;
    let rb = moyal_bracket(&b, &a, params)?;
    r.check("bracket_antisymmetry", br.add(&rb)?.max_abs() / scale, 1e-12);
    Ok(r)
}

fn char_gaussian(g: &PhaseGrid, k0: f64, y0: f64, w: f64) -> Result<Field> {
    let mut vals = Vec::with_capacity(g.len());
    for i in 0..g.n_q() {
        for j in 0..g.n_p() {
            let r2 = (g.k(i) - k0).powi(2) + (g.y(j) - y0).powi(2);
            vals.push(Complex64::from_polar((-r2 / w).exp(), 0.3 * g.k(i)));
        }
    }
    Field::new(g, Domain::Characteristic, vals)
}

fn oscillator_fixture() -> Result<(PhaseGrid, ObservableSpec, crate::genvalue::SpectralResult)> {
    let g = PhaseGrid::square(48, 6.0, 1.0)?;
    let h: ObservableSpec = Polynomial::harmonic(1.0).into();
    let ops = build_operators(&h, &g, &DeformationParams::quantum(1.0))?;
    let res = solve_spectrum(&ops, 3, &SolveOptions::default())?;
    Ok((g, h, res))
}

fn genvalue() -> Result<SuiteReport> {
    let mut r = SuiteReport::new();
    let (_, _, res) = oscillator_fixture()?;
    r.check("missing_levels", 3.0 - res.len() as f64, 0.0);
    let err = res
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(n, e)| (e - (n as f64 + 0.5)).abs())
        .fold(0.0, f64::max);
    r.check("oscillator_level_error", err, 1e-8);
    r.check(
        "max_residual_minus",
        res.residual_minus.iter().copied().fold(0.0, f64::max),
        SolveOptions::default().tol_constraint,
    );
    Ok(r)
}

fn oracle() -> Result<SuiteReport> {
    let mut r = SuiteReport::new();
    let (g, _, res) = oscillator_fixture()?;
    for (n, f) in res.eigenfields.iter().enumerate().take(2) {
        let w = wigner_of(&WaveVector::number_state(n, 64, BasisParams::default())?, &g)?;
        r.check(&format!("wigner_linf_state_{n}"), f.linf_distance(&w)?, 1e-6);
    }
    Ok(r)
}

fn dynamics() -> Result<SuiteReport> {
    let mut r = SuiteReport::new();
    let g = PhaseGrid::square(48, 8.0, 1.0)?;
    let blob = |q0: f64, p0: f64| {
        Field::from_fn(&g, move |q, p| {
            (-(q - q0).powi(2) - (p - p0).powi(2)).exp() / std::f64::consts::PI
        })
    };
    let t = std::f64::consts::FRAC_PI_2;
    let n_steps = 1000;
    let plan = EvolutionPlan::new(
        &Polynomial::harmonic(1.0).into(),
        &g,
        &DeformationParams::quantum(1.0),
        t / n_steps as f64,
        n_steps,
        Integrator::Rk4,
    )?
    .with_stride(n_steps);
    let traj = evolve(&blob(1.5, 0.0), &plan)?;
    r.check(
        "quarter_turn_l2_error",
        traj.last().l2_distance(&blob(0.0, -1.5))?,
        1e-6,
    );
    for m in [Monitor::Norm, Monitor::Purity, Monitor::Energy] {
        r.check(&format!("{}_drift", m.name()), traj.drift(m).unwrap_or(0.0), 1e-7);
    }
    Ok(r)
}

fn calibration() -> Result<SuiteReport> {
    let mut r = SuiteReport::new();
    let b = calibrate_b(&PhaseGrid::default(), 1.0, 1.0)?;
    r.check("calibrated_b_error", (b - 0.5).abs(), 1e-6);
    Ok(r)
}
