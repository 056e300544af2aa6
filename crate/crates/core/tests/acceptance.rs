//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use moyal::analysis::{calibrate_b, overlap, purity, uncertainty_volume};
use moyal::dynamics::{evolve, EvolutionPlan, Integrator, Monitor};
use moyal::genvalue::{
    build_operators, classical_spectrum, classical_spectrum_with, pb_expectation_check, solve_spectrum, LevelBand,
    SolveOptions, SpectralResult, SpectrumKind,
};
use moyal::oracle::{
    build_matrix, oracle_spectrum, product_expectation, wigner_of, BasisParams, Propagator, WaveVector,
};
use moyal::star::{f_eval, g_eval, jacobi_residual, mixed_identity_residual};
use moyal::{
    moyal_bracket, observable_from_symbol, sym_star, symbol_of, DeformationParams, Field, GridSpec, ObservableSpec,
    PhaseGrid, Polynomial,
};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn default_grid() -> PhaseGrid {
    PhaseGrid::square(64, 8.0, 1.0).unwrap()
}

fn oscillator() -> ObservableSpec {
    Polynomial::harmonic(1.0).into()
}

struct Oscillator {
    grid: PhaseGrid,
    res: SpectralResult,
    seconds: f64,
}

fn solve_oscillator() -> Result<Oscillator, String> {
    let grid = default_grid();
    let t = Instant::now();
    let ops = build_operators(&oscillator(), &grid, &DeformationParams::quantum(1.0)).map_err(|e| e.to_string())?;
    let res = solve_spectrum(&ops, 5, &SolveOptions::default()).map_err(|e| e.to_string())?;
    if res.len() < 5 {
        return Err(format!("only {} oscillator states resolved", res.len()));
    }
    Ok(Oscillator {
        grid,
        res,
        seconds: t.elapsed().as_secs_f64(),
    })
}

fn ground_state(osc: &Oscillator) -> Outcome {
    let e0 = osc.res.eigenvalues[0];
    let gauss = Field::from_fn(&osc.grid, |q, p| (-q * q - p * p).exp() / PI);
    let linf = osc.res.eigenfields[0].linf_distance(&gauss).unwrap();
    let msg = format!(
        "E0 = {e0:.15}, |E0 - 0.5| = {:.2e}, Linf vs Gaussian = {linf:.2e}, solve {:.2}s",
        (e0 - 0.5).abs(),
        osc.seconds
    );
    ensure((e0 - 0.5).abs() < 1e-6 && linf < 1e-6 && osc.seconds < 60.0, msg)
}

fn excited_spectrum(osc: &Oscillator) -> Outcome {
    let oracle = oracle_spectrum(&oscillator(), 128, 5, BasisParams::default()).map_err(|e| e.to_string())?;
    let mut worst_exact = 0.0f64;
    let mut worst_oracle = 0.0f64;
    for (n, e) in osc.res.eigenvalues.iter().enumerate() {
        let exact = n as f64 + 0.5;
        worst_exact = worst_exact.max((e - exact).abs() / exact);
        worst_oracle = worst_oracle.max((e - oracle[n].0).abs() / oracle[n].0);
    }
    ensure(
        worst_exact < 1e-4 && worst_oracle < 1e-4,
        format!(
            "levels {:?}, max rel. error vs n+1/2 {worst_exact:.2e}, vs oracle {worst_oracle:.2e}",
            osc.res
                .eigenvalues
                .iter()
                .map(|e| format!("{e:.10}"))
                .collect::<Vec<_>>()
        ),
    )
}

fn orthonormality(osc: &Oscillator) -> Outcome {
    let f = &osc.res.eigenfields;
    let mut worst_overlap = 0.0f64;
    for i in 0..5 {
        for j in 0..5 {
            let want = if i == j { 1.0 } else { 0.0 };
            worst_overlap = worst_overlap.max((overlap(&f[i], &f[j]).unwrap() - want).abs());
        }
    }
    let target = 1.0 / (2.0 * PI);
    let worst_purity = f
        .iter()
        .map(|p| (purity(p).unwrap() - target).abs())
        .fold(0.0, f64::max);
    let worst_volume = f
        .iter()
        .map(|p| (uncertainty_volume(p).unwrap() - 2.0 * PI).abs() / (2.0 * PI))
        .fold(0.0, f64::max);
    ensure(
        worst_overlap < 1e-4 && worst_purity < 1e-4 && worst_volume < 1e-3,
        format!(
            "overlap vs identity {worst_overlap:.2e}, purity vs 1/2pi {worst_purity:.2e}, volume rel. error {worst_volume:.2e}"
        ),
    )
}

fn calibration() -> Outcome {
    let grid = default_grid();
    let mut parts = Vec::new();
    let mut ok = true;
    for omega in [0.3, 1.0, 7.0] {
        let b = calibrate_b(&grid, 1.0, omega).map_err(|e| e.to_string())?;
        ok &= (b - 0.5).abs() < 1e-10;
        parts.push(format!("omega {omega}: b = {b:.14}"));
    }
    ensure(ok, parts.join(", "))
}

fn kernel_identities() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let (mut jac, mut mixed, mut parity, mut closure) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut triples = 0;
    for params in [
        DeformationParams::quantum(1.0),
        DeformationParams { hbar: 0.37, b: 0.5 },
        DeformationParams { hbar: 1.0, b: 1.3 },
    ] {
        let span = 10.0 * params.hbar;
        for _ in 0..10_000 {
            let [l, m, n]: [f64; 3] = std::array::from_fn(|_| rng.random_range(-span..span));
            jac = jac.max(jacobi_residual(l, m, n, &params).abs());
            mixed = mixed.max(mixed_identity_residual(l, m, n, &params).abs());
            parity = parity
                .max((g_eval(l, &params) - g_eval(-l, &params)).abs())
                .max((f_eval(l, &params) + f_eval(-l, &params)).abs());
            let c = g_eval(l, &params).powi(2) + (params.b * params.hbar * f_eval(l, &params)).powi(2);
            closure = closure.max((c - 1.0).abs());
            triples += 1;
        }
    }
    let secs = t.elapsed().as_secs_f64();
    ensure(
        jac < 1e-12 && mixed < 1e-12 && parity == 0.0 && closure < 1e-14 && secs < 5.0,
        format!(
            "{triples} triples: Jacobi {jac:.2e}, mixed {mixed:.2e}, parity {parity:.1e}, closure {closure:.2e}, {secs:.3}s"
        ),
    )
}

fn continuous_spectrum() -> Outcome {
    let grid = default_grid();
    let ops =
        build_operators(&Polynomial::q().into(), &grid, &DeformationParams::quantum(1.0)).map_err(|e| e.to_string())?;
    let res = solve_spectrum(&ops, 5, &SolveOptions::default()).map_err(|e| e.to_string())?;
    let height = 1.0 / (grid.dq() * (grid.spec().p_max - grid.spec().p_min));
    let mut value_err = 0.0f64;
    let mut shape_err = 0.0f64;
    for (i, e) in res.eigenvalues.iter().enumerate() {
        // The ridge sits on whichever grid column carries the eigenvalue.
        let col = grid.nearest_q(*e);
        value_err = value_err.max((e - grid.q(col)).abs());
        let f = &res.eigenfields[i];
        for qi in 0..grid.n_q() {
            for pj in 0..grid.n_p() {
                let want = if qi == col { height } else { 0.0 };
                shape_err = shape_err.max((f.at(qi, pj).re - want).abs() / height);
            }
        }
    }
    ensure(
        res.len() == 5 && value_err < 1e-13 && shape_err < 1e-10 && res.spectrum_kind == SpectrumKind::Continuous,
        format!(
            "{} ridges, eigenvalue vs grid q {value_err:.1e}, ridge shape {shape_err:.1e}, label {:?}",
            res.len(),
            res.spectrum_kind
        ),
    )
}

fn coherent_wigner(grid: &PhaseGrid, q0: f64, p0: f64) -> Field {
    Field::from_fn(grid, |q, p| (-(q - q0).powi(2) - (p - p0).powi(2)).exp() / PI)
}

fn dynamics() -> Outcome {
    let t0 = Instant::now();
    let grid = default_grid();
    let period = 2.0 * PI;
    let steps = 2000;
    let p0 = coherent_wigner(&grid, 2.0, 0.0);
    let plan = EvolutionPlan::new(
        &oscillator(),
        &grid,
        &DeformationParams::quantum(1.0),
        period / steps as f64,
        steps,
        Integrator::Rk4,
    )
    .map_err(|e| e.to_string())?
    .with_stride(steps)
    .with_tolerance(1e-7);
    let traj = evolve(&p0, &plan).map_err(|e| e.to_string())?;
    let period_err = traj.last().l2_distance(&p0).unwrap();
    let drift = [Monitor::Norm, Monitor::Purity, Monitor::Energy]
        .iter()
        .map(|m| traj.drift(*m).unwrap())
        .fold(0.0, f64::max);

    // Quartic oscillator from a displaced coherent state, against the oracle.
    // The q^4 force pushes the Gaussian tails to |p| ~ 15 within t = 1, so
    // this run uses a wider momentum window than the default grid.
    let qgrid = PhaseGrid::new(GridSpec {
        n_q: 96,
        n_p: 192,
        q_min: -6.0,
        q_max: 6.0,
        p_min: -18.0,
        p_max: 18.0,
        hbar: 1.0,
    })
    .unwrap();
    let quartic: ObservableSpec = Polynomial::quartic().into();
    let (q0, t_end) = (1.0, 1.0);
    let basis = BasisParams::default();
    let psi0 = WaveVector::coherent(q0, 0.0, 200, basis).map_err(|e| e.to_string())?;
    let h = build_matrix(&quartic, 200, basis).map_err(|e| e.to_string())?;
    let psi_t = Propagator::new(&h)
        .and_then(|u| u.evolve(&psi0, t_end))
        .map_err(|e| e.to_string())?;
    let reference = wigner_of(&psi_t, &qgrid).map_err(|e| e.to_string())?;
    let start = wigner_of(&psi0, &qgrid).map_err(|e| e.to_string())?;
    let qsteps = 4000;
    let run = |params: DeformationParams| -> Result<(Field, f64), String> {
        let plan = EvolutionPlan::new(
            &quartic,
            &qgrid,
            &params,
            t_end / qsteps as f64,
            qsteps,
            Integrator::SplitStep,
        )
        .map_err(|e| e.to_string())?
        .with_stride(qsteps)
        .with_tolerance(1e-3);
        let traj = evolve(&start, &plan).map_err(|e| e.to_string())?;
        Ok((traj.last().clone(), traj.drift(Monitor::Energy).unwrap()))
    };
    let (quantum, quartic_drift) = run(DeformationParams::quantum(1.0))?;
    let quantum_err = quantum.l2_distance(&reference).unwrap();
    let classical_dist = run(DeformationParams::classical(1.0))?
        .0
        .l2_distance(&reference)
        .unwrap();
    let secs = t0.elapsed().as_secs_f64();
    ensure(
        period_err < 1e-3 && drift < 1e-7 && quantum_err < 5e-3 && classical_dist > 10.0 * quantum_err && secs < 300.0,
        format!(
            "period L2 {period_err:.2e}, max drift {drift:.2e}; quartic L2 vs oracle {quantum_err:.2e} (energy drift {quartic_drift:.1e}), b=0 distance {classical_dist:.2e} ({:.0}x), {secs:.1}s",
            classical_dist / quantum_err
        ),
    )
}

fn random_state(rng: &mut ChaCha8Rng, basis: BasisParams) -> WaveVector {
    let levels = rng.random_range(1..=8);
    let amps = (0..12)
        .map(|n| {
            if n < levels {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    WaveVector::normalized(amps, basis).unwrap()
}

fn correspondence() -> Outcome {
    let grid = default_grid();
    let params = DeformationParams::quantum(1.0);
    let basis = BasisParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(58);
    let reach = grid.n_q() as i64 / 4;
    let harmonic_symbol = |ki: i64, yi: i64, sine: bool| -> Field {
        let (k, y) = (ki as f64 * grid.dk(), yi as f64 * grid.dy());
        let table = Field::from_fn(&grid, |q, p| {
            let phase = (k * q + y * p) / grid.hbar();
            if sine {
                phase.sin()
            } else {
                phase.cos()
            }
        });
        symbol_of(&ObservableSpec::Tabulated(table), &grid)
            .unwrap()
            .to_field(&grid)
            .unwrap()
    };
    let expect = |symbol: &Field, w: &Field| -> f64 {
        let obs = observable_from_symbol(symbol).unwrap();
        obs.values()
            .iter()
            .zip(w.values())
            .map(|(a, b)| a.re * b.re)
            .sum::<f64>()
            * grid.cell_area()
    };
    let (mut worst_sym, mut worst_br) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let psi = random_state(&mut rng, basis);
        let w = wigner_of(&psi, &grid).unwrap();
        let mut pick = || {
            (
                rng.random_range(-reach..=reach),
                rng.random_range(-reach..=reach),
                rng.random_bool(0.5),
            )
        };
        let (a, b) = (pick(), pick());
        let sa = harmonic_symbol(a.0, a.1, a.2);
        let sb = harmonic_symbol(b.0, b.1, b.2);
        let engine_sym = 2.0 * expect(&sym_star(&sa, &sb, &params).unwrap(), &w);
        let engine_br = expect(&moyal_bracket(&sa, &sb, &params).unwrap(), &w);
        let ab = product_expectation(
            &psi,
            (a.0 as f64 * grid.dk(), a.1 as f64 * grid.dy(), a.2),
            (b.0 as f64 * grid.dk(), b.1 as f64 * grid.dy(), b.2),
            256,
        )
        .unwrap();
        worst_sym = worst_sym.max((engine_sym - 2.0 * ab.re).abs());
        worst_br = worst_br.max((engine_br - 2.0 / grid.hbar() * ab.im).abs());
    }
    ensure(
        worst_sym < 1e-8 && worst_br < 1e-8,
        format!("100 states: product mismatch {worst_sym:.2e}, bracket mismatch {worst_br:.2e}"),
    )
}

fn random_observable(rng: &mut ChaCha8Rng) -> ObservableSpec {
    let mut poly = Polynomial::zero();
    for m in 0..=4u32 {
        for n in 0..=(4 - m) {
            if m + n > 0 {
                poly = poly.with_term(m, n, rng.random_range(-1.0..1.0));
            }
        }
    }
    poly.into()
}

fn classical_mode() -> Outcome {
    let fine = PhaseGrid::square(128, 8.0, 1.0).unwrap();
    let h = oscillator();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let observables: Vec<ObservableSpec> = (0..10).map(|_| random_observable(&mut rng)).collect();
    let mut worst_pb = 0.0f64;
    for energy in [2.0, 4.0, 6.0] {
        let ring =
            classical_spectrum_with(&h, &fine, energy, LevelBand::Smooth { width: 1.0 }).map_err(|e| e.to_string())?;
        for b in &observables {
            worst_pb = worst_pb.max(pb_expectation_check(&h, b, &ring).map_err(|e| e.to_string())?.abs());
        }
    }
    // Pointwise A P = alpha P on the support of sharp rings, to the band half-width.
    let grid = default_grid();
    let samples = h.samples(&grid).unwrap();
    let half_width =
        |i: usize| 0.5 * (grid.q(i / grid.n_p()).abs() * grid.dq() + grid.p(i % grid.n_p()).abs() * grid.dp());
    let mut worst_pointwise = 0.0f64;
    let mut support = 0;
    for energy in [1.0, 2.5, 4.0] {
        let ring = classical_spectrum(&h, &grid, energy).map_err(|e| e.to_string())?;
        for (i, v) in ring.values().iter().enumerate() {
            if v.re != 0.0 {
                support += 1;
                let r = (samples[i] * v.re - energy * v.re).abs() / (v.re * half_width(i).max(1e-12 * energy));
                worst_pointwise = worst_pointwise.max(r);
            }
        }
    }
    ensure(
        worst_pb < 1e-6 && worst_pointwise <= 1.0 && support > 0,
        format!(
            "max |<{{H,B}}>| over 3 rings x 10 observables {worst_pb:.2e}; pointwise residual / band tolerance {worst_pointwise:.2} on {support} cells"
        ),
    )
}

fn main() {
    let start = Instant::now();
    let osc = solve_oscillator();
    let with_osc = |f: fn(&Oscillator) -> Outcome| -> Outcome {
        match &osc {
            Ok(o) => f(o),
            Err(e) => Err(e.clone()),
        }
    };
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("1 oscillator ground state", Box::new(|| with_osc(ground_state))),
        ("2 excited spectrum", Box::new(|| with_osc(excited_spectrum))),
        ("3 orthonormality and purity", Box::new(|| with_osc(orthonormality))),
        ("4 calibration", Box::new(calibration)),
        ("5 kernel identities", Box::new(kernel_identities)),
        ("6 continuous spectrum", Box::new(continuous_spectrum)),
        ("7 dynamics", Box::new(dynamics)),
        ("8 correspondence", Box::new(correspondence)),
        ("9 classical mode", Box::new(classical_mode)),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(msg) => println!("PASS  {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  {name}: {msg}");
            }
        }
    }
    println!(
        "acceptance: {} of 9 passed in {:.1}s",
        9 - failed,
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
