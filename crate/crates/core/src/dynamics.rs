//! Time evolution `dP/dt = {H, P}` under the deformed bracket.
//!
//! At `b = 0` this is the Liouville equation with the standard Poisson
//! bracket; at `b = 1/2` it is the Moyal evolution of the Wigner function.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::purity;
use crate::error::{Error, Result};
use crate::grid::{Domain, Field, PhaseGrid};
use crate::observable::{ObservableSpec, Polynomial, DEFAULT_MAX_DEGREE};
use crate::operator::PmOperator;
use crate::star::{DeformationParams, Kernel};

/// RK4 is stable for `dt * rho < 2 sqrt 2` on the imaginary axis; keep a margin.
pub const RK4_STABILITY_LIMIT: f64 = 2.8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    #[default]
    Rk4,
    /// Strang splitting for `H = T(p) + V(q)`.
    SplitStep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monitor {
    Norm,
    Purity,
    Energy,
}

impl Monitor {
    pub fn name(&self) -> &'static str {
        match self {
            Monitor::Norm => "norm",
            Monitor::Purity => "purity",
            Monitor::Energy => "energy",
        }
    }
}

#[derive(Clone, Debug)]
enum Stepper {
    Rk4,
    Split {
        /// `exp(i phi_V tau/2)` in (q, zeta) layout, scaled by `1/n_p`.
        half_potential: Vec<Complex64>,
        /// `exp(i phi_T tau)` in (kappa, p) layout, scaled by `1/n_q`.
        kinetic: Vec<Complex64>,
    },
}

/// Everything needed to run one evolution.
#[derive(Clone, Debug)]
pub struct EvolutionPlan {
    pub hamiltonian: ObservableSpec,
    pub params: DeformationParams,
    pub dt: f64,
    pub n_steps: usize,
    pub integrator: Integrator,
    pub monitors: Vec<Monitor>,
    /// Relative drift allowed for each monitor over the run.
    pub monitor_tolerance: f64,
    /// Keep every `stride`-th frame.
    pub stride: usize,
    grid: PhaseGrid,
    generator: PmOperator,
    energy: Vec<f64>,
    stepper: Stepper,
    spectral_radius: f64,
}

impl EvolutionPlan {
    pub fn new(
        hamiltonian: &ObservableSpec,
        grid: &PhaseGrid,
        params: &DeformationParams,
        dt: f64,
        n_steps: usize,
        integrator: Integrator,
    ) -> Result<EvolutionPlan> {
        params.validate()?;
        hamiltonian.validate(DEFAULT_MAX_DEGREE)?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        let generator = PmOperator::for_observable(hamiltonian, grid, params, Kernel::Bracket)?;
        let energy = hamiltonian.samples(grid)?;
        let (stepper, spectral_radius) = match integrator {
            Integrator::Rk4 => {
                // Power iteration underestimates slightly; pad it.
                let rho = 1.05 * generator.norm_estimate(80);
                if rho * dt >= RK4_STABILITY_LIMIT {
                    return Err(Error::Config(format!(
                        "dt = {dt} is unstable for RK4: spectral radius {rho:.3e} needs dt < {:.3e}",
                        RK4_STABILITY_LIMIT / rho
                    )));
                }
                (Stepper::Rk4, rho)
            }
            Integrator::SplitStep => {
                let poly = hamiltonian
                    .as_polynomial()
                    .ok_or_else(|| Error::Unsupported("split-step needs a polynomial Hamiltonian".into()))?;
                let (t, v) = poly
                    .split_kinetic_potential()
                    .ok_or_else(|| Error::Config("split-step needs a separable Hamiltonian T(p) + V(q)".into()))?;
                (split_factors(grid, params, &t, &v, dt), 0.0)
            }
        };
        Ok(EvolutionPlan {
            hamiltonian: hamiltonian.clone(),
            params: *params,
            dt,
            n_steps,
            integrator,
            monitors: vec![Monitor::Norm, Monitor::Purity, Monitor::Energy],
            monitor_tolerance: 1e-6,
            stride: 1,
            grid: grid.clone(),
            generator,
            energy,
            stepper,
            spectral_radius,
        })
    }

    pub fn with_monitors(mut self, monitors: &[Monitor]) -> Self {
        self.monitors = monitors.to_vec();
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.monitor_tolerance = tol;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride.max(1);
        self
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    /// Spectral radius estimate used for the RK4 stability check (0 for split-step).
    pub fn spectral_radius(&self) -> f64 {
        self.spectral_radius
    }

    pub fn generator(&self) -> &PmOperator {
        &self.generator
    }

    fn monitor_value(&self, m: Monitor, p: &[f64]) -> f64 {
        let cell = self.grid.cell_area();
        match m {
            Monitor::Norm => p.iter().sum::<f64>() * cell,
            Monitor::Purity => p.iter().map(|v| v * v).sum::<f64>() * cell,
            Monitor::Energy => p.iter().zip(&self.energy).map(|(a, h)| a * h).sum::<f64>() * cell,
        }
    }
}

fn split_factors(
    grid: &PhaseGrid,
    params: &DeformationParams,
    kinetic: &Polynomial,
    potential: &Polynomial,
    dt: f64,
) -> Stepper {
    let theta = params.theta();
    let (nq, np) = (grid.n_q(), grid.n_p());
    let kq = grid.wavenumbers_q();
    let kp = grid.wavenumbers_p();
    let tp = |p: f64| kinetic.eval(0.0, p);
    let vq = |q: f64| potential.eval(q, 0.0);
    let dtp = kinetic.derivative(0, 1);
    let dvq = potential.derivative(1, 0);
    // phi_T = -(T(p + theta kappa) - T(p - theta kappa)) / (2 theta)
    let phi_t = |kappa: f64, p: f64| {
        if theta == 0.0 {
            -kappa * dtp.eval(0.0, p)
        } else {
            -(tp(p + theta * kappa) - tp(p - theta * kappa)) / (2.0 * theta)
        }
    };
    // phi_V = (V(q + theta zeta) - V(q - theta zeta)) / (2 theta)
    let phi_v = |zeta: f64, q: f64| {
        if theta == 0.0 {
            zeta * dvq.eval(q, 0.0)
        } else {
            (vq(q + theta * zeta) - vq(q - theta * zeta)) / (2.0 * theta)
        }
    };
    let mut half_potential = vec![Complex64::new(0.0, 0.0); nq * np];
    let mut kin = vec![Complex64::new(0.0, 0.0); nq * np];
    for i in 0..nq {
        for j in 0..np {
            half_potential[i * np + j] = Complex64::from_polar(1.0 / np as f64, phi_v(kp[j], grid.q(i)) * 0.5 * dt);
            kin[i * np + j] = Complex64::from_polar(1.0 / nq as f64, phi_t(kq[i], grid.p(j)) * dt);
        }
    }
    Stepper::Split {
        half_potential,
        kinetic: kin,
    }
}

/// `dP/dt` for the plan's Hamiltonian.
pub fn generator_apply(p: &Field, plan: &EvolutionPlan) -> Result<Field> {
    p.require(Domain::PositionMomentum)?;
    plan.grid.check_same(p.grid())?;
    plan.generator.apply_field(p)
}

/// Stored frames and per-step monitor series of one run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub frames: Vec<Field>,
    /// Monitor name -> value at every step, starting at t = 0.
    pub monitor_series: BTreeMap<String, Vec<f64>>,
    pub dt: f64,
}

impl Trajectory {
    pub fn last(&self) -> &Field {
        self.frames.last().expect("trajectories hold the initial frame")
    }

    /// Largest relative drift of a monitor from its initial value.
    pub fn drift(&self, monitor: Monitor) -> Option<f64> {
        let s = self.monitor_series.get(monitor.name())?;
        let m0 = s[0];
        let scale = m0.abs().max(f64::MIN_POSITIVE);
        Some(s.iter().map(|v| (v - m0).abs() / scale).fold(0.0, f64::max))
    }
}

fn rk4_step(op: &PmOperator, x: &mut [f64], dt: f64, scratch: &mut [Vec<f64>; 5]) {
    let [k1, k2, k3, k4, tmp] = scratch;
    op.apply_into(x, k1);
    for ((t, a), k) in tmp.iter_mut().zip(x.iter()).zip(k1.iter()) {
        *t = a + 0.5 * dt * k;
    }
    op.apply_into(tmp, k2);
    for ((t, a), k) in tmp.iter_mut().zip(x.iter()).zip(k2.iter()) {
        *t = a + 0.5 * dt * k;
    }
    op.apply_into(tmp, k3);
    for ((t, a), k) in tmp.iter_mut().zip(x.iter()).zip(k3.iter()) {
        *t = a + dt * k;
    }
    op.apply_into(tmp, k4);
    for (i, a) in x.iter_mut().enumerate() {
        *a += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

fn split_step(grid: &PhaseGrid, x: &mut [f64], half_potential: &[Complex64], kinetic: &[Complex64]) {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    grid.fft_p(&mut buf, false);
    buf.iter_mut().zip(half_potential).for_each(|(b, f)| *b *= f);
    grid.fft_p(&mut buf, true);
    grid.fft_q(&mut buf, false);
    buf.iter_mut().zip(kinetic).for_each(|(b, f)| *b *= f);
    grid.fft_q(&mut buf, true);
    grid.fft_p(&mut buf, false);
    buf.iter_mut().zip(half_potential).for_each(|(b, f)| *b *= f);
    grid.fft_p(&mut buf, true);
    x.iter_mut().zip(&buf).for_each(|(a, b)| *a = b.re);
}

/// Runs the plan from `p0`, storing every `stride`-th frame and the last one.
pub fn evolve(p0: &Field, plan: &EvolutionPlan) -> Result<Trajectory> {
    p0.require(Domain::PositionMomentum)?;
    plan.grid.check_same(p0.grid())?;
    let n = plan.grid.len();
    let mut x = p0.real_parts();
    let initial: Vec<(Monitor, f64)> = plan.monitors.iter().map(|&m| (m, plan.monitor_value(m, &x))).collect();
    let mut series: BTreeMap<String, Vec<f64>> =
        initial.iter().map(|(m, v)| (m.name().to_string(), vec![*v])).collect();
    let mut times = vec![0.0];
    let mut frames = vec![Field::from_real(&plan.grid, Domain::PositionMomentum, &x)?];
    let mut scratch = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for step in 1..=plan.n_steps {
        match &plan.stepper {
            Stepper::Rk4 => rk4_step(&plan.generator, &mut x, plan.dt, &mut scratch),
            Stepper::Split {
                half_potential,
                kinetic,
            } => split_step(&plan.grid, &mut x, half_potential, kinetic),
        }
        for &(m, m0) in &initial {
            let v = plan.monitor_value(m, &x);
            let drift = (v - m0).abs() / m0.abs().max(f64::MIN_POSITIVE);
            if !(drift <= plan.monitor_tolerance) {
                return Err(Error::Integration {
                    step,
                    monitor: m.name().to_string(),
                    drift,
                });
            }
            series.get_mut(m.name()).expect("initialized").push(v);
        }
        if step % plan.stride == 0 || step == plan.n_steps {
            times.push(step as f64 * plan.dt);
            frames.push(Field::from_real(&plan.grid, Domain::PositionMomentum, &x)?);
        }
    }
    Ok(Trajectory {
        times,
        frames,
        monitor_series: series,
        dt: plan.dt,
    })
}

/// Purity of the final frame relative to the initial one, a quick health check.
pub fn purity_ratio(traj: &Trajectory) -> Result<f64> {
    Ok(purity(traj.last())? / purity(&traj.frames[0])?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genvalue::{build_operators, solve_spectrum, SolveOptions};
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn blob(g: &PhaseGrid, q0: f64, p0: f64) -> Field {
        Field::from_fn(g, |q, p| (-(q - q0).powi(2) - (p - p0).powi(2)).exp() / PI)
    }

    #[test]
    fn zero_hamiltonian_is_static() {
        let g = PhaseGrid::square(16, 6.0, 1.0).unwrap();
        let plan = EvolutionPlan::new(
            &Polynomial::zero().into(),
            &g,
            &DeformationParams::quantum(1.0),
            0.1,
            3,
            Integrator::Rk4,
        )
        .unwrap();
        let d = generator_apply(&blob(&g, 0.5, 0.0), &plan).unwrap();
        assert_eq!(d.max_abs(), 0.0);
    }

    #[test]
    fn free_streaming() {
        let g = PhaseGrid::square(32, 8.0, 1.0).unwrap();
        let h = Polynomial::zero().with_term(0, 2, 0.5);
        let plan = EvolutionPlan::new(
            &h.into(),
            &g,
            &DeformationParams::quantum(1.0),
            0.01,
            1,
            Integrator::Rk4,
        )
        .unwrap();
        let f = |q: f64, p: f64| (-(q - 0.5).powi(2) / 2.0 - p * p / 2.0).exp();
        let d = generator_apply(&Field::from_fn(&g, f), &plan).unwrap();
        let h = 1e-4;
        let fd = Field::from_fn(&g, |q, p| -p * (f(q + h, p) - f(q - h, p)) / (2.0 * h));
        assert!(d.linf_distance(&fd).unwrap() < 1e-7);
    }

    #[test]
    fn generator_is_skew_and_quadratic_generators_coincide() {
        let g = PhaseGrid::square(24, 6.0, 1.0).unwrap();
        let h: ObservableSpec = Polynomial::harmonic(1.3)
            .add(&Polynomial::q().mul(&Polynomial::p()).scale(0.2))
            .into();
        let q = EvolutionPlan::new(&h, &g, &DeformationParams::quantum(1.0), 1e-3, 1, Integrator::Rk4).unwrap();
        let c = EvolutionPlan::new(&h, &g, &DeformationParams::classical(1.0), 1e-3, 1, Integrator::Rk4).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let u: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let gv = q.generator().apply(&v);
        let gu = q.generator().apply(&u);
        let lhs: f64 = u.iter().zip(&gv).map(|(a, b)| a * b).sum();
        let rhs: f64 = gu.iter().zip(&v).map(|(a, b)| a * b).sum();
        assert!((lhs + rhs).abs() < 1e-10 * q.spectral_radius() * g.len() as f64);
        let cv = c.generator().apply(&v);
        for (a, b) in gv.iter().zip(&cv) {
            assert!((a - b).abs() <= 1e-12 * q.spectral_radius());
        }
    }

    fn opts_tol() -> f64 {
        SolveOptions::default().tol_constraint
    }

    #[test]
    fn eigenfields_are_stationary() {
        let g = PhaseGrid::square(32, 6.0, 1.0).unwrap();
        let params = DeformationParams::quantum(1.0);
        let h: ObservableSpec = Polynomial::harmonic(1.0).into();
        let res = solve_spectrum(
            &build_operators(&h, &g, &params).unwrap(),
            2,
            &SolveOptions {
                classify: false,
                ..Default::default()
            },
        )
        .unwrap();
        let plan = EvolutionPlan::new(&h, &g, &params, 1e-3, 1, Integrator::Rk4).unwrap();
        let scale = plan.spectral_radius();
        for f in &res.eigenfields {
            let d = generator_apply(f, &plan).unwrap();
            assert!(d.max_abs() < opts_tol() * f.max_abs() * scale);
        }
        // The exact ground Wigner function is stationary once resolved.
        let fine = PhaseGrid::square(64, 8.0, 1.0).unwrap();
        let plan = EvolutionPlan::new(&h, &fine, &params, 1e-3, 1, Integrator::Rk4).unwrap();
        let w0 = blob(&fine, 0.0, 0.0);
        let d = generator_apply(&w0, &plan).unwrap().max_abs();
        assert!(d < 1e-12 * w0.max_abs() * plan.spectral_radius());
    }

    #[test]
    fn unstable_steps_are_refused() {
        let g = PhaseGrid::square(64, 8.0, 1.0).unwrap();
        let err = EvolutionPlan::new(
            &Polynomial::quartic().into(),
            &g,
            &DeformationParams::quantum(1.0),
            0.1,
            10,
            Integrator::Rk4,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn rk4_and_split_step_agree_for_the_oscillator() {
        let g = PhaseGrid::square(48, 8.0, 1.0).unwrap();
        let h: ObservableSpec = Polynomial::harmonic(1.0).into();
        let params = DeformationParams::quantum(1.0);
        let p0 = blob(&g, 1.5, 0.0);
        let a = evolve(
            &p0,
            &EvolutionPlan::new(&h, &g, &params, 1e-3, 500, Integrator::Rk4)
                .unwrap()
                .with_stride(100),
        )
        .unwrap();
        let b = evolve(
            &p0,
            &EvolutionPlan::new(&h, &g, &params, 1e-3, 500, Integrator::SplitStep)
                .unwrap()
                .with_stride(100),
        )
        .unwrap();
        assert_eq!(a.frames.len(), 6);

        // Rigid rotation: the blob centre moves to (1.5 cos t, -1.5 sin t).
        let rotated = blob(&g, 1.5 * 0.5f64.cos(), -1.5 * 0.5f64.sin());
        assert!(a.last().l2_distance(&rotated).unwrap() < 1e-9);
        // Strang splitting of a rotation carries an O(dt^2) error.
        assert!(b.last().l2_distance(&rotated).unwrap() < 1e-6);
        assert!(a.drift(Monitor::Energy).unwrap() < 1e-9);
    }

    #[test]
    fn classical_ring_is_invariant() {
        use crate::genvalue::{classical_spectrum_with, LevelBand};
        let g = PhaseGrid::square(64, 8.0, 1.0).unwrap();
        let h: ObservableSpec = Polynomial::harmonic(1.0).into();
        let ring = classical_spectrum_with(&h, &g, 4.0, LevelBand::Smooth { width: 2.0 }).unwrap();
        let plan = EvolutionPlan::new(&h, &g, &DeformationParams::classical(1.0), 1e-2, 100, Integrator::Rk4).unwrap();
        let t = evolve(&ring, &plan).unwrap();
        assert!(t.last().linf_distance(&ring).unwrap() < 1e-8 * ring.max_abs());
    }

    #[test]
    fn monitor_drift_is_reported_with_the_step() {
        let g = PhaseGrid::square(32, 8.0, 1.0).unwrap();
        let plan = EvolutionPlan::new(
            &Polynomial::quartic().into(),
            &g,
            &DeformationParams::quantum(1.0),
            1e-4,
            50,
            Integrator::Rk4,
        )
        .unwrap()
        .with_tolerance(1e-300)
        .with_monitors(&[Monitor::Purity]);
        match evolve(&blob(&g, 1.0, 0.0), &plan) {
            Err(Error::Integration { step, monitor, .. }) => {
                assert_eq!(step, 1);
                assert_eq!(monitor, "purity");
            }
            other => panic!("expected an integration error, got {other:?}"),
        }
    }
}
