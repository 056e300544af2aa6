//! Discretized phase space and the Fourier pair linking characteristic
//! functions C(k,y) with pseudodensities P(q,p).
//!
//! The (q,p) box is sampled on a uniform periodic grid. The conjugate
//! (k,y) grid is centered, with the zero-frequency sample at index n/2,
//! and its spacings satisfy `dk * dq * n_q = 2 pi hbar` (likewise for y).
//! Under this duality the discrete transform pair is exactly invertible.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geometry of a phase-space grid. This is the serializable part of
/// [`PhaseGrid`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_q: usize,
    pub n_p: usize,
    pub q_min: f64,
    pub q_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub hbar: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            n_q: 64,
            n_p: 64,
            q_min: -8.0,
            q_max: 8.0,
            p_min: -8.0,
            p_max: 8.0,
            hbar: 1.0,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_q == 0 || self.n_p == 0 {
            return Err(Error::Config("grid counts must be positive".into()));
        }
        if !self.n_q.is_multiple_of(2) || !self.n_p.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "grid counts must be even, got {}x{}",
                self.n_q, self.n_p
            )));
        }
        let finite = [self.q_min, self.q_max, self.p_min, self.p_max, self.hbar]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config("grid bounds and hbar must be finite".into()));
        }
        if self.q_max <= self.q_min || self.p_max <= self.p_min {
            return Err(Error::Config("grid bounds must satisfy min < max".into()));
        }
        if self.hbar <= 0.0 {
            return Err(Error::Config(format!("hbar must be positive, got {}", self.hbar)));
        }
        Ok(())
    }
}

struct Plans {
    fwd_q: Arc<dyn Fft<f64>>,
    inv_q: Arc<dyn Fft<f64>>,
    fwd_p: Arc<dyn Fft<f64>>,
    inv_p: Arc<dyn Fft<f64>>,
}

/// A validated phase-space grid with its FFT plans.
///
/// Cloning is cheap; the plans are shared and immutable.
#[derive(Clone)]
pub struct PhaseGrid {
    spec: GridSpec,
    plans: Arc<Plans>,
}

impl fmt::Debug for PhaseGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("PhaseGrid").field(&self.spec).finish()
    }
}

impl PartialEq for PhaseGrid {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl Default for PhaseGrid {
    fn default() -> Self {
        PhaseGrid::new(GridSpec::default()).expect("default grid is valid")
    }
}

impl PhaseGrid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        let mut planner = FftPlanner::new();
        let plans = Plans {
            fwd_q: planner.plan_fft_forward(spec.n_q),
            inv_q: planner.plan_fft_inverse(spec.n_q),
            fwd_p: planner.plan_fft_forward(spec.n_p),
            inv_p: planner.plan_fft_inverse(spec.n_p),
        };
        Ok(PhaseGrid {
            spec,
            plans: Arc::new(plans),
        })
    }

    /// Square box `[-half_width, half_width)^2` with `n x n` points.
    pub fn square(n: usize, half_width: f64, hbar: f64) -> Result<Self> {
        PhaseGrid::new(GridSpec {
            n_q: n,
            n_p: n,
            q_min: -half_width,
            q_max: half_width,
            p_min: -half_width,
            p_max: half_width,
            hbar,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn n_q(&self) -> usize {
        self.spec.n_q
    }

    pub fn n_p(&self) -> usize {
        self.spec.n_p
    }

    pub fn len(&self) -> usize {
        self.spec.n_q * self.spec.n_p
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hbar(&self) -> f64 {
        self.spec.hbar
    }

    pub fn dq(&self) -> f64 {
        (self.spec.q_max - self.spec.q_min) / self.spec.n_q as f64
    }

    pub fn dp(&self) -> f64 {
        (self.spec.p_max - self.spec.p_min) / self.spec.n_p as f64
    }

    pub fn dk(&self) -> f64 {
        2.0 * PI * self.spec.hbar / (self.spec.q_max - self.spec.q_min)
    }

    pub fn dy(&self) -> f64 {
        2.0 * PI * self.spec.hbar / (self.spec.p_max - self.spec.p_min)
    }

    pub fn cell_area(&self) -> f64 {
        self.dq() * self.dp()
    }

    pub fn q(&self, i: usize) -> f64 {
        self.spec.q_min + i as f64 * self.dq()
    }

    pub fn p(&self, j: usize) -> f64 {
        self.spec.p_min + j as f64 * self.dp()
    }

    /// Centered conjugate coordinate: index `n_q/2` is `k = 0`.
    pub fn k(&self, i: usize) -> f64 {
        (i as f64 - (self.spec.n_q / 2) as f64) * self.dk()
    }

    pub fn y(&self, j: usize) -> f64 {
        (j as f64 - (self.spec.n_p / 2) as f64) * self.dy()
    }

    pub fn qs(&self) -> Vec<f64> {
        (0..self.n_q()).map(|i| self.q(i)).collect()
    }

    pub fn ps(&self) -> Vec<f64> {
        (0..self.n_p()).map(|j| self.p(j)).collect()
    }

    /// Index of the grid row whose q value is closest to `q`.
    pub fn nearest_q(&self, q: f64) -> usize {
        let i = ((q - self.spec.q_min) / self.dq()).round();
        i.clamp(0.0, (self.n_q() - 1) as f64) as usize
    }

    pub fn nearest_p(&self, p: f64) -> usize {
        let j = ((p - self.spec.p_min) / self.dp()).round();
        j.clamp(0.0, (self.n_p() - 1) as f64) as usize
    }

    /// Same box with every count divided by `factor`, when that keeps the
    /// counts even.
    pub fn coarsened(&self, factor: usize) -> Option<PhaseGrid> {
        let s = self.spec;
        if factor == 0 || !s.n_q.is_multiple_of(2 * factor) || !s.n_p.is_multiple_of(2 * factor) {
            return None;
        }
        PhaseGrid::new(GridSpec {
            n_q: s.n_q / factor,
            n_p: s.n_p / factor,
            ..s
        })
        .ok()
    }

    /// Same box with new counts.
    pub fn with_counts(&self, n_q: usize, n_p: usize) -> Result<PhaseGrid> {
        PhaseGrid::new(GridSpec { n_q, n_p, ..self.spec })
    }

    pub(crate) fn check_same(&self, other: &PhaseGrid) -> Result<()> {
        if self != other {
            return Err(Error::Usage(format!(
                "grid mismatch: {:?} vs {:?}",
                self.spec, other.spec
            )));
        }
        Ok(())
    }

    /// Samples `f(q, p)` on every grid point, row-major in q.
    pub fn sample<F: Fn(f64, f64) -> f64>(&self, f: F) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.n_q() {
            let q = self.q(i);
            for j in 0..self.n_p() {
                out.push(f(q, self.p(j)));
            }
        }
        out
    }

    /// Angular wavenumbers of the q axis in FFT order, with the Nyquist
    /// entry set to zero so odd derivatives stay real.
    pub(crate) fn wavenumbers_q(&self) -> Vec<f64> {
        wavenumbers(self.n_q(), self.spec.q_max - self.spec.q_min)
    }

    pub(crate) fn wavenumbers_p(&self) -> Vec<f64> {
        wavenumbers(self.n_p(), self.spec.p_max - self.spec.p_min)
    }

    /// In-place FFT along the q axis (columns of the row-major buffer).
    pub(crate) fn fft_q(&self, buf: &mut [Complex64], inverse: bool) {
        let (nq, np) = (self.n_q(), self.n_p());
        let plan = if inverse { &self.plans.inv_q } else { &self.plans.fwd_q };
        let mut col = vec![Complex64::new(0.0, 0.0); nq];
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        for j in 0..np {
            for i in 0..nq {
                col[i] = buf[i * np + j];
            }
            plan.process_with_scratch(&mut col, &mut scratch);
            for i in 0..nq {
                buf[i * np + j] = col[i];
            }
        }
    }

    /// In-place FFT along the p axis (contiguous rows).
    pub(crate) fn fft_p(&self, buf: &mut [Complex64], inverse: bool) {
        let plan = if inverse { &self.plans.inv_p } else { &self.plans.fwd_p };
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(buf, &mut scratch);
    }

    pub(crate) fn fft2(&self, buf: &mut [Complex64], inverse: bool) {
        self.fft_p(buf, inverse);
        self.fft_q(buf, inverse);
    }

    /// `out(k,y) = dq dp sum exp(sign i (k q + y p)/hbar) x(q,p)`, centered output.
    pub(crate) fn pm_to_char(&self, x: &[Complex64], sign: f64) -> Vec<Complex64> {
        let (nq, np) = (self.n_q(), self.n_p());
        let mut buf: Vec<Complex64> = if sign > 0.0 {
            x.to_vec()
        } else {
            x.iter().map(|v| v.conj()).collect()
        };
        self.fft2(&mut buf, true);
        let scale = self.cell_area();
        let hbar = self.hbar();
        let (q0, p0) = (self.spec.q_min, self.spec.p_min);
        let mut out = vec![Complex64::new(0.0, 0.0); nq * np];
        for i in 0..nq {
            let si = (i + nq / 2) % nq;
            let k = self.k(i);
            for j in 0..np {
                let sj = (j + np / 2) % np;
                let phase = (k * q0 + self.y(j) * p0) / hbar;
                let v = buf[si * np + sj] * Complex64::from_polar(scale, phase);
                out[i * np + j] = if sign > 0.0 { v } else { v.conj() };
            }
        }
        out
    }

    /// `out(q,p) = dk dy / (2 pi hbar)^2 sum exp(-sign i (k q + y p)/hbar) c(k,y)`.
    pub(crate) fn char_to_pm(&self, c: &[Complex64], sign: f64) -> Vec<Complex64> {
        let (nq, np) = (self.n_q(), self.n_p());
        let hbar = self.hbar();
        let (q0, p0) = (self.spec.q_min, self.spec.p_min);
        let scale = self.dk() * self.dy() / (2.0 * PI * hbar).powi(2);
        let mut buf = vec![Complex64::new(0.0, 0.0); nq * np];
        for i in 0..nq {
            let si = (i + nq / 2) % nq;
            let k = self.k(i);
            for j in 0..np {
                let sj = (j + np / 2) % np;
                let v = if sign > 0.0 {
                    c[i * np + j]
                } else {
                    c[i * np + j].conj()
                };
                let phase = -(k * q0 + self.y(j) * p0) / hbar;
                buf[si * np + sj] = v * Complex64::from_polar(scale, phase);
            }
        }
        self.fft2(&mut buf, false);
        if sign < 0.0 {
            buf.iter_mut().for_each(|v| *v = v.conj());
        }
        buf
    }
}

fn wavenumbers(n: usize, length: f64) -> Vec<f64> {
    (0..n)
        .map(|m| {
            if 2 * m == n {
                0.0
            } else if m < n / 2 {
                2.0 * PI * m as f64 / length
            } else {
                2.0 * PI * (m as f64 - n as f64) / length
            }
        })
        .collect()
}

/// Which domain a [`Field`] lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// Samples over (q, p): pseudodensities and observables.
    PositionMomentum,
    /// Samples over the centered conjugate grid (k, y).
    Characteristic,
}

/// Complex samples over one domain of a [`PhaseGrid`], row-major with the
/// first coordinate (q or k) as the row index.
#[derive(Clone, Debug)]
pub struct Field {
    grid: PhaseGrid,
    domain: Domain,
    values: Vec<Complex64>,
}

impl Field {
    pub fn new(grid: &PhaseGrid, domain: Domain, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Usage(format!(
                "field has {} samples, grid expects {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Field {
            grid: grid.clone(),
            domain,
            values,
        })
    }

    pub fn from_real(grid: &PhaseGrid, domain: Domain, values: &[f64]) -> Result<Self> {
        Field::new(grid, domain, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn zeros(grid: &PhaseGrid, domain: Domain) -> Self {
        Field {
            grid: grid.clone(),
            domain,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Real position-momentum field sampled from a function.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: &PhaseGrid, f: F) -> Self {
        let values = grid.sample(f);
        Field::from_real(grid, Domain::PositionMomentum, &values).expect("sizes match")
    }

    /// Unit-weight grid delta at the cell nearest `(q, p)`.
    pub fn point_mass(grid: &PhaseGrid, q: f64, p: f64) -> Self {
        let mut f = Field::zeros(grid, Domain::PositionMomentum);
        let idx = grid.nearest_q(q) * grid.n_p() + grid.nearest_p(p);
        f.values[idx] = Complex64::new(1.0 / grid.cell_area(), 0.0);
        f
    }

    /// Unit-weight delta at the characteristic sample nearest `(k, y)`.
    pub fn char_delta(grid: &PhaseGrid, ki: isize, yi: isize) -> Self {
        let mut f = Field::zeros(grid, Domain::Characteristic);
        let (nq, np) = (grid.n_q() as isize, grid.n_p() as isize);
        let i = (ki + nq / 2).rem_euclid(nq) as usize;
        let j = (yi + np / 2).rem_euclid(np) as usize;
        f.values[i * grid.n_p() + j] = Complex64::new(1.0 / (grid.dk() * grid.dy()), 0.0);
        f
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.grid.n_p() + j]
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    /// Quadrature measure of one sample in this field's domain.
    pub fn measure(&self) -> f64 {
        match self.domain {
            Domain::PositionMomentum => self.grid.cell_area(),
            Domain::Characteristic => self.grid.dk() * self.grid.dy(),
        }
    }

    /// Discrete integral over the domain.
    pub fn integral(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() * self.measure()
    }

    /// `sqrt(sum |f|^2 * measure)`.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.measure()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: f64) -> Field {
        Field {
            grid: self.grid.clone(),
            domain: self.domain,
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    /// Rescales so the discrete integral is one.
    pub fn normalized(&self) -> Result<Field> {
        let total = self.integral();
        if total.norm() < 1e-300 {
            return Err(Error::Usage("cannot normalize a field with zero integral".into()));
        }
        Ok(Field {
            grid: self.grid.clone(),
            domain: self.domain,
            values: self.values.iter().map(|v| v / total).collect(),
        })
    }

    fn check_compatible(&self, other: &Field) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        if self.domain != other.domain {
            return Err(Error::Usage("field domain mismatch".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.check_compatible(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Field::new(&self.grid, self.domain, values)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.add(&other.scaled(-1.0))
    }

    /// L2 distance `sqrt(sum |a - b|^2 * measure)`.
    pub fn l2_distance(&self, other: &Field) -> Result<f64> {
        Ok(self.sub(other)?.l2_norm())
    }

    /// Largest pointwise difference.
    pub fn linf_distance(&self, other: &Field) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    pub(crate) fn require(&self, domain: Domain) -> Result<()> {
        if self.domain != domain {
            return Err(Error::Usage(format!(
                "expected a {domain:?} field, got {:?}",
                self.domain
            )));
        }
        Ok(())
    }
}

/// Characteristic function `C(k,y) = int dq dp exp(i(kq+yp)/hbar) P(q,p)`
/// evaluated by discrete quadrature.
pub fn char_from_density(density: &Field) -> Result<Field> {
    density.require(Domain::PositionMomentum)?;
    let grid = density.grid();
    Field::new(grid, Domain::Characteristic, grid.pm_to_char(density.values(), 1.0))
}

/// Pseudodensity `P(q,p) = (2 pi hbar)^-2 int dk dy exp(-i(kq+yp)/hbar) C(k,y)`.
/// Exact discrete inverse of [`char_from_density`].
pub fn density_from_char(chr: &Field) -> Result<Field> {
    chr.require(Domain::Characteristic)?;
    let grid = chr.grid();
    Field::new(grid, Domain::PositionMomentum, grid.char_to_pm(chr.values(), 1.0))
}
