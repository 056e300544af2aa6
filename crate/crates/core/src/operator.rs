//! Linear maps on real position-momentum samples.
//!
//! The characteristic-domain kernel `a(h-k, x-y) w(kx - hy)` of an observable
//! with a delta-derivative symbol collapses to a finite differential
//! operator in (k,y). Mapped to (q,p) through `k <-> i hbar d_q`,
//! `y <-> i hbar d_p`, `d_k <-> i q / hbar`, `d_y <-> i p / hbar`, each
//! monomial `c q^m p^n` contributes terms
//! `coef * D_p^i D_q^j [q^(m-i) p^(n-j) P]` with
//! `coef = c (-i hbar)^(m+n) C(m,i) C(n,j) w^(i+j)(0) (-i hbar)^i (i hbar)^j (i/hbar)^(m+n-i-j)`.
//! Derivatives are spectral; the discrete operator is then projected onto
//! its symmetric (kernel `g`) or skew (kernel `f`) part.

use std::collections::BTreeMap;

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Domain, Field, PhaseGrid};
use crate::observable::{symbol_from_samples, ObservableSpec, Polynomial};
use crate::star::{kernel_derivative_at_zero, kernel_eval, DeformationParams, Kernel};

/// Largest tabulated grid for which the dense convolution kernel is assembled.
pub const MAX_TABULATED_CELLS: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetry {
    Symmetric,
    Skew,
}

#[derive(Clone, Debug)]
struct Group {
    mult: Vec<f64>,
    /// Spectral multiplier in FFT order, with the 1/N of the round trip folded in.
    spectral: Vec<Complex64>,
}

#[derive(Clone, Debug)]
enum Repr {
    Stencil { pointwise: Vec<f64>, groups: Vec<Group> },
    Dense(Mat<f64>),
}

/// A real linear map on pseudodensity samples over a [`PhaseGrid`].
#[derive(Clone, Debug)]
pub struct PmOperator {
    grid: PhaseGrid,
    symmetry: Symmetry,
    repr: Repr,
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

impl PmOperator {
    /// Operator of the kernel `kernel` for a polynomial observable.
    pub fn from_polynomial(
        poly: &Polynomial,
        grid: &PhaseGrid,
        params: &DeformationParams,
        kernel: Kernel,
    ) -> PmOperator {
        let hbar = grid.hbar();
        let minus_ih = Complex64::new(0.0, -hbar);
        let plus_ih = Complex64::new(0.0, hbar);
        let i_over_h = Complex64::new(0.0, 1.0 / hbar);
        let kq = grid.wavenumbers_q();
        let kp = grid.wavenumbers_p();
        let (nq, np) = (grid.n_q(), grid.n_p());
        let norm = 1.0 / (nq * np) as f64;

        let mut pointwise_poly = Polynomial::zero();
        // (q power, p power) -> list of (coef, p-derivative order, q-derivative order)
        let mut grouped: BTreeMap<(u32, u32), Vec<(f64, u32, u32)>> = BTreeMap::new();
        for ((m, n), c) in poly.terms() {
            for i in 0..=m {
                for j in 0..=n {
                    let wd = kernel_derivative_at_zero(kernel, i + j, params);
                    if wd == 0.0 {
                        continue;
                    }
                    let coef = minus_ih.powu(m + n)
                        * minus_ih.powu(i)
                        * plus_ih.powu(j)
                        * i_over_h.powu(m + n - i - j)
                        * (c * binomial(m, i) * binomial(n, j) * wd);
                    debug_assert!(coef.im.abs() <= 1e-12 * coef.norm().max(1e-300));
                    let coef = coef.re;
                    if i == 0 && j == 0 {
                        pointwise_poly = pointwise_poly.with_term(m - i, n - j, coef);
                    } else {
                        grouped.entry((m - i, n - j)).or_default().push((coef, i, j));
                    }
                }
            }
        }

        let groups = grouped
            .into_iter()
            .map(|((a, b), terms)| {
                let mult = grid.sample(|q, p| q.powi(a as i32) * p.powi(b as i32));
                let mut spectral = vec![Complex64::new(0.0, 0.0); nq * np];
                for (mq, &kqv) in kq.iter().enumerate() {
                    for (mp, &kpv) in kp.iter().enumerate() {
                        let mut s = Complex64::new(0.0, 0.0);
                        for &(coef, di_p, dj_q) in &terms {
                            s += Complex64::new(0.0, kpv).powu(di_p) * Complex64::new(0.0, kqv).powu(dj_q) * coef;
                        }
                        spectral[mq * np + mp] = s * norm;
                    }
                }
                Group { mult, spectral }
            })
            .collect();

        let symmetry = match kernel {
            Kernel::Symmetric => Symmetry::Symmetric,
            Kernel::Bracket => Symmetry::Skew,
        };
        let pointwise = if symmetry == Symmetry::Symmetric {
            grid.sample(|q, p| pointwise_poly.eval(q, p))
        } else {
            vec![0.0; grid.len()]
        };
        PmOperator {
            grid: grid.clone(),
            symmetry,
            repr: Repr::Stencil { pointwise, groups },
        }
    }

    /// Dense operator of the characteristic-domain convolution kernel for a
    /// tabulated observable:
    /// `(L C)(k,y) = sum a(u,v) w(k v - u y) C(k+u, y+v) du dv`.
    pub fn from_table(table: &Field, params: &DeformationParams, kernel: Kernel) -> Result<PmOperator> {
        table.require(Domain::PositionMomentum)?;
        let grid = table.grid().clone();
        let n = grid.len();
        if n > MAX_TABULATED_CELLS {
            return Err(Error::Unsupported(format!(
                "tabulated observables are limited to {MAX_TABULATED_CELLS} grid cells, got {n}"
            )));
        }
        let symbol = symbol_from_samples(&grid, table.values());
        let (nq, np) = (grid.n_q(), grid.n_p());
        let measure = grid.dk() * grid.dy();
        let zero = Complex64::new(0.0, 0.0);
        let nonzero: Vec<(usize, usize, Complex64)> = (0..nq)
            .flat_map(|iu| (0..np).map(move |iv| (iu, iv)))
            .map(|(iu, iv)| (iu, iv, symbol.at(iu, iv)))
            .filter(|(_, _, a)| a.norm() > 0.0)
            .collect();
        let mut mat = Mat::<f64>::zeros(n, n);
        let mut unit = vec![zero; n];
        for col in 0..n {
            unit.iter_mut().for_each(|v| *v = zero);
            unit[col] = Complex64::new(1.0, 0.0);
            let c = grid.pm_to_char(&unit, 1.0);
            let mut lc = vec![zero; n];
            for ik in 0..nq {
                let k = grid.k(ik);
                for iy in 0..np {
                    let y = grid.y(iy);
                    let mut acc = zero;
                    for &(iu, iv, a) in &nonzero {
                        let (u, v) = (grid.k(iu), grid.y(iv));
                        let w = kernel_eval(kernel, k * v - u * y, params);
                        let ih = (ik + iu + nq - nq / 2) % nq;
                        let jh = (iy + iv + np - np / 2) % np;
                        acc += a * c[ih * np + jh] * w;
                    }
                    lc[ik * np + iy] = acc * measure;
                }
            }
            let back = grid.char_to_pm(&lc, 1.0);
            for (row, v) in back.iter().enumerate() {
                mat[(row, col)] = v.re;
            }
        }
        let symmetry = match kernel {
            Kernel::Symmetric => Symmetry::Symmetric,
            Kernel::Bracket => Symmetry::Skew,
        };
        let sign = if symmetry == Symmetry::Symmetric { 1.0 } else { -1.0 };
        let projected = Mat::from_fn(n, n, |i, j| 0.5 * (mat[(i, j)] + sign * mat[(j, i)]));
        Ok(PmOperator {
            grid,
            symmetry,
            repr: Repr::Dense(projected),
        })
    }

    pub fn for_observable(
        observable: &ObservableSpec,
        grid: &PhaseGrid,
        params: &DeformationParams,
        kernel: Kernel,
    ) -> Result<PmOperator> {
        match observable {
            ObservableSpec::Polynomial(p) => Ok(PmOperator::from_polynomial(p, grid, params, kernel)),
            ObservableSpec::Tabulated(t) => {
                grid.check_same(t.grid())?;
                PmOperator::from_table(t, params, kernel)
            }
        }
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    /// The diagonal when the operator is pure multiplication.
    pub fn as_diagonal(&self) -> Option<&[f64]> {
        match &self.repr {
            Repr::Stencil { pointwise, groups } if groups.is_empty() => Some(pointwise),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.repr {
            Repr::Stencil { pointwise, groups } => groups.is_empty() && pointwise.iter().all(|&v| v == 0.0),
            Repr::Dense(m) => (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| m[(i, j)] == 0.0)),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.apply_into(x, &mut out);
        out
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        match &self.repr {
            Repr::Dense(m) => {
                let n = m.nrows();
                for (i, o) in out.iter_mut().enumerate().take(n) {
                    let mut acc = 0.0;
                    for (j, &xj) in x.iter().enumerate() {
                        acc += m[(i, j)] * xj;
                    }
                    *o = acc;
                }
            }
            Repr::Stencil { pointwise, groups } => {
                for ((o, &d), &xv) in out.iter_mut().zip(pointwise).zip(x) {
                    *o = d * xv;
                }
                if groups.is_empty() {
                    return;
                }
                let zero = Complex64::new(0.0, 0.0);
                let n = x.len();
                let sign = match self.symmetry {
                    Symmetry::Symmetric => 0.5,
                    Symmetry::Skew => -0.5,
                };
                // L x: sum_g S_g FFT(mult_g x), one inverse transform.
                let mut acc = vec![zero; n];
                let mut buf = vec![zero; n];
                for g in groups {
                    for ((b, &m), &xv) in buf.iter_mut().zip(&g.mult).zip(x) {
                        *b = Complex64::new(m * xv, 0.0);
                    }
                    self.grid.fft2(&mut buf, false);
                    for ((a, b), s) in acc.iter_mut().zip(&buf).zip(&g.spectral) {
                        *a += b * s;
                    }
                }
                self.grid.fft2(&mut acc, true);
                for (o, a) in out.iter_mut().zip(&acc) {
                    *o += 0.5 * a.re;
                }
                // L^T x: sum_g mult_g IFFT(conj(S_g) FFT(x)).
                let mut xf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
                self.grid.fft2(&mut xf, false);
                for g in groups {
                    for ((b, &xv), s) in buf.iter_mut().zip(&xf).zip(&g.spectral) {
                        *b = xv * s.conj();
                    }
                    self.grid.fft2(&mut buf, true);
                    for ((o, b), &m) in out.iter_mut().zip(&buf).zip(&g.mult) {
                        *o += sign * m * b.re;
                    }
                }
            }
        }
    }

    /// Applies the operator to a real position-momentum field.
    pub fn apply_field(&self, field: &Field) -> Result<Field> {
        field.require(Domain::PositionMomentum)?;
        self.grid.check_same(field.grid())?;
        let out = self.apply(&field.real_parts());
        Field::from_real(&self.grid, Domain::PositionMomentum, &out)
    }

    /// Power-iteration estimate of the largest singular value.
    pub fn norm_estimate(&self, iterations: usize) -> f64 {
        let n = self.dim();
        // Deterministic start vector with broad spectral content.
        let mut v: Vec<f64> = (0..n)
            .map(|i| ((i as f64 * 0.618_033_988_75).fract() - 0.5) + 1e-3)
            .collect();
        let mut est = 0.0;
        for _ in 0..iterations {
            let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if nv == 0.0 {
                return 0.0;
            }
            v.iter_mut().for_each(|a| *a /= nv);
            let w = self.apply(&v);
            est = w.iter().map(|a| a * a).sum::<f64>().sqrt();
            v = w;
        }
        est
    }
}
