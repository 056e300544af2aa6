//! Deformation kernels and the deformed algebra of characteristic variables.
//!
//! The symmetrized product of two characteristic variables carries the weight
//! `g(lambda) = cos(b lambda / hbar)` and their quantum bracket the weight
//! `f(lambda) = -(1/(b hbar)) sin(b lambda / hbar)`, with
//! `lambda = k y' - k' y`. At `b = 0` these degenerate to `g = 1` and
//! `f = -lambda / hbar^2`: pointwise products and Poisson brackets.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Domain, Field, PhaseGrid};
use crate::observable::Polynomial;

/// `(hbar, b)`. `b = 0` is classical statistical mechanics; `b = 1/2` the
/// calibrated quantum theory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeformationParams {
    pub hbar: f64,
    pub b: f64,
}

impl Default for DeformationParams {
    fn default() -> Self {
        DeformationParams::quantum(1.0)
    }
}

impl DeformationParams {
    pub fn new(hbar: f64, b: f64) -> Result<Self> {
        let p = DeformationParams { hbar, b };
        p.validate()?;
        Ok(p)
    }

    pub fn quantum(hbar: f64) -> Self {
        DeformationParams { hbar, b: 0.5 }
    }

    pub fn classical(hbar: f64) -> Self {
        DeformationParams { hbar, b: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hbar.is_finite() && self.hbar > 0.0) {
            return Err(Error::Config(format!("hbar must be positive, got {}", self.hbar)));
        }
        if !(self.b.is_finite() && self.b >= 0.0) {
            return Err(Error::Config(format!("b must be non-negative, got {}", self.b)));
        }
        Ok(())
    }

    pub fn is_classical(&self) -> bool {
        self.b == 0.0
    }

    /// Scale `b hbar` of the deformation.
    pub fn theta(&self) -> f64 {
        self.b * self.hbar
    }
}

/// Which kernel weights a convolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kernel {
    /// `g`, the symmetrized product.
    Symmetric,
    /// `f`, the quantum bracket.
    Bracket,
}

pub fn g_eval(lambda: f64, params: &DeformationParams) -> f64 {
    if params.is_classical() {
        return 1.0;
    }
    (params.b * lambda / params.hbar).cos()
}

/// Odd kernel with `f(lambda) -> -lambda/hbar^2` as `lambda -> 0`.
pub fn f_eval(lambda: f64, params: &DeformationParams) -> f64 {
    if params.is_classical() {
        return -lambda / (params.hbar * params.hbar);
    }
    -(params.b * lambda / params.hbar).sin() / (params.b * params.hbar)
}

pub(crate) fn kernel_eval(kernel: Kernel, lambda: f64, params: &DeformationParams) -> f64 {
    match kernel {
        Kernel::Symmetric => g_eval(lambda, params),
        Kernel::Bracket => f_eval(lambda, params),
    }
}

/// `d^order g / d lambda^order` at zero.
pub(crate) fn g_derivative_at_zero(order: u32, params: &DeformationParams) -> f64 {
    if order == 0 {
        return 1.0;
    }
    if params.is_classical() || order % 2 == 1 {
        return 0.0;
    }
    let s = params.b / params.hbar;
    let sign = if (order / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * s.powi(order as i32)
}

/// `d^order f / d lambda^order` at zero.
pub(crate) fn f_derivative_at_zero(order: u32, params: &DeformationParams) -> f64 {
    let h2 = params.hbar * params.hbar;
    if order.is_multiple_of(2) {
        return 0.0;
    }
    if params.is_classical() {
        return if order == 1 { -1.0 / h2 } else { 0.0 };
    }
    let s = params.b / params.hbar;
    let sign = if ((order - 1) / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
    -sign * s.powi(order as i32) / (params.b * params.hbar)
}

pub(crate) fn kernel_derivative_at_zero(kernel: Kernel, order: u32, params: &DeformationParams) -> f64 {
    match kernel {
        Kernel::Symmetric => g_derivative_at_zero(order, params),
        Kernel::Bracket => f_derivative_at_zero(order, params),
    }
}

/// Left side of the Jacobi condition on `f`; vanishes for the trigonometric solution.
pub fn jacobi_residual(lam: f64, mu: f64, nu: f64, params: &DeformationParams) -> f64 {
    let f = |x: f64| f_eval(x, params);
    f(lam) * f(mu - nu) + f(mu) * f(nu - lam) + f(nu) * f(lam - mu)
}

/// `g(lam) f(mu + nu) - g(lam + mu) f(nu) - g(lam - nu) f(mu)`.
pub fn mixed_identity_residual(lam: f64, mu: f64, nu: f64, params: &DeformationParams) -> f64 {
    let f = |x: f64| f_eval(x, params);
    let g = |x: f64| g_eval(x, params);
    g(lam) * f(mu + nu) - g(lam + mu) * f(nu) - g(lam - nu) * f(mu)
}

/// Evaluation strategy for symbol convolutions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConvolutionPath {
    /// Double sum over the nonzero samples of the first operand.
    Direct,
    /// FFT-based row factorization of the twisted convolution.
    Fast,
    /// `Direct` for sparse first operands or small grids, else `Fast`.
    Auto,
}

/// Symmetrized product of two symbols:
/// `r(K,Y) = sum g(kY - Ky) c1(k,y) c2(K-k, Y-y) dk dy`.
pub fn sym_star(c1: &Field, c2: &Field, params: &DeformationParams) -> Result<Field> {
    twisted_convolution(c1, c2, params, Kernel::Symmetric, ConvolutionPath::Auto)
}

/// Quantum bracket of two symbols, weight `f(kY - Ky)`.
pub fn moyal_bracket(c1: &Field, c2: &Field, params: &DeformationParams) -> Result<Field> {
    twisted_convolution(c1, c2, params, Kernel::Bracket, ConvolutionPath::Auto)
}

/// Convolution of two characteristic fields weighted by `kernel`. Indices
/// wrap periodically; `K - k` is the exact difference, so the kernel phase
/// `kY - Ky` never sees the wrap.
pub fn twisted_convolution(
    c1: &Field,
    c2: &Field,
    params: &DeformationParams,
    kernel: Kernel,
    path: ConvolutionPath,
) -> Result<Field> {
    params.validate()?;
    c1.require(Domain::Characteristic)?;
    c2.require(Domain::Characteristic)?;
    c1.grid().check_same(c2.grid())?;
    let grid = c1.grid();
    let path = match path {
        ConvolutionPath::Auto => {
            let nnz = c1.values().iter().filter(|v| v.norm() != 0.0).count();
            if nnz * 16 <= grid.len() || grid.len() <= 256 {
                ConvolutionPath::Direct
            } else {
                ConvolutionPath::Fast
            }
        }
        other => other,
    };
    let values = match path {
        ConvolutionPath::Direct => direct(c1, c2, params, kernel),
        _ => fast(c1, c2, params, kernel),
    };
    Field::new(grid, Domain::Characteristic, values)
}

fn direct(c1: &Field, c2: &Field, params: &DeformationParams, kernel: Kernel) -> Vec<Complex64> {
    let g = c1.grid();
    let (nq, np) = (g.n_q(), g.n_p());
    let measure = g.dk() * g.dy();
    let mut out = vec![Complex64::new(0.0, 0.0); nq * np];
    for ik in 0..nq {
        for iy in 0..np {
            let a = c1.at(ik, iy);
            if a.norm() == 0.0 {
                continue;
            }
            let (k, y) = (g.k(ik), g.y(iy));
            for iks in 0..nq {
                // K - k in centered indexing: (iK - ik) + n/2 mod n
                let ir = (iks + nq + nq / 2 - ik) % nq;
                let kk = g.k(iks);
                for iys in 0..np {
                    let jr = (iys + np + np / 2 - iy) % np;
                    let lambda = k * g.y(iys) - kk * y;
                    let w = kernel_eval(kernel, lambda, params);
                    out[iks * np + iys] += a * c2.at(ir, jr) * (w * measure);
                }
            }
        }
    }
    out
}

/// Natural (FFT) order <-> centered order; the map is an involution for even n.
fn swap_halves(v: &[Complex64], nq: usize, np: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
    for i in 0..nq {
        let si = (i + nq / 2) % nq;
        for j in 0..np {
            out[si * np + (j + np / 2) % np] = v[i * np + j];
        }
    }
    out
}

/// Plain periodic convolution `sum a(k,y) b(K-k,Y-y)` (no measure).
fn plain_convolution(g: &PhaseGrid, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let (nq, np) = (g.n_q(), g.n_p());
    let mut fa = swap_halves(a, nq, np);
    let mut fb = swap_halves(b, nq, np);
    g.fft2(&mut fa, false);
    g.fft2(&mut fb, false);
    let scale = 1.0 / (nq * np) as f64;
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y * scale;
    }
    g.fft2(&mut fa, true);
    swap_halves(&fa, nq, np)
}

/// `sum_{k,y} exp(i s (kY - Ky)) c1(k,y) c2(K-k, Y-y)`, factorized by rows:
/// for fixed K the y-sums are 1-D circular convolutions.
fn phased_convolution(g: &PhaseGrid, c1: &Field, c2: &Field, s: f64) -> Vec<Complex64> {
    let (nq, np) = (g.n_q(), g.n_p());
    let zero = Complex64::new(0.0, 0.0);
    // FFTs of c2 rows in natural y order.
    let mut rows2 = vec![zero; nq * np];
    for i in 0..nq {
        for j in 0..np {
            rows2[i * np + (j + np / 2) % np] = c2.at(i, j);
        }
    }
    g.fft_p(&mut rows2, false);
    let scale = 1.0 / np as f64;
    let mut out = vec![zero; nq * np];
    let mut row = vec![zero; np];
    for iks in 0..nq {
        let kk = g.k(iks);
        for ik in 0..nq {
            let ir = (iks + nq + nq / 2 - ik) % nq;
            let k = g.k(ik);
            let mut any = false;
            for j in 0..np {
                let v = c1.at(ik, j);
                any |= v.norm() != 0.0;
                row[(j + np / 2) % np] = v * Complex64::from_polar(1.0, -s * kk * g.y(j));
            }
            if !any {
                continue;
            }
            g.fft_p(&mut row, false);
            for j in 0..np {
                row[j] *= rows2[ir * np + j] * scale;
            }
            g.fft_p(&mut row, true);
            for j in 0..np {
                let ys = g.y(j);
                let v = row[(j + np / 2) % np];
                out[iks * np + j] += v * Complex64::from_polar(1.0, s * k * ys);
            }
        }
    }
    out
}

fn fast(c1: &Field, c2: &Field, params: &DeformationParams, kernel: Kernel) -> Vec<Complex64> {
    let g = c1.grid();
    let (nq, np) = (g.n_q(), g.n_p());
    let measure = g.dk() * g.dy();
    if params.is_classical() {
        return match kernel {
            Kernel::Symmetric => plain_convolution(g, c1.values(), c2.values())
                .into_iter()
                .map(|v| v * measure)
                .collect(),
            Kernel::Bracket => {
                // -(kY - Ky)/hbar^2 = -(Y (k c1) * c2 - K (y c1) * c2)/hbar^2
                let mut kc1 = c1.values().to_vec();
                let mut yc1 = c1.values().to_vec();
                for i in 0..nq {
                    for j in 0..np {
                        kc1[i * np + j] *= g.k(i);
                        yc1[i * np + j] *= g.y(j);
                    }
                }
                let a = plain_convolution(g, &kc1, c2.values());
                let b = plain_convolution(g, &yc1, c2.values());
                let h2 = params.hbar * params.hbar;
                let mut out = vec![Complex64::new(0.0, 0.0); nq * np];
                for i in 0..nq {
                    for j in 0..np {
                        let idx = i * np + j;
                        out[idx] = -(a[idx] * g.y(j) - b[idx] * g.k(i)) * (measure / h2);
                    }
                }
                out
            }
        };
    }
    let s = params.b / params.hbar;
    let plus = phased_convolution(g, c1, c2, s);
    let minus = phased_convolution(g, c1, c2, -s);
    plus.iter()
        .zip(&minus)
        .map(|(a, b)| match kernel {
            // cos = (e^{+} + e^{-}) / 2
            Kernel::Symmetric => (a + b) * (0.5 * measure),
            // -(1/(b hbar)) sin = -(e^{+} - e^{-}) / (2 i b hbar)
            Kernel::Bracket => -(a - b) / Complex64::new(0.0, 2.0 * params.theta()) * measure,
        })
        .collect()
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// `A Lambda^n B` with `Lambda = <-d_q ->d_p - <-d_p ->d_q`.
fn poisson_power(a: &Polynomial, b: &Polynomial, n: u32) -> Polynomial {
    let mut out = Polynomial::zero();
    for j in 0..=n {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let term = a
            .derivative(n - j, j)
            .mul(&b.derivative(j, n - j))
            .scale(sign * binomial(n, j));
        out = out.add(&term);
    }
    out
}

/// Exact symmetrized deformed product of two polynomial observables,
/// `A cos(b hbar Lambda) B`.
pub fn poly_sym_star(a: &Polynomial, b: &Polynomial, params: &DeformationParams) -> Polynomial {
    let theta = params.theta();
    let max_order = a.degree().min(b.degree());
    let mut out = Polynomial::zero();
    for s in 0..=max_order / 2 {
        let n = 2 * s;
        let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
        let c = sign * theta.powi(n as i32) / factorial(n);
        if c == 0.0 {
            continue;
        }
        out = out.add(&poisson_power(a, b, n).scale(c));
    }
    out
}

/// Exact quantum bracket of two polynomial observables,
/// `A sin(b hbar Lambda) B / (b hbar)`; the Poisson bracket at `b = 0`.
pub fn poly_bracket(a: &Polynomial, b: &Polynomial, params: &DeformationParams) -> Polynomial {
    let theta = params.theta();
    let max_order = a.degree().min(b.degree());
    let mut out = Polynomial::zero();
    let mut s = 0;
    while 2 * s < max_order {
        let n = 2 * s + 1;
        let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
        let c = sign * theta.powi(2 * s as i32) / factorial(n);
        if c != 0.0 {
            out = out.add(&poisson_power(a, b, n).scale(c));
        }
        s += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{char_from_density, density_from_char};
    use crate::observable::{symbol_of, ObservableSpec};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    const Q: DeformationParams = DeformationParams { hbar: 1.0, b: 0.5 };
    const C: DeformationParams = DeformationParams { hbar: 1.0, b: 0.0 };

    #[test]
    fn kernel_values() {
        assert_eq!(g_eval(0.0, &Q), 1.0);
        assert_eq!(g_eval(123.4, &C), 1.0);
        assert!(g_eval(PI, &Q).abs() < 1e-16);
        assert_eq!(f_eval(0.0, &Q), 0.0);
        assert_eq!(f_eval(0.3, &C), -0.3);
        assert!((f_eval(PI, &Q) + 2.0).abs() < 1e-15);
        let tiny = DeformationParams { hbar: 1.0, b: 1e-6 };
        assert!((f_eval(0.3, &tiny) + 0.3).abs() < 1e-12);
    }

    #[test]
    fn kernel_derivatives_match_finite_differences() {
        for params in [Q, DeformationParams { hbar: 0.7, b: 1.3 }] {
            let h = 1e-3;
            let g1 = (g_eval(h, &params) - 2.0 * g_eval(0.0, &params) + g_eval(-h, &params)) / (h * h);
            assert!((g1 - g_derivative_at_zero(2, &params)).abs() < 1e-5);
            let f1 = (f_eval(h, &params) - f_eval(-h, &params)) / (2.0 * h);
            assert!((f1 - f_derivative_at_zero(1, &params)).abs() < 1e-5);
            let f3 = (f_eval(2.0 * h, &params) - 2.0 * f_eval(h, &params) + 2.0 * f_eval(-h, &params)
                - f_eval(-2.0 * h, &params))
                / (2.0 * h * h * h);
            assert!((f3 - f_derivative_at_zero(3, &params)).abs() < 1e-3);
        }
        assert_eq!(f_derivative_at_zero(1, &C), -1.0);
        assert_eq!(f_derivative_at_zero(3, &C), 0.0);
    }

    #[test]
    fn functional_equation_examples() {
        assert_eq!(jacobi_residual(0.7, 0.7, 0.7, &Q), 0.0);
        assert!(jacobi_residual(0.3, -1.1, 2.4, &Q).abs() < 1e-14);
        assert_eq!(jacobi_residual(0.3, -1.1, 2.4, &C), 0.0);
        assert_eq!(mixed_identity_residual(0.4, 0.0, 0.0, &Q), 0.0);
        assert!(mixed_identity_residual(1.0, 0.5, -0.25, &Q).abs() < 1e-14);
        assert!(mixed_identity_residual(1.0, 0.5, -0.25, &C).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn parity_and_closure(lambda in -50.0f64..50.0, b in 0.01f64..3.0, hbar in 0.1f64..3.0) {
            let p = DeformationParams { hbar, b };
            prop_assert_eq!(g_eval(lambda, &p), g_eval(-lambda, &p));
            prop_assert_eq!(f_eval(lambda, &p), -f_eval(-lambda, &p));
            let closure = g_eval(lambda, &p).powi(2) + (b * hbar * f_eval(lambda, &p)).powi(2);
            prop_assert!((closure - 1.0).abs() < 1e-14);
        }
    }

    fn gaussian_char(g: &PhaseGrid, k0: f64, y0: f64, w: f64) -> Field {
        let mut vals = vec![Complex64::new(0.0, 0.0); g.len()];
        for i in 0..g.n_q() {
            for j in 0..g.n_p() {
                let r2 = (g.k(i) - k0).powi(2) + (g.y(j) - y0).powi(2);
                vals[i * g.n_p() + j] = Complex64::from_polar((-r2 / w).exp(), 0.3 * g.k(i));
            }
        }
        Field::new(g, Domain::Characteristic, vals).unwrap()
    }

    #[test]
    fn direct_and_fast_paths_agree() {
        let g = PhaseGrid::square(16, 8.0, 1.0).unwrap();
        let a = gaussian_char(&g, 0.2, -0.4, 0.3);
        let b = gaussian_char(&g, -0.5, 0.1, 0.5);
        for params in [Q, C, DeformationParams { hbar: 1.0, b: 1.7 }] {
            for kernel in [Kernel::Symmetric, Kernel::Bracket] {
                let d = twisted_convolution(&a, &b, &params, kernel, ConvolutionPath::Direct).unwrap();
                let f = twisted_convolution(&a, &b, &params, kernel, ConvolutionPath::Fast).unwrap();
                let err = d.linf_distance(&f).unwrap();
                assert!(err < 1e-10 * d.max_abs().max(1.0), "{kernel:?} {params:?}: {err}");
            }
        }
    }

    #[test]
    fn delta_at_origin_is_the_identity() {
        let g = PhaseGrid::square(16, 8.0, 1.0).unwrap();
        let a = gaussian_char(&g, 0.3, 0.2, 0.4);
        let one = Field::char_delta(&g, 0, 0);
        let r = sym_star(&a, &one, &Q).unwrap();
        assert!(r.linf_distance(&a).unwrap() < 1e-12);
        let r = sym_star(&one, &a, &Q).unwrap();
        assert!(r.linf_distance(&a).unwrap() < 1e-12);
    }

    #[test]
    fn bracket_of_a_symbol_with_itself_vanishes() {
        let g = PhaseGrid::square(16, 8.0, 1.0).unwrap();
        let a = gaussian_char(&g, 0.1, -0.1, 0.15);
        for params in [Q, C] {
            let r = moyal_bracket(&a, &a, &params).unwrap();
            assert!(r.max_abs() < 1e-12);
        }
    }

    #[test]
    fn classical_product_is_pointwise() {
        // At b = 0 the discrete symbols of q and p convolve to the discrete symbol of qp.
        let g = PhaseGrid::square(32, 4.0, 1.0).unwrap();
        let sq = symbol_of(&Polynomial::q().into(), &g).unwrap().to_field(&g).unwrap();
        let sp = symbol_of(&Polynomial::p().into(), &g).unwrap().to_field(&g).unwrap();
        let sqp = symbol_of(&Polynomial::q().mul(&Polynomial::p()).into(), &g)
            .unwrap()
            .to_field(&g)
            .unwrap();
        let r = twisted_convolution(&sq, &sp, &C, Kernel::Symmetric, ConvolutionPath::Fast).unwrap();
        assert!(r.linf_distance(&sqp).unwrap() < 1e-10 * sqp.max_abs());
    }

    #[test]
    fn classical_bracket_matches_poisson_bracket_of_densities() {
        // Two smooth decaying observables (narrow enough in k to avoid wrap);
        // the b = 0 bracket symbol must reproduce
        // {A,B}_PB computed by spectral differentiation in (q,p).
        let g = PhaseGrid::square(48, 6.0, 1.0).unwrap();
        let a = Field::from_fn(&g, |q, p| (-(q - 0.5).powi(2) - 0.5 * p * p).exp());
        let b = Field::from_fn(&g, |q, p| (-(0.7 * q * q) - (p + 0.3).powi(2)).exp());
        let analytic = Field::from_fn(&g, |q, p| {
            let a = (-(q - 0.5).powi(2) - 0.5 * p * p).exp();
            let b = (-(0.7 * q * q) - (p + 0.3).powi(2)).exp();
            let (aq, ap) = (-2.0 * (q - 0.5) * a, -p * a);
            let (bq, bp) = (-1.4 * q * b, -2.0 * (p + 0.3) * b);
            aq * bp - ap * bq
        });
        let sa = crate::observable::symbol_of(&ObservableSpec::Tabulated(a), &g)
            .unwrap()
            .to_field(&g)
            .unwrap();
        let sb = crate::observable::symbol_of(&ObservableSpec::Tabulated(b), &g)
            .unwrap()
            .to_field(&g)
            .unwrap();
        let r = moyal_bracket(&sa, &sb, &C).unwrap();
        let back = crate::observable::observable_from_symbol(&r).unwrap();
        assert!(back.max_imag() < 1e-8);
        assert!(back.linf_distance(&analytic).unwrap() < 1e-8);
    }

    #[test]
    fn polynomial_products_and_brackets() {
        let q = Polynomial::q();
        let p = Polynomial::p();
        // The even kernel leaves no correction on q*p.
        assert_eq!(poly_sym_star(&q, &p, &Q), q.mul(&p));
        assert_eq!(poly_bracket(&q, &p, &C), Polynomial::constant(1.0));
        assert_eq!(poly_bracket(&q, &p, &Q), Polynomial::constant(1.0));
        let q2 = q.mul(&q);
        for params in [Q, C, DeformationParams { hbar: 2.0, b: 0.9 }] {
            assert_eq!(poly_bracket(&q2, &p, &params), q.scale(2.0));
        }
        // q^2 * p^2 picks up -theta^2/2 * 2 * 2 from the second-order term.
        let r = poly_sym_star(&q2, &p.mul(&p), &Q);
        assert!((r.coefficient(0, 0) + 0.5).abs() < 1e-15);
        assert!((r.coefficient(2, 2) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn field_product_matches_density_products_at_zero_deformation() {
        // Symmetrized product of characteristic functions of two densities
        // equals the characteristic function of their pointwise product.
        let g = PhaseGrid::square(16, 6.0, 1.0).unwrap();
        let pa = Field::from_fn(&g, |q, p| (-(q * q) - p * p).exp());
        let pb = Field::from_fn(&g, |q, p| (-(0.5 * (q - 0.3).powi(2)) - p * p).exp());
        let two_pi = 2.0 * PI;
        let ca = char_from_density(&pa).unwrap().scaled(1.0 / (two_pi * two_pi));
        let cb = char_from_density(&pb).unwrap().scaled(1.0 / (two_pi * two_pi));
        let r = sym_star(&ca, &cb, &C).unwrap();
        let back = density_from_char(&r.scaled(two_pi * two_pi)).unwrap();
        let prod = Field::from_fn(&g, |q, p| {
            (-(q * q) - p * p).exp() * (-(0.5 * (q - 0.3).powi(2)) - p * p).exp()
        });
        assert!(back.linf_distance(&prod).unwrap() < 1e-10);
    }
}
