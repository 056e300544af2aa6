//! Reference matrix mechanics in a truncated oscillator number basis.
//!
//! Nothing here touches the phase-space discretization except the final
//! transform in [`wigner_of`], so it serves as an independent check of the
//! engine.

use faer::{Mat, Side};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{density_from_char, Domain, Field, PhaseGrid};
use crate::observable::{ObservableSpec, Polynomial, DEFAULT_MAX_DEGREE};

pub const DEFAULT_DIM: usize = 128;

/// Kept eigenvalues must move less than this (relative to `max(1, |E|)`) when `dim` doubles.
pub const REFINEMENT_GATE: f64 = 1e-8;

/// Amplitude weight in the top tenth of the basis above which a state counts as truncated.
pub const TAIL_THRESHOLD: f64 = 1e-10;

/// Oscillator basis for unit mass with frequency `omega`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisParams {
    pub hbar: f64,
    pub omega: f64,
}

impl Default for BasisParams {
    fn default() -> Self {
        BasisParams { hbar: 1.0, omega: 1.0 }
    }
}

impl BasisParams {
    fn validate(&self) -> Result<()> {
        if !(self.hbar > 0.0 && self.omega > 0.0) {
            return Err(Error::Config("basis hbar and omega must be positive".into()));
        }
        Ok(())
    }

    /// Ladder argument of `exp(i(k q + y p)/hbar)`.
    pub fn alpha(&self, k: f64, y: f64) -> Complex64 {
        Complex64::new(
            -y * (self.omega / (2.0 * self.hbar)).sqrt(),
            k / (2.0 * self.hbar * self.omega).sqrt(),
        )
    }
}

#[derive(Clone, Debug)]
pub struct MatrixObservable {
    pub matrix: Mat<Complex64>,
    pub basis: BasisParams,
}

impl MatrixObservable {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Largest entry of `M - M^dagger`.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn apply(&self, psi: &WaveVector) -> Result<Vec<Complex64>> {
        if psi.dim() != self.dim() {
            return Err(Error::Usage(format!(
                "state dimension {} does not match operator dimension {}",
                psi.dim(),
                self.dim()
            )));
        }
        let n = self.dim();
        Ok((0..n)
            .map(|i| (0..n).map(|j| self.matrix[(i, j)] * psi.amplitudes[j]).sum())
            .collect())
    }

    pub fn expectation(&self, psi: &WaveVector) -> Result<Complex64> {
        let h = self.apply(psi)?;
        Ok(psi.amplitudes.iter().zip(&h).map(|(a, b)| a.conj() * b).sum())
    }
}

/// A normalized state in the number basis.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveVector {
    pub amplitudes: Vec<Complex64>,
    pub basis: BasisParams,
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for i in 1..=n {
        out[i] = out[i - 1] + (i as f64).ln();
    }
    out
}

impl WaveVector {
    /// Wraps amplitudes that are already normalized to 1e-12.
    pub fn new(amplitudes: Vec<Complex64>, basis: BasisParams) -> Result<Self> {
        basis.validate()?;
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::Usage(format!("state norm {norm} is not 1")));
        }
        Ok(WaveVector { amplitudes, basis })
    }

    pub fn normalized(amplitudes: Vec<Complex64>, basis: BasisParams) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::Usage("cannot normalize a zero state".into()));
        }
        WaveVector::new(amplitudes.into_iter().map(|a| a / norm).collect(), basis)
    }

    pub fn number_state(n: usize, dim: usize, basis: BasisParams) -> Result<Self> {
        if n >= dim {
            return Err(Error::Config(format!("level {n} outside a basis of size {dim}")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[n] = Complex64::new(1.0, 0.0);
        WaveVector::new(amps, basis)
    }

    /// Coherent state centred on `(q0, p0)` in phase space.
    pub fn coherent(q0: f64, p0: f64, dim: usize, basis: BasisParams) -> Result<Self> {
        basis.validate()?;
        let alpha = Complex64::new(basis.omega * q0, p0) / (2.0 * basis.hbar * basis.omega).sqrt();
        let lf = ln_factorials(dim);
        let amps = (0..dim)
            .map(|n| {
                if n == 0 {
                    return Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
                }
                if alpha.norm() == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let ln_mag = -0.5 * alpha.norm_sqr() + n as f64 * alpha.norm().ln() - 0.5 * lf[n];
                Complex64::from_polar(ln_mag.exp(), n as f64 * alpha.arg())
            })
            .collect();
        WaveVector::normalized(amps, basis)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Norm carried by the top tenth of the basis.
    pub fn tail_weight(&self) -> f64 {
        let n = self.dim();
        let start = n - (n / 10).max(1);
        self.amplitudes[start..]
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `|<self|other>|`, insensitive to global phase.
    pub fn fidelity(&self, other: &WaveVector) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .norm()
    }

    /// Leading block of the basis outside which the state carries less than
    /// `1e-32` of its squared norm, below double-precision resolution.
    fn support(&self) -> usize {
        let mut tail = 0.0;
        for (i, a) in self.amplitudes.iter().enumerate().rev() {
            tail += a.norm_sqr();
            if tail > 1e-32 {
                return i + 1;
            }
        }
        0
    }
}

fn ladder_position(dim: usize, basis: &BasisParams) -> Mat<Complex64> {
    let s = (basis.hbar / (2.0 * basis.omega)).sqrt();
    Mat::from_fn(dim, dim, |i, j| {
        if i + 1 == j || j + 1 == i {
            Complex64::new(s * (i.max(j) as f64).sqrt(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

fn ladder_momentum(dim: usize, basis: &BasisParams) -> Mat<Complex64> {
    // p = i sqrt(hbar omega / 2) (a^dagger - a)
    let s = (basis.hbar * basis.omega / 2.0).sqrt();
    Mat::from_fn(dim, dim, |i, j| {
        if i == j + 1 {
            Complex64::new(0.0, s * (i as f64).sqrt())
        } else if j == i + 1 {
            Complex64::new(0.0, -s * (j as f64).sqrt())
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

fn identity(dim: usize) -> Mat<Complex64> {
    Mat::from_fn(dim, dim, |i, j| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
}

fn power(m: &Mat<Complex64>, e: u32) -> Mat<Complex64> {
    let mut out = identity(m.nrows());
    for _ in 0..e {
        out = &out * m;
    }
    out
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// Weyl-ordered matrix of a polynomial observable, using
/// `W(q^m p^n) = 2^-m sum_j C(m,j) q^j p^n q^(m-j)`.
pub fn build_matrix(observable: &ObservableSpec, dim: usize, basis: BasisParams) -> Result<MatrixObservable> {
    basis.validate()?;
    if dim == 0 {
        return Err(Error::Config("basis dimension must be positive".into()));
    }
    let poly: &Polynomial = match observable {
        ObservableSpec::Polynomial(p) => p,
        ObservableSpec::Tabulated(_) => {
            return Err(Error::Unsupported(
                "tabulated observables have no matrix representation in the oracle".into(),
            ))
        }
    };
    observable.validate(DEFAULT_MAX_DEGREE)?;
    // Products of up to `degree` tridiagonal factors need that many extra levels.
    let padded = dim + poly.degree() as usize;
    let q = ladder_position(padded, &basis);
    let p = ladder_momentum(padded, &basis);
    let mut total = Mat::<Complex64>::zeros(padded, padded);
    for ((m, n), c) in poly.terms() {
        let pn = power(&p, n);
        for j in 0..=m {
            let term = &(&power(&q, j) * &pn) * &power(&q, m - j);
            let w = c * binomial(m, j) / 2f64.powi(m as i32);
            for a in 0..padded {
                for b in 0..padded {
                    total[(a, b)] += term[(a, b)] * w;
                }
            }
        }
    }
    Ok(MatrixObservable {
        matrix: Mat::from_fn(dim, dim, |i, j| total[(i, j)]),
        basis,
    })
}

/// Generalized Laguerre values `L_0^(a)(x) ..= L_count-1^(a)(x)` by forward recurrence.
fn laguerre_sequence(a: usize, x: f64, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    let a = a as f64;
    out.push(1.0);
    if count > 1 {
        out.push(1.0 + a - x);
    }
    for k in 1..count.saturating_sub(1) {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + a - x) * out[k] - (kf + a) * out[k - 1]) / (kf + 1.0);
        out.push(next);
    }
    out
}

/// `<m|D(alpha)|n>` for `m < rows`, `n < cols`, with `D(alpha) = exp(alpha a^dagger - conj(alpha) a)`.
pub fn displacement_matrix(alpha: Complex64, rows: usize, cols: usize) -> Mat<Complex64> {
    let x = alpha.norm_sqr();
    let r = alpha.norm();
    let lf = ln_factorials(rows.max(cols));
    let mut out = Mat::<Complex64>::zeros(rows, cols);
    let big = rows.max(cols);
    for d in 0..big {
        // m - n = d (lower part) and n - m = d (upper part) share L_min^(d)(x).
        let count = big - d;
        let lag = laguerre_sequence(d, x, count);
        for (low, &l) in lag.iter().enumerate() {
            let high = low + d;
            let mag = if d == 0 {
                (-0.5 * x).exp()
            } else if r == 0.0 {
                0.0
            } else {
                (0.5 * (lf[low] - lf[high]) + d as f64 * r.ln() - 0.5 * x).exp()
            };
            if high < rows && low < cols {
                out[(high, low)] = Complex64::from_polar(mag * l, d as f64 * alpha.arg());
            }
            if d > 0 && low < rows && high < cols {
                let minus_conj = -alpha.conj();
                out[(low, high)] = Complex64::from_polar(mag * l, d as f64 * minus_conj.arg());
            }
        }
    }
    out
}

/// `<psi| exp(i(k q + y p)/hbar) |psi>`.
///
/// Sums `conj(a_m) <m|D|n> a_n` diagonal by diagonal without forming `D`;
/// along a diagonal the magnitude prefactor follows a square-root recurrence.
pub fn characteristic(psi: &WaveVector, k: f64, y: f64) -> Complex64 {
    let s = psi.support();
    let alpha = psi.basis.alpha(k, y);
    let x = alpha.norm_sqr();
    let r = alpha.norm();
    let a = &psi.amplitudes[..s];
    let lf = ln_factorials(s);
    let mut acc = Complex64::new(0.0, 0.0);
    for d in 0..s {
        if d > 0 && r == 0.0 {
            break;
        }
        let lag = laguerre_sequence(d, x, s - d);
        let mut mag = if d == 0 {
            (-0.5 * x).exp()
        } else {
            (-0.5 * lf[d] + d as f64 * r.ln() - 0.5 * x).exp()
        };
        // Lower diagonal (m = n + d) and upper diagonal (n = m + d).
        let (mut lower, mut upper) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for (low, &l) in lag.iter().enumerate() {
            let high = low + d;
            let w = mag * l;
            lower += a[high].conj() * a[low] * w;
            if d > 0 {
                upper += a[low].conj() * a[high] * w;
            }
            mag *= ((low + 1) as f64 / (high + 1) as f64).sqrt();
        }
        acc += lower * Complex64::from_polar(1.0, d as f64 * alpha.arg());
        if d > 0 {
            acc += upper * Complex64::from_polar(1.0, d as f64 * (-alpha.conj()).arg());
        }
    }
    acc
}

/// Characteristic function of `psi` sampled on the conjugate grid of `grid`.
pub fn characteristic_field(psi: &WaveVector, grid: &PhaseGrid) -> Result<Field> {
    check_hbar(psi, grid)?;
    let vals = (0..grid.n_q())
        .flat_map(|i| (0..grid.n_p()).map(move |j| (i, j)))
        .map(|(i, j)| characteristic(psi, grid.k(i), grid.y(j)))
        .collect();
    Field::new(grid, Domain::Characteristic, vals)
}

fn check_hbar(psi: &WaveVector, grid: &PhaseGrid) -> Result<()> {
    if (psi.basis.hbar - grid.hbar()).abs() > 1e-15 * grid.hbar() {
        return Err(Error::Config(format!(
            "basis hbar {} differs from grid hbar {}",
            psi.basis.hbar,
            grid.hbar()
        )));
    }
    Ok(())
}

/// Wigner function of `psi` on `grid`, through its characteristic function.
pub fn wigner_of(psi: &WaveVector, grid: &PhaseGrid) -> Result<Field> {
    let tail = psi.tail_weight();
    if tail > TAIL_THRESHOLD {
        log::warn!(
            "state carries {tail:.3e} of its norm in the top of the basis; truncation may bias the Wigner field"
        );
    }
    let chr = characteristic_field(psi, grid)?;
    let w = density_from_char(&chr)?;
    let vals: Vec<f64> = w.values().iter().map(|v| v.re).collect();
    Field::from_real(grid, Domain::PositionMomentum, &vals)
}

fn hermitian_eigen(m: &Mat<Complex64>) -> Result<(Vec<f64>, Mat<Complex64>)> {
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Accuracy(format!("oracle eigensolver failed: {e:?}")))?;
    let s = evd.S().column_vector();
    Ok(((0..m.nrows()).map(|i| s[i].re).collect(), evd.U().to_owned()))
}

/// Lowest `n_states` eigenpairs, gated by agreement with a basis twice as large.
pub fn oracle_spectrum(
    observable: &ObservableSpec,
    dim: usize,
    n_states: usize,
    basis: BasisParams,
) -> Result<Vec<(f64, WaveVector)>> {
    if n_states == 0 || n_states > dim {
        return Err(Error::Config(format!(
            "cannot keep {n_states} states of a basis of size {dim}"
        )));
    }
    let small = build_matrix(observable, dim, basis)?;
    let large = build_matrix(observable, 2 * dim, basis)?;
    let (vals, vecs) = hermitian_eigen(&small.matrix)?;
    let (vals2, _) = hermitian_eigen(&large.matrix)?;
    let mut out = Vec::with_capacity(n_states);
    for i in 0..n_states {
        let drift = (vals[i] - vals2[i]).abs();
        if drift > REFINEMENT_GATE * vals[i].abs().max(1.0) {
            return Err(Error::Accuracy(format!(
                "level {i} moved by {drift:.3e} when the basis grew from {dim} to {}",
                2 * dim
            )));
        }
        let amps = (0..dim).map(|r| vecs[(r, i)]).collect();
        out.push((vals[i], WaveVector::normalized(amps, basis)?));
    }
    Ok(out)
}

/// Unitary propagator `exp(-i H t / hbar)` through one eigendecomposition of `H`.
#[derive(Clone, Debug)]
pub struct Propagator {
    values: Vec<f64>,
    vectors: Mat<Complex64>,
    basis: BasisParams,
}

impl Propagator {
    pub fn new(h: &MatrixObservable) -> Result<Self> {
        let (values, vectors) = hermitian_eigen(&h.matrix)?;
        Ok(Propagator {
            values,
            vectors,
            basis: h.basis,
        })
    }

    pub fn evolve(&self, psi: &WaveVector, t: f64) -> Result<WaveVector> {
        let n = self.values.len();
        if psi.dim() != n {
            return Err(Error::Usage(format!(
                "state dimension {} does not match Hamiltonian dimension {n}",
                psi.dim()
            )));
        }
        let coeffs: Vec<Complex64> = (0..n)
            .map(|e| {
                let c: Complex64 = (0..n).map(|r| self.vectors[(r, e)].conj() * psi.amplitudes[r]).sum();
                c * Complex64::from_polar(1.0, -self.values[e] * t / self.basis.hbar)
            })
            .collect();
        let amps = (0..n)
            .map(|r| (0..n).map(|e| self.vectors[(r, e)] * coeffs[e]).sum())
            .collect();
        Ok(WaveVector {
            amplitudes: amps,
            basis: psi.basis,
        })
    }
}

pub fn oracle_evolve(psi0: &WaveVector, h: &MatrixObservable, t: f64) -> Result<WaveVector> {
    Propagator::new(h)?.evolve(psi0, t)
}

/// Matrix of the Hermitian observable `cos((k q + y p)/hbar)` (`sine = false`)
/// or `sin((k q + y p)/hbar)` (`sine = true`), built from exact displacement
/// elements.
pub fn weyl_harmonic(k: f64, y: f64, sine: bool, dim: usize, basis: BasisParams) -> MatrixObservable {
    let plus = displacement_matrix(basis.alpha(k, y), dim, dim);
    let minus = displacement_matrix(basis.alpha(-k, -y), dim, dim);
    let matrix = Mat::from_fn(dim, dim, |i, j| {
        if sine {
            (plus[(i, j)] - minus[(i, j)]) / Complex64::new(0.0, 2.0)
        } else {
            (plus[(i, j)] + minus[(i, j)]) * 0.5
        }
    });
    MatrixObservable { matrix, basis }
}

/// `<A psi | B psi>` for Hermitian `A`, `B`, i.e. `<psi|A B|psi>`, with the
/// intermediate states kept in a basis of size `padded` so nothing is lost
/// to truncation.
pub fn product_expectation(
    psi: &WaveVector,
    a: (f64, f64, bool),
    b: (f64, f64, bool),
    padded: usize,
) -> Result<Complex64> {
    let s = psi.support();
    if padded < s {
        return Err(Error::Config("padding smaller than the state support".into()));
    }
    let image = |(k, y, sine): (f64, f64, bool)| -> Vec<Complex64> {
        let plus = displacement_matrix(psi.basis.alpha(k, y), padded, s);
        let minus = displacement_matrix(psi.basis.alpha(-k, -y), padded, s);
        (0..padded)
            .map(|m| {
                (0..s)
                    .map(|n| {
                        let e = if sine {
                            (plus[(m, n)] - minus[(m, n)]) / Complex64::new(0.0, 2.0)
                        } else {
                            (plus[(m, n)] + minus[(m, n)]) * 0.5
                        };
                        e * psi.amplitudes[n]
                    })
                    .sum()
            })
            .collect()
    };
    let (ua, ub) = (image(a), image(b));
    Ok(ua.iter().zip(&ub).map(|(x, y)| x.conj() * y).sum())
}
