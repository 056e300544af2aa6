//! Phase-space observables A(q,p) and their symbols a(k,y).

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Domain, Field, PhaseGrid};

/// Default cap on the total degree of polynomial observables.
pub const DEFAULT_MAX_DEGREE: u32 = 4;

/// Relative mismatch between opposite edges of a tabulated observable above
/// which its sampled symbol is flagged as periodization-dominated.
pub const PERIODIZATION_TOLERANCE: f64 = 1e-6;

/// A real polynomial in (q, p), stored as `(q power, p power) -> coefficient`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Polynomial {
    terms: BTreeMap<(u32, u32), f64>,
}

/// One monomial in serialized form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    #[serde(default)]
    pub q: u32,
    #[serde(default)]
    pub p: u32,
    pub c: f64,
}

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial::default()
    }

    pub fn constant(c: f64) -> Self {
        Polynomial::zero().with_term(0, 0, c)
    }

    pub fn q() -> Self {
        Polynomial::zero().with_term(1, 0, 1.0)
    }

    pub fn p() -> Self {
        Polynomial::zero().with_term(0, 1, 1.0)
    }

    /// `(p^2 + omega^2 q^2) / 2`
    pub fn harmonic(omega: f64) -> Self {
        Polynomial::zero()
            .with_term(0, 2, 0.5)
            .with_term(2, 0, 0.5 * omega * omega)
    }

    /// `p^2/2 + q^4/4`
    pub fn quartic() -> Self {
        Polynomial::zero().with_term(0, 2, 0.5).with_term(4, 0, 0.25)
    }

    pub fn from_monomials(monomials: &[Monomial]) -> Self {
        monomials
            .iter()
            .fold(Polynomial::zero(), |acc, m| acc.with_term(m.q, m.p, m.c))
    }

    pub fn monomials(&self) -> Vec<Monomial> {
        self.terms.iter().map(|(&(q, p), &c)| Monomial { q, p, c }).collect()
    }

    /// Adds `c q^m p^n`; zero coefficients are dropped.
    pub fn with_term(mut self, m: u32, n: u32, c: f64) -> Self {
        let entry = self.terms.entry((m, n)).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.remove(&(m, n));
        }
        self
    }

    pub fn terms(&self) -> impl Iterator<Item = ((u32, u32), f64)> + '_ {
        self.terms.iter().map(|(&k, &v)| (k, v))
    }

    pub fn coefficient(&self, m: u32, n: u32) -> f64 {
        self.terms.get(&(m, n)).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|(m, n)| m + n).max().unwrap_or(0)
    }

    pub fn eval(&self, q: f64, p: f64) -> f64 {
        self.terms
            .iter()
            .map(|(&(m, n), &c)| c * q.powi(m as i32) * p.powi(n as i32))
            .sum()
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        other
            .terms()
            .fold(self.clone(), |acc, ((m, n), c)| acc.with_term(m, n, c))
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        self.terms()
            .fold(Polynomial::zero(), |acc, ((m, n), c)| acc.with_term(m, n, c * s))
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for ((m1, n1), c1) in self.terms() {
            for ((m2, n2), c2) in other.terms() {
                out = out.with_term(m1 + m2, n1 + n2, c1 * c2);
            }
        }
        out
    }

    /// `d^a/dq^a d^b/dp^b`
    pub fn derivative(&self, a: u32, b: u32) -> Polynomial {
        let mut out = Polynomial::zero();
        for ((m, n), c) in self.terms() {
            if m < a || n < b {
                continue;
            }
            let fq: f64 = (m - a + 1..=m).map(f64::from).product();
            let fp: f64 = (n - b + 1..=n).map(f64::from).product();
            out = out.with_term(m - a, n - b, c * fq * fp);
        }
        out
    }

    /// True when no monomial mixes q and p.
    pub fn is_separable(&self) -> bool {
        self.terms.keys().all(|&(m, n)| m == 0 || n == 0)
    }

    /// Splits a separable polynomial into `(T(p), V(q))`; the constant goes to V.
    pub fn split_kinetic_potential(&self) -> Option<(Polynomial, Polynomial)> {
        if !self.is_separable() {
            return None;
        }
        let mut kinetic = Polynomial::zero();
        let mut potential = Polynomial::zero();
        for ((m, n), c) in self.terms() {
            if n > 0 {
                kinetic = kinetic.with_term(0, n, c);
            } else {
                potential = potential.with_term(m, 0, c);
            }
        }
        Some((kinetic, potential))
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(&(m, n), &c)| match (m, n) {
                (0, 0) => format!("{c}"),
                (m, 0) => format!("{c}*q^{m}"),
                (0, n) => format!("{c}*p^{n}"),
                (m, n) => format!("{c}*q^{m}*p^{n}"),
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// A phase-space observable: analytic polynomial or tabulated samples.
#[derive(Clone, Debug)]
pub enum ObservableSpec {
    Polynomial(Polynomial),
    Tabulated(Field),
}

impl From<Polynomial> for ObservableSpec {
    fn from(p: Polynomial) -> Self {
        ObservableSpec::Polynomial(p)
    }
}

impl ObservableSpec {
    pub fn validate(&self, max_degree: u32) -> Result<()> {
        match self {
            ObservableSpec::Polynomial(poly) => {
                if poly.degree() > max_degree {
                    return Err(Error::Unsupported(format!(
                        "polynomial degree {} exceeds the supported maximum {max_degree}",
                        poly.degree()
                    )));
                }
                if poly.terms().any(|(_, c)| !c.is_finite()) {
                    return Err(Error::Config("non-finite polynomial coefficient".into()));
                }
                Ok(())
            }
            ObservableSpec::Tabulated(table) => {
                table.require(Domain::PositionMomentum)?;
                let scale = table.max_abs().max(1e-300);
                if table.max_imag() > 1e-12 * scale {
                    return Err(Error::Config("tabulated observable must be real".into()));
                }
                Ok(())
            }
        }
    }

    pub fn as_polynomial(&self) -> Option<&Polynomial> {
        match self {
            ObservableSpec::Polynomial(p) => Some(p),
            ObservableSpec::Tabulated(_) => None,
        }
    }

    /// Samples of A on the grid.
    pub fn samples(&self, grid: &PhaseGrid) -> Result<Vec<f64>> {
        match self {
            ObservableSpec::Polynomial(poly) => Ok(grid.sample(|q, p| poly.eval(q, p))),
            ObservableSpec::Tabulated(table) => {
                grid.check_same(table.grid())?;
                Ok(table.real_parts())
            }
        }
    }
}

/// `weight * d^m/dk^m d^n/dy^n [delta(k) delta(y)]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeltaTerm {
    pub weight: Complex64,
    pub k_order: u32,
    pub y_order: u32,
}

/// The symbol a(k,y) of an observable, `A = int dk dy a(k,y) exp(i(kq+yp)/hbar)`.
#[derive(Clone, Debug)]
pub enum Symbol {
    /// Exact distributional symbol of a polynomial: monomial `q^m p^n`
    /// maps to `(i hbar)^(m+n) d_k^m d_y^n delta`.
    Sparse { terms: Vec<DeltaTerm>, hbar: f64 },
    /// Periodized discrete symbol of tabulated samples.
    Sampled {
        field: Field,
        /// Largest relative mismatch between opposite edges of the table.
        boundary_mismatch: f64,
    },
}

impl Symbol {
    /// Reconstructs `A(q,p)` from the symbol.
    pub fn value_at(&self, q: f64, p: f64) -> f64 {
        match self {
            Symbol::Sparse { terms, hbar } => {
                // int delta^(m)(k) exp(ikq/hbar) dk = (-iq/hbar)^m
                let iq = Complex64::new(0.0, -q / hbar);
                let ip = Complex64::new(0.0, -p / hbar);
                terms
                    .iter()
                    .map(|t| t.weight * iq.powu(t.k_order) * ip.powu(t.y_order))
                    .sum::<Complex64>()
                    .re
            }
            Symbol::Sampled { field, .. } => {
                let g = field.grid();
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..g.n_q() {
                    for j in 0..g.n_p() {
                        let phase = (g.k(i) * q + g.y(j) * p) / g.hbar();
                        acc += field.at(i, j) * Complex64::from_polar(1.0, phase);
                    }
                }
                (acc * g.dk() * g.dy()).re
            }
        }
    }

    /// Realization on a characteristic grid whose quadrature reproduces the
    /// observable exactly on grid points.
    pub fn to_field(&self, grid: &PhaseGrid) -> Result<Field> {
        match self {
            Symbol::Sparse { .. } => {
                let samples: Vec<Complex64> = grid
                    .sample(|q, p| self.value_at(q, p))
                    .into_iter()
                    .map(|v| Complex64::new(v, 0.0))
                    .collect();
                Ok(symbol_from_samples(grid, &samples))
            }
            Symbol::Sampled { field, .. } => {
                grid.check_same(field.grid())?;
                Ok(field.clone())
            }
        }
    }
}

/// `a(k,y) = (2 pi hbar)^-2 sum dq dp exp(-i(kq+yp)/hbar) A(q,p)`.
pub(crate) fn symbol_from_samples(grid: &PhaseGrid, samples: &[Complex64]) -> Field {
    let two_pi_hbar = 2.0 * std::f64::consts::PI * grid.hbar();
    let vals = grid
        .pm_to_char(samples, -1.0)
        .into_iter()
        .map(|v| v / (two_pi_hbar * two_pi_hbar))
        .collect();
    Field::new(grid, Domain::Characteristic, vals).expect("sizes match")
}

/// Quadrature `sum dk dy a(k,y) exp(i(kq+yp)/hbar)` on every grid point.
pub fn observable_from_symbol(symbol: &Field) -> Result<Field> {
    symbol.require(Domain::Characteristic)?;
    let grid = symbol.grid();
    let two_pi_hbar = 2.0 * std::f64::consts::PI * grid.hbar();
    let vals = grid
        .char_to_pm(symbol.values(), -1.0)
        .into_iter()
        .map(|v| v * two_pi_hbar * two_pi_hbar)
        .collect();
    Field::new(grid, Domain::PositionMomentum, vals)
}

/// Symbol of an observable on `grid`.
pub fn symbol_of(observable: &ObservableSpec, grid: &PhaseGrid) -> Result<Symbol> {
    observable.validate(u32::MAX)?;
    match observable {
        ObservableSpec::Polynomial(poly) => {
            let hbar = grid.hbar();
            let terms = poly
                .terms()
                .map(|((m, n), c)| DeltaTerm {
                    weight: Complex64::new(0.0, hbar).powu(m + n) * c,
                    k_order: m,
                    y_order: n,
                })
                .collect();
            Ok(Symbol::Sparse { terms, hbar })
        }
        ObservableSpec::Tabulated(table) => {
            grid.check_same(table.grid())?;
            let mismatch = boundary_mismatch(table);
            if mismatch > PERIODIZATION_TOLERANCE {
                log::warn!(
                    "tabulated observable edges differ by {mismatch:.3e} (relative); \
                     its discrete symbol is dominated by periodization"
                );
            }
            Ok(Symbol::Sampled {
                field: symbol_from_samples(grid, table.values()),
                boundary_mismatch: mismatch,
            })
        }
    }
}

fn boundary_mismatch(table: &Field) -> f64 {
    let g = table.grid();
    let (nq, np) = (g.n_q(), g.n_p());
    let scale = table.max_abs().max(1e-300);
    let mut worst: f64 = 0.0;
    for j in 0..np {
        worst = worst.max((table.at(0, j) - table.at(nq - 1, j)).norm());
    }
    for i in 0..nq {
        worst = worst.max((table.at(i, 0) - table.at(i, np - 1)).norm());
    }
    worst / scale
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn position_symbol_is_i_hbar_delta_prime() {
        let g = PhaseGrid::square(16, 4.0, 0.5).unwrap();
        let Symbol::Sparse { terms, .. } = symbol_of(&Polynomial::q().into(), &g).unwrap() else {
            panic!("polynomial symbols are sparse");
        };
        assert_eq!(
            terms,
            vec![DeltaTerm {
                weight: Complex64::new(0.0, 0.5),
                k_order: 1,
                y_order: 0
            }]
        );
    }

    #[test]
    fn oscillator_symbol_matches_second_derivative_form() {
        let g = PhaseGrid::square(16, 4.0, 1.3).unwrap();
        let omega = 2.0;
        let sym = symbol_of(&Polynomial::harmonic(omega).into(), &g).unwrap();
        let Symbol::Sparse { terms, .. } = &sym else { panic!() };
        let hb2 = 1.3f64 * 1.3;
        for t in terms {
            match (t.k_order, t.y_order) {
                (0, 2) => assert!((t.weight.re + hb2 / 2.0).abs() < 1e-14),
                (2, 0) => assert!((t.weight.re + hb2 * omega * omega / 2.0).abs() < 1e-14),
                other => panic!("unexpected term {other:?}"),
            }
            assert_eq!(t.weight.im, 0.0);
        }
        assert!((sym.value_at(0.3, -1.2) - Polynomial::harmonic(omega).eval(0.3, -1.2)).abs() < 1e-13);
    }

    #[test]
    fn constant_symbol_is_unit_delta() {
        let g = PhaseGrid::square(16, 4.0, 1.0).unwrap();
        let f = symbol_of(&Polynomial::constant(1.0).into(), &g)
            .unwrap()
            .to_field(&g)
            .unwrap();
        let weight = f.at(8, 8) * g.dk() * g.dy();
        assert!((weight - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        let rest: f64 = f
            .values()
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != 8 * 16 + 8)
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max);
        assert!(rest < 1e-12);
    }

    #[test]
    fn discrete_symbol_reproduces_samples() {
        let g = PhaseGrid::square(16, 4.0, 1.0).unwrap();
        let poly = Polynomial::quartic().add(&Polynomial::q().mul(&Polynomial::p()));
        let a = symbol_of(&poly.clone().into(), &g).unwrap().to_field(&g).unwrap();
        let back = observable_from_symbol(&a).unwrap();
        let scale = 4.0f64.powi(4);
        for i in 0..16 {
            for j in 0..16 {
                let want = poly.eval(g.q(i), g.p(j));
                assert!((back.at(i, j).re - want).abs() < 1e-12 * scale);
            }
        }
    }

    #[test]
    fn non_periodic_table_is_flagged() {
        let g = PhaseGrid::square(16, 4.0, 1.0).unwrap();
        let table = Field::from_fn(&g, |q, _| q);
        match symbol_of(&ObservableSpec::Tabulated(table), &g).unwrap() {
            Symbol::Sampled { boundary_mismatch, .. } => assert!(boundary_mismatch > PERIODIZATION_TOLERANCE),
            _ => panic!(),
        }
        let bump = Field::from_fn(&g, |q, p| (-2.0 * (q * q + p * p)).exp());
        match symbol_of(&ObservableSpec::Tabulated(bump), &g).unwrap() {
            Symbol::Sampled { boundary_mismatch, .. } => assert!(boundary_mismatch < PERIODIZATION_TOLERANCE),
            _ => panic!(),
        }
    }

    #[test]
    fn polynomial_calculus() {
        let h = Polynomial::quartic();
        assert_eq!(h.degree(), 4);
        assert_eq!(h.derivative(1, 0), Polynomial::zero().with_term(3, 0, 1.0));
        assert_eq!(h.derivative(0, 1), Polynomial::p());
        assert!(h.is_separable());
        assert!(!Polynomial::q().mul(&Polynomial::p()).is_separable());
        let obs: ObservableSpec = Polynomial::zero().with_term(3, 2, 1.0).into();
        assert!(matches!(obs.validate(4), Err(Error::Unsupported(_))));
    }
}
