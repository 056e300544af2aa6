//! Overlaps, purity and the uncertainty volume of pseudodensities, plus the
//! purity calibration of the deformation parameter.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genvalue::{build_operators, solve_spectrum, SolveOptions};
use crate::grid::{Domain, Field, GridSpec, PhaseGrid};
use crate::observable::Polynomial;
use crate::star::DeformationParams;

/// Relative slack on the pure-state purity bound `1/(2 pi hbar)`.
pub const PURITY_TOLERANCE: f64 = 1e-6;

/// `2 pi hbar * sum Pi Pj dq dp`.
pub fn overlap(pi: &Field, pj: &Field) -> Result<f64> {
    pi.require(Domain::PositionMomentum)?;
    pj.require(Domain::PositionMomentum)?;
    pi.grid().check_same(pj.grid())?;
    let g = pi.grid();
    let s: f64 = pi.values().iter().zip(pj.values()).map(|(a, b)| a.re * b.re).sum();
    Ok(2.0 * PI * g.hbar() * s * g.cell_area())
}

pub fn purity(p: &Field) -> Result<f64> {
    p.require(Domain::PositionMomentum)?;
    let s: f64 = p.values().iter().map(|v| v.re * v.re).sum();
    Ok(s * p.grid().cell_area())
}

/// `1 / purity`.
pub fn uncertainty_volume(p: &Field) -> Result<f64> {
    Ok(1.0 / purity(p)?)
}

/// Marginal densities over q (length `n_q`) and over p (length `n_p`).
pub fn marginals(p: &Field) -> Result<(Vec<f64>, Vec<f64>)> {
    p.require(Domain::PositionMomentum)?;
    let g = p.grid();
    let (nq, np) = (g.n_q(), g.n_p());
    let mut mq = vec![0.0; nq];
    let mut mp = vec![0.0; np];
    for i in 0..nq {
        for j in 0..np {
            let v = p.at(i, j).re;
            mq[i] += v * g.dp();
            mp[j] += v * g.dq();
        }
    }
    Ok((mq, mp))
}

/// Mean and standard deviation of both coordinates.
fn moments(p: &Field) -> (f64, f64, f64, f64) {
    let g = p.grid();
    let cell = g.cell_area();
    let (mut m0, mut mq, mut mp, mut mqq, mut mpp) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..g.n_q() {
        let q = g.q(i);
        for j in 0..g.n_p() {
            let pv = g.p(j);
            let w = p.at(i, j).re * cell;
            m0 += w;
            mq += w * q;
            mp += w * pv;
            mqq += w * q * q;
            mpp += w * pv * pv;
        }
    }
    let (aq, ap) = (mq / m0, mp / m0);
    let vq = (mqq / m0 - aq * aq).max(0.0);
    let vp = (mpp / m0 - ap * ap).max(0.0);
    (aq, ap, vq.sqrt(), vp.sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSummary {
    pub norm: f64,
    /// Absent for improper states, where it depends on the grid.
    pub purity: Option<f64>,
    pub uncertainty_volume: Option<f64>,
    pub pure: bool,
    pub min_value: f64,
    pub mean_q: f64,
    pub mean_p: f64,
    /// Untested diagnostic: standard-deviation product.
    pub variance_product: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateReport {
    pub hbar: f64,
    pub states: Vec<StateSummary>,
    pub overlap_matrix: Option<Vec<Vec<f64>>>,
    pub diagnostics: Vec<String>,
}

impl StateReport {
    pub fn for_state(p: &Field) -> Result<StateReport> {
        StateReport::build(std::slice::from_ref(p), false)
    }

    /// Report on a family of states including their overlap matrix.
    pub fn for_family(states: &[Field]) -> Result<StateReport> {
        StateReport::build(states, true)
    }

    fn build(states: &[Field], with_overlaps: bool) -> Result<StateReport> {
        let Some(first) = states.first() else {
            return Err(Error::Usage("no states to report on".into()));
        };
        let hbar = first.grid().hbar();
        let bound = 1.0 / (2.0 * PI * hbar);
        let mut diagnostics = Vec::new();
        let mut summaries = Vec::with_capacity(states.len());
        for (i, p) in states.iter().enumerate() {
            first.grid().check_same(p.grid())?;
            let norm = p.integral().re;
            let pur = purity(p)?;
            let proper = pur <= bound * (1.0 + PURITY_TOLERANCE);
            if !proper {
                diagnostics.push(format!(
                    "state {i}: purity {pur:.6e} exceeds the pure-state bound {bound:.6e}; \
                     treated as improper (point mass, ridge or under-resolved), purity omitted"
                ));
            }
            if (norm - 1.0).abs() > 1e-8 {
                diagnostics.push(format!("state {i}: integral {norm:.12} differs from 1"));
            }
            let (mean_q, mean_p, sq, sp) = moments(p);
            summaries.push(StateSummary {
                norm,
                purity: proper.then_some(pur),
                uncertainty_volume: proper.then_some(1.0 / pur),
                pure: proper && (pur - bound).abs() <= 1e-4 * bound,
                min_value: p.values().iter().map(|v| v.re).fold(f64::INFINITY, f64::min),
                mean_q,
                mean_p,
                variance_product: sq * sp,
            });
        }
        let overlap_matrix = if with_overlaps {
            let n = states.len();
            let mut m = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in i..n {
                    let v = overlap(&states[i], &states[j])?;
                    m[i][j] = v;
                    m[j][i] = v;
                }
            }
            Some(m)
        } else {
            None
        };
        Ok(StateReport {
            hbar,
            states: summaries,
            overlap_matrix,
            diagnostics,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Ground-state pseudodensity of the oscillator at deformation `b`:
/// `exp(-(omega q^2 + p^2/omega) / (2 hbar b)) / (2 pi hbar b)`.
pub fn oscillator_ground_density(grid: &PhaseGrid, omega: f64, b: f64) -> Field {
    let hbar = grid.hbar();
    Field::from_fn(grid, |q, p| {
        (-(omega * q * q + p * p / omega) / (2.0 * hbar * b)).exp() / (2.0 * PI * hbar * b)
    })
}

/// Quadrature grid resolving the ground density at `b`: same counts as
/// `template`, box of twelve standard deviations per side.
fn resolving_grid(template: &PhaseGrid, hbar: f64, omega: f64, b: f64) -> Result<PhaseGrid> {
    let sq = (hbar * b / omega).sqrt();
    let sp = (hbar * b * omega).sqrt();
    let n_q = template.n_q().max(64);
    let n_p = template.n_p().max(64);
    PhaseGrid::new(GridSpec {
        n_q,
        n_p,
        q_min: -12.0 * sq,
        q_max: 12.0 * sq,
        p_min: -12.0 * sp,
        p_max: 12.0 * sp,
        hbar,
    })
}

fn ground_purity(template: &PhaseGrid, hbar: f64, omega: f64, b: f64) -> Result<f64> {
    let g = resolving_grid(template, hbar, omega, b)?;
    purity(&oscillator_ground_density(&g, omega, b).normalized()?)
}

/// Root in `(0, 4]` of `purity(ground state at b) = 1/(2 pi hbar)`.
///
/// The ground density is the closed-form oscillator eigenfield; its purity
/// is a grid sum on a quadrature grid adapted to each trial `b`.
pub fn calibrate_b(grid: &PhaseGrid, hbar: f64, omega: f64) -> Result<f64> {
    if !(hbar > 0.0 && omega > 0.0) {
        return Err(Error::Config("hbar and omega must be positive".into()));
    }
    let target = 1.0 / (2.0 * PI * hbar);
    let f = |b: f64| ground_purity(grid, hbar, omega, b).map(|p| p - target);
    let (mut lo, mut hi) = (1e-6, 4.0);
    let (flo, fhi) = (f(lo)?, f(hi)?);
    if flo.signum() == fhi.signum() {
        return Err(Error::Calibration(format!(
            "purity condition not bracketed in (0, 4]: residuals {flo:.3e} and {fhi:.3e}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Same condition, with the ground state taken from the genvalue solver on
/// `grid` for each trial `b`. The uncertainty volume is linear in `b`, so a
/// secant iteration on it converges in a few solves.
pub fn calibrate_b_numerical(grid: &PhaseGrid, omega: f64) -> Result<f64> {
    let hbar = grid.hbar();
    let target = 2.0 * PI * hbar;
    let volume = |b: f64| -> Result<f64> {
        let params = DeformationParams::new(hbar, b)?;
        let op = build_operators(&Polynomial::harmonic(omega).into(), grid, &params)?;
        let opts = SolveOptions {
            classify: false,
            ..Default::default()
        };
        let res = solve_spectrum(&op, 1, &opts)?;
        let ground = res
            .eigenfields
            .first()
            .ok_or_else(|| Error::Calibration(format!("no ground state found at b = {b}")))?;
        uncertainty_volume(ground)
    };
    let (mut b0, mut b1) = (0.4, 0.8);
    let (mut v0, mut v1) = (volume(b0)? - target, volume(b1)? - target);
    for _ in 0..20 {
        if v1 == v0 {
            break;
        }
        let b2 = b1 - v1 * (b1 - b0) / (v1 - v0);
        if !(b2 > 0.0 && b2 <= 4.0) {
            return Err(Error::Calibration(format!("secant step left (0, 4]: {b2}")));
        }
        b0 = b1;
        v0 = v1;
        b1 = b2;
        v1 = volume(b1)? - target;
        if (b1 - b0).abs() <= 1e-13 {
            return Ok(b1);
        }
    }
    if v1.abs() <= 1e-10 * target {
        Ok(b1)
    } else {
        Err(Error::Calibration(format!("secant iteration stalled at b = {b1}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> PhaseGrid {
        PhaseGrid::square(64, 8.0, 1.0).unwrap()
    }

    #[test]
    fn gaussian_purities() {
        let g = grid();
        let half = oscillator_ground_density(&g, 1.0, 0.5);
        assert!((purity(&half).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-12);
        assert!((overlap(&half, &half).unwrap() - 1.0).abs() < 1e-12);
        let one = oscillator_ground_density(&g, 1.0, 1.0);
        assert!((purity(&one).unwrap() - 1.0 / (4.0 * PI)).abs() < 1e-12);
        let v = uncertainty_volume(&one).unwrap();
        assert!((v * purity(&one).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_box_volume() {
        let g = PhaseGrid::square(16, 2.0, 1.0).unwrap();
        let flat = Field::from_fn(&g, |_, _| 1.0 / 16.0);
        assert!((uncertainty_volume(&flat).unwrap() - 16.0).abs() < 1e-12);
    }

    #[test]
    fn marginals_of_gaussian_and_point_mass() {
        let g = grid();
        let p = oscillator_ground_density(&g, 2.0, 0.5);
        let (mq, mp) = marginals(&p).unwrap();
        let sq: f64 = mq.iter().sum::<f64>() * g.dq();
        let sp: f64 = mp.iter().sum::<f64>() * g.dp();
        assert!((sq - 1.0).abs() < 1e-12 && (sp - 1.0).abs() < 1e-12);
        // Variances hbar b / omega and hbar b omega.
        let vq: f64 = mq.iter().enumerate().map(|(i, m)| m * g.q(i).powi(2)).sum::<f64>() * g.dq();
        let vp: f64 = mp.iter().enumerate().map(|(j, m)| m * g.p(j).powi(2)).sum::<f64>() * g.dp();
        assert!((vq - 0.25).abs() < 1e-10 && (vp - 1.0).abs() < 1e-10);
        let pm = Field::point_mass(&g, 0.0, 0.0);
        let (mq, mp) = marginals(&pm).unwrap();
        assert_eq!(mq.iter().filter(|v| **v != 0.0).count(), 1);
        assert_eq!(mp.iter().filter(|v| **v != 0.0).count(), 1);
        assert!((mq[g.nearest_q(0.0)] - 1.0 / g.dq()).abs() < 1e-9);
    }

    #[test]
    fn point_masses_are_flagged_improper() {
        let g = grid();
        let pm = Field::point_mass(&g, 0.0, 0.0);
        let report = StateReport::for_family(&[pm]).unwrap();
        assert!(report.states[0].purity.is_none());
        assert!(!report.diagnostics.is_empty());
        assert!(report.overlap_matrix.unwrap()[0][0] > 100.0);
        let json = StateReport::for_state(&oscillator_ground_density(&g, 1.0, 0.5))
            .unwrap()
            .to_json()
            .unwrap();
        let back: StateReport = serde_json::from_str(&json).unwrap();
        assert!(back.states[0].pure);
    }

    #[test]
    fn calibration_is_frequency_independent() {
        for omega in [0.3, 1.0, 7.0] {
            let b = calibrate_b(&grid(), 1.0, omega).unwrap();
            assert!((b - 0.5).abs() < 1e-10, "{omega}: {b}");
        }
        let b = calibrate_b(&grid(), 0.25, 2.0).unwrap();
        assert!((b - 0.5).abs() < 1e-10);
    }

    #[test]
    fn numerical_calibration_from_solver() {
        let g = PhaseGrid::square(48, 8.0, 1.0).unwrap();
        let b = calibrate_b_numerical(&g, 1.0).unwrap();
        assert!((b - 0.5).abs() < 1e-6, "{b}");
    }
}
