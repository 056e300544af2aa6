//! Named constructors for initial pseudodensities.

use crate::error::{Error, Result};
use crate::genvalue::{build_operators, classical_spectrum_with, solve_spectrum, LevelBand, SolveOptions};
use crate::grid::{Domain, Field, PhaseGrid};
use crate::io::read_psf;
use crate::observable::ObservableSpec;
use crate::star::DeformationParams;

use super::config::InitialState;

/// Builds a unit-integral field on `grid`. `observable` is the run's
/// observable, used by constructors that do not name their own.
pub fn initial_state_builder(
    spec: &InitialState,
    grid: &PhaseGrid,
    params: &DeformationParams,
    observable: &ObservableSpec,
) -> Result<Field> {
    let field = match spec {
        InitialState::Gaussian { center, widths } => {
            let default = (grid.hbar() / 2.0).sqrt();
            let [sq, sp] = widths.unwrap_or([default, default]);
            if !(sq > 0.0 && sp > 0.0) {
                return Err(Error::Config("gaussian widths must be positive".into()));
            }
            let [q0, p0] = *center;
            Field::from_fn(grid, |q, p| {
                (-(q - q0).powi(2) / (2.0 * sq * sq) - (p - p0).powi(2) / (2.0 * sp * sp)).exp()
            })
        }
        InitialState::Eigenstate {
            observable: named,
            index,
        } => {
            let owned;
            let obs = match named {
                Some(c) => {
                    owned = c.build(grid)?;
                    &owned
                }
                None => observable,
            };
            let ops = build_operators(obs, grid, params)?;
            let opts = SolveOptions {
                classify: false,
                ..Default::default()
            };
            let res = solve_spectrum(&ops, index + 1, &opts)?;
            res.eigenfields.get(*index).cloned().ok_or_else(|| {
                Error::Accuracy(format!(
                    "only {} eigenfields resolved, index {index} requested",
                    res.len()
                ))
            })?
        }
        InitialState::Ring { energy, band } => {
            let band = match band {
                Some(w) => LevelBand::Smooth { width: *w },
                None => LevelBand::Sharp,
            };
            classical_spectrum_with(observable, grid, *energy, band)?
        }
        InitialState::Point { q, p } => Field::point_mass(grid, *q, *p),
        InitialState::File { path } => {
            let f = read_psf(path)?;
            if f.grid() != grid || f.domain() != Domain::PositionMomentum {
                return Err(Error::Config(format!(
                    "{} is not a (q, p) field on the run grid",
                    path.display()
                )));
            }
            f
        }
    };
    field.normalized()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observable::Polynomial;

    #[test]
    fn default_gaussian_is_the_oscillator_ground_state() {
        let g = PhaseGrid::square(48, 6.0, 1.0).unwrap();
        let params = DeformationParams::quantum(1.0);
        let h: ObservableSpec = Polynomial::harmonic(1.0).into();
        let gauss = initial_state_builder(
            &InitialState::Gaussian {
                center: [0.0, 0.0],
                widths: None,
            },
            &g,
            &params,
            &h,
        )
        .unwrap();
        let ground = initial_state_builder(
            &InitialState::Eigenstate {
                observable: None,
                index: 0,
            },
            &g,
            &params,
            &h,
        )
        .unwrap();
        assert!(gauss.linf_distance(&ground).unwrap() < 1e-10);
        let first = initial_state_builder(
            &InitialState::Eigenstate {
                observable: None,
                index: 1,
            },
            &g,
            &params,
            &h,
        )
        .unwrap();
        let centre = first.at(g.nearest_q(0.0), g.nearest_p(0.0)).re;
        assert!(centre < 0.0);
    }

    #[test]
    fn ring_and_point_are_normalized() {
        let g = PhaseGrid::square(32, 6.0, 1.0).unwrap();
        let params = DeformationParams::classical(1.0);
        let h: ObservableSpec = Polynomial::harmonic(1.0).into();
        for spec in [
            InitialState::Ring {
                energy: 2.0,
                band: Some(0.5),
            },
            InitialState::Point { q: 1.0, p: -1.0 },
        ] {
            let f = initial_state_builder(&spec, &g, &params, &h).unwrap();
            assert!((f.integral().re - 1.0).abs() < 1e-12);
        }
    }
}
