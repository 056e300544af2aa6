//! Phase-space quantization on a periodic grid.
//!
//! Observables act on pseudodensities through a deformed star product whose
//! strength `b` interpolates between classical (`b = 0`) and quantum
//! (`b = 1/2`) mechanics. The crate solves the two-sided genvalue problem,
//! evolves densities in time, and checks everything against an independent
//! Hilbert-space reference.

pub mod analysis;
pub mod cli;
pub mod dynamics;
pub mod eigen;
pub mod error;
pub mod genvalue;
pub mod grid;
pub mod io;
pub mod observable;
pub mod operator;
pub mod oracle;
pub mod star;

pub use error::{Error, Result};
pub use grid::{char_from_density, density_from_char, Domain, Field, GridSpec, PhaseGrid};
pub use observable::{observable_from_symbol, symbol_of, ObservableSpec, Polynomial, Symbol};
pub use operator::PmOperator;
pub use star::{moyal_bracket, sym_star, DeformationParams, Kernel};
