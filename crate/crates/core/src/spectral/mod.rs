//! Periodic-box discretization, transforms and Fourier multipliers.

mod fft;
mod field;
mod grid;
mod ops;
mod symbol;

use thiserror::Error;

pub use fft::GridFft;
pub use field::{transform, Direction, Representation, SpectralField};
pub use grid::BoxGrid;
pub use ops::{
    apply_symbol, fractional_derivative, frequency_split, i_operator, DerivativeKind, SymbolTable,
};
pub use symbol::{low_pass_symbol, smoothstep, Blend, MultiplierSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid multiplier: {0}")]
    InvalidMultiplier(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("sample buffer has length {found}, grid expects {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("field is in {found:?} representation, operation expects {expected:?}")]
    RepresentationMismatch {
        expected: Representation,
        found: Representation,
    },
    #[error("symbol is {value} at frequency {xi:?}")]
    NonFiniteSymbol { xi: Vec<f64>, value: f64 },
    #[error("negative-order homogeneous derivative needs a zero-mean field (mean coefficient {mean_coefficient:e})")]
    NonzeroMean { mean_coefficient: f64 },
}
