//! Time-frequency transforms on a periodic lattice and L^p concentration
//! functionals of the ambiguity function, with maximization drivers and
//! numerical verification checks.
//!
//! Signals live on a [`TimeGrid`] of `n` samples with step `dx`; the
//! time-frequency plane is the `n x n` lattice with steps `dx` and
//! `domega = 1 / (n dx)`. All reductions run in a fixed order, so every
//! result is reproducible bit for bit regardless of [`Execution`].

pub mod domain;
pub mod error;
pub mod fft;
pub mod functionals;
pub mod gabor;
pub mod grid;
pub mod io;
pub mod localization;
pub mod optimize;
pub mod par;
pub mod signal;
pub mod tfarray;
pub mod transform;
pub mod verify;

pub use domain::{rasterize, rasterize_time, DomainMask, DomainSpec, OriginDensity, TimeMask, TimeSet};
pub use error::{Error, Result};
pub use functionals::{Objective, ObjectiveKind, ObjectiveSpec};
pub use gabor::GaborLattice;
pub use grid::{PhasePoint, TimeGrid};
pub use optimize::{OptimizerConfig, RunReport};
pub use par::Execution;
pub use signal::Signal;
pub use tfarray::TfArray;
