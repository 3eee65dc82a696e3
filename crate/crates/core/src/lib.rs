//! Discontinuous Galerkin solver for the one-dimensional isothermal
//! Navier-Stokes-Allen-Cahn system in mixed form.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod mesh;
pub mod mms;
pub mod spatial;
pub mod stepper;
pub mod thermo;

pub use error::{Error, Result};
