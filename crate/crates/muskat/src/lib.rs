#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod evolution;
pub mod geometry;
pub mod io;
pub mod nondim;
pub mod potentials;
pub mod quad;
pub mod spectral;

pub use error::{Error, Result};
