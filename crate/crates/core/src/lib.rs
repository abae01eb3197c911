//! Dyadic cube systems on finite quasi-metric measure spaces, weight-class
//! characteristics, the decaying stopping time, and a constructive dyadic
//! Gehring certificate.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod examples;
pub mod gehring;
pub mod growth;
pub mod io;
pub mod lattice;
pub mod space;
pub mod stopping;
pub mod weights;

pub use error::{Error, Result};
