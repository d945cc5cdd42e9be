//! Exact chain-level machinery for affine Coxeter apartments and
//! Bruhat–Tits trees: root systems, polysimplicial complexes, hulls,
//! synthesized contractions, coefficient systems, the torus
//! counterexample and weighted Schwartz-type norms.
//!
//! The crate is `no_std` and only needs `alloc`. All chain arithmetic is
//! exact over the rationals; irrational distances only enter through
//! rigorous fixed-point enclosures in [`interval`].

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod coeff;
pub mod complex;
pub mod contraction;
pub mod error;
pub mod hull;
pub mod interval;
pub mod linalg;
pub mod norms;
pub mod rootsys;
pub mod torus;

pub use crate::complex::{Chain, Complex, ComplexKind, Polysimplex};
pub use crate::contraction::Contraction;
pub use crate::error::Error;
pub use crate::linalg::Q;
pub use crate::rootsys::RootDatum;

/// Default cap on the number of cells a generator may produce.
pub const DEFAULT_CELL_BUDGET: usize = 200_000;
