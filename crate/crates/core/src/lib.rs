//! Numerical toolkit for Möbius disjointness experiments on skew products
//! of the torus over Liouville rotations.
//!
//! The modules build on each other bottom-up: [`contfrac`] supplies angles
//! with exact rational snapshots, [`moebius`] the Möbius function,
//! [`spectrum`] frequency decompositions and Diophantine certificates,
//! [`harmonic`] Fourier data and the cohomological equation, [`flow`] the
//! skew product itself, and [`experiments`] the correlation sums.

pub mod certificate;
pub mod contfrac;
pub mod error;
pub mod experiments;
pub mod flow;
pub mod harmonic;
pub mod moebius;
pub mod numeric;
pub mod spectrum;

pub use certificate::{Certificate, Witness};
pub use error::{Error, Result};
