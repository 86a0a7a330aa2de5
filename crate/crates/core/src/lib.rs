//! Fourier-pseudospectral simulation of the one-dimensional Dirac–Klein–Gordon
//! system in characteristic (split) form, with Gevrey-norm bookkeeping, a
//! Picard contraction solver, numerical checks of the bilinear and
//! almost-conservation estimates, and an executable lower bound on the radius
//! of spatial analyticity.
//!
//! Module map:
//!
//! * [`spectral`] – periodic grid, transforms, Fourier multipliers, solution groups,
//!   alias-free products.
//! * [`dkg`] – state, splitting, right-hand side and the reference integrator.
//! * [`gevrey`] – Gevrey norms, the norm ledger, radius estimation, analytic data.
//! * [`picard`] – Duhamel-quadrature Picard iteration and constant calibration.
//! * [`estimates`] – ratio checks for the inequalities the radius bound rests on.
//! * [`certify`] – the radius certificate and its verification along a run.
//! * [`library`] – the fixed sample library and reference scenario data.

pub mod certify;
pub mod dkg;
pub mod error;
pub mod estimates;
pub mod gevrey;
pub mod library;
pub mod picard;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64;
