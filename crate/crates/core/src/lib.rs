//! Zalcman rescaling limits for the unicritical family `z^d + c`.
//!
//! The crate finds Misiurewicz and superattracting parameters, builds
//! Poincaré linearizers and rescaling sequences, compares rescaled pieces of
//! the Mandelbrot and Julia sets in the Hausdorff metric, and tests
//! conical-point criteria along orbits.

pub mod census;
pub mod conical;
pub mod dynamics;
pub mod orbits;
pub mod sets;
pub mod similarity;

pub use num_complex::Complex64;
