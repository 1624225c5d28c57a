//! Spectral tools for the stability of sinusoidal shear flow on the 2-torus,
//! Euler and KdV solvers, and closed-form overlap and copy-count bounds.

pub mod bounds;
pub mod euler;
pub mod fields;
pub mod kdv;
pub mod stability;
