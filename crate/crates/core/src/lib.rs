//! A laboratory for linear sketching over GF(2).
//!
//! The crate is organized around the pipeline
//! truth table -> exact Fourier spectrum -> subspace weight profiles ->
//! sketch constructions -> one-way communication games / turnstile streams.
//!
//! All spectral quantities are exact: Walsh-Hadamard coefficients are stored
//! as integers `c(a) = 2^n * fhat(a)` and squared weights as rationals with
//! power-of-four denominators, so theorem checks never depend on a floating
//! point tolerance.

pub mod boolfn;
pub mod caps;
pub mod checks;
pub mod commsim;
pub mod error;
pub mod fourierdim;
pub mod gf2;
pub mod rat;
pub mod rng;
pub mod sketch;
pub mod streamsim;

pub use boolfn::{builtin, BoolFun, Spectrum, SymmetricProfile};
pub use caps::Caps;
pub use error::{Error, Result};
pub use gf2::{AffineSubspace, BitVec, Gf2Matrix, Subspace};
pub use rat::Rat;
