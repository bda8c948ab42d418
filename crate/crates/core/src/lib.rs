//! Random Helson and S-patterned matrices at desk scale.
//!
//! A pattern map `S` assigns every cell `(i, j)` of an `n x n` grid a label,
//! and the random matrix `H_n^S` carries the same random value on every cell
//! with the same label. This crate provides:
//!
//! - [`pattern`]: pattern maps and exact checks of symmetry, coordinatewise
//!   injectivity and the small-dimension quadruple count.
//! - [`numtheory`]: divisor counts, multiplication-table multiplicities and
//!   the ratios that control the truncation argument.
//! - [`words`]: pair-partition words, double-letter reduction and Catalan
//!   classification.
//! - [`circuits`]: circuit enumeration, the equation system attached to a
//!   word and exact solution counts.
//! - [`sampler`]: counter-based keyed sampling of shared entries.
//! - [`spectra`]: eigenvalues, empirical spectral distributions, the
//!   semicircle reference and spectral perturbation bounds.
//! - [`reduction`]: the coupled truncation pair and its trace gaps.
//!
//! Inner loops run on rayon when the `parallel` feature is enabled (the
//! default); every parallel path collects results in index order so the
//! output is bit-identical to the sequential path.

pub mod circuits;
pub mod error;
pub mod numtheory;
pub mod par;
pub mod pattern;
pub mod quad;
pub mod reduction;
pub mod sampler;
pub mod spectra;
pub mod words;

pub use error::{Error, Result};
pub use par::Execution;
pub use pattern::{Alpha, Label, PatternMap};
pub use sampler::{EntryDistribution, MatrixRealization};
pub use spectra::{Esd, SemicircleRef};
pub use words::Word;
