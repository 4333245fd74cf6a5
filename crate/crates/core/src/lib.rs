//! Train-track machinery for outer automorphisms of free groups.
//!
//! Given an automorphism of a free group F_N (entered as images of a basis),
//! this crate computes a stable train-track representative, exact expansion
//! factors as algebraic numbers, fixed-point indices of the powers of the
//! automorphism, and — assuming the automorphism is fully irreducible — the
//! botanical class of the pair of limit trees (geometric, parageometric,
//! inverse parageometric, or pseudo-Levitt), together with the geometric and
//! branching indices of both trees.
//!
//! The layering is strictly bottom-up:
//!
//! * [`scalar`] — generic polynomials and matrices;
//! * [`algebraic`] — exact real algebraic numbers and number fields;
//! * [`words`] — free group words, automorphisms, Nielsen inversion;
//! * [`graph`] — marked graphs, edge paths, homotopy moves;
//! * [`train_track`] — transition matrices and the folding algorithm;
//! * [`turns`] — gates, taken turns, Whitehead graphs, lamination checks;
//! * [`fixed_index`] — fixed points, Nielsen paths, index lists, and an
//!   independent boundary oracle;
//! * [`botany`] — the classification verdict;
//! * [`tree_lab`] — empirical geometry of the limit tree;
//! * [`sample`] — seeded random automorphisms.

pub mod algebraic;
pub mod botany;
pub mod error;
pub mod fixed_index;
pub mod graph;
pub mod sample;
pub mod scalar;
pub mod train_track;
pub mod turns;
pub mod words;

pub use error::{Error, Result};

/// Exact arbitrary-precision integer.
pub type Int = num::BigInt;
/// Exact rational number.
pub type Rat = num::BigRational;
/// Polynomial with integer coefficients.
pub type IntPoly = scalar::Polynomial<Int>;
/// Polynomial with rational coefficients.
pub type RatPoly = scalar::Polynomial<Rat>;
