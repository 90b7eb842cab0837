//! Computational toolkit for S-adic sequences and the geometry attached to them.
//!
//! The crate is organised bottom-up:
//!
//! * [`words`] — finite and lazily extended infinite words, abelianization,
//!   factor languages, complexity and balance.
//! * [`substitution`] — substitutions, exact incidence matrices and the
//!   built-in families (Sturmian, Arnoux–Rauzy, Brun, Tribonacci).
//! * [`sadic`] — directive sequences, limit sequences, languages and the
//!   checkable hypotheses (primitivity, recurrence, algebraic irreducibility,
//!   balance).
//! * [`cfalgo`] — classical and Brun continued fraction algorithms in linear
//!   and projective form, and the natural extension of the Gauss map.
//! * [`discrete_geometry`] — faces, discrete hyperplanes, the dual
//!   substitution `E1*` and combinatorial tiling checks.
//! * [`rauzy`] — Rauzy fractal point clouds, set equations, domain exchanges
//!   and natural-coding checks.
//! * [`lyapunov`] — Monte-Carlo Lyapunov exponents of substitution cocycles.
//!
//! Supporting modules: [`matrix`] (exact integer matrices), [`poly`]
//! (integer polynomials and irreducibility over ℚ) and [`quadratic`] (exact
//! arithmetic in real quadratic fields).

pub mod cfalgo;
pub mod discrete_geometry;
mod error;
pub mod lyapunov;
pub mod matrix;
pub mod poly;
pub mod quadratic;
pub mod rauzy;
pub mod sadic;
pub mod substitution;
pub mod words;

pub use error::{Error, Result};
