//! Computational laboratory for the third moment of primes in arithmetic
//! progressions.
//!
//! The crate is organised bottom-up:
//!
//! * [`arith`] sieves, factorisations and the classical multiplicative
//!   functions;
//! * [`singular`] the local singular-series data `r(p)` and the exact
//!   rational functions `f_Δ`, `g_Δ`, `R_Δ`, `I(Δ)` built from it;
//! * [`characters`] Dirichlet characters, conductors and Gauss sums;
//! * [`special`] complex Gamma, Hurwitz zeta and friends;
//! * [`analytic`] L-functions and every Euler product used downstream;
//! * [`contour`] vertical-line integrals and the secondary terms they define;
//! * [`sums`] brute-force finite sums paired with their closed forms;
//! * [`moments`] the weighted third moment of `E_x(q, a)`;
//! * [`fit`] main-term least squares and residual exponents;
//! * [`verify`] the invariant batteries shared by tests and the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod arith;
pub mod characters;
pub mod contour;
pub mod error;
pub mod fit;
pub mod moments;
pub mod singular;
pub mod special;
pub mod sums;
pub mod verify;


pub use analytic::{EulerLocalData, ProductConfig, Valued};
pub use arith::{Factorization, SieveTable};
pub use characters::{CharacterGroup, DirichletCharacter};
pub use contour::{ParityKernel, QuadratureReport, QuadratureSpec};
pub use error::{ApmError, Result};
pub use fit::{FitResult, SampleSeries};
pub use moments::{MomentRecord, Weighting};
pub use singular::{DeltaModulus, LocalProfile};
pub use sums::{PairVector, SumReport};

pub use num_complex::Complex64;
pub use num_rational::BigRational;
