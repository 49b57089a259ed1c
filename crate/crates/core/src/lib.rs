//! Exact symbolic engine for the bilinear differential form determined by
//! the Wodzicki residue of `f₀[F,f][F,h]`, where `F` is the sign operator
//! of the conformal Fredholm module on middle-dimension forms.
//!
//! The crate is layered bottom-up:
//!
//! * [`rational`], [`multi_index`], [`polynomial`], [`homogeneous`]: exact
//!   scalars, exponent bookkeeping and the rational functions
//!   `p(ξ)/|ξ|^{2k}` every symbol entry is built from;
//! * [`exterior`]: exterior/interior multiplication matrices, the leading
//!   symbol of `F` and its trace constants;
//! * [`symbol`]: graded symbol expansions, composition, commutators with
//!   functions, the order `-n` extraction and the residue density;
//! * [`sphere`] and [`bilinear`]: sphere integrals and the Taylor-expansion
//!   route to the flat-space coefficients;
//! * [`direct`]: the same coefficients obtained by composing symbols;
//! * [`cocycle`]: exact Fourier arithmetic on the flat torus for the
//!   cocycle and symmetry checks;
//! * [`document`]: the machine-readable output format.

pub mod bilinear;
pub mod cocycle;
pub mod direct;
pub mod document;
pub mod error;
pub mod exterior;
pub mod homogeneous;
pub mod matrix;
pub mod multi_index;
pub mod polynomial;
pub mod rational;
pub mod sphere;
pub mod symbol;

pub use bilinear::{BilinearFormCoefficients, Partials};
pub use error::{Error, Result};
pub use homogeneous::HomogeneousRational;
pub use multi_index::MultiIndex;
pub use polynomial::{Polynomial, VarSpace};
pub use rational::Rational;
pub use sphere::SphereConvention;

