//! Transfer operators, topological pressure and equilibrium states for
//! semigroups generated by finitely many rational maps of the Riemann sphere.
//!
//! The guide in `book/` walks through the concepts; its Rust snippets run as
//! doctests of this crate.

pub mod branches;
pub mod csv;
pub mod error;
pub mod measures;
pub mod poly;
pub mod potential;
pub mod rational;
pub mod semigroup;
pub mod sphere;
pub mod transfer;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use potential::Potential;
pub use rational::RationalMap;
pub use semigroup::{GeneratorSet, JuliaCloud};
pub use sphere::{chordal_distance, ExtComplex};
pub use transfer::{pressure_global, pressure_pointwise, Mode, PressureEstimate};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/sphere.md")]
    mod sphere {}
    #[doc = include_str!("../../../book/src/semigroups.md")]
    mod semigroups {}
    #[doc = include_str!("../../../book/src/pressure.md")]
    mod pressure {}
    #[doc = include_str!("../../../book/src/equilibrium.md")]
    mod equilibrium {}
    #[doc = include_str!("../../../book/src/branches.md")]
    mod branches {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
