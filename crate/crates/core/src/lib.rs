//! Numerical laboratory for fractional Orlicz-Sobolev seminorms on planar
//! and one-dimensional domains: Young function calculus, Luxemburg
//! (semi)norms on uniform grids, a Whitney-type extension operator and a
//! harness that measures both sides of the associated inequalities.

pub mod error;
pub mod experiment;
pub mod geometry;
pub mod harness;
pub mod norms;
pub mod quadrature;
pub mod sum;
pub mod whitney;
pub mod young;

pub use error::{Error, Result};
