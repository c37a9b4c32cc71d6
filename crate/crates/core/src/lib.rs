//! Hamiltonian structure of constant-population compartmental models.
//!
//! Every compartmental model whose flows only move individuals between
//! compartments conserves the total population, and is a Hamiltonian system
//! with the total population as Hamiltonian. This crate builds the Poisson
//! structures of such models symbolically, verifies them numerically
//! (Jacobi identity, Casimirs, compatibility of bi-Hamiltonian pairs),
//! couples populations through skew-symmetric transfers, and computes the
//! exact solutions of the endemic SIRS and vaccination models by Casimir
//! reduction, quadrature and monotone inversion.
//!
//! The crate is `no_std` and needs only `alloc`. File formats and the
//! command-line front end live in the `hamepi` crate.
#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod bihamiltonian;
pub mod coupling;
pub mod expr;
pub mod field;
pub mod model;
pub mod poisson;
pub mod sampling;
pub mod solver;

pub use expr::{constant, param, parse, var, Environment, EvalError, Expr, ParamMap};
pub use field::{CompiledField, VectorField};
pub use poisson::{BiHamiltonianPair, HamiltonianSystem, PoissonStructure};
