//! Decision procedures for the equational theory of relations with
//! reflexive-transitive closure, complements of atoms and of the identity.

pub mod cfg;
pub mod decide;
pub mod error;
pub mod graphs;
pub mod nfa;
pub mod satpath;
pub mod structures;
pub mod terms;

pub use error::{Error, Result};
