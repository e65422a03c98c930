//! Rates of metastability for resolvent paths of pseudocontractions.

pub mod approx_limsup;
pub mod bound;
pub mod eval;
pub mod harness;
pub mod moduli;
pub mod num;
pub mod schemas;
pub mod spaces;
