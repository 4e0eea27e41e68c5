//! Sized-type inference and worst-case runtime bounds for a small
//! higher-order functional language.
//!
//! The pipeline: parse -> lambda-lift -> simple type inference ->
//! call-site specialization -> (ticking) -> index annotation ->
//! constraint generation -> skolemization -> model synthesis ->
//! concretization. A small-step interpreter validates derived bounds
//! empirically.

pub mod syntax;
pub mod parser;
pub mod util;
pub mod hm;
pub mod validate;
pub mod lift;
pub mod eval;
pub mod maxpoly;
pub mod index;
pub mod sized;
pub mod annotate;
pub mod footprint;
pub mod constraints;
pub mod gubs;

pub use syntax::{Program, Term, SimpleType, Scheme};
