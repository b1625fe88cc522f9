//! Dynamical systems and the maps between them.
//!
//! Discrete systems are finite sets with an endomap; continuous systems are
//! vector fields on open boxes of `R^n`; germed systems are one-dimensional
//! fields whose morphisms are partial maps. Fields and maps are written in a
//! small expression language ([`expr`]) with exact symbolic derivatives.

pub mod category;
pub mod cli;
pub mod continuous;
pub mod discrete;
pub mod expr;
pub mod germ;
pub mod report;
pub mod tau;
