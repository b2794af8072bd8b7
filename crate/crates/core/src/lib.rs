//! Enumeration, exact counting and Boltzmann sampling of lambda terms in
//! de Bruijn notation, with a focus on closed simply-typed terms and
//! simply-typed normal forms.

pub mod analytic;
pub mod cli;
pub mod enumerate;
pub mod golden;
pub mod parallel;
pub mod sampler;
pub mod term;
pub mod types;
