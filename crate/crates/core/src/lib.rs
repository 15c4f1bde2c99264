//! Improper integrals under termination-function definitions, changes of
//! variable between them, and a harness that checks value preservation.

pub mod cli;
pub mod cov;
pub mod expr;
pub mod integral;
pub mod quad;
pub mod spec_string;
pub mod taper;
pub mod verify;
pub mod zeval;
