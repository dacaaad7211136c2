//! A DatalogMTL reasoning engine.
//!
//! DatalogMTL extends Datalog with metric temporal logic operators over a
//! rational timeline. This crate provides:
//!
//! - exact interval algebra over rational time points ([`temporal`]);
//! - the abstract syntax of programs, datasets, and queries ([`syntax`]),
//!   plus a text format ([`parser`]);
//! - interval-level evaluation of ground metric atoms ([`semantics`]) against
//!   a materialisation store ([`interpretation`]);
//! - bottom-up materialisation via the immediate consequence operator
//!   ([`materialisation`]);
//! - goal-driven magic-set rewriting of a program–dataset–query triple
//!   ([`magic`]);
//! - an end-to-end query pipeline, benchmark generators, and a brute-force
//!   reference oracle ([`engine`], [`bench`], [`oracle`]).

// Errors carry the offending atoms/intervals for diagnostics and only travel
// on cold paths; boxing them would buy nothing.
#![allow(clippy::result_large_err)]

pub mod bench;
pub mod engine;
pub mod interpretation;
pub mod magic;
pub mod materialisation;
pub mod oracle;
pub mod parser;
pub mod semantics;
pub mod syntax;
pub mod temporal;
