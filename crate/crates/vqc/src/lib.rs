//! Static protection analysis for broadcast processes with quality binders.
//!
//! The pipeline: parse a process ([`parser`]), translate it into
//! propositional flow constraints ([`translate`]), enumerate the models of
//! the constraint system to discover attacks ([`solver`]), rank the attacks
//! by cost ([`cost`]), compare the achieved protection against a security
//! assignment ([`security`]), and render the ways into a program point as an
//! attack tree ([`tree`]). A bounded executable semantics ([`semantics`])
//! serves as an independent oracle for the whole chain.

pub mod ast;
pub mod cost;
pub mod generate;
pub mod logic;
pub mod parser;
pub mod security;
pub mod semantics;
pub mod solver;
pub mod translate;
pub mod tree;
