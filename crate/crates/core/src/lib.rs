//! Binary session types, their compliance relation, event-structure
//! denotations, and game-theoretic contracts built from them.

pub mod denote;
pub mod estructure;
pub mod game;
pub mod harness;
pub mod lts;
pub mod opsem;
pub mod syntax;
