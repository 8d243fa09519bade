//! Iterative LLM-driven refactoring of scalar loops into forms the compiler
//! auto-vectorizes, gated by compiler remarks, differential tests and
//! translation validation.

pub mod bench;
pub mod cli;
pub mod compiler;
pub mod corpus;
pub mod engine;
pub mod harness;
pub mod llm;
pub mod process;
pub mod testing;
pub mod verify;
