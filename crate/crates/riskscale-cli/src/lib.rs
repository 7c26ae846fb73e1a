//! Library half of the command-line tool: the scenario document schema and
//! the command implementations, exposed so integration tests can exercise
//! them directly.

pub mod commands;
pub mod schema;
