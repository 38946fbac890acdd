//! Text formats, file input and the command line for `stickychase-core`.

pub mod cli;
pub mod dot;
pub mod facts;
pub mod json;
pub mod parse;
pub mod render;

pub use facts::{load_facts_delimited, FactsError};
pub use parse::{parse_program, parse_query, Diagnostic, DiagnosticKind, ParseErrors, SourceSpan};
pub use render::render_program;
