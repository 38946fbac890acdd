//! Bulk facts from delimited text files.

use std::fmt;
use std::path::Path;

use stickychase_core::{Atom, Symbol, Term};

#[derive(Debug)]
pub enum FactsError {
    /// 1-based line of the offending row.
    RowArityMismatch {
        line: u64,
        expected: usize,
        found: usize,
    },
    IoFailure(String),
}

impl fmt::Display for FactsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactsError::RowArityMismatch {
                line,
                expected,
                found,
            } => {
                write!(
                    f,
                    "line {}: expected {} fields, found {}",
                    line, expected, found
                )
            }
            FactsError::IoFailure(m) => write!(f, "{}", m),
        }
    }
}

impl std::error::Error for FactsError {}

/// Reads one fact per row. Fields are constants; quoted fields may contain the delimiter.
pub fn load_facts_delimited(
    path: &Path,
    predicate: &str,
    arity: usize,
    delimiter: u8,
) -> Result<Vec<Atom>, FactsError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(delimiter)
        .from_path(path)
        .map_err(|e| FactsError::IoFailure(format!("{}: {}", path.display(), e)))?;
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| FactsError::IoFailure(format!("{}: {}", path.display(), e)))?;
        if row.len() != arity {
            return Err(FactsError::RowArityMismatch {
                line: row.position().map_or(0, |p| p.line()),
                expected: arity,
                found: row.len(),
            });
        }
        out.push(Atom {
            predicate: Symbol::from(predicate),
            args: row.iter().map(|f| Term::Const(Symbol::from(f))).collect(),
        });
    }
    Ok(out)
}
