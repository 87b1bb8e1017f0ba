//! The subject language: a small class-based language with doc comments,
//! a static checker, and an instrumented interpreter.

pub mod ast;
mod check;
pub mod doc;
pub mod interp;
mod lexer;
mod parser;

pub use ast::*;
pub use interp::{
    execute_test, invoke, CallRecord, ExecOptions, ExecutionTrace, HaltReason, Heap, HeapObj, ObjId, Outcome,
    StatementStatus, Value, Watch, DEFAULT_STEP_BUDGET, GUARD_STEP_BUDGET,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LangError {
    #[error("{pos}: syntax error: {message}")]
    Syntax { pos: Pos, message: String },
    #[error("{pos}: duplicate name '{name}'")]
    DuplicateName { pos: Pos, name: String },
    #[error("{pos}: unresolved type '{name}'")]
    UnresolvedType { pos: Pos, name: String },
    #[error("{pos}: type error: {message}")]
    Type { pos: Pos, message: String },
}

impl LangError {
    pub fn pos(&self) -> Pos {
        match self {
            LangError::Syntax { pos, .. }
            | LangError::DuplicateName { pos, .. }
            | LangError::UnresolvedType { pos, .. }
            | LangError::Type { pos, .. } => *pos,
        }
    }
}

/// Parses and checks a complete `.sub` source.
pub fn parse_program(source: &str) -> Result<SubjectProgram, LangError> {
    let parsed = parser::parse(source)?;
    let program = SubjectProgram {
        units: parsed.units,
        exceptions: parsed.exceptions,
        branch_count: parsed.branch_count,
    };
    check::check_program(&program)?;
    Ok(program)
}
