//! Contracts extracted from doc comments: preconditions and guard ⟹ assertion
//! postconditions over parameters, receiver fields, subject methods and the
//! return value.

mod eval;
mod patterns;
mod translate;

use std::fmt;

use serde::Serialize;

use crate::lang::doc::TagKind;
use crate::lang::{MethodRef, SubjectProgram};

pub use eval::{compare_ints, eval_expr, term_holds, CallView, EvalError};
pub use patterns::{PatternTable, Rule, Section, TableError, DEFAULT_PATTERNS};
pub use translate::{extract_contracts, extract_program, translate_condition, Scope, Untranslatable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Literal {
    Int(i64),
    Bool(bool),
    Null,
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Int(n) => write!(f, "{n}"),
            Literal::Bool(b) => write!(f, "{b}"),
            Literal::Null => f.write_str("null"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum CExpr {
    Lit(Literal),
    /// Parameter of the target method, by position.
    Param(usize),
    /// Field of the receiver, by index.
    Field(usize),
    This,
    Call {
        receiver: Box<CExpr>,
        method: MethodRef,
        args: Vec<CExpr>,
    },
    /// Name of an exception type; only as the right side of `instanceof`.
    Exception(String),
    Not(Box<CExpr>),
    /// Conjunction of terms as a boolean expression (used for wrapped negation).
    All(Vec<Term>),
    RetVal,
}

impl CExpr {
    pub fn mentions_retval(&self) -> bool {
        match self {
            CExpr::RetVal => true,
            CExpr::Call { receiver, args, .. } => {
                receiver.mentions_retval() || args.iter().any(CExpr::mentions_retval)
            }
            CExpr::Not(e) => e.mentions_retval(),
            CExpr::All(ts) => ts.iter().any(|t| t.lhs.mentions_retval() || t.rhs.mentions_retval()),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Op {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    InstanceOf,
    NotInstanceOf,
}

impl Op {
    pub fn negated(self) -> Op {
        match self {
            Op::Lt => Op::Ge,
            Op::Le => Op::Gt,
            Op::Gt => Op::Le,
            Op::Ge => Op::Lt,
            Op::Eq => Op::Ne,
            Op::Ne => Op::Eq,
            Op::InstanceOf => Op::NotInstanceOf,
            Op::NotInstanceOf => Op::InstanceOf,
        }
    }

    /// The operator after exchanging the operands (`a < b` as `b > a`).
    pub fn swapped(self) -> Op {
        match self {
            Op::Lt => Op::Gt,
            Op::Le => Op::Ge,
            Op::Gt => Op::Lt,
            Op::Ge => Op::Le,
            other => other,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Op::Lt => "<",
            Op::Le => "<=",
            Op::Gt => ">",
            Op::Ge => ">=",
            Op::Eq => "==",
            Op::Ne => "!=",
            Op::InstanceOf => "instanceof",
            Op::NotInstanceOf => "!instanceof",
        }
    }

    fn sexpr(self) -> &'static str {
        match self {
            Op::Eq => "=",
            other => other.symbol(),
        }
    }

    pub fn from_symbol(s: &str) -> Option<Op> {
        Some(match s {
            "<" => Op::Lt,
            "<=" => Op::Le,
            ">" => Op::Gt,
            ">=" => Op::Ge,
            "==" => Op::Eq,
            "!=" => Op::Ne,
            "instanceof" => Op::InstanceOf,
            "!instanceof" => Op::NotInstanceOf,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TermKind {
    Numeric,
    Boolean,
    Reference,
    ExceptionType,
}

/// An atomic comparison `lhs op rhs`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Term {
    pub lhs: CExpr,
    pub op: Op,
    pub rhs: CExpr,
    pub kind: TermKind,
}

impl Term {
    pub fn negated(&self) -> Term {
        Term {
            op: self.op.negated(),
            ..self.clone()
        }
    }

    pub fn mentions_retval(&self) -> bool {
        self.lhs.mentions_retval() || self.rhs.mentions_retval()
    }
}

/// Syntactic negation of a conjunction: operator flip for a single term,
/// otherwise `not(all(...)) == true`.
pub fn negate_conjunction(terms: &[Term]) -> Vec<Term> {
    match terms {
        [single] => vec![single.negated()],
        _ => vec![Term {
            lhs: CExpr::Not(Box::new(CExpr::All(terms.to_vec()))),
            op: Op::Eq,
            rhs: CExpr::Lit(Literal::Bool(true)),
            kind: TermKind::Boolean,
        }],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ContractKind {
    Precondition,
    Postcondition,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SourceTag {
    pub kind: TagKind,
    pub target: String,
    pub text: String,
    pub line: u32,
}

impl SourceTag {
    pub fn raw(&self) -> String {
        if self.target.is_empty() {
            format!("{} {}", self.kind.as_str(), self.text)
        } else {
            format!("{} {} {}", self.kind.as_str(), self.target, self.text)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Contract {
    /// `Unit.method/preN` or `Unit.method/postN`.
    pub id: String,
    #[serde(skip)]
    pub method: MethodRef,
    pub method_name: String,
    pub kind: ContractKind,
    pub guard: Vec<Term>,
    pub assert: Vec<Term>,
    pub source: SourceTag,
    pub guard_text: String,
    pub assert_text: String,
    /// Translated by a rule marked `[low]`.
    pub low_confidence: bool,
}

/// A doc tag that could not be turned into a contract.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkipRecord {
    pub method_name: String,
    pub source: SourceTag,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Extraction {
    pub contracts: Vec<Contract>,
    pub skipped: Vec<SkipRecord>,
}

impl Extraction {
    pub fn postconditions(&self) -> impl Iterator<Item = &Contract> {
        self.contracts
            .iter()
            .filter(|c| c.kind == ContractKind::Postcondition)
    }

    pub fn preconditions_of(&self, m: MethodRef) -> impl Iterator<Item = &Contract> {
        self.contracts
            .iter()
            .filter(move |c| c.kind == ContractKind::Precondition && c.method == m)
    }

    pub fn find(&self, id: &str) -> Option<&Contract> {
        self.contracts.iter().find(|c| c.id == id)
    }

    /// JSON export: contracts with S-expression terms plus skip records.
    pub fn to_json(&self, program: &SubjectProgram) -> serde_json::Value {
        let contracts: Vec<serde_json::Value> = self
            .contracts
            .iter()
            .map(|c| {
                serde_json::json!({
                    "id": c.id,
                    "method": c.method_name,
                    "kind": c.kind,
                    "guard": c.guard.iter().map(|t| sexpr_term(program, c.method, t)).collect::<Vec<_>>(),
                    "assert": c.assert.iter().map(|t| sexpr_term(program, c.method, t)).collect::<Vec<_>>(),
                    "source": c.source.raw(),
                    "line": c.source.line,
                    "guard_text": c.guard_text,
                    "assert_text": c.assert_text,
                    "low_confidence": c.low_confidence,
                })
            })
            .collect();
        let skipped: Vec<serde_json::Value> = self
            .skipped
            .iter()
            .map(|s| {
                serde_json::json!({
                    "method": s.method_name,
                    "source": s.source.raw(),
                    "line": s.source.line,
                    "reason": s.reason,
                })
            })
            .collect();
        serde_json::json!({ "contracts": contracts, "skipped": skipped })
    }
}

/// `(op lhs rhs)` with names resolved against the target method.
pub fn sexpr_term(program: &SubjectProgram, target: MethodRef, t: &Term) -> String {
    format!(
        "({} {} {})",
        t.op.sexpr(),
        sexpr_expr(program, target, &t.lhs),
        sexpr_expr(program, target, &t.rhs)
    )
}

pub fn sexpr_expr(program: &SubjectProgram, target: MethodRef, e: &CExpr) -> String {
    match e {
        CExpr::Lit(l) => l.to_string(),
        CExpr::Param(i) => param_name(program, target, *i),
        CExpr::Field(i) => format!("(field {})", field_name(program, target, *i)),
        CExpr::This => "this".into(),
        CExpr::RetVal => "retVal".into(),
        CExpr::Exception(n) => n.clone(),
        CExpr::Call {
            receiver,
            method,
            args,
        } => {
            let mut s = format!("(call {} {}", sexpr_expr(program, target, receiver), program.method_name(*method));
            for a in args {
                s.push(' ');
                s.push_str(&sexpr_expr(program, target, a));
            }
            s.push(')');
            s
        }
        CExpr::Not(inner) => format!("(not {})", sexpr_expr(program, target, inner)),
        CExpr::All(ts) => {
            let parts: Vec<String> = ts.iter().map(|t| sexpr_term(program, target, t)).collect();
            format!("(and {})", parts.join(" "))
        }
    }
}

/// Infix rendering, e.g. `drawer.exceeds(limit) == true`.
pub fn display_term(program: &SubjectProgram, target: MethodRef, t: &Term) -> String {
    format!(
        "{} {} {}",
        display_expr(program, target, &t.lhs),
        t.op.symbol(),
        display_expr(program, target, &t.rhs)
    )
}

pub fn display_expr(program: &SubjectProgram, target: MethodRef, e: &CExpr) -> String {
    match e {
        CExpr::Lit(l) => l.to_string(),
        CExpr::Param(i) => param_name(program, target, *i),
        CExpr::Field(i) => format!("this.{}", field_name(program, target, *i)),
        CExpr::This => "this".into(),
        CExpr::RetVal => "retVal".into(),
        CExpr::Exception(n) => n.clone(),
        CExpr::Call {
            receiver,
            method,
            args,
        } => {
            let name = match method {
                MethodRef::Method(u, m) => program.units[*u].methods[*m].name.clone(),
                MethodRef::List(op) => op.name().to_string(),
                MethodRef::Ctor(u) => program.units[*u].name.clone(),
            };
            let args: Vec<String> = args.iter().map(|a| display_expr(program, target, a)).collect();
            format!("{}.{}({})", display_expr(program, target, receiver), name, args.join(", "))
        }
        CExpr::Not(inner) => format!("!({})", display_expr(program, target, inner)),
        CExpr::All(ts) => {
            let parts: Vec<String> = ts.iter().map(|t| display_term(program, target, t)).collect();
            parts.join(" && ")
        }
    }
}

fn param_name(program: &SubjectProgram, target: MethodRef, i: usize) -> String {
    match target {
        MethodRef::Method(u, m) => program.units[u].methods[m]
            .params
            .get(i)
            .map(|p| p.name.clone())
            .unwrap_or_else(|| format!("arg{i}")),
        MethodRef::Ctor(u) => program.units[u]
            .ctor_params()
            .get(i)
            .map(|p| p.name.clone())
            .unwrap_or_else(|| format!("arg{i}")),
        MethodRef::List(_) => format!("arg{i}"),
    }
}

fn field_name(program: &SubjectProgram, target: MethodRef, i: usize) -> String {
    let unit = match target {
        MethodRef::Method(u, _) | MethodRef::Ctor(u) => u,
        MethodRef::List(_) => return format!("field{i}"),
    };
    program.units[unit]
        .fields
        .get(i)
        .map(|f| f.name.clone())
        .unwrap_or_else(|| format!("field{i}"))
}
