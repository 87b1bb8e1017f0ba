//! Syntax tree for the subject language.

use serde::Serialize;
use std::fmt;

use super::doc::DocComment;

/// Source position (1-based line and column).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Type {
    Int,
    Bool,
    Void,
    List,
    /// A user-declared unit (class).
    Unit(String),
}

impl Type {
    pub fn is_reference(&self) -> bool {
        matches!(self, Type::List | Type::Unit(_))
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int => f.write_str("int"),
            Type::Bool => f.write_str("bool"),
            Type::Void => f.write_str("void"),
            Type::List => f.write_str("list"),
            Type::Unit(name) => f.write_str(name),
        }
    }
}

/// Index of a unit within [`SubjectProgram::units`].
pub type UnitId = usize;

/// Identifies an `if`/`while` condition; numbered in source order.
pub type BranchId = u32;

/// Reference to something callable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum MethodRef {
    Ctor(UnitId),
    Method(UnitId, usize),
    List(ListOp),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ListOp {
    Add,
    Contains,
    Size,
}

impl ListOp {
    pub fn name(self) -> &'static str {
        match self {
            ListOp::Add => "add",
            ListOp::Contains => "contains",
            ListOp::Size => "size",
        }
    }

    pub fn from_name(name: &str) -> Option<ListOp> {
        match name {
            "add" => Some(ListOp::Add),
            "contains" => Some(ListOp::Contains),
            "size" => Some(ListOp::Size),
            _ => None,
        }
    }

    pub fn arity(self) -> usize {
        match self {
            ListOp::Size => 0,
            _ => 1,
        }
    }

    pub fn return_type(self) -> Type {
        match self {
            ListOp::Size => Type::Int,
            _ => Type::Bool,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExceptionDecl {
    pub name: String,
    pub parent: Option<String>,
    pub pos: Pos,
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldDecl {
    pub name: String,
    pub ty: Type,
    pub pos: Pos,
}

#[derive(Debug, Clone, Serialize)]
pub struct Param {
    pub name: String,
    pub ty: Type,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodDecl {
    pub name: String,
    pub params: Vec<Param>,
    pub ret: Type,
    pub body: Vec<Stmt>,
    pub doc: Option<DocComment>,
    pub throws: Vec<String>,
    pub pos: Pos,
}

#[derive(Debug, Clone, Serialize)]
pub struct UnitDecl {
    pub name: String,
    pub fields: Vec<FieldDecl>,
    /// Explicit constructor; units without one get an implicit no-arg constructor.
    pub ctor: Option<MethodDecl>,
    pub methods: Vec<MethodDecl>,
    pub pos: Pos,
}

impl UnitDecl {
    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.name == name)
    }

    pub fn method_index(&self, name: &str) -> Option<usize> {
        self.methods.iter().position(|m| m.name == name)
    }

    pub fn ctor_params(&self) -> &[Param] {
        self.ctor.as_ref().map(|c| c.params.as_slice()).unwrap_or(&[])
    }
}

#[derive(Debug, Clone, Serialize)]
pub enum Stmt {
    VarDecl {
        ty: Type,
        name: String,
        init: Expr,
        pos: Pos,
    },
    Assign {
        target: LValue,
        value: Expr,
        pos: Pos,
    },
    If {
        id: BranchId,
        cond: Expr,
        then_body: Vec<Stmt>,
        else_body: Vec<Stmt>,
        pos: Pos,
    },
    While {
        id: BranchId,
        cond: Expr,
        body: Vec<Stmt>,
        pos: Pos,
    },
    Return {
        value: Option<Expr>,
        pos: Pos,
    },
    Throw {
        exception: String,
        pos: Pos,
    },
    Expr {
        expr: Expr,
        pos: Pos,
    },
}

#[derive(Debug, Clone, Serialize)]
pub enum LValue {
    /// A bare name: a local if one is in scope, otherwise a receiver field.
    Name(String),
    /// `this.name`
    Field(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Serialize)]
pub enum Expr {
    Int(i64, Pos),
    Bool(bool, Pos),
    Null(Pos),
    This(Pos),
    /// A bare name: local, parameter, or receiver field.
    Name(String, Pos),
    /// `this.name`
    Field(String, Pos),
    Call {
        receiver: Option<Box<Expr>>,
        method: String,
        args: Vec<Expr>,
        pos: Pos,
    },
    New {
        unit: String,
        args: Vec<Expr>,
        pos: Pos,
    },
    NewList(Pos),
    Unary(UnOp, Box<Expr>, Pos),
    Binary(BinOp, Box<Expr>, Box<Expr>, Pos),
}

impl Expr {
    pub fn pos(&self) -> Pos {
        match self {
            Expr::Int(_, p)
            | Expr::Bool(_, p)
            | Expr::Null(p)
            | Expr::This(p)
            | Expr::Name(_, p)
            | Expr::Field(_, p)
            | Expr::NewList(p)
            | Expr::Unary(_, _, p)
            | Expr::Binary(_, _, _, p) => *p,
            Expr::Call { pos, .. } | Expr::New { pos, .. } => *pos,
        }
    }
}

/// Exceptions every program knows about, with their parents.
pub const BUILTIN_EXCEPTIONS: &[(&str, Option<&str>)] = &[
    ("Exception", None),
    ("RuntimeException", Some("Exception")),
    ("NullPointerException", Some("RuntimeException")),
    ("ArithmeticException", Some("RuntimeException")),
    ("IllegalArgumentException", Some("RuntimeException")),
    ("IllegalStateException", Some("RuntimeException")),
];

pub const NULL_POINTER: &str = "NullPointerException";
pub const ARITHMETIC: &str = "ArithmeticException";

/// A parsed and checked subject program. Immutable after construction.
#[derive(Debug, Clone, Serialize)]
pub struct SubjectProgram {
    pub units: Vec<UnitDecl>,
    pub exceptions: Vec<ExceptionDecl>,
    pub branch_count: u32,
}

impl SubjectProgram {
    pub fn empty() -> Self {
        SubjectProgram {
            units: Vec::new(),
            exceptions: Vec::new(),
            branch_count: 0,
        }
    }

    pub fn unit_id(&self, name: &str) -> Option<UnitId> {
        self.units.iter().position(|u| u.name == name)
    }

    pub fn unit(&self, id: UnitId) -> &UnitDecl {
        &self.units[id]
    }

    pub fn method(&self, unit: UnitId, idx: usize) -> &MethodDecl {
        &self.units[unit].methods[idx]
    }

    pub fn find_method(&self, unit: &str, method: &str) -> Option<MethodRef> {
        let u = self.unit_id(unit)?;
        let m = self.units[u].method_index(method)?;
        Some(MethodRef::Method(u, m))
    }

    /// Every exception name known to the program, builtins included.
    pub fn exception_names(&self) -> impl Iterator<Item = &str> {
        BUILTIN_EXCEPTIONS
            .iter()
            .map(|(n, _)| *n)
            .chain(self.exceptions.iter().map(|e| e.name.as_str()))
    }

    pub fn is_exception(&self, name: &str) -> bool {
        self.exception_names().any(|n| n == name)
    }

    fn exception_parent(&self, name: &str) -> Option<&str> {
        if let Some((_, parent)) = BUILTIN_EXCEPTIONS.iter().find(|(n, _)| *n == name) {
            return *parent;
        }
        self.exceptions
            .iter()
            .find(|e| e.name == name)
            .and_then(|e| e.parent.as_deref())
    }

    /// `thrown` is `expected` or a declared subtype of it.
    pub fn exception_is_a(&self, thrown: &str, expected: &str) -> bool {
        let mut cur = Some(thrown);
        let mut hops = 0;
        while let Some(name) = cur {
            if name == expected {
                return true;
            }
            hops += 1;
            if hops > 64 {
                return false;
            }
            cur = self.exception_parent(name);
        }
        false
    }

    pub fn params_of(&self, m: MethodRef) -> Vec<Type> {
        match m {
            MethodRef::Ctor(u) => self.units[u].ctor_params().iter().map(|p| p.ty.clone()).collect(),
            MethodRef::Method(u, i) => self.units[u].methods[i]
                .params
                .iter()
                .map(|p| p.ty.clone())
                .collect(),
            MethodRef::List(op) => vec![Type::Void; op.arity()],
        }
    }

    pub fn return_type_of(&self, m: MethodRef) -> Type {
        match m {
            MethodRef::Ctor(u) => Type::Unit(self.units[u].name.clone()),
            MethodRef::Method(u, i) => self.units[u].methods[i].ret.clone(),
            MethodRef::List(op) => op.return_type(),
        }
    }

    /// `Unit.method` style name used in traces and reports.
    pub fn method_name(&self, m: MethodRef) -> String {
        match m {
            MethodRef::Ctor(u) => format!("{}.<init>", self.units[u].name),
            MethodRef::Method(u, i) => {
                format!("{}.{}", self.units[u].name, self.units[u].methods[i].name)
            }
            MethodRef::List(op) => format!("list.{}", op.name()),
        }
    }

    pub fn all_methods(&self) -> Vec<MethodRef> {
        let mut out = Vec::new();
        for (u, unit) in self.units.iter().enumerate() {
            for i in 0..unit.methods.len() {
                out.push(MethodRef::Method(u, i));
            }
        }
        out
    }

    /// Units carrying at least one documented method: the units under test.
    /// Falls back to every unit when nothing is documented.
    pub fn target_units(&self) -> Vec<UnitId> {
        let documented: Vec<UnitId> = self
            .units
            .iter()
            .enumerate()
            .filter(|(_, u)| u.methods.iter().any(|m| m.doc.is_some()))
            .map(|(i, _)| i)
            .collect();
        if documented.is_empty() {
            (0..self.units.len()).collect()
        } else {
            documented
        }
    }

    /// Branch ids declared inside the given unit.
    pub fn branches_of_unit(&self, unit: UnitId) -> Vec<BranchId> {
        let mut out = Vec::new();
        let u = &self.units[unit];
        for m in u.ctor.iter().chain(u.methods.iter()) {
            collect_branches(&m.body, &mut out);
        }
        out
    }
}

fn collect_branches(body: &[Stmt], out: &mut Vec<BranchId>) {
    for s in body {
        match s {
            Stmt::If {
                id,
                then_body,
                else_body,
                ..
            } => {
                out.push(*id);
                collect_branches(then_body, out);
                collect_branches(else_body, out);
            }
            Stmt::While { id, body, .. } => {
                out.push(*id);
                collect_branches(body, out);
            }
            _ => {}
        }
    }
}
