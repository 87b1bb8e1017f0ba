//! Test cases: straight-line call sequences over the subject program.

use serde::Serialize;

use crate::lang::{MethodRef, SubjectProgram, Type, UnitId};

/// A value passed to a constructor or method.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Arg {
    /// The value produced by an earlier statement.
    Var(usize),
    Int(i64),
    Bool(bool),
    Null,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Statement {
    /// `U u0 = new U(args);`
    Construct { unit: UnitId, args: Vec<Arg> },
    /// `list l0 = new list();`
    NewList,
    /// `T t0 = recv.m(args);` (no variable for void methods)
    Call {
        method: MethodRef,
        receiver: usize,
        args: Vec<Arg>,
    },
    /// `int i0 = 5;`
    Int(i64),
    /// `boolean b0 = true;`
    Bool(bool),
}

impl Statement {
    pub fn uses(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let args = match self {
            Statement::Construct { args, .. } => args,
            Statement::Call { receiver, args, .. } => {
                out.push(*receiver);
                args
            }
            _ => return out,
        };
        for a in args {
            if let Arg::Var(v) = a {
                out.push(*v);
            }
        }
        out
    }

    pub(crate) fn remap(&mut self, f: impl Fn(usize) -> usize) {
        let args = match self {
            Statement::Construct { args, .. } => args,
            Statement::Call { receiver, args, .. } => {
                *receiver = f(*receiver);
                args
            }
            _ => return,
        };
        for a in args {
            if let Arg::Var(v) = a {
                *v = f(*v);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize)]
pub struct TestCase {
    pub statements: Vec<Statement>,
    /// Contract this test was selected for; set only when emitting.
    pub focal: Option<String>,
}

impl TestCase {
    pub fn new(statements: Vec<Statement>) -> Self {
        TestCase {
            statements,
            focal: None,
        }
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    /// Type of the variable defined by statement `i`, `None` for void calls.
    pub fn var_type(&self, program: &SubjectProgram, i: usize) -> Option<Type> {
        match &self.statements[i] {
            Statement::Construct { unit, .. } => Some(Type::Unit(program.units[*unit].name.clone())),
            Statement::NewList => Some(Type::List),
            Statement::Int(_) => Some(Type::Int),
            Statement::Bool(_) => Some(Type::Bool),
            Statement::Call { method, .. } => match program.return_type_of(*method) {
                Type::Void => None,
                t => Some(t),
            },
        }
    }

    /// Checks that every variable is defined before use with a compatible type
    /// and that call arities match.
    pub fn validate(&self, program: &SubjectProgram) -> Result<(), String> {
        for (i, st) in self.statements.iter().enumerate() {
            for v in st.uses() {
                if v >= i {
                    return Err(format!("statement {i} uses variable {v} before definition"));
                }
                if self.var_type(program, v).is_none() {
                    return Err(format!("statement {i} uses the result of void statement {v}"));
                }
            }
            let (params, args) = match st {
                Statement::Construct { unit, args } => {
                    if *unit >= program.units.len() {
                        return Err(format!("statement {i}: unknown unit"));
                    }
                    (program.params_of(MethodRef::Ctor(*unit)), args)
                }
                Statement::Call {
                    method,
                    receiver,
                    args,
                } => {
                    let recv = self.var_type(program, *receiver);
                    let ok = match (method, &recv) {
                        (MethodRef::Method(u, m), Some(Type::Unit(n))) => {
                            program.unit_id(n) == Some(*u) && *m < program.units[*u].methods.len()
                        }
                        (MethodRef::List(_), Some(Type::List)) => true,
                        _ => false,
                    };
                    if !ok {
                        return Err(format!("statement {i}: receiver type does not declare the method"));
                    }
                    (program.params_of(*method), args)
                }
                _ => continue,
            };
            if params.len() != args.len() {
                return Err(format!("statement {i}: expected {} argument(s)", params.len()));
            }
            for (p, a) in params.iter().zip(args) {
                if !self.arg_fits(program, p, a) {
                    return Err(format!("statement {i}: argument {a:?} does not fit {p}"));
                }
            }
        }
        Ok(())
    }

    /// `Type::Void` parameters (list element slots) accept anything.
    pub fn arg_fits(&self, program: &SubjectProgram, param: &Type, arg: &Arg) -> bool {
        match (param, arg) {
            (Type::Void, _) => true,
            (Type::Int, Arg::Int(_)) | (Type::Bool, Arg::Bool(_)) => true,
            (p, Arg::Null) => p.is_reference(),
            (p, Arg::Var(v)) => self.var_type(program, *v).as_ref() == Some(p),
            _ => false,
        }
    }

    /// Drops statement `i` and, transitively, every statement depending on it.
    pub fn without(&self, i: usize) -> TestCase {
        let n = self.statements.len();
        let mut dropped = vec![false; n];
        dropped[i] = true;
        for j in i + 1..n {
            if self.statements[j].uses().iter().any(|&v| dropped[v]) {
                dropped[j] = true;
            }
        }
        self.keep(&dropped)
    }

    /// Inserts `st` at position `i`, shifting later variable references.
    pub fn insert(&mut self, i: usize, st: Statement) {
        for later in &mut self.statements[i..] {
            later.remap(|v| if v >= i { v + 1 } else { v });
        }
        self.statements.insert(i, st);
    }

    /// Keeps the first `len` statements.
    pub fn truncated(&self, len: usize) -> TestCase {
        TestCase {
            statements: self.statements[..len.min(self.statements.len())].to_vec(),
            focal: self.focal.clone(),
        }
    }

    pub(crate) fn keep(&self, dropped: &[bool]) -> TestCase {
        let mut new_index = vec![usize::MAX; dropped.len()];
        let mut statements = Vec::new();
        for (j, st) in self.statements.iter().enumerate() {
            if dropped[j] {
                continue;
            }
            new_index[j] = statements.len();
            let mut st = st.clone();
            st.remap(|v| new_index[v]);
            statements.push(st);
        }
        TestCase {
            statements,
            focal: self.focal.clone(),
        }
    }

    /// Variable names in the `gp0`, `d0`, `b0` style; `None` for void calls.
    pub fn var_names(&self, program: &SubjectProgram) -> Vec<Option<String>> {
        let mut counters: Vec<(String, usize)> = Vec::new();
        (0..self.statements.len())
            .map(|i| {
                let prefix = match self.var_type(program, i)? {
                    Type::Int => "i".to_string(),
                    Type::Bool => "b".to_string(),
                    Type::List => "l".to_string(),
                    Type::Void => "v".to_string(),
                    Type::Unit(name) => unit_prefix(&name),
                };
                let n = match counters.iter_mut().find(|(p, _)| *p == prefix) {
                    Some((_, c)) => {
                        *c += 1;
                        *c - 1
                    }
                    None => {
                        counters.push((prefix.clone(), 1));
                        0
                    }
                };
                Some(format!("{prefix}{n}"))
            })
            .collect()
    }

    /// One source line per statement, in the subject test dialect.
    pub fn render(&self, program: &SubjectProgram) -> Vec<String> {
        let names = self.var_names(program);
        let arg = |a: &Arg| match a {
            Arg::Var(v) => names[*v].clone().unwrap_or_else(|| "?".into()),
            Arg::Int(n) => n.to_string(),
            Arg::Bool(b) => b.to_string(),
            Arg::Null => "null".into(),
        };
        let args = |args: &[Arg]| args.iter().map(arg).collect::<Vec<_>>().join(", ");
        self.statements
            .iter()
            .enumerate()
            .map(|(i, st)| {
                let lhs = match (self.var_type(program, i), &names[i]) {
                    (Some(t), Some(n)) => format!("{} {} = ", type_keyword(&t), n),
                    _ => String::new(),
                };
                let rhs = match st {
                    Statement::Construct { unit, args: a } => {
                        format!("new {}({})", program.units[*unit].name, args(a))
                    }
                    Statement::NewList => "new list()".into(),
                    Statement::Int(n) => n.to_string(),
                    Statement::Bool(b) => b.to_string(),
                    Statement::Call {
                        method,
                        receiver,
                        args: a,
                    } => {
                        let mname = match method {
                            MethodRef::Method(u, m) => program.units[*u].methods[*m].name.clone(),
                            MethodRef::List(op) => op.name().to_string(),
                            MethodRef::Ctor(u) => program.units[*u].name.clone(),
                        };
                        format!("{}.{}({})", arg(&Arg::Var(*receiver)), mname, args(a))
                    }
                };
                format!("{lhs}{rhs};")
            })
            .collect()
    }
}

pub fn type_keyword(t: &Type) -> String {
    match t {
        Type::Bool => "boolean".into(),
        other => other.to_string(),
    }
}

fn unit_prefix(name: &str) -> String {
    let caps: String = name
        .chars()
        .filter(|c| c.is_ascii_uppercase())
        .map(|c| c.to_ascii_lowercase())
        .collect();
    if caps.is_empty() {
        name.chars().take(1).collect::<String>().to_ascii_lowercase()
    } else {
        caps
    }
}
