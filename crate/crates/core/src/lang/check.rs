//! Name resolution and type checking for parsed programs.

use std::collections::{HashMap, HashSet};

use super::ast::*;
use super::LangError;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Ty {
    Int,
    Bool,
    Void,
    List,
    Unit(String),
    Null,
}

impl Ty {
    fn from(t: &Type) -> Ty {
        match t {
            Type::Int => Ty::Int,
            Type::Bool => Ty::Bool,
            Type::Void => Ty::Void,
            Type::List => Ty::List,
            Type::Unit(n) => Ty::Unit(n.clone()),
        }
    }

    fn is_ref(&self) -> bool {
        matches!(self, Ty::List | Ty::Unit(_) | Ty::Null)
    }

    fn name(&self) -> String {
        match self {
            Ty::Int => "int".into(),
            Ty::Bool => "bool".into(),
            Ty::Void => "void".into(),
            Ty::List => "list".into(),
            Ty::Unit(n) => n.clone(),
            Ty::Null => "null".into(),
        }
    }
}

/// `value` may be stored where `target` is expected.
fn assignable(target: &Ty, value: &Ty) -> bool {
    match (target, value) {
        (a, b) if a == b => true,
        (Ty::List | Ty::Unit(_), Ty::Null) => true,
        _ => false,
    }
}

pub(super) fn check_program(program: &SubjectProgram) -> Result<(), LangError> {
    let mut names: HashSet<&str> = HashSet::new();
    for (builtin, _) in BUILTIN_EXCEPTIONS {
        names.insert(builtin);
    }
    for e in &program.exceptions {
        if !names.insert(&e.name) {
            return Err(LangError::DuplicateName {
                pos: e.pos,
                name: e.name.clone(),
            });
        }
    }
    for u in &program.units {
        if !names.insert(&u.name) || matches!(u.name.as_str(), "int" | "bool" | "list" | "void") {
            return Err(LangError::DuplicateName {
                pos: u.pos,
                name: u.name.clone(),
            });
        }
    }
    for e in &program.exceptions {
        if let Some(parent) = &e.parent {
            if !program.is_exception(parent) {
                return Err(LangError::UnresolvedType {
                    pos: e.pos,
                    name: parent.clone(),
                });
            }
        }
    }
    for e in &program.exceptions {
        // parent chains must terminate
        let mut seen = HashSet::new();
        let mut cur = Some(e.name.as_str());
        while let Some(n) = cur {
            if !seen.insert(n) {
                return Err(LangError::Type {
                    pos: e.pos,
                    message: format!("exception hierarchy cycle through '{}'", e.name),
                });
            }
            cur = program
                .exceptions
                .iter()
                .find(|x| x.name == n)
                .and_then(|x| x.parent.as_deref());
        }
    }

    for (uid, unit) in program.units.iter().enumerate() {
        let mut members: HashSet<&str> = HashSet::new();
        for f in &unit.fields {
            resolve_type(program, &f.ty, f.pos)?;
            if f.ty == Type::Void {
                return Err(LangError::Type {
                    pos: f.pos,
                    message: format!("field '{}' cannot be void", f.name),
                });
            }
            if !members.insert(&f.name) {
                return Err(LangError::DuplicateName {
                    pos: f.pos,
                    name: format!("{}.{}", unit.name, f.name),
                });
            }
        }
        for m in &unit.methods {
            if !members.insert(&m.name) {
                return Err(LangError::DuplicateName {
                    pos: m.pos,
                    name: format!("{}.{}", unit.name, m.name),
                });
            }
        }
        for m in unit.ctor.iter().chain(unit.methods.iter()) {
            MethodChecker::new(program, uid, m)?.check()?;
        }
    }
    Ok(())
}

fn resolve_type(program: &SubjectProgram, t: &Type, pos: Pos) -> Result<(), LangError> {
    if let Type::Unit(n) = t {
        if program.unit_id(n).is_none() {
            return Err(LangError::UnresolvedType { pos, name: n.clone() });
        }
    }
    Ok(())
}

struct MethodChecker<'a> {
    program: &'a SubjectProgram,
    unit: UnitId,
    method: &'a MethodDecl,
    locals: HashMap<String, Ty>,
}

impl<'a> MethodChecker<'a> {
    fn new(program: &'a SubjectProgram, unit: UnitId, method: &'a MethodDecl) -> Result<Self, LangError> {
        resolve_type(program, &method.ret, method.pos)?;
        let mut locals = HashMap::new();
        for p in &method.params {
            resolve_type(program, &p.ty, method.pos)?;
            if p.ty == Type::Void {
                return Err(LangError::Type {
                    pos: method.pos,
                    message: format!("parameter '{}' cannot be void", p.name),
                });
            }
            if locals.insert(p.name.clone(), Ty::from(&p.ty)).is_some() {
                return Err(LangError::DuplicateName {
                    pos: method.pos,
                    name: format!("{}({})", method.name, p.name),
                });
            }
        }
        for t in &method.throws {
            if !program.is_exception(t) {
                return Err(LangError::UnresolvedType {
                    pos: method.pos,
                    name: t.clone(),
                });
            }
        }
        Ok(MethodChecker {
            program,
            unit,
            method,
            locals,
        })
    }

    fn check(mut self) -> Result<(), LangError> {
        let body = &self.method.body;
        self.block(body)?;
        if self.method.ret != Type::Void && !block_terminates(body) {
            return Err(LangError::Type {
                pos: self.method.pos,
                message: format!("method '{}' may finish without returning a value", self.method.name),
            });
        }
        Ok(())
    }

    fn type_err<T>(&self, pos: Pos, message: impl Into<String>) -> Result<T, LangError> {
        Err(LangError::Type {
            pos,
            message: message.into(),
        })
    }

    fn block(&mut self, body: &[Stmt]) -> Result<(), LangError> {
        let outer = self.locals.clone();
        for s in body {
            self.stmt(s)?;
        }
        self.locals = outer;
        Ok(())
    }

    fn field_ty(&self, name: &str) -> Option<Ty> {
        let unit = &self.program.units[self.unit];
        unit.fields.iter().find(|f| f.name == name).map(|f| Ty::from(&f.ty))
    }

    fn stmt(&mut self, s: &Stmt) -> Result<(), LangError> {
        match s {
            Stmt::VarDecl { ty, name, init, pos } => {
                resolve_type(self.program, ty, *pos)?;
                if *ty == Type::Void {
                    return self.type_err(*pos, "local cannot be void");
                }
                let vt = self.expr(init)?;
                let t = Ty::from(ty);
                if !assignable(&t, &vt) {
                    return self.type_err(*pos, format!("cannot assign {} to {} '{}'", vt.name(), t.name(), name));
                }
                if self.locals.insert(name.clone(), t).is_some() {
                    return Err(LangError::DuplicateName {
                        pos: *pos,
                        name: name.clone(),
                    });
                }
            }
            Stmt::Assign { target, value, pos } => {
                let t = match target {
                    LValue::Name(n) => self.locals.get(n).cloned().or_else(|| self.field_ty(n)),
                    LValue::Field(n) => self.field_ty(n),
                };
                let Some(t) = t else {
                    return self.type_err(*pos, "assignment to unknown variable");
                };
                let vt = self.expr(value)?;
                if !assignable(&t, &vt) {
                    return self.type_err(*pos, format!("cannot assign {} to {}", vt.name(), t.name()));
                }
            }
            Stmt::If {
                cond,
                then_body,
                else_body,
                pos,
                ..
            } => {
                if self.expr(cond)? != Ty::Bool {
                    return self.type_err(*pos, "condition must be bool");
                }
                self.block(then_body)?;
                self.block(else_body)?;
            }
            Stmt::While { cond, body, pos, .. } => {
                if self.expr(cond)? != Ty::Bool {
                    return self.type_err(*pos, "condition must be bool");
                }
                self.block(body)?;
            }
            Stmt::Return { value, pos } => {
                let expected = Ty::from(&self.method.ret);
                match value {
                    None if expected == Ty::Void => {}
                    None => return self.type_err(*pos, "missing return value"),
                    Some(_) if expected == Ty::Void => {
                        return self.type_err(*pos, "void method returns a value")
                    }
                    Some(e) => {
                        let t = self.expr(e)?;
                        if !assignable(&expected, &t) {
                            return self.type_err(
                                *pos,
                                format!("returns {} but method declares {}", t.name(), expected.name()),
                            );
                        }
                    }
                }
            }
            Stmt::Throw { exception, pos } => {
                if !self.program.is_exception(exception) {
                    return Err(LangError::UnresolvedType {
                        pos: *pos,
                        name: exception.clone(),
                    });
                }
            }
            Stmt::Expr { expr, pos } => {
                if !matches!(expr, Expr::Call { .. } | Expr::New { .. }) {
                    return self.type_err(*pos, "expression statement must be a call");
                }
                self.expr(expr)?;
            }
        }
        Ok(())
    }

    fn expr(&mut self, e: &Expr) -> Result<Ty, LangError> {
        Ok(match e {
            Expr::Int(..) => Ty::Int,
            Expr::Bool(..) => Ty::Bool,
            Expr::Null(_) => Ty::Null,
            Expr::This(_) => Ty::Unit(self.program.units[self.unit].name.clone()),
            Expr::Name(n, pos) => match self.locals.get(n).cloned().or_else(|| self.field_ty(n)) {
                Some(t) => t,
                None => return self.type_err(*pos, format!("unknown name '{n}'")),
            },
            Expr::Field(n, pos) => match self.field_ty(n) {
                Some(t) => t,
                None => return self.type_err(*pos, format!("unknown field '{n}'")),
            },
            Expr::NewList(_) => Ty::List,
            Expr::New { unit, args, pos } => {
                let Some(uid) = self.program.unit_id(unit) else {
                    return Err(LangError::UnresolvedType {
                        pos: *pos,
                        name: unit.clone(),
                    });
                };
                let params: Vec<Ty> = self.program.units[uid].ctor_params().iter().map(|p| Ty::from(&p.ty)).collect();
                self.check_args(&params, args, *pos, unit)?;
                Ty::Unit(unit.clone())
            }
            Expr::Call {
                receiver,
                method,
                args,
                pos,
            } => {
                let recv_ty = match receiver {
                    Some(r) => self.expr(r)?,
                    None => Ty::Unit(self.program.units[self.unit].name.clone()),
                };
                match recv_ty {
                    Ty::List => {
                        let Some(op) = ListOp::from_name(method) else {
                            return self.type_err(*pos, format!("list has no method '{method}'"));
                        };
                        if args.len() != op.arity() {
                            return self.type_err(*pos, format!("list.{method} expects {} argument(s)", op.arity()));
                        }
                        for a in args {
                            if self.expr(a)? == Ty::Void {
                                return self.type_err(*pos, "void argument");
                            }
                        }
                        Ty::from(&op.return_type())
                    }
                    Ty::Unit(u) => {
                        let uid = self.program.unit_id(&u).expect("resolved");
                        let Some(mi) = self.program.units[uid].method_index(method) else {
                            return self.type_err(*pos, format!("'{u}' has no method '{method}'"));
                        };
                        let m = &self.program.units[uid].methods[mi];
                        let params: Vec<Ty> = m.params.iter().map(|p| Ty::from(&p.ty)).collect();
                        self.check_args(&params, args, *pos, method)?;
                        Ty::from(&m.ret)
                    }
                    other => return self.type_err(*pos, format!("cannot call '{method}' on {}", other.name())),
                }
            }
            Expr::Unary(op, inner, pos) => {
                let t = self.expr(inner)?;
                match (op, &t) {
                    (UnOp::Neg, Ty::Int) => Ty::Int,
                    (UnOp::Not, Ty::Bool) => Ty::Bool,
                    _ => return self.type_err(*pos, format!("bad operand {} for unary operator", t.name())),
                }
            }
            Expr::Binary(op, l, r, pos) => {
                let lt = self.expr(l)?;
                let rt = self.expr(r)?;
                match op {
                    BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Rem => {
                        if lt != Ty::Int || rt != Ty::Int {
                            return self.type_err(*pos, format!("'{}' needs int operands", op.symbol()));
                        }
                        Ty::Int
                    }
                    BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                        if lt != Ty::Int || rt != Ty::Int {
                            return self.type_err(*pos, format!("'{}' needs int operands", op.symbol()));
                        }
                        Ty::Bool
                    }
                    BinOp::And | BinOp::Or => {
                        if lt != Ty::Bool || rt != Ty::Bool {
                            return self.type_err(*pos, format!("'{}' needs bool operands", op.symbol()));
                        }
                        Ty::Bool
                    }
                    BinOp::Eq | BinOp::Ne => {
                        let ok = lt == rt || (lt.is_ref() && rt.is_ref() && (lt == Ty::Null || rt == Ty::Null));
                        if !ok || lt == Ty::Void {
                            return self.type_err(
                                *pos,
                                format!("cannot compare {} with {}", lt.name(), rt.name()),
                            );
                        }
                        Ty::Bool
                    }
                }
            }
        })
    }

    fn check_args(&mut self, params: &[Ty], args: &[Expr], pos: Pos, what: &str) -> Result<(), LangError> {
        if params.len() != args.len() {
            return self.type_err(
                pos,
                format!("'{what}' expects {} argument(s), got {}", params.len(), args.len()),
            );
        }
        for (p, a) in params.iter().zip(args) {
            let t = self.expr(a)?;
            if !assignable(p, &t) {
                return self.type_err(a.pos(), format!("expected {}, got {}", p.name(), t.name()));
            }
        }
        Ok(())
    }
}

fn block_terminates(body: &[Stmt]) -> bool {
    body.iter().any(stmt_terminates)
}

fn stmt_terminates(s: &Stmt) -> bool {
    match s {
        Stmt::Return { .. } | Stmt::Throw { .. } => true,
        Stmt::If {
            then_body, else_body, ..
        } => block_terminates(then_body) && block_terminates(else_body),
        _ => false,
    }
}
