//! Random construction of call sequences.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::lang::{Expr, ListOp, MethodRef, Stmt, SubjectProgram, Type};
use crate::testcase::{Arg, Statement, TestCase};

const MAX_CONSTRUCT_DEPTH: usize = 3;

/// Builds random tests and pieces of tests for one program.
#[derive(Debug, Clone)]
pub struct Generator<'p> {
    pub program: &'p SubjectProgram,
    /// Methods under test; favoured when choosing calls.
    pub targets: Vec<MethodRef>,
    callables: Vec<MethodRef>,
    constants: Vec<i64>,
    /// Calls inserted by a fresh random test: uniform in `1..=max_calls`.
    pub max_calls: usize,
    pub max_statements: usize,
    pub null_probability: f64,
}

impl<'p> Generator<'p> {
    pub fn new(program: &'p SubjectProgram, targets: Vec<MethodRef>, max_calls: usize) -> Self {
        let mut callables = program.all_methods();
        callables.extend([ListOp::Add, ListOp::Contains, ListOp::Size].map(MethodRef::List));
        let targets = if targets.is_empty() {
            program.all_methods()
        } else {
            targets
        };
        Generator {
            program,
            targets,
            callables,
            constants: int_constants(program),
            max_calls: max_calls.max(1),
            max_statements: 4 * max_calls.max(1),
            null_probability: 0.1,
        }
    }

    pub fn random_test(&self, rng: &mut impl Rng) -> TestCase {
        let mut t = TestCase::default();
        let calls = rng.gen_range(1..=self.max_calls);
        for _ in 0..calls {
            let m = self.pick_method(&t, rng);
            if let Some(m) = m {
                self.insert_call(&mut t, m, rng);
            }
        }
        t
    }

    /// Half the time a method under test, otherwise any callable whose
    /// receiver can be obtained.
    pub fn pick_method(&self, t: &TestCase, rng: &mut impl Rng) -> Option<MethodRef> {
        if self.targets.is_empty() || rng.gen_bool(0.5) {
            let has_list = (0..t.len()).any(|i| t.var_type(self.program, i) == Some(Type::List));
            let pool: Vec<MethodRef> = self
                .callables
                .iter()
                .copied()
                .filter(|m| has_list || !matches!(m, MethodRef::List(_)))
                .collect();
            pool.choose(rng).copied().or_else(|| self.targets.choose(rng).copied())
        } else {
            self.targets.choose(rng).copied()
        }
    }

    pub fn random_int(&self, rng: &mut impl Rng) -> i64 {
        let r: f64 = rng.gen();
        if r < 0.3 {
            *[-1, 0, 1].choose(rng).expect("nonempty")
        } else if r < 0.45 && !self.constants.is_empty() {
            *self.constants.choose(rng).expect("nonempty")
        } else {
            rng.gen_range(-100..=100)
        }
    }

    /// Appends a call to `method` (plus whatever constructions it needs).
    /// Returns false when the statement cap is reached.
    pub fn insert_call(&self, t: &mut TestCase, method: MethodRef, rng: &mut impl Rng) -> bool {
        if t.len() >= self.max_statements {
            return false;
        }
        let receiver = match method {
            MethodRef::Ctor(u) => {
                let args = self.args_for(t, &self.program.params_of(method), rng, 0);
                t.statements.push(Statement::Construct { unit: u, args });
                return true;
            }
            MethodRef::Method(u, _) => {
                let ty = Type::Unit(self.program.units[u].name.clone());
                match self.existing_var(t, &ty, t.len(), 0.85, rng) {
                    Some(v) => v,
                    None => {
                        let args = self.args_for(t, &self.program.params_of(MethodRef::Ctor(u)), rng, 1);
                        t.statements.push(Statement::Construct { unit: u, args });
                        t.len() - 1
                    }
                }
            }
            MethodRef::List(_) => match self.existing_var(t, &Type::List, t.len(), 0.9, rng) {
                Some(v) => v,
                None => {
                    t.statements.push(Statement::NewList);
                    t.len() - 1
                }
            },
        };
        let args = self.args_for(t, &self.program.params_of(method), rng, 0);
        t.statements.push(Statement::Call {
            method,
            receiver,
            args,
        });
        true
    }

    fn args_for(&self, t: &mut TestCase, params: &[Type], rng: &mut impl Rng, depth: usize) -> Vec<Arg> {
        params.iter().map(|p| self.value_for(t, p, rng, depth)).collect()
    }

    /// An argument of type `ty`, appending constructions when needed.
    pub fn value_for(&self, t: &mut TestCase, ty: &Type, rng: &mut impl Rng, depth: usize) -> Arg {
        match ty {
            Type::Int => {
                if rng.gen_bool(0.1) {
                    if let Some(v) = self.existing_var(t, ty, t.len(), 1.0, rng) {
                        return Arg::Var(v);
                    }
                }
                Arg::Int(self.random_int(rng))
            }
            Type::Bool => Arg::Bool(rng.gen()),
            Type::Void => {
                // list element: any existing value, else a number
                let vars: Vec<usize> = (0..t.len())
                    .filter(|&i| t.var_type(self.program, i).is_some())
                    .collect();
                match vars.choose(rng) {
                    Some(v) if rng.gen_bool(0.7) => Arg::Var(*v),
                    _ => Arg::Int(self.random_int(rng)),
                }
            }
            Type::List => {
                if rng.gen_bool(self.null_probability) {
                    return Arg::Null;
                }
                if let Some(v) = self.existing_var(t, ty, t.len(), 0.7, rng) {
                    return Arg::Var(v);
                }
                t.statements.push(Statement::NewList);
                Arg::Var(t.len() - 1)
            }
            Type::Unit(name) => {
                if rng.gen_bool(self.null_probability) {
                    return Arg::Null;
                }
                if let Some(v) = self.existing_var(t, ty, t.len(), 0.75, rng) {
                    return Arg::Var(v);
                }
                let Some(u) = self.program.unit_id(name) else {
                    return Arg::Null;
                };
                if depth >= MAX_CONSTRUCT_DEPTH || t.len() >= self.max_statements {
                    return Arg::Null;
                }
                let args = self.args_for(t, &self.program.params_of(MethodRef::Ctor(u)), rng, depth + 1);
                t.statements.push(Statement::Construct { unit: u, args });
                Arg::Var(t.len() - 1)
            }
        }
    }

    /// With probability `p`, a random variable of type `ty` defined before `before`.
    pub fn existing_var(&self, t: &TestCase, ty: &Type, before: usize, p: f64, rng: &mut impl Rng) -> Option<usize> {
        let vars = self.vars_of(t, ty, before);
        if vars.is_empty() || !rng.gen_bool(p) {
            return None;
        }
        vars.choose(rng).copied()
    }

    pub fn vars_of(&self, t: &TestCase, ty: &Type, before: usize) -> Vec<usize> {
        (0..before.min(t.len()))
            .filter(|&i| t.var_type(self.program, i).as_ref() == Some(ty))
            .collect()
    }

    /// An argument for position `before` using only what is already there.
    pub fn value_in_place(&self, t: &TestCase, ty: &Type, before: usize, rng: &mut impl Rng) -> Arg {
        match ty {
            Type::Int => match self.vars_of(t, ty, before).choose(rng) {
                Some(v) if rng.gen_bool(0.1) => Arg::Var(*v),
                _ => Arg::Int(self.random_int(rng)),
            },
            Type::Bool => Arg::Bool(rng.gen()),
            Type::Void => {
                let vars: Vec<usize> = (0..before)
                    .filter(|&i| t.var_type(self.program, i).is_some())
                    .collect();
                match vars.choose(rng) {
                    Some(v) if rng.gen_bool(0.7) => Arg::Var(*v),
                    _ => Arg::Int(self.random_int(rng)),
                }
            }
            _ => {
                let vars = self.vars_of(t, ty, before);
                match vars.choose(rng) {
                    Some(v) if !rng.gen_bool(self.null_probability) => Arg::Var(*v),
                    _ => Arg::Null,
                }
            }
        }
    }
}

/// Integer literals appearing in the program, deduplicated and sorted.
fn int_constants(program: &SubjectProgram) -> Vec<i64> {
    fn expr(e: &Expr, out: &mut Vec<i64>) {
        match e {
            Expr::Int(n, _) => out.push(*n),
            Expr::Call { receiver, args, .. } => {
                if let Some(r) = receiver {
                    expr(r, out);
                }
                args.iter().for_each(|a| expr(a, out));
            }
            Expr::New { args, .. } => args.iter().for_each(|a| expr(a, out)),
            Expr::Unary(_, x, _) => expr(x, out),
            Expr::Binary(_, l, r, _) => {
                expr(l, out);
                expr(r, out);
            }
            _ => {}
        }
    }
    fn block(b: &[Stmt], out: &mut Vec<i64>) {
        for s in b {
            match s {
                Stmt::VarDecl { init, .. } => expr(init, out),
                Stmt::Assign { value, .. } => expr(value, out),
                Stmt::If {
                    cond,
                    then_body,
                    else_body,
                    ..
                } => {
                    expr(cond, out);
                    block(then_body, out);
                    block(else_body, out);
                }
                Stmt::While { cond, body, .. } => {
                    expr(cond, out);
                    block(body, out);
                }
                Stmt::Return { value: Some(e), .. } | Stmt::Expr { expr: e, .. } => expr(e, out),
                _ => {}
            }
        }
    }
    let mut out = Vec::new();
    for u in &program.units {
        for m in u.ctor.iter().chain(&u.methods) {
            block(&m.body, &mut out);
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}
