//! Instrumented tree-walking interpreter.
//!
//! Executes test cases statement by statement against one shared heap and
//! records every call (with optional pre-call heap snapshots) and every
//! branch evaluation together with its branch distances.

use std::sync::Arc;

use serde::Serialize;

use super::ast::*;
use crate::testcase::{Arg, Statement, TestCase};

pub const DEFAULT_STEP_BUDGET: u64 = 100_000;
/// Budget for subject methods invoked while evaluating a contract term.
pub const GUARD_STEP_BUDGET: u64 = 10_000;
const MAX_CALL_DEPTH: u32 = 128;
/// Constant added to branch distances of relational predicates that are off by zero.
const K: f64 = 1.0;

pub type ObjId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Null,
    Ref(ObjId),
    Void,
}

impl Value {
    pub fn as_int(self) -> Option<i64> {
        match self {
            Value::Int(n) => Some(n),
            _ => None,
        }
    }

    pub fn as_bool(self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(b),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum HeapObj {
    Object { unit: UnitId, fields: Vec<Value> },
    List(Vec<Value>),
}

/// All objects allocated by one test execution. Object ids are indices and
/// stay valid in clones, so a clone is a faithful deep snapshot.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Heap {
    pub objects: Vec<HeapObj>,
}

impl Heap {
    pub fn alloc(&mut self, obj: HeapObj) -> ObjId {
        self.objects.push(obj);
        self.objects.len() - 1
    }

    pub fn get(&self, id: ObjId) -> &HeapObj {
        &self.objects[id]
    }

    pub fn field(&self, obj: ObjId, idx: usize) -> Option<Value> {
        match self.objects.get(obj)? {
            HeapObj::Object { fields, .. } => fields.get(idx).copied(),
            HeapObj::List(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Returned(Value),
    Threw(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct CallRecord {
    pub method: MethodRef,
    /// 0 for calls made directly by the test.
    pub depth: u32,
    /// Index of the test statement during which the call happened.
    pub statement: usize,
    pub receiver: Value,
    pub args: Vec<Value>,
    pub outcome: Outcome,
    /// Heap as it was on entry; only kept for watched top-level calls.
    #[serde(skip)]
    pub pre_state: Option<Arc<Heap>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchRecord {
    pub id: BranchId,
    pub taken: bool,
    /// Distance to the condition evaluating to true (0 when it did).
    pub dist_true: f64,
    /// Distance to the condition evaluating to false (0 when it did).
    pub dist_false: f64,
    pub statement: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum StatementStatus {
    Ok(Value),
    Threw(String),
    /// Depends on a statement that produced no value.
    Skipped,
    /// Not reached because execution halted.
    NotRun,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum HaltReason {
    Normal,
    StepBudget,
    Fault(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct ExecutionTrace {
    pub calls: Vec<CallRecord>,
    pub branches: Vec<BranchRecord>,
    pub statements: Vec<StatementStatus>,
    pub halt: HaltReason,
    pub steps: u64,
}

impl ExecutionTrace {
    pub fn top_level_calls(&self, method: MethodRef) -> impl Iterator<Item = &CallRecord> {
        self.calls
            .iter()
            .filter(move |c| c.depth == 0 && c.method == method)
    }
}

/// Which top-level calls get a pre-call snapshot.
#[derive(Debug, Clone, Default)]
pub enum Watch {
    #[default]
    None,
    All,
    Methods(Vec<MethodRef>),
}

impl Watch {
    fn covers(&self, m: MethodRef) -> bool {
        match self {
            Watch::None => false,
            Watch::All => true,
            Watch::Methods(ms) => ms.contains(&m),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExecOptions {
    pub step_budget: u64,
    pub watch: Watch,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions {
            step_budget: DEFAULT_STEP_BUDGET,
            watch: Watch::None,
        }
    }
}

enum Unwind {
    Throw(String),
    Halt(HaltReason),
}

enum Flow {
    Next,
    Return(Value),
}

type Exec<T> = Result<T, Unwind>;

struct Frame {
    this: ObjId,
    unit: UnitId,
    locals: Vec<(String, Value)>,
}

impl Frame {
    fn local(&self, name: &str) -> Option<Value> {
        self.locals.iter().rev().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    fn set_local(&mut self, name: &str, v: Value) -> bool {
        match self.locals.iter_mut().rev().find(|(n, _)| n == name) {
            Some(slot) => {
                slot.1 = v;
                true
            }
            None => false,
        }
    }
}

struct Machine<'p> {
    program: &'p SubjectProgram,
    heap: Heap,
    steps: u64,
    budget: u64,
    depth: u32,
    statement: usize,
    recording: bool,
    watch: Watch,
    calls: Vec<(CallRecord, bool)>,
    branches: Vec<BranchRecord>,
}

/// Runs `test` from an empty heap. Deterministic for identical inputs.
pub fn execute_test(program: &SubjectProgram, test: &TestCase, opts: &ExecOptions) -> ExecutionTrace {
    let mut m = Machine {
        program,
        heap: Heap::default(),
        steps: 0,
        budget: opts.step_budget,
        depth: 0,
        statement: 0,
        recording: true,
        watch: opts.watch.clone(),
        calls: Vec::new(),
        branches: Vec::new(),
    };
    let mut statuses: Vec<StatementStatus> = Vec::with_capacity(test.statements.len());
    let mut halt = HaltReason::Normal;

    for (i, st) in test.statements.iter().enumerate() {
        m.statement = i;
        let resolved: Option<Vec<Value>> = match st {
            Statement::Construct { args, .. } | Statement::Call { args, .. } => {
                args.iter().map(|a| resolve_arg(a, &statuses)).collect()
            }
            _ => Some(Vec::new()),
        };
        let Some(args) = resolved else {
            statuses.push(StatementStatus::Skipped);
            continue;
        };
        let result = match st {
            Statement::Int(n) => Ok(Value::Int(*n)),
            Statement::Bool(b) => Ok(Value::Bool(*b)),
            Statement::NewList => m.tick().map(|_| Value::Ref(m.heap.alloc(HeapObj::List(Vec::new())))),
            Statement::Construct { unit, .. } => m.call(MethodRef::Ctor(*unit), Value::Null, args),
            Statement::Call { method, receiver, .. } => match statuses.get(*receiver) {
                Some(StatementStatus::Ok(recv)) => m.call(*method, *recv, args),
                _ => {
                    statuses.push(StatementStatus::Skipped);
                    continue;
                }
            },
        };
        match result {
            Ok(v) => statuses.push(StatementStatus::Ok(v)),
            Err(Unwind::Throw(e)) => statuses.push(StatementStatus::Threw(e)),
            Err(Unwind::Halt(h)) => {
                halt = h;
                break;
            }
        }
    }
    statuses.resize(test.statements.len(), StatementStatus::NotRun);

    ExecutionTrace {
        calls: m.calls.into_iter().filter(|(_, done)| *done).map(|(c, _)| c).collect(),
        branches: m.branches,
        statements: statuses,
        halt,
        steps: m.steps,
    }
}

fn resolve_arg(a: &Arg, statuses: &[StatementStatus]) -> Option<Value> {
    match a {
        Arg::Int(n) => Some(Value::Int(*n)),
        Arg::Bool(b) => Some(Value::Bool(*b)),
        Arg::Null => Some(Value::Null),
        Arg::Var(v) => match statuses.get(*v) {
            Some(StatementStatus::Ok(val)) if *val != Value::Void => Some(*val),
            _ => None,
        },
    }
}

/// Calls `method` on `heap` without recording anything. Used to evaluate
/// contract terms such as `drawer.exceeds(limit)` against a snapshot.
pub fn invoke(
    program: &SubjectProgram,
    heap: &mut Heap,
    method: MethodRef,
    receiver: Value,
    args: &[Value],
    budget: u64,
) -> Result<Outcome, HaltReason> {
    let mut m = Machine {
        program,
        heap: std::mem::take(heap),
        steps: 0,
        budget,
        depth: 1,
        statement: 0,
        recording: false,
        watch: Watch::None,
        calls: Vec::new(),
        branches: Vec::new(),
    };
    let r = m.call(method, receiver, args.to_vec());
    *heap = m.heap;
    match r {
        Ok(v) => Ok(Outcome::Returned(v)),
        Err(Unwind::Throw(e)) => Ok(Outcome::Threw(e)),
        Err(Unwind::Halt(h)) => Err(h),
    }
}

fn throw<T>(name: &str) -> Exec<T> {
    Err(Unwind::Throw(name.to_string()))
}

fn fault<T>(msg: impl Into<String>) -> Exec<T> {
    Err(Unwind::Halt(HaltReason::Fault(msg.into())))
}

impl<'p> Machine<'p> {
    fn tick(&mut self) -> Exec<()> {
        if self.steps >= self.budget {
            return Err(Unwind::Halt(HaltReason::StepBudget));
        }
        self.steps += 1;
        Ok(())
    }

    fn call(&mut self, method: MethodRef, receiver: Value, args: Vec<Value>) -> Exec<Value> {
        self.tick()?;
        if self.depth >= MAX_CALL_DEPTH {
            return fault("call depth limit exceeded");
        }
        let record = self.recording && (self.depth == 0 || !matches!(method, MethodRef::List(_)));
        let slot = if record {
            let pre_state = (self.depth == 0 && self.watch.covers(method)).then(|| Arc::new(self.heap.clone()));
            self.calls.push((
                CallRecord {
                    method,
                    depth: self.depth,
                    statement: self.statement,
                    receiver,
                    args: args.clone(),
                    outcome: Outcome::Returned(Value::Void),
                    pre_state,
                },
                false,
            ));
            Some(self.calls.len() - 1)
        } else {
            None
        };
        self.depth += 1;
        let result = self.dispatch(method, receiver, args);
        self.depth -= 1;
        if let Some(i) = slot {
            match &result {
                Ok(v) => {
                    self.calls[i].0.outcome = Outcome::Returned(*v);
                    self.calls[i].1 = true;
                }
                Err(Unwind::Throw(e)) => {
                    self.calls[i].0.outcome = Outcome::Threw(e.clone());
                    self.calls[i].1 = true;
                }
                Err(Unwind::Halt(_)) => {}
            }
        }
        result
    }

    fn dispatch(&mut self, method: MethodRef, receiver: Value, args: Vec<Value>) -> Exec<Value> {
        let program = self.program;
        match method {
            MethodRef::Ctor(u) => {
                let unit = &program.units[u];
                let fields = unit.fields.iter().map(|f| default_value(&f.ty)).collect();
                let id = self.heap.alloc(HeapObj::Object { unit: u, fields });
                if let Some(ctor) = &unit.ctor {
                    self.run_body(u, id, ctor, args)?;
                }
                Ok(Value::Ref(id))
            }
            MethodRef::Method(u, mi) => {
                let id = match receiver {
                    Value::Null => return throw(NULL_POINTER),
                    Value::Ref(id) => id,
                    other => return fault(format!("receiver {other:?} is not an object")),
                };
                match self.heap.objects.get(id) {
                    Some(HeapObj::Object { unit, .. }) if *unit == u => {}
                    _ => return fault("receiver has the wrong type"),
                }
                let decl = &program.units[u].methods[mi];
                self.run_body(u, id, decl, args)
            }
            MethodRef::List(op) => {
                let id = match receiver {
                    Value::Null => return throw(NULL_POINTER),
                    Value::Ref(id) => id,
                    other => return fault(format!("receiver {other:?} is not a list")),
                };
                let Some(HeapObj::List(items)) = self.heap.objects.get_mut(id) else {
                    return fault("receiver is not a list");
                };
                Ok(match op {
                    ListOp::Add => {
                        items.push(args[0]);
                        Value::Bool(true)
                    }
                    ListOp::Contains => Value::Bool(items.contains(&args[0])),
                    ListOp::Size => Value::Int(items.len() as i64),
                })
            }
        }
    }

    fn run_body(&mut self, unit: UnitId, this: ObjId, decl: &MethodDecl, args: Vec<Value>) -> Exec<Value> {
        if args.len() != decl.params.len() {
            return fault(format!("arity mismatch calling {}", decl.name));
        }
        let mut frame = Frame {
            this,
            unit,
            locals: decl.params.iter().map(|p| p.name.clone()).zip(args).collect(),
        };
        match self.block(&mut frame, &decl.body)? {
            Flow::Return(v) => Ok(v),
            Flow::Next => Ok(Value::Void),
        }
    }

    fn block(&mut self, frame: &mut Frame, body: &[Stmt]) -> Exec<Flow> {
        let scope = frame.locals.len();
        for s in body {
            if let Flow::Return(v) = self.stmt(frame, s)? {
                frame.locals.truncate(scope);
                return Ok(Flow::Return(v));
            }
        }
        frame.locals.truncate(scope);
        Ok(Flow::Next)
    }

    fn stmt(&mut self, frame: &mut Frame, s: &Stmt) -> Exec<Flow> {
        self.tick()?;
        match s {
            Stmt::VarDecl { name, init, .. } => {
                let v = self.expr(frame, init)?;
                frame.locals.push((name.clone(), v));
            }
            Stmt::Assign { target, value, .. } => {
                let v = self.expr(frame, value)?;
                match target {
                    LValue::Name(n) if frame.set_local(n, v) => {}
                    LValue::Name(n) | LValue::Field(n) => self.set_field(frame, n, v)?,
                }
            }
            Stmt::If {
                id,
                cond,
                then_body,
                else_body,
                ..
            } => {
                let taken = self.branch(frame, *id, cond)?;
                let body = if taken { then_body } else { else_body };
                return self.block(frame, body);
            }
            Stmt::While { id, cond, body, .. } => {
                while self.branch(frame, *id, cond)? {
                    if let Flow::Return(v) = self.block(frame, body)? {
                        return Ok(Flow::Return(v));
                    }
                    self.tick()?;
                }
            }
            Stmt::Return { value, .. } => {
                let v = match value {
                    Some(e) => self.expr(frame, e)?,
                    None => Value::Void,
                };
                return Ok(Flow::Return(v));
            }
            Stmt::Throw { exception, .. } => return throw(exception),
            Stmt::Expr { expr, .. } => {
                self.expr(frame, expr)?;
            }
        }
        Ok(Flow::Next)
    }

    fn branch(&mut self, frame: &mut Frame, id: BranchId, cond: &Expr) -> Exec<bool> {
        let (taken, dist_true, dist_false) = self.cond(frame, cond)?;
        if self.recording {
            self.branches.push(BranchRecord {
                id,
                taken,
                dist_true,
                dist_false,
                statement: self.statement,
            });
        }
        Ok(taken)
    }

    /// Evaluates a boolean condition and its distances to true and false.
    fn cond(&mut self, frame: &mut Frame, e: &Expr) -> Exec<(bool, f64, f64)> {
        match e {
            Expr::Unary(UnOp::Not, inner, _) => {
                let (v, t, f) = self.cond(frame, inner)?;
                Ok((!v, f, t))
            }
            Expr::Binary(BinOp::And, l, r, _) => {
                let (lv, lt, lf) = self.cond(frame, l)?;
                if !lv {
                    return Ok((false, lt + K, 0.0));
                }
                let (rv, rt, rf) = self.cond(frame, r)?;
                Ok((rv, lt + rt, lf.min(rf)))
            }
            Expr::Binary(BinOp::Or, l, r, _) => {
                let (lv, lt, lf) = self.cond(frame, l)?;
                if lv {
                    return Ok((true, 0.0, lf + K));
                }
                let (rv, rt, rf) = self.cond(frame, r)?;
                Ok((rv, lt.min(rt), lf + rf))
            }
            Expr::Binary(op @ (BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne), l, r, _) => {
                let a = self.expr(frame, l)?;
                let b = self.expr(frame, r)?;
                Ok(compare_with_distance(*op, a, b))
            }
            _ => {
                let v = self.expr(frame, e)?;
                let b = v.as_bool().unwrap_or(false);
                Ok(if b { (true, 0.0, K) } else { (false, K, 0.0) })
            }
        }
    }

    fn set_field(&mut self, frame: &Frame, name: &str, v: Value) -> Exec<()> {
        let Some(idx) = self.program.units[frame.unit].field_index(name) else {
            return fault(format!("unknown field {name}"));
        };
        match self.heap.objects.get_mut(frame.this) {
            Some(HeapObj::Object { fields, .. }) => {
                fields[idx] = v;
                Ok(())
            }
            _ => fault("receiver is not an object"),
        }
    }

    fn get_field(&self, frame: &Frame, name: &str) -> Exec<Value> {
        let Some(idx) = self.program.units[frame.unit].field_index(name) else {
            return fault(format!("unknown name {name}"));
        };
        match self.heap.field(frame.this, idx) {
            Some(v) => Ok(v),
            None => fault("receiver is not an object"),
        }
    }

    fn expr(&mut self, frame: &mut Frame, e: &Expr) -> Exec<Value> {
        match e {
            Expr::Int(n, _) => Ok(Value::Int(*n)),
            Expr::Bool(b, _) => Ok(Value::Bool(*b)),
            Expr::Null(_) => Ok(Value::Null),
            Expr::This(_) => Ok(Value::Ref(frame.this)),
            Expr::Name(n, _) => match frame.local(n) {
                Some(v) => Ok(v),
                None => self.get_field(frame, n),
            },
            Expr::Field(n, _) => self.get_field(frame, n),
            Expr::NewList(_) => Ok(Value::Ref(self.heap.alloc(HeapObj::List(Vec::new())))),
            Expr::New { unit, args, .. } => {
                let Some(u) = self.program.unit_id(unit) else {
                    return fault(format!("unknown unit {unit}"));
                };
                let vals = self.args(frame, args)?;
                self.call(MethodRef::Ctor(u), Value::Null, vals)
            }
            Expr::Call {
                receiver,
                method,
                args,
                ..
            } => {
                let recv = match receiver {
                    Some(r) => self.expr(frame, r)?,
                    None => Value::Ref(frame.this),
                };
                let vals = self.args(frame, args)?;
                let target = match recv {
                    Value::Null => return throw(NULL_POINTER),
                    Value::Ref(id) => match self.heap.get(id) {
                        HeapObj::List(_) => match ListOp::from_name(method) {
                            Some(op) => MethodRef::List(op),
                            None => return fault(format!("list has no method {method}")),
                        },
                        HeapObj::Object { unit, .. } => match self.program.units[*unit].method_index(method) {
                            Some(mi) => MethodRef::Method(*unit, mi),
                            None => return fault(format!("no method {method}")),
                        },
                    },
                    other => return fault(format!("cannot call {method} on {other:?}")),
                };
                self.call(target, recv, vals)
            }
            Expr::Unary(op, inner, _) => {
                let v = self.expr(frame, inner)?;
                match (op, v) {
                    (UnOp::Neg, Value::Int(n)) => Ok(Value::Int(n.wrapping_neg())),
                    (UnOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
                    _ => fault("bad unary operand"),
                }
            }
            Expr::Binary(op, l, r, _) => match op {
                BinOp::And | BinOp::Or => {
                    let lv = self.expr(frame, l)?.as_bool();
                    match (op, lv) {
                        (BinOp::And, Some(false)) => Ok(Value::Bool(false)),
                        (BinOp::Or, Some(true)) => Ok(Value::Bool(true)),
                        (_, Some(_)) => {
                            let rv = self.expr(frame, r)?;
                            match rv {
                                Value::Bool(_) => Ok(rv),
                                _ => fault("bad logical operand"),
                            }
                        }
                        (_, None) => fault("bad logical operand"),
                    }
                }
                _ => {
                    let a = self.expr(frame, l)?;
                    let b = self.expr(frame, r)?;
                    binary(*op, a, b)
                }
            },
        }
    }

    fn args(&mut self, frame: &mut Frame, args: &[Expr]) -> Exec<Vec<Value>> {
        args.iter().map(|a| self.expr(frame, a)).collect()
    }
}

fn default_value(t: &Type) -> Value {
    match t {
        Type::Int => Value::Int(0),
        Type::Bool => Value::Bool(false),
        _ => Value::Null,
    }
}

fn binary(op: BinOp, a: Value, b: Value) -> Exec<Value> {
    use Value::*;
    Ok(match (op, a, b) {
        (BinOp::Add, Int(x), Int(y)) => Int(x.wrapping_add(y)),
        (BinOp::Sub, Int(x), Int(y)) => Int(x.wrapping_sub(y)),
        (BinOp::Mul, Int(x), Int(y)) => Int(x.wrapping_mul(y)),
        (BinOp::Div | BinOp::Rem, Int(_), Int(0)) => return throw(ARITHMETIC),
        (BinOp::Div, Int(x), Int(y)) => Int(x.wrapping_div(y)),
        (BinOp::Rem, Int(x), Int(y)) => Int(x.wrapping_rem(y)),
        (BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne, _, _) => {
            Bool(compare_with_distance(op, a, b).0)
        }
        _ => return fault(format!("bad operands for {}", op.symbol())),
    })
}

/// Outcome of a relational predicate plus its distances to true and false.
fn compare_with_distance(op: BinOp, a: Value, b: Value) -> (bool, f64, f64) {
    if let (Value::Int(x), Value::Int(y)) = (a, b) {
        let (x, y) = (x as f64, y as f64);
        let v = match op {
            BinOp::Lt => x < y,
            BinOp::Le => x <= y,
            BinOp::Gt => x > y,
            BinOp::Ge => x >= y,
            BinOp::Eq => x == y,
            _ => x != y,
        };
        // distance to make the predicate true
        let dt = match op {
            BinOp::Lt => (x - y + K).max(0.0),
            BinOp::Le => (x - y).max(0.0),
            BinOp::Gt => (y - x + K).max(0.0),
            BinOp::Ge => (y - x).max(0.0),
            BinOp::Eq => (x - y).abs(),
            _ => {
                if x == y {
                    K
                } else {
                    0.0
                }
            }
        };
        // distance to make it false: the opposite predicate's distance
        let df = match op {
            BinOp::Lt => (y - x).max(0.0),
            BinOp::Le => (y - x + K).max(0.0),
            BinOp::Gt => (x - y).max(0.0),
            BinOp::Ge => (x - y + K).max(0.0),
            BinOp::Eq => {
                if x == y {
                    K
                } else {
                    0.0
                }
            }
            _ => (x - y).abs(),
        };
        return (v, if v { 0.0 } else { dt }, if v { df } else { 0.0 });
    }
    let eq = a == b;
    let v = if op == BinOp::Ne { !eq } else { eq };
    if v {
        (true, 0.0, K)
    } else {
        (false, K, 0.0)
    }
}
