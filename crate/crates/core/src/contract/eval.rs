//! Evaluating contract expressions against a recorded call.

use crate::lang::{invoke, Heap, Outcome, SubjectProgram, Value, GUARD_STEP_BUDGET};

use super::{CExpr, Literal, Op, Term};

/// What a contract sees of one call: the pre-call heap, receiver, arguments
/// and outcome.
#[derive(Debug, Clone, Copy)]
pub struct CallView<'a> {
    pub pre_state: &'a Heap,
    pub receiver: Value,
    pub args: &'a [Value],
    pub outcome: &'a Outcome,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalError {
    /// A subject method invoked by the term threw.
    Threw(String),
    /// A subject method invoked by the term ran out of steps or faulted.
    Halted,
    /// `retVal` is asked for but the call threw.
    NoReturnValue,
    /// Receiver is null or an operand has an unexpected shape.
    Unbound,
}

pub fn eval_expr(program: &SubjectProgram, e: &CExpr, view: &CallView) -> Result<Value, EvalError> {
    match e {
        CExpr::Lit(Literal::Int(n)) => Ok(Value::Int(*n)),
        CExpr::Lit(Literal::Bool(b)) => Ok(Value::Bool(*b)),
        CExpr::Lit(Literal::Null) => Ok(Value::Null),
        CExpr::Param(i) => view.args.get(*i).copied().ok_or(EvalError::Unbound),
        CExpr::This => match view.receiver {
            Value::Ref(_) => Ok(view.receiver),
            _ => Err(EvalError::Unbound),
        },
        CExpr::Field(i) => match view.receiver {
            Value::Ref(obj) => view.pre_state.field(obj, *i).ok_or(EvalError::Unbound),
            _ => Err(EvalError::Unbound),
        },
        CExpr::RetVal => match view.outcome {
            Outcome::Returned(v) => Ok(*v),
            Outcome::Threw(_) => Err(EvalError::NoReturnValue),
        },
        CExpr::Exception(_) => Err(EvalError::Unbound),
        CExpr::Call {
            receiver,
            method,
            args,
        } => {
            let recv = eval_expr(program, receiver, view)?;
            let vals = args
                .iter()
                .map(|a| eval_expr(program, a, view))
                .collect::<Result<Vec<_>, _>>()?;
            if let Value::Ref(id) = recv {
                if id >= view.pre_state.objects.len() {
                    return Err(EvalError::Unbound);
                }
            }
            // run on a copy so the snapshot stays pristine
            let mut heap = view.pre_state.clone();
            match invoke(program, &mut heap, *method, recv, &vals, GUARD_STEP_BUDGET) {
                Ok(Outcome::Returned(v)) => Ok(v),
                Ok(Outcome::Threw(e)) => Err(EvalError::Threw(e)),
                Err(_) => Err(EvalError::Halted),
            }
        }
        CExpr::Not(inner) => match eval_expr(program, inner, view)? {
            Value::Bool(b) => Ok(Value::Bool(!b)),
            _ => Err(EvalError::Unbound),
        },
        CExpr::All(terms) => {
            for t in terms {
                if !term_holds(program, t, view)? {
                    return Ok(Value::Bool(false));
                }
            }
            Ok(Value::Bool(true))
        }
    }
}

/// Truth value of a term on a call; errors mean the term cannot be evaluated.
pub fn term_holds(program: &SubjectProgram, t: &Term, view: &CallView) -> Result<bool, EvalError> {
    match t.op {
        Op::InstanceOf | Op::NotInstanceOf => {
            let CExpr::Exception(expected) = &t.rhs else {
                return Err(EvalError::Unbound);
            };
            let is = matches!(view.outcome, Outcome::Threw(e) if program.exception_is_a(e, expected));
            Ok(is == (t.op == Op::InstanceOf))
        }
        op => {
            let a = eval_expr(program, &t.lhs, view)?;
            let b = eval_expr(program, &t.rhs, view)?;
            compare(op, a, b)
        }
    }
}

pub(crate) fn compare(op: Op, a: Value, b: Value) -> Result<bool, EvalError> {
    if let (Value::Int(x), Value::Int(y)) = (a, b) {
        return Ok(match op {
            Op::Lt => x < y,
            Op::Le => x <= y,
            Op::Gt => x > y,
            Op::Ge => x >= y,
            Op::Eq => x == y,
            Op::Ne => x != y,
            _ => return Err(EvalError::Unbound),
        });
    }
    match op {
        Op::Eq => Ok(a == b),
        Op::Ne => Ok(a != b),
        _ => Err(EvalError::Unbound),
    }
}

/// Integer comparison; `None` for operators that do not apply to ints.
pub fn compare_ints(op: Op, a: i64, b: i64) -> Option<bool> {
    compare(op, Value::Int(a), Value::Int(b)).ok()
}
