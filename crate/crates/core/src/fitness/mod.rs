//! Objective functions: how far a trace is from satisfying or violating a
//! contract, as values in [0, 1].
//!
//! For one call of the target method:
//!
//! ```text
//! dIn   = agg(pre terms ++ guard terms)
//! dRet  = agg(assert terms)                 if dIn = 0, else 1
//! d̄Ret  = Π_k d(¬assert_k)                  if dIn = 0, else 1
//! value = (dIn + dRet) / 2
//! ```
//!
//! where numeric terms contribute `|e1 - e2| + ε` when false and boolean,
//! reference and exception-type terms contribute 0 or 1, and
//! `agg(ds) = min(1, Σ flat + norm(Σ numeric))` with `norm(x) = x / (1 + x)`.
//! A test's fitness is the minimum over its top-level calls of the target.

use serde::Serialize;

use crate::contract::{sexpr_term, term_holds, CallView, Contract, EvalError, Term, TermKind};
use crate::lang::{CallRecord, ExecutionTrace, Heap, Outcome, SubjectProgram, Value};

pub const DEFAULT_EPSILON: f64 = 0.5;

/// `val / (1 + val)`.
pub fn normalize(val: f64) -> f64 {
    assert!(val >= 0.0, "normalize expects a nonnegative value, got {val}");
    val / (1.0 + val)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Satisfy,
    Violate,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Objective {
    pub contract: String,
    pub mode: Mode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitnessValue {
    pub value: f64,
    pub d_in: f64,
    pub d_ret: f64,
}

impl FitnessValue {
    pub const WORST: FitnessValue = FitnessValue {
        value: 1.0,
        d_in: 1.0,
        d_ret: 1.0,
    };

    pub fn new(d_in: f64, d_ret: f64) -> Self {
        FitnessValue {
            value: (d_in + d_ret) / 2.0,
            d_in,
            d_ret,
        }
    }

    pub fn solved(&self) -> bool {
        self.value == 0.0
    }
}

/// Distance of one term before normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RawDistance {
    /// `|e1 - e2| + ε`, or 0 when the term holds.
    Numeric(f64),
    /// 0 or 1.
    Flat(f64),
}

impl RawDistance {
    pub fn normalized(self) -> f64 {
        match self {
            RawDistance::Numeric(d) => normalize(d),
            RawDistance::Flat(d) => d,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermDistance {
    pub raw: RawDistance,
    /// The term could not be evaluated (a guard call threw, `retVal` missing).
    pub unevaluable: bool,
}

impl TermDistance {
    pub fn distance(&self) -> f64 {
        self.raw.normalized()
    }
}

/// Distance of `term` from holding on the call described by `view`.
pub fn term_distance(program: &SubjectProgram, term: &Term, view: &CallView, epsilon: f64) -> TermDistance {
    let unevaluable = TermDistance {
        raw: RawDistance::Flat(1.0),
        unevaluable: true,
    };
    if term.kind == TermKind::Numeric {
        let a = crate::contract::eval_expr(program, &term.lhs, view);
        let b = crate::contract::eval_expr(program, &term.rhs, view);
        let (Ok(Value::Int(a)), Ok(Value::Int(b))) = (a, b) else {
            return unevaluable;
        };
        let holds = match term_holds_values(term, a, b) {
            Some(h) => h,
            None => return unevaluable,
        };
        let d = if holds { 0.0 } else { (a as f64 - b as f64).abs() + epsilon };
        return TermDistance {
            raw: RawDistance::Numeric(d),
            unevaluable: false,
        };
    }
    match term_holds(program, term, view) {
        Ok(h) => TermDistance {
            raw: RawDistance::Flat(if h { 0.0 } else { 1.0 }),
            unevaluable: false,
        },
        Err(_) => unevaluable,
    }
}

fn term_holds_values(term: &Term, a: i64, b: i64) -> Option<bool> {
    crate::contract::compare_ints(term.op, a, b)
}

/// `min(1, Σ flat + norm(Σ numeric))`.
pub fn aggregate(ds: impl IntoIterator<Item = RawDistance>) -> f64 {
    let mut flat = 0.0;
    let mut numeric = 0.0;
    for d in ds {
        match d {
            RawDistance::Flat(x) => flat += x,
            RawDistance::Numeric(x) => numeric += x,
        }
    }
    (flat + normalize(numeric)).min(1.0)
}

/// Satisfy and violate fitness of one call, sharing the `dIn` work.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CallFitness {
    pub satisfy: FitnessValue,
    pub violate: FitnessValue,
}

impl CallFitness {
    pub const WORST: CallFitness = CallFitness {
        satisfy: FitnessValue::WORST,
        violate: FitnessValue::WORST,
    };

    pub fn get(&self, mode: Mode) -> FitnessValue {
        match mode {
            Mode::Satisfy => self.satisfy,
            Mode::Violate => self.violate,
        }
    }
}

/// Evaluates contracts against recorded calls.
#[derive(Debug, Clone, Copy)]
pub struct Evaluator<'a> {
    pub program: &'a SubjectProgram,
    pub epsilon: f64,
}

impl<'a> Evaluator<'a> {
    pub fn new(program: &'a SubjectProgram) -> Self {
        Evaluator {
            program,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn view<'c>(call: &'c CallRecord) -> Option<CallView<'c>> {
        Some(CallView {
            pre_state: call.pre_state.as_deref()?,
            receiver: call.receiver,
            args: &call.args,
            outcome: &call.outcome,
        })
    }

    /// `dIn` for a call: preconditions and guard; a null receiver never
    /// satisfies them.
    pub fn d_in(&self, contract: &Contract, pre: &[&Contract], view: &CallView) -> f64 {
        if !matches!(view.receiver, Value::Ref(_)) {
            return 1.0;
        }
        let terms = pre.iter().flat_map(|p| p.guard.iter()).chain(contract.guard.iter());
        aggregate(terms.map(|t| term_distance(self.program, t, view, self.epsilon).raw))
    }

    pub fn call_fitness(&self, contract: &Contract, pre: &[&Contract], view: &CallView) -> CallFitness {
        let d_in = self.d_in(contract, pre, view);
        if d_in > 0.0 {
            return CallFitness {
                satisfy: FitnessValue::new(d_in, 1.0),
                violate: FitnessValue::new(d_in, 1.0),
            };
        }
        let d_ret = aggregate(
            contract
                .assert
                .iter()
                .map(|t| term_distance(self.program, t, view, self.epsilon).raw),
        );
        let d_ret_bar: f64 = contract
            .assert
            .iter()
            .map(|t| term_distance(self.program, &t.negated(), view, self.epsilon).distance())
            .product();
        CallFitness {
            satisfy: FitnessValue::new(0.0, d_ret),
            violate: FitnessValue::new(0.0, d_ret_bar),
        }
    }

    /// Fitness of a whole trace: per mode, the minimum over the top-level
    /// calls of the contract's method. No such call means value 1.
    pub fn evaluate(&self, contract: &Contract, pre: &[&Contract], trace: &ExecutionTrace) -> CallFitness {
        let mut best = CallFitness::WORST;
        for call in trace.top_level_calls(contract.method) {
            let Some(view) = Self::view(call) else {
                continue;
            };
            let f = self.call_fitness(contract, pre, &view);
            if f.satisfy.value < best.satisfy.value {
                best.satisfy = f.satisfy;
            }
            if f.violate.value < best.violate.value {
                best.violate = f.violate;
            }
        }
        best
    }

    /// Per-term breakdown of the best call for `mode`, for reports.
    pub fn breakdown(
        &self,
        contract: &Contract,
        pre: &[&Contract],
        trace: &ExecutionTrace,
        mode: Mode,
    ) -> Breakdown {
        let mut best: Option<(FitnessValue, &CallRecord)> = None;
        for call in trace.top_level_calls(contract.method) {
            let Some(view) = Self::view(call) else {
                continue;
            };
            let f = self.call_fitness(contract, pre, &view).get(mode);
            if best.is_none_or(|(b, _)| f.value < b.value) {
                best = Some((f, call));
            }
        }
        let mut out = Breakdown {
            objective: contract.id.clone(),
            mode,
            value: 1.0,
            d_in: 1.0,
            d_ret: 1.0,
            terms: Vec::new(),
        };
        let Some((f, call)) = best else {
            return out;
        };
        out.value = f.value;
        out.d_in = f.d_in;
        out.d_ret = f.d_ret;
        let view = Self::view(call).expect("checked above");
        let guard_terms = pre.iter().flat_map(|p| p.guard.iter()).chain(contract.guard.iter());
        for t in guard_terms.chain(contract.assert.iter()) {
            let t = if mode == Mode::Violate && contract.assert.contains(t) {
                t.negated()
            } else {
                t.clone()
            };
            let d = term_distance(self.program, &t, &view, self.epsilon);
            out.terms.push(TermReport {
                term: sexpr_term(self.program, contract.method, &t),
                distance: d.distance(),
                unevaluable: d.unevaluable,
            });
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermReport {
    pub term: String,
    pub distance: f64,
    pub unevaluable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Breakdown {
    pub objective: String,
    pub mode: Mode,
    pub value: f64,
    pub d_in: f64,
    pub d_ret: f64,
    pub terms: Vec<TermReport>,
}

/// Whether a call hits a contract (preconditions and guard hold) and, if so,
/// whether the assertion passes. Used for post-hoc oracles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleVerdict {
    Miss,
    Pass,
    /// The call threw where a return value was asserted.
    Inconclusive,
    Alarm,
}

pub fn oracle_verdict(program: &SubjectProgram, contract: &Contract, pre: &[&Contract], view: &CallView) -> OracleVerdict {
    if !matches!(view.receiver, Value::Ref(_)) {
        return OracleVerdict::Miss;
    }
    let flag = pre
        .iter()
        .flat_map(|p| p.guard.iter())
        .chain(contract.guard.iter())
        .all(|t| term_holds(program, t, view) == Ok(true));
    if !flag {
        return OracleVerdict::Miss;
    }
    let mut inconclusive = false;
    for t in &contract.assert {
        match term_holds(program, t, view) {
            Ok(true) => {}
            Ok(false) => return OracleVerdict::Alarm,
            Err(EvalError::NoReturnValue) => inconclusive = true,
            Err(_) => inconclusive = true,
        }
    }
    if inconclusive {
        OracleVerdict::Inconclusive
    } else {
        OracleVerdict::Pass
    }
}

/// A synthetic call view for direct evaluation (tests, brute-force oracles).
pub fn view_of<'v>(heap: &'v Heap, receiver: Value, args: &'v [Value], outcome: &'v Outcome) -> CallView<'v> {
    CallView {
        pre_state: heap,
        receiver,
        args,
        outcome,
    }
}
