//! Mutation and crossover over call sequences.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::lang::{MethodRef, SubjectProgram, Type};
use crate::testcase::{Arg, Statement, TestCase};

use super::generate::Generator;

const LITERAL_DELTA: i64 = 10;

/// Applies one or more random mutation operators to a copy of `t`.
pub fn mutate(gen: &Generator, t: &TestCase, rng: &mut impl Rng) -> TestCase {
    let mut out = t.clone();
    let rounds = if rng.gen_bool(0.7) { 1 } else { rng.gen_range(2..=3) };
    for _ in 0..rounds {
        out = match rng.gen_range(0..6) {
            0 => change_literal(gen, &out, rng),
            1 => replace_value(gen, &out, rng),
            2 => {
                let mut c = out.clone();
                if let Some(m) = gen.pick_method(&c, rng) {
                    gen.insert_call(&mut c, m, rng);
                }
                c
            }
            3 if out.len() > 1 => out.without(rng.gen_range(0..out.len())),
            4 => duplicate_call(gen, &out, rng),
            _ => swap_method(gen, &out, rng),
        };
    }
    if out.is_empty() {
        return gen.random_test(rng);
    }
    out.truncated(gen.max_statements)
}

fn calls_and_constructs(t: &TestCase) -> Vec<usize> {
    (0..t.len())
        .filter(|&i| matches!(t.statements[i], Statement::Call { .. } | Statement::Construct { .. }))
        .collect()
}

/// Nudges or resamples one int or bool literal.
pub fn change_literal(gen: &Generator, t: &TestCase, rng: &mut impl Rng) -> TestCase {
    let mut slots: Vec<(usize, Option<usize>)> = Vec::new();
    for (i, st) in t.statements.iter().enumerate() {
        match st {
            Statement::Int(_) | Statement::Bool(_) => slots.push((i, None)),
            Statement::Construct { args, .. } | Statement::Call { args, .. } => {
                for (j, a) in args.iter().enumerate() {
                    if matches!(a, Arg::Int(_) | Arg::Bool(_)) {
                        slots.push((i, Some(j)));
                    }
                }
            }
            Statement::NewList => {}
        }
    }
    let Some(&(i, j)) = slots.choose(rng) else {
        return replace_value(gen, t, rng);
    };
    let mut out = t.clone();
    match (&mut out.statements[i], j) {
        (Statement::Int(n), None) => *n = tweak(gen, *n, rng),
        (Statement::Bool(b), None) => *b = !*b,
        (Statement::Construct { args, .. } | Statement::Call { args, .. }, Some(j)) => match &mut args[j] {
            Arg::Int(n) => *n = tweak(gen, *n, rng),
            Arg::Bool(b) => *b = !*b,
            _ => {}
        },
        _ => {}
    }
    out
}

fn tweak(gen: &Generator, n: i64, rng: &mut impl Rng) -> i64 {
    if rng.gen_bool(0.7) {
        let d = rng.gen_range(1..=LITERAL_DELTA);
        if rng.gen_bool(0.5) {
            n.wrapping_add(d)
        } else {
            n.wrapping_sub(d)
        }
    } else {
        gen.random_int(rng)
    }
}

/// Replaces one argument or receiver with another compatible value,
/// possibly constructing a fresh object just before the statement.
pub fn replace_value(gen: &Generator, t: &TestCase, rng: &mut impl Rng) -> TestCase {
    let program = gen.program;
    let Some(&i) = calls_and_constructs(t).choose(rng) else {
        return t.clone();
    };
    let (params, n_args, has_receiver) = match &t.statements[i] {
        Statement::Construct { unit, args } => (program.params_of(MethodRef::Ctor(*unit)), args.len(), false),
        Statement::Call { method, args, .. } => (program.params_of(*method), args.len(), true),
        _ => unreachable!(),
    };
    let slots = n_args + usize::from(has_receiver);
    if slots == 0 {
        return t.clone();
    }
    let slot = rng.gen_range(0..slots);
    let mut out = t.clone();
    if has_receiver && slot == n_args {
        let ty = out.var_type(program, match &out.statements[i] {
            Statement::Call { receiver, .. } => *receiver,
            _ => unreachable!(),
        });
        let Some(ty) = ty else {
            return out;
        };
        let candidates = gen.vars_of(&out, &ty, i);
        let fresh = candidates.len() <= 1 || rng.gen_bool(0.3);
        let new_recv = if fresh {
            match construct_before(gen, &mut out, &ty, i, rng) {
                Some(v) => v,
                None => return t.clone(),
            }
        } else {
            *candidates.choose(rng).expect("nonempty")
        };
        let at = if fresh { i + 1 } else { i };
        if let Statement::Call { receiver, .. } = &mut out.statements[at] {
            *receiver = new_recv;
        }
        return out;
    }
    let ty = &params[slot];
    let fresh = matches!(ty, Type::Unit(_) | Type::List) && rng.gen_bool(0.25);
    let (arg, at) = if fresh {
        match construct_before(gen, &mut out, ty, i, rng) {
            Some(v) => (Arg::Var(v), i + 1),
            None => (Arg::Null, i),
        }
    } else {
        (gen.value_in_place(&out, ty, i, rng), i)
    };
    match &mut out.statements[at] {
        Statement::Construct { args, .. } | Statement::Call { args, .. } => args[slot] = arg,
        _ => unreachable!(),
    }
    out
}

/// Inserts a construction of `ty` at position `at` with in-place arguments.
/// Returns the new variable index.
fn construct_before(gen: &Generator, t: &mut TestCase, ty: &Type, at: usize, rng: &mut impl Rng) -> Option<usize> {
    let st = match ty {
        Type::List => Statement::NewList,
        Type::Unit(name) => {
            let u = gen.program.unit_id(name)?;
            let args = gen
                .program
                .params_of(MethodRef::Ctor(u))
                .iter()
                .map(|p| gen.value_in_place(t, p, at, rng))
                .collect();
            Statement::Construct { unit: u, args }
        }
        _ => return None,
    };
    t.insert(at, st);
    Some(at)
}

/// Appends a copy of an existing call.
pub fn duplicate_call(gen: &Generator, t: &TestCase, rng: &mut impl Rng) -> TestCase {
    let calls: Vec<usize> = (0..t.len())
        .filter(|&i| matches!(t.statements[i], Statement::Call { .. }))
        .collect();
    let Some(&i) = calls.choose(rng) else {
        return change_literal(gen, t, rng);
    };
    let mut out = t.clone();
    out.statements.push(t.statements[i].clone());
    out
}

/// Replaces a call with another method of the same unit and return type.
pub fn swap_method(gen: &Generator, t: &TestCase, rng: &mut impl Rng) -> TestCase {
    let program = gen.program;
    let swappable: Vec<(usize, Vec<MethodRef>)> = (0..t.len())
        .filter_map(|i| {
            let Statement::Call {
                method: m @ MethodRef::Method(u, _),
                ..
            } = t.statements[i]
            else {
                return None;
            };
            let ret = program.return_type_of(m);
            let alts: Vec<MethodRef> = (0..program.units[u].methods.len())
                .map(|k| MethodRef::Method(u, k))
                .filter(|&k| k != m && program.return_type_of(k) == ret)
                .collect();
            (!alts.is_empty()).then_some((i, alts))
        })
        .collect();
    let Some((i, alts)) = swappable.choose(rng) else {
        return replace_value(gen, t, rng);
    };
    let new_m = *alts.choose(rng).expect("nonempty");
    let mut out = t.clone();
    let args: Vec<Arg> = program
        .params_of(new_m)
        .iter()
        .map(|p| gen.value_in_place(&out, p, *i, rng))
        .collect();
    if let Statement::Call { method, args: a, .. } = &mut out.statements[*i] {
        *method = new_m;
        *a = args;
    }
    out
}

/// Single-point crossover: `a[..p] ++ b[q..]` and `b[..q] ++ a[p..]`, with
/// references into the discarded prefix repaired by type.
pub fn crossover(program: &SubjectProgram, a: &TestCase, b: &TestCase, rng: &mut impl Rng) -> (TestCase, TestCase) {
    let p = rng.gen_range(0..=a.len());
    let q = rng.gen_range(0..=b.len());
    (splice(program, a, p, b, q), splice(program, b, q, a, p))
}

/// `head[..p]` followed by `tail[q..]`. A reference from the tail into
/// `tail[..q]` is redirected to the latest head variable of the same type;
/// a statement that cannot be repaired is dropped along with its users.
pub fn splice(program: &SubjectProgram, head: &TestCase, p: usize, tail: &TestCase, q: usize) -> TestCase {
    let mut out = head.truncated(p);
    out.focal = None;
    // new index of tail statement j (for j >= q), None if dropped
    let mut mapped: Vec<Option<usize>> = vec![None; tail.len()];
    for j in q..tail.len() {
        let resolve = |v: usize, out: &TestCase| -> Option<usize> {
            if v >= q {
                return mapped[v];
            }
            let ty = tail.var_type(program, v)?;
            (0..out.len())
                .rev()
                .find(|&k| out.var_type(program, k).as_ref() == Some(&ty))
        };
        let mut st = tail.statements[j].clone();
        let ok = match &mut st {
            Statement::Construct { args, .. } => repair_args(args, &resolve, &out),
            Statement::Call { receiver, args, .. } => match resolve(*receiver, &out) {
                Some(r) => {
                    *receiver = r;
                    repair_args(args, &resolve, &out)
                }
                None => false,
            },
            _ => true,
        };
        if ok {
            out.statements.push(st);
            mapped[j] = Some(out.len() - 1);
        }
    }
    debug_assert!(out.validate(program).is_ok());
    out
}

fn repair_args(args: &mut [Arg], resolve: &impl Fn(usize, &TestCase) -> Option<usize>, out: &TestCase) -> bool {
    for a in args.iter_mut() {
        if let Arg::Var(v) = a {
            match resolve(*v, out) {
                Some(r) => *v = r,
                None => return false,
            }
        }
    }
    true
}
