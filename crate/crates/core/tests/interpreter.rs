use contragen::lang::*;
use contragen::testcase::{Arg, Statement, TestCase};

const GIFTPACK: &str = include_str!("../corpus/giftpack.sub");

fn giftpack() -> SubjectProgram {
    parse_program(GIFTPACK).expect("giftpack parses")
}

fn unit(p: &SubjectProgram, name: &str) -> UnitId {
    p.unit_id(name).unwrap()
}

fn call(p: &SubjectProgram, u: &str, m: &str, receiver: usize, args: Vec<Arg>) -> Statement {
    Statement::Call {
        method: p.find_method(u, m).unwrap(),
        receiver,
        args,
    }
}

#[test]
fn giftpack_shape() {
    let p = giftpack();
    let gp = p.unit(unit(&p, "GiftPack"));
    assert_eq!(gp.methods.len(), 3);
    let docs: Vec<_> = gp.methods.iter().filter_map(|m| m.doc.as_ref()).collect();
    assert_eq!(docs.len(), 1);
    assert_eq!(docs[0].tags.len(), 5);
}

#[test]
fn empty_source_has_no_units() {
    assert_eq!(parse_program("").unwrap().units.len(), 0);
}

#[test]
fn duplicate_units_are_rejected() {
    let err = parse_program("class GiftPack {}\nclass GiftPack {}").unwrap_err();
    assert!(matches!(err, LangError::DuplicateName { ref name, .. } if name == "GiftPack"), "{err}");
}

#[test]
fn unresolved_types_are_rejected() {
    let err = parse_program("class A { Missing m; }").unwrap_err();
    assert!(matches!(err, LangError::UnresolvedType { .. }), "{err}");
    let err = parse_program("class A { void f() { throw new Nope(); } }").unwrap_err();
    assert!(matches!(err, LangError::UnresolvedType { .. }), "{err}");
}

#[test]
fn type_errors_are_rejected() {
    for src in [
        "class A { int f() { return true; } }",
        "class A { int f(int x) { if (x) { return 1; } return 0; } }",
        "class A { int f(int x) { if (x > 0) { return 1; } } }",
        "class A { void f(int x, int x) { } }",
        "class A { int x; bool x() { return true; } }",
    ] {
        assert!(parse_program(src).is_err(), "accepted: {src}");
    }
}

#[test]
fn syntax_errors_carry_positions() {
    let err = parse_program("class A {\n  int f( { }\n}").unwrap_err();
    assert!(matches!(err, LangError::Syntax { .. }));
    assert_eq!(err.pos().line, 2);
}

#[test]
fn null_drawer_raises_null_pointer() {
    let p = giftpack();
    let t = TestCase::new(vec![
        Statement::Construct { unit: unit(&p, "Something"), args: vec![] },
        Statement::Construct { unit: unit(&p, "GiftPack"), args: vec![Arg::Var(0)] },
        call(&p, "GiftPack", "unwrapAndSave", 1, vec![Arg::Null, Arg::Int(207)]),
    ]);
    let trace = execute_test(&p, &t, &ExecOptions::default());
    assert_eq!(trace.halt, HaltReason::Normal);
    assert_eq!(trace.statements[2], StatementStatus::Threw(NULL_POINTER.into()));
    let m = p.find_method("GiftPack", "unwrapAndSave").unwrap();
    let rec = trace.top_level_calls(m).next().unwrap();
    assert_eq!(rec.outcome, Outcome::Threw(NULL_POINTER.into()));
}

#[test]
fn gift_already_in_drawer_still_returns_true() {
    let p = giftpack();
    let t = TestCase::new(vec![
        Statement::Construct { unit: unit(&p, "Something"), args: vec![] },
        Statement::Construct { unit: unit(&p, "GiftPack"), args: vec![Arg::Var(0)] },
        Statement::Construct { unit: unit(&p, "Drawer"), args: vec![] },
        call(&p, "Drawer", "add", 2, vec![Arg::Var(0)]),
        call(&p, "GiftPack", "unwrapAndSave", 1, vec![Arg::Var(2), Arg::Int(153)]),
    ]);
    let trace = execute_test(&p, &t, &ExecOptions::default());
    assert_eq!(trace.statements[4], StatementStatus::Ok(Value::Bool(true)));
}

#[test]
fn empty_test_has_empty_trace() {
    let p = giftpack();
    let trace = execute_test(&p, &TestCase::default(), &ExecOptions::default());
    assert!(trace.calls.is_empty() && trace.branches.is_empty());
    assert_eq!(trace.halt, HaltReason::Normal);
}

#[test]
fn failed_statement_only_skips_dependents() {
    let p = giftpack();
    let t = TestCase::new(vec![
        Statement::Construct { unit: unit(&p, "GiftPack"), args: vec![Arg::Null] },
        call(&p, "GiftPack", "getGift", 0, vec![]),
        call(&p, "GiftPack", "unwrapAndSave", 0, vec![Arg::Null, Arg::Int(1)]),
        call(&p, "GiftPack", "unwrapAndSave", 0, vec![Arg::Var(2), Arg::Int(1)]),
        Statement::Construct { unit: unit(&p, "Drawer"), args: vec![] },
    ]);
    let trace = execute_test(&p, &t, &ExecOptions::default());
    assert_eq!(trace.statements[1], StatementStatus::Ok(Value::Null));
    assert!(matches!(trace.statements[2], StatementStatus::Threw(_)));
    assert_eq!(trace.statements[3], StatementStatus::Skipped);
    assert!(matches!(trace.statements[4], StatementStatus::Ok(Value::Ref(_))));
}

#[test]
fn step_budget_halts_runaway_loops() {
    let p = parse_program("class L { int spin(int n) { int i = 0; while (i < n) { i = i + 1; } return i; } }").unwrap();
    let t = TestCase::new(vec![
        Statement::Construct { unit: 0, args: vec![] },
        call(&p, "L", "spin", 0, vec![Arg::Int(1_000_000)]),
    ]);
    let trace = execute_test(&p, &t, &ExecOptions { step_budget: 500, ..Default::default() });
    assert_eq!(trace.halt, HaltReason::StepBudget);
    assert!(trace.steps <= 500);
    assert_eq!(trace.statements[1], StatementStatus::NotRun);
    assert!(trace.calls.iter().all(|c| c.method != p.find_method("L", "spin").unwrap()));
}

#[test]
fn division_by_zero_is_arithmetic_exception() {
    let p = parse_program("class C { int div(int a, int b) { return a / b; } }").unwrap();
    let t = TestCase::new(vec![
        Statement::Construct { unit: 0, args: vec![] },
        call(&p, "C", "div", 0, vec![Arg::Int(4), Arg::Int(0)]),
        call(&p, "C", "div", 0, vec![Arg::Int(7), Arg::Int(2)]),
    ]);
    let trace = execute_test(&p, &t, &ExecOptions::default());
    assert_eq!(trace.statements[1], StatementStatus::Threw(ARITHMETIC.into()));
    assert_eq!(trace.statements[2], StatementStatus::Ok(Value::Int(3)));
}

#[test]
fn every_if_records_one_direction() {
    let p = giftpack();
    let t = TestCase::new(vec![
        Statement::Construct { unit: unit(&p, "GiftPack"), args: vec![Arg::Null] },
        Statement::Construct { unit: unit(&p, "Drawer"), args: vec![] },
        call(&p, "GiftPack", "unwrapAndSave", 0, vec![Arg::Var(1), Arg::Int(-3)]),
    ]);
    let trace = execute_test(&p, &t, &ExecOptions::default());
    // checkValidLimit's `limit <= 0` and unwrapAndSave's `exceeds`
    assert_eq!(trace.branches.len(), 2);
    let limit_branch = &trace.branches[0];
    assert!(limit_branch.taken);
    assert_eq!(limit_branch.dist_true, 0.0);
    assert_eq!(limit_branch.dist_false, 4.0);
    // empty drawer exceeds -3
    assert!(trace.branches[1].taken);
    assert_eq!(trace.statements[2], StatementStatus::Threw("NoMoreException".into()));
}

#[test]
fn snapshots_are_isolated_from_the_call() {
    let p = giftpack();
    let t = TestCase::new(vec![
        Statement::Construct { unit: unit(&p, "Something"), args: vec![] },
        Statement::Construct { unit: unit(&p, "GiftPack"), args: vec![Arg::Var(0)] },
        Statement::Construct { unit: unit(&p, "Drawer"), args: vec![] },
        call(&p, "GiftPack", "unwrapAndSave", 1, vec![Arg::Var(2), Arg::Int(5)]),
    ]);
    let m = p.find_method("GiftPack", "unwrapAndSave").unwrap();
    let opts = ExecOptions { watch: Watch::Methods(vec![m]), ..Default::default() };
    let trace = execute_test(&p, &t, &opts);
    let rec = trace.top_level_calls(m).next().unwrap();
    let snap = rec.pre_state.as_ref().unwrap();
    let Value::Ref(drawer) = rec.args[0] else { panic!() };
    let contains = p.find_method("Drawer", "contains").unwrap();
    let mut heap = (**snap).clone();
    let r1 = invoke(&p, &mut heap, contains, Value::Ref(drawer), &[Value::Ref(0)], GUARD_STEP_BUDGET).unwrap();
    let mut heap = (**snap).clone();
    let r2 = invoke(&p, &mut heap, contains, Value::Ref(drawer), &[Value::Ref(0)], GUARD_STEP_BUDGET).unwrap();
    assert_eq!(r1, Outcome::Returned(Value::Bool(false)));
    assert_eq!(r1, r2);
}

#[test]
fn traces_serialize_identically() {
    let p = giftpack();
    let t = TestCase::new(vec![
        Statement::Construct { unit: unit(&p, "GiftPack"), args: vec![Arg::Null] },
        Statement::Construct { unit: unit(&p, "Drawer"), args: vec![] },
        call(&p, "GiftPack", "unwrapAndSave", 0, vec![Arg::Var(1), Arg::Int(2)]),
        call(&p, "GiftPack", "unwrapAndSave", 0, vec![Arg::Var(1), Arg::Int(2)]),
    ]);
    let a = serde_json::to_string(&execute_test(&p, &t, &ExecOptions::default())).unwrap();
    let b = serde_json::to_string(&execute_test(&p, &t, &ExecOptions::default())).unwrap();
    assert_eq!(a, b);
}

#[test]
fn renders_in_test_dialect() {
    let p = giftpack();
    let t = TestCase::new(vec![
        Statement::Construct { unit: unit(&p, "Something"), args: vec![] },
        Statement::Construct { unit: unit(&p, "GiftPack"), args: vec![Arg::Var(0)] },
        Statement::Construct { unit: unit(&p, "Drawer"), args: vec![] },
        call(&p, "Drawer", "add", 2, vec![Arg::Var(0)]),
        call(&p, "GiftPack", "unwrapAndSave", 1, vec![Arg::Var(2), Arg::Int(153)]),
    ]);
    assert_eq!(
        t.render(&p),
        vec![
            "Something s0 = new Something();",
            "GiftPack gp0 = new GiftPack(s0);",
            "Drawer d0 = new Drawer();",
            "boolean b0 = d0.add(s0);",
            "boolean b1 = gp0.unwrapAndSave(d0, 153);",
        ]
    );
}
