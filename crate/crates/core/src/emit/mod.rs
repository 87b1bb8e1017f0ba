//! Emission of tests contextualized on their focal contract: a name derived
//! from the contract text and the contract assertion as oracle.

use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::contract::{CExpr, Contract, Extraction, Literal, Op, Term};
use crate::fitness::{oracle_verdict, Evaluator, OracleVerdict};
use crate::lang::{execute_test, ExecOptions, MethodRef, StatementStatus, SubjectProgram, Watch};
use crate::search::{Selection, SolutionKind};
use crate::testcase::{Arg, Statement, TestCase};

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("test is focused on {found:?} but the contract is '{expected}'")]
    FocalMismatch { expected: String, found: Option<String> },
    #[error("test never calls the method of '{0}'")]
    NoFocalCall(String),
    #[error("unknown contract '{0}'")]
    UnknownContract(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Words with no bearing on a test name: articles and other determiners.
const DROPPED: &[&str] = &["the", "a", "an", "these", "those", "every", "each"];

/// Relevant words of a description, capitalized, punctuation stripped,
/// `...Exception` shortened to `...Ex`.
pub fn relevant_words(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|tok| {
            let w: String = tok.chars().filter(char::is_ascii_alphanumeric).collect();
            if w.is_empty() || DROPPED.contains(&w.to_ascii_lowercase().as_str()) {
                return None;
            }
            let w = match w.strip_suffix("Exception") {
                Some(stem) if !stem.is_empty() => format!("{stem}Ex"),
                _ => w,
            };
            Some(capitalize(&w))
        })
        .collect()
}

fn capitalize(w: &str) -> String {
    let mut cs = w.chars();
    match cs.next() {
        Some(c) => c.to_ascii_uppercase().to_string() + cs.as_str(),
        None => String::new(),
    }
}

/// `test` + Method + `_` + assertion words + `If` + guard words, with `_k`
/// appended when `collision_index` is given. `None` when both descriptions
/// have no relevant words.
pub fn synthesize_name(method: &str, guard_text: &str, assert_text: &str, collision_index: Option<usize>) -> Option<String> {
    let asserts = relevant_words(assert_text);
    let guards = relevant_words(guard_text);
    if asserts.is_empty() && guards.is_empty() {
        return None;
    }
    let method: String = method.chars().filter(char::is_ascii_alphanumeric).collect();
    let mut name = format!("test{}_{}", capitalize(&method), asserts.concat());
    if !guards.is_empty() {
        name.push_str("If");
        name.push_str(&guards.concat());
    }
    if let Some(k) = collision_index {
        name.push_str(&format!("_{k}"));
    }
    Some(name)
}

/// Identifier used when a contract yields no relevant words.
pub fn fallback_name(contract_id: &str) -> String {
    let body: String = contract_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    format!("test_{body}")
}

/// Test names for every contract of an extraction, in order. Contracts that
/// share a base name get `_0`, `_1`, ... in extraction order.
pub fn name_contracts(extraction: &Extraction) -> Vec<(String, String)> {
    let short = |c: &Contract| c.method_name.rsplit('.').next().unwrap_or(&c.method_name).to_string();
    let bases: Vec<Option<String>> = extraction
        .contracts
        .iter()
        .map(|c| synthesize_name(&short(c), &c.guard_text, &c.assert_text, None))
        .collect();
    let mut out = Vec::with_capacity(bases.len());
    for (i, c) in extraction.contracts.iter().enumerate() {
        let name = match &bases[i] {
            None => fallback_name(&c.id),
            Some(base) => {
                let shared: Vec<usize> = (0..bases.len()).filter(|&j| bases[j].as_ref() == Some(base)).collect();
                if shared.len() > 1 {
                    let k = shared.iter().position(|&j| j == i).expect("contains self");
                    synthesize_name(&short(c), &c.guard_text, &c.assert_text, Some(k)).expect("nonempty")
                } else {
                    base.clone()
                }
            }
        };
        out.push((c.id.clone(), name));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Expected {
    Pass,
    Alarm,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmittedTest {
    pub name: String,
    pub unit: String,
    pub focal_contract: String,
    pub contract_text: String,
    pub outcome: SolutionKind,
    pub expected: Expected,
    /// Full source of the test in the subject test dialect.
    pub body: Vec<String>,
    pub test: TestCase,
}

/// Index of the call the oracle is attached to: the last top-level call of
/// the contract's method.
fn focal_statement(test: &TestCase, method: MethodRef) -> Option<usize> {
    test.statements
        .iter()
        .rposition(|s| matches!(s, Statement::Call { method: m, .. } if *m == method))
}

struct Scope<'a> {
    program: &'a SubjectProgram,
    names: Vec<Option<String>>,
    receiver: usize,
    args: &'a [Arg],
    ret: Option<String>,
}

impl Scope<'_> {
    fn arg(&self, a: &Arg) -> String {
        match a {
            Arg::Var(v) => self.names[*v].clone().unwrap_or_else(|| "?".into()),
            Arg::Int(n) => n.to_string(),
            Arg::Bool(b) => b.to_string(),
            Arg::Null => "null".into(),
        }
    }

    fn expr(&self, e: &CExpr, unit: usize) -> String {
        match e {
            CExpr::Lit(Literal::Int(n)) => n.to_string(),
            CExpr::Lit(Literal::Bool(b)) => b.to_string(),
            CExpr::Lit(Literal::Null) => "null".into(),
            CExpr::Param(i) => self.args.get(*i).map_or_else(|| "?".into(), |a| self.arg(a)),
            CExpr::This => self.arg(&Arg::Var(self.receiver)),
            CExpr::Field(i) => {
                let field = self.program.units[unit].fields.get(*i).map_or("?", |f| f.name.as_str());
                format!("{}.{}", self.arg(&Arg::Var(self.receiver)), field)
            }
            CExpr::RetVal => self.ret.clone().unwrap_or_else(|| "retVal".into()),
            CExpr::Exception(name) => name.clone(),
            CExpr::Call { receiver, method, args } => {
                let args: Vec<String> = args.iter().map(|a| self.expr(a, unit)).collect();
                format!(
                    "{}.{}({})",
                    self.expr(receiver, unit),
                    self.program.method_name(*method).rsplit('.').next().unwrap_or(""),
                    args.join(", ")
                )
            }
            CExpr::Not(inner) => format!("!({})", self.expr(inner, unit)),
            CExpr::All(terms) => {
                let parts: Vec<String> = terms.iter().map(|t| self.term(t, unit)).collect();
                format!("({})", parts.join(" && "))
            }
        }
    }

    fn term(&self, t: &Term, unit: usize) -> String {
        format!("{} {} {}", self.expr(&t.lhs, unit), t.op.symbol(), self.expr(&t.rhs, unit))
    }

    /// assertTrue/assertFalse/assertEquals form of a value assertion.
    fn assertion(&self, t: &Term, unit: usize) -> String {
        let (lhs, op, rhs) = if t.rhs == CExpr::RetVal {
            (&t.rhs, t.op.swapped(), &t.lhs)
        } else {
            (&t.lhs, t.op, &t.rhs)
        };
        if *lhs == CExpr::RetVal {
            let v = self.expr(lhs, unit);
            match (op, rhs) {
                (Op::Eq, CExpr::Lit(Literal::Bool(true))) | (Op::Ne, CExpr::Lit(Literal::Bool(false))) => {
                    return format!("assertTrue({v});")
                }
                (Op::Eq, CExpr::Lit(Literal::Bool(false))) | (Op::Ne, CExpr::Lit(Literal::Bool(true))) => {
                    return format!("assertFalse({v});")
                }
                (Op::Eq, CExpr::Lit(Literal::Null)) => return format!("assertNull({v});"),
                (Op::Ne, CExpr::Lit(Literal::Null)) => return format!("assertNotNull({v});"),
                (Op::Eq, other) => return format!("assertEquals({}, {v});", self.expr(other, unit)),
                _ => {}
            }
        }
        format!("assertTrue({});", self.term(t, unit))
    }
}

fn exception_of(t: &Term) -> Option<&str> {
    match (&t.op, &t.rhs) {
        (Op::InstanceOf, CExpr::Exception(name)) => Some(name),
        _ => None,
    }
}

/// Renders `test` with the contract's assertion as oracle after the focal
/// call; with `assume`, preconditions and guard are written as `assume`
/// lines before it.
pub fn attach_oracle(
    program: &SubjectProgram,
    extraction: &Extraction,
    test: &TestCase,
    contract: &Contract,
    outcome: SolutionKind,
    name: &str,
    assume: bool,
) -> Result<EmittedTest, EmitError> {
    if test.focal.as_deref() != Some(contract.id.as_str()) {
        return Err(EmitError::FocalMismatch {
            expected: contract.id.clone(),
            found: test.focal.clone(),
        });
    }
    let focal = focal_statement(test, contract.method).ok_or_else(|| EmitError::NoFocalCall(contract.id.clone()))?;
    let Statement::Call { receiver, args, .. } = &test.statements[focal] else {
        unreachable!("focal_statement returns calls");
    };
    let MethodRef::Method(unit, _) = contract.method else {
        return Err(EmitError::NoFocalCall(contract.id.clone()));
    };
    let lines = test.render(program);
    let names = test.var_names(program);
    let scope = Scope {
        program,
        ret: names[focal].clone(),
        names,
        receiver: *receiver,
        args,
    };

    let mut body = vec![format!("void {name}() {{")];
    body.extend(lines[..focal].iter().map(|l| format!("  {l}")));
    if assume {
        let pre: Vec<&Contract> = extraction.preconditions_of(contract.method).collect();
        for t in pre.iter().flat_map(|p| p.guard.iter()).chain(&contract.guard) {
            body.push(format!("  assume({});", scope.term(t, unit)));
        }
    }
    let exceptions: Vec<&str> = contract.assert.iter().filter_map(exception_of).collect();
    if let Some(ex) = exceptions.first() {
        body.push("  try {".into());
        body.push(format!("    {}", lines[focal]));
        body.push(format!("    fail(\"Expected {ex}\");"));
        body.push(format!("  }} catch ({ex} e) {{ /* ok */ }}"));
    } else {
        body.push(format!("  {}", lines[focal]));
        for t in &contract.assert {
            body.push(format!("  {}", scope.assertion(t, unit)));
        }
    }
    body.push("}".into());

    Ok(EmittedTest {
        name: name.to_string(),
        unit: program.units[unit].name.clone(),
        focal_contract: contract.id.clone(),
        contract_text: contract.source.raw(),
        outcome,
        expected: match outcome {
            SolutionKind::Violating => Expected::Alarm,
            SolutionKind::Satisfying => Expected::Pass,
        },
        body,
        test: test.truncated(focal + 1),
    })
}

/// Emits every selection, named per [`name_contracts`].
pub fn emit_suite(
    program: &SubjectProgram,
    extraction: &Extraction,
    selections: &[Selection],
    assume: bool,
) -> Result<Vec<EmittedTest>, EmitError> {
    let names = name_contracts(extraction);
    selections
        .iter()
        .map(|s| {
            let contract = extraction
                .find(&s.contract)
                .ok_or_else(|| EmitError::UnknownContract(s.contract.clone()))?;
            let name = names
                .iter()
                .find(|(id, _)| *id == s.contract)
                .map(|(_, n)| n.clone())
                .expect("every contract is named");
            attach_oracle(program, extraction, &s.test, contract, s.outcome, &name, assume)
        })
        .collect()
}

#[derive(Serialize)]
struct ManifestEntry<'a> {
    name: &'a str,
    file: String,
    focal_contract: &'a str,
    contract: &'a str,
    outcome: SolutionKind,
    expected: Expected,
    statements: Vec<String>,
}

/// Writes `<unit>/<name>.subtest` files plus one `<unit>/manifest.json` per unit.
pub fn write_suite(program: &SubjectProgram, dir: &Path, tests: &[EmittedTest]) -> Result<(), EmitError> {
    let mut units: Vec<&str> = tests.iter().map(|t| t.unit.as_str()).collect();
    units.sort_unstable();
    units.dedup();
    for unit in units {
        let udir = dir.join(unit);
        fs::create_dir_all(&udir)?;
        let mut manifest = Vec::new();
        for t in tests.iter().filter(|t| t.unit == unit) {
            let file = format!("{}.subtest", t.name);
            let mut text = format!(
                "// focal: {}\n// contract: {}\n// expected: {}\n",
                t.focal_contract,
                t.contract_text,
                match t.expected {
                    Expected::Pass => "pass",
                    Expected::Alarm => "alarm",
                }
            );
            for l in &t.body {
                text.push_str(l);
                text.push('\n');
            }
            fs::write(udir.join(&file), text)?;
            manifest.push(ManifestEntry {
                name: &t.name,
                file,
                focal_contract: &t.focal_contract,
                contract: &t.contract_text,
                outcome: t.outcome,
                expected: t.expected,
                statements: t.test.render(program),
            });
        }
        let mut json = serde_json::to_string_pretty(&manifest).map_err(io::Error::other)?;
        json.push('\n');
        fs::write(udir.join("manifest.json"), json)?;
    }
    Ok(())
}

/// Re-executes an emitted test: every statement before the focal call must
/// complete normally, and the oracle at the focal call must pass for `pass`
/// tests and fail for `alarm` tests.
pub fn verify_emitted(program: &SubjectProgram, extraction: &Extraction, t: &EmittedTest) -> Result<(), String> {
    let contract = extraction
        .find(&t.focal_contract)
        .ok_or_else(|| format!("unknown contract {}", t.focal_contract))?;
    let focal = focal_statement(&t.test, contract.method).ok_or("no focal call")?;
    let opts = ExecOptions {
        watch: Watch::Methods(vec![contract.method]),
        ..ExecOptions::default()
    };
    let trace = execute_test(program, &t.test, &opts);
    for (i, st) in trace.statements[..focal].iter().enumerate() {
        if !matches!(st, StatementStatus::Ok(_)) {
            return Err(format!("{}: statement {i} did not complete: {st:?}", t.name));
        }
    }
    let call = trace
        .top_level_calls(contract.method)
        .find(|c| c.statement == focal)
        .ok_or("focal call not recorded")?;
    let view = Evaluator::view(call).ok_or("focal call has no snapshot")?;
    let pre: Vec<&Contract> = extraction.preconditions_of(contract.method).collect();
    let verdict = oracle_verdict(program, contract, &pre, &view);
    let ok = match t.expected {
        Expected::Pass => verdict == OracleVerdict::Pass,
        Expected::Alarm => verdict == OracleVerdict::Alarm,
    };
    if ok {
        Ok(())
    } else {
        Err(format!("{}: expected {:?}, oracle says {verdict:?}", t.name, t.expected))
    }
}
