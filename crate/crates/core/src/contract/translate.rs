//! Doc tags to contracts via the pattern table.

use crate::lang::doc::{DocTag, TagKind};
use crate::lang::{ListOp, MethodDecl, MethodRef, SubjectProgram, Type, UnitId};

use super::patterns::{find_match, words, Binding, PatternTable, Section, TExpr, TMethod, TTerm};
use super::{
    negate_conjunction, CExpr, Contract, ContractKind, Extraction, Literal, Op, SkipRecord, SourceTag, Term,
    TermKind,
};

const ARTICLES: &[&str] = &["the", "a", "an", "given", "specified"];

/// Names visible to a condition: the target method's parameters, the
/// receiver's fields, the receiver itself, and (for assertions) `retVal`.
#[derive(Debug, Clone, Copy)]
pub struct Scope<'a> {
    pub program: &'a SubjectProgram,
    pub unit: UnitId,
    pub method: &'a MethodDecl,
    /// Parameter bound to `{self}` while translating an `@param` tag.
    pub self_param: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Untranslatable {
    /// First word that no rule or identifier accounts for.
    pub token: String,
    pub reason: String,
}

/// Static type of a contract expression.
#[derive(Debug, Clone, PartialEq, Eq)]
enum STy {
    Int,
    Bool,
    Null,
    Ref(Type),
}

impl STy {
    fn of(t: &Type) -> Option<STy> {
        match t {
            Type::Int => Some(STy::Int),
            Type::Bool => Some(STy::Bool),
            Type::Void => None,
            other => Some(STy::Ref(other.clone())),
        }
    }
}

impl<'a> Scope<'a> {
    pub fn new(program: &'a SubjectProgram, method: MethodRef) -> Option<Scope<'a>> {
        let MethodRef::Method(unit, idx) = method else {
            return None;
        };
        Some(Scope {
            program,
            unit,
            method: &program.units[unit].methods[idx],
            self_param: None,
        })
    }

    fn resolve_noun(&self, phrase: &[String]) -> Option<(CExpr, STy)> {
        let mut phrase = phrase;
        while let Some(first) = phrase.first() {
            if phrase.len() > 1 && ARTICLES.contains(&first.as_str()) {
                phrase = &phrase[1..];
            } else {
                break;
            }
        }
        if phrase.len() == 1 {
            if let Some(lit) = literal(&phrase[0]) {
                let ty = match lit {
                    Literal::Int(_) => STy::Int,
                    Literal::Bool(_) => STy::Bool,
                    Literal::Null => STy::Null,
                };
                return Some((CExpr::Lit(lit), ty));
            }
        }
        let key: String = phrase.concat();
        if key == "this" || key == "thisobject" {
            return Some(self.this());
        }
        if let Some(i) = self.method.params.iter().position(|p| p.name.to_lowercase() == key) {
            return Some((CExpr::Param(i), STy::of(&self.method.params[i].ty)?));
        }
        let unit = &self.program.units[self.unit];
        if let Some(i) = unit.fields.iter().position(|f| f.name.to_lowercase() == key) {
            return Some((CExpr::Field(i), STy::of(&unit.fields[i].ty)?));
        }
        let uname = unit.name.to_lowercase();
        if key == uname || key == last_camel_word(&unit.name) {
            return Some(self.this());
        }
        None
    }

    fn this(&self) -> (CExpr, STy) {
        (
            CExpr::This,
            STy::Ref(Type::Unit(self.program.units[self.unit].name.clone())),
        )
    }

    fn ret(&self) -> Option<(CExpr, STy)> {
        Some((CExpr::RetVal, STy::of(&self.method.ret)?))
    }

    fn instantiate_expr(&self, t: &TExpr, b: &Binding, section: Section) -> Option<(CExpr, STy)> {
        match t {
            TExpr::Lit(l) => Some((
                CExpr::Lit(*l),
                match l {
                    Literal::Int(_) => STy::Int,
                    Literal::Bool(_) => STy::Bool,
                    Literal::Null => STy::Null,
                },
            )),
            TExpr::Num => match literal(b.num.as_deref()?)? {
                Literal::Int(n) => Some((CExpr::Lit(Literal::Int(n)), STy::Int)),
                _ => None,
            },
            TExpr::Slot(name) => self.slot(name, b, section),
            TExpr::Call {
                receiver,
                method,
                args,
            } => {
                let (recv, rty) = self.slot(receiver, b, section)?;
                let args: Vec<(CExpr, STy)> = args
                    .iter()
                    .map(|a| self.instantiate_expr(a, b, section))
                    .collect::<Option<_>>()?;
                let candidates: Vec<String> = match method {
                    TMethod::Verb => {
                        let v = b.verb.as_deref()?;
                        let mut c = vec![v.to_string()];
                        if let Some(s) = v.strip_suffix('s') {
                            c.push(s.to_string());
                        }
                        c.push(format!("{v}s"));
                        c
                    }
                    TMethod::IsAdj => vec![format!("is{}", b.adj.as_deref()?)],
                };
                let (mref, params, ret) = self.lookup_method(&rty, &candidates, args.len())?;
                for ((_, aty), p) in args.iter().zip(&params) {
                    if matches!(p, Some(p) if !assignable(p, aty)) {
                        return None;
                    }
                }
                Some((
                    CExpr::Call {
                        receiver: Box::new(recv),
                        method: mref,
                        args: args.into_iter().map(|(e, _)| e).collect(),
                    },
                    STy::of(&ret)?,
                ))
            }
        }
    }

    fn slot(&self, name: &str, b: &Binding, section: Section) -> Option<(CExpr, STy)> {
        match name {
            "self" => {
                let i = self.self_param?;
                Some((CExpr::Param(i), STy::of(&self.method.params[i].ty)?))
            }
            "ret" if section == Section::Return => self.ret(),
            "ret" => None,
            _ => self.resolve_noun(b.noun(name)?),
        }
    }

    /// Finds a method on the receiver type by candidate names; parameter
    /// types are `None` for list element slots.
    fn lookup_method(
        &self,
        recv: &STy,
        candidates: &[String],
        arity: usize,
    ) -> Option<(MethodRef, Vec<Option<STy>>, Type)> {
        match recv {
            STy::Ref(Type::Unit(uname)) => {
                let u = self.program.unit_id(uname)?;
                let unit = &self.program.units[u];
                for c in candidates {
                    if let Some(i) = unit.methods.iter().position(|m| m.name.to_lowercase() == *c) {
                        let m = &unit.methods[i];
                        if m.params.len() != arity {
                            continue;
                        }
                        let params = m.params.iter().map(|p| STy::of(&p.ty)).collect();
                        return Some((MethodRef::Method(u, i), params, m.ret.clone()));
                    }
                }
                None
            }
            STy::Ref(Type::List) => {
                for c in candidates {
                    if let Some(op) = ListOp::from_name(c) {
                        if op.arity() == arity && op != ListOp::Add {
                            return Some((MethodRef::List(op), vec![None; arity], op.return_type()));
                        }
                    }
                }
                None
            }
            _ => None,
        }
    }

    fn instantiate(&self, tpl: &[TTerm], b: &Binding, section: Section) -> Option<Vec<Term>> {
        tpl.iter()
            .map(|t| {
                let (lhs, lt) = self.instantiate_expr(&t.lhs, b, section)?;
                let (rhs, rt) = self.instantiate_expr(&t.rhs, b, section)?;
                let kind = term_kind(t.op, &lt, &rt)?;
                Some(Term { lhs, op: t.op, rhs, kind })
            })
            .collect()
    }
}

fn assignable(param: &STy, arg: &STy) -> bool {
    match (param, arg) {
        (a, b) if a == b => true,
        (STy::Ref(_), STy::Null) => true,
        _ => false,
    }
}

fn term_kind(op: Op, l: &STy, r: &STy) -> Option<TermKind> {
    match op {
        Op::Lt | Op::Le | Op::Gt | Op::Ge => (*l == STy::Int && *r == STy::Int).then_some(TermKind::Numeric),
        Op::Eq | Op::Ne => match (l, r) {
            (STy::Int, STy::Int) => Some(TermKind::Numeric),
            (STy::Bool, STy::Bool) => Some(TermKind::Boolean),
            (STy::Ref(a), STy::Ref(b)) if a == b => Some(TermKind::Reference),
            (STy::Ref(_), STy::Null) | (STy::Null, STy::Ref(_)) => Some(TermKind::Reference),
            _ => None,
        },
        Op::InstanceOf | Op::NotInstanceOf => None,
    }
}

fn literal(w: &str) -> Option<Literal> {
    Some(match w {
        "null" => Literal::Null,
        "true" => Literal::Bool(true),
        "false" => Literal::Bool(false),
        "zero" => Literal::Int(0),
        "one" => Literal::Int(1),
        _ => Literal::Int(w.parse().ok()?),
    })
}

fn last_camel_word(name: &str) -> String {
    let start = name
        .char_indices()
        .filter(|(_, c)| c.is_ascii_uppercase())
        .map(|(i, _)| i)
        .last()
        .unwrap_or(0);
    name[start..].to_lowercase()
}

/// Translates one restricted-English condition into a conjunction of terms.
/// The whole text is tried first, then its `and`-separated parts. Returns
/// the terms and whether a low-confidence rule was used.
pub fn translate_condition(
    table: &PatternTable,
    text: &str,
    scope: &Scope,
    section: Section,
) -> Result<(Vec<Term>, bool), Untranslatable> {
    let ws = words(text);
    if ws.is_empty() {
        return Err(Untranslatable {
            token: String::new(),
            reason: "empty condition".into(),
        });
    }
    if let Some(r) = translate_words(table, &ws, scope, section) {
        return Ok(r);
    }
    if section != Section::Return && ws.iter().any(|w| w == "and") {
        let mut terms = Vec::new();
        let mut low = false;
        for part in ws.split(|w| w == "and") {
            match translate_words(table, part, scope, section) {
                Some((ts, l)) => {
                    terms.extend(ts);
                    low |= l;
                }
                None => return Err(untranslatable(table, part, scope, section)),
            }
        }
        return Ok((terms, low));
    }
    Err(untranslatable(table, &ws, scope, section))
}

fn translate_words(table: &PatternTable, ws: &[String], scope: &Scope, section: Section) -> Option<(Vec<Term>, bool)> {
    if ws.is_empty() {
        return None;
    }
    for rule in table.section(section) {
        let mut found = None;
        find_match(&rule.pattern, ws, &mut |b| {
            found = scope.instantiate(&rule.template, b, section);
            found.is_some()
        });
        if let Some(terms) = found {
            return Some((terms, rule.low));
        }
    }
    None
}

fn untranslatable(table: &PatternTable, ws: &[String], scope: &Scope, section: Section) -> Untranslatable {
    let text = ws.join(" ");
    if ws.iter().any(|w| w == "or") {
        return Untranslatable {
            token: "or".into(),
            reason: format!("disjunction is not supported: '{text}'"),
        };
    }
    let vocab = table.vocabulary();
    let known = |w: &String| {
        vocab.contains(&w.as_str())
            || ARTICLES.contains(&w.as_str())
            || w == "and"
            || literal(w).is_some()
            || scope.resolve_noun(std::slice::from_ref(w)).is_some()
            || is_method_word(scope.program, w)
    };
    match ws.iter().find(|w| !known(w)) {
        Some(tok) => Untranslatable {
            token: tok.clone(),
            reason: format!("no rule matches '{text}' (first unmatched token '{tok}')"),
        },
        None => Untranslatable {
            token: text.clone(),
            reason: format!(
                "no {} rule matches '{text}'",
                match section {
                    Section::Param => "param",
                    Section::Condition => "condition",
                    Section::Return => "return",
                }
            ),
        },
    }
}

fn is_method_word(program: &SubjectProgram, w: &str) -> bool {
    let is_form = format!("is{w}");
    let stripped = w.strip_suffix('s').unwrap_or(w);
    let plural = format!("{w}s");
    ListOp::from_name(w).is_some()
        || ListOp::from_name(&plural).is_some()
        || program.units.iter().flat_map(|u| u.methods.iter()).any(|m| {
            let n = m.name.to_lowercase();
            n == w || n == is_form || n == stripped || n == plural
        })
}

/// Contracts for every documented method, in declaration order.
pub fn extract_program(program: &SubjectProgram, table: &PatternTable) -> Extraction {
    let mut out = Extraction::default();
    for m in program.all_methods() {
        let e = extract_contracts(program, m, table);
        out.contracts.extend(e.contracts);
        out.skipped.extend(e.skipped);
    }
    out
}

/// Contracts of one method: one precondition per translatable `@param`, one
/// postcondition per `@throws`, one or two per `@return`.
pub fn extract_contracts(program: &SubjectProgram, method: MethodRef, table: &PatternTable) -> Extraction {
    let mut out = Extraction::default();
    let Some(scope) = Scope::new(program, method) else {
        return out;
    };
    let Some(doc) = &scope.method.doc else {
        return out;
    };
    let method_name = program.method_name(method);
    let mut pre = 0;
    let mut post = 0;
    let mut push = |out: &mut Extraction, kind: ContractKind, guard, assert, tag: &DocTag, gt: &str, at: &str, low| {
        let id = match kind {
            ContractKind::Precondition => {
                pre += 1;
                format!("{method_name}/pre{}", pre - 1)
            }
            ContractKind::Postcondition => {
                post += 1;
                format!("{method_name}/post{}", post - 1)
            }
        };
        out.contracts.push(Contract {
            id,
            method,
            method_name: method_name.clone(),
            kind,
            guard,
            assert,
            source: source_of(tag),
            guard_text: gt.trim().to_string(),
            assert_text: at.trim().to_string(),
            low_confidence: low,
        });
    };
    let skip = |out: &mut Extraction, tag: &DocTag, reason: String| {
        out.skipped.push(SkipRecord {
            method_name: method_name.clone(),
            source: source_of(tag),
            reason,
        });
    };

    for tag in &doc.tags {
        match tag.kind {
            TagKind::Param => {
                let Some(i) = scope.method.params.iter().position(|p| p.name == tag.target) else {
                    skip(&mut out, tag, format!("unknown parameter '{}'", tag.target));
                    continue;
                };
                if tag.text.trim().is_empty() {
                    skip(&mut out, tag, "no condition".into());
                    continue;
                }
                let pscope = Scope {
                    self_param: Some(i),
                    ..scope
                };
                match translate_condition(table, &tag.text, &pscope, Section::Param) {
                    Ok((terms, low)) => push(
                        &mut out,
                        ContractKind::Precondition,
                        terms,
                        Vec::new(),
                        tag,
                        &tag.text,
                        "",
                        low,
                    ),
                    Err(u) => skip(&mut out, tag, u.reason),
                }
            }
            TagKind::Throws => {
                if !program.is_exception(&tag.target) {
                    skip(&mut out, tag, format!("unknown exception '{}'", tag.target));
                    continue;
                }
                let cond = strip_condition_word(&tag.text);
                if cond.trim().is_empty() {
                    skip(&mut out, tag, "no condition".into());
                    continue;
                }
                match translate_condition(table, cond, &scope, Section::Condition) {
                    Ok((guard, low)) => {
                        let assert = vec![Term {
                            lhs: CExpr::RetVal,
                            op: Op::InstanceOf,
                            rhs: CExpr::Exception(tag.target.clone()),
                            kind: TermKind::ExceptionType,
                        }];
                        push(
                            &mut out,
                            ContractKind::Postcondition,
                            guard,
                            assert,
                            tag,
                            cond,
                            &tag.target,
                            low,
                        );
                    }
                    Err(u) => skip(&mut out, tag, u.reason),
                }
            }
            TagKind::Return => {
                if scope.method.ret == Type::Void {
                    skip(&mut out, tag, "method returns void".into());
                    continue;
                }
                let parts = split_return(&tag.text);
                let assert = match translate_condition(table, parts.value, &scope, Section::Return) {
                    Ok(a) => a,
                    Err(u) => {
                        skip(&mut out, tag, u.reason);
                        continue;
                    }
                };
                let Some(cond) = parts.condition else {
                    push(
                        &mut out,
                        ContractKind::Postcondition,
                        Vec::new(),
                        assert.0,
                        tag,
                        "",
                        parts.value,
                        assert.1,
                    );
                    continue;
                };
                let guard = match translate_condition(table, cond, &scope, Section::Condition) {
                    Ok(g) => g,
                    Err(u) => {
                        skip(&mut out, tag, u.reason);
                        continue;
                    }
                };
                let otherwise = match parts.otherwise {
                    Some(y) => match translate_condition(table, y, &scope, Section::Return) {
                        Ok(a) => Some(a),
                        Err(u) => {
                            skip(&mut out, tag, format!("otherwise part: {}", u.reason));
                            None
                        }
                    },
                    None => None,
                };
                let negated = negate_conjunction(&guard.0);
                push(
                    &mut out,
                    ContractKind::Postcondition,
                    guard.0,
                    assert.0,
                    tag,
                    parts.guard_text,
                    parts.value,
                    guard.1 || assert.1,
                );
                if let Some((y, low)) = otherwise {
                    push(
                        &mut out,
                        ContractKind::Postcondition,
                        negated,
                        y,
                        tag,
                        parts.guard_text,
                        parts.value,
                        guard.1 || low,
                    );
                }
            }
        }
    }
    out
}

fn source_of(tag: &DocTag) -> SourceTag {
    SourceTag {
        kind: tag.kind,
        target: tag.target.clone(),
        text: tag.text.clone(),
        line: tag.line,
    }
}

fn strip_condition_word(text: &str) -> &str {
    let t = text.trim();
    for prefix in ["if", "when", "whenever", "in case", "in case that"] {
        if let Some(rest) = t.strip_prefix(prefix) {
            if rest.starts_with(char::is_whitespace) {
                return rest.trim_start();
            }
        }
    }
    t
}

struct ReturnParts<'t> {
    value: &'t str,
    condition: Option<&'t str>,
    otherwise: Option<&'t str>,
    /// Everything after `if`, used for naming.
    guard_text: &'t str,
}

/// Splits `X if C, Y otherwise` (also `X if C, otherwise Y`).
fn split_return(text: &str) -> ReturnParts<'_> {
    let t = text.trim().trim_end_matches('.');
    let lower = t.to_lowercase();
    let at = [" if ", " when "].iter().filter_map(|k| lower.find(k).map(|i| (i, k.len()))).min();
    let Some((i, klen)) = at else {
        return ReturnParts {
            value: t,
            condition: None,
            otherwise: None,
            guard_text: "",
        };
    };
    let value = &t[..i];
    let rest = &t[i + klen..];
    let rest_lower = rest.to_lowercase();
    if let Some(sep) = rest.rfind([',', ';']) {
        let tail = rest[sep + 1..].trim();
        let tail_lower = rest_lower[sep + 1..].trim().to_string();
        if let Some(y) = tail_lower.strip_suffix("otherwise") {
            return ReturnParts {
                value,
                condition: Some(rest[..sep].trim()),
                otherwise: Some(tail[..y.len()].trim()),
                guard_text: rest,
            };
        }
        if tail_lower.starts_with("otherwise ") {
            return ReturnParts {
                value,
                condition: Some(rest[..sep].trim()),
                otherwise: Some(tail["otherwise ".len()..].trim()),
                guard_text: rest,
            };
        }
    }
    ReturnParts {
        value,
        condition: Some(rest),
        otherwise: None,
        guard_text: rest,
    }
}
