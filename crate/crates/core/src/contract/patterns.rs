//! The pattern table: `PATTERN => TERM-TEMPLATE` rules grouped by section.

use std::sync::OnceLock;

use thiserror::Error;

use super::{Literal, Op};

pub const DEFAULT_PATTERNS: &str = include_str!("../../patterns.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Section {
    /// `@param` text; `{self}` is the parameter.
    Param,
    /// Conditions after `if` in `@throws` and `@return`.
    Condition,
    /// The asserted part of `@return`; `{ret}` is the return value.
    Return,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum PTok {
    Word(String),
    /// `{a}`, `{b}`, `{c}`: a noun phrase.
    Noun(String),
    Verb,
    Adj,
    Num,
    /// `{_}`: any number of words, ignored.
    Any,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum TMethod {
    /// `{verb}`
    Verb,
    /// `is{adj}`
    IsAdj,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum TExpr {
    Slot(String),
    Num,
    Lit(Literal),
    Call {
        receiver: String,
        method: TMethod,
        args: Vec<TExpr>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct TTerm {
    pub lhs: TExpr,
    pub op: Op,
    pub rhs: TExpr,
}

#[derive(Debug, Clone)]
pub struct Rule {
    pub section: Section,
    pub line: usize,
    pub text: String,
    pub low: bool,
    pub(crate) pattern: Vec<PTok>,
    pub(crate) template: Vec<TTerm>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("pattern table line {line}: {message}")]
pub struct TableError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct PatternTable {
    pub rules: Vec<Rule>,
}

impl PatternTable {
    pub fn parse(src: &str) -> Result<PatternTable, TableError> {
        let mut section = None;
        let mut rules = Vec::new();
        for (i, raw) in src.lines().enumerate() {
            let line = i + 1;
            let text = raw.trim();
            if text.is_empty() || text.starts_with('#') {
                continue;
            }
            let err = |message: String| TableError { line, message };
            if let Some(name) = text.strip_prefix('[').and_then(|t| t.strip_suffix(']')) {
                section = Some(match name {
                    "param" => Section::Param,
                    "condition" => Section::Condition,
                    "return" => Section::Return,
                    other => return Err(err(format!("unknown section '{other}'"))),
                });
                continue;
            }
            let Some(section) = section else {
                return Err(err("rule outside of a section".into()));
            };
            let Some((pat, tpl)) = text.split_once("=>") else {
                return Err(err("expected 'PATTERN => TEMPLATE'".into()));
            };
            let mut tpl = tpl.trim();
            let low = tpl.ends_with("[low]");
            if low {
                tpl = tpl.trim_end_matches("[low]").trim();
            }
            let pattern = parse_pattern(pat).map_err(err)?;
            let template = tpl
                .split("&&")
                .map(|t| parse_tterm(t.trim()))
                .collect::<Result<Vec<_>, _>>()
                .map_err(err)?;
            rules.push(Rule {
                section,
                line,
                text: text.to_string(),
                low,
                pattern,
                template,
            });
        }
        Ok(PatternTable { rules })
    }

    /// The table shipped with the crate.
    pub fn builtin() -> &'static PatternTable {
        static TABLE: OnceLock<PatternTable> = OnceLock::new();
        TABLE.get_or_init(|| PatternTable::parse(DEFAULT_PATTERNS).expect("bundled pattern table is valid"))
    }

    pub fn section(&self, s: Section) -> impl Iterator<Item = &Rule> {
        self.rules.iter().filter(move |r| r.section == s)
    }

    /// Every literal word used by some pattern.
    pub(crate) fn vocabulary(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self
            .rules
            .iter()
            .flat_map(|r| r.pattern.iter())
            .filter_map(|t| match t {
                PTok::Word(w) => Some(w.as_str()),
                _ => None,
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

fn parse_pattern(p: &str) -> Result<Vec<PTok>, String> {
    let mut out = Vec::new();
    for w in p.split_whitespace() {
        out.push(match w {
            "{_}" => PTok::Any,
            "{verb}" => PTok::Verb,
            "{adj}" => PTok::Adj,
            "{n}" => PTok::Num,
            _ if w.starts_with('{') => {
                let name = w
                    .strip_prefix('{')
                    .and_then(|x| x.strip_suffix('}'))
                    .filter(|x| !x.is_empty() && x.chars().all(|c| c.is_ascii_lowercase()))
                    .ok_or_else(|| format!("bad placeholder '{w}'"))?;
                if name == "self" || name == "ret" {
                    return Err(format!("'{w}' cannot appear in a pattern"));
                }
                PTok::Noun(name.to_string())
            }
            _ => PTok::Word(w.to_lowercase()),
        });
    }
    if out.is_empty() {
        return Err("empty pattern".into());
    }
    Ok(out)
}

fn parse_tterm(t: &str) -> Result<TTerm, String> {
    let parts: Vec<&str> = t.split_whitespace().collect();
    let [lhs, op, rhs] = parts.as_slice() else {
        return Err(format!("template term '{t}' must be 'LHS OP RHS'"));
    };
    let op = Op::from_symbol(op).ok_or_else(|| format!("unknown operator '{op}'"))?;
    Ok(TTerm {
        lhs: parse_texpr(lhs)?,
        op,
        rhs: parse_texpr(rhs)?,
    })
}

fn parse_texpr(s: &str) -> Result<TExpr, String> {
    if let Some(rest) = s.strip_prefix('{') {
        let Some(close) = rest.find('}') else {
            return Err(format!("unclosed placeholder in '{s}'"));
        };
        let name = &rest[..close];
        let after = &rest[close + 1..];
        if after.is_empty() {
            return Ok(if name == "n" {
                TExpr::Num
            } else {
                TExpr::Slot(name.to_string())
            });
        }
        let call = after
            .strip_prefix('.')
            .ok_or_else(|| format!("unexpected text after placeholder in '{s}'"))?;
        let open = call.find('(').ok_or_else(|| format!("call without arguments in '{s}'"))?;
        let inner = call[open + 1..]
            .strip_suffix(')')
            .ok_or_else(|| format!("unclosed call in '{s}'"))?;
        let method = match &call[..open] {
            "{verb}" => TMethod::Verb,
            "is{adj}" => TMethod::IsAdj,
            other => return Err(format!("unknown method template '{other}'")),
        };
        let args = if inner.trim().is_empty() {
            Vec::new()
        } else {
            inner
                .split(',')
                .map(|a| parse_texpr(a.trim()))
                .collect::<Result<Vec<_>, _>>()?
        };
        return Ok(TExpr::Call {
            receiver: name.to_string(),
            method,
            args,
        });
    }
    Ok(TExpr::Lit(match s {
        "null" => Literal::Null,
        "true" => Literal::Bool(true),
        "false" => Literal::Bool(false),
        _ => Literal::Int(s.parse().map_err(|_| format!("bad literal '{s}'"))?),
    }))
}

/// Words bound by one match of a pattern.
#[derive(Debug, Clone, Default)]
pub(crate) struct Binding {
    pub nouns: Vec<(String, Vec<String>)>,
    pub verb: Option<String>,
    pub adj: Option<String>,
    pub num: Option<String>,
}

impl Binding {
    pub fn noun(&self, name: &str) -> Option<&[String]> {
        self.nouns.iter().find(|(n, _)| n == name).map(|(_, w)| w.as_slice())
    }
}

const MAX_NOUN_WORDS: usize = 5;

/// Calls `accept` for every way `pattern` matches `words`, in a fixed order
/// (shorter noun phrases first), until it returns true.
pub(crate) fn find_match(pattern: &[PTok], words: &[String], accept: &mut dyn FnMut(&Binding) -> bool) -> bool {
    fn go(
        pattern: &[PTok],
        words: &[String],
        b: &mut Binding,
        accept: &mut dyn FnMut(&Binding) -> bool,
    ) -> bool {
        let Some((tok, rest)) = pattern.split_first() else {
            return words.is_empty() && accept(b);
        };
        match tok {
            PTok::Word(w) => words.first() == Some(w) && go(rest, &words[1..], b, accept),
            PTok::Any => (0..=words.len()).any(|k| go(rest, &words[k..], b, accept)),
            PTok::Verb | PTok::Adj | PTok::Num => {
                let Some(first) = words.first() else {
                    return false;
                };
                let slot = match tok {
                    PTok::Verb => &mut b.verb,
                    PTok::Adj => &mut b.adj,
                    _ => &mut b.num,
                };
                let saved = slot.replace(first.clone());
                let ok = go(rest, &words[1..], b, accept);
                let slot = match tok {
                    PTok::Verb => &mut b.verb,
                    PTok::Adj => &mut b.adj,
                    _ => &mut b.num,
                };
                *slot = saved;
                ok
            }
            PTok::Noun(name) => {
                for k in 1..=words.len().min(MAX_NOUN_WORDS) {
                    b.nouns.push((name.clone(), words[..k].to_vec()));
                    let ok = go(rest, &words[k..], b, accept);
                    b.nouns.pop();
                    if ok {
                        return true;
                    }
                }
                false
            }
        }
    }
    go(pattern, words, &mut Binding::default(), accept)
}

/// Lowercased words with punctuation removed.
pub(crate) fn words(text: &str) -> Vec<String> {
    text.split(|c: char| c.is_whitespace() || matches!(c, ',' | ';' | ':' | '.' | '!' | '?' | '(' | ')' | '"'))
        .filter(|w| !w.is_empty())
        .map(|w| w.to_lowercase())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_table_parses() {
        let t = PatternTable::builtin();
        assert!(t.section(Section::Param).count() > 5);
        assert!(t.section(Section::Condition).count() > 10);
        assert!(t.section(Section::Return).count() >= 3);
    }

    #[test]
    fn rejects_malformed_rules() {
        assert!(PatternTable::parse("{a} is null => {a} == null").is_err());
        assert!(PatternTable::parse("[condition]\n{a} is null").is_err());
        assert!(PatternTable::parse("[condition]\n{a} is null => {a} === null").is_err());
        assert!(PatternTable::parse("[nope]").is_err());
    }

    #[test]
    fn template_calls_parse() {
        let t = PatternTable::parse("[condition]\n{a} {verb} {b} => {a}.{verb}({b}) == true").unwrap();
        let rule = &t.rules[0];
        assert_eq!(rule.pattern.len(), 3);
        assert!(matches!(&rule.template[0].lhs, TExpr::Call { method: TMethod::Verb, args, .. } if args.len() == 1));
    }

    #[test]
    fn matching_tries_short_nouns_first() {
        let pat = parse_pattern("{a} {verb} {b}").unwrap();
        let w = words("the drawer exceeds the limit");
        let mut seen = Vec::new();
        find_match(&pat, &w, &mut |b| {
            seen.push((b.noun("a").unwrap().join(" "), b.verb.clone().unwrap()));
            false
        });
        assert_eq!(seen[0], ("the".to_string(), "drawer".to_string()));
        assert!(seen.contains(&("the drawer".to_string(), "exceeds".to_string())));
    }
}
