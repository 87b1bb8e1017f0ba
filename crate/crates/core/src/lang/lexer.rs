use super::ast::Pos;
use super::LangError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    /// Body of a `/** ... */` comment and the line it starts on.
    Doc(String, u32),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

const PUNCT: &[&str] = &[
    "==", "!=", "<=", ">=", "&&", "||", "{", "}", "(", ")", ";", ",", ".", "=", "<", ">", "+", "-",
    "*", "/", "%", "!",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, LangError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1u32;
    let mut col = 1u32;

    macro_rules! advance {
        ($n:expr) => {{
            for _ in 0..$n {
                if bytes[i] == b'\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                i += 1;
            }
        }};
    }

    while i < bytes.len() {
        let c = bytes[i];
        let pos = Pos { line, col };
        if c.is_ascii_whitespace() {
            advance!(1);
            continue;
        }
        if src[i..].starts_with("//") {
            while i < bytes.len() && bytes[i] != b'\n' {
                advance!(1);
            }
            continue;
        }
        if src[i..].starts_with("/*") {
            let is_doc = src[i..].starts_with("/**") && !src[i..].starts_with("/**/");
            let Some(end) = src[i + 2..].find("*/") else {
                return Err(LangError::Syntax {
                    pos,
                    message: "unterminated comment".into(),
                });
            };
            let body_start = if is_doc { i + 3 } else { i + 2 };
            let body_end = i + 2 + end;
            let body = src[body_start..body_end].to_string();
            let total = body_end + 2 - i;
            advance!(total);
            if is_doc {
                out.push(Token {
                    tok: Tok::Doc(body, pos.line),
                    pos,
                });
            }
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                advance!(1);
            }
            let text = &src[start..i];
            let value = text.parse::<i64>().map_err(|_| LangError::Syntax {
                pos,
                message: format!("integer literal out of range: {text}"),
            })?;
            out.push(Token {
                tok: Tok::Int(value),
                pos,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                advance!(1);
            }
            out.push(Token {
                tok: Tok::Ident(src[start..i].to_string()),
                pos,
            });
            continue;
        }
        match PUNCT.iter().find(|p| src[i..].starts_with(**p)) {
            Some(p) => {
                advance!(p.len());
                out.push(Token {
                    tok: Tok::Punct(p),
                    pos,
                });
            }
            None => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(LangError::Syntax {
                    pos,
                    message: format!("unexpected character '{ch}'"),
                });
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: Pos { line, col },
    });
    Ok(out)
}
