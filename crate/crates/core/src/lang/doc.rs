//! Doc comments: `/** ... */` blocks with `@param`, `@throws` and `@return` tags.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TagKind {
    Param,
    Throws,
    Return,
}

impl TagKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TagKind::Param => "@param",
            TagKind::Throws => "@throws",
            TagKind::Return => "@return",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DocTag {
    pub kind: TagKind,
    /// Parameter name for `@param`, exception name for `@throws`, empty for `@return`.
    pub target: String,
    /// Remaining text, continuation lines joined with single spaces.
    pub text: String,
    pub line: u32,
}

impl DocTag {
    /// The tag as it appeared, normalized to one line.
    pub fn raw(&self) -> String {
        if self.target.is_empty() {
            format!("{} {}", self.kind.as_str(), self.text)
        } else {
            format!("{} {} {}", self.kind.as_str(), self.target, self.text)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DocComment {
    pub raw: String,
    pub description: String,
    pub tags: Vec<DocTag>,
}

/// Parses the inside of a `/** ... */` block. `first_line` is the source line
/// of the opening delimiter. Unknown tags (e.g. `@see`) end the previous tag
/// and are otherwise ignored.
pub fn parse_doc_comment(body: &str, first_line: u32) -> DocComment {
    let mut description = Vec::new();
    let mut tags: Vec<DocTag> = Vec::new();
    let mut in_unknown_tag = false;

    for (offset, raw_line) in body.lines().enumerate() {
        let line = strip_margin(raw_line);
        if line.is_empty() {
            continue;
        }
        let line_no = first_line + offset as u32;
        if let Some(rest) = line.strip_prefix('@') {
            let (name, after) = split_word(rest);
            let kind = match name {
                "param" => Some(TagKind::Param),
                "throws" | "exception" => Some(TagKind::Throws),
                "return" | "returns" => Some(TagKind::Return),
                _ => None,
            };
            match kind {
                Some(kind) => {
                    in_unknown_tag = false;
                    let (target, text) = match kind {
                        TagKind::Return => (String::new(), after.trim().to_string()),
                        _ => {
                            let (t, rest) = split_word(after.trim_start());
                            (t.to_string(), rest.trim().to_string())
                        }
                    };
                    tags.push(DocTag {
                        kind,
                        target,
                        text,
                        line: line_no,
                    });
                }
                None => in_unknown_tag = true,
            }
        } else if in_unknown_tag {
            continue;
        } else if let Some(tag) = tags.last_mut() {
            if !tag.text.is_empty() {
                tag.text.push(' ');
            }
            tag.text.push_str(line);
        } else {
            description.push(line.to_string());
        }
    }

    DocComment {
        raw: body.to_string(),
        description: description.join(" "),
        tags,
    }
}

fn strip_margin(line: &str) -> &str {
    let t = line.trim();
    let t = t.strip_prefix('*').unwrap_or(t);
    t.trim()
}

fn split_word(s: &str) -> (&str, &str) {
    match s.find(char::is_whitespace) {
        Some(i) => (&s[..i], &s[i..]),
        None => (s, ""),
    }
}
