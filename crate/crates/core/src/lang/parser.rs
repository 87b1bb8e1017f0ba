use super::ast::*;
use super::doc::parse_doc_comment;
use super::lexer::{tokenize, Tok, Token};
use super::LangError;

pub(super) struct Parsed {
    pub units: Vec<UnitDecl>,
    pub exceptions: Vec<ExceptionDecl>,
    pub branch_count: u32,
}

pub(super) fn parse(src: &str) -> Result<Parsed, LangError> {
    let tokens = tokenize(src)?;
    let mut p = Parser {
        tokens,
        at: 0,
        next_branch: 0,
    };
    p.program()
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
    next_branch: BranchId,
}

type PResult<T> = Result<T, LangError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.at].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.at + n).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn pos(&self) -> Pos {
        self.tokens[self.at].pos
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.at].clone();
        if self.at < self.tokens.len() - 1 {
            self.at += 1;
        }
        t
    }

    fn err<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(LangError::Syntax {
            pos: self.pos(),
            message: message.into(),
        })
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            self.err(format!("expected '{p}', found {}", describe(self.peek())))
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> PResult<()> {
        if self.is_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected '{kw}', found {}", describe(self.peek())))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_reserved(&s) => {
                self.bump();
                Ok(s)
            }
            other => self.err(format!("expected identifier, found {}", describe(&other))),
        }
    }

    fn program(&mut self) -> PResult<Parsed> {
        let mut units = Vec::new();
        let mut exceptions = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Eof => break,
                Tok::Doc(..) => {
                    // stray doc comment before a declaration
                    self.bump();
                }
                Tok::Ident(kw) if kw == "exception" => {
                    let pos = self.pos();
                    self.bump();
                    let name = self.ident()?;
                    let parent = if self.is_keyword("extends") {
                        self.bump();
                        Some(self.ident()?)
                    } else {
                        None
                    };
                    self.expect_punct(";")?;
                    exceptions.push(ExceptionDecl { name, parent, pos });
                }
                Tok::Ident(kw) if kw == "class" => units.push(self.unit()?),
                other => return self.err(format!("expected 'class' or 'exception', found {}", describe(&other))),
            }
        }
        Ok(Parsed {
            units,
            exceptions,
            branch_count: self.next_branch,
        })
    }

    fn unit(&mut self) -> PResult<UnitDecl> {
        let pos = self.pos();
        self.expect_keyword("class")?;
        let name = self.ident()?;
        self.expect_punct("{")?;
        let mut fields = Vec::new();
        let mut ctor: Option<MethodDecl> = None;
        let mut methods = Vec::new();
        while !self.eat_punct("}") {
            if matches!(self.peek(), Tok::Eof) {
                return self.err(format!("unterminated class '{name}'"));
            }
            let doc = match self.peek().clone() {
                Tok::Doc(body, line) => {
                    self.bump();
                    Some(parse_doc_comment(&body, line))
                }
                _ => None,
            };
            if matches!(self.peek(), Tok::Doc(..)) {
                continue;
            }
            while matches!(self.peek(), Tok::Ident(s) if s == "private" || s == "public") {
                self.bump();
            }
            let member_pos = self.pos();
            // constructor: `Name(`
            if matches!(self.peek(), Tok::Ident(s) if *s == name) && matches!(self.peek_at(1), Tok::Punct("(")) {
                self.bump();
                let params = self.params()?;
                let body = self.block()?;
                if ctor.is_some() {
                    return Err(LangError::DuplicateName {
                        pos: member_pos,
                        name: format!("{name}.<init>"),
                    });
                }
                ctor = Some(MethodDecl {
                    name: name.clone(),
                    params,
                    ret: Type::Void,
                    body,
                    doc,
                    throws: Vec::new(),
                    pos: member_pos,
                });
                continue;
            }
            let ty = self.ty()?;
            let member = self.ident()?;
            if self.eat_punct(";") {
                fields.push(FieldDecl {
                    name: member,
                    ty,
                    pos: member_pos,
                });
                continue;
            }
            let params = self.params()?;
            let mut throws = Vec::new();
            if self.is_keyword("throws") {
                self.bump();
                throws.push(self.ident()?);
                while self.eat_punct(",") {
                    throws.push(self.ident()?);
                }
            }
            let body = self.block()?;
            methods.push(MethodDecl {
                name: member,
                params,
                ret: ty,
                body,
                doc,
                throws,
                pos: member_pos,
            });
        }
        Ok(UnitDecl {
            name,
            fields,
            ctor,
            methods,
            pos,
        })
    }

    fn ty(&mut self) -> PResult<Type> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let t = match s.as_str() {
                    "int" => Type::Int,
                    "bool" | "boolean" => Type::Bool,
                    "void" => Type::Void,
                    "list" => Type::List,
                    _ if is_reserved(&s) => return self.err(format!("expected type, found '{s}'")),
                    _ => Type::Unit(s),
                };
                self.bump();
                Ok(t)
            }
            other => self.err(format!("expected type, found {}", describe(&other))),
        }
    }

    fn params(&mut self) -> PResult<Vec<Param>> {
        self.expect_punct("(")?;
        let mut out = Vec::new();
        if self.eat_punct(")") {
            return Ok(out);
        }
        loop {
            let ty = self.ty()?;
            let name = self.ident()?;
            out.push(Param { name, ty });
            if self.eat_punct(")") {
                return Ok(out);
            }
            self.expect_punct(",")?;
        }
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect_punct("{")?;
        let mut out = Vec::new();
        while !self.eat_punct("}") {
            if matches!(self.peek(), Tok::Eof) {
                return self.err("unterminated block");
            }
            self.stmt_into(&mut out)?;
        }
        Ok(out)
    }

    /// Either a braced block or a single statement.
    fn body(&mut self) -> PResult<Vec<Stmt>> {
        if self.is_punct("{") {
            self.block()
        } else {
            let mut out = Vec::new();
            self.stmt_into(&mut out)?;
            Ok(out)
        }
    }

    fn fresh_branch(&mut self) -> BranchId {
        let id = self.next_branch;
        self.next_branch += 1;
        id
    }

    fn stmt_into(&mut self, out: &mut Vec<Stmt>) -> PResult<()> {
        let pos = self.pos();
        if self.is_punct("{") {
            let inner = self.block()?;
            out.extend(inner);
            return Ok(());
        }
        if let Tok::Doc(..) = self.peek() {
            self.bump();
            return Ok(());
        }
        if self.is_keyword("if") {
            self.bump();
            let id = self.fresh_branch();
            self.expect_punct("(")?;
            let cond = self.expr()?;
            self.expect_punct(")")?;
            let then_body = self.body()?;
            let else_body = if self.is_keyword("else") {
                self.bump();
                self.body()?
            } else {
                Vec::new()
            };
            out.push(Stmt::If {
                id,
                cond,
                then_body,
                else_body,
                pos,
            });
            return Ok(());
        }
        if self.is_keyword("while") {
            self.bump();
            let id = self.fresh_branch();
            self.expect_punct("(")?;
            let cond = self.expr()?;
            self.expect_punct(")")?;
            let body = self.body()?;
            out.push(Stmt::While { id, cond, body, pos });
            return Ok(());
        }
        if self.is_keyword("return") {
            self.bump();
            let value = if self.is_punct(";") { None } else { Some(self.expr()?) };
            self.expect_punct(";")?;
            out.push(Stmt::Return { value, pos });
            return Ok(());
        }
        if self.is_keyword("throw") {
            self.bump();
            self.expect_keyword("new")?;
            let exception = self.ident()?;
            self.expect_punct("(")?;
            self.expect_punct(")")?;
            self.expect_punct(";")?;
            out.push(Stmt::Throw { exception, pos });
            return Ok(());
        }
        // local declaration: `Type name = ...;`
        if let (Tok::Ident(t), Tok::Ident(n)) = (self.peek().clone(), self.peek_at(1).clone()) {
            if (!is_reserved(&t) || matches!(t.as_str(), "int" | "bool" | "boolean" | "list")) && !is_reserved(&n) {
                let ty = self.ty()?;
                let name = self.ident()?;
                self.expect_punct("=")?;
                let init = self.expr()?;
                self.expect_punct(";")?;
                out.push(Stmt::VarDecl { ty, name, init, pos });
                return Ok(());
            }
        }
        // assignment to `this.f` or a bare name
        if self.is_keyword("this") && matches!(self.peek_at(1), Tok::Punct(".")) && matches!(self.peek_at(3), Tok::Punct("=")) {
            self.bump();
            self.bump();
            let name = self.ident()?;
            self.expect_punct("=")?;
            let value = self.expr()?;
            self.expect_punct(";")?;
            out.push(Stmt::Assign {
                target: LValue::Field(name),
                value,
                pos,
            });
            return Ok(());
        }
        if let Tok::Ident(n) = self.peek().clone() {
            if !is_reserved(&n) && matches!(self.peek_at(1), Tok::Punct("=")) {
                self.bump();
                self.bump();
                let value = self.expr()?;
                self.expect_punct(";")?;
                out.push(Stmt::Assign {
                    target: LValue::Name(n),
                    value,
                    pos,
                });
                return Ok(());
            }
        }
        let expr = self.expr()?;
        self.expect_punct(";")?;
        out.push(Stmt::Expr { expr, pos });
        Ok(())
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.binary(0)
    }

    fn binary(&mut self, level: usize) -> PResult<Expr> {
        const LEVELS: &[&[(&str, BinOp)]] = &[
            &[("||", BinOp::Or)],
            &[("&&", BinOp::And)],
            &[("==", BinOp::Eq), ("!=", BinOp::Ne)],
            &[("<=", BinOp::Le), (">=", BinOp::Ge), ("<", BinOp::Lt), (">", BinOp::Gt)],
            &[("+", BinOp::Add), ("-", BinOp::Sub)],
            &[("*", BinOp::Mul), ("/", BinOp::Div), ("%", BinOp::Rem)],
        ];
        if level == LEVELS.len() {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        loop {
            let pos = self.pos();
            let op = LEVELS[level]
                .iter()
                .find(|(p, _)| self.is_punct(p))
                .map(|(_, op)| *op);
            let Some(op) = op else { break };
            self.bump();
            let rhs = self.binary(level + 1)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs), pos);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        if self.eat_punct("!") {
            return Ok(Expr::Unary(UnOp::Not, Box::new(self.unary()?), pos));
        }
        if self.eat_punct("-") {
            if let Tok::Int(v) = self.peek().clone() {
                self.bump();
                return self.postfix(Expr::Int(-v, pos));
            }
            return Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?), pos));
        }
        let primary = self.primary()?;
        self.postfix(primary)
    }

    fn postfix(&mut self, mut e: Expr) -> PResult<Expr> {
        while self.is_punct(".") {
            let pos = self.pos();
            self.bump();
            let name = self.ident()?;
            if self.is_punct("(") {
                let args = self.args()?;
                e = Expr::Call {
                    receiver: Some(Box::new(e)),
                    method: name,
                    args,
                    pos,
                };
            } else if matches!(e, Expr::This(_)) {
                e = Expr::Field(name, pos);
            } else {
                return Err(LangError::Syntax {
                    pos,
                    message: format!("field '{name}' can only be accessed through 'this'"),
                });
            }
        }
        Ok(e)
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect_punct("(")?;
        let mut out = Vec::new();
        if self.eat_punct(")") {
            return Ok(out);
        }
        loop {
            out.push(self.expr()?);
            if self.eat_punct(")") {
                return Ok(out);
            }
            self.expect_punct(",")?;
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Int(v, pos))
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Ident(s) => match s.as_str() {
                "true" => {
                    self.bump();
                    Ok(Expr::Bool(true, pos))
                }
                "false" => {
                    self.bump();
                    Ok(Expr::Bool(false, pos))
                }
                "null" => {
                    self.bump();
                    Ok(Expr::Null(pos))
                }
                "this" => {
                    self.bump();
                    Ok(Expr::This(pos))
                }
                "new" => {
                    self.bump();
                    if self.is_keyword("list") {
                        self.bump();
                        self.expect_punct("(")?;
                        self.expect_punct(")")?;
                        return Ok(Expr::NewList(pos));
                    }
                    let unit = self.ident()?;
                    let args = self.args()?;
                    Ok(Expr::New { unit, args, pos })
                }
                _ if is_reserved(&s) => self.err(format!("unexpected keyword '{s}'")),
                _ => {
                    self.bump();
                    if self.is_punct("(") {
                        let args = self.args()?;
                        Ok(Expr::Call {
                            receiver: None,
                            method: s,
                            args,
                            pos,
                        })
                    } else {
                        Ok(Expr::Name(s, pos))
                    }
                }
            },
            other => self.err(format!("expected expression, found {}", describe(&other))),
        }
    }
}

fn is_reserved(s: &str) -> bool {
    matches!(
        s,
        "class"
            | "exception"
            | "extends"
            | "if"
            | "else"
            | "while"
            | "return"
            | "throw"
            | "throws"
            | "new"
            | "this"
            | "null"
            | "true"
            | "false"
            | "int"
            | "bool"
            | "boolean"
            | "void"
            | "list"
    )
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("'{s}'"),
        Tok::Int(v) => format!("'{v}'"),
        Tok::Doc(..) => "doc comment".into(),
        Tok::Punct(p) => format!("'{p}'"),
        Tok::Eof => "end of input".into(),
    }
}
