// SPDX-License-Identifier: Apache-2.0

//! A small imperative language used by the bundled desk corpus.
//!
//! ```text
//! fn clamp(x, lo, hi) {
//!     if x < lo { return lo; } else if x > hi { return hi; }
//!     let acc = 0;
//!     for i in range(0, x) { acc = acc + xs[i] * 2; }
//!     while acc > 10 && !done(acc) { acc = acc / 2; }
//!     return acc;
//! }
//! ```
//!
//! [`ExprAdapter`] parses it into a type-only tree whose labels follow
//! tree-sitter naming (`function_definition`, `binary_expression`, ...);
//! operators appear as leaf nodes labelled with the operator token.
//! [`Program::render_python`] prints the same program as Python, which the
//! corpus uses as the translation target.

use std::fmt::Write as _;

use crate::error::ParseError;
use crate::tree::{NodeType, ParserAdapter, TypedTree};

pub const LANGUAGE_ID: &str = "expr";

const MAX_NESTING: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
    Rem,
}

impl BinOp {
    pub const ALL: [BinOp; 13] = [
        BinOp::Or,
        BinOp::And,
        BinOp::Eq,
        BinOp::Ne,
        BinOp::Lt,
        BinOp::Le,
        BinOp::Gt,
        BinOp::Ge,
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Div,
        BinOp::Rem,
    ];

    pub fn token(self) -> &'static str {
        match self {
            BinOp::Or => "||",
            BinOp::And => "&&",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
        }
    }

    fn python(self) -> &'static str {
        match self {
            BinOp::Or => "or",
            BinOp::And => "and",
            BinOp::Div => "//",
            other => other.token(),
        }
    }

    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 6,
        }
    }

    fn from_token(tok: &str) -> Option<BinOp> {
        BinOp::ALL.into_iter().find(|op| op.token() == tok)
    }
}

const UNARY_PRECEDENCE: u8 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

impl UnOp {
    pub fn token(self) -> &'static str {
        match self {
            UnOp::Neg => "-",
            UnOp::Not => "!",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Int(u64),
    Bool(bool),
    Var(String),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Unary(UnOp, Box<Expr>),
    Call(String, Vec<Expr>),
    Index(Box<Expr>, Box<Expr>),
    Paren(Box<Expr>),
}

impl Expr {
    /// Binding strength when printed; atoms and postfix forms bind tightest.
    pub fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(op, ..) => op.precedence(),
            Expr::Unary(..) => UNARY_PRECEDENCE,
            _ => 8,
        }
    }

    /// Builds `l op r`, parenthesizing operands that would otherwise re-associate.
    pub fn binary(op: BinOp, l: Expr, r: Expr) -> Expr {
        let p = op.precedence();
        let l = if l.precedence() < p {
            Expr::Paren(Box::new(l))
        } else {
            l
        };
        let r = if r.precedence() <= p {
            Expr::Paren(Box::new(r))
        } else {
            r
        };
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn unary(op: UnOp, e: Expr) -> Expr {
        let e = if e.precedence() < UNARY_PRECEDENCE {
            Expr::Paren(Box::new(e))
        } else {
            e
        };
        Expr::Unary(op, Box::new(e))
    }

    pub fn index(base: Expr, idx: Expr) -> Expr {
        let base = if base.precedence() < 8 {
            Expr::Paren(Box::new(base))
        } else {
            base
        };
        Expr::Index(Box::new(base), Box::new(idx))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Else {
    Block(Vec<Stmt>),
    If(Box<Stmt>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    Let(String, Expr),
    Assign(Expr, Expr),
    If(Expr, Vec<Stmt>, Option<Else>),
    While(Expr, Vec<Stmt>),
    For(String, Expr, Vec<Stmt>),
    Return(Option<Expr>),
    Expr(Expr),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Function {
    pub name: String,
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub functions: Vec<Function>,
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(u64),
    Punct(&'static str),
    Eof,
}

const PUNCT: [&str; 24] = [
    "||", "&&", "==", "!=", "<=", ">=", "<", ">", "+", "-", "*", "/", "%", "!", "=", "(", ")", "{", "}", "[", "]", ",",
    ";", ".",
];

const KEYWORDS: [&str; 10] = [
    "fn", "let", "if", "else", "while", "for", "in", "return", "true", "false",
];

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_owned()), start));
        } else if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let v = src[start..i]
                .parse()
                .map_err(|_| ParseError::syntax(start, "integer literal too large"))?;
            out.push((Tok::Int(v), start));
        } else if let Some(p) = PUNCT.iter().find(|p| src[i..].starts_with(**p)) {
            out.push((Tok::Punct(p), i));
            i += p.len();
        } else {
            let ch = src[i..].chars().next().unwrap_or('?');
            return Err(ParseError::syntax(i, format!("unexpected character {ch:?}")));
        }
    }
    out.push((Tok::Eof, src.len()));
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    depth: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(ParseError::syntax(self.offset(), msg))
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_kw(&self, kw: &str) -> bool {
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
            self.err(format!("expected '{p}'"))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected '{kw}'"))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => self.err("expected identifier"),
        }
    }

    fn enter(&mut self) -> PResult<()> {
        self.depth += 1;
        if self.depth > MAX_NESTING {
            return self.err("nesting too deep");
        }
        Ok(())
    }

    fn program(&mut self) -> PResult<Program> {
        let mut functions = Vec::new();
        while *self.peek() != Tok::Eof {
            functions.push(self.function()?);
        }
        if functions.is_empty() {
            return self.err("expected at least one function");
        }
        Ok(Program { functions })
    }

    fn function(&mut self) -> PResult<Function> {
        self.expect_kw("fn")?;
        let name = self.ident()?;
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if !self.is_punct(")") {
            loop {
                params.push(self.ident()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        let body = self.block()?;
        Ok(Function { name, params, body })
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.enter()?;
        self.expect_punct("{")?;
        let mut stmts = Vec::new();
        while !self.is_punct("}") {
            if *self.peek() == Tok::Eof {
                return self.err("unexpected end of input, expected '}'");
            }
            stmts.push(self.stmt()?);
        }
        self.bump();
        self.depth -= 1;
        Ok(stmts)
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        if self.is_kw("let") {
            self.bump();
            let name = self.ident()?;
            self.expect_punct("=")?;
            let e = self.expr()?;
            self.expect_punct(";")?;
            return Ok(Stmt::Let(name, e));
        }
        if self.is_kw("if") {
            return self.if_stmt();
        }
        if self.is_kw("while") {
            self.bump();
            let cond = self.expr()?;
            let body = self.block()?;
            return Ok(Stmt::While(cond, body));
        }
        if self.is_kw("for") {
            self.bump();
            let var = self.ident()?;
            self.expect_kw("in")?;
            let iter = self.expr()?;
            let body = self.block()?;
            return Ok(Stmt::For(var, iter, body));
        }
        if self.is_kw("return") {
            self.bump();
            if self.eat_punct(";") {
                return Ok(Stmt::Return(None));
            }
            let e = self.expr()?;
            self.expect_punct(";")?;
            return Ok(Stmt::Return(Some(e)));
        }
        let e = self.expr()?;
        if self.eat_punct("=") {
            if !matches!(e, Expr::Var(_) | Expr::Index(..)) {
                return self.err("invalid assignment target");
            }
            let rhs = self.expr()?;
            self.expect_punct(";")?;
            return Ok(Stmt::Assign(e, rhs));
        }
        self.expect_punct(";")?;
        Ok(Stmt::Expr(e))
    }

    fn if_stmt(&mut self) -> PResult<Stmt> {
        self.enter()?;
        self.expect_kw("if")?;
        let cond = self.expr()?;
        let then = self.block()?;
        let otherwise = if self.is_kw("else") {
            self.bump();
            if self.is_kw("if") {
                Some(Else::If(Box::new(self.if_stmt()?)))
            } else {
                Some(Else::Block(self.block()?))
            }
        } else {
            None
        };
        self.depth -= 1;
        Ok(Stmt::If(cond, then, otherwise))
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = match self.peek() {
            Tok::Punct(p) => BinOp::from_token(p).filter(|op| op.precedence() >= min_prec),
            _ => None,
        } {
            self.bump();
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let op = if self.is_punct("-") {
            UnOp::Neg
        } else if self.is_punct("!") {
            UnOp::Not
        } else {
            return self.postfix();
        };
        self.enter()?;
        self.bump();
        let e = self.unary()?;
        self.depth -= 1;
        Ok(Expr::Unary(op, Box::new(e)))
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        while self.is_punct("[") {
            self.enter()?;
            self.bump();
            let idx = self.expr()?;
            self.expect_punct("]")?;
            self.depth -= 1;
            e = Expr::Index(Box::new(e), Box::new(idx));
        }
        Ok(e)
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Int(v))
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.bump();
                Ok(Expr::Bool(s == "true"))
            }
            Tok::Ident(_) => {
                let name = self.ident()?;
                if self.is_punct("(") {
                    self.enter()?;
                    self.bump();
                    let mut args = Vec::new();
                    if !self.is_punct(")") {
                        loop {
                            args.push(self.expr()?);
                            if !self.eat_punct(",") {
                                break;
                            }
                        }
                    }
                    self.expect_punct(")")?;
                    self.depth -= 1;
                    Ok(Expr::Call(name, args))
                } else {
                    Ok(Expr::Var(name))
                }
            }
            Tok::Punct("(") => {
                self.enter()?;
                self.bump();
                let e = self.expr()?;
                self.expect_punct(")")?;
                self.depth -= 1;
                Ok(Expr::Paren(Box::new(e)))
            }
            _ => self.err("expected expression"),
        }
    }
}

pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
        depth: 0,
    };
    p.program()
}

// ---------------------------------------------------------------------------
// Type-only tree

fn node(label: &str, children: Vec<TypedTree>) -> TypedTree {
    let kind = NodeType::new(label).expect("static labels are valid");
    TypedTree::with_children(kind, children)
}

fn leaf(label: &str) -> TypedTree {
    node(label, Vec::new())
}

fn block_tree(stmts: &[Stmt]) -> TypedTree {
    node("block", stmts.iter().map(stmt_tree).collect())
}

fn stmt_tree(s: &Stmt) -> TypedTree {
    match s {
        Stmt::Let(_, e) => node("let_declaration", vec![leaf("identifier"), expr_tree(e)]),
        Stmt::Assign(l, r) => node("assignment", vec![expr_tree(l), expr_tree(r)]),
        Stmt::If(c, t, e) => {
            let mut kids = vec![expr_tree(c), block_tree(t)];
            match e {
                Some(Else::Block(b)) => kids.push(node("else_clause", vec![block_tree(b)])),
                Some(Else::If(i)) => kids.push(node("else_clause", vec![stmt_tree(i)])),
                None => {}
            }
            node("if_statement", kids)
        }
        Stmt::While(c, b) => node("while_statement", vec![expr_tree(c), block_tree(b)]),
        Stmt::For(_, it, b) => node("for_statement", vec![leaf("identifier"), expr_tree(it), block_tree(b)]),
        Stmt::Return(e) => node("return_statement", e.iter().map(expr_tree).collect()),
        Stmt::Expr(e) => node("expression_statement", vec![expr_tree(e)]),
    }
}

fn expr_tree(e: &Expr) -> TypedTree {
    match e {
        Expr::Int(_) => leaf("integer"),
        Expr::Bool(_) => leaf("boolean"),
        Expr::Var(_) => leaf("identifier"),
        Expr::Binary(op, l, r) => node("binary_expression", vec![expr_tree(l), leaf(op.token()), expr_tree(r)]),
        Expr::Unary(op, x) => node("unary_expression", vec![leaf(op.token()), expr_tree(x)]),
        Expr::Call(_, args) => node(
            "call_expression",
            vec![
                leaf("identifier"),
                node("arguments", args.iter().map(expr_tree).collect()),
            ],
        ),
        Expr::Index(b, i) => node("index_expression", vec![expr_tree(b), expr_tree(i)]),
        Expr::Paren(x) => node("parenthesized_expression", vec![expr_tree(x)]),
    }
}

impl Program {
    /// Type-only tree: identifier names and literal values are dropped.
    pub fn typed_tree(&self) -> TypedTree {
        node(
            "program",
            self.functions
                .iter()
                .map(|f| {
                    node(
                        "function_definition",
                        vec![
                            leaf("identifier"),
                            node("parameters", f.params.iter().map(|_| leaf("identifier")).collect()),
                            block_tree(&f.body),
                        ],
                    )
                })
                .collect(),
        )
    }

    /// Source text in this language, four-space indented.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, f) in self.functions.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "fn {}({}) {{", f.name, f.params.join(", "));
            render_block(&mut out, &f.body, 1);
            out.push_str("}\n");
        }
        out
    }

    pub fn render_python(&self) -> String {
        let mut out = String::new();
        for (i, f) in self.functions.iter().enumerate() {
            if i > 0 {
                out.push_str("\n\n");
            }
            let _ = writeln!(out, "def {}({}):", f.name, f.params.join(", "));
            render_py_block(&mut out, &f.body, 1);
        }
        out
    }
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("    ");
    }
}

fn render_block(out: &mut String, stmts: &[Stmt], level: usize) {
    for s in stmts {
        indent(out, level);
        render_stmt(out, s, level);
        out.push('\n');
    }
}

fn render_stmt(out: &mut String, s: &Stmt, level: usize) {
    match s {
        Stmt::Let(n, e) => {
            let _ = write!(out, "let {n} = {};", render_expr(e));
        }
        Stmt::Assign(l, r) => {
            let _ = write!(out, "{} = {};", render_expr(l), render_expr(r));
        }
        Stmt::If(c, t, e) => {
            let _ = writeln!(out, "if {} {{", render_expr(c));
            render_block(out, t, level + 1);
            indent(out, level);
            out.push('}');
            match e {
                Some(Else::Block(b)) => {
                    out.push_str(" else {\n");
                    render_block(out, b, level + 1);
                    indent(out, level);
                    out.push('}');
                }
                Some(Else::If(i)) => {
                    out.push_str(" else ");
                    render_stmt(out, i, level);
                }
                None => {}
            }
        }
        Stmt::While(c, b) => {
            let _ = writeln!(out, "while {} {{", render_expr(c));
            render_block(out, b, level + 1);
            indent(out, level);
            out.push('}');
        }
        Stmt::For(v, it, b) => {
            let _ = writeln!(out, "for {v} in {} {{", render_expr(it));
            render_block(out, b, level + 1);
            indent(out, level);
            out.push('}');
        }
        Stmt::Return(Some(e)) => {
            let _ = write!(out, "return {};", render_expr(e));
        }
        Stmt::Return(None) => out.push_str("return;"),
        Stmt::Expr(e) => {
            let _ = write!(out, "{};", render_expr(e));
        }
    }
}

pub fn render_expr(e: &Expr) -> String {
    match e {
        Expr::Int(v) => v.to_string(),
        Expr::Bool(b) => b.to_string(),
        Expr::Var(n) => n.clone(),
        Expr::Binary(op, l, r) => format!("{} {} {}", render_expr(l), op.token(), render_expr(r)),
        Expr::Unary(op, x) => format!("{}{}", op.token(), render_expr(x)),
        Expr::Call(n, args) => format!("{n}({})", args.iter().map(render_expr).collect::<Vec<_>>().join(", ")),
        Expr::Index(b, i) => format!("{}[{}]", render_expr(b), render_expr(i)),
        Expr::Paren(x) => format!("({})", render_expr(x)),
    }
}

fn render_py_block(out: &mut String, stmts: &[Stmt], level: usize) {
    if stmts.is_empty() {
        indent(out, level);
        out.push_str("pass\n");
    }
    for s in stmts {
        render_py_stmt(out, s, level, "if");
    }
}

fn render_py_stmt(out: &mut String, s: &Stmt, level: usize, if_kw: &str) {
    if if_kw == "if" {
        indent(out, level);
    }
    match s {
        Stmt::Let(n, e) => {
            let _ = writeln!(out, "{n} = {}", render_py_expr(e));
        }
        Stmt::Assign(l, r) => {
            let _ = writeln!(out, "{} = {}", render_py_expr(l), render_py_expr(r));
        }
        Stmt::If(c, t, e) => {
            let _ = writeln!(out, "{if_kw} {}:", render_py_expr(c));
            render_py_block(out, t, level + 1);
            match e {
                Some(Else::Block(b)) => {
                    indent(out, level);
                    out.push_str("else:\n");
                    render_py_block(out, b, level + 1);
                }
                Some(Else::If(i)) => {
                    indent(out, level);
                    render_py_stmt(out, i, level, "elif");
                }
                None => {}
            }
        }
        Stmt::While(c, b) => {
            let _ = writeln!(out, "while {}:", render_py_expr(c));
            render_py_block(out, b, level + 1);
        }
        Stmt::For(v, it, b) => {
            let _ = writeln!(out, "for {v} in {}:", render_py_expr(it));
            render_py_block(out, b, level + 1);
        }
        Stmt::Return(Some(e)) => {
            let _ = writeln!(out, "return {}", render_py_expr(e));
        }
        Stmt::Return(None) => out.push_str("return\n"),
        Stmt::Expr(e) => {
            let _ = writeln!(out, "{}", render_py_expr(e));
        }
    }
}

fn render_py_expr(e: &Expr) -> String {
    match e {
        Expr::Int(v) => v.to_string(),
        Expr::Bool(true) => "True".into(),
        Expr::Bool(false) => "False".into(),
        Expr::Var(n) => n.clone(),
        Expr::Binary(op, l, r) => format!("{} {} {}", render_py_expr(l), op.python(), render_py_expr(r)),
        Expr::Unary(UnOp::Not, x) => format!("not {}", render_py_expr(x)),
        Expr::Unary(UnOp::Neg, x) => format!("-{}", render_py_expr(x)),
        Expr::Call(n, args) => format!(
            "{n}({})",
            args.iter().map(render_py_expr).collect::<Vec<_>>().join(", ")
        ),
        Expr::Index(b, i) => format!("{}[{}]", render_py_expr(b), render_py_expr(i)),
        Expr::Paren(x) => format!("({})", render_py_expr(x)),
    }
}

/// [`ParserAdapter`] for the `expr` language.
#[derive(Debug, Default, Clone, Copy)]
pub struct ExprAdapter;

impl ParserAdapter for ExprAdapter {
    fn parse(&self, source: &str, _language: &str) -> Result<TypedTree, ParseError> {
        Ok(parse_program(source)?.typed_tree())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::to_sexpr;

    const SAMPLE: &str = "fn clamp(x, lo, hi) {
    if x < lo { return lo; } else if x > hi { return hi; }
    let acc = 0;
    for i in range(0, x) { acc = acc + xs[i] * 2; }
    while acc > 10 && !done(acc) { acc = acc / 2; }
    return acc;
}";

    #[test]
    fn parses_sample() {
        let p = parse_program(SAMPLE).unwrap();
        assert_eq!(p.functions.len(), 1);
        assert_eq!(p.functions[0].params, ["x", "lo", "hi"]);
        assert_eq!(p.functions[0].body.len(), 5);
    }

    #[test]
    fn values_are_dropped() {
        let a = ExprAdapter.parse("fn f(a) { return a + 1; }", LANGUAGE_ID).unwrap();
        let b = ExprAdapter.parse("fn g(zz) { return q + 99; }", LANGUAGE_ID).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            to_sexpr(&a),
            "(program (function_definition (identifier) (parameters (identifier)) \
             (block (return_statement (binary_expression (identifier) (+) (integer))))))"
        );
    }

    #[test]
    fn precedence_and_associativity() {
        let p = parse_program("fn f() { return 1 - 2 - 3 * 4; }").unwrap();
        let Stmt::Return(Some(e)) = &p.functions[0].body[0] else {
            panic!()
        };
        // ((1 - 2) - (3 * 4))
        let Expr::Binary(BinOp::Sub, l, r) = e else {
            panic!("{e:?}")
        };
        assert!(matches!(**l, Expr::Binary(BinOp::Sub, ..)));
        assert!(matches!(**r, Expr::Binary(BinOp::Mul, ..)));
    }

    #[test]
    fn render_round_trips() {
        let p = parse_program(SAMPLE).unwrap();
        let again = parse_program(&p.render()).unwrap();
        assert_eq!(p, again);
    }

    #[test]
    fn python_rendering() {
        let p = parse_program(SAMPLE).unwrap();
        let py = p.render_python();
        assert!(py.starts_with("def clamp(x, lo, hi):\n    if x < lo:\n        return lo\n    elif x > hi:"));
        assert!(py.contains("while acc > 10 and not done(acc):"));
        assert!(py.contains("acc = acc // 2"));
    }

    #[test]
    fn error_offsets() {
        let err = parse_program("fn f() { return 1 }").unwrap_err();
        assert_eq!(err.offset(), Some(18));
        let err = parse_program("fn f() { let = 2; }").unwrap_err();
        assert_eq!(err.offset(), Some(13));
        assert!(parse_program("fn f() { 1 = 2; }").is_err());
        assert!(parse_program("").is_err());
        assert_eq!(parse_program("fn f() { @ }").unwrap_err().offset(), Some(9));
    }

    #[test]
    fn nesting_limit() {
        let src = format!("fn f() {{ return {}1{}; }}", "(".repeat(500), ")".repeat(500));
        assert!(parse_program(&src).is_err());
        let src = format!("fn f() {{ return {}1{}; }}", "g(".repeat(500), ")".repeat(500));
        assert!(parse_program(&src).is_err());
        let src = format!("fn f() {{ return {}1{}; }}", "a[".repeat(500), "]".repeat(500));
        assert!(parse_program(&src).is_err());
    }

    #[test]
    fn smart_constructors_parenthesize() {
        let sum = Expr::binary(BinOp::Add, Expr::Var("a".into()), Expr::Var("b".into()));
        let prod = Expr::binary(BinOp::Mul, sum.clone(), Expr::Int(2));
        assert_eq!(render_expr(&prod), "(a + b) * 2");
        let sub = Expr::binary(BinOp::Sub, Expr::Int(1), sum);
        assert_eq!(render_expr(&sub), "1 - (a + b)");
        let src = format!("fn f() {{ return {}; }}", render_expr(&sub));
        let Stmt::Return(Some(parsed)) = &parse_program(&src).unwrap().functions[0].body[0] else {
            panic!()
        };
        assert_eq!(parsed, &sub);
    }
}
