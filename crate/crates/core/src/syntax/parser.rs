use std::collections::HashSet;

use super::ast::*;
use super::lexer::{lex, Comment, Token, TokenKind};
use super::SyntaxError;

type PResult<T> = Result<T, SyntaxError>;

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    next_hole: &'a mut usize,
    generative_seen: &'a mut bool,
}

/// Parses an ordered manifest of `(path, text)` files into a repo.
/// Holes are numbered from 1 in source order across all files.
pub fn parse_repo(manifest: &[(String, String)]) -> Result<Repo, SyntaxError> {
    let mut next_hole = 1;
    let mut generative_seen = false;
    let mut files = Vec::with_capacity(manifest.len());
    for (path, text) in manifest {
        let (toks, comments) = lex(path, text)?;
        let mut p = Parser {
            toks,
            pos: 0,
            next_hole: &mut next_hole,
            generative_seen: &mut generative_seen,
        };
        let defs = p.file(&comments).map_err(|e| p.decorate(e))?;
        files.push(SourceFile {
            path: path.clone(),
            text: text.clone(),
            defs,
        });
    }
    Ok(Repo { files })
}

/// Parses a tests file: a sequence of `test <expr> end` items.
pub fn parse_tests(file: &str, text: &str) -> Result<Vec<Expr>, SyntaxError> {
    let (toks, _) = lex(file, text)?;
    let mut next_hole = 1;
    let mut generative_seen = false;
    let mut p = Parser {
        toks,
        pos: 0,
        next_hole: &mut next_hole,
        generative_seen: &mut generative_seen,
    };
    let mut tests = Vec::new();
    let result = (|| {
        while !p.at(&TokenKind::Eof) {
            p.expect(TokenKind::Test)?;
            tests.push(p.expr()?);
            p.expect(TokenKind::End)?;
        }
        Ok(())
    })();
    result.map_err(|e| p.decorate(e))?;
    Ok(tests)
}

/// Parses a standalone type.
pub fn parse_type(text: &str) -> Result<TypeExpr, SyntaxError> {
    let (toks, _) = lex("<type>", text)?;
    let mut next_hole = 1;
    let mut generative_seen = false;
    let mut p = Parser {
        toks,
        pos: 0,
        next_hole: &mut next_hole,
        generative_seen: &mut generative_seen,
    };
    let t = p.ty()?;
    p.expect(TokenKind::Eof)?;
    Ok(t)
}

/// Parses a standalone expression (holes numbered from 1).
pub fn parse_expr(text: &str) -> Result<Expr, SyntaxError> {
    let (toks, _) = lex("<expr>", text)?;
    let mut next_hole = 1;
    let mut generative_seen = false;
    let mut p = Parser {
        toks,
        pos: 0,
        next_hole: &mut next_hole,
        generative_seen: &mut generative_seen,
    };
    let e = p.expr().map_err(|e| p.decorate(e))?;
    p.expect(TokenKind::Eof).map_err(|e| p.decorate(e))?;
    Ok(e)
}

fn binop_of(kind: &TokenKind) -> Option<BinOp> {
    Some(match kind {
        TokenKind::Plus => BinOp::Add,
        TokenKind::Minus => BinOp::Sub,
        TokenKind::Star => BinOp::Mul,
        TokenKind::Slash => BinOp::Div,
        TokenKind::EqEq => BinOp::Eq,
        TokenKind::NotEq => BinOp::Neq,
        TokenKind::Lt => BinOp::Lt,
        TokenKind::Gt => BinOp::Gt,
        TokenKind::Le => BinOp::Le,
        TokenKind::Ge => BinOp::Ge,
        TokenKind::AndAnd => BinOp::And,
        TokenKind::OrOr => BinOp::Or,
        TokenKind::PlusPlus => BinOp::Concat,
        TokenKind::At => BinOp::Append,
        _ => return None,
    })
}

/// Cons shares the list-operator level with `@`.
const CONS_PREC: u8 = 4;

impl<'a> Parser<'a> {
    fn peek(&self) -> &TokenKind {
        &self.toks[self.pos].kind
    }

    fn peek_at(&self, n: usize) -> &TokenKind {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].kind
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span.clone()
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span.clone()
    }

    fn at(&self, k: &TokenKind) -> bool {
        self.peek() == k
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, k: &TokenKind) -> bool {
        if self.at(k) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error(&self, expected: &[&str]) -> SyntaxError {
        let found = self.peek();
        let message = if expected.is_empty() {
            format!("unexpected {}", describe(found))
        } else {
            format!("unexpected {}, expected {}", describe(found), expected.join(" or "))
        };
        SyntaxError {
            span: self.span(),
            message,
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn expect(&mut self, k: TokenKind) -> PResult<Token> {
        if self.at(&k) {
            Ok(self.bump())
        } else {
            Err(self.error(&[&format!("`{k}`")]))
        }
    }

    /// Appends a delimiter-balance diagnosis to a parse error message.
    fn decorate(&self, mut err: SyntaxError) -> SyntaxError {
        let unmatched = unmatched_delimiters(&self.toks);
        if !unmatched.is_empty() {
            err.message.push_str(&format!(
                ". The parser has detected unmatched delimiters: {}",
                unmatched.join(", ")
            ));
            if unmatched.iter().any(|d| d == "=>") {
                err.message.push_str(
                    ". `=>` separates patterns from branch bodies only inside `case ... end`; \
                     functions use `fun x -> ... end`",
                );
            }
        }
        err
    }

    fn file(&mut self, comments: &[Comment]) -> PResult<Vec<TopDef>> {
        let mut defs = Vec::new();
        let mut last_end = 0;
        while !self.at(&TokenKind::Eof) {
            let start = self.span();
            let attached: Vec<&str> = comments
                .iter()
                .filter(|c| c.span.lo >= last_end && c.span.hi <= start.lo)
                .map(|c| c.text.as_str())
                .collect();
            let comment = if attached.is_empty() {
                None
            } else {
                Some(attached.join("\n"))
            };
            let def = match self.peek() {
                TokenKind::Type => self.type_def(comment)?,
                TokenKind::Let => self.let_def(comment)?,
                _ => return Err(self.error(&["`type`", "`let`"])),
            };
            defs.push(def);
            if !self.eat(&TokenKind::In) && !self.at(&TokenKind::Eof) {
                return Err(self.error(&["`in`"]));
            }
            last_end = self.prev_span().hi;
        }
        Ok(defs)
    }

    fn type_def(&mut self, comment: Option<String>) -> PResult<TopDef> {
        let start = self.bump().span;
        let name = match self.peek().clone() {
            TokenKind::UIdent(n) if BaseType::from_name(&n).is_none() && !n.contains('.') => {
                self.bump();
                n
            }
            _ => return Err(self.error(&["type name"])),
        };
        self.expect(TokenKind::Equals)?;
        let def = self.ty()?;
        Ok(TopDef::Type {
            name,
            def,
            span: start.join(&self.prev_span()),
            comment,
        })
    }

    fn let_def(&mut self, comment: Option<String>) -> PResult<TopDef> {
        let start = self.bump().span;
        let name = match self.peek().clone() {
            TokenKind::LIdent(n) => {
                self.bump();
                n
            }
            _ => return Err(self.error(&["variable name"])),
        };
        self.expect(TokenKind::Colon)?;
        let ann = self.ty()?;
        self.expect(TokenKind::Equals)?;
        let bound = self.expr()?;
        Ok(TopDef::Let {
            name,
            ann,
            bound,
            span: start.join(&self.prev_span()),
            comment,
        })
    }

    // ---- types ----

    fn ty(&mut self) -> PResult<TypeExpr> {
        if self.eat(&TokenKind::Plus) {
            let first = self.variant()?;
            return self.sum_rest(vec![first]);
        }
        if let TokenKind::UIdent(n) = self.peek() {
            if BaseType::from_name(n).is_none() && self.peek_at(1) == &TokenKind::LParen {
                let first = self.variant()?;
                return self.sum_rest(vec![first]);
            }
        }
        let t = self.arrow_ty()?;
        if self.at(&TokenKind::Plus) {
            match t {
                TypeExpr::Alias(name) => self.sum_rest(vec![Variant { name, arg: None }]),
                _ => Err(self.error(&["`->`", "`,`", "`)`"])),
            }
        } else {
            Ok(t)
        }
    }

    fn sum_rest(&mut self, mut variants: Vec<Variant>) -> PResult<TypeExpr> {
        while self.eat(&TokenKind::Plus) {
            variants.push(self.variant()?);
        }
        Ok(TypeExpr::Sum(variants))
    }

    fn variant(&mut self) -> PResult<Variant> {
        let name = match self.peek().clone() {
            TokenKind::UIdent(n) if BaseType::from_name(&n).is_none() && !n.contains('.') => {
                self.bump();
                n
            }
            _ => return Err(self.error(&["constructor name"])),
        };
        let arg = if self.eat(&TokenKind::LParen) {
            let mut items = vec![self.ty()?];
            while self.eat(&TokenKind::Comma) {
                items.push(self.ty()?);
            }
            self.expect(TokenKind::RParen)?;
            Some(if items.len() == 1 {
                items.pop().unwrap()
            } else {
                TypeExpr::Product(items)
            })
        } else {
            None
        };
        Ok(Variant { name, arg })
    }

    fn arrow_ty(&mut self) -> PResult<TypeExpr> {
        let param = self.atom_ty()?;
        if self.eat(&TokenKind::Arrow) {
            let result = self.arrow_ty()?;
            Ok(TypeExpr::arrow(param, result))
        } else {
            Ok(param)
        }
    }

    fn atom_ty(&mut self) -> PResult<TypeExpr> {
        match self.peek().clone() {
            TokenKind::Hole => {
                self.bump();
                Ok(TypeExpr::Unknown)
            }
            TokenKind::UIdent(n) if !n.contains('.') => {
                self.bump();
                Ok(BaseType::from_name(&n)
                    .map(TypeExpr::Base)
                    .unwrap_or(TypeExpr::Alias(n)))
            }
            TokenKind::LBracket => {
                self.bump();
                let elem = self.ty()?;
                self.expect(TokenKind::RBracket)?;
                Ok(TypeExpr::list(elem))
            }
            TokenKind::LParen => {
                self.bump();
                let mut items = vec![self.ty()?];
                while self.eat(&TokenKind::Comma) {
                    items.push(self.ty()?);
                }
                self.expect(TokenKind::RParen)?;
                Ok(if items.len() == 1 {
                    items.pop().unwrap()
                } else {
                    TypeExpr::Product(items)
                })
            }
            _ => Err(self.error(&["type"])),
        }
    }

    // ---- expressions ----

    fn hole(&mut self, generative: bool) -> PResult<ExprKind> {
        let span = self.span();
        if generative {
            if *self.generative_seen {
                return Err(SyntaxError {
                    span,
                    message: "a program may contain only one generative hole `??`".into(),
                    expected: Vec::new(),
                });
            }
            *self.generative_seen = true;
        }
        self.bump();
        let id = *self.next_hole;
        *self.next_hole += 1;
        Ok(ExprKind::Hole { id, generative })
    }

    pub(crate) fn expr(&mut self) -> PResult<Expr> {
        match self.peek() {
            TokenKind::Let => self.let_expr(),
            TokenKind::If => self.if_expr(),
            _ => self.binary(0),
        }
    }

    fn let_expr(&mut self) -> PResult<Expr> {
        let start = self.bump().span;
        let pat = self.pattern()?;
        let ann = if self.eat(&TokenKind::Colon) {
            Some(self.ty()?)
        } else {
            None
        };
        self.expect(TokenKind::Equals)?;
        let bound = self.expr()?;
        self.expect(TokenKind::In)?;
        let body = self.expr()?;
        let span = start.join(&body.span);
        Ok(Expr::new(
            ExprKind::Let {
                pat,
                ann,
                bound: Box::new(bound),
                body: Box::new(body),
            },
            span,
        ))
    }

    fn if_expr(&mut self) -> PResult<Expr> {
        let start = self.bump().span;
        let cond = self.expr()?;
        self.expect(TokenKind::Then)?;
        let then_branch = self.expr()?;
        self.expect(TokenKind::Else)?;
        let else_branch = self.expr()?;
        let span = start.join(&else_branch.span);
        Ok(Expr::new(
            ExprKind::If {
                cond: Box::new(cond),
                then_branch: Box::new(then_branch),
                else_branch: Box::new(else_branch),
            },
            span,
        ))
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let (prec, right, op) = match self.peek() {
                TokenKind::ColonColon => (CONS_PREC, true, None),
                k => match binop_of(k) {
                    Some(op) => (op.precedence(), op.right_assoc(), Some(op)),
                    None => break,
                },
            };
            if prec < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(if right { prec } else { prec + 1 })?;
            let span = lhs.span.join(&rhs.span);
            let kind = match op {
                Some(op) => ExprKind::BinOp {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                None => ExprKind::Cons(Box::new(lhs), Box::new(rhs)),
            };
            lhs = Expr::new(kind, span);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.at(&TokenKind::Minus) {
            let start = self.bump().span;
            match self.peek().clone() {
                TokenKind::Int(i) => {
                    let end = self.bump().span;
                    return Ok(Expr::new(ExprKind::Lit(Literal::Int(-i)), start.join(&end)));
                }
                TokenKind::Float(x) => {
                    let end = self.bump().span;
                    return Ok(Expr::new(ExprKind::Lit(Literal::Float(-x)), start.join(&end)));
                }
                _ => {
                    let operand = self.unary()?;
                    let span = start.join(&operand.span);
                    let zero = Expr::new(ExprKind::Lit(Literal::Int(0)), start);
                    return Ok(Expr::new(
                        ExprKind::BinOp {
                            op: BinOp::Sub,
                            lhs: Box::new(zero),
                            rhs: Box::new(operand),
                        },
                        span,
                    ));
                }
            }
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        while self.at(&TokenKind::LParen) {
            self.bump();
            let args = self.expr_list(TokenKind::RParen)?;
            let end = self.expect(TokenKind::RParen)?.span;
            let span = e.span.join(&end);
            e = Expr::new(
                ExprKind::App {
                    func: Box::new(e),
                    args,
                },
                span,
            );
        }
        Ok(e)
    }

    /// One or more comma-separated expressions up to (not including) `close`.
    fn expr_list(&mut self, close: TokenKind) -> PResult<Vec<Expr>> {
        if self.at(&close) {
            return Err(self.error(&["expression"]));
        }
        let mut items = vec![self.expr()?];
        while self.eat(&TokenKind::Comma) {
            items.push(self.expr()?);
        }
        Ok(items)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let start = self.span();
        let kind = match self.peek().clone() {
            TokenKind::LIdent(n) => {
                self.bump();
                ExprKind::Var(n)
            }
            TokenKind::UIdent(n) => {
                if BaseType::from_name(&n).is_some() {
                    return Err(self.error(&["expression"]));
                }
                self.bump();
                let arg = if self.eat(&TokenKind::LParen) {
                    let mut args = self.expr_list(TokenKind::RParen)?;
                    let end = self.expect(TokenKind::RParen)?.span;
                    Some(Box::new(if args.len() == 1 {
                        args.pop().unwrap()
                    } else {
                        Expr::new(ExprKind::Tuple(args), start.join(&end))
                    }))
                } else {
                    None
                };
                let span = start.join(&self.prev_span());
                return Ok(Expr::new(ExprKind::Ctor { name: n, arg }, span));
            }
            TokenKind::Int(i) => {
                self.bump();
                ExprKind::Lit(Literal::Int(i))
            }
            TokenKind::Float(x) => {
                self.bump();
                ExprKind::Lit(Literal::Float(x))
            }
            TokenKind::Str(s) => {
                self.bump();
                ExprKind::Lit(Literal::String(s))
            }
            TokenKind::True => {
                self.bump();
                ExprKind::Lit(Literal::Bool(true))
            }
            TokenKind::False => {
                self.bump();
                ExprKind::Lit(Literal::Bool(false))
            }
            TokenKind::Hole => self.hole(false)?,
            TokenKind::GenHole => self.hole(true)?,
            TokenKind::LParen => {
                self.bump();
                let mut items = self.expr_list(TokenKind::RParen)?;
                let end = self.expect(TokenKind::RParen)?.span;
                if items.len() == 1 {
                    let mut inner = items.pop().unwrap();
                    inner.span = start.join(&end);
                    return Ok(inner);
                }
                ExprKind::Tuple(items)
            }
            TokenKind::LBracket => {
                self.bump();
                let items = if self.at(&TokenKind::RBracket) {
                    Vec::new()
                } else {
                    self.expr_list(TokenKind::RBracket)?
                };
                self.expect(TokenKind::RBracket)?;
                ExprKind::List(items)
            }
            TokenKind::Fun => {
                self.bump();
                let mut params = vec![self.pattern()?];
                while self.eat(&TokenKind::Comma) {
                    params.push(self.pattern()?);
                }
                let param = if params.len() == 1 {
                    params.pop().unwrap()
                } else {
                    let span = params[0].span.join(&params[params.len() - 1].span);
                    Pattern::new(PatternKind::Tuple(params), span)
                };
                check_linear(&param)?;
                self.expect(TokenKind::Arrow)?;
                let body = self.expr()?;
                self.expect(TokenKind::End)?;
                ExprKind::Fun {
                    param,
                    body: Box::new(body),
                }
            }
            TokenKind::Case => {
                self.bump();
                let mut scrutinees = vec![self.expr()?];
                while self.eat(&TokenKind::Comma) {
                    scrutinees.push(self.expr()?);
                }
                let scrutinee = if scrutinees.len() == 1 {
                    scrutinees.pop().unwrap()
                } else {
                    let span = scrutinees[0].span.join(&scrutinees[scrutinees.len() - 1].span);
                    Expr::new(ExprKind::Tuple(scrutinees), span)
                };
                let mut branches = Vec::new();
                while self.eat(&TokenKind::Bar) {
                    let pat = self.pattern()?;
                    self.expect(TokenKind::FatArrow)?;
                    let body = self.expr()?;
                    branches.push((pat, body));
                }
                if branches.is_empty() {
                    return Err(self.error(&["`|`"]));
                }
                self.expect(TokenKind::End)?;
                ExprKind::Case {
                    scrutinee: Box::new(scrutinee),
                    branches,
                }
            }
            TokenKind::Let => return self.let_expr(),
            TokenKind::If => return self.if_expr(),
            _ => return Err(self.error(&["expression"])),
        };
        Ok(Expr::new(kind, start.join(&self.prev_span())))
    }

    // ---- patterns ----

    fn pattern(&mut self) -> PResult<Pattern> {
        let p = self.pattern_cons()?;
        check_linear(&p)?;
        Ok(p)
    }

    fn pattern_cons(&mut self) -> PResult<Pattern> {
        let head = self.pattern_atom()?;
        if self.eat(&TokenKind::ColonColon) {
            let tail = self.pattern_cons()?;
            let span = head.span.join(&tail.span);
            Ok(Pattern::new(
                PatternKind::Cons(Box::new(head), Box::new(tail)),
                span,
            ))
        } else {
            Ok(head)
        }
    }

    fn pattern_atom(&mut self) -> PResult<Pattern> {
        let start = self.span();
        let kind = match self.peek().clone() {
            TokenKind::LIdent(n) if !n.contains('.') => {
                self.bump();
                PatternKind::Var(n)
            }
            TokenKind::Underscore => {
                self.bump();
                PatternKind::Wildcard
            }
            TokenKind::Int(i) => {
                self.bump();
                PatternKind::Lit(Literal::Int(i))
            }
            TokenKind::Minus => {
                self.bump();
                match self.peek().clone() {
                    TokenKind::Int(i) => {
                        self.bump();
                        PatternKind::Lit(Literal::Int(-i))
                    }
                    TokenKind::Float(x) => {
                        self.bump();
                        PatternKind::Lit(Literal::Float(-x))
                    }
                    _ => return Err(self.error(&["number"])),
                }
            }
            TokenKind::Float(x) => {
                self.bump();
                PatternKind::Lit(Literal::Float(x))
            }
            TokenKind::Str(s) => {
                self.bump();
                PatternKind::Lit(Literal::String(s))
            }
            TokenKind::True => {
                self.bump();
                PatternKind::Lit(Literal::Bool(true))
            }
            TokenKind::False => {
                self.bump();
                PatternKind::Lit(Literal::Bool(false))
            }
            TokenKind::UIdent(n) if BaseType::from_name(&n).is_none() && !n.contains('.') => {
                self.bump();
                let sub = if self.eat(&TokenKind::LParen) {
                    let mut items = vec![self.pattern_cons()?];
                    while self.eat(&TokenKind::Comma) {
                        items.push(self.pattern_cons()?);
                    }
                    let end = self.expect(TokenKind::RParen)?.span;
                    Some(Box::new(if items.len() == 1 {
                        items.pop().unwrap()
                    } else {
                        Pattern::new(PatternKind::Tuple(items), start.join(&end))
                    }))
                } else {
                    None
                };
                PatternKind::Ctor(n, sub)
            }
            TokenKind::LParen => {
                self.bump();
                let mut items = vec![self.pattern_cons()?];
                while self.eat(&TokenKind::Comma) {
                    items.push(self.pattern_cons()?);
                }
                let end = self.expect(TokenKind::RParen)?.span;
                if items.len() == 1 {
                    let mut inner = items.pop().unwrap();
                    inner.span = start.join(&end);
                    return Ok(inner);
                }
                PatternKind::Tuple(items)
            }
            TokenKind::LBracket => {
                self.bump();
                let mut items = Vec::new();
                if !self.at(&TokenKind::RBracket) {
                    items.push(self.pattern_cons()?);
                    while self.eat(&TokenKind::Comma) {
                        items.push(self.pattern_cons()?);
                    }
                }
                let end = self.expect(TokenKind::RBracket)?.span;
                // `[a, b]` is sugar for `a :: b :: []`.
                let mut acc = Pattern::new(PatternKind::EmptyList, end.clone());
                for item in items.into_iter().rev() {
                    let span = item.span.join(&end);
                    acc = Pattern::new(PatternKind::Cons(Box::new(item), Box::new(acc)), span);
                }
                acc.span = start.join(&end);
                return Ok(acc);
            }
            _ => return Err(self.error(&["pattern"])),
        };
        Ok(Pattern::new(kind, start.join(&self.prev_span())))
    }
}

fn check_linear(p: &Pattern) -> PResult<()> {
    let mut seen = HashSet::new();
    for name in p.bound_names() {
        if !seen.insert(name) {
            return Err(SyntaxError {
                span: p.span.clone(),
                message: format!("variable {name} is bound more than once in this pattern"),
                expected: Vec::new(),
            });
        }
    }
    Ok(())
}

fn describe(k: &TokenKind) -> String {
    match k {
        TokenKind::Eof => "end of input".to_string(),
        TokenKind::LIdent(n) | TokenKind::UIdent(n) => format!("identifier `{n}`"),
        other => format!("`{other}`"),
    }
}

/// Scans a token stream for delimiters without a matching partner:
/// brackets, `fun`/`case` ... `end`, `=>` and `|` outside `case`,
/// `then`/`else` without `if`, and `in` without `let`.
fn unmatched_delimiters(toks: &[Token]) -> Vec<String> {
    #[derive(PartialEq, Clone, Copy)]
    enum Open {
        Paren,
        Bracket,
        Fun,
        Case,
        If,
        Let,
    }
    let mut stack: Vec<Open> = Vec::new();
    let mut unmatched = Vec::new();

    fn close(stack: &mut Vec<Open>, want: &[Open]) -> bool {
        // Pop through let/if frames, which have no closing token of their own.
        while let Some(top) = stack.last().copied() {
            if want.contains(&top) {
                stack.pop();
                return true;
            }
            if matches!(top, Open::Let | Open::If) {
                stack.pop();
                continue;
            }
            return false;
        }
        false
    }

    for t in toks {
        match &t.kind {
            TokenKind::LParen => stack.push(Open::Paren),
            TokenKind::LBracket => stack.push(Open::Bracket),
            TokenKind::Fun => stack.push(Open::Fun),
            TokenKind::Case => stack.push(Open::Case),
            TokenKind::If => stack.push(Open::If),
            TokenKind::Let => stack.push(Open::Let),
            TokenKind::RParen => {
                if !close(&mut stack, &[Open::Paren]) {
                    unmatched.push(")".to_string());
                }
            }
            TokenKind::RBracket => {
                if !close(&mut stack, &[Open::Bracket]) {
                    unmatched.push("]".to_string());
                }
            }
            TokenKind::End => {
                if !close(&mut stack, &[Open::Fun, Open::Case]) {
                    unmatched.push("end".to_string());
                }
            }
            TokenKind::FatArrow | TokenKind::Bar => {
                let inside_case = stack
                    .iter()
                    .rev()
                    .find(|o| !matches!(o, Open::Let | Open::If))
                    .is_some_and(|o| *o == Open::Case);
                if !inside_case {
                    unmatched.push(t.kind.to_string());
                }
            }
            TokenKind::Then | TokenKind::Else => {
                if !stack.contains(&Open::If) {
                    unmatched.push(t.kind.to_string());
                }
            }
            TokenKind::In => {
                if let Some(i) = stack.iter().rposition(|o| *o == Open::Let) {
                    stack.truncate(i);
                }
                // Top-level `in` closes a definition, not an inner `let`.
            }
            _ => {}
        }
    }
    for o in stack {
        let s = match o {
            Open::Paren => "(",
            Open::Bracket => "[",
            Open::Fun => "fun",
            Open::Case => "case",
            Open::If | Open::Let => continue,
        };
        unmatched.push(s.to_string());
    }
    unmatched
}
