use std::fmt;

use super::ast::Span;
use super::SyntaxError;

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Let,
    In,
    Type,
    Fun,
    Case,
    End,
    If,
    Then,
    Else,
    Test,
    True,
    False,
    /// Value-level name, possibly dotted (`List.length`).
    LIdent(String),
    /// Capitalized name: constructor, alias, or base type.
    UIdent(String),
    Int(i64),
    Float(f64),
    Str(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Equals,
    FatArrow,
    Arrow,
    ColonColon,
    PlusPlus,
    Plus,
    Minus,
    Star,
    Slash,
    EqEq,
    NotEq,
    Lt,
    Gt,
    Le,
    Ge,
    AndAnd,
    OrOr,
    At,
    Bar,
    Underscore,
    /// `?`: an ordinary hole in expressions, the unknown type in types.
    Hole,
    /// `??`: the generative hole.
    GenHole,
    Eof,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TokenKind::Let => "let",
            TokenKind::In => "in",
            TokenKind::Type => "type",
            TokenKind::Fun => "fun",
            TokenKind::Case => "case",
            TokenKind::End => "end",
            TokenKind::If => "if",
            TokenKind::Then => "then",
            TokenKind::Else => "else",
            TokenKind::Test => "test",
            TokenKind::True => "true",
            TokenKind::False => "false",
            TokenKind::LIdent(n) | TokenKind::UIdent(n) => return write!(f, "{n}"),
            TokenKind::Int(i) => return write!(f, "{i}"),
            TokenKind::Float(x) => return write!(f, "{x:?}"),
            TokenKind::Str(s) => return write!(f, "{s:?}"),
            TokenKind::LParen => "(",
            TokenKind::RParen => ")",
            TokenKind::LBracket => "[",
            TokenKind::RBracket => "]",
            TokenKind::Comma => ",",
            TokenKind::Colon => ":",
            TokenKind::Equals => "=",
            TokenKind::FatArrow => "=>",
            TokenKind::Arrow => "->",
            TokenKind::ColonColon => "::",
            TokenKind::PlusPlus => "++",
            TokenKind::Plus => "+",
            TokenKind::Minus => "-",
            TokenKind::Star => "*",
            TokenKind::Slash => "/",
            TokenKind::EqEq => "==",
            TokenKind::NotEq => "!=",
            TokenKind::Lt => "<",
            TokenKind::Gt => ">",
            TokenKind::Le => "<=",
            TokenKind::Ge => ">=",
            TokenKind::AndAnd => "&&",
            TokenKind::OrOr => "||",
            TokenKind::At => "@",
            TokenKind::Bar => "|",
            TokenKind::Underscore => "_",
            TokenKind::Hole => "?",
            TokenKind::GenHole => "??",
            TokenKind::Eof => "end of input",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comment {
    pub text: String,
    pub span: Span,
}

struct Cursor<'a> {
    file: &'a str,
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn mark(&self) -> (usize, usize, usize) {
        (self.pos, self.line, self.col)
    }

    fn span_from(&self, mark: (usize, usize, usize)) -> Span {
        Span {
            file: self.file.to_string(),
            start_line: mark.1,
            start_col: mark.2,
            end_line: self.line,
            end_col: self.col,
            lo: mark.0,
            hi: self.pos,
        }
    }
}

/// Tokenizes `source`, dropping comments. The last token is always `Eof`.
pub fn tokenize(source: &str) -> Result<Vec<Token>, SyntaxError> {
    lex("<input>", source).map(|(toks, _)| toks)
}

/// Tokenizes a named file, returning tokens and the comments between them.
pub fn lex(file: &str, source: &str) -> Result<(Vec<Token>, Vec<Comment>), SyntaxError> {
    let mut cur = Cursor {
        file,
        src: source,
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut tokens = Vec::new();
    let mut comments = Vec::new();

    while let Some(c) = cur.peek() {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        let start = cur.mark();
        if c == '(' && cur.peek_at(1) == Some('*') {
            let text = lex_comment(&mut cur)?;
            comments.push(Comment {
                text,
                span: cur.span_from(start),
            });
            continue;
        }
        let kind = if c.is_ascii_digit() {
            lex_number(&mut cur)?
        } else if c.is_alphabetic() || c == '_' {
            lex_word(&mut cur)
        } else if c == '"' {
            lex_string(&mut cur)?
        } else {
            lex_symbol(&mut cur)?
        };
        tokens.push(Token {
            kind,
            span: cur.span_from(start),
        });
    }
    let end = cur.mark();
    tokens.push(Token {
        kind: TokenKind::Eof,
        span: cur.span_from(end),
    });
    Ok((tokens, comments))
}

fn lex_comment(cur: &mut Cursor) -> Result<String, SyntaxError> {
    let start = cur.mark();
    cur.bump();
    cur.bump();
    let body_start = cur.pos;
    let mut depth = 1;
    loop {
        match cur.peek() {
            None => {
                return Err(SyntaxError::lex(
                    cur.span_from(start),
                    "unterminated comment".to_string(),
                ))
            }
            Some('(') if cur.peek_at(1) == Some('*') => {
                cur.bump();
                cur.bump();
                depth += 1;
            }
            Some('*') if cur.peek_at(1) == Some(')') => {
                let body_end = cur.pos;
                cur.bump();
                cur.bump();
                depth -= 1;
                if depth == 0 {
                    return Ok(cur.src[body_start..body_end].trim().to_string());
                }
            }
            Some(_) => {
                cur.bump();
            }
        }
    }
}

fn lex_number(cur: &mut Cursor) -> Result<TokenKind, SyntaxError> {
    let start = cur.mark();
    while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
        cur.bump();
    }
    let is_float = cur.peek() == Some('.') && cur.peek_at(1).is_some_and(|c| c.is_ascii_digit());
    if is_float {
        cur.bump();
        while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
            cur.bump();
        }
    }
    let text = &cur.src[start.0..cur.pos];
    if is_float {
        text.parse::<f64>()
            .map(TokenKind::Float)
            .map_err(|e| SyntaxError::lex(cur.span_from(start), format!("bad float literal: {e}")))
    } else {
        text.parse::<i64>()
            .map(TokenKind::Int)
            .map_err(|e| SyntaxError::lex(cur.span_from(start), format!("bad integer literal: {e}")))
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

fn lex_word(cur: &mut Cursor) -> TokenKind {
    let start = cur.pos;
    let mut segment_start = cur.pos;
    while cur.peek().is_some_and(is_ident_char) {
        cur.bump();
        // `List.length`: a dot directly followed by a letter continues the name.
        if cur.peek() == Some('.') && cur.peek_at(1).is_some_and(|c| c.is_alphabetic()) {
            cur.bump();
            segment_start = cur.pos;
        }
    }
    let word = &cur.src[start..cur.pos];
    match word {
        "let" => TokenKind::Let,
        "in" => TokenKind::In,
        "type" => TokenKind::Type,
        "fun" => TokenKind::Fun,
        "case" => TokenKind::Case,
        "end" => TokenKind::End,
        "if" => TokenKind::If,
        "then" => TokenKind::Then,
        "else" => TokenKind::Else,
        "test" => TokenKind::Test,
        "true" => TokenKind::True,
        "false" => TokenKind::False,
        "_" => TokenKind::Underscore,
        _ => {
            let last = &cur.src[segment_start..cur.pos];
            if last.starts_with(|c: char| c.is_uppercase()) {
                TokenKind::UIdent(word.to_string())
            } else {
                TokenKind::LIdent(word.to_string())
            }
        }
    }
}

fn lex_string(cur: &mut Cursor) -> Result<TokenKind, SyntaxError> {
    let start = cur.mark();
    cur.bump();
    let mut out = String::new();
    loop {
        match cur.bump() {
            None | Some('\n') => {
                return Err(SyntaxError::lex(
                    cur.span_from(start),
                    "unterminated string literal".to_string(),
                ))
            }
            Some('"') => return Ok(TokenKind::Str(out)),
            Some('\\') => match cur.bump() {
                Some('n') => out.push('\n'),
                Some('t') => out.push('\t'),
                Some('"') => out.push('"'),
                Some('\\') => out.push('\\'),
                other => {
                    return Err(SyntaxError::lex(
                        cur.span_from(start),
                        format!("unknown escape sequence \\{}", other.unwrap_or(' ')),
                    ))
                }
            },
            Some(c) => out.push(c),
        }
    }
}

fn lex_symbol(cur: &mut Cursor) -> Result<TokenKind, SyntaxError> {
    let start = cur.mark();
    let c = cur.bump().expect("caller checked peek");
    let next = cur.peek();
    let two = |cur: &mut Cursor, k: TokenKind| {
        cur.bump();
        k
    };
    let kind = match (c, next) {
        ('?', Some('?')) => two(cur, TokenKind::GenHole),
        ('?', _) => TokenKind::Hole,
        ('=', Some('>')) => two(cur, TokenKind::FatArrow),
        ('=', Some('=')) => two(cur, TokenKind::EqEq),
        ('=', _) => TokenKind::Equals,
        ('-', Some('>')) => two(cur, TokenKind::Arrow),
        ('-', _) => TokenKind::Minus,
        (':', Some(':')) => two(cur, TokenKind::ColonColon),
        (':', _) => TokenKind::Colon,
        ('+', Some('+')) => two(cur, TokenKind::PlusPlus),
        ('+', _) => TokenKind::Plus,
        ('!', Some('=')) => two(cur, TokenKind::NotEq),
        ('<', Some('=')) => two(cur, TokenKind::Le),
        ('<', _) => TokenKind::Lt,
        ('>', Some('=')) => two(cur, TokenKind::Ge),
        ('>', _) => TokenKind::Gt,
        ('&', Some('&')) => two(cur, TokenKind::AndAnd),
        ('|', Some('|')) => two(cur, TokenKind::OrOr),
        ('|', _) => TokenKind::Bar,
        ('(', _) => TokenKind::LParen,
        (')', _) => TokenKind::RParen,
        ('[', _) => TokenKind::LBracket,
        (']', _) => TokenKind::RBracket,
        (',', _) => TokenKind::Comma,
        ('*', _) => TokenKind::Star,
        ('/', _) => TokenKind::Slash,
        ('@', _) => TokenKind::At,
        _ => {
            return Err(SyntaxError::lex(
                cur.span_from(start),
                format!("illegal character {c:?}"),
            ))
        }
    };
    Ok(kind)
}
