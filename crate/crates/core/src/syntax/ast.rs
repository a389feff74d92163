use std::fmt;

use serde::Serialize;

/// Source region. Lines and columns are 1-based; `lo`/`hi` are byte offsets
/// into the file text and are what substitution splices on.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize)]
pub struct Span {
    pub file: String,
    pub start_line: usize,
    pub start_col: usize,
    pub end_line: usize,
    pub end_col: usize,
    #[serde(skip)]
    pub lo: usize,
    #[serde(skip)]
    pub hi: usize,
}

impl Span {
    pub fn join(&self, other: &Span) -> Span {
        Span {
            file: self.file.clone(),
            start_line: self.start_line,
            start_col: self.start_col,
            end_line: other.end_line,
            end_col: other.end_col,
            lo: self.lo,
            hi: other.hi,
        }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.start_line, self.start_col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BaseType {
    Int,
    Float,
    Bool,
    String,
}

impl BaseType {
    pub fn name(self) -> &'static str {
        match self {
            BaseType::Int => "Int",
            BaseType::Float => "Float",
            BaseType::Bool => "Bool",
            BaseType::String => "String",
        }
    }

    pub fn from_name(name: &str) -> Option<BaseType> {
        match name {
            "Int" => Some(BaseType::Int),
            "Float" => Some(BaseType::Float),
            "Bool" => Some(BaseType::Bool),
            "String" => Some(BaseType::String),
            _ => None,
        }
    }
}

/// Surface type syntax. Arrows are unary: `(A, B) -> C` is an arrow whose
/// parameter is the product `(A, B)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum TypeExpr {
    Base(BaseType),
    Unknown,
    Alias(String),
    Arrow(Box<TypeExpr>, Box<TypeExpr>),
    Product(Vec<TypeExpr>),
    List(Box<TypeExpr>),
    Sum(Vec<Variant>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Variant {
    pub name: String,
    pub arg: Option<TypeExpr>,
}

impl TypeExpr {
    pub fn int() -> TypeExpr {
        TypeExpr::Base(BaseType::Int)
    }
    pub fn float() -> TypeExpr {
        TypeExpr::Base(BaseType::Float)
    }
    pub fn bool() -> TypeExpr {
        TypeExpr::Base(BaseType::Bool)
    }
    pub fn string() -> TypeExpr {
        TypeExpr::Base(BaseType::String)
    }
    pub fn alias(name: &str) -> TypeExpr {
        TypeExpr::Alias(name.to_string())
    }
    pub fn list(elem: TypeExpr) -> TypeExpr {
        TypeExpr::List(Box::new(elem))
    }
    pub fn arrow(param: TypeExpr, result: TypeExpr) -> TypeExpr {
        TypeExpr::Arrow(Box::new(param), Box::new(result))
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, TypeExpr::Unknown)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Neq,
    Lt,
    Gt,
    Le,
    Ge,
    And,
    Or,
    Concat,
    Append,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Eq => "==",
            BinOp::Neq => "!=",
            BinOp::Lt => "<",
            BinOp::Gt => ">",
            BinOp::Le => "<=",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::Concat => "++",
            BinOp::Append => "@",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Neq | BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge => 3,
            BinOp::Append => 4,
            BinOp::Add | BinOp::Sub | BinOp::Concat => 5,
            BinOp::Mul | BinOp::Div => 6,
        }
    }

    pub fn right_assoc(self) -> bool {
        matches!(self, BinOp::Append | BinOp::And | BinOp::Or)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Literal {
    Int(i64),
    Float(f64),
    Bool(bool),
    String(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ExprKind {
    Var(String),
    Lit(Literal),
    Let {
        pat: Pattern,
        ann: Option<TypeExpr>,
        bound: Box<Expr>,
        body: Box<Expr>,
    },
    Fun {
        param: Pattern,
        body: Box<Expr>,
    },
    /// `f(a)` or `f(a, b, ...)`; several arguments form a tuple argument.
    App {
        func: Box<Expr>,
        args: Vec<Expr>,
    },
    Tuple(Vec<Expr>),
    List(Vec<Expr>),
    Cons(Box<Expr>, Box<Expr>),
    Case {
        scrutinee: Box<Expr>,
        branches: Vec<(Pattern, Expr)>,
    },
    Ctor {
        name: String,
        arg: Option<Box<Expr>>,
    },
    If {
        cond: Box<Expr>,
        then_branch: Box<Expr>,
        else_branch: Box<Expr>,
    },
    BinOp {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Hole {
        id: usize,
        generative: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pattern {
    pub kind: PatternKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum PatternKind {
    Var(String),
    Wildcard,
    Lit(Literal),
    Tuple(Vec<Pattern>),
    Ctor(String, Option<Box<Pattern>>),
    Cons(Box<Pattern>, Box<Pattern>),
    EmptyList,
}

impl Pattern {
    pub fn bound_names(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_names(&mut out);
        out
    }

    fn collect_names<'a>(&'a self, out: &mut Vec<&'a str>) {
        match &self.kind {
            PatternKind::Var(n) => out.push(n),
            PatternKind::Wildcard | PatternKind::Lit(_) | PatternKind::EmptyList => {}
            PatternKind::Tuple(ps) => ps.iter().for_each(|p| p.collect_names(out)),
            PatternKind::Ctor(_, sub) => {
                if let Some(p) = sub {
                    p.collect_names(out)
                }
            }
            PatternKind::Cons(h, t) => {
                h.collect_names(out);
                t.collect_names(out);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TopDef {
    Type {
        name: String,
        def: TypeExpr,
        span: Span,
        comment: Option<String>,
    },
    Let {
        name: String,
        ann: TypeExpr,
        bound: Expr,
        span: Span,
        comment: Option<String>,
    },
}

impl TopDef {
    pub fn name(&self) -> &str {
        match self {
            TopDef::Type { name, .. } | TopDef::Let { name, .. } => name,
        }
    }

    pub fn span(&self) -> &Span {
        match self {
            TopDef::Type { span, .. } | TopDef::Let { span, .. } => span,
        }
    }

    pub fn comment(&self) -> Option<&str> {
        match self {
            TopDef::Type { comment, .. } | TopDef::Let { comment, .. } => comment.as_deref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceFile {
    pub path: String,
    #[serde(skip)]
    pub text: String,
    pub defs: Vec<TopDef>,
}

/// An ordered multi-file program. Files are concatenated in manifest order;
/// each top-level definition scopes over everything after it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Repo {
    pub files: Vec<SourceFile>,
}

/// Location of a hole within a repo.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HoleSite {
    pub id: usize,
    pub generative: bool,
    pub span: Span,
}

impl Repo {
    pub fn defs(&self) -> impl Iterator<Item = &TopDef> {
        self.files.iter().flat_map(|f| f.defs.iter())
    }

    pub fn manifest(&self) -> Vec<(String, String)> {
        self.files
            .iter()
            .map(|f| (f.path.clone(), f.text.clone()))
            .collect()
    }

    /// All holes in pre-order (which is source order, file by file).
    pub fn holes(&self) -> Vec<HoleSite> {
        let mut out = Vec::new();
        for def in self.defs() {
            if let TopDef::Let { bound, .. } = def {
                bound.walk(&mut |e| {
                    if let ExprKind::Hole { id, generative } = e.kind {
                        out.push(HoleSite {
                            id,
                            generative,
                            span: e.span.clone(),
                        });
                    }
                });
            }
        }
        out
    }

    pub fn hole(&self, id: usize) -> Option<HoleSite> {
        self.holes().into_iter().find(|h| h.id == id)
    }

    pub fn generative_hole(&self) -> Option<HoleSite> {
        self.holes().into_iter().find(|h| h.generative)
    }

    /// Structural copy with every span reset, for comparisons that ignore
    /// source positions.
    pub fn without_spans(&self) -> Repo {
        Repo {
            files: self
                .files
                .iter()
                .map(|f| SourceFile {
                    path: f.path.clone(),
                    text: String::new(),
                    defs: f.defs.iter().map(TopDef::without_spans).collect(),
                })
                .collect(),
        }
    }
}

impl TopDef {
    pub fn without_spans(&self) -> TopDef {
        match self {
            TopDef::Type {
                name,
                def,
                comment,
                ..
            } => TopDef::Type {
                name: name.clone(),
                def: def.clone(),
                span: Span::default(),
                comment: comment.clone(),
            },
            TopDef::Let {
                name,
                ann,
                bound,
                comment,
                ..
            } => TopDef::Let {
                name: name.clone(),
                ann: ann.clone(),
                bound: bound.without_spans(),
                span: Span::default(),
                comment: comment.clone(),
            },
        }
    }
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Expr {
        Expr { kind, span }
    }

    /// Pre-order traversal.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Var(_) | ExprKind::Lit(_) | ExprKind::Hole { .. } => {}
            ExprKind::Let { bound, body, .. } => {
                bound.walk(f);
                body.walk(f);
            }
            ExprKind::Fun { body, .. } => body.walk(f),
            ExprKind::App { func, args } => {
                func.walk(f);
                args.iter().for_each(|a| a.walk(f));
            }
            ExprKind::Tuple(es) | ExprKind::List(es) => es.iter().for_each(|e| e.walk(f)),
            ExprKind::Cons(h, t) => {
                h.walk(f);
                t.walk(f);
            }
            ExprKind::Case {
                scrutinee,
                branches,
            } => {
                scrutinee.walk(f);
                branches.iter().for_each(|(_, e)| e.walk(f));
            }
            ExprKind::Ctor { arg, .. } => {
                if let Some(a) = arg {
                    a.walk(f)
                }
            }
            ExprKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                cond.walk(f);
                then_branch.walk(f);
                else_branch.walk(f);
            }
            ExprKind::BinOp { lhs, rhs, .. } => {
                lhs.walk(f);
                rhs.walk(f);
            }
        }
    }

    pub fn without_spans(&self) -> Expr {
        let b = |e: &Expr| Box::new(e.without_spans());
        let kind = match &self.kind {
            ExprKind::Var(_) | ExprKind::Lit(_) | ExprKind::Hole { .. } => self.kind.clone(),
            ExprKind::Let {
                pat,
                ann,
                bound,
                body,
            } => ExprKind::Let {
                pat: pat.without_spans(),
                ann: ann.clone(),
                bound: b(bound),
                body: b(body),
            },
            ExprKind::Fun { param, body } => ExprKind::Fun {
                param: param.without_spans(),
                body: b(body),
            },
            ExprKind::App { func, args } => ExprKind::App {
                func: b(func),
                args: args.iter().map(Expr::without_spans).collect(),
            },
            ExprKind::Tuple(es) => ExprKind::Tuple(es.iter().map(Expr::without_spans).collect()),
            ExprKind::List(es) => ExprKind::List(es.iter().map(Expr::without_spans).collect()),
            ExprKind::Cons(h, t) => ExprKind::Cons(b(h), b(t)),
            ExprKind::Case {
                scrutinee,
                branches,
            } => ExprKind::Case {
                scrutinee: b(scrutinee),
                branches: branches
                    .iter()
                    .map(|(p, e)| (p.without_spans(), e.without_spans()))
                    .collect(),
            },
            ExprKind::Ctor { name, arg } => ExprKind::Ctor {
                name: name.clone(),
                arg: arg.as_ref().map(|a| b(a)),
            },
            ExprKind::If {
                cond,
                then_branch,
                else_branch,
            } => ExprKind::If {
                cond: b(cond),
                then_branch: b(then_branch),
                else_branch: b(else_branch),
            },
            ExprKind::BinOp { op, lhs, rhs } => ExprKind::BinOp {
                op: *op,
                lhs: b(lhs),
                rhs: b(rhs),
            },
        };
        Expr {
            kind,
            span: Span::default(),
        }
    }
}

impl Pattern {
    pub fn new(kind: PatternKind, span: Span) -> Pattern {
        Pattern { kind, span }
    }

    pub fn without_spans(&self) -> Pattern {
        let kind = match &self.kind {
            PatternKind::Var(_) | PatternKind::Wildcard | PatternKind::Lit(_) | PatternKind::EmptyList => {
                self.kind.clone()
            }
            PatternKind::Tuple(ps) => PatternKind::Tuple(ps.iter().map(Pattern::without_spans).collect()),
            PatternKind::Ctor(n, sub) => {
                PatternKind::Ctor(n.clone(), sub.as_ref().map(|p| Box::new(p.without_spans())))
            }
            PatternKind::Cons(h, t) => {
                PatternKind::Cons(Box::new(h.without_spans()), Box::new(t.without_spans()))
            }
        };
        Pattern {
            kind,
            span: Span::default(),
        }
    }
}
