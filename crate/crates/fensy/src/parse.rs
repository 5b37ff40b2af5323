//! Lexer and recursive-descent parser for the litmus DSL.

use fensy_core::program::{CmpOp, Expr, Operand, Program, Stmt, StmtKind, Thread, VarRef};
use fensy_core::{MemoryOrder, ProgramError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("{line}:{col}: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error(transparent)]
    Invalid(#[from] ProgramError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Sym(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMBOLS: [&str; 18] = [
    "==", "!=", "<=", ">=", "&&", "||", "{", "}", "(", ")", ",", "=", "<", ">", "!", ".", ";", "-",
];

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    for (ln, line) in src.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        let bytes = line.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            let (l, col) = (ln + 1, i + 1);
            if c.is_whitespace() {
                i += 1;
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token {
                    tok: Tok::Ident(line[start..i].to_string()),
                    line: l,
                    col,
                });
            } else if c.is_ascii_digit() {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let v = line[start..i].parse().map_err(|_| ParseError::Syntax {
                    line: l,
                    col,
                    msg: "integer out of range".into(),
                })?;
                out.push(Token {
                    tok: Tok::Int(v),
                    line: l,
                    col,
                });
            } else if let Some(s) = SYMBOLS.iter().find(|s| line[i..].starts_with(**s)) {
                out.push(Token {
                    tok: Tok::Sym(s),
                    line: l,
                    col,
                });
                i += s.len();
            } else {
                return Err(ParseError::Syntax {
                    line: l,
                    col,
                    msg: format!("unexpected character `{c}`"),
                });
            }
        }
    }
    let (line, col) = out.last().map_or((1, 1), |t| (t.line, t.col + 1));
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let t = &self.toks[self.pos];
        Err(ParseError::Syntax {
            line: t.line,
            col: t.col,
            msg: msg.into(),
        })
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == k)
    }

    fn sym(&mut self, s: &str) -> PResult<()> {
        if self.is_sym(s) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected `{s}`"))
        }
    }

    fn kw(&mut self, k: &str) -> PResult<()> {
        if self.is_kw(k) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected `{k}`"))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.err("expected identifier"),
        }
    }

    fn int(&mut self) -> PResult<i64> {
        let neg = self.is_sym("-");
        if neg {
            self.bump();
        }
        match *self.peek() {
            Tok::Int(v) => {
                self.bump();
                Ok(if neg { -v } else { v })
            }
            _ => self.err("expected integer"),
        }
    }

    fn order(&mut self) -> PResult<MemoryOrder> {
        let save = self.pos;
        let name = self.ident()?;
        name.parse().or_else(|_| {
            self.pos = save;
            self.err(format!(
                "unknown memory order `{name}` (expected rlx, rel, acq, ar or sc)"
            ))
        })
    }

    fn program(&mut self) -> PResult<Program> {
        self.kw("program")?;
        let name = self.ident()?;
        let mut init = Vec::new();
        let mut threads = Vec::new();
        let mut assertion = None;
        loop {
            if self.is_kw("init") {
                self.bump();
                loop {
                    let obj = self.ident()?;
                    self.sym("=")?;
                    init.push((obj, self.int()?));
                    if !self.is_sym(",") {
                        break;
                    }
                    self.bump();
                }
            } else if self.is_kw("thread") {
                self.bump();
                let tname = self.ident()?;
                self.sym("{")?;
                let body = self.block()?;
                threads.push(Thread::new(&tname, body));
            } else if self.is_kw("assert") {
                if assertion.is_some() {
                    return self.err("duplicate assert");
                }
                self.bump();
                assertion = Some(self.expr()?);
            } else if *self.peek() == Tok::Eof {
                break;
            } else {
                return self.err("expected `init`, `thread` or `assert`");
            }
        }
        let Some(assertion) = assertion else {
            return self.err("missing assert");
        };
        Ok(Program {
            name,
            init,
            threads,
            assertion,
        })
    }

    /// Statements up to and including the closing brace.
    fn block(&mut self) -> PResult<Vec<Stmt>> {
        let mut out = Vec::new();
        loop {
            if self.is_sym("}") {
                self.bump();
                return Ok(out);
            }
            if self.is_sym(";") {
                self.bump();
                continue;
            }
            out.push(self.stmt()?);
        }
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let kind = if self.is_kw("store") {
            self.bump();
            self.sym("(")?;
            let object = self.ident()?;
            self.sym(",")?;
            let value = match self.peek() {
                Tok::Ident(_) => Operand::Local(self.ident()?),
                _ => Operand::Const(self.int()?),
            };
            self.sym(",")?;
            let order = self.order()?;
            self.sym(")")?;
            StmtKind::Store {
                object,
                value,
                order,
            }
        } else if self.is_kw("fence") {
            self.bump();
            self.sym("(")?;
            let order = self.order()?;
            self.sym(")")?;
            StmtKind::Fence { order }
        } else if self.is_kw("if") {
            self.bump();
            self.sym("(")?;
            let cond = self.expr()?;
            self.sym(")")?;
            self.sym("{")?;
            let then_branch = self.block()?;
            let else_branch = if self.is_kw("else") {
                self.bump();
                self.sym("{")?;
                self.block()?
            } else {
                Vec::new()
            };
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            }
        } else if self.is_kw("repeat") {
            self.bump();
            let count = self.int()?;
            let count =
                u32::try_from(count).or_else(|_| self.err("repeat count must be non-negative"))?;
            self.sym("{")?;
            let body = self.block()?;
            StmtKind::Repeat { count, body }
        } else if matches!(self.peek(), Tok::Ident(_)) && matches!(self.peek_at(1), Tok::Sym("=")) {
            let dest = self.ident()?;
            self.sym("=")?;
            if self.is_kw("load") {
                self.bump();
                self.sym("(")?;
                let object = self.ident()?;
                self.sym(",")?;
                let order = self.order()?;
                self.sym(")")?;
                StmtKind::Load {
                    dest,
                    object,
                    order,
                }
            } else if self.is_kw("fadd") {
                self.bump();
                self.sym("(")?;
                let object = self.ident()?;
                self.sym(",")?;
                let addend = self.int()?;
                self.sym(",")?;
                let order = self.order()?;
                self.sym(")")?;
                StmtKind::FetchAdd {
                    dest,
                    object,
                    addend,
                    order,
                }
            } else {
                return self.err("expected `load` or `fadd`");
            }
        } else {
            return self.err("expected a statement");
        };
        Ok(Stmt::new(kind))
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.conj()?;
        while self.is_sym("||") {
            self.bump();
            lhs = Expr::Or(Box::new(lhs), Box::new(self.conj()?));
        }
        Ok(lhs)
    }

    fn conj(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while self.is_sym("&&") {
            self.bump();
            lhs = Expr::And(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.is_sym("!") {
            self.bump();
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        let lhs = self.atom()?;
        let op = match self.peek() {
            Tok::Sym("==") => CmpOp::Eq,
            Tok::Sym("!=") => CmpOp::Ne,
            Tok::Sym("<") => CmpOp::Lt,
            Tok::Sym("<=") => CmpOp::Le,
            Tok::Sym(">") => CmpOp::Gt,
            Tok::Sym(">=") => CmpOp::Ge,
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.atom()?;
        Ok(Expr::Cmp(op, Box::new(lhs), Box::new(rhs)))
    }

    fn atom(&mut self) -> PResult<Expr> {
        if self.is_sym("(") {
            self.bump();
            let e = self.expr()?;
            self.sym(")")?;
            return Ok(e);
        }
        if self.is_kw("true") || self.is_kw("false") {
            return Ok(Expr::Bool(self.ident()? == "true"));
        }
        if let Tok::Ident(_) = self.peek() {
            let first = self.ident()?;
            if self.is_sym(".") {
                self.bump();
                let name = self.ident()?;
                return Ok(Expr::Var(VarRef::qualified(&first, &name)));
            }
            return Ok(Expr::Var(VarRef::local(&first)));
        }
        Ok(Expr::Const(self.int()?))
    }
}

/// Parse and validate a litmus program.
pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
    }
    .program()?;
    p.normalize_as_input();
    p.validate()?;
    Ok(p)
}
