//! Pretty-printer producing DSL text that parses back to the same program.

use std::fmt::Write;

use fensy_core::program::{Expr, Operand, Program, Stmt, StmtKind};

fn expr(e: &Expr, out: &mut String) {
    // compound children get parentheses, so precedence never matters
    let child = |e: &Expr, out: &mut String| match e {
        Expr::Const(_) | Expr::Bool(_) | Expr::Var(_) => expr(e, out),
        _ => {
            out.push('(');
            expr(e, out);
            out.push(')');
        }
    };
    match e {
        Expr::Const(v) => write!(out, "{v}").unwrap(),
        Expr::Bool(b) => write!(out, "{b}").unwrap(),
        Expr::Var(v) => match &v.thread {
            Some(t) => write!(out, "{t}.{}", v.name).unwrap(),
            None => out.push_str(&v.name),
        },
        Expr::Not(e) => {
            out.push('!');
            child(e, out);
        }
        Expr::And(a, b) | Expr::Or(a, b) => {
            child(a, out);
            out.push_str(if matches!(e, Expr::And(..)) {
                " && "
            } else {
                " || "
            });
            child(b, out);
        }
        Expr::Cmp(op, a, b) => {
            child(a, out);
            write!(out, " {} ", op.as_str()).unwrap();
            child(b, out);
        }
    }
}

pub fn print_expr(e: &Expr) -> String {
    let mut s = String::new();
    expr(e, &mut s);
    s
}

fn block(stmts: &[Stmt], depth: usize, out: &mut String) {
    for s in stmts {
        stmt(s, depth, out);
    }
}

fn stmt(s: &Stmt, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    match &s.kind {
        StmtKind::Load {
            dest,
            object,
            order,
        } => writeln!(out, "{pad}{dest} = load({object}, {order})").unwrap(),
        StmtKind::Store {
            object,
            value,
            order,
        } => {
            let v = match value {
                Operand::Const(c) => c.to_string(),
                Operand::Local(l) => l.clone(),
            };
            writeln!(out, "{pad}store({object}, {v}, {order})").unwrap()
        }
        StmtKind::FetchAdd {
            dest,
            object,
            addend,
            order,
        } => writeln!(out, "{pad}{dest} = fadd({object}, {addend}, {order})").unwrap(),
        StmtKind::Fence { order } => writeln!(out, "{pad}fence({order})").unwrap(),
        StmtKind::If {
            cond,
            then_branch,
            else_branch,
        } => {
            writeln!(out, "{pad}if ({}) {{", print_expr(cond)).unwrap();
            block(then_branch, depth + 1, out);
            if else_branch.is_empty() {
                writeln!(out, "{pad}}}").unwrap();
            } else {
                writeln!(out, "{pad}}} else {{").unwrap();
                block(else_branch, depth + 1, out);
                writeln!(out, "{pad}}}").unwrap();
            }
        }
        StmtKind::Repeat { count, body } => {
            writeln!(out, "{pad}repeat {count} {{").unwrap();
            block(body, depth + 1, out);
            writeln!(out, "{pad}}}").unwrap();
        }
    }
}

pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    writeln!(out, "program {}", p.name).unwrap();
    if !p.init.is_empty() {
        let inits: Vec<String> = p.init.iter().map(|(n, v)| format!("{n} = {v}")).collect();
        writeln!(out, "init {}", inits.join(", ")).unwrap();
    }
    for t in &p.threads {
        writeln!(out, "thread {} {{", t.name).unwrap();
        block(&t.body, 1, &mut out);
        writeln!(out, "}}").unwrap();
    }
    writeln!(out, "assert {}", print_expr(&p.assertion)).unwrap();
    out
}
