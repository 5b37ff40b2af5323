//! Litmus program AST, validation and loop elaboration.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::ProgramError;
use crate::order::MemoryOrder;

pub type ThreadId = usize;
pub type ObjectId = usize;

/// Position of a statement: pre-order index within its thread.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SourceLocation {
    pub thread: ThreadId,
    pub index: usize,
}

/// A place where a fence can be inserted in the source program.
///
/// `gap == k` means immediately before statement `k` of `thread`; `gap` equal
/// to the thread's statement count means the end of the thread.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FenceSlot {
    pub thread: ThreadId,
    pub gap: usize,
}

impl fmt::Display for FenceSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}g{}", self.thread, self.gap)
    }
}

/// Where a statement came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Provenance {
    /// Present in the user's input at this pre-order index.
    Input(usize),
    /// Inserted by the synthesizer in the given iteration (1-based).
    Synthesized(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Operand {
    Const(i64),
    Local(String),
}

/// Reference to a thread-local variable, optionally qualified by thread name.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VarRef {
    pub thread: Option<String>,
    pub name: String,
}

impl VarRef {
    pub fn local(name: &str) -> Self {
        VarRef {
            thread: None,
            name: name.into(),
        }
    }

    pub fn qualified(thread: &str, name: &str) -> Self {
        VarRef {
            thread: Some(thread.into()),
            name: name.into(),
        }
    }
}

/// What an assertion variable refers to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Target {
    Object(ObjectId),
    Local(ThreadId, String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn as_str(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    fn apply(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }
}

/// Integer / boolean expression. Booleans are 0 and 1; any nonzero is true.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Const(i64),
    Bool(bool),
    Var(VarRef),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn eval(&self, lookup: &dyn Fn(&VarRef) -> i64) -> i64 {
        match self {
            Expr::Const(v) => *v,
            Expr::Bool(b) => *b as i64,
            Expr::Var(v) => lookup(v),
            Expr::Not(e) => (e.eval(lookup) == 0) as i64,
            Expr::And(a, b) => (a.eval(lookup) != 0 && b.eval(lookup) != 0) as i64,
            Expr::Or(a, b) => (a.eval(lookup) != 0 || b.eval(lookup) != 0) as i64,
            Expr::Cmp(op, a, b) => op.apply(a.eval(lookup), b.eval(lookup)) as i64,
        }
    }

    pub fn holds(&self, lookup: &dyn Fn(&VarRef) -> i64) -> bool {
        self.eval(lookup) != 0
    }

    pub fn vars(&self, out: &mut Vec<VarRef>) {
        match self {
            Expr::Const(_) | Expr::Bool(_) => {}
            Expr::Var(v) => out.push(v.clone()),
            Expr::Not(e) => e.vars(out),
            Expr::And(a, b) | Expr::Or(a, b) | Expr::Cmp(_, a, b) => {
                a.vars(out);
                b.vars(out);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum StmtKind {
    Load {
        dest: String,
        object: String,
        order: MemoryOrder,
    },
    Store {
        object: String,
        value: Operand,
        order: MemoryOrder,
    },
    FetchAdd {
        dest: String,
        object: String,
        addend: i64,
        order: MemoryOrder,
    },
    Fence {
        order: MemoryOrder,
    },
    If {
        cond: Expr,
        then_branch: Vec<Stmt>,
        else_branch: Vec<Stmt>,
    },
    Repeat {
        count: u32,
        body: Vec<Stmt>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Stmt {
    pub kind: StmtKind,
    pub loc: SourceLocation,
    /// Pre-order index of the statement this one was copied from before
    /// loop elaboration. Equal to `loc.index` in an unelaborated program.
    pub origin: usize,
    pub provenance: Provenance,
}

impl Stmt {
    pub fn new(kind: StmtKind) -> Self {
        Stmt {
            kind,
            loc: SourceLocation {
                thread: 0,
                index: 0,
            },
            origin: 0,
            provenance: Provenance::Input(0),
        }
    }

    pub fn fence(order: MemoryOrder, provenance: Provenance) -> Self {
        Stmt {
            provenance,
            ..Stmt::new(StmtKind::Fence { order })
        }
    }

    pub fn children(&self) -> impl Iterator<Item = &Vec<Stmt>> {
        let (a, b): (Option<&Vec<Stmt>>, Option<&Vec<Stmt>>) = match &self.kind {
            StmtKind::If {
                then_branch,
                else_branch,
                ..
            } => (Some(then_branch), Some(else_branch)),
            StmtKind::Repeat { body, .. } => (Some(body), None),
            _ => (None, None),
        };
        a.into_iter().chain(b)
    }

    fn children_mut(&mut self) -> Vec<&mut Vec<Stmt>> {
        match &mut self.kind {
            StmtKind::If {
                then_branch,
                else_branch,
                ..
            } => alloc::vec![then_branch, else_branch],
            StmtKind::Repeat { body, .. } => alloc::vec![body],
            _ => Vec::new(),
        }
    }

    pub fn fence_order(&self) -> Option<MemoryOrder> {
        match self.kind {
            StmtKind::Fence { order } => Some(order),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Thread {
    pub name: String,
    pub body: Vec<Stmt>,
    /// Number of pre-order statements in the source this thread was
    /// elaborated from; the end-of-thread fence gap.
    pub source_len: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Program {
    pub name: String,
    pub init: Vec<(String, i64)>,
    pub threads: Vec<Thread>,
    pub assertion: Expr,
}

fn walk<'a>(block: &'a [Stmt], f: &mut dyn FnMut(&'a Stmt)) {
    for s in block {
        f(s);
        for c in s.children() {
            walk(c, f);
        }
    }
}

fn walk_mut(block: &mut [Stmt], f: &mut dyn FnMut(&mut Stmt)) {
    for s in block.iter_mut() {
        f(s);
        for c in s.children_mut() {
            walk_mut(c, f);
        }
    }
}

impl Thread {
    pub fn new(name: &str, body: Vec<Stmt>) -> Self {
        Thread {
            name: name.into(),
            body,
            source_len: 0,
        }
    }

    /// All statements in pre-order.
    pub fn statements(&self) -> Vec<&Stmt> {
        let mut out = Vec::new();
        walk(&self.body, &mut |s| out.push(s));
        out
    }

    pub fn statement_count(&self) -> usize {
        let mut n = 0;
        walk(&self.body, &mut |_| n += 1);
        n
    }

    pub fn find(&self, index: usize) -> Option<&Stmt> {
        let mut hit = None;
        walk(&self.body, &mut |s| {
            if s.loc.index == index {
                hit = Some(s);
            }
        });
        hit
    }

    pub fn locals(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        walk(&self.body, &mut |s| match &s.kind {
            StmtKind::Load { dest, .. } | StmtKind::FetchAdd { dest, .. } => {
                out.insert(dest.clone());
            }
            _ => {}
        });
        out
    }
}

impl Program {
    pub fn object_id(&self, name: &str) -> Option<ObjectId> {
        self.init.iter().position(|(n, _)| n == name)
    }

    pub fn thread_id(&self, name: &str) -> Option<ThreadId> {
        self.threads.iter().position(|t| t.name == name)
    }

    pub fn is_loop_free(&self) -> bool {
        let mut free = true;
        for t in &self.threads {
            walk(&t.body, &mut |s| {
                if matches!(s.kind, StmtKind::Repeat { .. }) {
                    free = false;
                }
            });
        }
        free
    }

    /// Assign pre-order locations. `origin` and provenance are untouched.
    pub fn renumber(&mut self) {
        for (tid, t) in self.threads.iter_mut().enumerate() {
            let mut i = 0;
            walk_mut(&mut t.body, &mut |s| {
                s.loc = SourceLocation {
                    thread: tid,
                    index: i,
                };
                i += 1;
            });
        }
    }

    /// Renumber and reset every statement to be an input statement of itself:
    /// `origin == loc.index`, `Provenance::Input(loc.index)`, and
    /// `source_len` equal to the statement count.
    pub fn normalize_as_input(&mut self) {
        self.renumber();
        for t in self.threads.iter_mut() {
            walk_mut(&mut t.body, &mut |s| {
                s.origin = s.loc.index;
                s.provenance = Provenance::Input(s.loc.index);
            });
            t.source_len = t.statement_count();
        }
    }

    /// Renumber after an edit, keeping provenance; `origin` follows `loc`.
    pub fn refresh(&mut self) {
        self.renumber();
        for t in self.threads.iter_mut() {
            walk_mut(&mut t.body, &mut |s| s.origin = s.loc.index);
            t.source_len = t.statement_count();
        }
    }

    pub fn validate(&self) -> Result<(), ProgramError> {
        let mut objects = BTreeSet::new();
        for (name, _) in &self.init {
            if !objects.insert(name.as_str()) {
                return Err(ProgramError::DuplicateObject(name.clone()));
            }
        }
        if self.threads.is_empty() {
            return Err(ProgramError::NoThreads);
        }
        let mut names = BTreeSet::new();
        for t in &self.threads {
            if !names.insert(t.name.as_str()) {
                return Err(ProgramError::DuplicateThread(t.name.clone()));
            }
        }
        for t in &self.threads {
            let locals = t.locals();
            let mut err = None;
            walk(&t.body, &mut |s| {
                if err.is_some() {
                    return;
                }
                let check_obj = |o: &String| {
                    if objects.contains(o.as_str()) {
                        None
                    } else {
                        Some(ProgramError::UndeclaredObject(o.clone()))
                    }
                };
                err = match &s.kind {
                    StmtKind::Load { object, dest, .. }
                    | StmtKind::FetchAdd { object, dest, .. } => {
                        if objects.contains(dest.as_str()) {
                            Some(ProgramError::LocalShadowsObject(dest.clone()))
                        } else {
                            check_obj(object)
                        }
                    }
                    StmtKind::Store { object, value, .. } => check_obj(object).or(match value {
                        Operand::Local(l) if !locals.contains(l) => {
                            Some(ProgramError::UndeclaredLocal(l.clone()))
                        }
                        _ => None,
                    }),
                    StmtKind::Fence { order } if *order == MemoryOrder::Relaxed => {
                        Some(ProgramError::RelaxedFence)
                    }
                    StmtKind::If { cond, .. } => {
                        let mut vs = Vec::new();
                        cond.vars(&mut vs);
                        vs.into_iter().find_map(|v| {
                            if v.thread.as_ref().is_some_and(|q| *q != t.name) {
                                Some(ProgramError::ForeignLocal(v.name))
                            } else if !locals.contains(&v.name) {
                                Some(ProgramError::UndeclaredLocal(v.name))
                            } else {
                                None
                            }
                        })
                    }
                    _ => None,
                };
            });
            if let Some(e) = err {
                return Err(e);
            }
        }
        let mut vs = Vec::new();
        self.assertion.vars(&mut vs);
        for v in vs {
            self.resolve(&v)?;
        }
        Ok(())
    }

    /// Resolve an assertion variable. An unqualified name matching an object
    /// denotes the object's final value.
    pub fn resolve(&self, v: &VarRef) -> Result<Target, ProgramError> {
        match &v.thread {
            Some(t) => {
                let tid = self
                    .thread_id(t)
                    .ok_or_else(|| ProgramError::UnknownThread(t.clone()))?;
                if self.threads[tid].locals().contains(&v.name) {
                    Ok(Target::Local(tid, v.name.clone()))
                } else {
                    Err(ProgramError::UndeclaredLocal(v.name.clone()))
                }
            }
            None => {
                if let Some(o) = self.object_id(&v.name) {
                    return Ok(Target::Object(o));
                }
                let owners: Vec<ThreadId> = (0..self.threads.len())
                    .filter(|&i| self.threads[i].locals().contains(&v.name))
                    .collect();
                match owners.as_slice() {
                    [tid] => Ok(Target::Local(*tid, v.name.clone())),
                    [] => Err(ProgramError::UndeclaredLocal(v.name.clone())),
                    _ => Err(ProgramError::AmbiguousLocal(v.name.clone())),
                }
            }
        }
    }

    pub fn object_names(&self) -> Vec<&str> {
        self.init.iter().map(|(n, _)| n.as_str()).collect()
    }
}

/// Unroll every `repeat` into copies of its body.
///
/// Each copy keeps `origin` pointing at the pre-order index of the statement
/// it came from, so fence slots stay expressed against the loop program.
pub fn elaborate(p: &Program, unroll_bound: u32) -> Result<Program, ProgramError> {
    fn copy(block: &[Stmt], bound: u32, out: &mut Vec<Stmt>) -> Result<(), ProgramError> {
        for s in block {
            match &s.kind {
                StmtKind::Repeat { count, body } => {
                    if *count > bound {
                        return Err(ProgramError::UnrollBound {
                            count: *count,
                            bound,
                        });
                    }
                    for _ in 0..*count {
                        copy(body, bound, out)?;
                    }
                }
                StmtKind::If {
                    cond,
                    then_branch,
                    else_branch,
                } => {
                    let mut t = Vec::new();
                    let mut e = Vec::new();
                    copy(then_branch, bound, &mut t)?;
                    copy(else_branch, bound, &mut e)?;
                    out.push(Stmt {
                        kind: StmtKind::If {
                            cond: cond.clone(),
                            then_branch: t,
                            else_branch: e,
                        },
                        origin: s.loc.index,
                        ..s.clone()
                    });
                }
                _ => out.push(Stmt {
                    origin: s.loc.index,
                    ..s.clone()
                }),
            }
        }
        Ok(())
    }

    let mut out = p.clone();
    for (t, src) in out.threads.iter_mut().zip(&p.threads) {
        let mut body = Vec::new();
        copy(&src.body, unroll_bound, &mut body)?;
        t.body = body;
        t.source_len = src.statement_count();
    }
    out.renumber();
    Ok(out)
}

/// Number of enclosing `repeat` copies of the statement at `index`.
pub fn dynamic_copies(thread: &Thread, index: usize) -> u32 {
    fn go(block: &[Stmt], index: usize, factor: u32) -> Option<u32> {
        for s in block {
            if s.loc.index == index {
                return Some(factor);
            }
            let f = match &s.kind {
                StmtKind::Repeat { count, .. } => factor.saturating_mul(*count),
                _ => factor,
            };
            for c in s.children() {
                if let Some(r) = go(c, index, f) {
                    return Some(r);
                }
            }
        }
        None
    }
    go(&thread.body, index, 1).unwrap_or(1)
}

/// Insert fences before the statements named by `slots` (gap indices refer to
/// the current numbering of `p`) and strengthen existing fences. Adjacent
/// fences in a block are merged with the join of their orders. The result is
/// renumbered with provenance kept.
pub fn insert_fences(
    p: &Program,
    slots: &BTreeMap<FenceSlot, MemoryOrder>,
    strengthen: &BTreeMap<SourceLocation, MemoryOrder>,
    iteration: usize,
) -> Program {
    fn insert(block: &mut Vec<Stmt>, gap: usize, fence: &Stmt) -> bool {
        if let Some(pos) = block.iter().position(|s| s.loc.index == gap) {
            block.insert(pos, fence.clone());
            return true;
        }
        for s in block.iter_mut() {
            for c in s.children_mut() {
                if insert(c, gap, fence) {
                    return true;
                }
            }
        }
        false
    }

    fn merge(block: &mut Vec<Stmt>) {
        let mut out: Vec<Stmt> = Vec::with_capacity(block.len());
        for mut s in block.drain(..) {
            for c in s.children_mut() {
                merge(c);
            }
            if let (Some(prev), StmtKind::Fence { order }) = (out.last_mut(), &s.kind) {
                if let StmtKind::Fence { order: po } = &mut prev.kind {
                    *po = po.join(*order);
                    if matches!(prev.provenance, Provenance::Synthesized(_))
                        && matches!(s.provenance, Provenance::Input(_))
                    {
                        prev.provenance = s.provenance;
                    }
                    continue;
                }
            }
            out.push(s);
        }
        *block = out;
    }

    let mut out = p.clone();
    for (tid, t) in out.threads.iter_mut().enumerate() {
        walk_mut(&mut t.body, &mut |s| {
            if let StmtKind::Fence { order } = &mut s.kind {
                if let Some(o) = strengthen.get(&s.loc) {
                    *order = order.join(*o);
                }
            }
        });
        let count = t.statement_count();
        for (slot, order) in slots
            .range(
                FenceSlot {
                    thread: tid,
                    gap: 0,
                }..=FenceSlot {
                    thread: tid,
                    gap: usize::MAX,
                },
            )
            .rev()
        {
            let fence = Stmt::fence(*order, Provenance::Synthesized(iteration));
            if slot.gap >= count {
                t.body.push(fence);
            } else {
                let ok = insert(&mut t.body, slot.gap, &fence);
                debug_assert!(ok, "slot {slot} not found");
            }
        }
        merge(&mut t.body);
    }
    out.renumber();
    for t in out.threads.iter_mut() {
        t.source_len = t.statement_count();
    }
    out
}

/// Remove or replace the statement at `loc`. `None` removes it.
pub fn replace_statement(p: &Program, loc: SourceLocation, with: Option<Stmt>) -> Program {
    fn go(block: &mut Vec<Stmt>, index: usize, with: &Option<Stmt>) -> bool {
        if let Some(pos) = block.iter().position(|s| s.loc.index == index) {
            match with {
                Some(s) => block[pos] = s.clone(),
                None => {
                    block.remove(pos);
                }
            }
            return true;
        }
        block
            .iter_mut()
            .any(|s| s.children_mut().into_iter().any(|c| go(c, index, with)))
    }
    let mut out = p.clone();
    go(&mut out.threads[loc.thread].body, loc.index, &with);
    out.renumber();
    for t in out.threads.iter_mut() {
        t.source_len = t.statement_count();
    }
    out
}
