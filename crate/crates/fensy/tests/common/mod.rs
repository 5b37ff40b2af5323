//! Corpus loading and a brute-force trace oracle shared by the fensy tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use fensy::parse_program;
use fensy_core::consistency::is_consistent;
use fensy_core::program::{elaborate, CmpOp, Expr, Operand, StmtKind, Target, VarRef};
use fensy_core::trace::{Action, Site};
use fensy_core::{BinaryRelation, Event, MemoryOrder, Program, SourceLocation, Trace};

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

/// Every corpus program, sorted by file name.
pub fn corpus() -> Vec<(String, Program)> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "lit"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let src = std::fs::read_to_string(&p).unwrap();
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            let prog = parse_program(&src).unwrap_or_else(|e| panic!("{name}: {e}"));
            (name, prog)
        })
        .collect()
}

pub fn corpus_program(name: &str) -> Program {
    let src = std::fs::read_to_string(corpus_dir().join(format!("{name}.lit"))).unwrap();
    parse_program(&src).unwrap()
}

/// Action, object, order, value read, value written.
type Op = (Action, Option<usize>, MemoryOrder, Option<i64>, Option<i64>);

/// One execution of a thread: its accesses in order and its final locals.
#[derive(Clone, Debug)]
struct Run {
    ops: Vec<Op>,
    locals: BTreeMap<String, i64>,
}

fn cmp(op: CmpOp, a: i64, b: i64) -> bool {
    match op {
        CmpOp::Eq => a == b,
        CmpOp::Ne => a != b,
        CmpOp::Lt => a < b,
        CmpOp::Le => a <= b,
        CmpOp::Gt => a > b,
        CmpOp::Ge => a >= b,
    }
}

fn eval(e: &Expr, locals: &BTreeMap<String, i64>) -> i64 {
    match e {
        Expr::Const(v) => *v,
        Expr::Bool(b) => *b as i64,
        Expr::Var(v) => locals.get(&v.name).copied().unwrap_or(0),
        Expr::Not(x) => (eval(x, locals) == 0) as i64,
        Expr::And(a, b) => (eval(a, locals) != 0 && eval(b, locals) != 0) as i64,
        Expr::Or(a, b) => (eval(a, locals) != 0 || eval(b, locals) != 0) as i64,
        Expr::Cmp(op, a, b) => cmp(*op, eval(a, locals), eval(b, locals)) as i64,
    }
}

/// All runs of a statement list, with reads returning any value in `dom`.
fn runs(
    p: &Program,
    stmts: &[fensy_core::program::Stmt],
    start: Run,
    dom: &[BTreeSet<i64>],
) -> Vec<Run> {
    let mut cur = vec![start];
    for s in stmts {
        let mut next = Vec::new();
        for r in cur {
            match &s.kind {
                StmtKind::Load {
                    dest,
                    object,
                    order,
                } => {
                    let o = p.object_id(object).unwrap();
                    for &v in &dom[o] {
                        let mut r2 = r.clone();
                        r2.ops.push((Action::Read, Some(o), *order, Some(v), None));
                        r2.locals.insert(dest.clone(), v);
                        next.push(r2);
                    }
                }
                StmtKind::Store {
                    object,
                    value,
                    order,
                } => {
                    let o = p.object_id(object).unwrap();
                    let v = match value {
                        Operand::Const(c) => *c,
                        Operand::Local(l) => r.locals.get(l).copied().unwrap_or(0),
                    };
                    let mut r2 = r.clone();
                    r2.ops.push((Action::Write, Some(o), *order, None, Some(v)));
                    next.push(r2);
                }
                StmtKind::FetchAdd {
                    dest,
                    object,
                    addend,
                    order,
                } => {
                    let o = p.object_id(object).unwrap();
                    for &v in &dom[o] {
                        let mut r2 = r.clone();
                        r2.ops
                            .push((Action::Rmw, Some(o), *order, Some(v), Some(v + addend)));
                        r2.locals.insert(dest.clone(), v);
                        next.push(r2);
                    }
                }
                StmtKind::Fence { order } => {
                    let mut r2 = r.clone();
                    r2.ops.push((Action::Fence, None, *order, None, None));
                    next.push(r2);
                }
                StmtKind::If {
                    cond,
                    then_branch,
                    else_branch,
                } => {
                    let branch = if eval(cond, &r.locals) != 0 {
                        then_branch
                    } else {
                        else_branch
                    };
                    next.extend(runs(p, branch, r, dom));
                }
                StmtKind::Repeat { .. } => panic!("oracle needs a loop-free program"),
            }
        }
        cur = next;
    }
    cur
}

fn thread_runs(p: &Program, dom: &[BTreeSet<i64>]) -> Vec<Vec<Run>> {
    p.threads
        .iter()
        .map(|t| {
            let start = Run {
                ops: Vec::new(),
                locals: BTreeMap::new(),
            };
            runs(p, &t.body, start, dom)
        })
        .collect()
}

/// Values each object may hold: init plus anything some run can write,
/// iterated to a fixpoint.
fn domains(p: &Program) -> Vec<BTreeSet<i64>> {
    let mut dom: Vec<BTreeSet<i64>> = p.init.iter().map(|(_, v)| BTreeSet::from([*v])).collect();
    for _ in 0..8 {
        let mut next = dom.clone();
        for rs in thread_runs(p, &dom) {
            for r in rs {
                for (_, o, _, _, w) in &r.ops {
                    if let (Some(o), Some(w)) = (o, w) {
                        next[*o].insert(*w);
                    }
                }
            }
        }
        if next == dom {
            return dom;
        }
        dom = next;
    }
    dom
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        for mut q in permutations(&rest) {
            q.insert(0, x);
            out.push(q);
        }
    }
    out
}

fn product(bounds: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &b in bounds {
        out = out
            .into_iter()
            .flat_map(|pre| {
                (0..b).map(move |i| {
                    let mut v = pre.clone();
                    v.push(i);
                    v
                })
            })
            .collect();
    }
    out
}

/// Canonical form of a trace, independent of event numbering:
/// events keyed by (thread, position) with init events as (None, object).
pub type Canon = (
    Vec<(
        (Option<usize>, usize),
        &'static str,
        Option<usize>,
        MemoryOrder,
        Option<i64>,
        Option<i64>,
    )>,
    BTreeSet<((Option<usize>, usize), (Option<usize>, usize))>,
    BTreeSet<((Option<usize>, usize), (Option<usize>, usize))>,
    bool,
);

pub fn canon(t: &Trace) -> Canon {
    let key = |e: usize| {
        let ev = &t.events[e];
        match ev.thread {
            Some(th) => (Some(th), ev.idx),
            None => (None, ev.object.unwrap()),
        }
    };
    let mut evs: Vec<_> = t
        .events
        .iter()
        .map(|e| {
            (
                key(e.id),
                e.action.as_str(),
                e.object,
                e.order,
                e.read_value,
                e.write_value,
            )
        })
        .collect();
    evs.sort();
    let rel = |r: &BinaryRelation| r.pairs().map(|(a, b)| (key(a), key(b))).collect();
    (evs, rel(&t.rf), rel(&t.mo), t.buggy)
}

/// Largest number of events (init included) in any run combination.
pub fn max_events(p: &Program) -> usize {
    let p = elaborate(p, 16).unwrap();
    let dom = domains(&p);
    p.init.len()
        + thread_runs(&p, &dom)
            .iter()
            .map(|rs| rs.iter().map(|r| r.ops.len()).max().unwrap_or(0))
            .sum::<usize>()
}

/// Brute force: every combination of thread runs, rf choice and mo
/// permutation, kept when consistent. Returns the canonical forms in
/// enumeration order (duplicates kept).
pub fn oracle_traces(p: &Program) -> Vec<Canon> {
    let p = elaborate(p, 16).unwrap();
    let dom = domains(&p);
    let all_runs = thread_runs(&p, &dom);
    let nobj = p.init.len();
    let mut out = Vec::new();
    for choice in product(&all_runs.iter().map(|v| v.len()).collect::<Vec<_>>()) {
        let mut events: Vec<Event> = (0..nobj)
            .map(|o| Event {
                id: o,
                thread: None,
                idx: 0,
                action: Action::Write,
                object: Some(o),
                order: MemoryOrder::Relaxed,
                site: Site::Init,
                read_value: None,
                write_value: Some(p.init[o].1),
            })
            .collect();
        for (t, &c) in choice.iter().enumerate() {
            for (i, &(action, object, order, rv, wv)) in all_runs[t][c].ops.iter().enumerate() {
                events.push(Event {
                    id: events.len(),
                    thread: Some(t),
                    idx: i,
                    action,
                    object,
                    order,
                    site: Site::Stmt {
                        loc: SourceLocation {
                            thread: t,
                            index: i,
                        },
                        origin: i,
                    },
                    read_value: rv,
                    write_value: wv,
                });
            }
        }
        let n = events.len();
        let mut sb = BinaryRelation::empty(n);
        for a in &events {
            for b in &events {
                if a.thread.is_some() && a.thread == b.thread && a.idx < b.idx {
                    sb.insert(a.id, b.id);
                }
            }
        }
        let reads: Vec<usize> = events
            .iter()
            .filter(|e| e.is_read())
            .map(|e| e.id)
            .collect();
        let sources: Vec<Vec<usize>> = reads
            .iter()
            .map(|&r| {
                events
                    .iter()
                    .filter(|w| {
                        w.id != r
                            && w.is_write()
                            && w.object == events[r].object
                            && w.write_value == events[r].read_value
                    })
                    .map(|w| w.id)
                    .collect()
            })
            .collect();
        let mo_perms: Vec<Vec<Vec<usize>>> = (0..nobj)
            .map(|o| {
                let ws: Vec<usize> = events
                    .iter()
                    .filter(|e| e.thread.is_some() && e.is_write() && e.object == Some(o))
                    .map(|e| e.id)
                    .collect();
                permutations(&ws)
                    .into_iter()
                    .map(|mut v| {
                        v.insert(0, o);
                        v
                    })
                    .collect()
            })
            .collect();
        for mo_choice in product(&mo_perms.iter().map(|v| v.len()).collect::<Vec<_>>()) {
            let mut mo = BinaryRelation::empty(n);
            let mut pred = vec![None; n];
            for (o, &c) in mo_choice.iter().enumerate() {
                let chain = &mo_perms[o][c];
                for (i, &a) in chain.iter().enumerate() {
                    if i > 0 {
                        pred[a] = Some(chain[i - 1]);
                    }
                    for &b in &chain[i + 1..] {
                        mo.insert(a, b);
                    }
                }
            }
            for rf_choice in product(&sources.iter().map(|v| v.len()).collect::<Vec<_>>()) {
                let rf = BinaryRelation::from_pairs(
                    n,
                    reads
                        .iter()
                        .enumerate()
                        .map(|(k, &r)| (sources[k][rf_choice[k]], r)),
                );
                // an rmw reads its immediate mo-predecessor
                if reads.iter().any(|&r| {
                    events[r].action == Action::Rmw && rf.predecessors(r).next() != pred[r]
                }) {
                    continue;
                }
                let mut t = Trace {
                    events: events.clone(),
                    sb: sb.clone(),
                    rf,
                    mo: mo.clone(),
                    object_names: p.init.iter().map(|(n, _)| n.clone()).collect(),
                    thread_names: p.threads.iter().map(|t| t.name.clone()).collect(),
                    final_objects: Vec::new(),
                    final_locals: Vec::new(),
                    buggy: false,
                    thread_gaps: p.threads.iter().map(|t| t.source_len).collect(),
                };
                if !is_consistent(&t) {
                    continue;
                }
                let finals: Vec<i64> = (0..nobj)
                    .map(|o| {
                        events[*mo_perms[o][mo_choice[o]].last().unwrap()]
                            .write_value
                            .unwrap()
                    })
                    .collect();
                let locals: Vec<&BTreeMap<String, i64>> = choice
                    .iter()
                    .enumerate()
                    .map(|(t, &c)| &all_runs[t][c].locals)
                    .collect();
                let lookup = |v: &VarRef| match p.resolve(v).unwrap() {
                    Target::Object(o) => finals[o],
                    Target::Local(th, name) => locals[th].get(&name).copied().unwrap_or(0),
                };
                t.buggy = !p.assertion.holds(&lookup);
                out.push(canon(&t));
            }
        }
    }
    out
}
