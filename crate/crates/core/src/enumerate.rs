//! Exhaustive enumeration of consistent traces of a loop-free program.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::budget::{Budget, Limits};
use crate::consistency::is_consistent_with;
use crate::error::ResourceLimit;
use crate::order::MemoryOrder;
use crate::program::{ObjectId, Operand, Program, SourceLocation, Stmt, StmtKind, Target};
use crate::relation::BinaryRelation;
use crate::sync::Derived;
use crate::trace::{Action, Event, Site, Trace};

/// One memory access or fence on a thread path.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Op {
    action: Action,
    object: Option<ObjectId>,
    order: MemoryOrder,
    loc: SourceLocation,
    origin: usize,
    read_value: Option<i64>,
    write_value: Option<i64>,
}

/// A complete control-flow path of one thread with the values it read.
#[derive(Clone, Debug, PartialEq, Eq)]
struct ThreadPath {
    ops: Vec<Op>,
    locals: BTreeMap<String, i64>,
}

fn explore(
    p: &Program,
    domains: &[BTreeSet<i64>],
    mut work: Vec<&Stmt>,
    mut path: ThreadPath,
    out: &mut Vec<ThreadPath>,
) {
    while let Some(s) = work.pop() {
        let obj = |name: &str| p.object_id(name).expect("validated object");
        let op = |action, object, order| Op {
            action,
            object,
            order,
            loc: s.loc,
            origin: s.origin,
            read_value: None,
            write_value: None,
        };
        match &s.kind {
            StmtKind::Load {
                dest,
                object,
                order,
            } => {
                let o = obj(object);
                for &v in &domains[o] {
                    let mut next = path.clone();
                    next.locals.insert(dest.clone(), v);
                    next.ops.push(Op {
                        read_value: Some(v),
                        ..op(Action::Read, Some(o), *order)
                    });
                    explore(p, domains, work.clone(), next, out);
                }
                return;
            }
            StmtKind::FetchAdd {
                dest,
                object,
                addend,
                order,
            } => {
                let o = obj(object);
                for &v in &domains[o] {
                    let mut next = path.clone();
                    next.locals.insert(dest.clone(), v);
                    next.ops.push(Op {
                        read_value: Some(v),
                        write_value: Some(v.wrapping_add(*addend)),
                        ..op(Action::Rmw, Some(o), *order)
                    });
                    explore(p, domains, work.clone(), next, out);
                }
                return;
            }
            StmtKind::Store {
                object,
                value,
                order,
            } => {
                let v = match value {
                    Operand::Const(c) => *c,
                    Operand::Local(l) => path.locals.get(l).copied().unwrap_or(0),
                };
                path.ops.push(Op {
                    write_value: Some(v),
                    ..op(Action::Write, Some(obj(object)), *order)
                });
            }
            StmtKind::Fence { order } => path.ops.push(op(Action::Fence, None, *order)),
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let locals = &path.locals;
                let taken = cond.holds(&|v| locals.get(&v.name).copied().unwrap_or(0));
                let branch = if taken { then_branch } else { else_branch };
                work.extend(branch.iter().rev());
            }
            StmtKind::Repeat { count, body } => {
                for _ in 0..*count {
                    work.extend(body.iter().rev());
                }
            }
        }
    }
    out.push(path);
}

fn thread_paths(p: &Program, domains: &[BTreeSet<i64>]) -> Vec<Vec<ThreadPath>> {
    p.threads
        .iter()
        .map(|t| {
            let mut out = Vec::new();
            let empty = ThreadPath {
                ops: Vec::new(),
                locals: BTreeMap::new(),
            };
            explore(p, domains, t.body.iter().rev().collect(), empty, &mut out);
            out
        })
        .collect()
}

/// Values each object can hold. A value needs at most one hop per write
/// statement to be produced, which bounds the fixpoint even with fetch-adds.
fn value_domains(p: &Program) -> Vec<BTreeSet<i64>> {
    let mut domains: Vec<BTreeSet<i64>> =
        p.init.iter().map(|(_, v)| BTreeSet::from([*v])).collect();
    let writes = p
        .threads
        .iter()
        .flat_map(|t| t.statements())
        .filter(|s| matches!(s.kind, StmtKind::Store { .. } | StmtKind::FetchAdd { .. }))
        .count();
    for _ in 0..=writes {
        let mut grown = false;
        for paths in thread_paths(p, &domains) {
            for path in paths {
                for op in path.ops {
                    if let (Some(o), Some(v)) = (op.object, op.write_value) {
                        grown |= domains[o].insert(v);
                    }
                }
            }
        }
        if !grown {
            break;
        }
    }
    domains
}

/// Step an odometer with per-digit bounds; the last digit turns fastest.
fn advance(digits: &mut [usize], bounds: &[usize]) -> bool {
    for i in (0..digits.len()).rev() {
        digits[i] += 1;
        if digits[i] < bounds[i] {
            return true;
        }
        digits[i] = 0;
    }
    false
}

/// All interleavings of per-thread write sequences, in lexicographic order
/// of the chosen thread at each step.
fn interleavings(seqs: &[Vec<usize>]) -> Vec<Vec<usize>> {
    fn go(
        seqs: &[Vec<usize>],
        pos: &mut Vec<usize>,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        let mut any = false;
        for t in 0..seqs.len() {
            if pos[t] < seqs[t].len() {
                any = true;
                cur.push(seqs[t][pos[t]]);
                pos[t] += 1;
                go(seqs, pos, cur, out);
                pos[t] -= 1;
                cur.pop();
            }
        }
        if !any {
            out.push(cur.clone());
        }
    }
    let mut out = Vec::new();
    go(seqs, &mut vec![0; seqs.len()], &mut Vec::new(), &mut out);
    out
}

/// Visit every consistent trace of `p` in a deterministic order. The
/// visitor returns false to stop early.
pub fn for_each_trace(
    p: &Program,
    limits: &Limits,
    budget: &dyn Budget,
    visit: &mut dyn FnMut(Trace) -> bool,
) -> Result<(), ResourceLimit> {
    let domains = value_domains(p);
    let all_paths = thread_paths(p, &domains);
    let nobj = p.init.len();
    let nthreads = p.threads.len();
    let targets: Vec<Target> = {
        let mut vs = Vec::new();
        p.assertion.vars(&mut vs);
        vs.iter()
            .map(|v| p.resolve(v).expect("validated assertion"))
            .collect()
    };
    let thread_gaps: Vec<usize> = p.threads.iter().map(|t| t.source_len).collect();

    let mut accepted = 0usize;
    let bounds: Vec<usize> = all_paths.iter().map(|v| v.len()).collect();
    if bounds.contains(&0) {
        return Ok(());
    }
    let mut choice = vec![0; nthreads];
    loop {
        budget.check()?;
        let paths: Vec<&ThreadPath> = (0..nthreads).map(|t| &all_paths[t][choice[t]]).collect();

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
        for (t, path) in paths.iter().enumerate() {
            for (i, op) in path.ops.iter().enumerate() {
                events.push(Event {
                    id: events.len(),
                    thread: Some(t),
                    idx: i,
                    action: op.action,
                    object: op.object,
                    order: op.order,
                    site: Site::Stmt {
                        loc: op.loc,
                        origin: op.origin,
                    },
                    read_value: op.read_value,
                    write_value: op.write_value,
                });
            }
        }
        let n = events.len();
        let feasible = events.iter().filter(|e| e.is_read()).all(|r| {
            events.iter().any(|w| {
                w.id != r.id
                    && w.is_write()
                    && w.object == r.object
                    && w.write_value == r.read_value
            })
        });

        if feasible {
            let mut sb = BinaryRelation::empty(n);
            for a in &events {
                for b in &events {
                    if a.thread.is_some() && a.thread == b.thread && a.idx < b.idx {
                        sb.insert(a.id, b.id);
                    }
                }
            }
            // mo candidates per object: init first, then sb-respecting interleavings
            let mo_options: Vec<Vec<Vec<usize>>> = (0..nobj)
                .map(|o| {
                    let seqs: Vec<Vec<usize>> = (0..nthreads)
                        .map(|t| {
                            events
                                .iter()
                                .filter(|e| {
                                    e.thread == Some(t) && e.is_write() && e.object == Some(o)
                                })
                                .map(|e| e.id)
                                .collect()
                        })
                        .collect();
                    interleavings(&seqs)
                        .into_iter()
                        .map(|mut v| {
                            v.insert(0, o);
                            v
                        })
                        .collect()
                })
                .collect();
            let mo_bounds: Vec<usize> = mo_options.iter().map(|v| v.len()).collect();
            let mut mo_choice = vec![0; nobj];
            loop {
                budget.check()?;
                let mut mo = BinaryRelation::empty(n);
                let mut mo_pos = vec![0usize; n];
                for (o, &c) in mo_choice.iter().enumerate() {
                    let chain = &mo_options[o][c];
                    for (i, &a) in chain.iter().enumerate() {
                        mo_pos[a] = i;
                        for &b in &chain[i + 1..] {
                            mo.insert(a, b);
                        }
                    }
                }
                let reads: Vec<usize> = events
                    .iter()
                    .filter(|e| e.is_read())
                    .map(|e| e.id)
                    .collect();
                let rf_options: Vec<Vec<usize>> = reads
                    .iter()
                    .map(|&r| {
                        let er = &events[r];
                        let o = er.object.expect("read has an object");
                        if er.action == Action::Rmw {
                            let chain = &mo_options[o][mo_choice[o]];
                            let w = chain[mo_pos[r] - 1];
                            return if events[w].write_value == er.read_value {
                                vec![w]
                            } else {
                                vec![]
                            };
                        }
                        events
                            .iter()
                            .filter(|w| {
                                w.id != r
                                    && w.is_write()
                                    && w.object == er.object
                                    && w.write_value == er.read_value
                                    && !sb.contains(r, w.id)
                                    && !events.iter().any(|w2| {
                                        w2.is_write()
                                            && w2.object == er.object
                                            && sb.contains(w2.id, r)
                                            && mo.contains(w.id, w2.id)
                                    })
                            })
                            .map(|w| w.id)
                            .collect()
                    })
                    .collect();
                let rf_bounds: Vec<usize> = rf_options.iter().map(|v| v.len()).collect();
                if !rf_bounds.contains(&0) {
                    let mut rf_choice = vec![0; reads.len()];
                    loop {
                        budget.check()?;
                        let rf = BinaryRelation::from_pairs(
                            n,
                            reads
                                .iter()
                                .enumerate()
                                .map(|(i, &r)| (rf_options[i][rf_choice[i]], r)),
                        );
                        let mut trace = Trace {
                            events: events.clone(),
                            sb: sb.clone(),
                            rf,
                            mo: mo.clone(),
                            object_names: p.init.iter().map(|(n, _)| n.clone()).collect(),
                            thread_names: p.threads.iter().map(|t| t.name.clone()).collect(),
                            final_objects: Vec::new(),
                            final_locals: paths.iter().map(|pa| pa.locals.clone()).collect(),
                            buggy: false,
                            thread_gaps: thread_gaps.clone(),
                        };
                        let d = Derived::of(&trace);
                        if is_consistent_with(&trace, &d) {
                            trace.final_objects = (0..nobj)
                                .map(|o| {
                                    let chain = &mo_options[o][mo_choice[o]];
                                    events[*chain.last().expect("init write")]
                                        .write_value
                                        .expect("write value")
                                })
                                .collect();
                            trace.buggy = !assertion_holds(p, &targets, &trace);
                            accepted += 1;
                            if accepted > limits.max_traces {
                                return Err(ResourceLimit::Traces(limits.max_traces));
                            }
                            if !visit(trace) {
                                return Ok(());
                            }
                        }
                        if !advance(&mut rf_choice, &rf_bounds) {
                            break;
                        }
                    }
                }
                if !advance(&mut mo_choice, &mo_bounds) {
                    break;
                }
            }
        }
        if !advance(&mut choice, &bounds) {
            return Ok(());
        }
    }
}

fn assertion_holds(p: &Program, targets: &[Target], t: &Trace) -> bool {
    let mut vs = Vec::new();
    p.assertion.vars(&mut vs);
    let lookup = |v: &crate::program::VarRef| {
        let i = vs.iter().position(|x| x == v).expect("collected var");
        match &targets[i] {
            Target::Object(o) => t.final_objects[*o],
            Target::Local(tid, name) => t.final_locals[*tid].get(name).copied().unwrap_or(0),
        }
    };
    p.assertion.holds(&lookup)
}

/// All consistent traces of a loop-free program.
pub fn enumerate_traces(
    p: &Program,
    limits: &Limits,
    budget: &dyn Budget,
) -> Result<Vec<Trace>, ResourceLimit> {
    let mut out = Vec::new();
    for_each_trace(p, limits, budget, &mut |t| {
        out.push(t);
        true
    })?;
    Ok(out)
}

/// Consistent traces whose final state violates the assertion.
pub fn find_buggy_traces(
    p: &Program,
    limits: &Limits,
    budget: &dyn Budget,
) -> Result<Vec<Trace>, ResourceLimit> {
    let mut out = Vec::new();
    for_each_trace(p, limits, budget, &mut |t| {
        if t.buggy {
            out.push(t);
        }
        true
    })?;
    Ok(out)
}

/// The first buggy trace in enumeration order, if any.
pub fn first_buggy_trace(
    p: &Program,
    limits: &Limits,
    budget: &dyn Budget,
) -> Result<Option<Trace>, ResourceLimit> {
    let mut found = None;
    for_each_trace(p, limits, budget, &mut |t| {
        if t.buggy {
            found = Some(t);
            false
        } else {
            true
        }
    })?;
    Ok(found)
}
