//! End-to-end synthesis: FenSying (all buggy traces at once) and fFenSying
//! (one buggy trace per iteration).

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use crate::budget::{Budget, Limits};
use crate::enumerate::{find_buggy_traces, first_buggy_trace};
use crate::error::{ResourceLimit, SynthesisError};
use crate::fensying::{analyze_trace, TraceAnalysis};
use crate::optimizer::{assign_memory_orders, build_query, find_min_model, Query, TypedSolution};
use crate::order::MemoryOrder;
use crate::program::{
    dynamic_copies, elaborate, insert_fences, replace_statement, FenceSlot, Program, Provenance,
    SourceLocation, Stmt, StmtKind,
};
use crate::trace::Trace;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Fix every buggy trace at once with a minimum fence set.
    Optimal,
    /// Fix one buggy trace per iteration.
    Fast,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Fixed,
    AlreadyCorrect,
    NoFix,
    ResourceLimit,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Fixed => "fixed",
            Status::AlreadyCorrect => "already-correct",
            Status::NoFix => "no-fix",
            Status::ResourceLimit => "resource-limit",
        }
    }
}

/// Microseconds per phase, summed over iterations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PhaseTimings {
    pub enumerate: u64,
    pub fensying: u64,
    pub solve: u64,
    pub assign: u64,
    pub verify: u64,
}

/// A fence added to the input program.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SynthesizedFence {
    /// Slot in the input program.
    pub slot: FenceSlot,
    pub order: MemoryOrder,
    /// Iteration that introduced it (always 1 in optimal mode).
    pub iteration: usize,
    /// Where it sits in the fixed program.
    pub location: SourceLocation,
    /// Number of dynamic copies after loop unrolling.
    pub copies: u32,
}

/// A fence of the input program whose order was raised.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Strengthening {
    pub location: SourceLocation,
    pub from: MemoryOrder,
    pub to: MemoryOrder,
}

/// What one round of analysis saw and decided.
#[derive(Clone, Debug)]
pub struct Round {
    pub program: Program,
    pub traces: Vec<Trace>,
    pub analyses: Vec<TraceAnalysis>,
    pub query: Query,
    pub model: Option<BTreeSet<FenceSlot>>,
    pub solution: Option<TypedSolution>,
}

#[derive(Clone, Debug)]
pub struct SynthesisResult {
    pub mode: Mode,
    pub status: Status,
    pub input: Program,
    pub fixed: Option<Program>,
    pub fences: Vec<SynthesizedFence>,
    pub strengthened: Vec<Strengthening>,
    pub iterations: usize,
    pub traces_analyzed: usize,
    pub rounds: Vec<Round>,
    /// For no-fix: the trace (id within the last round) with no cycles.
    pub unfixable_trace: Option<usize>,
    pub limit: Option<ResourceLimit>,
    pub orders_optimal: bool,
    pub timings: PhaseTimings,
}

impl SynthesisResult {
    pub fn weight(&self) -> u32 {
        self.fences.iter().map(|f| f.order.weight()).sum()
    }

    pub fn fence_count(&self) -> usize {
        self.fences.len()
    }

    fn new(mode: Mode, input: &Program) -> Self {
        SynthesisResult {
            mode,
            status: Status::AlreadyCorrect,
            input: input.clone(),
            fixed: None,
            fences: Vec::new(),
            strengthened: Vec::new(),
            iterations: 0,
            traces_analyzed: 0,
            rounds: Vec::new(),
            unfixable_trace: None,
            limit: None,
            orders_optimal: true,
            timings: PhaseTimings::default(),
        }
    }

    fn stop(mut self, limit: ResourceLimit) -> Self {
        self.status = Status::ResourceLimit;
        self.limit = Some(limit);
        self
    }

    fn finish_fixed(mut self, fixed: Program) -> Self {
        let (fences, strengthened) = summarize(&self.input, &fixed);
        self.fences = fences;
        self.strengthened = strengthened;
        self.fixed = Some(fixed);
        self.status = Status::Fixed;
        self
    }
}

fn clock(budget: &dyn Budget, acc: &mut u64, start: u64) {
    *acc += budget.now_micros().saturating_sub(start);
}

/// Apply a typed solution to the source program.
pub fn apply_solution(p: &Program, sol: &TypedSolution, iteration: usize) -> Program {
    insert_fences(p, &sol.fences, &sol.strengthened, iteration)
}

/// Analyze every buggy trace; stops at the first one without any cycle.
fn analyze_all(
    traces: &[Trace],
    limits: &Limits,
    budget: &dyn Budget,
) -> Result<(Vec<TraceAnalysis>, Option<usize>), ResourceLimit> {
    let mut out = Vec::new();
    for (i, t) in traces.iter().enumerate() {
        let a = analyze_trace(t, i, limits, budget)?;
        let bad = !a.is_fixable();
        out.push(a);
        if bad {
            return Ok((out, Some(i)));
        }
    }
    Ok((out, None))
}

/// Solve one round: query, minimum model, order assignment. `None` means
/// the query is unsatisfiable.
fn solve(
    analyses: &[TraceAnalysis],
    limits: &Limits,
    budget: &dyn Budget,
    timings: &mut PhaseTimings,
) -> (Query, Option<BTreeSet<FenceSlot>>, Option<TypedSolution>) {
    let t0 = budget.now_micros();
    let query = build_query(analyses);
    let model = find_min_model(&query);
    clock(budget, &mut timings.solve, t0);
    let t1 = budget.now_micros();
    let sol = model
        .as_ref()
        .and_then(|m| assign_memory_orders(m, analyses, limits.coalescing_budget));
    clock(budget, &mut timings.assign, t1);
    (query, model, sol)
}

/// Run fence synthesis on a validated input program.
pub fn synthesize(
    p: &Program,
    mode: Mode,
    limits: &Limits,
    budget: &dyn Budget,
) -> Result<SynthesisResult, SynthesisError> {
    p.validate()?;
    elaborate(p, limits.unroll_bound)?;
    match mode {
        Mode::Optimal => run_fensying(p, limits, budget),
        Mode::Fast => run_ffensying(p, limits, budget),
    }
}

pub fn run_fensying(
    p: &Program,
    limits: &Limits,
    budget: &dyn Budget,
) -> Result<SynthesisResult, SynthesisError> {
    let mut res = SynthesisResult::new(Mode::Optimal, p);
    let ep = elaborate(p, limits.unroll_bound)?;
    let t0 = budget.now_micros();
    let buggy = match find_buggy_traces(&ep, limits, budget) {
        Ok(b) => b,
        Err(l) => return Ok(res.stop(l)),
    };
    clock(budget, &mut res.timings.enumerate, t0);
    if buggy.is_empty() {
        return Ok(res);
    }
    res.iterations = 1;
    res.traces_analyzed = buggy.len();
    let t1 = budget.now_micros();
    let analyzed = analyze_all(&buggy, limits, budget);
    clock(budget, &mut res.timings.fensying, t1);
    let (analyses, unfixable) = match analyzed {
        Ok(x) => x,
        Err(l) => return Ok(res.stop(l)),
    };
    let mut round = Round {
        program: p.clone(),
        traces: buggy,
        analyses,
        query: Query::default(),
        model: None,
        solution: None,
    };
    if let Some(i) = unfixable {
        round.query = build_query(&round.analyses);
        res.rounds.push(round);
        res.status = Status::NoFix;
        res.unfixable_trace = Some(i);
        return Ok(res);
    }
    let (query, model, sol) = solve(&round.analyses, limits, budget, &mut res.timings);
    round.query = query;
    round.model = model;
    round.solution = sol.clone();
    res.rounds.push(round);
    let Some(sol) = sol else {
        res.status = Status::NoFix;
        return Ok(res);
    };
    res.orders_optimal = sol.orders_optimal;
    let fixed = apply_solution(p, &sol, 1);
    let t2 = budget.now_micros();
    let left = match find_buggy_traces(&elaborate(&fixed, limits.unroll_bound)?, limits, budget) {
        Ok(b) => b.len(),
        Err(l) => return Ok(res.stop(l)),
    };
    clock(budget, &mut res.timings.verify, t2);
    if left > 0 {
        return Err(SynthesisError::Unverified(left));
    }
    Ok(res.finish_fixed(fixed))
}

pub fn run_ffensying(
    p: &Program,
    limits: &Limits,
    budget: &dyn Budget,
) -> Result<SynthesisResult, SynthesisError> {
    let mut res = SynthesisResult::new(Mode::Fast, p);
    let mut cur = p.clone();
    loop {
        let t0 = budget.now_micros();
        let found = first_buggy_trace(&elaborate(&cur, limits.unroll_bound)?, limits, budget);
        clock(budget, &mut res.timings.enumerate, t0);
        let trace = match found {
            Ok(Some(t)) => t,
            Ok(None) if res.iterations == 0 => return Ok(res),
            Ok(None) => return Ok(res.finish_fixed(cur)),
            Err(l) => return Ok(res.stop(l)),
        };
        if res.iterations == limits.max_iterations {
            return Ok(res.stop(ResourceLimit::Iterations(limits.max_iterations)));
        }
        res.iterations += 1;
        res.traces_analyzed += 1;
        let t1 = budget.now_micros();
        let analyzed = analyze_trace(&trace, 0, limits, budget);
        clock(budget, &mut res.timings.fensying, t1);
        let analysis = match analyzed {
            Ok(a) => a,
            Err(l) => return Ok(res.stop(l)),
        };
        let analyses = vec![analysis];
        let mut round = Round {
            program: cur.clone(),
            traces: vec![trace],
            query: build_query(&analyses),
            analyses,
            model: None,
            solution: None,
        };
        if !round.analyses[0].is_fixable() {
            res.rounds.push(round);
            res.status = Status::NoFix;
            res.unfixable_trace = Some(0);
            return Ok(res);
        }
        let (query, model, sol) = solve(&round.analyses, limits, budget, &mut res.timings);
        round.query = query;
        round.model = model;
        round.solution = sol.clone();
        res.rounds.push(round);
        let Some(sol) = sol else {
            res.status = Status::NoFix;
            return Ok(res);
        };
        res.orders_optimal &= sol.orders_optimal;
        cur = apply_solution(&cur, &sol, res.iterations);
    }
}

/// Compare the fixed program against the input: new fences and raised ones.
pub fn summarize(input: &Program, fixed: &Program) -> (Vec<SynthesizedFence>, Vec<Strengthening>) {
    fn block(
        input: &Program,
        fixed: &Program,
        tid: usize,
        stmts: &[Stmt],
        after: usize,
        fences: &mut Vec<SynthesizedFence>,
        raised: &mut Vec<Strengthening>,
    ) {
        for (i, s) in stmts.iter().enumerate() {
            let next_gap = stmts[i + 1..]
                .iter()
                .find_map(|n| match n.provenance {
                    Provenance::Input(k) => Some(k),
                    Provenance::Synthesized(_) => None,
                })
                .unwrap_or(after);
            match (&s.kind, s.provenance) {
                (StmtKind::Fence { order }, Provenance::Synthesized(iteration)) => {
                    fences.push(SynthesizedFence {
                        slot: FenceSlot {
                            thread: tid,
                            gap: next_gap,
                        },
                        order: *order,
                        iteration,
                        location: s.loc,
                        copies: dynamic_copies(&fixed.threads[tid], s.loc.index),
                    })
                }
                (StmtKind::Fence { order }, Provenance::Input(k)) => {
                    let old = input.threads[tid].find(k).and_then(|o| o.fence_order());
                    if let Some(old) = old.filter(|o| o != order) {
                        raised.push(Strengthening {
                            location: SourceLocation {
                                thread: tid,
                                index: k,
                            },
                            from: old,
                            to: *order,
                        });
                    }
                }
                _ => {}
            }
            for c in s.children() {
                block(input, fixed, tid, c, next_gap, fences, raised);
            }
        }
    }
    let mut fences = Vec::new();
    let mut raised = Vec::new();
    for (tid, t) in fixed.threads.iter().enumerate() {
        let end = input.threads[tid].statement_count();
        block(input, fixed, tid, &t.body, end, &mut fences, &mut raised);
    }
    (fences, raised)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mutation {
    Removed,
    Weakened(MemoryOrder),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MutantOutcome {
    /// The mutant has a buggy trace, as it should.
    BugFound,
    /// The mutant is still correct: the fence was not needed as placed.
    StillCorrect,
    Inconclusive(ResourceLimit),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MutantReport {
    pub fence: SourceLocation,
    pub order: MemoryOrder,
    pub mutation: Mutation,
    pub outcome: MutantOutcome,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SanityReport {
    pub mutants: Vec<MutantReport>,
}

impl SanityReport {
    pub fn passed(&self) -> bool {
        self.mutants
            .iter()
            .all(|m| m.outcome == MutantOutcome::BugFound)
    }
}

pub fn mutations_of(order: MemoryOrder) -> Vec<Mutation> {
    match order {
        MemoryOrder::SeqCst => vec![Mutation::Removed, Mutation::Weakened(MemoryOrder::AcqRel)],
        MemoryOrder::AcqRel => vec![
            Mutation::Removed,
            Mutation::Weakened(MemoryOrder::Release),
            Mutation::Weakened(MemoryOrder::Acquire),
        ],
        _ => vec![Mutation::Removed],
    }
}

/// Remove or weaken each synthesized fence of `fixed` in turn and check that
/// every such mutant has a buggy trace.
pub fn sanity_check(fixed: &Program, limits: &Limits, budget: &dyn Budget) -> SanityReport {
    let mut report = SanityReport::default();
    for t in &fixed.threads {
        for s in t.statements() {
            let (StmtKind::Fence { order }, Provenance::Synthesized(_)) = (&s.kind, s.provenance)
            else {
                continue;
            };
            for mutation in mutations_of(*order) {
                let with = match mutation {
                    Mutation::Removed => None,
                    Mutation::Weakened(o) => Some(Stmt {
                        kind: StmtKind::Fence { order: o },
                        ..s.clone()
                    }),
                };
                let mutant = replace_statement(fixed, s.loc, with);
                let outcome = match elaborate(&mutant, limits.unroll_bound) {
                    Err(_) => MutantOutcome::StillCorrect,
                    Ok(ep) => match first_buggy_trace(&ep, limits, budget) {
                        Ok(Some(_)) => MutantOutcome::BugFound,
                        Ok(None) => MutantOutcome::StillCorrect,
                        Err(l) => MutantOutcome::Inconclusive(l),
                    },
                };
                report.mutants.push(MutantReport {
                    fence: s.loc,
                    order: *order,
                    mutation,
                    outcome,
                });
            }
        }
    }
    report
}
