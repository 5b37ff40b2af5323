//! Candidate fence insertion and cycle search on a single buggy trace.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::budget::{Budget, Limits};
use crate::consistency::Condition;
use crate::cycles::enumerate_simple_cycles;
use crate::error::ResourceLimit;
use crate::order::MemoryOrder;
use crate::program::{FenceSlot, SourceLocation};
use crate::relation::BinaryRelation;
use crate::sync::Derived;
use crate::trace::{Action, Event, EventId, Site, Trace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Strength {
    /// Coherence cycles, fences at most acquire-release.
    Weak,
    /// SC-order cycles, sc fences.
    Strong,
}

impl Strength {
    pub fn as_str(self) -> &'static str {
        match self {
            Strength::Weak => "weak",
            Strength::Strong => "strong",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeLabel {
    Sb,
    Sw,
    Dob,
    Rf,
    RfInv,
    Mo,
    So,
}

impl EdgeLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeLabel::Sb => "sb",
            EdgeLabel::Sw => "sw",
            EdgeLabel::Dob => "dob",
            EdgeLabel::Rf => "rf",
            EdgeLabel::RfInv => "rf^-1",
            EdgeLabel::Mo => "mo",
            EdgeLabel::So => "so",
        }
    }

    fn is_hb(self) -> bool {
        matches!(self, EdgeLabel::Sb | EdgeLabel::Sw | EdgeLabel::Dob)
    }

    fn is_sync(self) -> bool {
        matches!(self, EdgeLabel::Sw | EdgeLabel::Dob)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabeledEdge {
    pub from: EventId,
    pub to: EventId,
    pub label: EdgeLabel,
}

impl fmt::Display for LabeledEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -{}-> {}", self.from, self.label.as_str(), self.to)
    }
}

/// A buggy trace with candidate fence events added at every slot.
#[derive(Clone, Debug)]
pub struct IntermediateTrace {
    /// Candidate fences carry `Relaxed` here; see [`IntermediateTrace::with_orders`].
    pub trace: Trace,
    pub base_len: usize,
}

impl IntermediateTrace {
    pub fn slot_of(&self, e: EventId) -> Option<FenceSlot> {
        match self.trace.events[e].site {
            Site::Candidate(s) => Some(s),
            _ => None,
        }
    }

    /// Source location of a program fence event, keyed against the program
    /// before loop elaboration.
    pub fn program_fence(&self, e: EventId) -> Option<SourceLocation> {
        let ev = &self.trace.events[e];
        match (ev.action, ev.site, ev.thread) {
            (Action::Fence, Site::Stmt { origin, .. }, Some(thread)) => Some(SourceLocation {
                thread,
                index: origin,
            }),
            _ => None,
        }
    }

    /// Trace with the fence orders used by a search: candidates at `ar`
    /// (weak) or `sc` (strong), and program fences raised to at least that.
    pub fn with_orders(&self, strength: Strength) -> Trace {
        let top = match strength {
            Strength::Weak => MemoryOrder::AcqRel,
            Strength::Strong => MemoryOrder::SeqCst,
        };
        let mut t = self.trace.clone();
        for e in t.events.iter_mut().filter(|e| e.is_fence()) {
            e.order = if e.is_candidate() {
                top
            } else {
                e.order.join(top)
            };
        }
        t
    }
}

/// Add a candidate fence event at every slot of the trace. Slots next to a
/// program fence are skipped; that fence can be strengthened instead.
pub fn insert_candidate_fences(t: &Trace) -> IntermediateTrace {
    let base_len = t.len();
    let mut events = t.events.clone();
    let nthreads = t.thread_names.len();
    let mut order: Vec<Vec<EventId>> = Vec::with_capacity(nthreads);
    for tid in 0..nthreads {
        let evs = t.thread_events(tid);
        let mut seq = Vec::new();
        let origin = |e: EventId| match t.events[e].site {
            Site::Stmt { origin, .. } => origin,
            _ => unreachable!("thread event without a statement"),
        };
        let mut add = |seq: &mut Vec<EventId>, gap: usize| {
            let id = events.len();
            events.push(Event {
                id,
                thread: Some(tid),
                idx: 0,
                action: Action::Fence,
                object: None,
                order: MemoryOrder::Relaxed,
                site: Site::Candidate(FenceSlot { thread: tid, gap }),
                read_value: None,
                write_value: None,
            });
            seq.push(id);
        };
        for (i, &e) in evs.iter().enumerate() {
            let here = t.events[e].is_fence();
            let prev = i > 0 && t.events[evs[i - 1]].is_fence();
            if !here && !prev {
                add(&mut seq, origin(e));
            }
            seq.push(e);
        }
        if let Some(&last) = evs.last() {
            if !t.events[last].is_fence() {
                add(&mut seq, t.thread_gaps[tid]);
            }
        }
        order.push(seq);
    }
    let n = events.len();
    let mut sb = BinaryRelation::empty(n);
    for seq in &order {
        for (i, &a) in seq.iter().enumerate() {
            events[a].idx = i;
            for &b in &seq[i + 1..] {
                sb.insert(a, b);
            }
        }
    }
    IntermediateTrace {
        trace: Trace {
            events,
            sb,
            rf: t.rf.widen(n),
            mo: t.mo.widen(n),
            ..t.clone()
        },
        base_len,
    }
}

/// A set of fences (with orders) that would turn one cycle into a
/// consistency violation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateSolution {
    pub trace_id: usize,
    pub strength: Strength,
    pub condition: Condition,
    pub cycle: Vec<LabeledEdge>,
    pub fences: BTreeMap<FenceSlot, MemoryOrder>,
    /// Program fences that must be raised, keyed by source location, with
    /// the order they must be raised to.
    pub strengthened: BTreeMap<SourceLocation, MemoryOrder>,
}

impl CandidateSolution {
    pub fn slots(&self) -> BTreeSet<FenceSlot> {
        self.fences.keys().copied().collect()
    }

    pub fn weight(&self) -> u32 {
        self.fences.values().map(|o| o.weight()).sum()
    }

    /// `self` needs no more than `other`: fewer slots, each no stronger,
    /// and no extra or stronger program fence raises.
    pub fn dominates(&self, other: &CandidateSolution) -> bool {
        self.fences
            .iter()
            .all(|(s, o)| other.fences.get(s).is_some_and(|p| o.is_at_most(*p)))
            && self
                .strengthened
                .iter()
                .all(|(l, o)| other.strengthened.get(l).is_some_and(|p| o.is_at_most(*p)))
    }
}

/// Fence orders demanded by a cycle: a fence with only incoming sw/dob edges
/// needs acquire, only outgoing needs release, both needs acquire-release.
pub fn cycle_fence_orders(
    cycle: &[LabeledEdge],
    is_fence: impl Fn(EventId) -> bool,
) -> BTreeMap<EventId, MemoryOrder> {
    let mut dir: BTreeMap<EventId, (bool, bool)> = BTreeMap::new();
    for e in cycle.iter().filter(|e| e.label.is_sync()) {
        if is_fence(e.from) {
            dir.entry(e.from).or_default().1 = true;
        }
        if is_fence(e.to) {
            dir.entry(e.to).or_default().0 = true;
        }
    }
    dir.into_iter()
        .map(|(f, io)| {
            let o = match io {
                (true, true) => MemoryOrder::AcqRel,
                (true, false) => MemoryOrder::Acquire,
                _ => MemoryOrder::Release,
            };
            (f, o)
        })
        .collect()
}

/// Which coherence condition a closed weak cycle violates, if any.
pub fn classify_weak_cycle(labels: &[EdgeLabel]) -> Option<Condition> {
    let m = labels.len();
    let starts: Vec<usize> = (0..m)
        .filter(|&i| !labels[i].is_hb() && labels[(i + m - 1) % m].is_hb())
        .collect();
    if labels.iter().all(|l| l.is_hb()) {
        return labels.iter().any(|l| l.is_sync()).then_some(Condition::CoH);
    }
    let &[s] = starts.as_slice() else {
        return None;
    };
    let rot: Vec<EdgeLabel> = (0..m).map(|i| labels[(s + i) % m]).collect();
    let k = rot.iter().take_while(|l| !l.is_hb()).count();
    let (non_hb, hb) = rot.split_at(k);
    let hb_ok = match hb {
        [] => false,
        [EdgeLabel::Sb] => true,
        [.., EdgeLabel::Dob, EdgeLabel::Sb] => false,
        _ => hb.iter().any(|l| l.is_sync()),
    };
    if !hb_ok {
        return None;
    }
    use EdgeLabel::*;
    match non_hb {
        [Rf] => Some(Condition::CoRH),
        [Mo] => Some(Condition::CoMH),
        [Mo, Rf] => Some(Condition::CoMRH),
        [RfInv, Mo] => Some(Condition::CoMHI),
        [RfInv, Mo, Rf] => Some(Condition::CoMRHI),
        _ => None,
    }
}

struct WeakSearch<'a> {
    out: Vec<Vec<(EventId, EdgeLabel)>>,
    budget: &'a dyn Budget,
    max_cycles: usize,
    steps: usize,
}

impl WeakSearch<'_> {
    #[allow(clippy::too_many_arguments)]
    fn dfs(
        &mut self,
        adj: &[Vec<(EventId, EdgeLabel)>],
        root: EventId,
        v: EventId,
        on_path: &mut [bool],
        path: &mut Vec<(EventId, EdgeLabel)>,
        found: &mut Vec<Vec<(EventId, EdgeLabel)>>,
    ) -> Result<(), ResourceLimit> {
        self.steps += 1;
        if self.steps.is_multiple_of(4096) {
            self.budget.check()?;
        }
        let last = path.last().map(|&(_, l)| l);
        for &(u, l) in &adj[v] {
            if u < root || (l == EdgeLabel::Sb && last == Some(EdgeLabel::Sb)) {
                continue;
            }
            if !l.is_hb() {
                let used = path.iter().filter(|&&(_, x)| x == l).count();
                let non_hb = path.iter().filter(|&&(_, x)| !x.is_hb()).count();
                if used >= 1 || non_hb >= 3 {
                    continue;
                }
            }
            if let Some(last) = last {
                let switches = path
                    .windows(2)
                    .filter(|w| w[0].1.is_hb() != w[1].1.is_hb())
                    .count()
                    + usize::from(last.is_hb() != l.is_hb());
                if switches > 2 {
                    continue;
                }
            }
            if u == root {
                let first = path.first().map_or(l, |&(_, x)| x);
                if !(l == EdgeLabel::Sb && first == EdgeLabel::Sb) {
                    let mut cyc = path.clone();
                    cyc.push((u, l));
                    found.push(cyc);
                    if found.len() > self.max_cycles {
                        return Err(ResourceLimit::Cycles(self.max_cycles));
                    }
                }
                continue;
            }
            if on_path[u] {
                continue;
            }
            on_path[u] = true;
            path.push((u, l));
            self.dfs(adj, root, u, on_path, path, found)?;
            path.pop();
            on_path[u] = false;
        }
        Ok(())
    }
}

fn solution_from_edges(
    it: &IntermediateTrace,
    trace_id: usize,
    strength: Strength,
    condition: Condition,
    cycle: Vec<LabeledEdge>,
    demands: BTreeMap<EventId, MemoryOrder>,
) -> Option<CandidateSolution> {
    let mut fences = BTreeMap::new();
    let mut strengthened = BTreeMap::new();
    for (e, need) in demands {
        if let Some(slot) = it.slot_of(e) {
            let o: &mut MemoryOrder = fences.entry(slot).or_insert(need);
            *o = o.join(need);
        } else if let Some(loc) = it.program_fence(e) {
            let have = it.trace.events[e].order;
            if !need.is_at_most(have) {
                let o: &mut MemoryOrder = strengthened.entry(loc).or_insert(have);
                *o = o.join(need);
            }
        }
    }
    if fences.is_empty() && strengthened.is_empty() {
        return None;
    }
    Some(CandidateSolution {
        trace_id,
        strength,
        condition,
        cycle,
        fences,
        strengthened,
    })
}

/// Coherence-violation cycles through candidate fences at `ar`.
pub fn weak_fensying(
    it: &IntermediateTrace,
    trace_id: usize,
    limits: &Limits,
    budget: &dyn Budget,
) -> Result<Vec<CandidateSolution>, ResourceLimit> {
    let t = it.with_orders(Strength::Weak);
    let d = Derived::of(&t);
    let n = t.len();
    let mut adj: Vec<Vec<(EventId, EdgeLabel)>> = vec![Vec::new(); n];
    let rf_inv = t.rf.inverse();
    for (rel, label) in [
        (&t.sb, EdgeLabel::Sb),
        (&d.sw, EdgeLabel::Sw),
        (&d.dob, EdgeLabel::Dob),
        (&t.rf, EdgeLabel::Rf),
        (&rf_inv, EdgeLabel::RfInv),
        (&t.mo, EdgeLabel::Mo),
    ] {
        for (a, b) in rel.pairs() {
            adj[a].push((b, label));
        }
    }
    for v in adj.iter_mut() {
        v.sort_unstable();
    }
    let mut search = WeakSearch {
        out: Vec::new(),
        budget,
        max_cycles: limits.max_cycles,
        steps: 0,
    };
    let mut found = Vec::new();
    let mut on_path = vec![false; n];
    for root in 0..n {
        on_path[root] = true;
        search.dfs(&adj, root, root, &mut on_path, &mut Vec::new(), &mut found)?;
        on_path[root] = false;
    }
    search.out = found;

    let is_fence = |e: EventId| t.events[e].is_fence();
    let mut sols = Vec::new();
    for cyc in search.out {
        let labels: Vec<EdgeLabel> = cyc.iter().map(|&(_, l)| l).collect();
        let Some(cond) = classify_weak_cycle(&labels) else {
            continue;
        };
        let m = cyc.len();
        let edges: Vec<LabeledEdge> = (0..m)
            .map(|i| LabeledEdge {
                from: cyc[(i + m - 1) % m].0,
                to: cyc[i].0,
                label: cyc[i].1,
            })
            .collect();
        let demands = cycle_fence_orders(&edges, is_fence);
        if let Some(s) = solution_from_edges(it, trace_id, Strength::Weak, cond, edges, demands) {
            sols.push(s);
        }
    }
    Ok(sols)
}

/// Justifies so edges of the strong trace. An so edge can rest on an hb
/// pair whose path runs through other candidate fences; those fences belong
/// to the solution too.
struct SoWitness<'a> {
    t: &'a Trace,
    d: &'a Derived,
    it: &'a IntermediateTrace,
    /// hb with no candidate fences.
    base_hb: BinaryRelation,
    hb_adj: Vec<Vec<(EventId, EdgeLabel)>>,
    cache: BTreeMap<(EventId, EventId), Option<Vec<LabeledEdge>>>,
}

impl<'a> SoWitness<'a> {
    fn new(t: &'a Trace, d: &'a Derived, it: &'a IntermediateTrace) -> Self {
        let mut hb_adj = vec![Vec::new(); t.len()];
        for (rel, label) in [
            (&t.sb, EdgeLabel::Sb),
            (&d.sw, EdgeLabel::Sw),
            (&d.dob, EdgeLabel::Dob),
        ] {
            for (a, b) in rel.pairs() {
                hb_adj[a].push((b, label));
            }
        }
        SoWitness {
            t,
            d,
            it,
            base_hb: Derived::of(&it.trace).hb,
            hb_adj,
            cache: BTreeMap::new(),
        }
    }

    fn cost(&self, path: &[LabeledEdge]) -> usize {
        path.iter()
            .filter(|e| self.it.slot_of(e.to).is_some())
            .count()
    }

    /// A valid hb path from `a` to `b` through the fewest candidate fences.
    /// Empty when hb holds without candidates.
    fn hb_path(&mut self, a: EventId, b: EventId) -> Option<Vec<LabeledEdge>> {
        if self.base_hb.contains(a, b) {
            return Some(Vec::new());
        }
        if !self.d.hb.contains(a, b) {
            return None;
        }
        if let Some(hit) = self.cache.get(&(a, b)) {
            return hit.clone();
        }
        // states: 0 start, 1 after sb, 2 after dob;sb, 3 after sw, 4 after dob
        let n = self.t.len();
        let idx = |v: EventId, st: usize| v * 5 + st;
        let mut dist = vec![usize::MAX; n * 5];
        let mut parent: Vec<Option<(usize, EdgeLabel)>> = vec![None; n * 5];
        let mut queue = alloc::collections::VecDeque::new();
        dist[idx(a, 0)] = 0;
        queue.push_back(idx(a, 0));
        while let Some(s) = queue.pop_front() {
            let (v, st) = (s / 5, s % 5);
            for &(u, l) in &self.hb_adj[v] {
                let next = match l {
                    EdgeLabel::Sb if st == 1 || st == 2 => continue,
                    EdgeLabel::Sb if st == 4 => 2,
                    EdgeLabel::Sb => 1,
                    EdgeLabel::Sw => 3,
                    _ => 4,
                };
                let w = usize::from(self.it.slot_of(u).is_some());
                let ns = idx(u, next);
                if dist[s] + w < dist[ns] {
                    dist[ns] = dist[s] + w;
                    parent[ns] = Some((s, l));
                    if w == 0 {
                        queue.push_front(ns);
                    } else {
                        queue.push_back(ns);
                    }
                }
            }
        }
        let end = [1, 3, 4]
            .into_iter()
            .map(|st| idx(b, st))
            .filter(|&s| dist[s] != usize::MAX)
            .min_by_key(|&s| dist[s]);
        let path = end.map(|mut s| {
            let mut edges = Vec::new();
            while let Some((p, l)) = parent[s] {
                edges.push(LabeledEdge {
                    from: p / 5,
                    to: s / 5,
                    label: l,
                });
                s = p;
            }
            edges.reverse();
            edges
        });
        self.cache.insert((a, b), path.clone());
        path
    }

    /// Cheapest derivation of so(x, y): the hb edges it relies on, or
    /// `None` if (x, y) is not an so pair.
    fn so_edge(&mut self, x: EventId, y: EventId) -> Option<Vec<LabeledEdge>> {
        let t = self.t;
        let mut firsts = vec![x];
        let mut lasts = vec![y];
        if t.events[x].is_fence() {
            firsts.extend(t.sb.successors(x));
        }
        if t.events[y].is_fence() {
            lasts.extend(t.sb.predecessors(y));
        }
        let mut best: Option<Vec<LabeledEdge>> = None;
        for &e1 in &firsts {
            for &e2 in &lasts {
                let direct =
                    t.mo.contains(e1, e2) || t.rf.contains(e1, e2) || self.d.fr.contains(e1, e2);
                let path = if direct {
                    Some(Vec::new())
                } else {
                    self.hb_path(e1, e2)
                };
                if let Some(p) = path {
                    if best.as_ref().is_none_or(|b| self.cost(&p) < self.cost(b)) {
                        best = Some(p);
                    }
                }
            }
        }
        best
    }
}

/// SC-order cycles through candidate fences at `sc`.
pub fn strong_fensying(
    it: &IntermediateTrace,
    trace_id: usize,
    limits: &Limits,
    budget: &dyn Budget,
) -> Result<Vec<CandidateSolution>, ResourceLimit> {
    budget.check()?;
    let t = it.with_orders(Strength::Strong);
    let d = Derived::of(&t);
    let n = t.len();
    let mut adj: Vec<Vec<EventId>> = vec![Vec::new(); n];
    for tid in 0..t.thread_names.len() {
        let scs: Vec<EventId> = t
            .thread_events(tid)
            .into_iter()
            .filter(|&e| t.events[e].is_sc())
            .collect();
        for w in scs.windows(2) {
            adj[w[0]].push(w[1]);
        }
    }
    for (a, b) in d.so.pairs() {
        if !t.sb.contains(a, b) {
            adj[a].push(b);
        }
    }
    let cycles = enumerate_simple_cycles(&adj, Some(limits.max_cycles))
        .map_err(|_| ResourceLimit::Cycles(limits.max_cycles))?;
    budget.check()?;
    let mut witness = SoWitness::new(&t, &d, it);
    let is_fence = |e: EventId| t.events[e].is_fence();
    let mut sols = Vec::new();
    for cyc in cycles {
        let m = cyc.len();
        let edges: Vec<LabeledEdge> = (0..m)
            .map(|i| LabeledEdge {
                from: cyc[i],
                to: cyc[(i + 1) % m],
                label: EdgeLabel::So,
            })
            .collect();
        let mut demands: BTreeMap<EventId, MemoryOrder> = BTreeMap::new();
        let mut hb_edges = Vec::new();
        for e in &edges {
            if t.sb.contains(e.from, e.to) {
                continue;
            }
            for v in [e.from, e.to] {
                if is_fence(v) {
                    demands.insert(v, MemoryOrder::SeqCst);
                }
            }
            hb_edges.extend(
                witness
                    .so_edge(e.from, e.to)
                    .expect("so edge has a derivation"),
            );
        }
        for (f, o) in cycle_fence_orders(&hb_edges, is_fence) {
            let slot = demands.entry(f).or_insert(o);
            *slot = slot.join(o);
        }
        let mut cycle = edges;
        cycle.extend(hb_edges);
        if let Some(s) = solution_from_edges(
            it,
            trace_id,
            Strength::Strong,
            Condition::ToSc,
            cycle,
            demands,
        ) {
            sols.push(s);
        }
    }
    Ok(sols)
}

/// Everything fence synthesis learned about one buggy trace.
#[derive(Clone, Debug)]
pub struct TraceAnalysis {
    pub trace_id: usize,
    pub weak_cycles: usize,
    pub strong_cycles: usize,
    /// Deduplicated, non-dominated solutions; weak ones first.
    pub solutions: Vec<CandidateSolution>,
}

impl TraceAnalysis {
    pub fn is_fixable(&self) -> bool {
        !self.solutions.is_empty()
    }
}

/// Drop duplicate and dominated solutions, keeping the first of equals.
pub fn prune_solutions(sols: Vec<CandidateSolution>) -> Vec<CandidateSolution> {
    let mut uniq: Vec<CandidateSolution> = Vec::new();
    for s in sols {
        if !uniq
            .iter()
            .any(|u| u.fences == s.fences && u.strengthened == s.strengthened)
        {
            uniq.push(s);
        }
    }
    let keep: Vec<bool> = (0..uniq.len())
        .map(|i| !(0..uniq.len()).any(|j| j != i && uniq[j].dominates(&uniq[i])))
        .collect();
    uniq.into_iter()
        .zip(keep)
        .filter_map(|(s, k)| k.then_some(s))
        .collect()
}

/// Insert candidate fences and run both searches on one buggy trace.
pub fn analyze_trace(
    t: &Trace,
    trace_id: usize,
    limits: &Limits,
    budget: &dyn Budget,
) -> Result<TraceAnalysis, ResourceLimit> {
    let it = insert_candidate_fences(t);
    let weak = weak_fensying(&it, trace_id, limits, budget)?;
    let strong = strong_fensying(&it, trace_id, limits, budget)?;
    let (weak_cycles, strong_cycles) = (weak.len(), strong.len());
    let mut all = weak;
    all.extend(strong);
    Ok(TraceAnalysis {
        trace_id,
        weak_cycles,
        strong_cycles,
        solutions: prune_solutions(all),
    })
}
