//! Coherence conditions and the SC total order check.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::relation::BinaryRelation;
use crate::sync::Derived;
use crate::trace::{EventId, Trace};

/// A consistency condition; a cycle found by fence synthesis is labeled with
/// the condition it would violate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Condition {
    CoH,
    CoRH,
    CoMH,
    CoMRH,
    CoMHI,
    CoMRHI,
    ToSc,
}

impl Condition {
    pub const COHERENCE: [Condition; 6] = [
        Condition::CoH,
        Condition::CoRH,
        Condition::CoMH,
        Condition::CoMRH,
        Condition::CoMHI,
        Condition::CoMRHI,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::CoH => "co-h",
            Condition::CoRH => "co-rh",
            Condition::CoMH => "co-mh",
            Condition::CoMRH => "co-mrh",
            Condition::CoMHI => "co-mhi",
            Condition::CoMRHI => "co-mrhi",
            Condition::ToSc => "to-sc",
        }
    }

    /// The relation whose reflexivity is the violation.
    pub fn relation(self, t: &Trace, hb: &BinaryRelation) -> BinaryRelation {
        let rf_inv = t.rf.inverse();
        match self {
            Condition::CoH => hb.clone(),
            Condition::CoRH => t.rf.compose(hb),
            Condition::CoMH => t.mo.compose(hb),
            Condition::CoMRH => t.mo.compose(&t.rf).compose(hb),
            Condition::CoMHI => t.mo.compose(hb).compose(&rf_inv),
            Condition::CoMRHI => t.mo.compose(&t.rf).compose(hb).compose(&rf_inv),
            Condition::ToSc => BinaryRelation::empty(t.len()),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Coherence conditions violated by the trace.
pub fn coherence_violations(t: &Trace, d: &Derived) -> Vec<Condition> {
    Condition::COHERENCE
        .into_iter()
        .filter(|c| c.relation(t, &d.hb).is_reflexive())
        .collect()
}

pub fn is_consistent(t: &Trace) -> bool {
    is_consistent_with(t, &Derived::of(t))
}

pub fn is_consistent_with(t: &Trace, d: &Derived) -> bool {
    coherence_violations(t, d).is_empty() && exists_sc_total_order(t, d)
}

pub fn exists_sc_total_order(t: &Trace, d: &Derived) -> bool {
    let mut found = false;
    for_each_sc_order(t, d, &mut |_| {
        found = true;
        false
    });
    found
}

/// Call `f` with every admissible total order over the trace's sc events
/// until it returns false.
pub fn for_each_sc_order(t: &Trace, d: &Derived, f: &mut dyn FnMut(&[EventId]) -> bool) {
    let search = ScSearch::new(t, d);
    let mut st = SearchState {
        prefix: Vec::new(),
        placed: vec![false; t.len()],
        indeg: search.indeg.clone(),
    };
    search.extend(&mut st, f);
}

struct ScSearch<'a> {
    t: &'a Trace,
    d: &'a Derived,
    sc: Vec<EventId>,
    succ: Vec<Vec<EventId>>,
    indeg: Vec<usize>,
    rf_src: Vec<Option<EventId>>,
}

struct SearchState {
    prefix: Vec<EventId>,
    placed: Vec<bool>,
    indeg: Vec<usize>,
}

impl<'a> ScSearch<'a> {
    fn new(t: &'a Trace, d: &'a Derived) -> Self {
        let sc: Vec<EventId> = t
            .events
            .iter()
            .filter(|e| e.is_sc())
            .map(|e| e.id)
            .collect();
        let mut forced = d.hb.union(&t.mo);
        forced.union_with(&d.fr);
        let is_sc = |e: EventId| t.events[e].is_sc();
        let forced = forced.restrict(is_sc);
        let mut succ = vec![Vec::new(); t.len()];
        let mut indeg = vec![0; t.len()];
        for (a, b) in forced.pairs() {
            if a != b {
                succ[a].push(b);
                indeg[b] += 1;
            }
        }
        let rf_src = (0..t.len()).map(|e| t.rf_source(e)).collect();
        ScSearch {
            t,
            d,
            sc,
            succ,
            indeg,
            rf_src,
        }
    }

    fn extend(&self, st: &mut SearchState, f: &mut dyn FnMut(&[EventId]) -> bool) -> bool {
        if st.prefix.len() == self.sc.len() {
            return f(&st.prefix);
        }
        for &x in &self.sc {
            if st.placed[x] || st.indeg[x] != 0 || !self.can_place(&st.prefix, x) {
                continue;
            }
            st.placed[x] = true;
            st.prefix.push(x);
            for &y in &self.succ[x] {
                st.indeg[y] -= 1;
            }
            let go_on = self.extend(st, f);
            for &y in &self.succ[x] {
                st.indeg[y] += 1;
            }
            st.prefix.pop();
            st.placed[x] = false;
            if !go_on {
                return false;
            }
        }
        true
    }

    fn mo_le(&self, a: EventId, b: EventId) -> bool {
        a == b || self.t.mo.contains(a, b)
    }

    fn same_obj_write(&self, a: EventId, obj: Option<usize>) -> bool {
        let e = &self.t.events[a];
        e.is_write() && e.object == obj
    }

    /// Checks every rule whose later element in S is `x`.
    fn can_place(&self, prefix: &[EventId], x: EventId) -> bool {
        let t = self.t;
        let ex = &t.events[x];
        let prior_fences = || prefix.iter().copied().filter(|&f| t.events[f].is_fence());
        if ex.is_read() {
            let w = self.rf_src[x].expect("read has an rf source");
            let last = prefix
                .iter()
                .rev()
                .copied()
                .find(|&a| self.same_obj_write(a, ex.object));
            let ok = match last {
                Some(a) if a == w => true,
                _ if t.events[w].is_sc() => false,
                Some(a) => !self.d.hb.contains(w, a),
                None => true,
            };
            if !ok {
                return false;
            }
            for fx in prior_fences() {
                for a in t.sb.predecessors(fx) {
                    if self.same_obj_write(a, ex.object) && !self.mo_le(a, w) {
                        return false;
                    }
                }
            }
        }
        if ex.is_write() {
            for fx in prior_fences() {
                for a in t.sb.predecessors(fx) {
                    if a != x && self.same_obj_write(a, ex.object) && !t.mo.contains(a, x) {
                        return false;
                    }
                }
            }
        }
        if ex.is_fence() {
            for b in t.sb.successors(x) {
                let eb = &t.events[b];
                if eb.is_read() {
                    let w = self.rf_src[b].expect("read has an rf source");
                    for &a in prefix {
                        if self.same_obj_write(a, eb.object) && !self.mo_le(a, w) {
                            return false;
                        }
                    }
                    for fx in prior_fences() {
                        for a in t.sb.predecessors(fx) {
                            if self.same_obj_write(a, eb.object) && !self.mo_le(a, w) {
                                return false;
                            }
                        }
                    }
                }
                if eb.is_write() {
                    for &a in prefix {
                        if a != b && self.same_obj_write(a, eb.object) && !t.mo.contains(a, b) {
                            return false;
                        }
                    }
                    for fx in prior_fences() {
                        for a in t.sb.predecessors(fx) {
                            if a != b && self.same_obj_write(a, eb.object) && !t.mo.contains(a, b) {
                                return false;
                            }
                        }
                    }
                }
            }
        }
        true
    }
}
