//! Derived relations: release sequences, sw, dob, hb, fr and so.

use alloc::vec::Vec;

use crate::relation::BinaryRelation;
use crate::trace::{Action, EventId, Trace};

/// Relations derived from a trace's sb, rf and mo.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Derived {
    pub sw: BinaryRelation,
    pub dob: BinaryRelation,
    pub ithb: BinaryRelation,
    pub hb: BinaryRelation,
    pub fr: BinaryRelation,
    pub so: BinaryRelation,
}

impl Derived {
    pub fn of(t: &Trace) -> Derived {
        let (sw, dob) = derive_sync(t);
        let (ithb, hb) = compute_hb(t, &sw, &dob);
        let fr = compute_fr(t);
        let so = compute_so(t, &hb, &fr);
        Derived {
            sw,
            dob,
            ithb,
            hb,
            fr,
            so,
        }
    }
}

/// Maximal contiguous mo-run starting at `w` made of writes by the thread of
/// `w` and read-modify-writes by other threads. Includes `w`.
pub fn release_sequence(t: &Trace, w: EventId) -> Vec<EventId> {
    let head = &t.events[w];
    let Some(obj) = head.object.filter(|_| head.is_write()) else {
        return Vec::new();
    };
    let chain = t.mo_chain(obj);
    let start = chain
        .iter()
        .position(|&x| x == w)
        .expect("write is in its mo chain");
    chain[start..]
        .iter()
        .copied()
        .take_while(|&x| {
            let e = &t.events[x];
            (head.thread.is_some() && e.thread == head.thread) || e.action == Action::Rmw
        })
        .collect()
}

fn fences_where(t: &Trace, pick: impl Fn(EventId) -> bool) -> Vec<EventId> {
    t.events
        .iter()
        .filter(|f| f.is_fence() && pick(f.id))
        .map(|f| f.id)
        .collect()
}

/// Release fences sb-before `e`.
pub fn release_fences_before(t: &Trace, e: EventId) -> Vec<EventId> {
    fences_where(t, |f| t.events[f].order.is_release() && t.sb.contains(f, e))
}

/// Acquire fences sb-after `e`.
pub fn acquire_fences_after(t: &Trace, e: EventId) -> Vec<EventId> {
    fences_where(t, |f| t.events[f].order.is_acquire() && t.sb.contains(e, f))
}

/// Synchronizes-with and dependency-ordered-before. Both only relate events
/// of different threads.
pub fn derive_sync(t: &Trace) -> (BinaryRelation, BinaryRelation) {
    let n = t.len();
    let mut sw = BinaryRelation::empty(n);
    let mut dob = BinaryRelation::empty(n);
    for (w, r) in t.rf.pairs() {
        if t.same_thread(w, r) {
            continue;
        }
        let (ew, er) = (&t.events[w], &t.events[r]);
        let rel_w = ew.order.is_release();
        let acq_r = er.order.is_acquire();
        let before = release_fences_before(t, w);
        let after = acquire_fences_after(t, r);
        if rel_w && acq_r {
            sw.insert(w, r);
        }
        if rel_w {
            for &f in &after {
                sw.insert(w, f);
            }
        }
        if acq_r {
            for &f in &before {
                sw.insert(f, r);
            }
        }
        for &f1 in &before {
            for &f2 in &after {
                sw.insert(f1, f2);
            }
        }
    }
    for head in t
        .events
        .iter()
        .filter(|e| e.is_write() && e.order.is_release())
    {
        for w2 in release_sequence(t, head.id) {
            for r in t.rf.successors(w2) {
                if t.same_thread(head.id, r) {
                    continue;
                }
                if t.events[r].order.is_acquire() {
                    dob.insert(head.id, r);
                }
                for f in acquire_fences_after(t, r) {
                    dob.insert(head.id, f);
                }
            }
        }
    }
    (sw, dob)
}

/// Inter-thread happens-before and happens-before.
///
/// ithb is the least relation containing sw, dob and sw;sb that is closed
/// under sb;ithb, ithb;ithb and sw;ithb. That is `(X ∪ sb;X)+` with
/// `X = sw ∪ dob ∪ sw;sb`.
pub fn compute_hb(
    t: &Trace,
    sw: &BinaryRelation,
    dob: &BinaryRelation,
) -> (BinaryRelation, BinaryRelation) {
    let mut x = sw.union(dob);
    x.union_with(&sw.compose(&t.sb));
    let mut step = x.clone();
    step.union_with(&t.sb.compose(&x));
    let ithb = step.transitive_closure();
    let hb = t.sb.union(&ithb);
    (ithb, hb)
}

/// From-read: `rf⁻¹ ; mo` without identity.
pub fn compute_fr(t: &Trace) -> BinaryRelation {
    t.rf.inverse().compose(&t.mo).without_identity()
}

/// SC-order constraints induced by `hb ∪ mo ∪ rf ∪ fr` on sc events, lifted
/// through sc fences.
pub fn compute_so(t: &Trace, hb: &BinaryRelation, fr: &BinaryRelation) -> BinaryRelation {
    let n = t.len();
    let sc_fence = |f: EventId| t.events[f].is_fence() && t.events[f].is_sc();
    let before: Vec<Vec<EventId>> = (0..n)
        .map(|e| t.sb.predecessors(e).filter(|&f| sc_fence(f)).collect())
        .collect();
    let after: Vec<Vec<EventId>> = (0..n)
        .map(|e| t.sb.successors(e).filter(|&f| sc_fence(f)).collect())
        .collect();
    let mut base = hb.union(&t.mo);
    base.union_with(&t.rf);
    base.union_with(fr);
    let mut so = BinaryRelation::empty(n);
    for (e1, e2) in base.pairs() {
        let (sc1, sc2) = (t.events[e1].is_sc(), t.events[e2].is_sc());
        if sc1 && sc2 {
            so.insert(e1, e2);
        }
        if sc1 {
            for &f in &after[e2] {
                so.insert(e1, f);
            }
        }
        if sc2 {
            for &f in &before[e1] {
                so.insert(f, e2);
            }
        }
        for &f1 in &before[e1] {
            for &f2 in &after[e2] {
                so.insert(f1, f2);
            }
        }
    }
    so
}
