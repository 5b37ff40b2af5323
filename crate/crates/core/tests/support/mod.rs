//! Random traces and naive relation helpers shared by the core property tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use fensy_core::program::SourceLocation;
use fensy_core::trace::{Action, Site};
use fensy_core::{BinaryRelation, Event, EventId, MemoryOrder, Trace};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

pub type Pairs = BTreeSet<(usize, usize)>;

pub fn pairs(r: &BinaryRelation) -> Pairs {
    r.pairs().collect()
}

pub fn compose(a: &Pairs, b: &Pairs) -> Pairs {
    let mut out = Pairs::new();
    for &(x, y) in a {
        for &(y2, z) in b {
            if y == y2 {
                out.insert((x, z));
            }
        }
    }
    out
}

pub fn union(a: &Pairs, b: &Pairs) -> Pairs {
    a.union(b).copied().collect()
}

pub fn inverse(a: &Pairs) -> Pairs {
    a.iter().map(|&(x, y)| (y, x)).collect()
}

pub fn closure(a: &Pairs) -> Pairs {
    let mut cur = a.clone();
    loop {
        let next = union(&cur, &compose(&cur, &cur));
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

pub struct TraceShape {
    pub objects: usize,
    pub threads: usize,
    pub max_events: usize,
    pub fence_weight: u32,
}

impl Default for TraceShape {
    fn default() -> Self {
        TraceShape {
            objects: 2,
            threads: 3,
            max_events: 3,
            fence_weight: 1,
        }
    }
}

fn pick<T: Copy>(rng: &mut StdRng, xs: &[T]) -> T {
    *xs.choose(rng).unwrap()
}

/// A random trace: well-formed (rf matches values, mo total per object with
/// init first, rmws read their mo-predecessor) but not necessarily consistent.
pub fn random_trace(seed: u64, shape: &TraceShape) -> Trace {
    use MemoryOrder::*;
    let mut rng = StdRng::seed_from_u64(seed);
    let mut events: Vec<Event> = (0..shape.objects)
        .map(|o| Event {
            id: o,
            thread: None,
            idx: 0,
            action: Action::Write,
            object: Some(o),
            order: Relaxed,
            site: Site::Init,
            read_value: None,
            write_value: Some(0),
        })
        .collect();
    let nthreads = rng.gen_range(2..=shape.threads);
    let mut gaps = Vec::new();
    for t in 0..nthreads {
        let len = rng.gen_range(1..=shape.max_events);
        for i in 0..len {
            let roll = rng.gen_range(0..(6 + shape.fence_weight));
            let (action, order) = match roll {
                0 | 1 => (Action::Read, pick(&mut rng, &[Relaxed, Acquire, SeqCst])),
                2 | 3 => (Action::Write, pick(&mut rng, &[Relaxed, Release, SeqCst])),
                4 => (Action::Rmw, pick(&mut rng, &MemoryOrder::ALL)),
                _ => (
                    Action::Fence,
                    pick(&mut rng, &[Release, Acquire, AcqRel, SeqCst]),
                ),
            };
            let id = events.len();
            let object = (action != Action::Fence).then(|| rng.gen_range(0..shape.objects));
            events.push(Event {
                id,
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
                read_value: None,
                write_value: matches!(action, Action::Write | Action::Rmw).then_some(id as i64),
            });
        }
        gaps.push(len);
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
    let mut mo = BinaryRelation::empty(n);
    for o in 0..shape.objects {
        let mut ws: Vec<EventId> = events
            .iter()
            .filter(|e| e.thread.is_some() && e.is_write() && e.object == Some(o))
            .map(|e| e.id)
            .collect();
        ws.shuffle(&mut rng);
        ws.insert(0, o);
        for (i, &a) in ws.iter().enumerate() {
            for &b in &ws[i + 1..] {
                mo.insert(a, b);
            }
        }
    }
    let mut rf = BinaryRelation::empty(n);
    for r in 0..n {
        if !events[r].is_read() {
            continue;
        }
        if events[r].action == Action::Rmw {
            // atomicity: an rmw reads its immediate mo-predecessor
            let w = mo
                .predecessors(r)
                .max_by_key(|&w| mo.predecessors(w).count())
                .unwrap();
            rf.insert(w, r);
            events[r].read_value = events[w].write_value;
            continue;
        }
        let srcs: Vec<EventId> = events
            .iter()
            .filter(|w| w.id != r && w.is_write() && w.object == events[r].object)
            .map(|w| w.id)
            .collect();
        // favour other threads' writes; init reads rarely need fences
        let fresh: Vec<EventId> = srcs
            .iter()
            .copied()
            .filter(|&w| w >= shape.objects)
            .collect();
        let w = if !fresh.is_empty() && rng.gen_bool(0.8) {
            pick(&mut rng, &fresh)
        } else {
            pick(&mut rng, &srcs)
        };
        rf.insert(w, r);
        events[r].read_value = events[w].write_value;
    }
    Trace {
        events,
        sb,
        rf,
        mo,
        object_names: (0..shape.objects).map(|o| format!("o{o}")).collect(),
        thread_names: (0..nthreads).map(|t| format!("t{t}")).collect(),
        final_objects: vec![0; shape.objects],
        final_locals: vec![BTreeMap::new(); nthreads],
        buggy: false,
        thread_gaps: gaps,
    }
}

/// First consistent random trace reachable from `seed`, if any within a few
/// hundred tries.
pub fn random_consistent_trace(seed: u64, shape: &TraceShape) -> Option<Trace> {
    (0..400u64)
        .map(|i| random_trace(seed.wrapping_mul(1000).wrapping_add(i), shape))
        .find(fensy_core::consistency::is_consistent)
}

/// A consistent trace that becomes inconsistent once sc fences sit in every
/// gap, i.e. one that fence synthesis should be able to break.
pub fn random_weak_trace(seed: u64, shape: &TraceShape) -> Option<Trace> {
    use fensy_core::consistency::is_consistent;
    (0..3000u64)
        .map(|i| random_trace(seed.wrapping_mul(10_000).wrapping_add(i), shape))
        .find(|t| {
            let it = fensy_core::fensying::insert_candidate_fences(t);
            let strong = it.with_orders(fensy_core::fensying::Strength::Strong);
            is_consistent(t) && !is_consistent(&strong)
        })
}

pub fn config(cases: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases,
        failure_persistence: None,
        ..Default::default()
    }
}
