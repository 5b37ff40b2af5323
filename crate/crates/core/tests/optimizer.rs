//! Query solving and memory-order assignment against exhaustive search.

mod support;

use std::collections::{BTreeMap, BTreeSet};

use fensy_core::fensying::{CandidateSolution, Strength, TraceAnalysis};
use fensy_core::optimizer::{
    assign_memory_orders, build_query, find_min_model, Query, TraceClause,
};
use fensy_core::{Condition, FenceSlot, MemoryOrder};
use proptest::prelude::*;
use support::config;
use MemoryOrder::*;

fn f(i: usize) -> FenceSlot {
    FenceSlot { thread: 0, gap: i }
}

fn sol(trace_id: usize, fences: &[(usize, MemoryOrder)]) -> CandidateSolution {
    let strong = fences.iter().any(|(_, o)| *o == SeqCst);
    CandidateSolution {
        trace_id,
        strength: if strong {
            Strength::Strong
        } else {
            Strength::Weak
        },
        condition: if strong {
            Condition::ToSc
        } else {
            Condition::CoH
        },
        cycle: Vec::new(),
        fences: fences.iter().map(|&(i, o)| (f(i), o)).collect(),
        strengthened: BTreeMap::new(),
    }
}

fn analysis(trace_id: usize, sols: Vec<CandidateSolution>) -> TraceAnalysis {
    TraceAnalysis {
        trace_id,
        weak_cycles: sols.len(),
        strong_cycles: 0,
        solutions: sols,
    }
}

fn set(xs: &[usize]) -> BTreeSet<FenceSlot> {
    xs.iter().map(|&i| f(i)).collect()
}

fn clause(trace_id: usize, conjuncts: &[&[usize]]) -> TraceClause {
    TraceClause {
        trace_id,
        conjuncts: conjuncts.iter().map(|c| set(c)).collect(),
    }
}

#[test]
fn three_fence_conjunction_beats_staged_solving() {
    let t1 = clause(1, &[&[1, 2], &[1, 3, 4]]);
    let t2 = clause(2, &[&[3, 4]]);
    let both = Query {
        clauses: vec![t1.clone(), t2.clone()],
    };
    assert_eq!(find_min_model(&both), Some(set(&[1, 3, 4])));

    let first = find_min_model(&Query { clauses: vec![t1] }).unwrap();
    assert_eq!(first, set(&[1, 2]));
    let second = find_min_model(&Query { clauses: vec![t2] }).unwrap();
    let staged: BTreeSet<FenceSlot> = first.union(&second).copied().collect();
    assert_eq!(staged.len(), 4);
}

#[test]
fn candidate_fences_coalesce_to_the_lighter_combination() {
    let analyses = vec![
        analysis(
            1,
            vec![
                sol(1, &[(1, AcqRel), (2, AcqRel)]),
                sol(1, &[(1, Release), (2, Acquire), (3, AcqRel)]),
            ],
        ),
        analysis(2, vec![sol(2, &[(1, Release), (2, Acquire), (3, Acquire)])]),
    ];
    let m = set(&[1, 2, 3]);
    let typed = assign_memory_orders(&m, &analyses, 1_000_000).unwrap();
    let want: BTreeMap<FenceSlot, MemoryOrder> =
        [(f(1), Release), (f(2), Acquire), (f(3), AcqRel)].into();
    assert_eq!(typed.fences, want);
    assert_eq!(typed.weight(), 4);
    assert!(typed.orders_optimal);
}

#[test]
fn empty_and_unsatisfiable_queries() {
    assert_eq!(find_min_model(&Query::default()), Some(BTreeSet::new()));
    let q = Query {
        clauses: vec![
            clause(0, &[&[1]]),
            TraceClause {
                trace_id: 1,
                conjuncts: vec![],
            },
        ],
    };
    assert_eq!(find_min_model(&q), None);
}

#[test]
fn query_keeps_minimal_slot_sets() {
    let a = analysis(
        0,
        vec![
            sol(0, &[(1, Release), (2, Acquire)]),
            sol(0, &[(1, SeqCst), (2, SeqCst), (3, SeqCst)]),
            sol(0, &[(4, SeqCst)]),
        ],
    );
    let q = build_query(&[a]);
    assert_eq!(q.clauses[0].conjuncts, vec![set(&[1, 2]), set(&[4])]);
}

fn exhaustive_min(q: &Query, nslots: usize) -> Option<BTreeSet<FenceSlot>> {
    let mut best: Option<Vec<FenceSlot>> = None;
    for mask in 0u32..1 << nslots {
        let m: BTreeSet<FenceSlot> = (0..nslots).filter(|i| mask >> i & 1 == 1).map(f).collect();
        if !q.satisfied_by(&m) {
            continue;
        }
        let v: Vec<FenceSlot> = m.into_iter().collect();
        let better = match &best {
            None => true,
            Some(b) => v.len() < b.len() || (v.len() == b.len() && v < *b),
        };
        if better {
            best = Some(v);
        }
    }
    best.map(|v| v.into_iter().collect())
}

fn query_strategy() -> impl Strategy<Value = Query> {
    let conjunct = prop::collection::btree_set(0usize..12, 1..=4);
    let clause = prop::collection::vec(conjunct, 0..=3);
    prop::collection::vec(clause, 0..=6).prop_map(|cs| Query {
        clauses: cs
            .into_iter()
            .enumerate()
            .map(|(i, cj)| TraceClause {
                trace_id: i,
                conjuncts: cj
                    .into_iter()
                    .map(|c| c.into_iter().map(f).collect())
                    .collect(),
            })
            .collect(),
    })
}

const ORDERS: [MemoryOrder; 4] = [Release, Acquire, AcqRel, SeqCst];

fn analyses_strategy() -> impl Strategy<Value = Vec<TraceAnalysis>> {
    let solution = prop::collection::btree_map(0usize..5, 0usize..4, 1..=3);
    let trace = prop::collection::vec(solution, 1..=3);
    prop::collection::vec(trace, 1..=3).prop_map(|ts| {
        ts.into_iter()
            .enumerate()
            .map(|(i, sols)| {
                let sols = sols
                    .into_iter()
                    .map(|m| {
                        let fs: Vec<(usize, MemoryOrder)> =
                            m.into_iter().map(|(s, o)| (s, ORDERS[o])).collect();
                        sol(i, &fs)
                    })
                    .collect();
                analysis(i, sols)
            })
            .collect()
    })
}

/// Cheapest per-slot lub over one option (inside `m`) per trace.
fn exhaustive_assign(m: &BTreeSet<FenceSlot>, analyses: &[TraceAnalysis]) -> Option<u32> {
    let options: Vec<Vec<&CandidateSolution>> = analyses
        .iter()
        .map(|a| {
            a.solutions
                .iter()
                .filter(|s| s.slots().is_subset(m))
                .collect()
        })
        .collect();
    if options.iter().any(|o| o.is_empty()) {
        return None;
    }
    let mut best = None;
    let mut idx = vec![0; options.len()];
    loop {
        let mut acc: BTreeMap<FenceSlot, MemoryOrder> = BTreeMap::new();
        for (t, &i) in idx.iter().enumerate() {
            for (s, o) in &options[t][i].fences {
                let e = acc.entry(*s).or_insert(*o);
                *e = e.join(*o);
            }
        }
        let w: u32 = acc.values().map(|o| o.weight()).sum();
        best = Some(best.map_or(w, |b: u32| b.min(w)));
        let mut k = 0;
        loop {
            if k == idx.len() {
                return best;
            }
            idx[k] += 1;
            if idx[k] < options[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn covers(fences: &BTreeMap<FenceSlot, MemoryOrder>, a: &TraceAnalysis) -> bool {
    a.solutions.iter().any(|s| {
        s.fences
            .iter()
            .all(|(slot, o)| fences.get(slot).is_some_and(|p| o.is_at_most(*p)))
    })
}

proptest! {
    #![proptest_config(config(1000))]

    #[test]
    fn min_model_has_minimum_cardinality(q in query_strategy()) {
        let got = find_min_model(&q);
        let want = exhaustive_min(&q, 12);
        prop_assert_eq!(got.as_ref().map(|m| m.len()), want.as_ref().map(|m| m.len()));
        if let Some(m) = &got {
            prop_assert!(q.satisfied_by(m));
        }
        prop_assert_eq!(got, want);
    }
}

proptest! {
    #![proptest_config(config(400))]

    #[test]
    fn assigned_orders_have_minimum_weight(analyses in analyses_strategy()) {
        let q = build_query(&analyses);
        let m = find_min_model(&q).expect("every trace has a solution");
        let typed = assign_memory_orders(&m, &analyses, 1_000_000).expect("model admits an option per trace");
        prop_assert!(typed.orders_optimal);
        prop_assert_eq!(Some(typed.weight()), exhaustive_assign(&m, &analyses));
        prop_assert!(typed.fences.keys().all(|s| m.contains(s)));
        for a in &analyses {
            prop_assert!(covers(&typed.fences, a));
        }
    }

    #[test]
    fn greedy_fallback_still_covers_every_trace(analyses in analyses_strategy()) {
        let m = find_min_model(&build_query(&analyses)).unwrap();
        let typed = assign_memory_orders(&m, &analyses, 1).unwrap();
        for a in &analyses {
            prop_assert!(covers(&typed.fences, a));
        }
        let best = exhaustive_assign(&m, &analyses).unwrap();
        prop_assert!(typed.weight() >= best);
        if typed.orders_optimal {
            prop_assert_eq!(typed.weight(), best);
        }
    }
}
