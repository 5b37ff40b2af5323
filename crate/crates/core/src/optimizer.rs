//! Fence-placement query, minimum model and memory-order assignment.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::fensying::{CandidateSolution, TraceAnalysis};
use crate::order::MemoryOrder;
use crate::program::{FenceSlot, SourceLocation};

/// Per trace: a disjunction of conjunctions of fence slots.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceClause {
    pub trace_id: usize,
    /// Minimal slot sets, sorted. An empty set means the trace is fixed by
    /// strengthening program fences alone.
    pub conjuncts: Vec<BTreeSet<FenceSlot>>,
}

/// Conjunction of trace clauses.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Query {
    pub clauses: Vec<TraceClause>,
}

/// Keep only the inclusion-minimal sets, sorted and deduplicated.
pub fn minimal_sets(
    sets: impl IntoIterator<Item = BTreeSet<FenceSlot>>,
) -> Vec<BTreeSet<FenceSlot>> {
    let all: BTreeSet<BTreeSet<FenceSlot>> = sets.into_iter().collect();
    all.iter()
        .filter(|s| !all.iter().any(|o| o != *s && o.is_subset(s)))
        .cloned()
        .collect()
}

impl TraceClause {
    pub fn satisfied_by(&self, m: &BTreeSet<FenceSlot>) -> bool {
        self.conjuncts.iter().any(|c| c.is_subset(m))
    }
}

impl Query {
    pub fn satisfied_by(&self, m: &BTreeSet<FenceSlot>) -> bool {
        self.clauses.iter().all(|c| c.satisfied_by(m))
    }

    pub fn slots(&self) -> BTreeSet<FenceSlot> {
        self.clauses
            .iter()
            .flat_map(|c| c.conjuncts.iter().flatten().copied())
            .collect()
    }
}

pub fn build_query(analyses: &[TraceAnalysis]) -> Query {
    Query {
        clauses: analyses
            .iter()
            .map(|a| TraceClause {
                trace_id: a.trace_id,
                conjuncts: minimal_sets(a.solutions.iter().map(|s| s.slots())),
            })
            .collect(),
    }
}

/// A minimum-cardinality slot set satisfying `q`; among those, the
/// lexicographically least sorted slot list. `None` if unsatisfiable.
pub fn find_min_model(q: &Query) -> Option<BTreeSet<FenceSlot>> {
    if q.clauses.iter().any(|c| c.conjuncts.is_empty()) {
        return None;
    }
    fn search(
        q: &Query,
        chosen: &BTreeSet<FenceSlot>,
        k: usize,
        seen: &mut BTreeSet<BTreeSet<FenceSlot>>,
        best: &mut Option<Vec<FenceSlot>>,
    ) {
        if !seen.insert(chosen.clone()) {
            return;
        }
        let Some(open) = q.clauses.iter().find(|c| !c.satisfied_by(chosen)) else {
            let v: Vec<FenceSlot> = chosen.iter().copied().collect();
            if best.as_ref().is_none_or(|b| v < *b) {
                *best = Some(v);
            }
            return;
        };
        for c in &open.conjuncts {
            let next: BTreeSet<FenceSlot> = chosen.union(c).copied().collect();
            if next.len() <= k {
                search(q, &next, k, seen, best);
            }
        }
    }
    let total = q.slots().len();
    for k in 0..=total {
        let mut best = None;
        search(q, &BTreeSet::new(), k, &mut BTreeSet::new(), &mut best);
        if let Some(b) = best {
            // models reached through fewer slots than k were found at an earlier k
            return Some(b.into_iter().collect());
        }
    }
    None
}

/// Fences with memory orders for a chosen slot set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypedSolution {
    pub fences: BTreeMap<FenceSlot, MemoryOrder>,
    /// Program fences to raise, with their new order.
    pub strengthened: BTreeMap<SourceLocation, MemoryOrder>,
    /// False when the search budget ran out and a greedy choice was used.
    pub orders_optimal: bool,
}

impl TypedSolution {
    pub fn weight(&self) -> u32 {
        solution_weight(&self.fences)
    }
}

pub fn solution_weight(fences: &BTreeMap<FenceSlot, MemoryOrder>) -> u32 {
    fences.values().map(|o| o.weight()).sum()
}

type Choice = (
    BTreeMap<FenceSlot, MemoryOrder>,
    BTreeMap<SourceLocation, MemoryOrder>,
);

fn join_into<K: Ord + Copy>(acc: &mut BTreeMap<K, MemoryOrder>, add: &BTreeMap<K, MemoryOrder>) {
    for (k, o) in add {
        let e = acc.entry(*k).or_insert(*o);
        *e = e.join(*o);
    }
}

type Key = (
    u32,
    u32,
    Vec<(FenceSlot, MemoryOrder)>,
    Vec<(SourceLocation, MemoryOrder)>,
);

fn key(c: &Choice) -> Key {
    (
        solution_weight(&c.0),
        c.1.values().map(|o| o.weight()).sum(),
        c.0.iter().map(|(a, b)| (*a, *b)).collect(),
        c.1.iter().map(|(a, b)| (*a, *b)).collect(),
    )
}

/// Pick one cycle solution per trace, using only fences in `m`, so that the
/// slot-wise join of their orders has least total weight. Ties go to fewer
/// program-fence raises, then the lexicographically least assignment.
///
/// Returns `None` if some trace has no solution within `m`.
pub fn assign_memory_orders(
    m: &BTreeSet<FenceSlot>,
    analyses: &[TraceAnalysis],
    node_budget: usize,
) -> Option<TypedSolution> {
    let options = trace_options(m, analyses)?;

    struct Dfs<'a> {
        options: &'a [Vec<Choice>],
        best: Option<(Key, Choice)>,
        nodes: usize,
        budget: usize,
        exhausted: bool,
    }
    impl Dfs<'_> {
        fn go(&mut self, i: usize, cur: &Choice) {
            self.nodes += 1;
            if self.nodes > self.budget {
                self.exhausted = true;
                return;
            }
            if let Some((bk, _)) = &self.best {
                if solution_weight(&cur.0) > bk.0 {
                    return;
                }
            }
            if i == self.options.len() {
                let k = key(cur);
                if self.best.as_ref().is_none_or(|(bk, _)| k < *bk) {
                    self.best = Some((k, cur.clone()));
                }
                return;
            }
            for opt in &self.options[i] {
                let mut next = cur.clone();
                join_into(&mut next.0, &opt.0);
                join_into(&mut next.1, &opt.1);
                self.go(i + 1, &next);
                if self.exhausted {
                    return;
                }
            }
        }
    }

    let mut dfs = Dfs {
        options: &options,
        best: None,
        nodes: 0,
        budget: node_budget,
        exhausted: false,
    };
    dfs.go(0, &(BTreeMap::new(), BTreeMap::new()));
    let (choice, optimal) = if dfs.exhausted {
        let mut cur: Choice = (BTreeMap::new(), BTreeMap::new());
        for opts in &options {
            let pick = opts
                .iter()
                .map(|o| {
                    let mut next = cur.clone();
                    join_into(&mut next.0, &o.0);
                    join_into(&mut next.1, &o.1);
                    (key(&next), next)
                })
                .min_by(|a, b| a.0.cmp(&b.0))
                .expect("non-empty options");
            cur = pick.1;
        }
        (cur, false)
    } else {
        (dfs.best.expect("options exist").1, true)
    };
    Some(TypedSolution {
        fences: choice.0,
        strengthened: choice.1,
        orders_optimal: optimal,
    })
}

/// Per trace, the distinct non-dominated solutions using only slots in `m`.
/// Traces with identical option lists are merged, and traces with fewer
/// options come first.
fn trace_options(m: &BTreeSet<FenceSlot>, analyses: &[TraceAnalysis]) -> Option<Vec<Vec<Choice>>> {
    let mut lists: BTreeSet<Vec<Choice>> = BTreeSet::new();
    for a in analyses {
        let within: Vec<&CandidateSolution> = a
            .solutions
            .iter()
            .filter(|s| s.fences.keys().all(|k| m.contains(k)))
            .collect();
        let mut opts: Vec<Choice> = Vec::new();
        for s in &within {
            let dominated = within.iter().any(|o| o.dominates(s) && !(s.dominates(o)));
            let c = (s.fences.clone(), s.strengthened.clone());
            if !dominated && !opts.contains(&c) {
                opts.push(c);
            }
        }
        if opts.is_empty() {
            return None;
        }
        opts.sort();
        lists.insert(opts);
    }
    let mut out: Vec<Vec<Choice>> = lists.into_iter().collect();
    out.sort_by_key(|v| v.len());
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn slot(t: usize, g: usize) -> FenceSlot {
        FenceSlot { thread: t, gap: g }
    }

    #[test]
    fn three_fence_example_min_model() {
        let (f1, f2, f3, f4) = (slot(0, 1), slot(1, 1), slot(2, 1), slot(3, 1));
        let q = Query {
            clauses: vec![
                TraceClause {
                    trace_id: 0,
                    conjuncts: vec![BTreeSet::from([f1, f2]), BTreeSet::from([f1, f3, f4])],
                },
                TraceClause {
                    trace_id: 1,
                    conjuncts: vec![BTreeSet::from([f3, f4])],
                },
            ],
        };
        assert_eq!(find_min_model(&q), Some(BTreeSet::from([f1, f3, f4])));
    }

    #[test]
    fn unsatisfiable_clause() {
        let q = Query {
            clauses: vec![TraceClause {
                trace_id: 0,
                conjuncts: vec![],
            }],
        };
        assert_eq!(find_min_model(&q), None);
    }

    #[test]
    fn empty_query_needs_nothing() {
        assert_eq!(find_min_model(&Query::default()), Some(BTreeSet::new()));
    }
}
