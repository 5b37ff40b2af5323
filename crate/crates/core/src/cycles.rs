//! Elementary cycle enumeration (Johnson's algorithm).

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

/// Strongly connected components restricted to vertices `>= lo`.
fn sccs(adj: &[Vec<usize>], lo: usize) -> Vec<Vec<usize>> {
    struct St<'a> {
        adj: &'a [Vec<usize>],
        lo: usize,
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on: Vec<bool>,
        stack: Vec<usize>,
        next: usize,
        out: Vec<Vec<usize>>,
    }
    fn visit(s: &mut St, v: usize) {
        s.index[v] = Some(s.next);
        s.low[v] = s.next;
        s.next += 1;
        s.stack.push(v);
        s.on[v] = true;
        for i in 0..s.adj[v].len() {
            let w = s.adj[v][i];
            if w < s.lo {
                continue;
            }
            match s.index[w] {
                None => {
                    visit(s, w);
                    s.low[v] = s.low[v].min(s.low[w]);
                }
                Some(iw) if s.on[w] => s.low[v] = s.low[v].min(iw),
                _ => {}
            }
        }
        if Some(s.low[v]) == s.index[v] {
            let mut comp = Vec::new();
            loop {
                let w = s.stack.pop().expect("tarjan stack");
                s.on[w] = false;
                comp.push(w);
                if w == v {
                    break;
                }
            }
            comp.sort_unstable();
            s.out.push(comp);
        }
    }
    let n = adj.len();
    let mut s = St {
        adj,
        lo,
        index: vec![None; n],
        low: vec![0; n],
        on: vec![false; n],
        stack: Vec::new(),
        next: 0,
        out: Vec::new(),
    };
    for v in lo..n {
        if s.index[v].is_none() {
            visit(&mut s, v);
        }
    }
    s.out
}

/// The cycle limit was exceeded.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TooManyCycles;

/// Every elementary cycle of the directed graph `adj` (vertex `i` has edges
/// to `adj[i]`). Each cycle is listed once, starting at its least vertex.
/// Self-loops count as cycles of length one.
pub fn enumerate_simple_cycles(
    adj: &[Vec<usize>],
    limit: Option<usize>,
) -> Result<Vec<Vec<usize>>, TooManyCycles> {
    let n = adj.len();
    let adj: Vec<Vec<usize>> = adj
        .iter()
        .map(|v| {
            v.iter()
                .copied()
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    let mut blocked = vec![false; n];
    let mut b: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let mut in_comp = vec![false; n];

    fn unblock(u: usize, blocked: &mut [bool], b: &mut [BTreeSet<usize>]) {
        let mut work = vec![u];
        while let Some(u) = work.pop() {
            if blocked[u] {
                blocked[u] = false;
                work.extend(core::mem::take(&mut b[u]));
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn circuit(
        v: usize,
        s: usize,
        adj: &[Vec<usize>],
        in_comp: &[bool],
        blocked: &mut [bool],
        b: &mut [BTreeSet<usize>],
        path: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
        limit: Option<usize>,
    ) -> Result<bool, TooManyCycles> {
        let mut found = false;
        path.push(v);
        blocked[v] = true;
        for &w in &adj[v] {
            if !in_comp[w] {
                continue;
            }
            if w == s {
                out.push(path.clone());
                if limit.is_some_and(|l| out.len() > l) {
                    return Err(TooManyCycles);
                }
                found = true;
            } else if !blocked[w] && circuit(w, s, adj, in_comp, blocked, b, path, out, limit)? {
                found = true;
            }
        }
        if found {
            unblock(v, blocked, b);
        } else {
            for &w in &adj[v] {
                if in_comp[w] {
                    b[w].insert(v);
                }
            }
        }
        path.pop();
        Ok(found)
    }

    let mut s = 0;
    while s < n {
        // the component holding the least vertex >= s that has a cycle
        let comp = sccs(&adj, s)
            .into_iter()
            .filter(|c| c.len() > 1 || adj[c[0]].contains(&c[0]))
            .min_by_key(|c| c[0]);
        let Some(comp) = comp else { break };
        let start = comp[0];
        for &v in &comp {
            in_comp[v] = true;
            blocked[v] = false;
            b[v].clear();
        }
        let mut path = Vec::new();
        circuit(
            start,
            start,
            &adj,
            &in_comp,
            &mut blocked,
            &mut b,
            &mut path,
            &mut out,
            limit,
        )?;
        for &v in &comp {
            in_comp[v] = false;
        }
        s = start + 1;
    }
    Ok(out)
}
