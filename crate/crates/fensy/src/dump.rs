//! Line-oriented dumps of traces, cycles and queries.

use std::fmt::Write;

use fensy_core::fensying::{insert_candidate_fences, CandidateSolution};
use fensy_core::optimizer::Query;
use fensy_core::program::{FenceSlot, Program, SourceLocation};
use fensy_core::sync::Derived;
use fensy_core::trace::{Site, Trace};

pub fn slot_name(p: &Program, s: FenceSlot) -> String {
    format!("{}:{}", p.threads[s.thread].name, s.gap)
}

pub fn loc_name(p: &Program, l: SourceLocation) -> String {
    format!("{}:{}", p.threads[l.thread].name, l.index)
}

/// One trace: header, events, base relations, then derived relations.
pub fn dump_trace(id: usize, t: &Trace) -> String {
    let mut out = String::new();
    writeln!(out, "trace {id}{}", if t.buggy { " buggy" } else { "" }).unwrap();
    for e in &t.events {
        let thr = e
            .thread
            .map_or("-".to_string(), |i| t.thread_names[i].clone());
        let obj = e
            .object
            .map_or("-".to_string(), |o| t.object_names[o].clone());
        let loc = match e.site {
            Site::Init => "init".to_string(),
            Site::Stmt { origin, .. } => format!("{thr}:{origin}"),
            Site::Candidate(s) => format!("{thr}@{}", s.gap),
        };
        writeln!(
            out,
            "event {} {thr} {} {} {obj} {} {loc}",
            e.id,
            e.idx,
            e.action.as_str(),
            e.order
        )
        .unwrap();
    }
    for e in &t.events {
        if let Some(v) = e.read_value {
            writeln!(out, "read-value {} {v}", e.id).unwrap();
        }
        if let Some(v) = e.write_value {
            writeln!(out, "write-value {} {v}", e.id).unwrap();
        }
    }
    let d = Derived::of(t);
    for (name, rel) in [
        ("sb", &t.sb),
        ("rf", &t.rf),
        ("mo", &t.mo),
        ("sw", &d.sw),
        ("dob", &d.dob),
        ("hb", &d.hb),
        ("fr", &d.fr),
        ("so", &d.so),
    ] {
        for (a, b) in rel.pairs() {
            writeln!(out, "{name} {a} {b}").unwrap();
        }
    }
    out
}

/// Buggy traces followed by their versions with candidate fences.
pub fn dump_traces(traces: &[Trace]) -> String {
    let mut out = String::new();
    for (i, t) in traces.iter().enumerate() {
        out.push_str(&dump_trace(i, t));
    }
    for (i, t) in traces.iter().enumerate() {
        writeln!(out, "# trace {i} with candidate fences").unwrap();
        out.push_str(&dump_trace(i, &insert_candidate_fences(t).trace));
    }
    out
}

pub fn cycle_line(p: &Program, s: &CandidateSolution) -> String {
    let fences: Vec<String> = s
        .fences
        .iter()
        .map(|(slot, o)| format!("{}/{o}", slot_name(p, *slot)))
        .collect();
    let mut line = format!(
        "cycle {} {} {} fences={}",
        s.trace_id,
        s.strength.as_str(),
        s.condition,
        fences.join(",")
    );
    if !s.strengthened.is_empty() {
        let raised: Vec<String> = s
            .strengthened
            .iter()
            .map(|(l, o)| format!("{}/{o}", loc_name(p, *l)))
            .collect();
        write!(line, " raise={}", raised.join(",")).unwrap();
    }
    line
}

pub fn dump_cycles<'a>(
    p: &Program,
    sols: impl IntoIterator<Item = &'a CandidateSolution>,
) -> String {
    sols.into_iter().map(|s| cycle_line(p, s) + "\n").collect()
}

pub fn dump_query(p: &Program, q: &Query) -> String {
    let mut out = String::new();
    for c in &q.clauses {
        let disj: Vec<String> = c
            .conjuncts
            .iter()
            .map(|conj| {
                if conj.is_empty() {
                    "(⊤)".to_string()
                } else {
                    let lits: Vec<String> = conj
                        .iter()
                        .map(|s| format!("F{}", slot_name(p, *s)))
                        .collect();
                    format!("({})", lits.join("∧"))
                }
            })
            .collect();
        let body = if disj.is_empty() {
            "⊥".to_string()
        } else {
            disj.join(" ∨ ")
        };
        writeln!(out, "trace {}: {body}", c.trace_id).unwrap();
    }
    out
}
