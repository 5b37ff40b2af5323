//! Human-readable synthesis report.

use std::fmt::Write;

use fensy_core::driver::{MutantOutcome, Mutation, SanityReport, Status, SynthesisResult};
use fensy_core::Mode;

use crate::dump::{loc_name, slot_name};

fn ms(us: u64) -> String {
    format!("{:.1}ms", us as f64 / 1000.0)
}

pub fn render(r: &SynthesisResult) -> String {
    let p = &r.input;
    let mut out = String::new();
    writeln!(out, "program: {}", p.name).unwrap();
    let mode = match r.mode {
        Mode::Optimal => "opt",
        Mode::Fast => "fast",
    };
    writeln!(out, "mode: {mode}").unwrap();
    writeln!(out, "status: {}", r.status.as_str()).unwrap();
    match r.status {
        Status::NoFix => {
            let t = r.unfixable_trace.map_or("?".into(), |t| t.to_string());
            writeln!(
                out,
                "cannot stop buggy trace {t} with C11 fences: no weak or strong cycle through candidate fences"
            )
            .unwrap();
        }
        Status::ResourceLimit => {
            if let Some(l) = r.limit {
                writeln!(out, "limit: {l}").unwrap();
            }
        }
        _ => {}
    }
    if r.status == Status::Fixed {
        writeln!(out, "fences: {}", r.fences.len()).unwrap();
        for f in &r.fences {
            let mut line = format!(
                "  {} (before input statement {} of thread {}): {}",
                slot_name(p, f.slot),
                f.slot.gap,
                p.threads[f.slot.thread].name,
                f.order
            );
            if f.copies > 1 {
                write!(
                    line,
                    ", in a loop body: guards all {} unrolled iterations",
                    f.copies
                )
                .unwrap();
            }
            if r.mode == Mode::Fast {
                write!(line, ", iteration {}", f.iteration).unwrap();
            }
            writeln!(out, "{line}").unwrap();
        }
        writeln!(out, "weight: {}", r.weight()).unwrap();
        if r.strengthened.is_empty() {
            writeln!(out, "strengthened: none").unwrap();
        } else {
            writeln!(out, "strengthened: {}", r.strengthened.len()).unwrap();
            for s in &r.strengthened {
                writeln!(out, "  {}: {} -> {}", loc_name(p, s.location), s.from, s.to).unwrap();
            }
        }
        if !r.orders_optimal {
            writeln!(
                out,
                "note: nonoptimal-orders (coalescing budget exhausted, greedy choice used)"
            )
            .unwrap();
        }
    }
    writeln!(out, "iterations: {}", r.iterations).unwrap();
    writeln!(out, "buggy traces analyzed: {}", r.traces_analyzed).unwrap();
    let t = &r.timings;
    writeln!(
        out,
        "timings: enumerate {} fensying {} solve {} assign {} verify {}",
        ms(t.enumerate),
        ms(t.fensying),
        ms(t.solve),
        ms(t.assign),
        ms(t.verify)
    )
    .unwrap();
    out
}

pub fn render_sanity(r: &SanityReport) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "sanity check: {}",
        if r.passed() { "passed" } else { "FAILED" }
    )
    .unwrap();
    for m in &r.mutants {
        let what = match m.mutation {
            Mutation::Removed => "removed".to_string(),
            Mutation::Weakened(o) => format!("weakened to {o}"),
        };
        let outcome = match m.outcome {
            MutantOutcome::BugFound => "buggy trace found".to_string(),
            MutantOutcome::StillCorrect => "still correct".to_string(),
            MutantOutcome::Inconclusive(l) => format!("inconclusive ({l})"),
        };
        writeln!(
            out,
            "  fence {}:{} ({}) {what}: {outcome}",
            m.fence.thread, m.fence.index, m.order
        )
        .unwrap();
    }
    out
}
