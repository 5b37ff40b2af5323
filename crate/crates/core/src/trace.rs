//! Events and execution traces.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::order::MemoryOrder;
use crate::program::{FenceSlot, ObjectId, SourceLocation, ThreadId};
use crate::relation::BinaryRelation;

pub type EventId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    Read,
    Write,
    Rmw,
    Fence,
}

impl Action {
    pub fn as_str(self) -> &'static str {
        match self {
            Action::Read => "R",
            Action::Write => "W",
            Action::Rmw => "U",
            Action::Fence => "F",
        }
    }
}

/// What produced an event.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Site {
    /// Initial value of an object.
    Init,
    /// A statement of the elaborated program; `origin` is its index in the
    /// program before loop elaboration.
    Stmt { loc: SourceLocation, origin: usize },
    /// A candidate fence added for analysis.
    Candidate(FenceSlot),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Event {
    pub id: EventId,
    /// `None` for initialization events.
    pub thread: Option<ThreadId>,
    /// Position in the thread's sb order.
    pub idx: usize,
    pub action: Action,
    pub object: Option<ObjectId>,
    pub order: MemoryOrder,
    pub site: Site,
    pub read_value: Option<i64>,
    pub write_value: Option<i64>,
}

impl Event {
    pub fn is_read(&self) -> bool {
        matches!(self.action, Action::Read | Action::Rmw)
    }

    pub fn is_write(&self) -> bool {
        matches!(self.action, Action::Write | Action::Rmw)
    }

    pub fn is_fence(&self) -> bool {
        self.action == Action::Fence
    }

    pub fn is_init(&self) -> bool {
        self.site == Site::Init
    }

    pub fn is_sc(&self) -> bool {
        self.order == MemoryOrder::SeqCst
    }

    pub fn is_candidate(&self) -> bool {
        matches!(self.site, Site::Candidate(_))
    }
}

/// A candidate execution: events with sb, rf and mo.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub events: Vec<Event>,
    pub sb: BinaryRelation,
    pub rf: BinaryRelation,
    pub mo: BinaryRelation,
    pub object_names: Vec<String>,
    pub thread_names: Vec<String>,
    /// Value of the mo-maximal write of each object.
    pub final_objects: Vec<i64>,
    pub final_locals: Vec<BTreeMap<String, i64>>,
    /// The final state violates the assertion.
    pub buggy: bool,
    /// Per thread, the end-of-thread fence gap of the source program.
    pub thread_gaps: Vec<usize>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn rf_source(&self, r: EventId) -> Option<EventId> {
        self.rf.predecessors(r).next()
    }

    /// Events of thread `t` in sb order.
    pub fn thread_events(&self, t: ThreadId) -> Vec<EventId> {
        let mut v: Vec<EventId> = self
            .events
            .iter()
            .filter(|e| e.thread == Some(t))
            .map(|e| e.id)
            .collect();
        v.sort_by_key(|&e| self.events[e].idx);
        v
    }

    /// Writes to `obj` in mo order.
    pub fn mo_chain(&self, obj: ObjectId) -> Vec<EventId> {
        let mut v: Vec<EventId> = self
            .events
            .iter()
            .filter(|e| e.is_write() && e.object == Some(obj))
            .map(|e| e.id)
            .collect();
        v.sort_by_key(|&w| self.mo.predecessors(w).count());
        v
    }

    pub fn same_thread(&self, a: EventId, b: EventId) -> bool {
        let (ta, tb) = (self.events[a].thread, self.events[b].thread);
        ta.is_some() && ta == tb
    }

    /// Check the structural invariants of a trace. Returns a description of
    /// the first problem found.
    pub fn well_formed(&self) -> Result<(), &'static str> {
        let n = self.events.len();
        if self.sb.universe() != n || self.rf.universe() != n || self.mo.universe() != n {
            return Err("relation carrier differs from event count");
        }
        for (i, e) in self.events.iter().enumerate() {
            if e.id != i {
                return Err("event ids are not dense");
            }
        }
        for a in 0..n {
            for b in 0..n {
                let same = self.same_thread(a, b);
                let before = self.events[a].idx < self.events[b].idx;
                if self.sb.contains(a, b) != (same && before) {
                    return Err("sb is not the per-thread total order");
                }
            }
        }
        for e in &self.events {
            let srcs: Vec<EventId> = self.rf.predecessors(e.id).collect();
            if e.is_read() {
                if srcs.len() != 1 {
                    return Err("read without exactly one rf source");
                }
                let w = &self.events[srcs[0]];
                if !w.is_write() || w.object != e.object || w.write_value != e.read_value {
                    return Err("rf source mismatch");
                }
            } else if !srcs.is_empty() {
                return Err("rf into a non-read");
            }
        }
        for (a, b) in self.mo.pairs() {
            let (ea, eb) = (&self.events[a], &self.events[b]);
            if !ea.is_write() || !eb.is_write() || ea.object != eb.object || a == b {
                return Err("mo relates non-writes or different objects");
            }
        }
        if !self.mo.is_acyclic() || self.mo.transitive_closure() != self.mo {
            return Err("mo is not a strict order");
        }
        for a in 0..n {
            for b in 0..n {
                let (ea, eb) = (&self.events[a], &self.events[b]);
                if a != b
                    && ea.is_write()
                    && eb.is_write()
                    && ea.object == eb.object
                    && !self.mo.contains(a, b)
                    && !self.mo.contains(b, a)
                {
                    return Err("mo is not total per object");
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Site::Init => f.write_str("init"),
            Site::Stmt { loc, origin } => write!(f, "{}:{}/{}", loc.thread, loc.index, origin),
            Site::Candidate(slot) => write!(f, "{slot}"),
        }
    }
}
