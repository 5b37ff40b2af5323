//! Front end for the fence synthesizer: DSL parsing and printing, dump
//! formats, reports and a wall-clock budget.

pub mod dump;
pub mod parse;
pub mod print;
pub mod report;

use std::time::{Duration, Instant};

use fensy_core::{Budget, ResourceLimit};

pub use parse::{parse_program, ParseError};
pub use print::print_program;

/// Budget backed by `Instant`, with an optional deadline.
#[derive(Clone, Copy, Debug)]
pub struct Clock {
    start: Instant,
    deadline: Option<Instant>,
}

impl Clock {
    pub fn new(timeout: Option<Duration>) -> Self {
        let start = Instant::now();
        Clock {
            start,
            deadline: timeout.map(|d| start + d),
        }
    }
}

impl Budget for Clock {
    fn check(&self) -> Result<(), ResourceLimit> {
        match self.deadline {
            Some(d) if Instant::now() >= d => Err(ResourceLimit::Timeout),
            _ => Ok(()),
        }
    }

    fn now_micros(&self) -> u64 {
        self.start.elapsed().as_micros() as u64
    }
}
