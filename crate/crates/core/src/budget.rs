//! Time and size limits shared by all phases.

use crate::error::ResourceLimit;

/// Source of wall-clock information. The core crate has no clock; callers
/// with `std` plug one in.
pub trait Budget {
    /// Fails once the time budget is exhausted.
    fn check(&self) -> Result<(), ResourceLimit> {
        Ok(())
    }

    /// Monotonic microseconds, used only for phase timings.
    fn now_micros(&self) -> u64 {
        0
    }
}

/// No deadline and no clock.
#[derive(Clone, Copy, Debug, Default)]
pub struct Unlimited;

impl Budget for Unlimited {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub unroll_bound: u32,
    pub max_traces: usize,
    pub max_iterations: usize,
    /// Cycles kept per trace and search mode.
    pub max_cycles: usize,
    /// Search nodes spent on memory-order coalescing before falling back to a
    /// greedy choice.
    pub coalescing_budget: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            unroll_bound: 16,
            max_traces: 200_000,
            max_iterations: 64,
            max_cycles: 20_000,
            coalescing_budget: 1_000_000,
        }
    }
}
