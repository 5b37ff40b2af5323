//! Memory orders and the strength lattice over them.

use core::fmt;
use core::str::FromStr;

/// C11 memory order of an atomic access or fence.
///
/// The derived `Ord` is only a stable total order for map keys and
/// tie-breaking. Strength comparisons go through [`MemoryOrder::is_at_most`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MemoryOrder {
    Relaxed,
    Release,
    Acquire,
    AcqRel,
    SeqCst,
}

impl MemoryOrder {
    pub const ALL: [MemoryOrder; 5] = [
        MemoryOrder::Relaxed,
        MemoryOrder::Release,
        MemoryOrder::Acquire,
        MemoryOrder::AcqRel,
        MemoryOrder::SeqCst,
    ];

    /// Strictly weaker (`self ⊏ other`).
    pub fn is_weaker_than(self, other: MemoryOrder) -> bool {
        self != other && self.is_at_most(other)
    }

    /// `self ⊑ other`.
    pub fn is_at_most(self, other: MemoryOrder) -> bool {
        use MemoryOrder::*;
        match (self, other) {
            (a, b) if a == b => true,
            (Relaxed, _) => true,
            (Release | Acquire, AcqRel | SeqCst) => true,
            (AcqRel, SeqCst) => true,
            _ => false,
        }
    }

    /// `self ⊒ rel`.
    pub fn is_release(self) -> bool {
        MemoryOrder::Release.is_at_most(self)
    }

    /// `self ⊒ acq`.
    pub fn is_acquire(self) -> bool {
        MemoryOrder::Acquire.is_at_most(self)
    }

    pub fn is_seq_cst(self) -> bool {
        self == MemoryOrder::SeqCst
    }

    /// Cost of a fence with this order.
    pub fn weight(self) -> u32 {
        match self {
            MemoryOrder::Relaxed => 0,
            MemoryOrder::Release | MemoryOrder::Acquire => 1,
            MemoryOrder::AcqRel => 2,
            MemoryOrder::SeqCst => 3,
        }
    }

    /// Least upper bound.
    pub fn join(self, other: MemoryOrder) -> MemoryOrder {
        if self.is_at_most(other) {
            other
        } else if other.is_at_most(self) {
            self
        } else {
            // only rel and acq are incomparable
            MemoryOrder::AcqRel
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MemoryOrder::Relaxed => "rlx",
            MemoryOrder::Release => "rel",
            MemoryOrder::Acquire => "acq",
            MemoryOrder::AcqRel => "ar",
            MemoryOrder::SeqCst => "sc",
        }
    }
}

impl fmt::Display for MemoryOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unknown memory order")]
pub struct UnknownOrder;

impl FromStr for MemoryOrder {
    type Err = UnknownOrder;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MemoryOrder::ALL
            .into_iter()
            .find(|o| o.as_str() == s)
            .ok_or(UnknownOrder)
    }
}
