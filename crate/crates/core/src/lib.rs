//! Fence synthesis for C11 litmus programs.
//!
//! Given a program whose assertion fails under the C11 memory model, find
//! fences (with memory orders) whose insertion makes every consistent trace
//! satisfy the assertion.

#![no_std]

extern crate alloc;

pub mod budget;
pub mod consistency;
pub mod cycles;
pub mod driver;
pub mod enumerate;
pub mod error;
pub mod fensying;
pub mod optimizer;
pub mod order;
pub mod program;
pub mod relation;
pub mod sync;
pub mod trace;

pub use budget::{Budget, Limits, Unlimited};
pub use consistency::Condition;
pub use driver::{synthesize, Mode, Status, SynthesisResult};
pub use error::{ProgramError, ResourceLimit, SynthesisError};
pub use order::MemoryOrder;
pub use program::{FenceSlot, Program, SourceLocation};
pub use relation::BinaryRelation;
pub use trace::{Event, EventId, Trace};
