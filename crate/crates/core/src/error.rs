use alloc::string::String;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ProgramError {
    #[error("object `{0}` declared twice")]
    DuplicateObject(String),
    #[error("thread `{0}` declared twice")]
    DuplicateThread(String),
    #[error("program has no threads")]
    NoThreads,
    #[error("undeclared object `{0}`")]
    UndeclaredObject(String),
    #[error("undeclared local `{0}`")]
    UndeclaredLocal(String),
    #[error("local `{0}` has the same name as an object")]
    LocalShadowsObject(String),
    #[error("local `{0}` of another thread used in a branch condition")]
    ForeignLocal(String),
    #[error("local `{0}` is defined in several threads; qualify it as <thread>.{0}")]
    AmbiguousLocal(String),
    #[error("unknown thread `{0}`")]
    UnknownThread(String),
    #[error("fence(rlx) has no effect and is not accepted")]
    RelaxedFence,
    #[error("repeat count {count} exceeds the unroll bound {bound}")]
    UnrollBound { count: u32, bound: u32 },
}

/// A configured resource limit was hit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ResourceLimit {
    #[error("timeout")]
    Timeout,
    #[error("more than {0} consistent traces")]
    Traces(usize),
    #[error("more than {0} cycles in one trace")]
    Cycles(usize),
    #[error("no fix after {0} iterations")]
    Iterations(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SynthesisError {
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error("internal error: fixed program still has {0} buggy trace(s)")]
    Unverified(usize),
}
