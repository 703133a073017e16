use thiserror::Error;

use crate::policy::PolicyKind;
use crate::words::Word;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("class {0} has a self-loop")]
    SelfLoop(usize),
    #[error("class {class} is outside 1..={n}")]
    OutOfRange { class: usize, n: usize },
    #[error("compatibility graph is disconnected")]
    Disconnected,
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid arrival distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("invalid preference list for class {class}: {reason}")]
    InvalidPreference { class: u8, reason: String },
    #[error("state space too large: {0}")]
    TooLarge(String),
    #[error("state {0} is not an admissible queue detail")]
    InadmissibleState(Word),
    #[error("policy {0} is not class-admissible")]
    PolicyNotClassAdmissible(PolicyKind),
    #[error("search domain too large: {0}")]
    DomainTooLarge(String),
    #[error("word {0} has odd length")]
    OddLength(Word),
    #[error("graph is bipartite")]
    BipartiteGraph,
    #[error("verification failed: {0}")]
    VerificationFailed(String),
    #[error("no erasing word of length <= {0}")]
    NoneFound(usize),
    #[error("graph is not an odd cycle")]
    NotAnOddCycle,
    #[error("graph is not complete p-partite with p >= 3")]
    NotCompleteMultipartite,
    #[error("no base words supplied")]
    NoBaseWords,
    #[error("buffer overflow: state {state} exceeds capacity {capacity}")]
    Overflow { state: Word, capacity: usize },
    #[error("transition matrix is not irreducible")]
    NotIrreducible,
    #[error("stationary solve did not converge (residual {0:e})")]
    NoConvergence(f64),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("dictionary words do not share one length")]
    MixedLengths,
    #[error("dictionary is empty")]
    EmptyDictionary,
    #[error("word {0} is not certified strong erasing")]
    UncertifiedWord(Word),
    #[error("backward scan exceeded the depth limit of {0} pairs")]
    DepthLimit(u64),
    #[error(
        "coalescence failed on trial {trial}: initial state {initial} ends at {end} after the dictionary word {word}"
    )]
    CoalescenceFailed {
        trial: usize,
        initial: Word,
        end: Word,
        word: Word,
    },
    #[error("window matching did not stabilize over depths {depths:?}")]
    NotStabilized { depths: Vec<u64> },
    #[error("block is not perfectly matched")]
    NotPerfect,
    #[error("block is not an FCFM matching")]
    NotFcfm,
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
