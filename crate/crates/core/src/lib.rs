//! Stochastic matching models on general compatibility graphs: matching
//! policies, property checkers, erasing words, finite-buffer dynamics with an
//! exact stationary oracle, and a coupling-from-the-past sampler.

pub mod cftp;
pub mod erasing;
pub mod error;
pub mod finite_buffer;
pub mod graph;
pub mod matchings;
pub mod policy;
pub mod properties;
pub mod stream;
pub mod words;

pub use cftp::{CftpResult, Dictionary};
pub use error::{Error, Result};
pub use finite_buffer::{FiniteBufferChain, StationaryDistribution, TransitionMatrix};
pub use graph::{ArrivalDistribution, ClassSet, CompatibilityGraph, OddCycleCert};
pub use matchings::{BiMatchWindow, SimulationRun, StartParity, WindowEdge};
pub use policy::{ArrivalEvent, MatchingTrace, Policy, PolicyKind, PreferenceList};
pub use stream::{ArrivalStream, PairSource};
pub use words::{ClassDetail, QueueDetail, Word};
