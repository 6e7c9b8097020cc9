//! Solvers for finite perfect-information zero-sum stochastic games with
//! mean-payoff objective.
//!
//! The central object is the Shapley operator `T_r` of a game: structural
//! analysis decides whether the additive eigenproblem `T_r(u) = lambda 1 + u`
//! is solvable for every payment vector `r`, policy iteration computes an
//! eigenpair, a certificate establishes uniqueness of the eigenvector up to
//! an additive constant, and slice exploration maps how the eigenvector
//! varies over affine families of payments. Deterministic games additionally
//! get exact max-plus spectral machinery.

pub mod error;
pub mod fan;
pub mod fixture;
pub mod game;
pub(crate) mod graph;
pub mod hoffman_karp;
pub mod markov;
pub mod maxplus;
pub mod structural;

pub use error::{FanError, GameError, MarkovError, MaxPlusError, SolveError, StructuralError};
pub use game::{
    CounterPolicy, Entry, GameSpec, PaymentVector, Policy, RawEntry, RawGame, ReducedOperator,
    StateVector, ValidateOptions,
};
pub use hoffman_karp::{
    certify_uniqueness, hoffman_karp, CertifyOptions, IterationStep, IterationTrace, SolveOptions,
    SolveOutcome, UniquenessCertificate, UniquenessVerdict,
};
pub use markov::{
    chain_structure, critical_graph, howard_solve, ChainStructure, CriticalGraphReport, EigenPair,
    HowardOutcome, InvariantMeasure,
};
pub use maxplus::{MaxPlusMatrix, Trop, Weight};
pub use structural::{structural_verdict, GaloisReport, StructuralVerdict};
