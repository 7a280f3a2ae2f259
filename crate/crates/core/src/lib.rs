//! Weighted zero-sum windows over `Z_n`.
//!
//! For a weight set `A ⊆ Z_n \ {0}`, a sequence `(x_1, ..., x_k)` is an
//! A-weighted zero-sum sequence when weights `a_i ∈ A` exist with
//! `a_1 x_1 + ... + a_k x_k ≡ 0 (mod n)`. The constant `C_A(n)` is the least
//! `k` such that every length-`k` sequence over `Z_n` contains a contiguous
//! run (a "window") that is an A-weighted zero-sum sequence. A sequence of
//! length `C_A(n) - 1` with no such window is called A-extremal.
//!
//! This crate provides:
//!
//! - [`ring`]: exact arithmetic in `Z_n` — unit groups, power classes
//!   `U(n)^j`, natural maps between moduli, unit lifting, and the coset test
//!   that decides zero-sum-freeness of pairs over a prime field.
//! - [`engine`]: the decision and search core — reachable-sum bitset folding,
//!   zero-window detection, exhaustive computation of `C_A(n)` by pruned
//!   depth-first search, and enumeration of all A-extremal sequences.
//! - [`known`]: the closed-form constants for the named weight families
//!   (`{1}`, all nonzero residues, `U(n)`, `U(n)^2`, `U(n)^3`).
//! - [`builder`]: recursive constructions of extremal sequences, with
//!   reproducible textual recipes.
//! - [`decompose`]: the inverse direction — structural certificates for
//!   extremal sequences, closed-form shape matching, and A-equivalence
//!   canonicalization.
//! - [`verify`]: batch drivers that re-check every supported statement about
//!   these objects, with independent brute-force oracles.
//! - [`cache`] and [`job`]: the result cache and the JSON job layer used by
//!   the `wzs` command-line tool.

pub mod builder;
pub mod cache;
pub mod decompose;
pub mod engine;
pub mod job;
pub mod known;
pub mod ring;
pub mod verify;

pub use builder::{BuildRecipe, RecipeNode};
pub use decompose::{Certificate, EquivClass, ShapeMatch};
pub use engine::{
    EnumerateMode, Enumeration, ReachSet, SearchBudget, SearchOutcome, SearchReport, Seq,
};
pub use known::Family;
pub use ring::{CubeSplit, Residue, WeightKind, WeightSet, ZnContext};

/// Errors shared by every module in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("modulus must be at least 2, got {0}")]
    BadModulus(u64),
    #[error("moduli differ: {left} vs {right}")]
    ModulusMismatch { left: u64, right: u64 },
    #[error("{m} does not divide {n}")]
    NotADivisor { m: u64, n: u64 },
    #[error("{value} is not a unit mod {modulus}")]
    NotAUnit { value: u64, modulus: u64 },
    #[error("{value} is not a square of a unit mod {modulus}")]
    NotAUnitSquare { value: u64, modulus: u64 },
    #[error("modulus {0} is not prime")]
    NonPrimeModulus(u64),
    #[error("modulus {0} is not a prime power")]
    NonPrimePowerModulus(u64),
    #[error("modulus {0} is not squarefree")]
    NotSquarefree(u64),
    #[error("term {value} is out of range for modulus {modulus}")]
    TermOutOfRange { value: u64, modulus: u64 },
    #[error("weight set must be nonempty")]
    EmptyWeights,
    #[error("weight {value} is out of range [1, {modulus}) ")]
    BadWeight { value: u64, modulus: u64 },
    #[error("weight exponent must be at least 1")]
    BadWeightExponent,
    #[error("the weight set is not a subgroup of the units mod {0}")]
    NotAUnitSubgroup(u64),
    #[error("sequence must be nonempty")]
    EmptySequence,
    #[error("{0}")]
    Domain(String),
    #[error("step {step}: choice {value} repeats the prefix sum first seen after term {clash}")]
    PrefixSumClash { step: usize, value: u64, clash: usize },
    #[error("child sequence {index} is not extremal over Z_{modulus}")]
    ChildNotExtremal { index: usize, modulus: u64 },
    #[error("connector condition failed: {0}")]
    BadConnector(String),
    #[error("sequence is not extremal: {0}")]
    NotExtremal(String),
    #[error("characterization violated: {0}")]
    CharacterizationViolated(String),
    #[error("certificate does not validate: {0}")]
    CertificateInvalid(String),
    #[error("recipe parse error: {0}")]
    RecipeParse(String),
    #[error("cannot parse weights '{0}'")]
    WeightParse(String),
    #[error("orbit size exceeds u128")]
    OrbitTooLarge,
    #[error("internal consistency failure: {0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for rejections of inputs outside a construction's or
    /// characterization's domain (as opposed to malformed input or
    /// internal failures). The CLI maps these to exit code 1.
    pub fn is_domain_rejection(&self) -> bool {
        !matches!(
            self,
            Error::Internal(_) | Error::Io(_) | Error::Json(_) | Error::CharacterizationViolated(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
