//! Cellular-automaton primitives: elementary rules, second-order reversible
//! stepping, and the keystream cipher used for all protocol encryption.

mod bitvec;
mod cipher;
mod reversible;
mod rule;

pub use bitvec::BitVector;
pub use cipher::{
    keystream, rca_transform, stream_encrypt, xor_extend, KeystreamParams, RcaCipher, TapPolicy,
    DEFAULT_RULE, DEFAULT_WARMUP, MAX_WARMUP, MIN_SEED_BITS, MIN_TRANSFORM_KEY_BITS,
};
pub use reversible::{second_order_reverse, second_order_step, SecondOrderState};
pub use rule::{apply_rule, evolve, RuleTable};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RcaError {
    #[error("state or input must not be empty")]
    EmptyState,
    #[error("length mismatch: {left} vs {right} cells")]
    LengthMismatch { left: usize, right: usize },
    #[error("seed has {bits} cells, need at least {min}")]
    SeedTooShort { bits: usize, min: usize },
    #[error("key has {bits} bits, need at least {min}")]
    KeyTooShort { bits: usize, min: usize },
    #[error("stream key must be 32 or 64 bits, got {bits}")]
    BadKeyLength { bits: usize },
    #[error("warm-up of {steps} steps exceeds maximum {max}")]
    WarmupTooLong { steps: usize, max: usize },
    #[error("tap index {tap} outside {ring}-cell ring")]
    TapOutOfRange { tap: usize, ring: usize },
}
