//! Numerical toolkit for multiparty (k-sender, m-receiver) quantum channels.
//!
//! The crate is organised bottom-up:
//!
//! - [`tensor`]: dense complex matrices over multi-leg systems, partial traces,
//!   Hermitian eigendecomposition, entropies, Uhlmann fidelity and Haar sampling.
//! - [`channels`]: Kraus-operator channels with sender/receiver connection
//!   structure, builders, combinators and the channel file format.
//! - [`fidelities`]: entanglement, group, channel, pure-state, minimum and
//!   average fidelities, each available through a definitional route and a
//!   Kraus-trace route.
//! - [`capacity`]: coherent information, data-processing and continuity checks,
//!   and a sampler for achievable rate tuples of the multiletter region.
//! - [`protocols`]: Clifford twirling, teleportation over a noisy resource,
//!   greedy subspace extraction and the phase-averaging bound.
//!
//! All logarithms are base 2; rates and entropies are in bits.

pub mod capacity;
pub mod channels;
mod error;
pub mod fidelities;
pub mod fixtures;
pub mod optim;
pub mod protocols;
pub mod rng;
pub mod tensor;

pub use error::{Error, Result};

/// Largest Hilbert-space dimension any operation will construct.
pub const MAX_DIM: usize = 4096;

/// Largest number of Kraus operators a combinator will produce.
pub const MAX_KRAUS: usize = 4096;

/// Largest blocklength accepted by the rate-region sampler.
pub const MAX_BLOCKLENGTH: usize = 3;

/// Largest connection set for which subset sums are enumerated.
pub const MAX_CONNECTIONS: usize = 16;
