//! Laboratory for asymmetric, rotation-cipher quantum position verification.
//!
//! A prover holds a classical private key `(t, S)` and publishes the product
//! state whose qubit `i` is the `y`-rotation `R(s_i π/2^t)|0_z>`. Verifiers
//! encrypt challenge bits into copies of that register, send them so they
//! reach the claimed position simultaneously, and accept if the decrypted
//! answers come back both correct and exactly on the light-speed schedule.
//!
//! Module map:
//! - [`qubit`], [`density`]: real-amplitude qubits and 2×2 density matrices.
//! - [`keys`], [`cipher`], [`keyfile`]: key pairs, encryption, JSON files.
//! - [`spacetime`]: station geometry and the deterministic event loop.
//! - [`protocol`]: end-to-end honest and adversarial rounds.
//! - [`adversary`]: attack strategies and their measured success.

pub mod adversary;
pub mod cipher;
pub mod density;
pub mod error;
pub mod keyfile;
pub mod keys;
pub mod protocol;
pub mod qubit;
pub mod rng;
pub mod spacetime;
pub mod stats;
pub mod tolerance;

pub use error::{Error, Result};
pub use rng::SimRng;
