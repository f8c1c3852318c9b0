//! Private keys `(t, S)`, public-key registers and the custody model.
//!
//! The public key is the product state whose qubit `i` is `R(s_i θ_t)|0_z>`.
//! Only the key owner knows which state that is, so only an owner-held
//! register can be copied or have its amplitudes read. Registers that cross
//! a channel become [`Provenance::Received`] and lose both capabilities.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubit::{rotate, state_distance, Angle, QubitState};

/// Largest supported precision exponent; key indices live in `u64`.
pub const MAX_PRECISION: u32 = 62;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrivateKey {
    precision: u32,
    indices: Vec<u64>,
}

impl PrivateKey {
    pub fn new(precision: u32, indices: Vec<u64>) -> Result<Self> {
        check_precision(precision)?;
        if indices.is_empty() {
            return Err(Error::KeyLength(0));
        }
        let bound = 1u64 << precision;
        if let Some(&index) = indices.iter().find(|&&s| s >= bound) {
            return Err(Error::KeyIndex { index, precision });
        }
        Ok(PrivateKey { precision, indices })
    }

    /// Precision exponent `t`.
    pub fn precision(&self) -> u32 {
        self.precision
    }

    /// Key string `S`.
    pub fn indices(&self) -> &[u64] {
        &self.indices
    }

    /// Register length `T`.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Rotation `s_i θ_t` hiding qubit `i`.
    pub fn angle(&self, i: usize) -> Angle {
        Angle::key_angle(self.indices[i], self.precision)
    }

    /// Prepares the public-key register from `|0_z>^T`.
    pub fn public_key(&self) -> PublicKeyRegister {
        let qubits = (0..self.len())
            .map(|i| rotate(QubitState::ZERO, self.angle(i)))
            .collect();
        PublicKeyRegister {
            qubits,
            provenance: Provenance::OwnerKnown,
        }
    }
}

fn check_precision(precision: u32) -> Result<()> {
    if precision == 0 || precision > MAX_PRECISION {
        return Err(Error::Precision {
            got: precision,
            max: MAX_PRECISION,
        });
    }
    Ok(())
}

/// Who holds a register and therefore what they may do with it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Prepared by the key owner, who knows its classical description.
    OwnerKnown,
    /// Arrived over a channel: verifier copies and anything intercepted.
    Received,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PublicKeyRegister {
    qubits: Vec<QubitState>,
    provenance: Provenance,
}

impl PublicKeyRegister {
    /// Re-creates an owner-held register from its known description.
    pub fn from_description(qubits: Vec<QubitState>) -> Result<Self> {
        if qubits.is_empty() {
            return Err(Error::KeyLength(0));
        }
        Ok(PublicKeyRegister {
            qubits,
            provenance: Provenance::OwnerKnown,
        })
    }

    pub fn len(&self) -> usize {
        self.qubits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qubits.is_empty()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Amplitudes of every qubit. Owner only.
    pub fn description(&self) -> Result<&[QubitState]> {
        match self.provenance {
            Provenance::OwnerKnown => Ok(&self.qubits),
            Provenance::Received => Err(Error::NotOwner),
        }
    }

    /// Hands the register to a channel.
    pub fn into_received(mut self) -> Self {
        self.provenance = Provenance::Received;
        self
    }

    /// Physical access for operations that act on the state without learning
    /// it (rotations, measurements).
    pub(crate) fn into_qubits(self) -> Vec<QubitState> {
        self.qubits
    }

    /// Measures every qubit in the basis rotated by `basis`, destroying the
    /// register. Anyone holding the register may do this.
    pub fn measure_all<R: Rng + ?Sized>(self, basis: Angle, rng: &mut R) -> Vec<bool> {
        self.qubits
            .into_iter()
            .map(|q| crate::qubit::measure_in_basis(q, basis, rng))
            .collect()
    }
}

/// Samples `S` uniformly from `[0, 2^t)^T` and prepares the matching register.
pub fn keygen<R: Rng + ?Sized>(key_len: usize, precision: u32, rng: &mut R) -> Result<(PrivateKey, PublicKeyRegister)> {
    if key_len == 0 {
        return Err(Error::KeyLength(0));
    }
    check_precision(precision)?;
    let bound = 1u64 << precision;
    let indices = (0..key_len).map(|_| rng.random_range(0..bound)).collect();
    let sk = PrivateKey::new(precision, indices)?;
    let pk = sk.public_key();
    Ok((sk, pk))
}

/// `n` value copies of an owner-held register.
pub fn copy_public_key(pk: &PublicKeyRegister, n: usize) -> Result<Vec<PublicKeyRegister>> {
    if pk.provenance != Provenance::OwnerKnown {
        return Err(Error::NotOwner);
    }
    if n == 0 {
        return Err(Error::CopyCount);
    }
    Ok(vec![pk.clone(); n])
}

/// Distance `sqrt(1 - <ψ_s|ψ_{s+1}>^2)` between neighbouring key states at
/// precision `t`, evaluated from the states themselves. Equals `sin(π/2^t)`.
pub fn neighbor_distance(precision: u32) -> f64 {
    neighbor_distance_at(0, precision)
}

/// Same as [`neighbor_distance`] but starting from key index `s`.
pub fn neighbor_distance_at(index: u64, precision: u32) -> f64 {
    let a = rotate(QubitState::ZERO, Angle::key_angle(index, precision));
    let b = rotate(QubitState::ZERO, Angle::key_angle(index + 1, precision));
    state_distance(a, b)
}

/// Index `n = s + m (mod 2^t)` of the single rotation equivalent (up to a
/// global sign) to `R(m θ_t) R(s θ_t)`.
pub fn compose_indices(s: u64, m: u64, precision: u32) -> u64 {
    let mask = (1u64 << precision) - 1;
    s.wrapping_add(m) & mask
}
