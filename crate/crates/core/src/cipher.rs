//! Message encryption under a public-key register and decryption with the
//! private key.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::keys::{PrivateKey, PublicKeyRegister};
use crate::qubit::{inverse_rotate, measure_in_basis, measure_z, rotate, Angle, QubitState};

/// A non-empty bit string. Serialized as a string of `0` and `1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Message {
    bits: Vec<bool>,
}

impl Message {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::MessageLength { len: 0, key_len: 0 });
        }
        Ok(Message { bits })
    }

    pub fn zeros(len: usize) -> Result<Self> {
        Message::new(vec![false; len])
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Result<Self> {
        Message::new((0..len).map(|_| rng.random::<bool>()).collect())
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn has_one(&self) -> bool {
        self.bits.iter().any(|&b| b)
    }

    /// Number of positions where `self` and `other` agree (over the shorter).
    pub fn matching_bits(&self, other: &Message) -> usize {
        self.bits.iter().zip(&other.bits).filter(|(a, b)| a == b).count()
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Message {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Serialization(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Message::new(bits)
    }
}

impl Serialize for Message {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Message {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// How a message bit turns into a rotation on its key qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// Bit `m` rotates by `m·π/2`; decryption yields exactly `|m>`.
    #[default]
    QuarterTurn,
    /// Bit `m` rotates by `m·π`. Under amplitude rotations this is only a
    /// global sign, so the bit is unrecoverable and always decodes to 0.
    LiteralPi,
}

impl Convention {
    pub fn bit_angle(self, bit: bool) -> Angle {
        match (self, bit) {
            (_, false) => Angle::ZERO,
            (Convention::QuarterTurn, true) => Angle::QUARTER_TURN,
            (Convention::LiteralPi, true) => Angle::HALF_TURN,
        }
    }
}

/// Ciphertext register. The first `r` qubits carry message rotations; the
/// rest are the untouched public-key qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct CipherRegister {
    qubits: Vec<QubitState>,
}

impl CipherRegister {
    pub fn len(&self) -> usize {
        self.qubits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qubits.is_empty()
    }

    /// Replaces qubit `i`, as an adversary tampering with the channel would.
    pub fn with_qubit(mut self, i: usize, state: QubitState) -> Result<Self> {
        let len = self.qubits.len();
        let slot = self.qubits.get_mut(i).ok_or(Error::RegisterLength {
            got: i + 1,
            expected: len,
        })?;
        *slot = state;
        Ok(self)
    }

    /// Measures the first `count` qubits in the basis rotated by `basis`.
    pub fn measure_prefix<R: Rng + ?Sized>(self, count: usize, basis: Angle, rng: &mut R) -> Vec<bool> {
        self.qubits
            .into_iter()
            .take(count)
            .map(|q| measure_in_basis(q, basis, rng))
            .collect()
    }

    /// Depolarizing channel: each qubit is replaced, with probability `p`,
    /// by a uniformly chosen basis state (an unravelling of `I/2`).
    pub fn depolarized<R: Rng + ?Sized>(mut self, p: f64, rng: &mut R) -> Self {
        if p <= 0.0 {
            return self;
        }
        for q in &mut self.qubits {
            if rng.random::<f64>() < p {
                *q = if rng.random::<bool>() {
                    QubitState::ONE
                } else {
                    QubitState::ZERO
                };
            }
        }
        self
    }

    #[cfg(test)]
    pub(crate) fn qubits(&self) -> &[QubitState] {
        &self.qubits
    }
}

/// Rotates qubit `i < r` of a public-key copy by the angle for `m_i`.
pub fn encrypt(pk_copy: PublicKeyRegister, message: &Message, convention: Convention) -> Result<CipherRegister> {
    let key_len = pk_copy.len();
    if message.len() > key_len {
        return Err(Error::MessageLength {
            len: message.len(),
            key_len,
        });
    }
    let mut qubits = pk_copy.into_qubits();
    for (q, &bit) in qubits.iter_mut().zip(message.bits()) {
        if bit {
            *q = rotate(*q, convention.bit_angle(bit));
        }
    }
    Ok(CipherRegister { qubits })
}

/// Undoes the key rotations, returning the decrypted qubits.
pub fn decrypt(cipher: &CipherRegister, sk: &PrivateKey) -> Result<Vec<QubitState>> {
    if cipher.len() != sk.len() {
        return Err(Error::RegisterLength {
            got: cipher.len(),
            expected: sk.len(),
        });
    }
    Ok(cipher
        .qubits
        .iter()
        .enumerate()
        .map(|(i, &q)| inverse_rotate(q, sk.angle(i)))
        .collect())
}

/// Decrypts and measures the first `r` qubits in the Z basis.
pub fn decrypt_and_decode<R: Rng + ?Sized>(
    cipher: CipherRegister,
    sk: &PrivateKey,
    r: usize,
    rng: &mut R,
) -> Result<Message> {
    if r == 0 || r > sk.len() {
        return Err(Error::MessageLength {
            len: r,
            key_len: sk.len(),
        });
    }
    let plain = decrypt(&cipher, sk)?;
    Message::new(plain.into_iter().take(r).map(|q| measure_z(q, rng)).collect())
}
