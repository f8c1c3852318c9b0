//! JSON schema for keys, public-key registers and messages.
//!
//! Amplitudes are written as decimal strings with 17 significant digits,
//! which round-trips every `f64` exactly, so load-then-save reproduces the
//! input byte for byte.
//!
//! ```json
//! { "schema": "qpv.private-key/1", "t": 3, "S": [5, 0, 7] }
//! { "schema": "qpv.public-key/1", "provenance": "owner_known",
//!   "amplitudes": [["-7.0710678118654746e-1", "7.0710678118654757e-1"], ...] }
//! { "schema": "qpv.message/1", "bits": "0110" }
//! ```

use serde::{Deserialize, Serialize};

use crate::cipher::Message;
use crate::error::{Error, Result};
use crate::keys::{PrivateKey, Provenance, PublicKeyRegister};
use crate::qubit::QubitState;

pub const PRIVATE_KEY_SCHEMA: &str = "qpv.private-key/1";
pub const PUBLIC_KEY_SCHEMA: &str = "qpv.public-key/1";
pub const MESSAGE_SCHEMA: &str = "qpv.message/1";

#[derive(Serialize, Deserialize)]
struct PrivateKeyFile {
    schema: String,
    t: u32,
    #[serde(rename = "S")]
    s: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct PublicKeyFile {
    schema: String,
    provenance: Provenance,
    amplitudes: Vec<[String; 2]>,
}

#[derive(Serialize, Deserialize)]
struct MessageFile {
    schema: String,
    bits: Message,
}

/// 17 significant digits, scientific notation.
pub fn format_amplitude(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_amplitude(s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|e| Error::Serialization(format!("amplitude {s:?}: {e}")))
}

fn check_schema(found: &str, expected: &str) -> Result<()> {
    if found != expected {
        return Err(Error::Serialization(format!("schema {found:?}, expected {expected:?}")));
    }
    Ok(())
}

fn to_pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut out = serde_json::to_string_pretty(value)?;
    out.push('\n');
    Ok(out)
}

pub fn private_key_to_json(sk: &PrivateKey) -> Result<String> {
    to_pretty(&PrivateKeyFile {
        schema: PRIVATE_KEY_SCHEMA.into(),
        t: sk.precision(),
        s: sk.indices().to_vec(),
    })
}

pub fn private_key_from_json(text: &str) -> Result<PrivateKey> {
    let file: PrivateKeyFile = serde_json::from_str(text)?;
    check_schema(&file.schema, PRIVATE_KEY_SCHEMA)?;
    PrivateKey::new(file.t, file.s)
}

/// Only owner-held registers can be exported: exporting means writing down
/// the classical description.
pub fn public_key_to_json(pk: &PublicKeyRegister) -> Result<String> {
    let amplitudes = pk
        .description()?
        .iter()
        .map(|q| {
            let (a0, a1) = q.amplitudes();
            [format_amplitude(a0), format_amplitude(a1)]
        })
        .collect();
    to_pretty(&PublicKeyFile {
        schema: PUBLIC_KEY_SCHEMA.into(),
        provenance: pk.provenance(),
        amplitudes,
    })
}

pub fn public_key_from_json(text: &str) -> Result<PublicKeyRegister> {
    let file: PublicKeyFile = serde_json::from_str(text)?;
    check_schema(&file.schema, PUBLIC_KEY_SCHEMA)?;
    let qubits = file
        .amplitudes
        .iter()
        .map(|[a0, a1]| QubitState::new(parse_amplitude(a0)?, parse_amplitude(a1)?))
        .collect::<Result<Vec<_>>>()?;
    let pk = PublicKeyRegister::from_description(qubits)?;
    Ok(match file.provenance {
        Provenance::OwnerKnown => pk,
        Provenance::Received => pk.into_received(),
    })
}

pub fn message_to_json(m: &Message) -> Result<String> {
    to_pretty(&MessageFile {
        schema: MESSAGE_SCHEMA.into(),
        bits: m.clone(),
    })
}

pub fn message_from_json(text: &str) -> Result<Message> {
    let file: MessageFile = serde_json::from_str(text)?;
    check_schema(&file.schema, MESSAGE_SCHEMA)?;
    Ok(file.bits)
}
