//! Deterministic single-threaded event loop.
//!
//! Events are delivered in non-decreasing arrival time. Ties go to the
//! lexicographically smaller `(receiver, sender)` pair, then to the earlier
//! enqueued event, so a scenario always produces the same log.

use std::cmp::Ordering;
use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use serde::Serialize;

use super::{light_time, ScenarioGeometry, StationId};
use crate::cipher::{CipherRegister, Message};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    /// Encrypted challenge; `message_len` is the public length `r_k`.
    Challenge { cipher: CipherRegister, message_len: usize },
    /// Classical answer bits.
    Response(Message),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalEvent {
    pub seq: u64,
    pub sender: StationId,
    pub receiver: StationId,
    pub payload: Payload,
    pub emit_time: f64,
    pub arrival_time: f64,
}

impl SignalEvent {
    /// Signal leaving `sender` at `emit_time`, arriving after the light
    /// travel time to `receiver`. `seq` is assigned by [`run_events`].
    pub fn new(
        geometry: &ScenarioGeometry,
        sender: StationId,
        receiver: StationId,
        payload: Payload,
        emit_time: f64,
    ) -> Result<Self> {
        let leg = light_time(
            geometry.station(&sender)?.position,
            geometry.station(&receiver)?.position,
        );
        Ok(SignalEvent {
            seq: 0,
            sender,
            receiver,
            payload,
            emit_time,
            arrival_time: emit_time + leg,
        })
    }
}

struct Queued(SignalEvent);

impl Queued {
    fn key(&self) -> (f64, &StationId, &StationId, u64) {
        (self.0.arrival_time, &self.0.receiver, &self.0.sender, self.0.seq)
    }
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        let (ta, ra, sa, qa) = self.key();
        let (tb, rb, sb, qb) = other.key();
        ta.total_cmp(&tb)
            .then_with(|| ra.cmp(rb))
            .then_with(|| sa.cmp(sb))
            .then_with(|| qa.cmp(&qb))
    }
}

/// What a handler may do while reacting to a delivered signal.
pub struct Outbox<'a> {
    geometry: &'a ScenarioGeometry,
    station: StationId,
    now: f64,
    sent: Vec<SignalEvent>,
    error: Option<Error>,
}

impl Outbox<'_> {
    pub fn now(&self) -> f64 {
        self.now
    }

    /// The station whose handler is running.
    pub fn station(&self) -> &StationId {
        &self.station
    }

    pub fn geometry(&self) -> &ScenarioGeometry {
        self.geometry
    }

    /// Emits a signal from the handling station at `emit_time`. Emitting
    /// before the current time aborts the run with [`Error::Causality`].
    pub fn send(&mut self, to: StationId, payload: Payload, emit_time: f64) {
        if self.error.is_some() {
            return;
        }
        if emit_time.is_nan() || emit_time < self.now {
            self.error = Some(Error::Causality {
                emit: emit_time,
                now: self.now,
            });
            return;
        }
        match SignalEvent::new(self.geometry, self.station.clone(), to, payload, emit_time) {
            Ok(event) => self.sent.push(event),
            Err(e) => self.error = Some(e),
        }
    }
}

pub trait StationHandler {
    fn on_signal(&mut self, event: &SignalEvent, outbox: &mut Outbox<'_>) -> Result<()>;
}

/// Handlers keyed by the station they act for. Signals to stations without
/// a handler are delivered and logged but trigger nothing.
pub type Handlers<'a> = BTreeMap<StationId, Box<dyn StationHandler + 'a>>;

/// Every delivered signal, in delivery order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventLog {
    events: Vec<SignalEvent>,
}

#[derive(Serialize)]
struct EventLine<'a> {
    seq: u64,
    sender: &'a str,
    receiver: &'a str,
    kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    qubits: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    message_len: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bits: Option<String>,
    emit_time: f64,
    arrival_time: f64,
}

/// Rounds to 15 significant decimal digits.
pub(crate) fn round15(x: f64) -> f64 {
    format!("{x:.14e}").parse().unwrap_or(x)
}

impl EventLog {
    pub fn events(&self) -> &[SignalEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// JSON value for one event; times carry 15 significant digits.
    pub(crate) fn event_json(event: &SignalEvent) -> serde_json::Value {
        let (kind, qubits, message_len, bits) = match &event.payload {
            Payload::Challenge { cipher, message_len } => ("challenge", Some(cipher.len()), Some(*message_len), None),
            Payload::Response(m) => ("response", None, None, Some(m.to_string())),
        };
        serde_json::to_value(EventLine {
            seq: event.seq,
            sender: event.sender.as_str(),
            receiver: event.receiver.as_str(),
            kind,
            qubits,
            message_len,
            bits,
            emit_time: round15(event.emit_time),
            arrival_time: round15(event.arrival_time),
        })
        .expect("event line serializes")
    }

    /// JSON lines export, one event per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&Self::event_json(e).to_string());
            out.push('\n');
        }
        out
    }
}

/// Runs the event loop to quiescence.
pub fn run_events(
    geometry: &ScenarioGeometry,
    initial: Vec<SignalEvent>,
    handlers: &mut Handlers<'_>,
) -> Result<EventLog> {
    let mut queue = BinaryHeap::new();
    let mut next_seq = 0u64;
    for mut event in initial {
        if event.emit_time.is_nan() || event.emit_time < 0.0 {
            return Err(Error::NegativeTime(event.emit_time));
        }
        if event.arrival_time.is_nan() || event.arrival_time < event.emit_time {
            return Err(Error::Causality {
                emit: event.emit_time,
                now: event.arrival_time,
            });
        }
        event.seq = next_seq;
        next_seq += 1;
        queue.push(Reverse(Queued(event)));
    }

    let mut log = EventLog::default();
    while let Some(Reverse(Queued(event))) = queue.pop() {
        let now = event.arrival_time;
        if let Some(handler) = handlers.get_mut(&event.receiver) {
            let mut outbox = Outbox {
                geometry,
                station: event.receiver.clone(),
                now,
                sent: Vec::new(),
                error: None,
            };
            handler.on_signal(&event, &mut outbox)?;
            if let Some(e) = outbox.error {
                return Err(e);
            }
            for mut out in outbox.sent {
                out.seq = next_seq;
                next_seq += 1;
                queue.push(Reverse(Queued(out)));
            }
        }
        log.events.push(event);
    }
    Ok(log)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RoundTrip {
    Observed { emit_time: f64, receipt_time: f64 },
    Timeout { emit_time: f64 },
}

impl RoundTrip {
    pub fn elapsed(&self) -> Option<f64> {
        match *self {
            RoundTrip::Observed {
                emit_time,
                receipt_time,
            } => Some(receipt_time - emit_time),
            RoundTrip::Timeout { .. } => None,
        }
    }
}

/// Time from `verifier`'s first challenge to the first response it receives.
pub fn observed_round_trip(log: &EventLog, verifier: &StationId) -> Result<RoundTrip> {
    let emit_time = log
        .events
        .iter()
        .find(|e| &e.sender == verifier && matches!(e.payload, Payload::Challenge { .. }))
        .map(|e| e.emit_time)
        .ok_or_else(|| Error::NoChallenge(verifier.to_string()))?;
    let receipt = log
        .events
        .iter()
        .find(|e| &e.receiver == verifier && matches!(e.payload, Payload::Response(_)));
    Ok(match receipt {
        Some(e) => RoundTrip::Observed {
            emit_time,
            receipt_time: e.arrival_time,
        },
        None => RoundTrip::Timeout { emit_time },
    })
}
