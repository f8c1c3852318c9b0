//! One verification round end to end: key pair, public-key copies to every
//! verifier, simultaneous-arrival challenges, decryption at the prover,
//! classical answers, and per-verifier identity and timing verdicts.

use rayon::prelude::*;
use serde::Serialize;

use crate::adversary::{self, AttackReport, AttackSpec, Interceptor, Strategy, TrialSummary};
use crate::cipher::{decrypt_and_decode, encrypt, Convention, Message};
use crate::error::{Error, Result};
use crate::keys::{copy_public_key, keygen, PrivateKey, PublicKeyRegister};
use crate::rng::SimRng;
use crate::spacetime::{
    light_time, observed_round_trip, run_events, schedule_simultaneous_arrival, EventLog, Handlers, Outbox, Payload,
    Role, RoundTrip, Scenario, ScenarioGeometry, SignalEvent, Station, StationHandler, StationId,
};

// RNG streams forked from the round seed.
const STREAM_KEYGEN: u64 = 0;
const STREAM_PROVER: u64 = 1;
const STREAM_MESSAGES: u64 = 2;
const STREAM_CHANNEL: u64 = 3;
pub(crate) const STREAM_ADVERSARY: u64 = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    /// Register length `T`.
    pub key_len: usize,
    /// Precision exponent `t`.
    pub precision: u32,
    /// Message length `r_k` for each verifier, in scenario order.
    pub message_lengths: Vec<usize>,
    pub scenario: Scenario,
    pub seed: u64,
    pub convention: Convention,
    /// Depolarizing probability per cipher qubit on the verifier→prover leg.
    pub noise: f64,
    /// Bit errors a verifier tolerates before rejecting identity.
    pub identity_error_budget: usize,
}

impl ProtocolConfig {
    /// Same message length `r` for every verifier in `scenario`.
    pub fn new(scenario: Scenario, key_len: usize, precision: u32, message_len: usize, seed: u64) -> Self {
        let n = scenario.geometry.verifier_count();
        ProtocolConfig {
            key_len,
            precision,
            message_lengths: vec![message_len; n],
            scenario,
            seed,
            convention: Convention::default(),
            noise: 0.0,
            identity_error_budget: 0,
        }
    }

    pub fn verifier_count(&self) -> usize {
        self.scenario.geometry.verifier_count()
    }

    /// `Σ r_k`
    pub fn total_message_bits(&self) -> usize {
        self.message_lengths.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.verifier_count();
        if self.key_len == 0 {
            return Err(Error::KeyLength(0));
        }
        if self.precision == 0 || self.precision > crate::keys::MAX_PRECISION {
            return Err(Error::Precision {
                got: self.precision,
                max: crate::keys::MAX_PRECISION,
            });
        }
        if self.message_lengths.len() != n {
            return Err(Error::Config(format!(
                "{} message lengths for {n} verifiers",
                self.message_lengths.len()
            )));
        }
        if let Some(&len) = self.message_lengths.iter().find(|&&r| r == 0 || r > self.key_len) {
            return Err(Error::MessageLength {
                len,
                key_len: self.key_len,
            });
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return Err(Error::Config(format!(
                "noise probability {} outside [0, 1]",
                self.noise
            )));
        }
        Ok(())
    }
}

/// Parameters echoed into the transcript.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigSummary {
    pub key_len: usize,
    pub precision: u32,
    pub message_lengths: Vec<usize>,
    pub verifiers: usize,
    pub tolerance_s: f64,
    pub seed: u64,
    pub convention: Convention,
    pub noise: f64,
    pub identity_error_budget: usize,
}

impl ConfigSummary {
    fn of(config: &ProtocolConfig, seed: u64) -> Self {
        ConfigSummary {
            key_len: config.key_len,
            precision: config.precision,
            message_lengths: config.message_lengths.clone(),
            verifiers: config.verifier_count(),
            tolerance_s: config.scenario.tolerance,
            seed,
            convention: config.convention,
            noise: config.noise,
            identity_error_budget: config.identity_error_budget,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifierRecord {
    pub id: StationId,
    pub message: Message,
    pub emit_time: f64,
    pub response: Option<Message>,
    pub receipt_time: Option<f64>,
    pub round_trip: Option<f64>,
    pub expected_round_trip: f64,
    pub bit_errors: Option<usize>,
    pub identity_ok: bool,
    pub timing_ok: bool,
}

impl VerifierRecord {
    pub fn accepted(&self) -> bool {
        self.identity_ok && self.timing_ok
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolTranscript {
    pub config: ConfigSummary,
    pub verifiers: Vec<VerifierRecord>,
    /// True iff every verifier accepts both identity and timing.
    pub accepted: bool,
    pub log: EventLog,
}

#[derive(Serialize)]
struct TranscriptFile<'a> {
    schema: &'static str,
    config: &'a ConfigSummary,
    verifiers: &'a [VerifierRecord],
    accepted: bool,
    events: Vec<serde_json::Value>,
}

pub const TRANSCRIPT_SCHEMA: &str = "qpv.transcript/1";

impl ProtocolTranscript {
    pub fn to_json(&self) -> Result<String> {
        let file = TranscriptFile {
            schema: TRANSCRIPT_SCHEMA,
            config: &self.config,
            verifiers: &self.verifiers,
            accepted: self.accepted,
            events: self.log.events().iter().map(EventLog::event_json).collect(),
        };
        let mut text = serde_json::to_string_pretty(&file)?;
        text.push('\n');
        Ok(text)
    }

    pub(crate) fn summary(&self) -> TrialSummary {
        let mut bits_correct = 0;
        let mut bits_total = 0;
        for v in &self.verifiers {
            bits_total += v.message.len() as u64;
            if let Some(resp) = &v.response {
                bits_correct += v.message.matching_bits(resp) as u64;
            }
        }
        TrialSummary {
            accepted: self.accepted,
            identity_ok: self.verifiers.iter().map(|v| v.identity_ok).collect(),
            timing_ok: self.verifiers.iter().map(|v| v.timing_ok).collect(),
            bits_correct,
            bits_total,
        }
    }
}

/// The honest prover: decrypts each challenge with the private key and
/// answers its sender after the station's processing delay.
struct HonestProver<'k> {
    key: &'k PrivateKey,
    rng: SimRng,
    delay: f64,
}

impl StationHandler for HonestProver<'_> {
    fn on_signal(&mut self, event: &SignalEvent, outbox: &mut Outbox<'_>) -> Result<()> {
        if let Payload::Challenge { cipher, message_len } = &event.payload {
            let answer = decrypt_and_decode(cipher.clone(), self.key, *message_len, &mut self.rng)?;
            let emit = outbox.now() + self.delay;
            outbox.send(event.sender.clone(), Payload::Response(answer), emit);
        }
        Ok(())
    }
}

/// Who answers the verifiers in a round.
pub(crate) enum Responders<'a> {
    Honest,
    Adversary(&'a adversary::Deployment),
}

/// The key pair a round seeded with `seed` uses.
pub fn round_keygen(key_len: usize, precision: u32, seed: u64) -> Result<(PrivateKey, PublicKeyRegister)> {
    keygen(key_len, precision, &mut SimRng::seed_from(seed).fork(STREAM_KEYGEN))
}

pub(crate) fn trial_seed(seed: u64, trial: u64) -> u64 {
    if trial == 0 {
        seed
    } else {
        SimRng::seed_from(seed).fork(trial).seed()
    }
}

pub(crate) fn execute_round(
    config: &ProtocolConfig,
    seed: u64,
    responders: Responders<'_>,
) -> Result<ProtocolTranscript> {
    config.validate()?;
    let root = SimRng::seed_from(seed);
    let base = &config.scenario.geometry;

    // Step 1: key pair.
    let (sk, pk) = round_keygen(config.key_len, config.precision, seed)?;

    // Step 2: one copy per verifier, delivered over a public channel.
    let verifiers: Vec<Station> = base.verifiers().cloned().collect();
    let copies = copy_public_key(&pk, verifiers.len())?;

    // Who receives the challenges.
    let (geometry, targets): (ScenarioGeometry, Vec<StationId>) = match responders {
        Responders::Honest => {
            let (geometry, prover) = with_prover(base)?;
            (geometry, vec![prover; verifiers.len()])
        }
        Responders::Adversary(deployment) => deployment.install(base)?,
    };

    // Step 3: encrypt and schedule simultaneous arrival at the claimed position.
    let ids: Vec<StationId> = verifiers.iter().map(|v| v.id.clone()).collect();
    let target_arrival = verifiers
        .iter()
        .map(|v| light_time(v.position, geometry.claimed_position()))
        .fold(0.0, f64::max);
    let emits = schedule_simultaneous_arrival(&geometry, &ids, target_arrival)?;
    let message_rng = root.fork(STREAM_MESSAGES);
    let channel_rng = root.fork(STREAM_CHANNEL);
    let mut messages = Vec::with_capacity(verifiers.len());
    let mut initial = Vec::with_capacity(verifiers.len());
    for (k, (copy, &r)) in copies.into_iter().zip(&config.message_lengths).enumerate() {
        let message = Message::random(r, &mut message_rng.fork(k as u64))?;
        let cipher = encrypt(copy.into_received(), &message, config.convention)?
            .depolarized(config.noise, &mut channel_rng.fork(k as u64));
        initial.push(SignalEvent::new(
            &geometry,
            ids[k].clone(),
            targets[k].clone(),
            Payload::Challenge { cipher, message_len: r },
            emits[k],
        )?);
        messages.push(message);
    }

    // Step 4: responders decrypt (or guess) and answer.
    let mut handlers = Handlers::new();
    match responders {
        Responders::Honest => {
            let prover = geometry.station(&targets[0])?;
            handlers.insert(
                prover.id.clone(),
                Box::new(HonestProver {
                    key: &sk,
                    rng: root.fork(STREAM_PROVER),
                    delay: prover.processing_delay,
                }),
            );
        }
        Responders::Adversary(deployment) => {
            let adv_rng = root.fork(STREAM_ADVERSARY);
            for (j, id) in deployment.station_ids().into_iter().enumerate() {
                let handler = Interceptor::new(deployment.policy, adv_rng.fork(j as u64));
                handlers.insert(id, Box::new(handler));
            }
        }
    }
    let log = run_events(&geometry, initial, &mut handlers)?;
    drop(handlers);

    // Step 5: verdicts.
    let tolerance = config.scenario.tolerance;
    let mut records = Vec::with_capacity(verifiers.len());
    for (k, message) in messages.into_iter().enumerate() {
        let id = &ids[k];
        let expected_round_trip = geometry.expected_round_trip(id)?;
        let round_trip = observed_round_trip(&log, id)?;
        let response = log.events().iter().find_map(|e| match &e.payload {
            Payload::Response(m) if &e.receiver == id => Some(m.clone()),
            _ => None,
        });
        let bit_errors = response.as_ref().map(|resp| {
            if resp.len() == message.len() {
                message.len() - message.matching_bits(resp)
            } else {
                message.len().max(resp.len())
            }
        });
        let identity_ok = matches!(
            (&response, bit_errors),
            (Some(resp), Some(errors)) if resp.len() == message.len() && errors <= config.identity_error_budget
        );
        let elapsed = round_trip.elapsed();
        let timing_ok = elapsed.is_some_and(|rt| (rt - expected_round_trip).abs() <= tolerance);
        let receipt_time = match round_trip {
            RoundTrip::Observed { receipt_time, .. } => Some(receipt_time),
            RoundTrip::Timeout { .. } => None,
        };
        records.push(VerifierRecord {
            id: id.clone(),
            message,
            emit_time: emits[k],
            response,
            receipt_time,
            round_trip: elapsed,
            expected_round_trip,
            bit_errors,
            identity_ok,
            timing_ok,
        });
    }
    let accepted = records.iter().all(VerifierRecord::accepted);
    Ok(ProtocolTranscript {
        config: ConfigSummary::of(config, seed),
        verifiers: records,
        accepted,
        log,
    })
}

/// Geometry with a prover station; one is placed at the claimed position if
/// the scenario does not have one.
fn with_prover(geometry: &ScenarioGeometry) -> Result<(ScenarioGeometry, StationId)> {
    if let Some(p) = geometry.prover() {
        return Ok((geometry.clone(), p.id.clone()));
    }
    let id = StationId::new("P");
    let g = geometry.with_station(Station::new(id.as_str(), Role::Prover, geometry.claimed_position()))?;
    Ok((g, id))
}

/// Runs all five steps with the honest prover.
pub fn run_honest(config: &ProtocolConfig) -> Result<ProtocolTranscript> {
    execute_round(config, config.seed, Responders::Honest)
}

/// Runs `attack.trials` independent rounds with the adversary in control of
/// the channels. Returns the transcript of the first round together with the
/// aggregated report. Trial 0 uses `config.seed`, so the no-op attack
/// reproduces [`run_honest`] exactly.
pub fn run_with_adversary(config: &ProtocolConfig, attack: &AttackSpec) -> Result<(ProtocolTranscript, AttackReport)> {
    config.validate()?;
    attack.validate()?;
    let deployment = match &attack.strategy {
        Strategy::None => None,
        Strategy::KeyEstimation { .. } => {
            return Err(Error::AttackParams(
                "key-estimation works on public-key copies offline; use key_estimation_attack".into(),
            ))
        }
        other => Some(adversary::Deployment::for_strategy(other, &config.scenario.geometry)?),
    };
    let run = |trial: u64| {
        let seed = trial_seed(config.seed, trial);
        match &deployment {
            None => execute_round(config, seed, Responders::Honest),
            Some(d) => execute_round(config, seed, Responders::Adversary(d)),
        }
    };
    let first = run(0)?;
    let mut summaries = vec![first.summary()];
    let rest: Vec<TrialSummary> = (1..attack.trials)
        .into_par_iter()
        .map(|trial| run(trial).map(|t| t.summary()))
        .collect::<Result<_>>()?;
    summaries.extend(rest);
    let theoretical = adversary::theoretical_acceptance(config, &attack.strategy, deployment.as_ref())?;
    let ids: Vec<StationId> = first.verifiers.iter().map(|v| v.id.clone()).collect();
    let report = AttackReport::from_trials(attack.strategy.name(), &ids, &summaries, theoretical);
    Ok((first, report))
}
