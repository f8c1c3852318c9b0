//! Attack strategies against the protocol and their measured success.
//!
//! The adversary controls every channel and has zero processing delay, but
//! never holds `(t, S)`. Protocol-level strategies replace the prover with
//! one or more interceptor stations; offline strategies work directly on
//! public-key copies or single cipher qubits.

mod estimation;
mod geometry;
mod secrecy;

pub use estimation::{
    bayes_success_probability, best_grid_basis, exact_mutual_information, grid_angles, information_scan,
    key_estimation_attack, map_decoder, outcome_one_probability, InformationPoint,
};
pub use geometry::{assign_responders, timing_errors, timing_feasible_colluders, timing_feasible_positions};
pub use secrecy::{cipher_mixtures, helstrom_guess_bound, intercept_guess_success, MAX_MIXTURE_PRECISION};

use rand::Rng;
use serde::Serialize;

use crate::cipher::{Convention, Message};
use crate::error::{Error, Result};
use crate::protocol::{run_with_adversary, ProtocolConfig};
use crate::qubit::Angle;
use crate::rng::SimRng;
use crate::spacetime::{
    light_time, Outbox, Payload, Position, Role, ScenarioGeometry, SignalEvent, Station, StationHandler, StationId,
};
use crate::stats::BinomialEstimate;

/// Registry of strategy names accepted by [`AttackSpec::from_registry`].
pub const STRATEGIES: &[&str] = &["none", "guess", "measure", "spoof", "collude", "key-estimation"];

/// How an interceptor answers a challenge it cannot decrypt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RespondPolicy {
    /// Uniformly random bits.
    Guess,
    /// Measure each message qubit in the basis rotated by `basis` and
    /// report the outcomes.
    Measure { basis: Angle },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    /// Honest run, no adversary.
    None,
    /// Impersonator at the claimed position answering with random bits.
    Guess,
    /// Impersonator at the claimed position measuring the ciphertext.
    Measure { basis: Angle },
    /// Single impersonator at an arbitrary position.
    Spoof { position: Position, policy: RespondPolicy },
    /// Several interceptors; each verifier is answered by the one whose
    /// round trip best matches the expected one.
    Collude {
        positions: Vec<Position>,
        policy: RespondPolicy,
    },
    /// Estimate `S` from `copies` public-key copies by measuring every copy
    /// in the best basis of a `grid`-point angle grid.
    KeyEstimation { copies: usize, grid: usize },
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::None => "none",
            Strategy::Guess => "guess",
            Strategy::Measure { .. } => "measure",
            Strategy::Spoof { .. } => "spoof",
            Strategy::Collude { .. } => "collude",
            Strategy::KeyEstimation { .. } => "key-estimation",
        }
    }
}

/// Loose parameters as they arrive from a command line.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AttackParams {
    pub positions: Vec<Position>,
    /// Measurement basis angle in radians; for `spoof`/`collude` selects
    /// the measuring policy instead of guessing.
    pub basis: Option<f64>,
    pub copies: Option<usize>,
    pub grid: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackSpec {
    pub strategy: Strategy,
    pub trials: u64,
}

impl AttackSpec {
    pub fn new(strategy: Strategy, trials: u64) -> Self {
        AttackSpec { strategy, trials }
    }

    pub fn from_registry(name: &str, params: &AttackParams, trials: u64) -> Result<Self> {
        let policy = match params.basis {
            Some(b) => RespondPolicy::Measure {
                basis: Angle::from_radians(b),
            },
            None => RespondPolicy::Guess,
        };
        let single_position = || match params.positions.as_slice() {
            [p] => Ok(*p),
            [] => Err(Error::AttackParams("spoof needs one adversary position".into())),
            _ => Err(Error::AttackParams(
                "spoof takes exactly one position; use collude".into(),
            )),
        };
        let strategy = match name {
            "none" => Strategy::None,
            "guess" => Strategy::Guess,
            "measure" => Strategy::Measure {
                basis: Angle::from_radians(params.basis.unwrap_or(0.0)),
            },
            "spoof" => Strategy::Spoof {
                position: single_position()?,
                policy,
            },
            "collude" => Strategy::Collude {
                positions: params.positions.clone(),
                policy,
            },
            "key-estimation" => Strategy::KeyEstimation {
                copies: params.copies.unwrap_or(1),
                grid: params.grid.unwrap_or(64),
            },
            other => {
                return Err(Error::UnknownStrategy {
                    name: other.into(),
                    known: STRATEGIES.join(", "),
                })
            }
        };
        let spec = AttackSpec::new(strategy, trials);
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::AttackParams("trials must be at least 1".into()));
        }
        let finite = |ps: &[Position]| ps.iter().all(Position::is_finite);
        match &self.strategy {
            Strategy::Spoof { position, .. } if !position.is_finite() => {
                Err(Error::AttackParams("adversary position must be finite".into()))
            }
            Strategy::Collude { positions, .. } if positions.len() < 2 => {
                Err(Error::AttackParams("collusion needs at least two positions".into()))
            }
            Strategy::Collude { positions, .. } if !finite(positions) => {
                Err(Error::AttackParams("adversary positions must be finite".into()))
            }
            Strategy::KeyEstimation { copies, .. } if *copies == 0 => {
                Err(Error::AttackParams("copies must be at least 1".into()))
            }
            Strategy::KeyEstimation { grid, .. } if *grid < 2 => {
                Err(Error::AttackParams("grid resolution must be at least 2".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Adversary stations placed into a scenario, with their shared policy.
#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    pub positions: Vec<Position>,
    pub policy: RespondPolicy,
}

impl Deployment {
    pub(crate) fn for_strategy(strategy: &Strategy, geometry: &ScenarioGeometry) -> Result<Self> {
        let claimed = geometry.claimed_position();
        let (positions, policy) = match strategy {
            Strategy::Guess => (vec![claimed], RespondPolicy::Guess),
            Strategy::Measure { basis } => (vec![claimed], RespondPolicy::Measure { basis: *basis }),
            Strategy::Spoof { position, policy } => (vec![*position], *policy),
            Strategy::Collude { positions, policy } => (positions.clone(), *policy),
            Strategy::None | Strategy::KeyEstimation { .. } => {
                return Err(Error::AttackParams(format!("{} deploys no stations", strategy.name())))
            }
        };
        Ok(Deployment { positions, policy })
    }

    pub(crate) fn station_ids(&self) -> Vec<StationId> {
        (1..=self.positions.len())
            .map(|j| StationId::new(format!("E{j}")))
            .collect()
    }

    /// Adds the adversary stations and routes each verifier's challenge to
    /// its assigned interceptor.
    pub(crate) fn install(&self, base: &ScenarioGeometry) -> Result<(ScenarioGeometry, Vec<StationId>)> {
        let ids = self.station_ids();
        let mut geometry = base.clone();
        for (id, p) in ids.iter().zip(&self.positions) {
            geometry = geometry.with_station(Station::new(id.as_str(), Role::Adversary, *p))?;
        }
        let routes = assign_responders(base, &self.positions)
            .into_iter()
            .map(|j| ids[j].clone())
            .collect();
        Ok((geometry, routes))
    }

    /// Whether every verifier's assigned interceptor meets its timing check.
    pub fn timing_feasible(&self, geometry: &ScenarioGeometry, tolerance: f64) -> bool {
        timing_errors(geometry, &self.positions).iter().all(|&e| e <= tolerance)
    }
}

/// Interceptor station: answers every challenge immediately without the key.
pub(crate) struct Interceptor {
    policy: RespondPolicy,
    rng: SimRng,
}

impl Interceptor {
    pub(crate) fn new(policy: RespondPolicy, rng: SimRng) -> Self {
        Interceptor { policy, rng }
    }
}

impl StationHandler for Interceptor {
    fn on_signal(&mut self, event: &SignalEvent, outbox: &mut Outbox<'_>) -> Result<()> {
        if let Payload::Challenge { cipher, message_len } = &event.payload {
            let bits = match self.policy {
                RespondPolicy::Guess => (0..*message_len).map(|_| self.rng.random::<bool>()).collect(),
                RespondPolicy::Measure { basis } => cipher.clone().measure_prefix(*message_len, basis, &mut self.rng),
            };
            let now = outbox.now();
            outbox.send(event.sender.clone(), Payload::Response(Message::new(bits)?), now);
        }
        Ok(())
    }
}

/// Compact outcome of one protocol round.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSummary {
    pub accepted: bool,
    pub identity_ok: Vec<bool>,
    pub timing_ok: Vec<bool>,
    pub bits_correct: u64,
    pub bits_total: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifierDetection {
    pub id: StationId,
    pub identity_rejects: u64,
    pub timing_rejects: u64,
    pub detections: u64,
    pub detection_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackReport {
    pub strategy: String,
    pub trials: u64,
    /// Overall acceptance for protocol attacks; key-index recovery rate for
    /// key estimation.
    pub success: BinomialEstimate,
    pub theoretical: Option<f64>,
    /// Fraction of trials in which some verifier rejected.
    pub detection_probability: Option<f64>,
    pub per_verifier: Vec<VerifierDetection>,
    /// Individual answer bits that matched the challenge.
    pub per_bit: Option<BinomialEstimate>,
    pub timing_feasible: Option<bool>,
    /// Measurement basis the attack settled on, radians.
    pub best_basis: Option<f64>,
    pub copies: Option<usize>,
    /// One character per trial: `1` success, `0` failure.
    pub outcomes: String,
}

impl AttackReport {
    pub(crate) fn from_trials(
        strategy: &str,
        verifiers: &[StationId],
        trials: &[TrialSummary],
        theoretical: Theory,
    ) -> Self {
        let n = trials.len() as u64;
        let accepts = trials.iter().filter(|t| t.accepted).count() as u64;
        let per_verifier = verifiers
            .iter()
            .enumerate()
            .map(|(k, id)| {
                let identity_rejects = trials.iter().filter(|t| !t.identity_ok[k]).count() as u64;
                let timing_rejects = trials.iter().filter(|t| !t.timing_ok[k]).count() as u64;
                let detections = trials.iter().filter(|t| !(t.identity_ok[k] && t.timing_ok[k])).count() as u64;
                VerifierDetection {
                    id: id.clone(),
                    identity_rejects,
                    timing_rejects,
                    detections,
                    detection_rate: detections as f64 / n as f64,
                }
            })
            .collect();
        let bits_correct = trials.iter().map(|t| t.bits_correct).sum();
        let bits_total = trials.iter().map(|t| t.bits_total).sum();
        AttackReport {
            strategy: strategy.into(),
            trials: n,
            success: BinomialEstimate::new(accepts, n),
            theoretical: theoretical.acceptance,
            detection_probability: Some((n - accepts) as f64 / n as f64),
            per_verifier,
            per_bit: Some(BinomialEstimate::new(bits_correct, bits_total)),
            timing_feasible: theoretical.timing_feasible,
            best_basis: None,
            copies: None,
            outcomes: trials.iter().map(|t| if t.accepted { '1' } else { '0' }).collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn csv_header() -> &'static [&'static str] {
        &[
            "strategy",
            "trials",
            "successes",
            "p_hat",
            "ci_low",
            "ci_high",
            "theoretical",
            "detection_probability",
            "per_bit_p_hat",
            "timing_feasible",
            "best_basis",
            "copies",
        ]
    }

    pub fn csv_row(&self) -> Vec<String> {
        fn opt<T: ToString>(x: Option<T>) -> String {
            x.map(|v| v.to_string()).unwrap_or_default()
        }
        let num = |x: f64| format!("{x:.16e}");
        vec![
            self.strategy.clone(),
            self.trials.to_string(),
            self.success.successes.to_string(),
            num(self.success.p_hat),
            num(self.success.ci_low),
            num(self.success.ci_high),
            opt(self.theoretical.map(num)),
            opt(self.detection_probability.map(num)),
            opt(self.per_bit.map(|b| num(b.p_hat))),
            opt(self.timing_feasible),
            opt(self.best_basis.map(num)),
            opt(self.copies),
        ]
    }
}

/// Closed-form expectations for a protocol attack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Theory {
    pub acceptance: Option<f64>,
    pub timing_feasible: Option<bool>,
}

/// Probability that a verifier expecting uniformly random `r` bits sees at
/// most `budget` errors from an answer independent of them.
fn blind_pass_probability(r: usize, budget: usize) -> f64 {
    let mut total = 0.0;
    let mut binom = 1.0f64;
    for e in 0..=budget.min(r) {
        if e > 0 {
            binom *= (r - e + 1) as f64 / e as f64;
        }
        total += binom;
    }
    total * 0.5f64.powi(r as i32)
}

pub(crate) fn theoretical_acceptance(
    config: &ProtocolConfig,
    strategy: &Strategy,
    deployment: Option<&Deployment>,
) -> Result<Theory> {
    let blind: f64 = config
        .message_lengths
        .iter()
        .map(|&r| blind_pass_probability(r, config.identity_error_budget))
        .product();
    if config.noise > 0.0 {
        return Ok(Theory {
            acceptance: None,
            timing_feasible: None,
        });
    }
    Ok(match (strategy, deployment) {
        (Strategy::None, _) => {
            let g = &config.scenario.geometry;
            let (position, delay) = g
                .prover()
                .map(|p| (p.position, p.processing_delay))
                .unwrap_or((g.claimed_position(), 0.0));
            let honest_timing = g.verifiers().all(|v| {
                let observed = 2.0 * light_time(v.position, position) + delay;
                let expected = 2.0 * light_time(v.position, g.claimed_position());
                (observed - expected).abs() <= config.scenario.tolerance
            });
            let acceptance = match config.convention {
                Convention::QuarterTurn => 1.0,
                Convention::LiteralPi => blind,
            };
            Theory {
                acceptance: Some(if honest_timing { acceptance } else { 0.0 }),
                timing_feasible: Some(honest_timing),
            }
        }
        (_, Some(d)) => {
            let feasible = d.timing_feasible(&config.scenario.geometry, config.scenario.tolerance);
            Theory {
                acceptance: Some(if feasible { blind } else { 0.0 }),
                timing_feasible: Some(feasible),
            }
        }
        _ => Theory {
            acceptance: None,
            timing_feasible: None,
        },
    })
}

/// Single impersonator at `position` against the protocol in `config`.
pub fn spoof_position_attack(
    config: &ProtocolConfig,
    position: Position,
    policy: RespondPolicy,
    trials: u64,
) -> Result<AttackReport> {
    let spec = AttackSpec::new(Strategy::Spoof { position, policy }, trials);
    run_with_adversary(config, &spec).map(|(_, report)| report)
}

/// Colluding interceptors at `positions` (at least two).
pub fn colluding_attack(
    config: &ProtocolConfig,
    positions: &[Position],
    policy: RespondPolicy,
    trials: u64,
) -> Result<AttackReport> {
    let spec = AttackSpec::new(
        Strategy::Collude {
            positions: positions.to_vec(),
            policy,
        },
        trials,
    );
    run_with_adversary(config, &spec).map(|(_, report)| report)
}
