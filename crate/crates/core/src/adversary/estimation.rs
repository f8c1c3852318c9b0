//! Estimating the private key from public-key copies.
//!
//! The adversary measures all `k` copies of a key qubit in one projective
//! basis at angle `φ`. Outcome `1` has probability `p_s = sin²(sθ_t − φ)`, so
//! the number of ones is `Binomial(k, p_s)` and the maximum-a-posteriori
//! decoder (uniform prior) picks the `s` with the largest likelihood.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::AttackReport;
use crate::error::{Error, Result};
use crate::keys::{copy_public_key, keygen};
use crate::qubit::{measure_in_basis, rotate, Angle, QubitState};
use crate::rng::SimRng;
use crate::stats::{binary_entropy, mutual_information, BinomialEstimate, InformationEstimate};
use crate::tolerance;

/// Hypothesis tables have `2^t` rows; larger `t` is refused.
pub const MAX_ESTIMATION_PRECISION: u32 = 20;

fn check(precision: u32, grid: usize) -> Result<()> {
    if precision == 0 || precision > MAX_ESTIMATION_PRECISION {
        return Err(Error::Precision {
            got: precision,
            max: MAX_ESTIMATION_PRECISION,
        });
    }
    if grid < 2 {
        return Err(Error::AttackParams("grid resolution must be at least 2".into()));
    }
    Ok(())
}

/// `grid` basis angles `jπ/grid` covering every real projective basis.
pub fn grid_angles(grid: usize) -> Vec<Angle> {
    (0..grid)
        .map(|j| Angle::from_radians(j as f64 * std::f64::consts::PI / grid as f64))
        .collect()
}

pub fn outcome_one_probability(index: u64, precision: u32, basis: Angle) -> f64 {
    let x = (Angle::key_angle(index, precision) - basis).radians().sin();
    x * x
}

fn outcome_probabilities(precision: u32, basis: Angle) -> Vec<f64> {
    (0..1u64 << precision)
        .map(|s| outcome_one_probability(s, precision, basis))
        .collect()
}

fn likelihood(p: f64, ones: usize, copies: usize) -> f64 {
    p.powi(ones as i32) * (1.0 - p).powi((copies - ones) as i32)
}

/// MAP estimate of `s` for each possible number of ones `0..=copies`.
pub fn map_decoder(precision: u32, copies: usize, basis: Angle) -> Vec<u64> {
    let probs = outcome_probabilities(precision, basis);
    (0..=copies)
        .map(|ones| {
            let mut best = 0u64;
            let mut best_l = f64::NEG_INFINITY;
            for (s, &p) in probs.iter().enumerate() {
                let l = likelihood(p, ones, copies);
                if l > best_l {
                    best = s as u64;
                    best_l = l;
                }
            }
            best
        })
        .collect()
}

/// Exact probability that the MAP decoder recovers a uniformly random key
/// index from `copies` measurements at `basis`.
pub fn bayes_success_probability(precision: u32, copies: usize, basis: Angle) -> f64 {
    let probs = outcome_probabilities(precision, basis);
    let mut binom = 1.0f64;
    let mut total = 0.0;
    for ones in 0..=copies {
        if ones > 0 {
            binom *= (copies - ones + 1) as f64 / ones as f64;
        }
        let best = probs.iter().map(|&p| likelihood(p, ones, copies)).fold(0.0, f64::max);
        total += binom * best;
    }
    total / probs.len() as f64
}

/// Grid angle with the highest exact success probability (first on ties).
pub fn best_grid_basis(precision: u32, copies: usize, grid: usize) -> (Angle, f64) {
    let mut best = (Angle::ZERO, f64::NEG_INFINITY);
    for phi in grid_angles(grid) {
        let p = bayes_success_probability(precision, copies, phi);
        if p > best.1 + tolerance::EXACT {
            best = (phi, p);
        }
    }
    best
}

/// Key-estimation attack with `copies` intercepted copies per trial, each
/// trial on a fresh `key_len`-qubit key at precision `t`.
pub fn key_estimation_attack(
    copies: usize,
    precision: u32,
    key_len: usize,
    grid: usize,
    trials: u64,
    rng: &SimRng,
) -> Result<AttackReport> {
    check(precision, grid)?;
    if copies == 0 {
        return Err(Error::AttackParams("copies must be at least 1".into()));
    }
    if key_len == 0 {
        return Err(Error::KeyLength(0));
    }
    if trials == 0 {
        return Err(Error::AttackParams("trials must be at least 1".into()));
    }
    let (basis, theoretical) = best_grid_basis(precision, copies, grid);
    let decoder = map_decoder(precision, copies, basis);
    let per_trial: Vec<u64> = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<u64> {
            let mut rng = rng.fork(trial);
            let (sk, pk) = keygen(key_len, precision, &mut rng)?;
            let mut ones = vec![0usize; key_len];
            for copy in copy_public_key(&pk, copies)? {
                let bits = copy.into_received().measure_all(basis, &mut rng);
                for (count, bit) in ones.iter_mut().zip(bits) {
                    *count += bit as usize;
                }
            }
            Ok(ones.iter().zip(sk.indices()).filter(|(&n, &s)| decoder[n] == s).count() as u64)
        })
        .collect::<Result<_>>()?;
    let recovered: u64 = per_trial.iter().sum();
    Ok(AttackReport {
        strategy: super::Strategy::KeyEstimation { copies, grid }.name().into(),
        trials,
        success: BinomialEstimate::new(recovered, trials * key_len as u64),
        theoretical: Some(theoretical),
        detection_probability: None,
        per_verifier: Vec::new(),
        per_bit: None,
        timing_feasible: None,
        best_basis: Some(basis.radians()),
        copies: Some(copies),
        outcomes: per_trial
            .iter()
            .map(|&n| if n == key_len as u64 { '1' } else { '0' })
            .collect(),
    })
}

/// `I(outcome; s)` in bits for one measurement at `basis` on a uniformly
/// random key qubit.
pub fn exact_mutual_information(precision: u32, basis: Angle) -> f64 {
    let probs = outcome_probabilities(precision, basis);
    let n = probs.len() as f64;
    let mean = probs.iter().sum::<f64>() / n;
    let conditional = probs.iter().map(|&p| binary_entropy(p)).sum::<f64>() / n;
    (binary_entropy(mean) - conditional).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InformationPoint {
    pub basis: f64,
    pub estimate: InformationEstimate,
    pub exact_bits: f64,
}

impl InformationPoint {
    /// Bias-corrected estimate minus [`tolerance::SIGMA_BOUND`] standard errors.
    pub fn lower(&self) -> f64 {
        self.estimate.bits - self.estimate.bias - tolerance::SIGMA_BOUND * self.estimate.std_error
    }

    /// Bias-corrected estimate plus [`tolerance::SIGMA_BOUND`] standard errors.
    pub fn upper(&self) -> f64 {
        self.estimate.bits - self.estimate.bias + tolerance::SIGMA_BOUND * self.estimate.std_error
    }
}

/// Empirical mutual information between one measurement outcome and the
/// key index, for every grid basis, from `samples` draws per basis.
pub fn information_scan<R: Rng + ?Sized>(
    precision: u32,
    grid: usize,
    samples: u64,
    rng: &mut R,
) -> Result<Vec<InformationPoint>> {
    check(precision, grid)?;
    let bound = 1u64 << precision;
    Ok(grid_angles(grid)
        .into_iter()
        .map(|basis| {
            let mut counts = vec![[0u64; 2]; bound as usize];
            for _ in 0..samples {
                let s = rng.random_range(0..bound);
                let state = rotate(QubitState::ZERO, Angle::key_angle(s, precision));
                counts[s as usize][measure_in_basis(state, basis, rng) as usize] += 1;
            }
            InformationPoint {
                basis: basis.radians(),
                estimate: mutual_information(&counts),
                exact_bits: exact_mutual_information(precision, basis),
            }
        })
        .collect())
}
