//! What an eavesdropper holding a single cipher qubit can learn about the
//! message bit when the key index is uniform and used once.

use rand::Rng;

use crate::cipher::Convention;
use crate::density::{trace_distance, DensityMatrix2};
use crate::error::{Error, Result};
use crate::qubit::{measure_in_basis, rotate, Angle, QubitState};
use crate::stats::BinomialEstimate;

/// Exact mixtures are sums over `2^t` key values; beyond this they are
/// refused.
pub const MAX_MIXTURE_PRECISION: u32 = 24;

/// `ρ_m = 2^{-t} Σ_s |ψ(sθ_t + mπ/2)><ψ(sθ_t + mπ/2)|`, summed exactly.
pub fn cipher_mixtures(precision: u32, bit: bool) -> Result<DensityMatrix2> {
    if precision == 0 || precision > MAX_MIXTURE_PRECISION {
        return Err(Error::Precision {
            got: precision,
            max: MAX_MIXTURE_PRECISION,
        });
    }
    let shift = Convention::QuarterTurn.bit_angle(bit);
    let states = (0..1u64 << precision).map(|s| rotate(QubitState::ZERO, Angle::key_angle(s, precision) + shift));
    Ok(DensityMatrix2::uniform_mixture(states).expect("at least two key values"))
}

/// Optimal single-shot probability of telling `r0` from `r1` with equal priors.
pub fn helstrom_guess_bound(r0: &DensityMatrix2, r1: &DensityMatrix2) -> Result<f64> {
    Ok(0.5 + 0.5 * trace_distance(r0, r1)?)
}

/// Intercept one cipher qubit (fresh uniform key index, uniform message bit),
/// measure it in `basis` and take the outcome as the guess. Returns the
/// fraction of correct guesses.
pub fn intercept_guess_success<R: Rng + ?Sized>(
    precision: u32,
    basis: Angle,
    trials: u64,
    rng: &mut R,
) -> BinomialEstimate {
    let bound = 1u64 << precision;
    let mut hits = 0;
    for _ in 0..trials {
        let s = rng.random_range(0..bound);
        let bit: bool = rng.random();
        let cipher = rotate(
            QubitState::ZERO,
            Angle::key_angle(s, precision) + Convention::QuarterTurn.bit_angle(bit),
        );
        if measure_in_basis(cipher, basis, rng) == bit {
            hits += 1;
        }
    }
    BinomialEstimate::new(hits, trials)
}
