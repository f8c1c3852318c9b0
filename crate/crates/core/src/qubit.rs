//! Real-amplitude single-qubit states under y-axis rotations.
//!
//! Rotations about the y axis keep amplitudes real, so a state is a unit
//! vector `(a0, a1)` in the plane spanned by `|0_z>` and `|1_z>`. The rotation
//! `R(α)` turns that vector by `α`, which makes `R(α)|0_z> = cos α |0_z> + sin α |1_z>`.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerance;

/// Rotation angle in radians. No reduction modulo 2π is applied.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Angle(f64);

impl Angle {
    pub const ZERO: Angle = Angle(0.0);
    pub const QUARTER_TURN: Angle = Angle(PI / 2.0);
    pub const HALF_TURN: Angle = Angle(PI);

    pub fn from_radians(radians: f64) -> Self {
        Angle(radians)
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    /// Quantization step `π / 2^t`.
    pub fn step(precision: u32) -> Self {
        Angle(PI / 2f64.powi(precision as i32))
    }

    /// `index · π / 2^t`.
    pub fn key_angle(index: u64, precision: u32) -> Self {
        Angle(index as f64 * PI / 2f64.powi(precision as i32))
    }
}

impl Add for Angle {
    type Output = Angle;
    fn add(self, rhs: Angle) -> Angle {
        Angle(self.0 + rhs.0)
    }
}

impl Sub for Angle {
    type Output = Angle;
    fn sub(self, rhs: Angle) -> Angle {
        Angle(self.0 - rhs.0)
    }
}

impl Neg for Angle {
    type Output = Angle;
    fn neg(self) -> Angle {
        Angle(-self.0)
    }
}

impl Mul<f64> for Angle {
    type Output = Angle;
    fn mul(self, rhs: f64) -> Angle {
        Angle(self.0 * rhs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    a0: f64,
    a1: f64,
}

impl QubitState {
    /// `|0_z>`
    pub const ZERO: QubitState = QubitState { a0: 1.0, a1: 0.0 };
    /// `|1_z>`
    pub const ONE: QubitState = QubitState { a0: 0.0, a1: 1.0 };

    /// Builds a state from amplitudes, rejecting vectors whose squared norm
    /// is further than [`tolerance::INPUT_NORMALIZATION`] from one.
    pub fn new(a0: f64, a1: f64) -> Result<Self> {
        let norm_sq = a0 * a0 + a1 * a1;
        if !norm_sq.is_finite() || (norm_sq - 1.0).abs() > tolerance::INPUT_NORMALIZATION {
            return Err(Error::NotNormalized { norm_sq });
        }
        Ok(QubitState { a0, a1 })
    }

    /// `cos α |0_z> + sin α |1_z>`
    pub fn from_angle(angle: Angle) -> Self {
        let (s, c) = angle.radians().sin_cos();
        QubitState { a0: c, a1: s }
    }

    pub fn amplitudes(&self) -> (f64, f64) {
        (self.a0, self.a1)
    }

    pub fn norm_sq(&self) -> f64 {
        self.a0 * self.a0 + self.a1 * self.a1
    }

    /// Born probability of outcome `|1_z>`.
    pub fn prob_one(&self) -> f64 {
        self.a1 * self.a1
    }
}

pub fn rotate(state: QubitState, angle: Angle) -> QubitState {
    let (s, c) = angle.radians().sin_cos();
    QubitState {
        a0: state.a0 * c - state.a1 * s,
        a1: state.a0 * s + state.a1 * c,
    }
}

pub fn inverse_rotate(state: QubitState, angle: Angle) -> QubitState {
    rotate(state, -angle)
}

/// Projective measurement in `{|0_z>, |1_z>}`. Returns `true` for `|1_z>`.
/// Consumes exactly one draw from `rng`.
pub fn measure_z<R: Rng + ?Sized>(state: QubitState, rng: &mut R) -> bool {
    let u: f64 = rng.random();
    u < state.prob_one()
}

/// Measurement in the basis `{R(φ)|0_z>, R(φ)|1_z>}`.
pub fn measure_in_basis<R: Rng + ?Sized>(state: QubitState, basis: Angle, rng: &mut R) -> bool {
    measure_z(inverse_rotate(state, basis), rng)
}

/// Real inner product `<a|b>`.
pub fn overlap(a: QubitState, b: QubitState) -> f64 {
    a.a0 * b.a0 + a.a1 * b.a1
}

/// `sqrt(1 - <a|b>^2)` for unit vectors, evaluated as `|a0 b1 - a1 b0|`.
///
/// The two agree exactly for normalized inputs (Lagrange identity) but the
/// cross-product form keeps full relative precision when the states are
/// nearly parallel, where `1 - <a|b>^2` cancels catastrophically.
pub fn state_distance(a: QubitState, b: QubitState) -> f64 {
    (a.a0 * b.a1 - a.a1 * b.a0).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SimRng;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn close(a: QubitState, b: QubitState) -> bool {
        (a.a0 - b.a0).abs() < tolerance::EXACT && (a.a1 - b.a1).abs() < tolerance::EXACT
    }

    #[test]
    fn rotate_examples() {
        assert_eq!(rotate(QubitState::ZERO, Angle::ZERO), QubitState::ZERO);
        assert!(close(rotate(QubitState::ZERO, Angle::QUARTER_TURN), QubitState::ONE));
        let r = rotate(QubitState::ZERO, Angle::key_angle(1, 2));
        assert!(close(
            r,
            QubitState {
                a0: FRAC_1_SQRT_2,
                a1: FRAC_1_SQRT_2
            }
        ));
    }

    #[test]
    fn inverse_rotate_examples() {
        let a = Angle::from_radians(0.3);
        assert!(close(inverse_rotate(rotate(QubitState::ZERO, a), a), QubitState::ZERO));
        assert!(close(
            inverse_rotate(QubitState::ONE, Angle::QUARTER_TURN),
            QubitState::ZERO
        ));
    }

    #[test]
    fn inverse_round_trip_random_angles() {
        let mut rng = SimRng::seed_from(11);
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let x = QubitState::from_angle(Angle::from_radians(rng.random_range(-10.0..10.0)));
            let a = Angle::from_radians(rng.random_range(-10.0..10.0));
            let back = inverse_rotate(rotate(x, a), a);
            worst = worst.max((back.a0 - x.a0).abs()).max((back.a1 - x.a1).abs());
        }
        assert!(worst < tolerance::EXACT, "worst deviation {worst}");
    }

    #[test]
    fn normalization_survives_long_chains() {
        let mut rng = SimRng::seed_from(5);
        let mut x = QubitState::ZERO;
        for _ in 0..1_000_000 {
            x = rotate(x, Angle::from_radians(rng.random_range(-4.0..4.0)));
        }
        assert!(
            (x.norm_sq() - 1.0).abs() < tolerance::EXACT,
            "drift {}",
            x.norm_sq() - 1.0
        );
    }

    #[test]
    fn measure_z_deterministic_cases() {
        let mut rng = SimRng::seed_from(1);
        let minus_one = QubitState::new(0.0, -1.0).unwrap();
        for _ in 0..1000 {
            assert!(!measure_z(QubitState::ZERO, &mut rng));
            assert!(measure_z(minus_one, &mut rng));
        }
    }

    #[test]
    fn measure_z_born_rule() {
        let mut rng = SimRng::seed_from(2024);
        let state = QubitState::new(0.6, 0.8).unwrap();
        let n = 100_000;
        let ones = (0..n).filter(|_| measure_z(state, &mut rng)).count();
        let p = 0.64;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        let p_hat = ones as f64 / n as f64;
        assert!((p_hat - p).abs() < tolerance::SIGMA_BOUND * sigma, "p_hat = {p_hat}");
    }

    #[test]
    fn measure_z_is_replayable() {
        let state = QubitState::from_angle(Angle::from_radians(1.1));
        let a: Vec<bool> = {
            let mut rng = SimRng::seed_from(77);
            (0..64).map(|_| measure_z(state, &mut rng)).collect()
        };
        let b: Vec<bool> = {
            let mut rng = SimRng::seed_from(77);
            (0..64).map(|_| measure_z(state, &mut rng)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn overlap_examples() {
        let x = QubitState::from_angle(Angle::from_radians(0.42));
        assert!((overlap(x, x) - 1.0).abs() < tolerance::EXACT);
        assert_eq!(overlap(QubitState::ZERO, QubitState::ONE), 0.0);
        for t in 1..=12 {
            for s in [0u64, 1, 3, (1 << t) - 1] {
                let a = QubitState::from_angle(Angle::key_angle(s, t));
                let b = QubitState::from_angle(Angle::key_angle(s + 1, t));
                let expected = (std::f64::consts::PI / 2f64.powi(t as i32)).cos();
                assert!((overlap(a, b) - expected).abs() < tolerance::EXACT);
            }
        }
    }

    #[test]
    fn new_rejects_unnormalized() {
        assert!(matches!(QubitState::new(1.0, 1.0), Err(Error::NotNormalized { .. })));
        assert!(QubitState::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn basis_measurement_matches_rotated_z() {
        // Measuring R(φ)|0> in the φ basis is deterministic.
        let mut rng = SimRng::seed_from(3);
        let phi = Angle::from_radians(0.77);
        let state = rotate(QubitState::ZERO, phi);
        for _ in 0..100 {
            assert!(!measure_in_basis(state, phi, &mut rng));
        }
    }

    proptest! {
        #[test]
        fn rotation_group_law(x in -10.0f64..10.0, a in -10.0f64..10.0, b in -10.0f64..10.0) {
            let s = QubitState::from_angle(Angle::from_radians(x));
            let lhs = rotate(s, Angle::from_radians(a) + Angle::from_radians(b));
            let rhs = rotate(rotate(s, Angle::from_radians(a)), Angle::from_radians(b));
            prop_assert!(close(lhs, rhs));
            prop_assert!((lhs.norm_sq() - 1.0).abs() < tolerance::EXACT);
        }
    }

    #[test]
    fn rotation_group_law_ten_thousand() {
        let mut rng = SimRng::seed_from(10_000);
        let mut worst: f64 = 0.0;
        for _ in 0..10_000 {
            let s = QubitState::from_angle(Angle::from_radians(rng.random_range(-7.0..7.0)));
            let a = Angle::from_radians(rng.random_range(-7.0..7.0));
            let b = Angle::from_radians(rng.random_range(-7.0..7.0));
            let lhs = rotate(s, a + b);
            let rhs = rotate(rotate(s, a), b);
            worst = worst.max((lhs.a0 - rhs.a0).abs()).max((lhs.a1 - rhs.a1).abs());
        }
        assert!(worst < tolerance::EXACT, "worst {worst}");
    }
}
