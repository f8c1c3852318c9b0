//! Timing geometry of interceptors: which positions can answer a verifier
//! on schedule.

use crate::spacetime::{light_time, Position, ScenarioGeometry};

/// Round-trip timing error seen by `verifier` if answered instantly from `at`.
fn timing_error(geometry: &ScenarioGeometry, verifier: Position, at: Position) -> f64 {
    let expected = 2.0 * light_time(verifier, geometry.claimed_position());
    (2.0 * light_time(verifier, at) - expected).abs()
}

/// For each verifier, the index of the position whose instant answer best
/// matches the expected round trip. Ties go to the lowest index.
pub fn assign_responders(geometry: &ScenarioGeometry, positions: &[Position]) -> Vec<usize> {
    geometry
        .verifiers()
        .map(|v| {
            let mut best = 0;
            let mut best_err = f64::INFINITY;
            for (j, p) in positions.iter().enumerate() {
                let err = timing_error(geometry, v.position, *p);
                if err < best_err {
                    best = j;
                    best_err = err;
                }
            }
            best
        })
        .collect()
}

/// Per-verifier timing error of the best-placed responder, seconds.
pub fn timing_errors(geometry: &ScenarioGeometry, positions: &[Position]) -> Vec<f64> {
    geometry
        .verifiers()
        .map(|v| {
            positions
                .iter()
                .map(|p| timing_error(geometry, v.position, *p))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Grid points within `half_extent` metres (per axis) of the claimed
/// position from which a single instant responder passes every verifier's
/// timing check at `tolerance`.
pub fn timing_feasible_positions(
    geometry: &ScenarioGeometry,
    tolerance: f64,
    half_extent: f64,
    step: f64,
) -> Vec<Position> {
    let center = geometry.claimed_position();
    let n = (half_extent / step).floor() as i64;
    let mut feasible = Vec::new();
    for i in -n..=n {
        for j in -n..=n {
            for k in -n..=n {
                let p = center + Position::new(i as f64 * step, j as f64 * step, k as f64 * step);
                if geometry
                    .verifiers()
                    .all(|v| timing_error(geometry, v.position, p) <= tolerance)
                {
                    feasible.push(p);
                }
            }
        }
    }
    feasible
}

/// One interceptor per verifier, each at that verifier's claimed distance
/// but turned 90° away from the line to the claimed position. Every
/// verifier's round trip then matches exactly although no interceptor is
/// at the claimed position.
pub fn timing_feasible_colluders(geometry: &ScenarioGeometry) -> Vec<Position> {
    let claimed = geometry.claimed_position();
    geometry
        .verifiers()
        .map(|v| {
            let to_claim = claimed - v.position;
            let d = to_claim.norm();
            if d == 0.0 {
                return v.position;
            }
            let g = to_claim * (1.0 / d);
            let axis = (0..3)
                .min_by(|&a, &b| g.0[a].abs().total_cmp(&g.0[b].abs()))
                .unwrap_or(0);
            let mut e = Position::ORIGIN;
            e.0[axis] = 1.0;
            let w = (e - g * e.dot(&g)).normalized();
            v.position + w * d
        })
        .collect()
}
