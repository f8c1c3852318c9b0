//! Shared numerical thresholds. Every comparison in the crate and its tests
//! goes through one of these.

/// Exact-algebra checks: rotations, compositions, normalization drift.
pub const EXACT: f64 = 1e-12;

/// Normalization slack accepted from external input (files, callers).
pub const INPUT_NORMALIZATION: f64 = 1e-9;

/// Trace slack accepted by `trace_distance` before it rejects an input.
pub const TRACE_NORMALIZATION: f64 = 1e-9;

/// Monte-Carlo checks accept estimates within this many binomial standard
/// deviations of the predicted value.
pub const SIGMA_BOUND: f64 = 3.0;

/// Equidistant-mode geometry slack, metres.
pub const EQUIDISTANT_SLACK_M: f64 = 1e-6;

/// Default round-trip timing tolerance, seconds (about 0.3 m of path).
pub const DEFAULT_TIMING_TOLERANCE_S: f64 = 1e-9;
