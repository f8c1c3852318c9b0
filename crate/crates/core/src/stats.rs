//! Counting estimators shared by Monte-Carlo checks and attack reports.

use serde::{Deserialize, Serialize};

use crate::tolerance;

/// Success count out of `trials`, with a Wilson score interval at
/// [`tolerance::SIGMA_BOUND`] standard deviations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinomialEstimate {
    pub successes: u64,
    pub trials: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl BinomialEstimate {
    pub fn new(successes: u64, trials: u64) -> Self {
        assert!(successes <= trials, "more successes than trials");
        if trials == 0 {
            return BinomialEstimate {
                successes,
                trials,
                p_hat: 0.0,
                ci_low: 0.0,
                ci_high: 1.0,
            };
        }
        let n = trials as f64;
        let p = successes as f64 / n;
        let z = tolerance::SIGMA_BOUND;
        let z2 = z * z;
        let denom = 1.0 + z2 / n;
        let center = (p + z2 / (2.0 * n)) / denom;
        let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        BinomialEstimate {
            successes,
            trials,
            p_hat: p,
            ci_low: (center - half).max(0.0).min(p),
            ci_high: (center + half).min(1.0).max(p),
        }
    }

    /// Whether `p_hat` lies within `k` binomial standard deviations of the
    /// predicted probability `p`.
    pub fn within_sigma(&self, p: f64, k: f64) -> bool {
        let sigma = (p * (1.0 - p) / self.trials as f64).sqrt();
        (self.p_hat - p).abs() <= k * sigma
    }

    /// Deviation from `p` in units of the binomial standard deviation.
    pub fn z_score(&self, p: f64) -> f64 {
        let sigma = (p * (1.0 - p) / self.trials as f64).sqrt();
        if sigma == 0.0 {
            return if self.p_hat == p { 0.0 } else { f64::INFINITY };
        }
        (self.p_hat - p) / sigma
    }
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    let h = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    h(p) + h(1.0 - p)
}

/// Plug-in mutual information estimate from a contingency table
/// `counts[hypothesis][outcome]`, in bits, with a delta-method standard error
/// and the Miller–Madow bias term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InformationEstimate {
    pub bits: f64,
    pub std_error: f64,
    pub bias: f64,
}

pub fn mutual_information(counts: &[[u64; 2]]) -> InformationEstimate {
    let n: u64 = counts.iter().map(|r| r[0] + r[1]).sum();
    if n == 0 {
        return InformationEstimate {
            bits: 0.0,
            std_error: 0.0,
            bias: 0.0,
        };
    }
    let nf = n as f64;
    let col = [
        counts.iter().map(|r| r[0]).sum::<u64>() as f64,
        counts.iter().map(|r| r[1]).sum::<u64>() as f64,
    ];
    let mut mi = 0.0;
    let mut second = 0.0;
    let mut rows = 0usize;
    for r in counts {
        let row = (r[0] + r[1]) as f64;
        if row > 0.0 {
            rows += 1;
        }
        for o in 0..2 {
            let c = r[o] as f64;
            if c == 0.0 {
                continue;
            }
            let term = (c * nf / (row * col[o])).log2();
            mi += c / nf * term;
            second += c / nf * term * term;
        }
    }
    let cols = col.iter().filter(|&&c| c > 0.0).count();
    let bias = (rows.saturating_sub(1) * cols.saturating_sub(1)) as f64 / (2.0 * nf * std::f64::consts::LN_2);
    InformationEstimate {
        bits: mi,
        std_error: ((second - mi * mi).max(0.0) / nf).sqrt(),
        bias,
    }
}
