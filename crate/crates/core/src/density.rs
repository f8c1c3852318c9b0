//! Real symmetric 2×2 density matrices and the trace distance between them.

use crate::error::{Error, Result};
use crate::qubit::QubitState;
use crate::tolerance;

/// `[[p00, p01], [p01, p11]]`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix2 {
    p00: f64,
    p01: f64,
    p11: f64,
}

impl DensityMatrix2 {
    /// Validated constructor: trace one and spectrum in `[0, 1]`, both within
    /// [`tolerance::EXACT`].
    pub fn new(p00: f64, p01: f64, p11: f64) -> Result<Self> {
        let m = Self::from_raw(p00, p01, p11);
        m.validate()?;
        Ok(m)
    }

    /// Unvalidated constructor for intermediate sums.
    pub fn from_raw(p00: f64, p01: f64, p11: f64) -> Self {
        DensityMatrix2 { p00, p01, p11 }
    }

    pub fn pure(state: QubitState) -> Self {
        let (a0, a1) = state.amplitudes();
        DensityMatrix2 {
            p00: a0 * a0,
            p01: a0 * a1,
            p11: a1 * a1,
        }
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix2 {
            p00: 0.5,
            p01: 0.0,
            p11: 0.5,
        }
    }

    /// Uniform mixture of pure states. Returns `None` for an empty iterator.
    pub fn uniform_mixture<I: IntoIterator<Item = QubitState>>(states: I) -> Option<Self> {
        let mut n = 0usize;
        let (mut p00, mut p01, mut p11) = (0.0, 0.0, 0.0);
        for s in states {
            let (a0, a1) = s.amplitudes();
            p00 += a0 * a0;
            p01 += a0 * a1;
            p11 += a1 * a1;
            n += 1;
        }
        if n == 0 {
            return None;
        }
        let w = 1.0 / n as f64;
        Some(DensityMatrix2::from_raw(p00 * w, p01 * w, p11 * w))
    }

    pub fn entries(&self) -> [[f64; 2]; 2] {
        [[self.p00, self.p01], [self.p01, self.p11]]
    }

    pub fn trace(&self) -> f64 {
        self.p00 + self.p11
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        symmetric_eigenvalues(self.p00, self.p01, self.p11)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.p00, self.p01, self.p11].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidDensityMatrix("non-finite entry".into()));
        }
        if (self.trace() - 1.0).abs() > tolerance::EXACT {
            return Err(Error::InvalidDensityMatrix(format!("trace {}", self.trace())));
        }
        let [lo, hi] = self.eigenvalues();
        if lo < -tolerance::EXACT || hi > 1.0 + tolerance::EXACT {
            return Err(Error::InvalidDensityMatrix(format!("eigenvalues {lo}, {hi}")));
        }
        Ok(())
    }
}

fn symmetric_eigenvalues(a: f64, b: f64, d: f64) -> [f64; 2] {
    let mean = 0.5 * (a + d);
    let radius = (0.5 * (a - d)).hypot(b);
    [mean - radius, mean + radius]
}

/// `½ Σ |λ_i(ρ0 − ρ1)|`, in `[0, 1]`.
///
/// Rejects inputs whose trace is further than
/// [`tolerance::TRACE_NORMALIZATION`] from one.
pub fn trace_distance(r0: &DensityMatrix2, r1: &DensityMatrix2) -> Result<f64> {
    for r in [r0, r1] {
        let tr = r.trace();
        if !tr.is_finite() || (tr - 1.0).abs() > tolerance::TRACE_NORMALIZATION {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr}")));
        }
    }
    let [l0, l1] = symmetric_eigenvalues(r0.p00 - r1.p00, r0.p01 - r1.p01, r0.p11 - r1.p11);
    Ok((0.5 * (l0.abs() + l1.abs())).min(1.0))
}
