//! Complex-analytic machinery connecting trace averages to message
//! polynomials: Mobius maps of the channel, the multivariate trace statistic
//! and its exact expectation, the message polynomial g, Fourier decomposition
//! over l-bit functions, the character-to-derivative reduction, and the
//! resulting estimators.

mod estimator;
mod fourier;
mod mobius;
mod statistic;

pub use estimator::{estimate_g_general, estimate_g_simple, Estimate, EstimationPlan, GeneralEstimate};
pub use fourier::{character_reduction, fourier_f2l, BoolFn, CharacterMask, ReductionPlan};
pub use mobius::{psi, MobiusMaps, ShiftPolynomial};
pub use statistic::{expected_trace_statistic, message_g, trace_statistic, TruncationLimits};

use num_complex::Complex64;

/// Evaluation point (z0, z1, ..., zl). EQUAL mode shares one value across
/// coordinates 1..l and is required by the derivative reduction; FREE mode
/// carries distinct values and is only valid for simple characters.
#[derive(Clone, Debug, PartialEq)]
pub enum EvalPoint {
    Equal { z0: Complex64, z_rest: Complex64, l: usize },
    Free { z0: Complex64, zs: Vec<Complex64> },
}

impl EvalPoint {
    pub fn scalar(z0: Complex64) -> Self {
        EvalPoint::Free { z0, zs: Vec::new() }
    }

    pub fn equal(z0: Complex64, z_rest: Complex64, l: usize) -> Self {
        EvalPoint::Equal { z0, z_rest, l }
    }

    pub fn z0(&self) -> Complex64 {
        match self {
            EvalPoint::Equal { z0, .. } | EvalPoint::Free { z0, .. } => *z0,
        }
    }

    /// Arity l (number of coordinates beyond z0).
    pub fn arity(&self) -> usize {
        match self {
            EvalPoint::Equal { l, .. } => *l,
            EvalPoint::Free { zs, .. } => zs.len(),
        }
    }

    /// Coordinates z1..zl.
    pub fn rest(&self) -> Vec<Complex64> {
        match self {
            EvalPoint::Equal { z_rest, l, .. } => vec![*z_rest; *l],
            EvalPoint::Free { zs, .. } => zs.clone(),
        }
    }

    /// All l+1 coordinates, z0 first.
    pub fn coords(&self) -> Vec<Complex64> {
        let mut v = Vec::with_capacity(self.arity() + 1);
        v.push(self.z0());
        v.extend(self.rest());
        v
    }
}

/// The arc radius rho = 1 - n^{-4/5} log^6 n goes outside (0,1) at desk
/// scales; clamp into [0.5, 1 - 1e-3] and report whether clamping fired.
pub fn arc_radius(n: usize) -> (f64, bool) {
    let nf = n as f64;
    let raw = 1.0 - nf.powf(-0.8) * nf.ln().powi(6);
    let clamped = raw.clamp(0.5, 1.0 - 1e-3);
    (clamped, clamped != raw)
}
