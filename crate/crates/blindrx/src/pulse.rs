//! Root-raised-cosine pulse shaping.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// A symmetric FIR pulse: `span * oversampling + 1` taps, unit energy
/// (sum of squared taps = 1).
#[derive(Debug, Clone)]
pub struct PulseShape {
    pub rolloff: f64,
    /// Filter length in symbol periods.
    pub span: usize,
    /// Samples per symbol.
    pub oversampling: usize,
    pub taps: Vec<f64>,
}

impl PulseShape {
    /// Root-raised-cosine pulse with roll-off `rolloff` in (0, 1].
    ///
    /// The cascade of this pulse with itself is a raised-cosine (Nyquist)
    /// pulse: sampled at the symbol spacing it is ISI-free up to truncation.
    pub fn rrc(rolloff: f64, span: usize, oversampling: usize) -> Result<Self> {
        if !(0.0 < rolloff && rolloff <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "roll-off {rolloff} outside (0, 1]"
            )));
        }
        if span == 0 || oversampling < 2 {
            return Err(Error::InvalidParameter(
                "span must be >= 1 and oversampling >= 2".into(),
            ));
        }
        let n = span * oversampling + 1;
        let half = (n - 1) as isize / 2;
        let p = oversampling as f64;
        let mut taps: Vec<f64> = (-half..=half)
            .map(|k| rrc_tap(k as f64 / p, rolloff))
            .collect();
        let energy: f64 = taps.iter().map(|t| t * t).sum();
        let scale = energy.sqrt();
        for t in &mut taps {
            *t /= scale;
        }
        Ok(Self {
            rolloff,
            span,
            oversampling,
            taps,
        })
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// Group delay in samples: the center-tap index.
    pub fn delay(&self) -> usize {
        (self.taps.len() - 1) / 2
    }
}

/// RRC impulse response at `t` symbol periods (unnormalized).
fn rrc_tap(t: f64, rho: f64) -> f64 {
    let eps = 1e-9;
    if t.abs() < eps {
        1.0 + rho * (4.0 / PI - 1.0)
    } else if (t.abs() - 1.0 / (4.0 * rho)).abs() < eps {
        (rho / 2.0_f64.sqrt())
            * ((1.0 + 2.0 / PI) * (PI / (4.0 * rho)).sin()
                + (1.0 - 2.0 / PI) * (PI / (4.0 * rho)).cos())
    } else {
        let num = (PI * t * (1.0 - rho)).sin() + 4.0 * rho * t * (PI * t * (1.0 + rho)).cos();
        let den = PI * t * (1.0 - (4.0 * rho * t).powi(2));
        num / den
    }
}

/// Full linear convolution of two real tap sequences.
#[cfg(test)]
pub(crate) fn convolve_real(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}
