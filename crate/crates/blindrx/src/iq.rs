//! Complex baseband sample streams.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A uniformly sampled complex baseband sequence. This is the carrier type
/// handed between synthesis, the channel, and every receiver stage.
#[derive(Debug, Clone, PartialEq)]
pub struct IqStream {
    pub samples: Vec<Complex64>,
    /// Sample period T_s in seconds (metadata only; the DSP works in
    /// cycles/sample throughout).
    pub sample_period: f64,
    /// Samples per symbol for linearly modulated streams; `None` for AM,
    /// which carries no symbol clock.
    pub oversampling: Option<usize>,
    /// Set by [`normalize`]: mean |sample|^2 is 1.
    pub normalized: bool,
}

/// Default symbol rate, 9.6 kHz.
pub const DEFAULT_SYMBOL_RATE_HZ: f64 = 9600.0;

impl IqStream {
    pub fn new(samples: Vec<Complex64>, sample_period: f64, oversampling: Option<usize>) -> Self {
        Self {
            samples,
            sample_period,
            oversampling,
            normalized: false,
        }
    }

    /// Sample period for the default 9.6 kHz symbol rate at oversampling `p`.
    pub fn default_sample_period(p: usize) -> f64 {
        1.0 / (DEFAULT_SYMBOL_RATE_HZ * p as f64)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Mean |sample|^2.
    pub fn power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }
}

/// Scale a stream to unit mean power. Returns the normalized stream and the
/// amplitude scale factor `g` that was divided out, so that a noise variance
/// measured on the input can be rescaled consistently as `sigma^2 / g^2`.
pub fn normalize(y: &IqStream) -> Result<(IqStream, f64)> {
    if y.is_empty() {
        return Err(Error::ZeroPower);
    }
    let p = y.power();
    if p <= 0.0 {
        return Err(Error::ZeroPower);
    }
    let g = p.sqrt();
    let samples = y.samples.iter().map(|s| s / g).collect();
    Ok((
        IqStream {
            samples,
            sample_period: y.sample_period,
            oversampling: y.oversampling,
            normalized: true,
        },
        g,
    ))
}

/// The impairment tuple applied to one channel realization.
///
/// `noise_var` is the realized linear noise variance; it is filled in by
/// [`crate::channel::apply_channel`] and consumed by the noise-compensated
/// feature estimates, which assume sigma^2 is known a priori.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Complex channel gain c0.
    pub c0_re: f64,
    pub c0_im: f64,
    /// Normalized frequency offset f_o * T in cycles per symbol.
    pub fo_t: f64,
    /// Phase offset in radians.
    pub theta: f64,
    /// Timing offset as a fraction of the symbol period, in [-0.5, 0.5].
    pub epsilon: f64,
    /// Target SNR in dB (`f64::INFINITY` for noiseless).
    pub snr_db: f64,
    /// Realized linear noise variance (set when the channel is applied).
    #[serde(default)]
    pub noise_var: f64,
}

impl ChannelParams {
    /// Identity channel: unit gain, no offsets, no noise.
    pub fn identity() -> Self {
        Self {
            c0_re: 1.0,
            c0_im: 0.0,
            fo_t: 0.0,
            theta: 0.0,
            epsilon: 0.0,
            snr_db: f64::INFINITY,
            noise_var: 0.0,
        }
    }

    pub fn c0(&self) -> Complex64 {
        Complex64::new(self.c0_re, self.c0_im)
    }

    pub fn with_snr(mut self, snr_db: f64) -> Self {
        self.snr_db = snr_db;
        self
    }
}
