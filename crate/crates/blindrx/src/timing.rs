//! Feedforward symbol-timing estimation and T-spaced symbol extraction.
//!
//! The estimator forms the spectral line of |r|^2 at the symbol rate and
//! reads the timing offset off its phase; the sample grid is then decimated
//! at the phase closest to the symbol instants. No interpolation is done
//! here — closed-loop tracking lives in [`crate::rx`].

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::iq::IqStream;
use crate::pulse::PulseShape;

/// Result of the square-law timing estimator.
#[derive(Debug, Clone)]
pub struct TimingEstimate {
    /// Fractional timing offset in symbol periods, in [-0.5, 0.5).
    pub epsilon_hat: f64,
    /// Sample index offset in [0, P) closest to the symbol instants.
    pub best_phase: usize,
    /// The complex spectral coefficient the estimate was read from.
    pub x_m: Complex64,
}

/// T-spaced complex symbol estimates.
#[derive(Debug, Clone)]
pub struct SymbolSequence {
    pub symbols: Vec<Complex64>,
    /// The sample phase used for decimation.
    pub source_phase: usize,
}

impl SymbolSequence {
    pub fn new(symbols: Vec<Complex64>) -> Self {
        Self {
            symbols,
            source_phase: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// Matched filtering with group-delay compensation: the output has the same
/// length as the input and symbol centers stay on their input sample
/// indices.
pub fn matched_filter(y: &IqStream, pulse: &PulseShape) -> IqStream {
    let n = y.samples.len();
    let delay = pulse.delay();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (i, o) in out.iter_mut().enumerate() {
        // Full convolution evaluated at i + delay.
        let mut acc = Complex64::new(0.0, 0.0);
        let t = i + delay;
        let lo = t.saturating_sub(pulse.taps.len() - 1);
        let hi = t.min(n - 1);
        for j in lo..=hi {
            acc += y.samples[j] * pulse.taps[t - j];
        }
        *o = acc;
    }
    IqStream {
        samples: out,
        sample_period: y.sample_period,
        oversampling: y.oversampling,
        normalized: false,
    }
}

/// Estimate the fractional timing offset from `n_symbols * p` samples of the
/// matched-filter output.
pub fn estimate_timing(r: &IqStream, p: usize, n_symbols: usize) -> Result<TimingEstimate> {
    if p < 4 {
        return Err(Error::InvalidParameter(format!(
            "oversampling {p} below 4"
        )));
    }
    let total = p * n_symbols;
    if r.samples.len() < total {
        return Err(Error::InsufficientSymbols {
            got: r.samples.len() / p,
            need: n_symbols,
        });
    }
    let mut x_m = Complex64::new(0.0, 0.0);
    let mut energy = 0.0;
    for (i, s) in r.samples[..total].iter().enumerate() {
        let phase = -2.0 * PI * i as f64 / p as f64;
        let sq = s.norm_sqr();
        energy += sq;
        x_m += sq * Complex64::from_polar(1.0, phase);
    }
    if x_m.norm() < 1e-12 * energy.max(1.0) {
        return Err(Error::NoTimingTone);
    }
    let mut epsilon_hat = -x_m.arg() / (2.0 * PI);
    if epsilon_hat >= 0.5 {
        epsilon_hat -= 1.0;
    }
    let phase = round_half_toward_zero(epsilon_hat * p as f64) as isize;
    let best_phase = phase.rem_euclid(p as isize) as usize;
    Ok(TimingEstimate {
        epsilon_hat,
        best_phase,
        x_m,
    })
}

fn round_half_toward_zero(x: f64) -> f64 {
    let t = x.trunc();
    let f = x - t;
    if f.abs() > 0.5 {
        t + f.signum()
    } else {
        t
    }
}

/// Decimate the matched-filter output at the estimated symbol phase,
/// discarding `trim` symbols at each edge (filter transients).
pub fn extract_symbols(
    r: &IqStream,
    est: &TimingEstimate,
    trim: usize,
) -> Result<SymbolSequence> {
    let p = r
        .oversampling
        .ok_or_else(|| Error::InvalidParameter("stream has no symbol clock".into()))?;
    let avail = (r.samples.len().saturating_sub(est.best_phase)) / p;
    if avail < 2 * trim {
        return Err(Error::InsufficientSymbols {
            got: 0,
            need: 100,
        });
    }
    let symbols: Vec<Complex64> = (trim..avail - trim)
        .map(|k| r.samples[est.best_phase + k * p])
        .collect();
    if symbols.len() < 100 {
        return Err(Error::InsufficientSymbols {
            got: symbols.len(),
            need: 100,
        });
    }
    Ok(SymbolSequence {
        symbols,
        source_phase: est.best_phase,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::apply_channel;
    use crate::iq::{normalize, ChannelParams};
    use crate::modulation::ModClass;
    use crate::synth::{synth_linear, synth_linear_with_symbols};

    fn tx_pulse() -> PulseShape {
        PulseShape::rrc(0.5, 8, 8).unwrap()
    }

    fn rx_pulse() -> PulseShape {
        PulseShape::rrc(0.5, 4, 8).unwrap()
    }

    #[test]
    fn impulse_response_is_delay_compensated_taps() {
        let pulse = rx_pulse();
        let mut samples = vec![Complex64::new(0.0, 0.0); 128];
        samples[64] = Complex64::new(1.0, 0.0);
        let y = IqStream::new(samples, 1.0, Some(8));
        let out = matched_filter(&y, &pulse);
        let delay = pulse.delay();
        for (m, &tap) in pulse.taps.iter().enumerate() {
            let idx = 64 + m - delay;
            assert!(
                (out.samples[idx].re - tap).abs() < 1e-12,
                "tap {m} mismatched"
            );
        }
    }

    #[test]
    fn noiseless_bpsk_symbol_centers_are_antipodal() {
        let (x, symbols) =
            synth_linear_with_symbols(ModClass::Psk2, 200, &tx_pulse(), 21).unwrap();
        let r = matched_filter(&x, &rx_pulse());
        // Post-filter symbol amplitude is sqrt(P); skip edge transients.
        let scale = 8f64.sqrt();
        for k in 8..192 {
            let v = r.samples[k * 8] / scale;
            let s = symbols[k];
            assert!(
                (v - s).norm() < 0.02,
                "symbol {k}: {v} vs {s}"
            );
        }
    }

    #[test]
    fn filtered_noise_variance_is_tap_energy_scaled() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let sigma2 = 0.5;
        let std = (sigma2 / 2.0_f64).sqrt();
        let samples: Vec<Complex64> = (0..400_000)
            .map(|_| {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(a * std, b * std)
            })
            .collect();
        let y = IqStream::new(samples, 1.0, Some(8));
        let pulse = rx_pulse();
        let out = matched_filter(&y, &pulse);
        let tap_energy: f64 = pulse.taps.iter().map(|t| t * t).sum();
        let measured = out.power();
        assert!(
            (measured / (sigma2 * tap_energy) - 1.0).abs() < 0.02,
            "measured {measured}"
        );
    }

    fn timing_setup(epsilon: f64, snr_db: f64, seed: u64) -> IqStream {
        let x = synth_linear(ModClass::Psk2, 1000, &tx_pulse(), seed).unwrap();
        let mut params = ChannelParams::identity().with_snr(snr_db);
        params.epsilon = epsilon;
        let y = apply_channel(&x, &mut params, seed ^ 0xdead).unwrap();
        let (yn, _) = normalize(&y).unwrap();
        matched_filter(&yn, &rx_pulse())
    }

    #[test]
    fn zero_offset_estimates_near_zero() {
        let r = timing_setup(0.0, f64::INFINITY, 9);
        let est = estimate_timing(&r, 8, 1000).unwrap();
        assert!(est.epsilon_hat.abs() < 0.01, "eps_hat {}", est.epsilon_hat);
        assert_eq!(est.best_phase, 0);
    }

    #[test]
    fn known_delay_is_recovered_at_10db() {
        let r = timing_setup(0.25, 10.0, 17);
        let est = estimate_timing(&r, 8, 1000).unwrap();
        assert!(
            (est.epsilon_hat - 0.25).abs() < 0.02,
            "eps_hat {}",
            est.epsilon_hat
        );
        assert_eq!(est.best_phase, 2);
    }

    #[test]
    fn half_symbol_offsets_wrap_to_same_estimate() {
        let ra = timing_setup(-0.5, f64::INFINITY, 31);
        let rb = timing_setup(0.5, f64::INFINITY, 31);
        let ea = estimate_timing(&ra, 8, 1000).unwrap();
        let eb = estimate_timing(&rb, 8, 1000).unwrap();
        let diff = (ea.epsilon_hat - eb.epsilon_hat).rem_euclid(1.0);
        let wrapped = diff.min(1.0 - diff);
        assert!(wrapped < 0.02, "estimates differ: {} vs {}", ea.epsilon_hat, eb.epsilon_hat);
    }

    #[test]
    fn estimate_is_rotation_invariant() {
        let r = timing_setup(0.3, 10.0, 23);
        let rotated = IqStream {
            samples: r
                .samples
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    s * Complex64::from_polar(1.0, 2.0 * PI * 0.013 * i as f64 + 0.9)
                })
                .collect(),
            ..r.clone()
        };
        let ea = estimate_timing(&r, 8, 1000).unwrap();
        let eb = estimate_timing(&rotated, 8, 1000).unwrap();
        // |r|^2 removes the rotation exactly.
        assert_eq!(ea.epsilon_hat, eb.epsilon_hat);
        assert_eq!(ea.best_phase, eb.best_phase);
    }

    #[test]
    fn constant_envelope_has_no_tone() {
        let samples = vec![Complex64::new(1.0, 0.0); 8000];
        let y = IqStream::new(samples, 1.0, Some(8));
        assert!(matches!(
            estimate_timing(&y, 8, 1000),
            Err(Error::NoTimingTone)
        ));
    }

    #[test]
    fn extraction_count_and_alignment() {
        let r = timing_setup(0.0, f64::INFINITY, 40);
        let est = estimate_timing(&r, 8, 1000).unwrap();
        let d = extract_symbols(&r, &est, 2).unwrap();
        assert_eq!(d.len(), 996);
    }

    #[test]
    fn ideal_extraction_matches_transmitted_symbols() {
        let (x, symbols) =
            synth_linear_with_symbols(ModClass::Psk4, 1000, &tx_pulse(), 55).unwrap();
        let r = matched_filter(&x, &rx_pulse());
        let est = estimate_timing(&r, 8, 1000).unwrap();
        let d = extract_symbols(&r, &est, 2).unwrap();
        let scale = 8f64.sqrt();
        for (k, v) in d.symbols.iter().enumerate() {
            let s = symbols[k + 2];
            assert!(
                (v / scale - s).norm() < 0.02,
                "symbol {k}: {} vs {s}",
                v / scale
            );
        }
    }

    #[test]
    fn extra_sample_delay_shifts_best_phase_by_one() {
        let ra = timing_setup(0.125, f64::INFINITY, 61); // 1 sample at P=8
        let rb = timing_setup(0.25, f64::INFINITY, 61);
        let ea = estimate_timing(&ra, 8, 1000).unwrap();
        let eb = estimate_timing(&rb, 8, 1000).unwrap();
        assert_eq!((ea.best_phase + 1) % 8, eb.best_phase);
    }

    #[test]
    fn cfo_preserves_symbol_magnitudes() {
        // A residual-scale offset rotates the constellation without moving
        // the spectrum off the matched filter.
        let x = synth_linear(ModClass::Psk8, 300, &tx_pulse(), 77).unwrap();
        let mut params = ChannelParams::identity();
        params.fo_t = 0.02;
        let y = apply_channel(&x, &mut params, 0).unwrap();
        let r = matched_filter(&y, &rx_pulse());
        let est = estimate_timing(&r, 8, 300).unwrap();
        let d = extract_symbols(&r, &est, 2).unwrap();
        let scale = 8f64.sqrt();
        for v in &d.symbols {
            assert!(
                (v.norm() / scale - 1.0).abs() < 0.02,
                "magnitude {}",
                v.norm() / scale
            );
        }
    }
}
