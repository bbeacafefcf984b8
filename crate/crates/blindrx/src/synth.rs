//! Transmit waveform synthesis for the five modulation classes.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::iq::IqStream;
use crate::modulation::{make_constellation, ModClass};
use crate::pulse::PulseShape;

/// One sinusoidal component of the AM message.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tone {
    /// Frequency in cycles per sample.
    pub freq: f64,
    pub amplitude: f64,
    pub phase: f64,
}

/// The analog message carried by AM: `1 + Ka * m(t)` with a multitone m(t).
///
/// The invariant `sum of amplitudes <= 1` together with `ka <= 1` keeps the
/// envelope strictly positive (no overmodulation).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AmMessage {
    /// Modulation index Ka.
    pub ka: f64,
    pub tones: Vec<Tone>,
}

impl Default for AmMessage {
    /// Three-tone message, amplitudes summing to 1, Ka = 0.5.
    fn default() -> Self {
        Self {
            ka: 0.5,
            tones: vec![
                Tone {
                    freq: 0.003,
                    amplitude: 0.5,
                    phase: 0.0,
                },
                Tone {
                    freq: 0.007,
                    amplitude: 0.3,
                    phase: 1.0,
                },
                Tone {
                    freq: 0.0125,
                    amplitude: 0.2,
                    phase: 2.0,
                },
            ],
        }
    }
}

impl AmMessage {
    /// m(t) evaluated at integer sample indices 0..n.
    pub fn message_samples(&self, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| {
                self.tones
                    .iter()
                    .map(|t| t.amplitude * (2.0 * PI * t.freq * i as f64 + t.phase).cos())
                    .sum()
            })
            .collect()
    }

    /// Lowest tone frequency, used to size DC-removal windows downstream.
    pub fn lowest_freq(&self) -> f64 {
        self.tones
            .iter()
            .map(|t| t.freq)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Pulse-shaped linear modulation: symbols drawn i.i.d. uniform over the
/// class alphabet, upsampled by `pulse.oversampling` and shaped with the
/// transmit pulse. Symbol k's pulse peak lands on sample `k * P`.
///
/// The output is scaled so that the steady-state mean power is 1.
/// Returns the stream together with the drawn symbol sequence (the
/// loopback oracle for receiver tests).
pub fn synth_linear_with_symbols(
    class: ModClass,
    n_symbols: usize,
    pulse: &PulseShape,
    seed: u64,
) -> Result<(IqStream, Vec<Complex64>)> {
    if !class.is_digital() {
        return Err(Error::InvalidParameter(
            "synth_linear requires a digital class".into(),
        ));
    }
    if n_symbols < pulse.span {
        return Err(Error::InvalidParameter(format!(
            "n_symbols {} below pulse span {}",
            n_symbols, pulse.span
        )));
    }
    let constellation = make_constellation(class)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let symbols: Vec<Complex64> = (0..n_symbols)
        .map(|_| *constellation.points.choose(&mut rng).expect("non-empty"))
        .collect();
    let stream = shape_symbols(&symbols, pulse);
    Ok((stream, symbols))
}

/// [`synth_linear_with_symbols`] without the symbol log.
pub fn synth_linear(
    class: ModClass,
    n_symbols: usize,
    pulse: &PulseShape,
    seed: u64,
) -> Result<IqStream> {
    synth_linear_with_symbols(class, n_symbols, pulse, seed).map(|(s, _)| s)
}

/// Shape an explicit symbol sequence (used by the packet transmitter).
pub fn shape_symbols(symbols: &[Complex64], pulse: &PulseShape) -> IqStream {
    let p = pulse.oversampling;
    let n_out = symbols.len() * p;
    let delay = pulse.delay() as isize;
    // Unit-energy taps give stream power 1/P for unit-power symbols; the
    // sqrt(P) gain restores unit stream power.
    let gain = (p as f64).sqrt();
    let mut out = vec![Complex64::new(0.0, 0.0); n_out];
    for (k, &s) in symbols.iter().enumerate() {
        let center = (k * p) as isize;
        for (m, &tap) in pulse.taps.iter().enumerate() {
            let i = center + m as isize - delay;
            if i >= 0 && (i as usize) < n_out {
                out[i as usize] += s * (tap * gain);
            }
        }
    }
    IqStream::new(
        out,
        IqStream::default_sample_period(p),
        Some(p),
    )
}

/// AM synthesis: the real-valued baseband `1 + Ka * m(t)`.
pub fn synth_am(msg: &AmMessage, n_samples: usize) -> Result<IqStream> {
    if msg.ka > 1.0 || msg.ka < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "modulation index {} outside [0, 1]",
            msg.ka
        )));
    }
    let m = msg.message_samples(n_samples);
    let envelope: Vec<f64> = m.iter().map(|&mi| 1.0 + msg.ka * mi).collect();
    let min_env = envelope.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_env <= 0.0 {
        return Err(Error::Overmodulation(min_env));
    }
    let samples = envelope
        .into_iter()
        .map(|e| Complex64::new(e, 0.0))
        .collect();
    Ok(IqStream::new(
        samples,
        IqStream::default_sample_period(8),
        None,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tx_pulse() -> PulseShape {
        PulseShape::rrc(0.5, 8, 8).unwrap()
    }

    #[test]
    fn linear_length_and_power() {
        let (y, _) = synth_linear_with_symbols(ModClass::Psk2, 1000, &tx_pulse(), 7).unwrap();
        assert_eq!(y.len(), 8000);
        assert!(
            (y.power() - 1.0).abs() < 0.05,
            "mean power {} not within 5% of 1",
            y.power()
        );
    }

    #[test]
    fn linear_is_deterministic() {
        let a = synth_linear(ModClass::Qam16, 64, &tx_pulse(), 42).unwrap();
        let b = synth_linear(ModClass::Qam16, 64, &tx_pulse(), 42).unwrap();
        assert_eq!(a.samples, b.samples);
        let c = synth_linear(ModClass::Qam16, 64, &tx_pulse(), 43).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn linear_matches_direct_convolution() {
        // Direct time-domain convolution of the impulse train with the taps.
        let pulse = PulseShape::rrc(0.5, 4, 8).unwrap();
        let (y, symbols) = synth_linear_with_symbols(ModClass::Psk4, 4, &pulse, 3).unwrap();
        let p = 8usize;
        let delay = pulse.delay() as isize;
        let gain = (p as f64).sqrt();
        for i in 0..y.len() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, &s) in symbols.iter().enumerate() {
                let idx = i as isize - (k * p) as isize + delay;
                if idx >= 0 && (idx as usize) < pulse.taps.len() {
                    acc += s * pulse.taps[idx as usize] * gain;
                }
            }
            assert!(
                (acc - y.samples[i]).norm() < 1e-12,
                "mismatch at sample {i}"
            );
        }
        // The first span/2 symbols sit in the filter ramp-up: power there is
        // below the steady-state level.
        let ramp: f64 = y.samples[..8].iter().map(|s| s.norm_sqr()).sum();
        let steady: f64 = y.samples[16..24].iter().map(|s| s.norm_sqr()).sum();
        assert!(ramp < steady);
    }

    #[test]
    fn am_zero_index_is_constant_one() {
        let msg = AmMessage {
            ka: 0.0,
            ..Default::default()
        };
        let y = synth_am(&msg, 256).unwrap();
        for s in &y.samples {
            assert!((s.re - 1.0).abs() < 1e-15);
            assert_eq!(s.im, 0.0);
        }
    }

    #[test]
    fn am_single_tone_extrema() {
        let msg = AmMessage {
            ka: 0.5,
            tones: vec![Tone {
                freq: 0.01,
                amplitude: 1.0,
                phase: 0.0,
            }],
        };
        let y = synth_am(&msg, 1000).unwrap();
        let min = y.samples.iter().map(|s| s.re).fold(f64::INFINITY, f64::min);
        let max = y
            .samples
            .iter()
            .map(|s| s.re)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((min - 0.5).abs() < 1e-9, "min {min}");
        assert!((max - 1.5).abs() < 1e-9, "max {max}");
    }

    #[test]
    fn am_three_tone_matches_samplewise_oracle() {
        let msg = AmMessage::default();
        let y = synth_am(&msg, 512).unwrap();
        for (i, s) in y.samples.iter().enumerate() {
            let m: f64 = msg
                .tones
                .iter()
                .map(|t| t.amplitude * (2.0 * PI * t.freq * i as f64 + t.phase).cos())
                .sum();
            assert!((s.re - (1.0 + 0.5 * m)).abs() < 1e-12);
            assert_eq!(s.im, 0.0);
        }
    }

    #[test]
    fn am_overmodulation_is_rejected() {
        let msg = AmMessage {
            ka: 1.0,
            tones: vec![Tone {
                freq: 0.01,
                amplitude: 1.0,
                phase: PI, // envelope touches zero at t = 0 region
            }],
        };
        // ka * amplitude = 1 brings the envelope to (near) zero; with the
        // cosine landing exactly on -1 somewhere it crosses.
        let r = synth_am(&msg, 1000);
        assert!(matches!(r, Err(Error::Overmodulation(_))), "{r:?}");
    }
}
