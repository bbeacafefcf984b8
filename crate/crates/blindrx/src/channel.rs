//! Flat-fading channel with frequency/phase/timing offsets and AWGN.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::iq::{ChannelParams, IqStream};

/// Oversampling assumed when a stream carries no symbol clock (AM): the
/// timing offset is still expressed as a fraction of the nominal symbol
/// period.
pub const DEFAULT_AM_OVERSAMPLING: usize = 8;

const DELAY_TAPS: usize = 16;

/// Apply the impairment model: fractional delay by `epsilon * T`, complex
/// gain `c0`, frequency offset rotation, phase offset, then AWGN sized so
/// that the ratio of the measured signal-term sample variance to the noise
/// variance equals `snr_db`. `params.noise_var` receives the realized
/// variance.
pub fn apply_channel(
    x: &IqStream,
    params: &mut ChannelParams,
    seed: u64,
) -> Result<IqStream> {
    if params.epsilon.abs() > 0.5 {
        return Err(Error::TimingOffsetRange(params.epsilon));
    }
    let p = x.oversampling.unwrap_or(DEFAULT_AM_OVERSAMPLING) as f64;
    let delayed = fractional_delay(&x.samples, params.epsilon * p);

    let fo_per_sample = params.fo_t / p;
    let c0 = params.c0();
    let mut signal: Vec<Complex64> = delayed
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let phase = 2.0 * PI * fo_per_sample * i as f64 + params.theta;
            c0 * Complex64::from_polar(1.0, phase) * s
        })
        .collect();

    let signal_var =
        signal.iter().map(|s| s.norm_sqr()).sum::<f64>() / signal.len().max(1) as f64;
    let sigma2 = if params.snr_db.is_finite() {
        signal_var / 10f64.powf(params.snr_db / 10.0)
    } else {
        0.0
    };
    params.noise_var = sigma2;

    if sigma2 > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let std = (sigma2 / 2.0).sqrt();
        for s in &mut signal {
            let nr: f64 = StandardNormal.sample(&mut rng);
            let ni: f64 = StandardNormal.sample(&mut rng);
            *s += Complex64::new(nr * std, ni * std);
        }
    }

    Ok(IqStream {
        samples: signal,
        sample_period: x.sample_period,
        oversampling: x.oversampling,
        normalized: false,
    })
}

/// Delay a sequence by a (possibly fractional) number of samples using a
/// 16-tap Hann-windowed sinc interpolator. Integer shifts are exact.
pub fn fractional_delay(x: &[Complex64], shift: f64) -> Vec<Complex64> {
    let n0 = shift.floor() as isize;
    let mu = shift - shift.floor();
    if mu.abs() < 1e-12 {
        // Pure integer shift.
        return (0..x.len())
            .map(|i| sample_at(x, i as isize - n0))
            .collect();
    }
    let half = (DELAY_TAPS / 2) as isize;
    let mut taps = Vec::with_capacity(DELAY_TAPS);
    for k in (1 - half)..=half {
        let t = k as f64 - mu;
        let w = 0.5 * (1.0 + (PI * t / half as f64).cos());
        taps.push(sinc(t) * w);
    }
    let norm: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= norm;
    }
    (0..x.len())
        .map(|i| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &w) in taps.iter().enumerate() {
                let k = (1 - half) + j as isize;
                acc += sample_at(x, i as isize - n0 - k) * w;
            }
            acc
        })
        .collect()
}

fn sample_at(x: &[Complex64], i: isize) -> Complex64 {
    if i >= 0 && (i as usize) < x.len() {
        x[i as usize]
    } else {
        Complex64::new(0.0, 0.0)
    }
}

fn sinc(t: f64) -> f64 {
    if t.abs() < 1e-12 {
        1.0
    } else {
        (PI * t).sin() / (PI * t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulation::ModClass;
    use crate::pulse::PulseShape;
    use crate::synth::synth_linear;

    #[test]
    fn identity_channel_is_exact() {
        let pulse = PulseShape::rrc(0.5, 8, 8).unwrap();
        let x = synth_linear(ModClass::Psk4, 128, &pulse, 1).unwrap();
        let mut params = ChannelParams::identity();
        let y = apply_channel(&x, &mut params, 0).unwrap();
        for (a, b) in y.samples.iter().zip(x.samples.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
        assert_eq!(params.noise_var, 0.0);
    }

    #[test]
    fn realized_noise_variance_matches_target() {
        // Noise sequence = channel output minus the deterministic signal
        // term; its sample variance must sit within 1% of 10^(-0.5) for a
        // unit-power input at 5 dB.
        let pulse = PulseShape::rrc(0.5, 8, 8).unwrap();
        let x = synth_linear(ModClass::Psk2, 8192, &pulse, 11).unwrap();
        let mut clean_params = ChannelParams::identity();
        let clean = apply_channel(&x, &mut clean_params, 0).unwrap();
        let mut params = ChannelParams::identity().with_snr(5.0);
        let y = apply_channel(&x, &mut params, 99).unwrap();
        let n = y.len() as f64;
        let measured: f64 = y
            .samples
            .iter()
            .zip(clean.samples.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            / n;
        let sig_var = clean.power();
        let target = sig_var * 10f64.powf(-0.5);
        assert!(
            (measured / target - 1.0).abs() < 0.01,
            "measured {measured}, target {target}"
        );
        assert!((params.noise_var / target - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unit_modulus_gain_preserves_magnitude() {
        let pulse = PulseShape::rrc(0.5, 8, 8).unwrap();
        let x = synth_linear(ModClass::Psk8, 256, &pulse, 5).unwrap();
        let mut params = ChannelParams::identity();
        let (re, im) = ((PI / 3.0).cos(), (PI / 3.0).sin());
        params.c0_re = re;
        params.c0_im = im;
        params.fo_t = 0.05;
        params.theta = 0.7;
        let y = apply_channel(&x, &mut params, 0).unwrap();
        for (a, b) in y.samples.iter().zip(x.samples.iter()) {
            assert!((a.norm() - b.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_out_of_range_epsilon() {
        let pulse = PulseShape::rrc(0.5, 4, 8).unwrap();
        let x = synth_linear(ModClass::Psk2, 16, &pulse, 1).unwrap();
        let mut params = ChannelParams::identity();
        params.epsilon = 0.6;
        assert!(matches!(
            apply_channel(&x, &mut params, 0),
            Err(Error::TimingOffsetRange(_))
        ));
    }

    #[test]
    fn integer_delay_is_exact_shift() {
        let x: Vec<Complex64> = (0..32).map(|i| Complex64::new(i as f64, -(i as f64))).collect();
        let y = fractional_delay(&x, 3.0);
        for i in 3..32 {
            assert!((y[i] - x[i - 3]).norm() < 1e-12);
        }
    }

    #[test]
    fn fractional_delay_of_tone_shifts_phase() {
        // Delaying exp(j 2 pi f i) by d samples multiplies by exp(-j 2 pi f d).
        let f = 0.02;
        let x: Vec<Complex64> = (0..512)
            .map(|i| Complex64::from_polar(1.0, 2.0 * PI * f * i as f64))
            .collect();
        let d = 2.37;
        let y = fractional_delay(&x, d);
        let expected_rot = Complex64::from_polar(1.0, -2.0 * PI * f * d);
        for i in 32..480 {
            let expect = x[i] * expected_rot;
            assert!(
                (y[i] - expect).norm() < 1e-3,
                "sample {i}: {} vs {expect}",
                y[i]
            );
        }
    }
}
