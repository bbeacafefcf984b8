//! Differential processing and noise-compensated moment features.
//!
//! A frequency offset turns into a constant rotation under the lag-1
//! conjugate product, and every feature below is built from magnitudes of
//! moments of that product (or of |d| itself), so the feature values are
//! invariant to channel rotations. Knowledge of the noise variance lets the
//! second/fourth-order moments of the noisy symbols be mapped back to the
//! moments of the underlying alphabet.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timing::SymbolSequence;

/// Noise-compensated feature estimates for one record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureVector {
    /// Compensated fourth-order magnitude moment estimate.
    pub m42: f64,
    /// |second moment of the differential product|, compensated.
    pub m20dp: f64,
    /// |fourth moment of the differential product|, compensated.
    pub m40dp: f64,
    /// Raw mean power of the symbol estimates (diagnostic).
    pub m21d: f64,
    pub n_symbols: usize,
    pub noise_var: f64,
}

/// Raw sample moments prior to noise compensation.
#[derive(Debug, Clone, Copy)]
pub struct RawMoments {
    /// mean |d|^2
    pub m21d: f64,
    /// mean |d|^4
    pub m42d: f64,
    /// mean d_dp^2 (complex)
    pub m20dp: Complex64,
    /// mean d_dp^4 (complex)
    pub m40dp: Complex64,
    pub n_symbols: usize,
}

/// Lag-1 conjugate product: output length is input length minus one.
pub fn differential(d: &SymbolSequence) -> SymbolSequence {
    let symbols = d
        .symbols
        .windows(2)
        .map(|w| w[1] * w[0].conj())
        .collect();
    SymbolSequence {
        symbols,
        source_phase: d.source_phase,
    }
}

/// Sample moments of the symbol sequence and its differential product.
pub fn raw_moments(d: &SymbolSequence) -> Result<RawMoments> {
    let n = d.symbols.len();
    if n < 100 {
        return Err(Error::InsufficientSymbols { got: n, need: 100 });
    }
    let m21d = d.symbols.iter().map(|s| s.norm_sqr()).sum::<f64>() / n as f64;
    let m42d = d.symbols.iter().map(|s| s.norm_sqr().powi(2)).sum::<f64>() / n as f64;
    let dp = differential(d);
    let nd = dp.symbols.len() as f64;
    let m20dp = dp.symbols.iter().map(|s| s * s).sum::<Complex64>() / nd;
    let m40dp = dp.symbols.iter().map(|s| s.powi(4)).sum::<Complex64>() / nd;
    Ok(RawMoments {
        m21d,
        m42d,
        m20dp,
        m40dp,
        n_symbols: n,
    })
}

/// Map raw moments of the noisy symbol estimates back to alphabet-level
/// features using the known noise variance:
///
/// ```text
/// m42   = (M42d - 4 (M21d - s2) s2 - 2 s2^2) / (M21d - s2)^2
/// m20dp = |M20dp| / (M21d - s2)^2
/// m40dp = |M40dp| / (M21d - s2)^4
/// ```
///
/// Fails when the estimated signal power `M21d - s2` collapses below 5% of
/// the measured power, where division would explode the features.
pub fn compensate(raw: &RawMoments, sigma2: f64) -> Result<FeatureVector> {
    let d = raw.m21d - sigma2;
    if d <= 0.05 * raw.m21d {
        return Err(Error::SnrTooLow(d));
    }
    let d2 = d * d;
    let m42 = (raw.m42d - 4.0 * d * sigma2 - 2.0 * sigma2 * sigma2) / d2;
    let m20dp = raw.m20dp.norm() / d2;
    let m40dp = raw.m40dp.norm() / (d2 * d2);
    Ok(FeatureVector {
        m42,
        m20dp,
        m40dp,
        m21d: raw.m21d,
        n_symbols: raw.n_symbols,
        noise_var: sigma2,
    })
}

/// Convenience: moments plus compensation in one step.
pub fn estimate_features(d: &SymbolSequence, sigma2: f64) -> Result<FeatureVector> {
    compensate(&raw_moments(d)?, sigma2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulation::{make_constellation, ModClass};
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};
    use std::f64::consts::PI;

    fn draw_symbols(class: ModClass, n: usize, seed: u64) -> SymbolSequence {
        let c = make_constellation(class).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SymbolSequence::new((0..n).map(|_| *c.points.choose(&mut rng).unwrap()).collect())
    }

    fn add_noise(d: &SymbolSequence, sigma2: f64, seed: u64) -> SymbolSequence {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let std = (sigma2 / 2.0_f64).sqrt();
        SymbolSequence::new(
            d.symbols
                .iter()
                .map(|s| {
                    let a: f64 = StandardNormal.sample(&mut rng);
                    let b: f64 = StandardNormal.sample(&mut rng);
                    s + Complex64::new(a * std, b * std)
                })
                .collect(),
        )
    }

    #[test]
    fn differential_of_constant_is_power() {
        let c = Complex64::new(1.5, -2.0);
        let d = SymbolSequence::new(vec![c; 16]);
        let dp = differential(&d);
        assert_eq!(dp.len(), 15);
        for v in &dp.symbols {
            assert!((v - Complex64::new(c.norm_sqr(), 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn differential_turns_cfo_into_constant_rotation() {
        let omega = 0.37;
        let d = SymbolSequence::new(
            (0..64)
                .map(|i| Complex64::from_polar(1.0, omega * i as f64))
                .collect(),
        );
        let dp = differential(&d);
        let expect = Complex64::from_polar(1.0, omega);
        for v in &dp.symbols {
            assert!((v - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn differential_of_bpsk_matches_elementwise_oracle() {
        let d = draw_symbols(ModClass::Psk2, 256, 3);
        let dp = differential(&d);
        for (i, v) in dp.symbols.iter().enumerate() {
            let expect = d.symbols[i + 1] * d.symbols[i].conj();
            assert_eq!(*v, expect);
        }
    }

    #[test]
    fn unit_circle_moments_are_exactly_one() {
        let d = draw_symbols(ModClass::Psk8, 1000, 9);
        let m = raw_moments(&d).unwrap();
        assert!((m.m21d - 1.0).abs() < 1e-12);
        assert!((m.m42d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn qam16_m42_matches_alphabet_value() {
        let d = draw_symbols(ModClass::Qam16, 100_000, 12);
        let m = raw_moments(&d).unwrap();
        assert!((m.m42d - 1.32).abs() < 0.02, "m42d = {}", m.m42d);
    }

    #[test]
    fn qpsk_differential_moments() {
        let d = draw_symbols(ModClass::Psk4, 100_000, 15);
        let m = raw_moments(&d).unwrap();
        assert!(m.m20dp.norm() < 0.05);
        assert!((m.m40dp.norm() - 1.0).abs() < 0.05);
    }

    #[test]
    fn zero_noise_compensation_is_identity_scaling() {
        let d = draw_symbols(ModClass::Qam16, 10_000, 21);
        let raw = raw_moments(&d).unwrap();
        let f = compensate(&raw, 0.0).unwrap();
        assert!((f.m42 - raw.m42d / raw.m21d.powi(2)).abs() < 1e-12);
        assert!((f.m20dp - raw.m20dp.norm() / raw.m21d.powi(2)).abs() < 1e-12);
        assert!((f.m40dp - raw.m40dp.norm() / raw.m21d.powi(4)).abs() < 1e-12);
    }

    #[test]
    fn bpsk_at_5db_compensates_to_alphabet_values() {
        // The fourth-order differential moment is the noisiest estimate at
        // this SNR; a million draws keep all three inside the tolerance.
        let sigma2 = 10f64.powf(-0.5);
        let clean = draw_symbols(ModClass::Psk2, 1_000_000, 33);
        let noisy = add_noise(&clean, sigma2, 34);
        let f = estimate_features(&noisy, sigma2).unwrap();
        assert!((f.m42 - 1.0).abs() < 0.05, "m42 = {}", f.m42);
        assert!((f.m20dp - 1.0).abs() < 0.05, "m20dp = {}", f.m20dp);
        assert!((f.m40dp - 1.0).abs() < 0.05, "m40dp = {}", f.m40dp);
    }

    #[test]
    fn qam16_at_10db_m40dp() {
        let sigma2 = 0.1;
        let clean = draw_symbols(ModClass::Qam16, 100_000, 35);
        let noisy = add_noise(&clean, sigma2, 36);
        let f = estimate_features(&noisy, sigma2).unwrap();
        assert!((f.m40dp - 0.4624).abs() < 0.05, "m40dp = {}", f.m40dp);
    }

    #[test]
    fn features_are_rotation_invariant() {
        let sigma2 = 0.1;
        let noisy = add_noise(&draw_symbols(ModClass::Qam16, 5000, 40), sigma2, 41);
        let rotated = SymbolSequence::new(
            noisy
                .symbols
                .iter()
                .enumerate()
                .map(|(i, s)| s * Complex64::from_polar(1.0, 2.0 * PI * 0.01 * i as f64 + 0.8))
                .collect(),
        );
        let fa = estimate_features(&noisy, sigma2).unwrap();
        let fb = estimate_features(&rotated, sigma2).unwrap();
        // |.| and differential processing absorb the rotation up to float
        // rounding in the complex products.
        assert!((fa.m42 - fb.m42).abs() < 1e-9);
        assert!((fa.m20dp - fb.m20dp).abs() < 1e-9);
        assert!((fa.m40dp - fb.m40dp).abs() < 1e-9);
    }

    #[test]
    fn features_are_scale_covariant() {
        let sigma2 = 0.2;
        let noisy = add_noise(&draw_symbols(ModClass::Psk4, 4000, 50), sigma2, 51);
        let a = 2.5;
        let scaled = SymbolSequence::new(noisy.symbols.iter().map(|s| s * a).collect());
        let raw = raw_moments(&noisy).unwrap();
        let raw_s = raw_moments(&scaled).unwrap();
        let a2 = a * a;
        assert!((raw_s.m21d - raw.m21d * a2).abs() < 1e-9);
        assert!((raw_s.m42d - raw.m42d * a2 * a2).abs() < 1e-9);
        assert!((raw_s.m20dp - raw.m20dp * a2 * a2).norm() < 1e-9);
        assert!((raw_s.m40dp - raw.m40dp * a2.powi(4)).norm() < 1e-6);
        // Compensating the scaled sequence with the scaled noise variance
        // reproduces the original features.
        let fa = compensate(&raw, sigma2).unwrap();
        let fb = compensate(&raw_s, sigma2 * a2).unwrap();
        assert!((fa.m42 - fb.m42).abs() < 1e-9);
        assert!((fa.m20dp - fb.m20dp).abs() < 1e-9);
        assert!((fa.m40dp - fb.m40dp).abs() < 1e-9);
    }

    #[test]
    fn compensation_identity_against_brute_force() {
        // For s a constellation symbol plus CN(0, sigma2), the analytic
        // map from noisy moments to alphabet moments must agree with the
        // brute-force average within Monte Carlo error.
        let sigma2 = 0.3;
        let clean = draw_symbols(ModClass::Qam16, 1_000_000, 60);
        let noisy = add_noise(&clean, sigma2, 61);
        let raw = raw_moments(&noisy).unwrap();
        // Left side: E|s|^4 from the alphabet. Right side: compensated.
        let f = compensate(&raw, sigma2).unwrap();
        assert!((f.m42 - 1.32).abs() < 0.01, "m42 = {}", f.m42);
        // And the forward direction of the same identity.
        let predicted_m42d = 1.32 + 4.0 * sigma2 + 2.0 * sigma2 * sigma2;
        assert!(
            (raw.m42d - predicted_m42d).abs() < 0.01,
            "m42d = {} vs {predicted_m42d}",
            raw.m42d
        );
    }

    #[test]
    fn denominator_collapse_is_an_error() {
        let d = draw_symbols(ModClass::Psk4, 1000, 70);
        let raw = raw_moments(&d).unwrap();
        // Claimed noise variance at 99% of the measured power.
        assert!(matches!(
            compensate(&raw, raw.m21d * 0.99),
            Err(Error::SnrTooLow(_))
        ));
    }

    #[test]
    fn short_sequences_are_rejected() {
        let d = draw_symbols(ModClass::Psk2, 50, 71);
        assert!(matches!(
            raw_moments(&d),
            Err(Error::InsufficientSymbols { .. })
        ));
    }
}
