//! First-order cyclostationarity: cyclic-mean estimation and the
//! presence test for cycle frequencies.
//!
//! A candidate cycle frequency `alpha` is accepted when the test statistic
//! `J = K * m Q^{-1} m^T` exceeds the threshold, where `m` stacks the real
//! and imaginary parts of the estimated cyclic mean and `Q` is the
//! consistent estimate of their asymptotic covariance, built by smoothing
//! products of the finite Fourier transform of the samples around `alpha`.
//! Under the null (no cycle frequency) `J` is asymptotically chi-square
//! with two degrees of freedom, so a threshold `gamma` corresponds to a
//! false-alarm probability of `exp(-gamma / 2)` per candidate.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::iq::IqStream;

/// Default acceptance threshold: false-alarm probability 5e-4 per candidate.
pub const DEFAULT_GAMMA: f64 = 15.202;
/// Default spectral smoothing window length (rectangular).
pub const DEFAULT_SPECTRAL_WINDOW: usize = 61;
/// Default pre-filter level on the cyclic-mean power |m|^2. On a unit-power
/// stream this is the fraction of received power concentrated in the
/// candidate line, which makes the value scale-free.
pub const DEFAULT_PRE_THRESHOLD: f64 = 0.05;

/// Cyclic-mean magnitudes over the full DFT grid of candidate frequencies.
#[derive(Debug, Clone)]
pub struct CyclicMeanScan {
    /// Grid frequencies in cycles/sample, ascending in [-0.5, 0.5).
    pub alphas: Vec<f64>,
    /// |m^alpha| per grid frequency.
    pub magnitudes: Vec<f64>,
    /// Sample count used.
    pub k: usize,
    spectrum: Vec<Complex64>,
}

/// Outcome of the presence test at one candidate frequency.
#[derive(Debug, Clone)]
pub struct CycleTestResult {
    pub alpha: f64,
    pub j_k: f64,
    pub gamma: f64,
    pub is_cycle: bool,
    /// The 2x2 covariance estimate [[q11, q12], [q12, q22]].
    pub q_y: [[f64; 2]; 2],
    pub l_s: usize,
}

/// Exact finite-sum cyclic mean `(1/K) sum y(i) exp(-j 2 pi alpha i)`.
pub fn cyclic_mean(y: &IqStream, alpha: f64) -> Complex64 {
    let k = y.samples.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, s) in y.samples.iter().enumerate() {
        acc += s * Complex64::from_polar(1.0, -2.0 * PI * alpha * i as f64);
    }
    acc / k as f64
}

/// Evaluate the cyclic mean on all K DFT grid frequencies with one FFT.
pub fn scan_cyclic_means(y: &IqStream) -> CyclicMeanScan {
    let k = y.samples.len();
    let mut buf = y.samples.clone();
    FftPlanner::new().plan_fft_forward(k).process(&mut buf);
    // buf[b] = sum y(i) exp(-j 2 pi b i / K) = K * m^(b/K)
    let mut alphas = Vec::with_capacity(k);
    let mut magnitudes = Vec::with_capacity(k);
    // Ascending alpha order: bins (K+1)/2..K map to negatives first.
    let split = k.div_ceil(2);
    for b in (split..k).chain(0..split) {
        let alpha = if b < split {
            b as f64 / k as f64
        } else {
            b as f64 / k as f64 - 1.0
        };
        alphas.push(alpha);
        magnitudes.push(buf[b].norm() / k as f64);
    }
    CyclicMeanScan {
        alphas,
        magnitudes,
        k,
        spectrum: buf,
    }
}

impl CyclicMeanScan {
    /// |m^alpha| at the grid index in ascending-alpha order.
    pub fn magnitude(&self, idx: usize) -> f64 {
        self.magnitudes[idx]
    }

    /// FFT bin index for the ascending-alpha position.
    fn fft_bin(&self, idx: usize) -> usize {
        let split = self.k.div_ceil(2);
        let neg = self.k - split;
        if idx < neg {
            split + idx
        } else {
            idx - neg
        }
    }
}

/// The presence test at a single candidate frequency.
///
/// `l_s` must be odd and below the sample count; the spectral window is
/// rectangular.
pub fn dg_statistic(
    y: &IqStream,
    alpha: f64,
    l_s: usize,
    gamma: f64,
) -> Result<CycleTestResult> {
    let k = y.samples.len();
    validate_window(l_s, k)?;
    // F(alpha + s/K) for s in [-(L-1)/2, (L-1)/2].
    let half = (l_s as isize - 1) / 2;
    let grid_bin = alpha * k as f64;
    let f_vals: Vec<Complex64> = if (grid_bin - grid_bin.round()).abs() < 1e-9 {
        // On-grid: reuse one DFT.
        let scan = fft_of(&y.samples);
        let b0 = (grid_bin.round() as isize).rem_euclid(k as isize) as usize;
        (-half..=half)
            .map(|s| scan[(b0 as isize + s).rem_euclid(k as isize) as usize])
            .collect()
    } else {
        (-half..=half)
            .map(|s| finite_ft(&y.samples, alpha + s as f64 / k as f64))
            .collect()
    };
    let m_hat = f_vals[half as usize] / k as f64;
    test_from_f_values(&f_vals, m_hat, k, l_s, alpha, gamma)
}

fn fft_of(samples: &[Complex64]) -> Vec<Complex64> {
    let mut buf = samples.to_vec();
    FftPlanner::new().plan_fft_forward(samples.len()).process(&mut buf);
    buf
}

fn finite_ft(samples: &[Complex64], f: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, s) in samples.iter().enumerate() {
        acc += s * Complex64::from_polar(1.0, -2.0 * PI * f * i as f64);
    }
    acc
}

fn validate_window(l_s: usize, k: usize) -> Result<()> {
    if l_s % 2 == 0 || l_s >= k {
        return Err(Error::InvalidParameter(format!(
            "spectral window length {l_s} must be odd and below the sample count {k}"
        )));
    }
    Ok(())
}

/// Assemble Q20/Q21 from the L_s Fourier-transform values centred on the
/// candidate and run the quadratic-form test.
fn test_from_f_values(
    f_vals: &[Complex64],
    m_hat: Complex64,
    k: usize,
    l_s: usize,
    alpha: f64,
    gamma: f64,
) -> Result<CycleTestResult> {
    let norm = 1.0 / (l_s as f64 * k as f64);
    let mut q20 = Complex64::new(0.0, 0.0);
    let mut q21 = 0.0;
    let n = f_vals.len();
    let center = n / 2;
    for s in 0..n {
        // f_vals[s] = F(alpha + (s - half)/K); the mirrored index holds
        // F(alpha - (s - half)/K). The s = 0 unconjugated product is the
        // square of the tested statistic itself; folding it into the
        // covariance estimate correlates the two and biases the test
        // conservative, so the conjugate part skips the center bin.
        if s != center {
            q20 += f_vals[s] * f_vals[n - 1 - s];
        }
        q21 += f_vals[s].norm_sqr();
    }
    let q20 = q20 * norm;
    let q21 = q21 * norm;

    // Covariance of [Re m, Im m], scaled by K: the conjugate part shifts
    // variance between the two axes, the proper part sets the common level.
    let q11 = (q20.re + q21) / 2.0;
    let q22 = (q21 - q20.re) / 2.0;
    let q12 = q20.im / 2.0;
    let det = q11 * q22 - q12 * q12;
    if !(det.is_finite() && det > 0.0 && q11 > 0.0) {
        return Err(Error::DegenerateCovariance(alpha));
    }
    let m = [m_hat.re, m_hat.im];
    // m Q^{-1} m^T via the 2x2 inverse.
    let quad = (m[0] * m[0] * q22 - 2.0 * m[0] * m[1] * q12 + m[1] * m[1] * q11) / det;
    let j_k = k as f64 * quad;
    Ok(CycleTestResult {
        alpha,
        j_k,
        gamma,
        is_cycle: j_k > gamma,
        q_y: [[q11, q12], [q12, q22]],
        l_s,
    })
}

/// One detected (merged) cycle frequency.
#[derive(Debug, Clone)]
pub struct DetectedCycle {
    pub alpha: f64,
    pub j_k: f64,
    pub magnitude: f64,
}

/// Scan the full candidate grid, pre-filter by cyclic-mean power, test the
/// survivors, and merge test hits on adjacent grid bins (spectral leakage
/// of a single line) into one cycle frequency.
///
/// Requires a normalized stream: the pre-filter level is calibrated to a
/// unit-power input.
pub fn count_cycle_frequencies(
    y: &IqStream,
    pre_threshold: f64,
    gamma: f64,
    l_s: usize,
) -> Result<(usize, Vec<DetectedCycle>)> {
    let k = y.samples.len();
    validate_window(l_s, k)?;
    let scan = scan_cyclic_means(y);
    let half = (l_s as isize - 1) / 2;

    // Confirmed grid indices in ascending-alpha order.
    let mut confirmed: Vec<(usize, CycleTestResult)> = Vec::new();
    for idx in 0..k {
        let mag = scan.magnitudes[idx];
        if mag * mag <= pre_threshold {
            continue;
        }
        let b0 = scan.fft_bin(idx) as isize;
        let f_vals: Vec<Complex64> = (-half..=half)
            .map(|s| scan.spectrum[(b0 + s).rem_euclid(k as isize) as usize])
            .collect();
        let m_hat = scan.spectrum[b0 as usize] / k as f64;
        match test_from_f_values(&f_vals, m_hat, k, l_s, scan.alphas[idx], gamma) {
            Ok(res) if res.is_cycle => confirmed.push((idx, res)),
            Ok(_) => {}
            // A degenerate covariance yields no decision for this alpha.
            Err(Error::DegenerateCovariance(_)) => {}
            Err(e) => return Err(e),
        }
    }

    // Merge runs of adjacent confirmed bins; keep the strongest member.
    let mut detected: Vec<DetectedCycle> = Vec::new();
    let mut i = 0;
    while i < confirmed.len() {
        let mut j = i;
        while j + 1 < confirmed.len() && confirmed[j + 1].0 - confirmed[j].0 <= 1 {
            j += 1;
        }
        let best = confirmed[i..=j]
            .iter()
            .max_by(|a, b| {
                scan.magnitudes[a.0]
                    .partial_cmp(&scan.magnitudes[b.0])
                    .unwrap()
            })
            .unwrap();
        detected.push(DetectedCycle {
            alpha: best.1.alpha,
            j_k: best.1.j_k,
            magnitude: scan.magnitudes[best.0],
        });
        i = j + 1;
    }
    Ok((detected.len(), detected))
}

/// Per-grid-frequency diagnostics for the full scan: magnitude plus the
/// test statistic at every bin (not just pre-filter survivors).
pub fn scan_diagnostics(
    y: &IqStream,
    gamma: f64,
    l_s: usize,
) -> Result<Vec<(f64, f64, Option<CycleTestResult>)>> {
    let k = y.samples.len();
    validate_window(l_s, k)?;
    let scan = scan_cyclic_means(y);
    let half = (l_s as isize - 1) / 2;
    let mut out = Vec::with_capacity(k);
    for idx in 0..k {
        let b0 = scan.fft_bin(idx) as isize;
        let f_vals: Vec<Complex64> = (-half..=half)
            .map(|s| scan.spectrum[(b0 + s).rem_euclid(k as isize) as usize])
            .collect();
        let m_hat = scan.spectrum[b0 as usize] / k as f64;
        let res = test_from_f_values(&f_vals, m_hat, k, l_s, scan.alphas[idx], gamma).ok();
        out.push((scan.alphas[idx], scan.magnitudes[idx], res));
    }
    Ok(out)
}
