//! The blind receiver: cycle-count dispatch between AM and 2-PSK, envelope
//! detection on the AM side, and a matched filter + Gardner timing loop +
//! Costas loop + frame parser on the 2-PSK side.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cyclo::count_cycle_frequencies;
use crate::error::{Error, Result};
use crate::iq::{normalize, IqStream};
use crate::pulse::PulseShape;
use crate::timing::{matched_filter, SymbolSequence};

/// Closed-loop bandwidths (normalized to the symbol rate) and damping.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoopConfig {
    pub gardner_bw: f64,
    pub costas_bw: f64,
    pub damping: f64,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            gardner_bw: 0.01,
            costas_bw: 0.1,
            damping: 0.707,
        }
    }
}

/// Receiver-side knowledge: loop dynamics, the receive pulse, and the AM
/// audio band.
#[derive(Debug, Clone)]
pub struct ReceiverConfig {
    pub loops: LoopConfig,
    pub rx_pulse: PulseShape,
    /// Centered running-mean window for envelope DC removal, in samples
    /// (one period of the lowest expected message tone).
    pub dc_window: usize,
    /// AM audio low-pass cutoff in cycles/sample.
    pub am_cutoff: f64,
    pub thresholds: crate::classifier::ClassifierThresholds,
}

impl Default for ReceiverConfig {
    fn default() -> Self {
        Self {
            loops: LoopConfig::default(),
            rx_pulse: PulseShape::rrc(0.5, 4, 8).expect("default pulse"),
            dc_window: 333,
            am_cutoff: 0.02,
            thresholds: crate::classifier::ClassifierThresholds::default(),
        }
    }
}

/// Frame layout for the 2-PSK packet: alternating preamble, start-of-frame
/// delimiter, 16-bit payload length in bytes (most significant bit first),
/// then the payload bits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameFormat {
    pub preamble_len: usize,
    pub sfd: u16,
    /// Minimum matching bits (of 16) for an SFD hit.
    pub sfd_min_match: u32,
}

impl Default for FrameFormat {
    fn default() -> Self {
        Self {
            preamble_len: 64,
            sfd: 0xF3A5,
            sfd_min_match: 14,
        }
    }
}

impl FrameFormat {
    /// Preamble + SFD + header + payload as 0/1 bits.
    pub fn packet_bits(&self, payload: &[u8]) -> Vec<u8> {
        let mut bits = Vec::with_capacity(self.preamble_len + 32 + payload.len() * 8);
        for i in 0..self.preamble_len {
            bits.push(if i % 2 == 0 { 1 } else { 0 });
        }
        push_u16_bits(&mut bits, self.sfd);
        push_u16_bits(&mut bits, payload.len() as u16);
        for &byte in payload {
            for b in (0..8).rev() {
                bits.push((byte >> b) & 1);
            }
        }
        bits
    }

    /// Hamming distance between the SFD and every 16-bit alignment of a
    /// continued preamble; the margin keeps the correlator from firing
    /// inside the preamble.
    pub fn preamble_margin(&self) -> u32 {
        let mut min_dist = u32::MAX;
        for offset in 0..2u16 {
            let alt: u16 = if offset == 0 { 0xAAAA } else { 0x5555 };
            min_dist = min_dist.min((self.sfd ^ alt).count_ones());
            min_dist = min_dist.min((!self.sfd ^ alt).count_ones());
        }
        min_dist
    }
}

fn push_u16_bits(bits: &mut Vec<u8>, v: u16) {
    for b in (0..16).rev() {
        bits.push(((v >> b) & 1) as u8);
    }
}

/// Map packet bits onto antipodal symbols (bit 1 -> +1).
pub fn bits_to_symbols(bits: &[u8]) -> Vec<Complex64> {
    bits.iter()
        .map(|&b| Complex64::new(if b == 1 { 1.0 } else { -1.0 }, 0.0))
        .collect()
}

/// What the receiver recovered.
#[derive(Debug, Clone)]
pub enum DemodOutput {
    AmAudio {
        samples: Vec<f64>,
    },
    BpskPacket {
        /// Payload bits (empty unless `header_ok`).
        bits: Vec<u8>,
        sfd_found: bool,
        header_ok: bool,
        payload_len: usize,
        timing_converged: bool,
    },
}

// ---------------------------------------------------------------------------
// Loop-filter design
// ---------------------------------------------------------------------------

/// Proportional and integral gains for a second-order loop with the given
/// normalized noise bandwidth, damping, and detector gain.
fn pi_gains(bn: f64, zeta: f64, kd: f64) -> (f64, f64) {
    let theta = bn / (zeta + 1.0 / (4.0 * zeta));
    let denom = 1.0 + 2.0 * zeta * theta + theta * theta;
    let g1 = 4.0 * zeta * theta / denom / kd;
    let g2 = 4.0 * theta * theta / denom / kd;
    (g1, g2)
}

// ---------------------------------------------------------------------------
// Gardner timing loop
// ---------------------------------------------------------------------------

/// Gardner loop output: one symbol per strobe plus convergence metadata.
#[derive(Debug, Clone)]
pub struct GardnerOutput {
    pub symbols: SymbolSequence,
    /// False when the detector error variance failed to shrink over the
    /// first 200 symbols.
    pub converged: bool,
}

/// Parabolic interpolation at fractional index `t`.
fn interp(x: &[Complex64], t: f64) -> Complex64 {
    let n = t.round() as isize;
    let mu = t - n as f64;
    let len = x.len() as isize;
    let at = |i: isize| -> Complex64 {
        if i >= 0 && i < len {
            x[i as usize]
        } else {
            Complex64::new(0.0, 0.0)
        }
    };
    let (xm, x0, xp) = (at(n - 1), at(n), at(n + 1));
    x0 + (xp - xm) * (0.5 * mu) + (xp - x0 * 2.0 + xm) * (0.5 * mu * mu)
}

/// Decision-independent closed-loop symbol synchronization on the
/// matched-filter output.
///
/// The timing-error detector correlates the symbol-rate difference with the
/// mid-symbol sample; a proportional-plus-integrator filter steers the
/// strobe period.
pub fn gardner_loop(r: &IqStream, config: &LoopConfig) -> Result<GardnerOutput> {
    gardner_loop_from(r, config, 0.0)
}

/// Gardner loop with the first strobe offset by `init_offset` samples,
/// e.g. from a feedforward acquisition estimate.
pub fn gardner_loop_from(
    r: &IqStream,
    config: &LoopConfig,
    init_offset: f64,
) -> Result<GardnerOutput> {
    let p = r
        .oversampling
        .ok_or_else(|| Error::InvalidParameter("stream has no symbol clock".into()))? as f64;
    if p < 2.0 {
        return Err(Error::InvalidParameter(
            "Gardner loop needs at least 2 samples/symbol".into(),
        ));
    }
    let x = &r.samples;
    // Detector gain of the power-normalized Gardner TED on the 0.5-roll-off
    // raised-cosine cascade (measured S-curve slope per symbol of offset).
    let kd = 1.5;
    let (g1, g2) = pi_gains(config.gardner_bw, config.damping, kd);

    let mut symbols = Vec::with_capacity(x.len() / p as usize + 2);
    let mut errors: Vec<f64> = Vec::new();
    let mut pos = p + init_offset;
    let mut integ = 0.0;
    let mut prev = Complex64::new(0.0, 0.0);
    let mut power = x.iter().take(4 * p as usize).map(|s| s.norm_sqr()).sum::<f64>()
        / (4.0 * p).min(x.len() as f64);
    let mut first = true;
    while pos < (x.len() as f64 - 2.0) {
        let cur = interp(x, pos);
        let mid = interp(x, pos - p / 2.0);
        let mut v = 0.0;
        if !first {
            power = 0.99 * power + 0.01 * cur.norm_sqr();
            let e = (((cur - prev) * mid.conj()).re / power.max(1e-12)).clamp(-0.5, 0.5);
            errors.push(e);
            integ += g2 * e;
            v = g1 * e + integ;
        }
        symbols.push(cur);
        prev = cur;
        first = false;
        // Positive error means the strobes run late; shorten the interval.
        pos += p * (1.0 - v).clamp(0.5, 1.5);
    }

    // Convergence heuristic on the detector error variance.
    let converged = if errors.len() >= 200 {
        let var = |s: &[f64]| s.iter().map(|e| e * e).sum::<f64>() / s.len() as f64;
        let early = var(&errors[..100]);
        let late = var(&errors[100..200]);
        late <= early * 1.5
    } else {
        true
    };

    Ok(GardnerOutput {
        symbols: SymbolSequence::new(symbols),
        converged,
    })
}

// ---------------------------------------------------------------------------
// Costas loop
// ---------------------------------------------------------------------------

/// Costas loop state after processing a sequence.
#[derive(Debug, Clone)]
pub struct CostasOutput {
    pub symbols: SymbolSequence,
    /// Final loop frequency in cycles/symbol.
    pub freq: f64,
    /// Final phase in radians.
    pub phase: f64,
}

/// Decision-directed carrier recovery for antipodal symbols: the detector
/// `sign(Re z) * Im z` leaves the inherent half-turn ambiguity, which the
/// frame correlator resolves downstream.
pub fn costas_loop(d: &SymbolSequence, config: &LoopConfig) -> CostasOutput {
    let (g1, g2) = pi_gains(config.costas_bw, config.damping, 1.0);
    let mut phase = 0.0f64;
    let mut freq = 0.0f64; // radians/symbol
    let mut out = Vec::with_capacity(d.symbols.len());
    let mut power = d
        .symbols
        .iter()
        .take(8)
        .map(|s| s.norm_sqr())
        .sum::<f64>()
        / 8.0f64.min(d.symbols.len() as f64);
    for &s in &d.symbols {
        let z = s * Complex64::from_polar(1.0, -phase);
        out.push(z);
        power = 0.99 * power + 0.01 * z.norm_sqr();
        let e = z.re.signum() * z.im / power.max(1e-12);
        freq += g2 * e;
        phase += freq + g1 * e;
    }
    CostasOutput {
        symbols: SymbolSequence {
            symbols: out,
            source_phase: d.source_phase,
        },
        freq: freq / (2.0 * std::f64::consts::PI),
        phase,
    }
}

// ---------------------------------------------------------------------------
// Frame detection
// ---------------------------------------------------------------------------

/// Hard-decide bits, search both polarities for the SFD, and extract the
/// length-prefixed payload.
pub fn frame_detect(d: &SymbolSequence, fmt: &FrameFormat) -> DemodOutput {
    let bits: Vec<u8> = d.symbols.iter().map(|s| (s.re > 0.0) as u8).collect();
    let sfd_bits: Vec<u8> = {
        let mut v = Vec::with_capacity(16);
        push_u16_bits(&mut v, fmt.sfd);
        v
    };

    // Best correlation over every offset and both polarities.
    let mut best: Option<(u32, usize, u8)> = None;
    if bits.len() >= 16 {
        for offset in 0..=bits.len() - 16 {
            for pol in 0..2u8 {
                let matches = sfd_bits
                    .iter()
                    .zip(&bits[offset..offset + 16])
                    .filter(|(a, b)| **a == **b ^ pol)
                    .count() as u32;
                if best.map_or(true, |(m, o, _)| matches > m || (matches == m && offset < o)) {
                    best = Some((matches, offset, pol));
                }
            }
        }
    }

    let Some((matches, offset, pol)) = best else {
        return DemodOutput::BpskPacket {
            bits: Vec::new(),
            sfd_found: false,
            header_ok: false,
            payload_len: 0,
            timing_converged: true,
        };
    };
    if matches < fmt.sfd_min_match {
        return DemodOutput::BpskPacket {
            bits: Vec::new(),
            sfd_found: false,
            header_ok: false,
            payload_len: 0,
            timing_converged: true,
        };
    }

    let header_start = offset + 16;
    let mut payload_len = 0usize;
    let mut header_ok = false;
    let mut payload = Vec::new();
    if bits.len() >= header_start + 16 {
        let mut len = 0u16;
        for i in 0..16 {
            len = (len << 1) | (bits[header_start + i] ^ pol) as u16;
        }
        payload_len = len as usize;
        let payload_start = header_start + 16;
        if bits.len() >= payload_start + payload_len * 8 {
            header_ok = true;
            payload = bits[payload_start..payload_start + payload_len * 8]
                .iter()
                .map(|b| b ^ pol)
                .collect();
        }
    }

    DemodOutput::BpskPacket {
        bits: payload,
        sfd_found: true,
        header_ok,
        payload_len,
        timing_converged: true,
    }
}

// ---------------------------------------------------------------------------
// Envelope detection
// ---------------------------------------------------------------------------

/// |y| with a centered running mean subtracted. The window should span one
/// period of the lowest message tone so the mean tracks only the carrier
/// level.
pub fn envelope_detect(y: &IqStream, dc_window: usize) -> Vec<f64> {
    let env: Vec<f64> = y.samples.iter().map(|s| s.norm()).collect();
    let n = env.len();
    let half = (dc_window / 2).max(1);
    // Prefix sums for O(1) windowed means.
    let mut prefix = vec![0.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + env[i];
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            let mean = (prefix[hi] - prefix[lo]) / (hi - lo) as f64;
            env[i] - mean
        })
        .collect()
}

/// Delay-compensated Hann-windowed-sinc low-pass FIR.
pub fn lowpass(x: &[f64], cutoff: f64, taps: usize) -> Vec<f64> {
    use std::f64::consts::PI;
    let taps = if taps % 2 == 0 { taps + 1 } else { taps };
    let half = (taps / 2) as isize;
    let mut h: Vec<f64> = (-half..=half)
        .map(|k| {
            let t = k as f64;
            let s = if t == 0.0 {
                2.0 * cutoff
            } else {
                (2.0 * PI * cutoff * t).sin() / (PI * t)
            };
            let w = 0.5 * (1.0 + (PI * t / (half as f64 + 1.0)).cos());
            s * w
        })
        .collect();
    let sum: f64 = h.iter().sum();
    for v in &mut h {
        *v /= sum;
    }
    let n = x.len() as isize;
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for (j, &w) in h.iter().enumerate() {
                let k = i + (j as isize - half);
                if k >= 0 && k < n {
                    acc += x[k as usize] * w;
                }
            }
            acc
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Top-level receiver
// ---------------------------------------------------------------------------

/// Blind receive: count first-order cycle frequencies once, then either
/// envelope-detect (AM) or run the full synchronization chain (2-PSK).
pub fn receive(y: &IqStream, config: &ReceiverConfig, fmt: &FrameFormat) -> Result<DemodOutput> {
    let (yn, _) = if y.normalized {
        (y.clone(), 1.0)
    } else {
        normalize(y)?
    };
    let th = &config.thresholds;
    let (count, _) = count_cycle_frequencies(&yn, th.pre_threshold, th.gamma, th.l_s)?;
    if count > 0 {
        let env = envelope_detect(&yn, config.dc_window);
        let audio = lowpass(&env, config.am_cutoff, 129);
        return Ok(DemodOutput::AmAudio { samples: audio });
    }
    let r = matched_filter(&yn, &config.rx_pulse);
    // Feedforward acquisition seeds the tracking loop so the preamble is
    // spent settling the carrier, not pulling in half a symbol of timing.
    let p = config.rx_pulse.oversampling;
    let init = crate::timing::estimate_timing(&r, p, r.samples.len() / p)
        .map(|est| est.epsilon_hat * p as f64)
        .unwrap_or(0.0);
    let timing = gardner_loop_from(&r, &config.loops, init)?;
    let carrier = costas_loop(&timing.symbols, &config.loops);
    let mut out = frame_detect(&carrier.symbols, fmt);
    if let DemodOutput::BpskPacket {
        timing_converged, ..
    } = &mut out
    {
        *timing_converged = timing.converged;
    }
    Ok(out)
}
