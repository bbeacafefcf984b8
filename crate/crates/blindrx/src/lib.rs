//! Blind modulation classification and demodulation for the five-class
//! problem {AM, 2-PSK, 4-PSK, 8-PSK, 16-QAM} under flat fading, frequency,
//! phase, and timing offsets.
//!
//! The pipeline: first-order cyclostationarity separates AM from the
//! zero-mean linear modulations; a square-law timing estimator recovers the
//! symbol grid; differential, noise-compensated moments drive a four-stage
//! decision tree. A companion receiver blindly demodulates AM (envelope
//! detection) and 2-PSK packets (Gardner and Costas loops plus frame
//! synchronization).
//!
//! ```
//! use blindrx::prelude::*;
//!
//! let pulse = PulseShape::rrc(0.5, 8, 8).unwrap();
//! let x = synth_linear(ModClass::Psk4, 1000, &pulse, 7).unwrap();
//! let mut ch = ChannelParams::identity().with_snr(10.0);
//! ch.fo_t = 0.05;
//! let y = apply_channel(&x, &mut ch, 42).unwrap();
//! let (yn, scale) = normalize(&y).unwrap();
//!
//! let rx = PulseShape::rrc(0.5, 4, 8).unwrap();
//! let sigma2 = ch.noise_var / (scale * scale);
//! let decision = classify(&yn, sigma2, &rx, &ClassifierThresholds::default()).unwrap();
//! assert_eq!(decision.label, ModClass::Psk4);
//! ```

pub mod channel;
pub mod classifier;
pub mod cyclo;
pub mod error;
pub mod features;
pub mod harness;
pub mod io;
pub mod iq;
pub mod modulation;
pub mod pulse;
pub mod rx;
pub mod synth;
pub mod timing;

pub use error::{Error, Result};

/// The commonly used surface in one import.
pub mod prelude {
    pub use crate::channel::apply_channel;
    pub use crate::classifier::{classify, classify_features, ClassDecision, ClassifierThresholds};
    pub use crate::cyclo::{count_cycle_frequencies, cyclic_mean, dg_statistic};
    pub use crate::error::{Error, Result};
    pub use crate::features::{compensate, differential, estimate_features, raw_moments, FeatureVector};
    pub use crate::harness::{confusion, run_trial, sweep, ConfusionMatrix, TrialConfig};
    pub use crate::iq::{normalize, ChannelParams, IqStream};
    pub use crate::modulation::{make_constellation, Constellation, ModClass};
    pub use crate::pulse::PulseShape;
    pub use crate::rx::{
        costas_loop, envelope_detect, frame_detect, gardner_loop, receive, DemodOutput,
        FrameFormat, LoopConfig, ReceiverConfig,
    };
    pub use crate::synth::{synth_am, synth_linear, synth_linear_with_symbols, AmMessage, Tone};
    pub use crate::timing::{estimate_timing, extract_symbols, matched_filter, SymbolSequence};
}

// The guide chapters double as doc-tests so their code stays honest.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            mod $name {}
        };
    }
    chapter!(signals_and_channels, "../../../book/src/signals-and-channels.md");
    chapter!(symbol_timing, "../../../book/src/symbol-timing.md");
    chapter!(cyclostationarity, "../../../book/src/cyclostationarity.md");
    chapter!(moment_features, "../../../book/src/moment-features.md");
    chapter!(decision_tree, "../../../book/src/decision-tree.md");
    chapter!(packet_receiver, "../../../book/src/packet-receiver.md");
    chapter!(monte_carlo, "../../../book/src/monte-carlo.md");
}
