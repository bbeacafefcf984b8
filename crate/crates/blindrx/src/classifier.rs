//! The four-stage decision tree.
//!
//! Stage 1 separates AM from the digital subclass by counting first-order
//! cycle frequencies on the raw normalized record (AM carries a spectral
//! line; zero-mean linear modulations do not). The surviving digital
//! records are matched-filtered, symbol-synchronized, and classified on
//! noise-compensated moment features:
//!
//! * Stage 2: `m20dp >= 0.5` -> 2-PSK
//! * Stage 3: `m42 >= 1.155` -> 16-QAM
//! * Stage 4: `m40dp > 0.5` -> 4-PSK, else 8-PSK

use serde::{Deserialize, Serialize};

use crate::cyclo::{
    count_cycle_frequencies, DEFAULT_GAMMA, DEFAULT_PRE_THRESHOLD, DEFAULT_SPECTRAL_WINDOW,
};
use crate::error::Result;
use crate::features::{estimate_features, FeatureVector};
use crate::iq::IqStream;
use crate::modulation::ModClass;
use crate::pulse::PulseShape;
use crate::timing::{estimate_timing, extract_symbols, matched_filter};

/// Decision thresholds. The defaults separate the alphabet-level feature
/// values: PSK's unit m20dp/m40dp against the zero of higher orders, and
/// 16-QAM's 1.32 fourth moment against PSK's 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifierThresholds {
    pub t_m20dp: f64,
    pub t_m42: f64,
    pub t_m40dp: f64,
    pub gamma: f64,
    pub pre_threshold: f64,
    pub l_s: usize,
}

impl Default for ClassifierThresholds {
    fn default() -> Self {
        Self {
            t_m20dp: 0.5,
            t_m42: 1.155,
            t_m40dp: 0.5,
            gamma: DEFAULT_GAMMA,
            pre_threshold: DEFAULT_PRE_THRESHOLD,
            l_s: DEFAULT_SPECTRAL_WINDOW,
        }
    }
}

/// One branch taken through the tree.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: u8,
    pub branch: String,
    pub value: f64,
}

/// Replayable classification outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassDecision {
    pub label: ModClass,
    pub stage_trace: Vec<StageRecord>,
    /// Present on the digital path; AM is decided before features exist.
    pub features: Option<FeatureVector>,
}

/// Pure tree evaluation from a cycle count and a feature vector.
pub fn classify_features(
    cycle_count: usize,
    features: &FeatureVector,
    thresholds: &ClassifierThresholds,
) -> ClassDecision {
    let mut trace = vec![StageRecord {
        stage: 1,
        branch: if cycle_count > 0 { "am" } else { "digital" }.into(),
        value: cycle_count as f64,
    }];
    if cycle_count > 0 {
        return ClassDecision {
            label: ModClass::Am,
            stage_trace: trace,
            features: Some(features.clone()),
        };
    }
    let label = run_feature_stages(features, thresholds, &mut trace);
    ClassDecision {
        label,
        stage_trace: trace,
        features: Some(features.clone()),
    }
}

fn run_feature_stages(
    f: &FeatureVector,
    th: &ClassifierThresholds,
    trace: &mut Vec<StageRecord>,
) -> ModClass {
    if f.m20dp >= th.t_m20dp {
        trace.push(StageRecord {
            stage: 2,
            branch: "psk2".into(),
            value: f.m20dp,
        });
        return ModClass::Psk2;
    }
    trace.push(StageRecord {
        stage: 2,
        branch: "subclass".into(),
        value: f.m20dp,
    });
    if f.m42 >= th.t_m42 {
        trace.push(StageRecord {
            stage: 3,
            branch: "qam16".into(),
            value: f.m42,
        });
        return ModClass::Qam16;
    }
    trace.push(StageRecord {
        stage: 3,
        branch: "psk-subclass".into(),
        value: f.m42,
    });
    if f.m40dp > th.t_m40dp {
        trace.push(StageRecord {
            stage: 4,
            branch: "psk4".into(),
            value: f.m40dp,
        });
        ModClass::Psk4
    } else {
        trace.push(StageRecord {
            stage: 4,
            branch: "psk8".into(),
            value: f.m40dp,
        });
        ModClass::Psk8
    }
}

/// Full blind classification of a normalized record.
///
/// Stage 1 runs on the raw samples (AM has no pulse shaping to match);
/// stages 2-4 run on symbols extracted after matched filtering with
/// `rx_pulse`. `sigma2` is the noise variance in the units of `y`.
pub fn classify(
    y: &IqStream,
    sigma2: f64,
    rx_pulse: &PulseShape,
    thresholds: &ClassifierThresholds,
) -> Result<ClassDecision> {
    let (count, _detected) =
        count_cycle_frequencies(y, thresholds.pre_threshold, thresholds.gamma, thresholds.l_s)?;
    let mut trace = vec![StageRecord {
        stage: 1,
        branch: if count > 0 { "am" } else { "digital" }.into(),
        value: count as f64,
    }];
    if count > 0 {
        return Ok(ClassDecision {
            label: ModClass::Am,
            stage_trace: trace,
            features: None,
        });
    }
    let p = rx_pulse.oversampling;
    let r = matched_filter(y, rx_pulse);
    let est = estimate_timing(&r, p, r.samples.len() / p)?;
    let d = extract_symbols(&r, &est, rx_pulse.span / 2)?;
    let features = estimate_features(&d, sigma2)?;
    let label = run_feature_stages(&features, thresholds, &mut trace);
    Ok(ClassDecision {
        label,
        stage_trace: trace,
        features: Some(features),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(m42: f64, m20dp: f64, m40dp: f64) -> FeatureVector {
        FeatureVector {
            m42,
            m20dp,
            m40dp,
            m21d: 1.0,
            n_symbols: 1000,
            noise_var: 0.1,
        }
    }

    fn th() -> ClassifierThresholds {
        ClassifierThresholds::default()
    }

    #[test]
    fn stage1_short_circuits_to_am() {
        let d = classify_features(1, &fv(1.0, 1.0, 1.0), &th());
        assert_eq!(d.label, ModClass::Am);
        assert_eq!(d.stage_trace.len(), 1);
    }

    #[test]
    fn high_m20dp_is_psk2() {
        let d = classify_features(0, &fv(1.0, 0.98, 1.0), &th());
        assert_eq!(d.label, ModClass::Psk2);
    }

    #[test]
    fn high_m42_is_qam16() {
        let d = classify_features(0, &fv(1.30, 0.1, 0.2), &th());
        assert_eq!(d.label, ModClass::Qam16);
    }

    #[test]
    fn stage4_separates_psk4_from_psk8() {
        let d4 = classify_features(0, &fv(1.0, 0.1, 0.9), &th());
        assert_eq!(d4.label, ModClass::Psk4);
        let d8 = classify_features(0, &fv(1.0, 0.1, 0.05), &th());
        assert_eq!(d8.label, ModClass::Psk8);
    }

    #[test]
    fn boundary_semantics() {
        // m20dp exactly at threshold decides 2-PSK (>=).
        assert_eq!(
            classify_features(0, &fv(1.0, 0.5, 1.0), &th()).label,
            ModClass::Psk2
        );
        // m42 exactly at threshold decides 16-QAM (>=).
        assert_eq!(
            classify_features(0, &fv(1.155, 0.1, 1.0), &th()).label,
            ModClass::Qam16
        );
        // m40dp exactly at threshold decides 8-PSK (strict >).
        assert_eq!(
            classify_features(0, &fv(1.0, 0.1, 0.5), &th()).label,
            ModClass::Psk8
        );
    }

    #[test]
    fn trace_is_consistent_with_label() {
        let d = classify_features(0, &fv(1.0, 0.1, 0.9), &th());
        let last = d.stage_trace.last().unwrap();
        assert_eq!(last.stage, 4);
        assert_eq!(last.branch, "psk4");
    }
}
