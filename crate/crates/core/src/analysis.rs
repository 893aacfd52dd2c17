//! Focus metrics against a ground-truth state, and behavior classes.
//!
//! All areas are fractions of the image, so the metrics do not depend on
//! image resolution.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::regions::RegionPartition;
use crate::state::StateVector;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("metrics need at least one final state")]
    NoStates,
    #[error("state has {got} entries, partition has {expected} regions")]
    StateLength { expected: usize, got: usize },
    #[error("invalid thresholds {0:?}: expected three positive numbers p,r,d")]
    BadThresholds(String),
}

/// Annotations attached to a metrics report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricFlag {
    /// Some final state preserves nothing; its precision term was taken as 0.
    EmptyFocusState,
    /// The ground-truth state is empty; recall was taken as 0.
    NoGroundTruthMatch,
    /// Distracted behavior accompanied by high divergence.
    HighDivergence,
}

/// Cutoffs separating "high" from "low". A value equal to its cutoff is high.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BehaviorThresholds {
    pub precision_high: f64,
    pub recall_high: f64,
    pub divergence_high: f64,
}

impl Default for BehaviorThresholds {
    fn default() -> Self {
        Self {
            precision_high: 0.5,
            recall_high: 0.5,
            divergence_high: 0.05,
        }
    }
}

impl FromStr for BehaviorThresholds {
    type Err = AnalysisError;

    /// Parses `p,r,d`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || AnalysisError::BadThresholds(s.to_string());
        let values = s
            .split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>, _>>()?;
        match values[..] {
            [p, r, d] if [p, r, d].iter().all(|v| v.is_finite() && *v > 0.0) => Ok(Self {
                precision_high: p,
                recall_high: r,
                divergence_high: d,
            }),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BehaviorClass {
    Holistic,
    Compositional,
    Narrow,
    Distracted,
    Misled,
    /// High precision, recall and divergence together; no named class.
    Unclassified,
}

impl fmt::Display for BehaviorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

fn check_lengths(states: &[StateVector], p: &RegionPartition) -> Result<(), AnalysisError> {
    if states.is_empty() {
        return Err(AnalysisError::NoStates);
    }
    let expected = p.region_count();
    match states.iter().find(|s| s.len() != expected) {
        Some(s) => Err(AnalysisError::StateLength {
            expected,
            got: s.len(),
        }),
        None => Ok(()),
    }
}

/// Mean over states of `area(v ∧ v̄) / area(v)`. The second value is true
/// when an empty state contributed a 0/0 term, counted as 0.
pub fn precision(
    states: &[StateVector],
    gt: &StateVector,
    p: &RegionPartition,
) -> Result<(f64, bool), AnalysisError> {
    check_lengths(std::slice::from_ref(gt), p)?;
    check_lengths(states, p)?;
    let mut empty = false;
    let total: f64 = states
        .iter()
        .map(|v| {
            let area = p.state_area(v);
            if area == 0.0 {
                empty = true;
                0.0
            } else {
                p.state_area(&v.intersection(gt)) / area
            }
        })
        .sum();
    Ok((total / states.len() as f64, empty))
}

/// Mean over states of `area(v ∧ v̄) / area(v̄)`. The second value is true
/// when `v̄` is empty and recall was defined as 0.
pub fn recall(
    states: &[StateVector],
    gt: &StateVector,
    p: &RegionPartition,
) -> Result<(f64, bool), AnalysisError> {
    check_lengths(std::slice::from_ref(gt), p)?;
    check_lengths(states, p)?;
    let gt_area = p.state_area(gt);
    if gt_area == 0.0 {
        return Ok((0.0, true));
    }
    let total: f64 = states
        .iter()
        .map(|v| p.state_area(&v.intersection(gt)) / gt_area)
        .sum();
    Ok((total / states.len() as f64, false))
}

/// Area-weighted sum of per-region population variances of the selection
/// bits across states.
pub fn divergence(states: &[StateVector], p: &RegionPartition) -> Result<f64, AnalysisError> {
    check_lengths(states, p)?;
    let n = states.len() as f64;
    Ok(p.area_fractions()
        .iter()
        .enumerate()
        .map(|(i, &fraction)| {
            let bits = states.iter().map(|s| if s.contains(i) { 1.0 } else { 0.0 });
            let mean = bits.clone().sum::<f64>() / n;
            let variance = bits.map(|b| (b - mean) * (b - mean)).sum::<f64>() / n;
            fraction * variance
        })
        .sum())
}

pub fn classify(
    precision: f64,
    recall: f64,
    divergence: f64,
    t: &BehaviorThresholds,
) -> BehaviorClass {
    let p_high = precision >= t.precision_high;
    let r_high = recall >= t.recall_high;
    let d_high = divergence >= t.divergence_high;
    match (p_high, r_high, d_high) {
        (false, false, _) => BehaviorClass::Misled,
        (false, true, _) => BehaviorClass::Distracted,
        (true, true, false) => BehaviorClass::Holistic,
        (true, true, true) => BehaviorClass::Unclassified,
        (true, false, true) => BehaviorClass::Compositional,
        (true, false, false) => BehaviorClass::Narrow,
    }
}

/// Precision, recall, divergence and the derived class for one image (or a
/// corpus average), with the settings that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub precision: f64,
    pub recall: f64,
    pub divergence: f64,
    pub behavior: BehaviorClass,
    pub flags: Vec<MetricFlag>,
    pub state_count: usize,
    pub fill_mode: String,
    pub beam_size: Option<usize>,
    pub iou_threshold: f64,
}

/// Settings copied into every [`MetricsReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub fill_mode: String,
    pub beam_size: Option<usize>,
    pub iou_threshold: f64,
}

pub fn evaluate(
    states: &[StateVector],
    gt: &StateVector,
    p: &RegionPartition,
    thresholds: &BehaviorThresholds,
    provenance: &Provenance,
) -> Result<MetricsReport, AnalysisError> {
    let (precision, empty_state) = precision(states, gt, p)?;
    let (recall, no_gt) = recall(states, gt, p)?;
    let divergence = divergence(states, p)?;
    let behavior = classify(precision, recall, divergence, thresholds);
    let mut flags = Vec::new();
    if empty_state {
        flags.push(MetricFlag::EmptyFocusState);
    }
    if no_gt {
        flags.push(MetricFlag::NoGroundTruthMatch);
    }
    if behavior == BehaviorClass::Distracted && divergence >= thresholds.divergence_high {
        flags.push(MetricFlag::HighDivergence);
    }
    Ok(MetricsReport {
        precision,
        recall,
        divergence,
        behavior,
        flags,
        state_count: states.len(),
        fill_mode: provenance.fill_mode.clone(),
        beam_size: provenance.beam_size,
        iou_threshold: provenance.iou_threshold,
    })
}

/// Corpus-level averages, classified as a whole.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub images: usize,
    pub precision: f64,
    pub recall: f64,
    pub divergence: f64,
    pub behavior: BehaviorClass,
}

/// Arithmetic means of the per-image metrics. `None` for an empty corpus.
pub fn aggregate<'a>(
    reports: impl IntoIterator<Item = &'a MetricsReport>,
    thresholds: &BehaviorThresholds,
) -> Option<AggregateMetrics> {
    let (mut n, mut p, mut r, mut d) = (0usize, 0.0, 0.0, 0.0);
    for m in reports {
        n += 1;
        p += m.precision;
        r += m.recall;
        d += m.divergence;
    }
    if n == 0 {
        return None;
    }
    let (p, r, d) = (p / n as f64, r / n as f64, d / n as f64);
    Some(AggregateMetrics {
        images: n,
        precision: p,
        recall: r,
        divergence: d,
        behavior: classify(p, r, d, thresholds),
    })
}
