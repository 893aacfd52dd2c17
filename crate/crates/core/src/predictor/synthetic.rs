//! In-process models whose label is a fixed boolean formula over the set of
//! preserved regions.

use image::RgbImage;
use serde::{Deserialize, Serialize};

use super::{Label, PredictError, Predictor, Probe};
use crate::logic::LogicExpr;
use crate::regions::RegionPartition;

/// Predicts `target_label` iff the preserved regions satisfy `formula`.
///
/// Reads the probe's state directly and never looks at pixels, so its
/// answers do not depend on the fill policy.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticLogicModel {
    formula: LogicExpr,
    target_label: Label,
    other_label: Label,
}

impl SyntheticLogicModel {
    pub fn new(
        formula: LogicExpr,
        target_label: Label,
        other_label: Label,
    ) -> Result<Self, PredictError> {
        if target_label == other_label {
            return Err(PredictError::Model(format!(
                "target and other label are both {target_label:?}"
            )));
        }
        Ok(Self {
            formula,
            target_label,
            other_label,
        })
    }

    pub fn formula(&self) -> &LogicExpr {
        &self.formula
    }

    pub fn target_label(&self) -> &Label {
        &self.target_label
    }

    pub fn other_label(&self) -> &Label {
        &self.other_label
    }

    fn label_for(&self, satisfied: bool) -> Label {
        if satisfied {
            self.target_label.clone()
        } else {
            self.other_label.clone()
        }
    }
}

impl Predictor for SyntheticLogicModel {
    fn predict(&self, probe: &Probe<'_>) -> Result<Label, PredictError> {
        let satisfied = self
            .formula
            .eval(probe.state)
            .map_err(|e| PredictError::Model(e.to_string()))?;
        Ok(self.label_for(satisfied))
    }
}

/// On-disk form of a [`SyntheticLogicModel`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticModelFile {
    pub formula: LogicExpr,
    pub target_label: Label,
    pub other_label: Label,
}

impl SyntheticModelFile {
    pub fn into_model(self) -> Result<SyntheticLogicModel, PredictError> {
        SyntheticLogicModel::new(self.formula, self.target_label, self.other_label)
    }
}

/// Like [`SyntheticLogicModel`], but recovers region presence from the
/// composed pixels: a region counts as present when every one of its pixels
/// still matches the original image. Exercises the composer end to end.
#[derive(Debug, Clone)]
pub struct PixelProbeModel {
    inner: SyntheticLogicModel,
    original: RgbImage,
    partition: RegionPartition,
}

impl PixelProbeModel {
    pub fn new(inner: SyntheticLogicModel, original: RgbImage, partition: RegionPartition) -> Self {
        Self {
            inner,
            original,
            partition,
        }
    }

    /// Presence flags decoded from a composed image, by 0-based position.
    pub fn decode(&self, composed: &RgbImage) -> Result<Vec<bool>, PredictError> {
        if composed.dimensions() != self.original.dimensions() {
            return Err(PredictError::Model(format!(
                "probe image is {:?}, expected {:?}",
                composed.dimensions(),
                self.original.dimensions()
            )));
        }
        let mut present = vec![true; self.partition.region_count()];
        let pixels = composed.pixels().zip(self.original.pixels());
        for ((now, was), &label) in pixels.zip(self.partition.labels()) {
            if label != 0 && now != was {
                present[label as usize - 1] = false;
            }
        }
        Ok(present)
    }
}

impl Predictor for PixelProbeModel {
    fn predict(&self, probe: &Probe<'_>) -> Result<Label, PredictError> {
        let present = self.decode(&probe.render()?)?;
        self.inner
            .formula
            .check_range(present.len())
            .map_err(|e| PredictError::Model(e.to_string()))?;
        let satisfied = self.inner.formula.eval_with(&|r| present[r as usize - 1]);
        Ok(self.inner.label_for(satisfied))
    }
}
