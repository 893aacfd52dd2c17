//! Region partitions: label-map ingestion, small-region merging, and
//! ground-truth state construction by IoU matching.

use std::collections::HashMap;
use std::path::Path;

use image::{DynamicImage, ImageReader};
use thiserror::Error;

use crate::state::StateVector;

/// Area-proportion cutoff below which regions are folded into the merged
/// region.
pub const DEFAULT_MERGE_THRESHOLD: f64 = 1e-3;

/// IoU a region must reach against some ground-truth mask to count as part
/// of the ground-truth state.
pub const DEFAULT_IOU_THRESHOLD: f64 = 0.7;

#[derive(Debug, Error)]
pub enum RegionsError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: image::ImageError,
    },
    #[error("{path}: expected a single-channel image, found {channels} channels")]
    MultiChannel { path: String, channels: u8 },
    #[error("label map contains no regions")]
    NoRegions,
    #[error("label buffer has {got} entries, expected {expected}")]
    BadLength { expected: usize, got: usize },
    #[error("dimension mismatch: partition is {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (u32, u32),
        got: (u32, u32),
    },
    #[error("ground-truth mask set is empty")]
    EmptyMaskSet,
    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
}

/// Per-pixel region labeling of an image.
///
/// Labels are `0` for unsegmented pixels (only before merging) and
/// `1..=M` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionPartition {
    width: u32,
    height: u32,
    labels: Vec<u32>,
    areas: Vec<u64>,
    area_fractions: Vec<f64>,
    unsegmented: u64,
}

impl RegionPartition {
    /// Builds a partition from raw row-major label values, renumbering the
    /// nonzero values to `1..=M` in order of first appearance.
    pub fn from_raw_labels(width: u32, height: u32, raw: &[u32]) -> Result<Self, RegionsError> {
        let expected = width as usize * height as usize;
        if raw.len() != expected {
            return Err(RegionsError::BadLength {
                expected,
                got: raw.len(),
            });
        }
        let mut remap: HashMap<u32, u32> = HashMap::new();
        let labels: Vec<u32> = raw
            .iter()
            .map(|&value| {
                if value == 0 {
                    0
                } else {
                    let next = remap.len() as u32 + 1;
                    *remap.entry(value).or_insert(next)
                }
            })
            .collect();
        if remap.is_empty() {
            return Err(RegionsError::NoRegions);
        }
        Ok(Self::from_normalized(width, height, labels, remap.len()))
    }

    fn from_normalized(width: u32, height: u32, labels: Vec<u32>, region_count: usize) -> Self {
        let mut areas = vec![0u64; region_count];
        let mut unsegmented = 0u64;
        for &label in &labels {
            match label {
                0 => unsegmented += 1,
                l => areas[l as usize - 1] += 1,
            }
        }
        let total = labels.len() as f64;
        let area_fractions = areas.iter().map(|&a| a as f64 / total).collect();
        Self {
            width,
            height,
            labels,
            areas,
            area_fractions,
            unsegmented,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    /// `M`.
    pub fn region_count(&self) -> usize {
        self.areas.len()
    }

    /// Row-major labels, one per pixel.
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Pixel counts, indexed by 0-based region position.
    pub fn areas(&self) -> &[u64] {
        &self.areas
    }

    /// Region area divided by image area, indexed by 0-based position.
    pub fn area_fractions(&self) -> &[f64] {
        &self.area_fractions
    }

    /// Pixels still labeled `0`.
    pub fn unsegmented_pixels(&self) -> u64 {
        self.unsegmented
    }

    pub fn pixel_count(&self) -> u64 {
        self.labels.len() as u64
    }

    /// Sum of area fractions over the regions preserved in `state`.
    pub fn state_area(&self, state: &StateVector) -> f64 {
        state
            .positions()
            .fold(0.0, |acc, i| acc + self.area_fractions[i])
    }

    /// Folds every region with area fraction below `min_area_fraction`,
    /// plus all unsegmented pixels, into one new region numbered last.
    ///
    /// The surviving regions keep their relative order. When nothing needs
    /// merging the partition is returned unchanged.
    pub fn merge_small_regions(&self, min_area_fraction: f64) -> Result<Self, RegionsError> {
        if !(0.0..1.0).contains(&min_area_fraction) {
            return Err(RegionsError::OutOfRange {
                name: "min_area_fraction",
                value: min_area_fraction,
                range: "[0, 1)",
            });
        }
        let small: Vec<bool> = self
            .area_fractions
            .iter()
            .map(|&f| f < min_area_fraction)
            .collect();
        if self.unsegmented == 0 && !small.contains(&true) {
            return Ok(self.clone());
        }

        // old label (1-based) -> new label; small regions map to the merged id
        let mut mapping = vec![0u32; self.region_count() + 1];
        let mut next = 0u32;
        for (i, &is_small) in small.iter().enumerate() {
            if !is_small {
                next += 1;
                mapping[i + 1] = next;
            }
        }
        let merged = next + 1;
        mapping[0] = merged;
        for (i, &is_small) in small.iter().enumerate() {
            if is_small {
                mapping[i + 1] = merged;
            }
        }
        let labels = self.labels.iter().map(|&l| mapping[l as usize]).collect();
        Ok(Self::from_normalized(
            self.width,
            self.height,
            labels,
            merged as usize,
        ))
    }

    /// Marks regions whose pixel mask reaches `iou_threshold` IoU with at
    /// least one ground-truth mask. A single mask may claim several regions.
    pub fn ground_truth_state(
        &self,
        gt: &GroundTruthMaskSet,
        iou_threshold: f64,
    ) -> Result<StateVector, RegionsError> {
        if !(iou_threshold > 0.0 && iou_threshold <= 1.0) {
            return Err(RegionsError::OutOfRange {
                name: "iou_threshold",
                value: iou_threshold,
                range: "(0, 1]",
            });
        }
        if gt.dimensions() != self.dimensions() {
            return Err(RegionsError::DimensionMismatch {
                expected: self.dimensions(),
                got: gt.dimensions(),
            });
        }
        if gt.masks.is_empty() {
            return Err(RegionsError::EmptyMaskSet);
        }
        let m = self.region_count();
        let mut state = StateVector::empty(m);
        let mut intersections = vec![0u64; m];
        for mask in &gt.masks {
            intersections.iter_mut().for_each(|c| *c = 0);
            let mut mask_area = 0u64;
            for (&label, &on) in self.labels.iter().zip(mask) {
                if on {
                    mask_area += 1;
                    if label != 0 {
                        intersections[label as usize - 1] += 1;
                    }
                }
            }
            for (i, &inter) in intersections.iter().enumerate() {
                let union = self.areas[i] + mask_area - inter;
                if union > 0 && inter as f64 / union as f64 >= iou_threshold {
                    state.set(i, true);
                }
            }
        }
        Ok(state)
    }
}

/// Reads a single-channel label-map PNG (16-bit expected, 8-bit accepted).
pub fn load_label_map(path: impl AsRef<Path>) -> Result<RegionPartition, RegionsError> {
    let path = path.as_ref();
    let img = open_image(path)?;
    let (width, height) = (img.width(), img.height());
    let raw: Vec<u32> = match img {
        DynamicImage::ImageLuma16(buf) => buf.into_raw().into_iter().map(u32::from).collect(),
        DynamicImage::ImageLuma8(buf) => buf.into_raw().into_iter().map(u32::from).collect(),
        other => {
            return Err(RegionsError::MultiChannel {
                path: path.display().to_string(),
                channels: other.color().channel_count(),
            })
        }
    };
    RegionPartition::from_raw_labels(width, height, &raw)
}

/// Binary ground-truth masks sharing the partition's dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthMaskSet {
    width: u32,
    height: u32,
    masks: Vec<Vec<bool>>,
}

impl GroundTruthMaskSet {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            masks: Vec::new(),
        }
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn masks(&self) -> &[Vec<bool>] {
        &self.masks
    }

    pub fn push(&mut self, mask: Vec<bool>) -> Result<(), RegionsError> {
        let expected = self.width as usize * self.height as usize;
        if mask.len() != expected {
            return Err(RegionsError::BadLength {
                expected,
                got: mask.len(),
            });
        }
        self.masks.push(mask);
        Ok(())
    }

    /// Loads masks from PNG files. 8-bit files are binary masks (nonzero is
    /// foreground); 16-bit files are label maps contributing one mask per
    /// distinct nonzero value, in ascending value order.
    pub fn load<P: AsRef<Path>>(paths: &[P]) -> Result<Self, RegionsError> {
        let mut set: Option<Self> = None;
        for path in paths {
            let path = path.as_ref();
            let img = open_image(path)?;
            let dims = (img.width(), img.height());
            let set = set.get_or_insert_with(|| Self::new(dims.0, dims.1));
            if dims != set.dimensions() {
                return Err(RegionsError::DimensionMismatch {
                    expected: set.dimensions(),
                    got: dims,
                });
            }
            match img {
                DynamicImage::ImageLuma8(buf) => {
                    set.push(buf.into_raw().into_iter().map(|v| v != 0).collect())?;
                }
                DynamicImage::ImageLuma16(buf) => {
                    let raw = buf.into_raw();
                    let mut values: Vec<u16> = raw.iter().copied().filter(|&v| v != 0).collect();
                    values.sort_unstable();
                    values.dedup();
                    for value in values {
                        set.push(raw.iter().map(|&v| v == value).collect())?;
                    }
                }
                other => {
                    return Err(RegionsError::MultiChannel {
                        path: path.display().to_string(),
                        channels: other.color().channel_count(),
                    })
                }
            }
        }
        set.ok_or(RegionsError::EmptyMaskSet)
    }
}

fn open_image(path: &Path) -> Result<DynamicImage, RegionsError> {
    let read_err = |source| RegionsError::Read {
        path: path.display().to_string(),
        source,
    };
    ImageReader::open(path)
        .map_err(|e| read_err(image::ImageError::IoError(e)))?
        .with_guessed_format()
        .map_err(|e| read_err(image::ImageError::IoError(e)))?
        .decode()
        .map_err(read_err)
}
