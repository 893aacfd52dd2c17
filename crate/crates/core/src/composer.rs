//! Renders an image with pruned regions replaced by a fill value.

use std::fmt;
use std::str::FromStr;

use image::{Rgb, RgbImage};
use thiserror::Error;

use crate::regions::RegionPartition;
use crate::state::StateVector;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ComposeError {
    #[error("image is {image:?} but partition is {partition:?}")]
    DimensionMismatch {
        image: (u32, u32),
        partition: (u32, u32),
    },
    #[error("state has {got} entries, partition has {expected} regions")]
    StateLength { expected: usize, got: usize },
    #[error("invalid fill policy {0:?}: expected gray, mean or #RRGGBB")]
    BadFill(String),
}

/// Pixel values written into pruned regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FillPolicy {
    Constant([u8; 3]),
    /// Per-channel mean of the whole original image, rounded to nearest.
    Mean,
}

impl Default for FillPolicy {
    fn default() -> Self {
        FillPolicy::Constant([128, 128, 128])
    }
}

impl fmt::Display for FillPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FillPolicy::Constant([r, g, b]) => write!(f, "#{r:02x}{g:02x}{b:02x}"),
            FillPolicy::Mean => f.write_str("mean"),
        }
    }
}

impl FromStr for FillPolicy {
    type Err = ComposeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gray" | "grey" => Ok(FillPolicy::default()),
            "mean" => Ok(FillPolicy::Mean),
            hex if hex.len() == 7 && hex.starts_with('#') => {
                let channel = |i: usize| {
                    u8::from_str_radix(&hex[i..i + 2], 16)
                        .map_err(|_| ComposeError::BadFill(s.to_string()))
                };
                Ok(FillPolicy::Constant([
                    channel(1)?,
                    channel(3)?,
                    channel(5)?,
                ]))
            }
            _ => Err(ComposeError::BadFill(s.to_string())),
        }
    }
}

/// Per-channel rounded mean over all pixels.
pub fn mean_color(image: &RgbImage) -> [u8; 3] {
    let n = u64::from(image.width()) * u64::from(image.height());
    if n == 0 {
        return [0; 3];
    }
    let mut sums = [0u64; 3];
    for px in image.pixels() {
        for c in 0..3 {
            sums[c] += u64::from(px[c]);
        }
    }
    sums.map(|s| ((s + n / 2) / n) as u8)
}

/// An image bound to its partition and fill policy, ready to render `I[v]`
/// for any state.
#[derive(Debug, Clone, Copy)]
pub struct Scene<'a> {
    image: &'a RgbImage,
    partition: &'a RegionPartition,
    fill: FillPolicy,
    fill_color: [u8; 3],
}

impl<'a> Scene<'a> {
    pub fn new(
        image: &'a RgbImage,
        partition: &'a RegionPartition,
        fill: FillPolicy,
    ) -> Result<Self, ComposeError> {
        if image.dimensions() != partition.dimensions() {
            return Err(ComposeError::DimensionMismatch {
                image: image.dimensions(),
                partition: partition.dimensions(),
            });
        }
        let fill_color = match fill {
            FillPolicy::Constant(c) => c,
            FillPolicy::Mean => mean_color(image),
        };
        Ok(Self {
            image,
            partition,
            fill,
            fill_color,
        })
    }

    pub fn image(&self) -> &'a RgbImage {
        self.image
    }

    pub fn partition(&self) -> &'a RegionPartition {
        self.partition
    }

    pub fn fill(&self) -> FillPolicy {
        self.fill
    }

    /// The resolved color written into pruned pixels.
    pub fn fill_color(&self) -> [u8; 3] {
        self.fill_color
    }

    /// Renders `I[v]`.
    pub fn compose(&self, state: &StateVector) -> Result<RgbImage, ComposeError> {
        let m = self.partition.region_count();
        if state.len() != m {
            return Err(ComposeError::StateLength {
                expected: m,
                got: state.len(),
            });
        }
        let mut out = self.image.clone();
        let fill = Rgb(self.fill_color);
        for (px, &label) in out.pixels_mut().zip(self.partition.labels()) {
            // label 0 only exists before merging; treat it as never preserved
            if label == 0 || !state.contains(label as usize - 1) {
                *px = fill;
            }
        }
        Ok(out)
    }
}

/// One-shot form of [`Scene::compose`].
pub fn compose(
    image: &RgbImage,
    partition: &RegionPartition,
    state: &StateVector,
    fill: FillPolicy,
) -> Result<RgbImage, ComposeError> {
    Scene::new(image, partition, fill)?.compose(state)
}

/// Encodes an RGB raster as an 8-bit PNG.
pub fn encode_png(image: &RgbImage) -> Vec<u8> {
    let mut bytes = Vec::new();
    image::DynamicImage::ImageRgb8(image.clone())
        .write_to(
            &mut std::io::Cursor::new(&mut bytes),
            image::ImageFormat::Png,
        )
        .expect("in-memory PNG encoding cannot fail");
    bytes
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_half() -> (RgbImage, RegionPartition) {
        // 2x1: left pixel region 1, right pixel region 2
        let mut img = RgbImage::new(4, 2);
        for (x, _, px) in img.enumerate_pixels_mut() {
            *px = if x < 2 {
                Rgb([10, 20, 30])
            } else {
                Rgb([200, 100, 51])
            };
        }
        let p = RegionPartition::from_raw_labels(4, 2, &[1, 1, 2, 2, 1, 1, 2, 2]).unwrap();
        (img, p)
    }

    #[test]
    fn full_state_is_identity() {
        let (img, p) = half_half();
        let out = compose(&img, &p, &StateVector::full(2), FillPolicy::default()).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn empty_state_is_all_fill() {
        let (img, p) = half_half();
        let out = compose(&img, &p, &StateVector::empty(2), FillPolicy::default()).unwrap();
        assert!(out.pixels().all(|px| px.0 == [128, 128, 128]));
    }

    #[test]
    fn mean_fill_uses_whole_image_average() {
        let (img, p) = half_half();
        let state = StateVector::from_bools(&[true, false]);
        let out = compose(&img, &p, &state, FillPolicy::Mean).unwrap();
        // (10+200)/2 = 105, (20+100)/2 = 60, (30+51)/2 = 40.5 -> 41
        for (x, _, px) in out.enumerate_pixels() {
            if x < 2 {
                assert_eq!(px.0, [10, 20, 30]);
            } else {
                assert_eq!(px.0, [105, 60, 41]);
            }
        }
    }

    #[test]
    fn errors() {
        let (img, p) = half_half();
        assert_eq!(
            compose(&img, &p, &StateVector::full(3), FillPolicy::Mean),
            Err(ComposeError::StateLength {
                expected: 2,
                got: 3
            })
        );
        let small = RgbImage::new(1, 1);
        assert!(matches!(
            compose(&small, &p, &StateVector::full(2), FillPolicy::Mean),
            Err(ComposeError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn fill_policy_parsing() {
        assert_eq!("gray".parse::<FillPolicy>().unwrap(), FillPolicy::default());
        assert_eq!("mean".parse::<FillPolicy>().unwrap(), FillPolicy::Mean);
        assert_eq!(
            "#ff0010".parse::<FillPolicy>().unwrap(),
            FillPolicy::Constant([255, 0, 16])
        );
        assert!("#ff00".parse::<FillPolicy>().is_err());
        assert!("blue".parse::<FillPolicy>().is_err());
        assert_eq!(FillPolicy::default().to_string(), "#808080");
    }
}
