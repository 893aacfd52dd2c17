//! Focus overlays: regions kept by every final state are tinted red,
//! regions kept by only some are tinted white, the rest is dimmed.

use image::RgbImage;

use crate::regions::RegionPartition;
use crate::state::StateVector;

pub const TINT_ALPHA: f64 = 0.45;
pub const DIM_FACTOR: f64 = 0.35;
pub const SHARED_COLOR: [u8; 3] = [255, 0, 0];
pub const PARTIAL_COLOR: [u8; 3] = [255, 255, 255];

/// How a region relates to a set of final states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionRole {
    Shared,
    Partial,
    Unused,
}

/// Role of every region, by 0-based position.
pub fn region_roles(region_count: usize, states: &[StateVector]) -> Vec<RegionRole> {
    (0..region_count)
        .map(|i| {
            let hits = states.iter().filter(|s| s.contains(i)).count();
            match hits {
                0 => RegionRole::Unused,
                h if h == states.len() => RegionRole::Shared,
                _ => RegionRole::Partial,
            }
        })
        .collect()
}

fn blend(px: [u8; 3], color: [u8; 3]) -> [u8; 3] {
    let mut out = [0u8; 3];
    for c in 0..3 {
        let v = f64::from(px[c]) * (1.0 - TINT_ALPHA) + f64::from(color[c]) * TINT_ALPHA;
        out[c] = v.round() as u8;
    }
    out
}

fn dim(px: [u8; 3]) -> [u8; 3] {
    px.map(|v| (f64::from(v) * DIM_FACTOR).round() as u8)
}

/// Panics if `image` and `partition` differ in size.
pub fn render_overlay(
    image: &RgbImage,
    partition: &RegionPartition,
    states: &[StateVector],
) -> RgbImage {
    assert_eq!(image.dimensions(), partition.dimensions());
    let roles = region_roles(partition.region_count(), states);
    let mut out = image.clone();
    for (px, &label) in out.pixels_mut().zip(partition.labels()) {
        let role = match label {
            0 => RegionRole::Unused,
            l => roles[l as usize - 1],
        };
        px.0 = match role {
            RegionRole::Shared => blend(px.0, SHARED_COLOR),
            RegionRole::Partial => blend(px.0, PARTIAL_COLOR),
            RegionRole::Unused => dim(px.0),
        };
    }
    out
}
