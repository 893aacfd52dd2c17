#![allow(dead_code)]

use image::{Rgb, RgbImage};
use rand::seq::SliceRandom;
use rand::Rng;
use visfocus::logic::LogicExpr;
use visfocus::predictor::SyntheticLogicModel;
use visfocus::regions::RegionPartition;
use visfocus::state::StateVector;

pub fn lit(r: u32) -> LogicExpr {
    LogicExpr::Literal(r)
}

pub fn model(formula: LogicExpr) -> SyntheticLogicModel {
    SyntheticLogicModel::new(formula, "target".parse().unwrap(), "other".parse().unwrap()).unwrap()
}

/// Random AND/OR tree over regions `1..=m`, at most `depth` levels deep.
pub fn random_formula(rng: &mut impl Rng, m: usize, depth: usize) -> LogicExpr {
    if depth == 0 || rng.gen_bool(0.3) {
        return lit(rng.gen_range(1..=m as u32));
    }
    let arity = rng.gen_range(2..=3);
    let children: Vec<_> = (0..arity)
        .map(|_| random_formula(rng, m, depth - 1))
        .collect();
    if rng.gen_bool(0.5) {
        LogicExpr::and(children)
    } else {
        LogicExpr::or(children)
    }
}

/// One-row image whose region `i` is a run of pixels of random width, each
/// region painted a distinct color that differs from mid-gray.
pub fn random_scene(rng: &mut impl Rng, m: usize) -> (RgbImage, RegionPartition) {
    let widths: Vec<u32> = (0..m).map(|_| rng.gen_range(1..=6)).collect();
    let mut raw = Vec::new();
    for (i, &w) in widths.iter().enumerate() {
        raw.extend(std::iter::repeat_n(i as u32 + 1, w as usize));
    }
    let width = raw.len() as u32;
    let img = RgbImage::from_fn(width, 1, |x, _| {
        let region = raw[x as usize];
        Rgb([(region * 17 % 200) as u8 + 1, 3, 250])
    });
    let p = RegionPartition::from_raw_labels(width, 1, &raw).unwrap();
    (img, p)
}

/// Columns of equal width, one per region.
pub fn column_scene(m: usize) -> (RgbImage, RegionPartition) {
    let raw: Vec<u32> = (1..=m as u32).collect();
    let img = RgbImage::from_fn(m as u32, 1, |x, _| Rgb([x as u8 * 9 + 1, 7, 240]));
    (
        img,
        RegionPartition::from_raw_labels(m as u32, 1, &raw).unwrap(),
    )
}

pub fn random_state(rng: &mut impl Rng, m: usize) -> StateVector {
    let bits: Vec<bool> = (0..m).map(|_| rng.gen_bool(0.5)).collect();
    StateVector::from_bools(&bits)
}

/// Random permutation of `0..m`.
pub fn permutation(rng: &mut impl Rng, m: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..m).collect();
    perm.shuffle(rng);
    perm
}

/// Direct-summation metrics straight from the definitions, over plain
/// bool vectors and area fractions.
pub mod direct {
    pub fn area(fractions: &[f64], v: &[bool]) -> f64 {
        let mut total = 0.0;
        for i in 0..v.len() {
            if v[i] {
                total += fractions[i];
            }
        }
        total
    }

    fn and(a: &[bool], b: &[bool]) -> Vec<bool> {
        a.iter().zip(b).map(|(x, y)| *x && *y).collect()
    }

    pub fn precision(states: &[Vec<bool>], gt: &[bool], fractions: &[f64]) -> f64 {
        let mut sum = 0.0;
        for v in states {
            let denom = area(fractions, v);
            if denom > 0.0 {
                sum += area(fractions, &and(v, gt)) / denom;
            }
        }
        sum / states.len() as f64
    }

    pub fn recall(states: &[Vec<bool>], gt: &[bool], fractions: &[f64]) -> f64 {
        let denom = area(fractions, gt);
        if denom == 0.0 {
            return 0.0;
        }
        let mut sum = 0.0;
        for v in states {
            sum += area(fractions, &and(v, gt)) / denom;
        }
        sum / states.len() as f64
    }

    pub fn divergence(states: &[Vec<bool>], fractions: &[f64]) -> f64 {
        let n = states.len() as f64;
        let mut total = 0.0;
        for i in 0..fractions.len() {
            let ones = states.iter().filter(|v| v[i]).count() as f64;
            let p = ones / n;
            // population variance of a {0,1} sample with mean p
            total += fractions[i] * p * (1.0 - p);
        }
        total
    }
}

/// On-disk fixtures for CLI and pipeline tests.
pub mod files {
    use std::path::{Path, PathBuf};

    use image::{ImageBuffer, Luma, Rgb, RgbImage};
    use visfocus::logic::LogicExpr;

    pub const SIDE: u32 = 8;

    pub fn save_labels16(path: &Path, width: u32, height: u32, raw: Vec<u16>) {
        ImageBuffer::<Luma<u16>, Vec<u16>>::from_raw(width, height, raw)
            .unwrap()
            .save(path)
            .unwrap();
    }

    fn quadrant(x: u32, y: u32) -> u32 {
        1 + (x >= SIDE / 2) as u32 + 2 * (y >= SIDE / 2) as u32
    }

    /// 8x8 image split into four quadrants, regions 1..=4 in reading order,
    /// and a 16-bit instance mask matching `gt_regions`. Returns (image, labels, gt).
    pub fn quadrants(dir: &Path, stem: &str, gt_regions: &[u32]) -> (PathBuf, PathBuf, PathBuf) {
        let image = dir.join(format!("{stem}.png"));
        let labels = dir.join(format!("{stem}.labels.png"));
        let gt = dir.join(format!("{stem}.gt.png"));
        RgbImage::from_fn(SIDE, SIDE, |x, y| {
            let q = quadrant(x, y) as u8;
            Rgb([q * 50, 20 + x as u8, 200 - y as u8])
        })
        .save(&image)
        .unwrap();
        // raw values deliberately not 1..=4
        let raw = (0..SIDE * SIDE)
            .map(|i| 1000 * quadrant(i % SIDE, i / SIDE) as u16)
            .collect();
        save_labels16(&labels, SIDE, SIDE, raw);
        // one instance mask per ground-truth region
        let instances = (0..SIDE * SIDE)
            .map(|i| {
                let q = quadrant(i % SIDE, i / SIDE);
                if gt_regions.contains(&q) {
                    40 + q as u16
                } else {
                    0
                }
            })
            .collect();
        save_labels16(&gt, SIDE, SIDE, instances);
        (image, labels, gt)
    }

    pub fn synthetic_model(dir: &Path, formula: &LogicExpr) -> PathBuf {
        let path = dir.join("model.json");
        let body = serde_json::json!({
            "formula": formula,
            "target_label": "target",
            "other_label": "other",
        });
        std::fs::write(&path, body.to_string()).unwrap();
        path
    }
}
