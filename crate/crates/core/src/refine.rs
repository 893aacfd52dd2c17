//! Enumerative region pruning.
//!
//! Starting from the full image, every round removes one preserved region
//! from each live state and keeps the children whose label still matches
//! the full-image label. A live state none of whose children survive is a
//! final state. States are deduplicated across removal orders, so each is
//! sent to the model at most once.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::composer::Scene;
use crate::predictor::{Label, PredictError, Predictor, Probe};
use crate::state::StateVector;

pub const DEFAULT_MAX_QUERIES: u64 = 50_000;

/// Default region count up to which [`brute_force_final_states`] runs.
pub const DEFAULT_ORACLE_LIMIT: usize = 16;

/// Hard ceiling for the exhaustive oracle regardless of configuration.
pub const MAX_ORACLE_REGIONS: usize = 24;

#[derive(Debug, Error)]
pub enum RefineError {
    #[error(transparent)]
    Predict(#[from] PredictError),
    #[error("query budget of {limit} exhausted; {} final states found so far", partial.states().len())]
    BudgetExhausted {
        limit: u64,
        partial: Box<FinalStateSet>,
    },
    #[error("exhaustive search over {regions} regions exceeds the limit of {limit}")]
    OracleLimit { regions: usize, limit: usize },
    #[error("invalid refinement config: {0}")]
    InvalidConfig(String),
    #[error("malformed final-state file: {0}")]
    Parse(String),
}

/// Which valid children a parent keeps when the beam is bounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateOrder {
    /// Prefer removing the largest regions; ties go to the lower index.
    #[default]
    LargestAreaFirst,
    /// Prefer removing lower-indexed regions.
    AscendingIndex,
}

/// What a bounded beam limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BeamScope {
    /// Each parent keeps at most `k` valid children, and each round keeps
    /// at most `k` live states overall. Query count is `O(k * M * depth)`.
    #[default]
    Round,
    /// Only the per-parent limit. The frontier can still grow
    /// exponentially when many regions are irrelevant to the model.
    Parent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RefinementConfig {
    /// `None` keeps every valid child.
    pub beam_size: Option<usize>,
    pub beam_scope: BeamScope,
    pub candidate_order: CandidateOrder,
    pub max_queries: u64,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        Self {
            beam_size: None,
            beam_scope: BeamScope::default(),
            candidate_order: CandidateOrder::default(),
            max_queries: DEFAULT_MAX_QUERIES,
        }
    }
}

impl RefinementConfig {
    pub fn with_beam(beam_size: Option<usize>) -> Self {
        Self {
            beam_size,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<(), RefineError> {
        if self.beam_size == Some(0) {
            return Err(RefineError::InvalidConfig(
                "beam size must be at least 1".into(),
            ));
        }
        if self.max_queries == 0 {
            return Err(RefineError::InvalidConfig(
                "max_queries must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Beam size as written on the command line: a positive count or `none`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BeamArg(pub Option<usize>);

impl FromStr for BeamArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" | "unlimited" => Ok(BeamArg(None)),
            n => match n.parse::<usize>() {
                Ok(k) if k >= 1 => Ok(BeamArg(Some(k))),
                _ => Err(format!(
                    "beam must be a positive integer or `none`, got {s:?}"
                )),
            },
        }
    }
}

impl fmt::Display for BeamArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(k) => write!(f, "{k}"),
            None => f.write_str("none"),
        }
    }
}

/// The deduplicated final states of one image, in lexicographic order of
/// their preserved region ids.
#[derive(Debug, Clone, PartialEq)]
pub struct FinalStateSet {
    region_count: usize,
    states: Vec<StateVector>,
    reference_label: Label,
    query_count: u64,
    beam_size: Option<usize>,
    partial: bool,
}

impl FinalStateSet {
    pub fn new(
        region_count: usize,
        states: Vec<StateVector>,
        reference_label: Label,
        query_count: u64,
        beam_size: Option<usize>,
    ) -> Self {
        let mut keyed: Vec<(Vec<u32>, StateVector)> =
            states.into_iter().map(|s| (s.region_ids(), s)).collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        keyed.dedup_by(|a, b| a.0 == b.0);
        Self {
            region_count,
            states: keyed.into_iter().map(|(_, s)| s).collect(),
            reference_label,
            query_count,
            beam_size,
            partial: false,
        }
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn region_count(&self) -> usize {
        self.region_count
    }

    /// `f(I)`.
    pub fn reference_label(&self) -> &Label {
        &self.reference_label
    }

    pub fn query_count(&self) -> u64 {
        self.query_count
    }

    pub fn beam_size(&self) -> Option<usize> {
        self.beam_size
    }

    /// Set when the search was cut short; the states are then not final.
    pub fn is_partial(&self) -> bool {
        self.partial
    }

    /// Preserved region ids of every state.
    pub fn region_id_lists(&self) -> Vec<Vec<u32>> {
        self.states.iter().map(StateVector::region_ids).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&FinalStateSetJson {
            reference_label: self.reference_label.clone(),
            beam_size: self.beam_size,
            query_count: self.query_count,
            states: self.region_id_lists(),
            partial: self.partial,
        })
        .expect("final states serialize")
    }

    /// Parses the JSON form. `region_count` is not stored in the file; it
    /// must cover every region id mentioned.
    pub fn from_json(text: &str, region_count: usize) -> Result<Self, RefineError> {
        let json: FinalStateSetJson =
            serde_json::from_str(text).map_err(|e| RefineError::Parse(e.to_string()))?;
        let states = json
            .states
            .iter()
            .map(|ids| {
                StateVector::from_region_ids(region_count, ids).ok_or_else(|| {
                    RefineError::Parse(format!("state {ids:?} exceeds {region_count} regions"))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut set = Self::new(
            region_count,
            states,
            json.reference_label,
            json.query_count,
            json.beam_size,
        );
        set.partial = json.partial;
        Ok(set)
    }

    /// Largest region id appearing in a final-state JSON document.
    pub fn max_region_in_json(text: &str) -> Result<usize, RefineError> {
        let json: FinalStateSetJson =
            serde_json::from_str(text).map_err(|e| RefineError::Parse(e.to_string()))?;
        Ok(json.states.iter().flatten().copied().max().unwrap_or(0) as usize)
    }
}

#[derive(Serialize, Deserialize)]
struct FinalStateSetJson {
    reference_label: Label,
    beam_size: Option<usize>,
    query_count: u64,
    states: Vec<Vec<u32>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    partial: bool,
}

/// A valid child considered for the next round.
struct Candidate {
    state: StateVector,
    removed: usize,
    parent_rank: usize,
    /// Pixels still preserved in `state`.
    remaining_area: u64,
}

impl CandidateOrder {
    /// Most preferred first. For children of one parent, `LargestAreaFirst`
    /// reduces to "largest removed region, then lowest index".
    fn compare(self, a: &Candidate, b: &Candidate) -> std::cmp::Ordering {
        let by_index = a
            .removed
            .cmp(&b.removed)
            .then(a.parent_rank.cmp(&b.parent_rank));
        match self {
            CandidateOrder::LargestAreaFirst => {
                a.remaining_area.cmp(&b.remaining_area).then(by_index)
            }
            CandidateOrder::AscendingIndex => by_index,
        }
    }
}

/// Runs the pruning search on one image.
pub fn refine(
    scene: &Scene<'_>,
    image_id: &str,
    model: &dyn Predictor,
    cfg: &RefinementConfig,
) -> Result<FinalStateSet, RefineError> {
    cfg.validate()?;
    let partition = scene.partition();
    let m = partition.region_count();
    let full = StateVector::full(m);
    let reference = model.predict(&Probe {
        image_id,
        state: &full,
        scene,
    })?;
    let mut queries = 1u64;
    let mut validity: HashMap<StateVector, bool> = HashMap::new();
    validity.insert(full.clone(), true);

    let areas = partition.areas();
    let parent_area = |s: &StateVector| s.positions().map(|i| areas[i]).sum::<u64>();
    let mut frontier = vec![full];
    let mut finals = Vec::new();
    while !frontier.is_empty() {
        let mut batch = Vec::new();
        let mut queued = HashSet::new();
        for parent in &frontier {
            for pos in parent.positions() {
                let child = parent.without(pos);
                if !validity.contains_key(&child) && queued.insert(child.clone()) {
                    batch.push(child);
                }
            }
        }

        if !batch.is_empty() {
            if queries + batch.len() as u64 > cfg.max_queries {
                let mut partial = FinalStateSet::new(m, finals, reference, queries, cfg.beam_size);
                partial.partial = true;
                return Err(RefineError::BudgetExhausted {
                    limit: cfg.max_queries,
                    partial: Box::new(partial),
                });
            }
            let probes: Vec<Probe<'_>> = batch
                .iter()
                .map(|state| Probe {
                    image_id,
                    state,
                    scene,
                })
                .collect();
            let labels = model.predict_batch(&probes)?;
            queries += batch.len() as u64;
            for (state, label) in batch.into_iter().zip(labels) {
                let valid = label == reference;
                validity.insert(state, valid);
            }
        }

        let mut next: Vec<Candidate> = Vec::new();
        let mut kept = HashSet::new();
        for (rank, parent) in frontier.iter().enumerate() {
            let mut children: Vec<Candidate> = parent
                .positions()
                .map(|removed| Candidate {
                    state: parent.without(removed),
                    removed,
                    parent_rank: rank,
                    remaining_area: parent_area(parent) - areas[removed],
                })
                .filter(|c| validity[&c.state])
                .collect();
            if children.is_empty() {
                finals.push(parent.clone());
                continue;
            }
            if let Some(k) = cfg.beam_size {
                children.sort_by(|a, b| cfg.candidate_order.compare(a, b));
                children.truncate(k);
            }
            for child in children {
                if kept.insert(child.state.clone()) {
                    next.push(child);
                }
            }
        }
        if let (Some(k), BeamScope::Round) = (cfg.beam_size, cfg.beam_scope) {
            next.sort_by(|a, b| cfg.candidate_order.compare(a, b));
            next.truncate(k);
        }
        let next: Vec<StateVector> = next.into_iter().map(|c| c.state).collect();
        frontier = next;
    }

    Ok(FinalStateSet::new(
        m,
        finals,
        reference,
        queries,
        cfg.beam_size,
    ))
}

/// Exhaustive reference for [`refine`] with unlimited beam.
///
/// Labels all `2^M` states, then walks the valid states reachable from the
/// full image through single removals and keeps those without a valid
/// child. Shares no search code with [`refine`].
pub fn brute_force_final_states(
    scene: &Scene<'_>,
    image_id: &str,
    model: &dyn Predictor,
    limit: usize,
) -> Result<FinalStateSet, RefineError> {
    let m = scene.partition().region_count();
    let limit = limit.min(MAX_ORACLE_REGIONS);
    if m > limit {
        return Err(RefineError::OracleLimit { regions: m, limit });
    }
    let total = 1usize << m;
    let full_mask = total - 1;

    let mut labels: Vec<Label> = Vec::with_capacity(total);
    let masks: Vec<u64> = (0..total as u64).collect();
    for chunk in masks.chunks(4096) {
        let states: Vec<StateVector> = chunk
            .iter()
            .map(|&k| StateVector::from_mask(m, k))
            .collect();
        let probes: Vec<Probe<'_>> = states
            .iter()
            .map(|state| Probe {
                image_id,
                state,
                scene,
            })
            .collect();
        labels.extend(model.predict_batch(&probes)?);
    }
    let reference = labels[full_mask].clone();
    let valid: Vec<bool> = labels.iter().map(|l| *l == reference).collect();

    // removing a bit always lowers the mask, so a descending sweep visits
    // every parent before its children
    let mut reachable = vec![false; total];
    reachable[full_mask] = true;
    let mut finals = Vec::new();
    for mask in (0..total).rev() {
        if !reachable[mask] {
            continue;
        }
        let mut has_valid_child = false;
        for bit in (0..m).map(|b| 1usize << b).filter(|b| mask & b != 0) {
            let child = mask & !bit;
            if valid[child] {
                reachable[child] = true;
                has_valid_child = true;
            }
        }
        if !has_valid_child {
            finals.push(StateVector::from_mask(m, mask as u64));
        }
    }
    Ok(FinalStateSet::new(m, finals, reference, total as u64, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composer::FillPolicy;
    use crate::logic::LogicExpr;
    use crate::predictor::SyntheticLogicModel;
    use crate::regions::RegionPartition;
    use image::RgbImage;

    fn lit(r: u32) -> LogicExpr {
        LogicExpr::Literal(r)
    }

    fn model(formula: LogicExpr) -> SyntheticLogicModel {
        SyntheticLogicModel::new(formula, "yes".parse().unwrap(), "no".parse().unwrap()).unwrap()
    }

    fn columns(m: usize) -> (RgbImage, RegionPartition) {
        let raw: Vec<u32> = (1..=m as u32).collect();
        (
            RgbImage::new(m as u32, 1),
            RegionPartition::from_raw_labels(m as u32, 1, &raw).unwrap(),
        )
    }

    fn ids(set: &FinalStateSet) -> Vec<Vec<u32>> {
        set.region_id_lists()
    }

    #[test]
    fn and_of_or_fixture() {
        let (img, p) = columns(4);
        let scene = Scene::new(&img, &p, FillPolicy::default()).unwrap();
        let f = model(LogicExpr::and([lit(1), LogicExpr::or([lit(2), lit(3)])]));
        let got = refine(&scene, "x", &f, &RefinementConfig::default()).unwrap();
        assert_eq!(ids(&got), vec![vec![1, 2], vec![1, 3]]);
        assert_eq!(got.reference_label().as_str(), "yes");
        let oracle = brute_force_final_states(&scene, "x", &f, 16).unwrap();
        assert_eq!(oracle.states(), got.states());
        assert_eq!(oracle.query_count(), 16);
    }

    #[test]
    fn single_region() {
        let (img, p) = columns(1);
        let scene = Scene::new(&img, &p, FillPolicy::default()).unwrap();
        let got = refine(
            &scene,
            "x",
            &model(LogicExpr::True),
            &RefinementConfig::default(),
        )
        .unwrap();
        assert_eq!(ids(&got), vec![Vec::<u32>::new()]);
        assert_eq!(got.query_count(), 2);
        let got = refine(&scene, "x", &model(lit(1)), &RefinementConfig::default()).unwrap();
        assert_eq!(ids(&got), vec![vec![1]]);
    }

    #[test]
    fn every_removal_flips_label() {
        let (img, p) = columns(4);
        let scene = Scene::new(&img, &p, FillPolicy::default()).unwrap();
        let f = model(LogicExpr::and((1..=4).map(lit)));
        let got = refine(&scene, "x", &f, &RefinementConfig::default()).unwrap();
        assert_eq!(ids(&got), vec![vec![1, 2, 3, 4]]);
        assert_eq!(got.query_count(), 5);
    }

    #[test]
    fn oracle_true_and_literal() {
        let (img, p) = columns(4);
        let scene = Scene::new(&img, &p, FillPolicy::default()).unwrap();
        let got = brute_force_final_states(&scene, "x", &model(LogicExpr::True), 16).unwrap();
        assert_eq!(ids(&got), vec![Vec::<u32>::new()]);
        let got = brute_force_final_states(&scene, "x", &model(lit(3)), 16).unwrap();
        assert_eq!(got.states()[0].to_string(), "0010");
        assert!(matches!(
            brute_force_final_states(&scene, "x", &model(lit(3)), 3),
            Err(RefineError::OracleLimit {
                regions: 4,
                limit: 3
            })
        ));
    }

    #[test]
    fn budget_exhaustion_reports_partial() {
        let (img, p) = columns(6);
        let scene = Scene::new(&img, &p, FillPolicy::default()).unwrap();
        let cfg = RefinementConfig {
            max_queries: 10,
            ..RefinementConfig::default()
        };
        match refine(&scene, "x", &model(lit(1)), &cfg) {
            Err(RefineError::BudgetExhausted { limit, partial }) => {
                assert_eq!(limit, 10);
                assert!(partial.is_partial());
                assert!(partial.to_json().contains("\"partial\": true"));
            }
            other => panic!("expected budget exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn beam_prefers_large_regions() {
        // region 3 is largest; with beam 1 the search removes it first
        let raw = [1, 2, 3, 3, 3, 4];
        let p = RegionPartition::from_raw_labels(6, 1, &raw).unwrap();
        let img = RgbImage::new(6, 1);
        let scene = Scene::new(&img, &p, FillPolicy::default()).unwrap();
        // valid iff region 1 and at least one of 2, 3
        let f = model(LogicExpr::and([lit(1), LogicExpr::or([lit(2), lit(3)])]));
        let got = refine(&scene, "x", &f, &RefinementConfig::with_beam(Some(1))).unwrap();
        assert_eq!(ids(&got), vec![vec![1, 2]]);
        let cfg = RefinementConfig {
            candidate_order: CandidateOrder::AscendingIndex,
            ..RefinementConfig::with_beam(Some(1))
        };
        let got = refine(&scene, "x", &f, &cfg).unwrap();
        assert_eq!(ids(&got), vec![vec![1, 3]]);
    }

    #[test]
    fn zero_beam_is_rejected() {
        let (img, p) = columns(2);
        let scene = Scene::new(&img, &p, FillPolicy::default()).unwrap();
        assert!(matches!(
            refine(
                &scene,
                "x",
                &model(lit(1)),
                &RefinementConfig::with_beam(Some(0))
            ),
            Err(RefineError::InvalidConfig(_))
        ));
    }

    #[test]
    fn json_layout() {
        let set = FinalStateSet::new(
            3,
            vec![
                StateVector::from_region_ids(3, &[1, 3]).unwrap(),
                StateVector::from_region_ids(3, &[1, 2]).unwrap(),
                StateVector::from_region_ids(3, &[1, 2]).unwrap(),
            ],
            "cat".parse().unwrap(),
            7,
            Some(5),
        );
        let value: serde_json::Value = serde_json::from_str(&set.to_json()).unwrap();
        assert_eq!(
            value,
            serde_json::json!({
                "reference_label": "cat",
                "beam_size": 5,
                "query_count": 7,
                "states": [[1, 2], [1, 3]]
            })
        );
        assert_eq!(FinalStateSet::from_json(&set.to_json(), 3).unwrap(), set);
        assert!(FinalStateSet::from_json(&set.to_json(), 2).is_err());
        assert_eq!(
            FinalStateSet::max_region_in_json(&set.to_json()).unwrap(),
            3
        );
    }

    #[test]
    fn beam_arg_parsing() {
        assert_eq!("none".parse::<BeamArg>().unwrap(), BeamArg(None));
        assert_eq!("10".parse::<BeamArg>().unwrap(), BeamArg(Some(10)));
        assert!("0".parse::<BeamArg>().is_err());
        assert!("x".parse::<BeamArg>().is_err());
    }
}
