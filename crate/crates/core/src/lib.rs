//! Finds the minimal sets of image regions a black-box classifier relies on,
//! factors them into a logic expression, and scores them against
//! ground-truth regions.
//!
//! The flow for one image:
//!
//! 1. [`regions`] loads a label map and merges tiny regions.
//! 2. [`refine`] prunes regions one at a time, querying a [`predictor`] on
//!    images rendered by [`composer`], until every surviving state is
//!    locally minimal.
//! 3. [`logic`] factors the final states into an AND/OR expression.
//! 4. [`analysis`] computes precision, recall and divergence and names the
//!    behavior.

pub mod analysis;
pub mod cli;
pub mod composer;
pub mod logic;
pub mod overlay;
pub mod pipeline;
pub mod predictor;
pub mod refine;
pub mod regions;
pub mod state;

pub use analysis::{BehaviorClass, BehaviorThresholds, MetricsReport};
pub use composer::{compose, FillPolicy, Scene};
pub use logic::{equivalent, translate, LogicExpr};
pub use predictor::{Label, Predictor, Probe, SyntheticLogicModel};
pub use refine::{brute_force_final_states, refine, FinalStateSet, RefinementConfig};
pub use regions::{load_label_map, GroundTruthMaskSet, RegionPartition};
pub use state::StateVector;
