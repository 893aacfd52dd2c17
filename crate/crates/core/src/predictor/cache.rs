use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use parking_lot::Mutex;

use super::{Label, PredictError, Predictor, Probe};
use crate::state::StateVector;

/// Labels keyed by `(image id, state)`.
///
/// The first label stored for a key is kept; later inserts for the same key
/// are ignored, so a non-deterministic model still looks like a function
/// for the lifetime of the cache.
#[derive(Debug, Default)]
pub struct PredictionCache {
    entries: Mutex<HashMap<(String, StateVector), Label>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl PredictionCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, image_id: &str, state: &StateVector) -> Option<Label> {
        let found = self
            .entries
            .lock()
            .get(&(image_id.to_string(), state.clone()))
            .cloned();
        let counter = if found.is_some() {
            &self.hits
        } else {
            &self.misses
        };
        counter.fetch_add(1, Ordering::Relaxed);
        found
    }

    /// Stores `label` unless the key is already present; returns the label
    /// now associated with the key.
    pub fn insert(&self, image_id: &str, state: &StateVector, label: Label) -> Label {
        self.entries
            .lock()
            .entry((image_id.to_string(), state.clone()))
            .or_insert(label)
            .clone()
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }

    pub fn len(&self) -> usize {
        self.entries.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Consults a shared [`PredictionCache`] before dispatching to `inner`.
#[derive(Debug)]
pub struct CachedPredictor<P> {
    inner: P,
    cache: Arc<PredictionCache>,
}

impl<P: Predictor> CachedPredictor<P> {
    pub fn new(inner: P, cache: Arc<PredictionCache>) -> Self {
        Self { inner, cache }
    }

    pub fn cache(&self) -> &Arc<PredictionCache> {
        &self.cache
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }
}

impl<P: Predictor> Predictor for CachedPredictor<P> {
    fn predict(&self, probe: &Probe<'_>) -> Result<Label, PredictError> {
        if let Some(label) = self.cache.get(probe.image_id, probe.state) {
            return Ok(label);
        }
        let label = self.inner.predict(probe)?;
        Ok(self.cache.insert(probe.image_id, probe.state, label))
    }

    fn predict_batch(&self, probes: &[Probe<'_>]) -> Result<Vec<Label>, PredictError> {
        if probes.is_empty() {
            return Err(PredictError::EmptyBatch);
        }
        let mut labels: Vec<Option<Label>> = probes
            .iter()
            .map(|p| self.cache.get(p.image_id, p.state))
            .collect();
        let missing: Vec<usize> = (0..probes.len()).filter(|&i| labels[i].is_none()).collect();
        if !missing.is_empty() {
            let batch: Vec<Probe<'_>> = missing.iter().map(|&i| probes[i]).collect();
            let fresh = self.inner.predict_batch(&batch).map_err(|e| match e {
                PredictError::Batch { index, source } => PredictError::Batch {
                    index: missing[index],
                    source,
                },
                other => other,
            })?;
            for (&i, label) in missing.iter().zip(fresh) {
                labels[i] = Some(
                    self.cache
                        .insert(probes[i].image_id, probes[i].state, label),
                );
            }
        }
        Ok(labels.into_iter().map(Option::unwrap).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composer::{FillPolicy, Scene};
    use crate::regions::RegionPartition;
    use image::RgbImage;
    use std::sync::atomic::AtomicUsize;

    /// Answers with a fresh label on every call.
    struct Counter(AtomicUsize);

    impl Predictor for Counter {
        fn predict(&self, _: &Probe<'_>) -> Result<Label, PredictError> {
            let n = self.0.fetch_add(1, Ordering::SeqCst);
            Ok(Label::new(format!("l{n}")).unwrap())
        }
    }

    #[test]
    fn first_label_is_frozen() {
        let img = RgbImage::new(2, 1);
        let p = RegionPartition::from_raw_labels(2, 1, &[1, 2]).unwrap();
        let scene = Scene::new(&img, &p, FillPolicy::default()).unwrap();
        let cached = CachedPredictor::new(Counter(AtomicUsize::new(0)), Arc::default());
        let a = StateVector::full(2);
        let b = StateVector::empty(2);
        let probe = |state| Probe {
            image_id: "x",
            state,
            scene: &scene,
        };
        assert_eq!(cached.predict(&probe(&a)).unwrap().as_str(), "l0");
        assert_eq!(cached.predict(&probe(&a)).unwrap().as_str(), "l0");
        let batch = cached
            .predict_batch(&[probe(&a), probe(&b), probe(&b)])
            .unwrap();
        let names: Vec<_> = batch.iter().map(Label::as_str).collect();
        // both copies of b miss in the lookup pass; the first answer wins
        assert_eq!(names, ["l0", "l1", "l1"]);
        assert_eq!(cached.cache().len(), 2);
        assert_eq!(cached.cache().hits(), 2);
        assert!(matches!(
            cached.predict_batch(&[]),
            Err(PredictError::EmptyBatch)
        ));
    }
}
