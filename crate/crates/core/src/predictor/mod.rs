//! Black-box prediction interface.
//!
//! Refinement only ever asks one question of a model: which label does it
//! assign to `I[v]`? A [`Probe`] carries everything needed to answer it: the
//! state, and a scene that renders the composed image on demand, so
//! in-process synthetic models can skip pixel work entirely.

mod cache;
mod protocol;
mod remote;
mod synthetic;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use image::RgbImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::composer::{ComposeError, Scene};
use crate::state::StateVector;

pub use cache::{CachedPredictor, PredictionCache};
pub use protocol::{Request, Response};
pub use remote::{ExecPredictor, HttpPredictor, RemoteOptions};
pub use synthetic::{PixelProbeModel, SyntheticLogicModel, SyntheticModelFile};

#[derive(Debug, Error)]
pub enum PredictError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("no response within {0:?}")]
    Timeout(Duration),
    #[error("predictor reported an error for request {id}: {message}")]
    Remote { id: String, message: String },
    #[error("model failure: {0}")]
    Model(String),
    #[error("batch item {index} failed: {source}")]
    Batch {
        index: usize,
        #[source]
        source: Box<PredictError>,
    },
    #[error("empty batch")]
    EmptyBatch,
    #[error(transparent)]
    Compose(#[from] ComposeError),
}

/// A class label. Compared by exact string equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct Label(String);

#[derive(Debug, Error, PartialEq, Eq)]
#[error("labels must be non-empty")]
pub struct EmptyLabel;

impl Label {
    pub fn new(value: impl Into<String>) -> Result<Self, EmptyLabel> {
        let value = value.into();
        if value.is_empty() {
            Err(EmptyLabel)
        } else {
            Ok(Label(value))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for Label {
    type Err = EmptyLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Label::new(s)
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Label::new(s).map_err(serde::de::Error::custom)
    }
}

/// One prediction request: the state `v` of image `image_id`.
#[derive(Debug, Clone, Copy)]
pub struct Probe<'a> {
    pub image_id: &'a str,
    pub state: &'a StateVector,
    pub scene: &'a Scene<'a>,
}

impl Probe<'_> {
    /// Renders `I[v]`.
    pub fn render(&self) -> Result<RgbImage, ComposeError> {
        self.scene.compose(self.state)
    }
}

/// A model `f` answering hard labels.
pub trait Predictor: Send + Sync {
    fn predict(&self, probe: &Probe<'_>) -> Result<Label, PredictError>;

    /// Labels positionally aligned with `probes`. The default maps
    /// [`Predictor::predict`] and stops at the first failure.
    fn predict_batch(&self, probes: &[Probe<'_>]) -> Result<Vec<Label>, PredictError> {
        if probes.is_empty() {
            return Err(PredictError::EmptyBatch);
        }
        probes
            .iter()
            .enumerate()
            .map(|(index, probe)| {
                self.predict(probe).map_err(|e| PredictError::Batch {
                    index,
                    source: Box::new(e),
                })
            })
            .collect()
    }
}

impl<P: Predictor + ?Sized> Predictor for Box<P> {
    fn predict(&self, probe: &Probe<'_>) -> Result<Label, PredictError> {
        (**self).predict(probe)
    }

    fn predict_batch(&self, probes: &[Probe<'_>]) -> Result<Vec<Label>, PredictError> {
        (**self).predict_batch(probes)
    }
}

impl<P: Predictor + ?Sized> Predictor for &P {
    fn predict(&self, probe: &Probe<'_>) -> Result<Label, PredictError> {
        (**self).predict(probe)
    }

    fn predict_batch(&self, probes: &[Probe<'_>]) -> Result<Vec<Label>, PredictError> {
        (**self).predict_batch(probes)
    }
}

/// Where a model lives, as given on the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelEndpoint {
    /// Child process speaking newline-delimited JSON. The command is split
    /// on whitespace, so `exec:python3 server.py` works.
    Exec(Vec<String>),
    Http(String),
    /// In-process [`SyntheticLogicModel`] read from a JSON file.
    Synthetic(std::path::PathBuf),
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid model endpoint {0:?}: expected exec:<path>, http:<url> or synthetic:<file>")]
pub struct BadEndpoint(pub String);

impl FromStr for ModelEndpoint {
    type Err = BadEndpoint;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || BadEndpoint(s.to_string());
        if s.starts_with("http://") || s.starts_with("https://") {
            return Ok(ModelEndpoint::Http(s.to_string()));
        }
        let (scheme, rest) = s.split_once(':').ok_or_else(bad)?;
        if rest.trim().is_empty() {
            return Err(bad());
        }
        match scheme {
            "exec" => Ok(ModelEndpoint::Exec(
                rest.split_whitespace().map(str::to_string).collect(),
            )),
            "http" => Ok(ModelEndpoint::Http(rest.to_string())),
            "synthetic" => Ok(ModelEndpoint::Synthetic(rest.into())),
            _ => Err(bad()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_reject_empty() {
        assert!(Label::new("").is_err());
        assert_eq!(Label::new("cat").unwrap().as_str(), "cat");
        assert!(serde_json::from_str::<Label>("\"\"").is_err());
    }

    #[test]
    fn endpoint_parsing() {
        assert_eq!(
            "exec:/usr/bin/srv --x".parse::<ModelEndpoint>().unwrap(),
            ModelEndpoint::Exec(vec!["/usr/bin/srv".into(), "--x".into()])
        );
        assert_eq!(
            "http:http://localhost:80/p"
                .parse::<ModelEndpoint>()
                .unwrap(),
            ModelEndpoint::Http("http://localhost:80/p".into())
        );
        assert_eq!(
            "http://localhost:80/p".parse::<ModelEndpoint>().unwrap(),
            ModelEndpoint::Http("http://localhost:80/p".into())
        );
        assert_eq!(
            "synthetic:m.json".parse::<ModelEndpoint>().unwrap(),
            ModelEndpoint::Synthetic("m.json".into())
        );
        assert!("ftp:x".parse::<ModelEndpoint>().is_err());
        assert!("exec:".parse::<ModelEndpoint>().is_err());
        assert!("nothing".parse::<ModelEndpoint>().is_err());
    }
}
