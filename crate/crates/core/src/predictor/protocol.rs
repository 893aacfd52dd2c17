//! Wire format shared by the stdio and HTTP transports.
//!
//! Request: `{"id": "...", "image_png_b64": "..."}`.
//! Response: `{"id": "...", "label": "..."}` or `{"id": "...", "error": "..."}`.

use base64::Engine;
use image::RgbImage;
use serde::{Deserialize, Serialize};

use super::{Label, PredictError};
use crate::composer::encode_png;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Request {
    pub id: String,
    pub image_png_b64: String,
}

impl Request {
    pub fn new(id: impl Into<String>, image: &RgbImage) -> Self {
        Self {
            id: id.into(),
            image_png_b64: base64::engine::general_purpose::STANDARD.encode(encode_png(image)),
        }
    }

    /// Serialized request followed by a newline.
    pub fn to_line(&self) -> String {
        let mut line = serde_json::to_string(self).expect("request serializes");
        line.push('\n');
        line
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Response {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Response {
    pub fn parse(text: &str) -> Result<Self, PredictError> {
        serde_json::from_str(text.trim())
            .map_err(|e| PredictError::Malformed(format!("{e}: {:?}", truncate(text))))
    }

    pub fn into_label(self) -> Result<Label, PredictError> {
        match (self.label, self.error) {
            (_, Some(message)) => Err(PredictError::Remote {
                id: self.id,
                message,
            }),
            (Some(label), None) => Label::new(label)
                .map_err(|_| PredictError::Malformed(format!("empty label for {}", self.id))),
            (None, None) => Err(PredictError::Malformed(format!(
                "response {} has neither label nor error",
                self.id
            ))),
        }
    }
}

fn truncate(text: &str) -> &str {
    match text.char_indices().nth(120) {
        Some((i, _)) => &text[..i],
        None => text,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Rgb;

    #[test]
    fn request_is_one_json_line() {
        let img = RgbImage::from_pixel(2, 2, Rgb([1, 2, 3]));
        let line = Request::new("a:1", &img).to_line();
        assert!(line.ends_with('\n'));
        assert_eq!(line.matches('\n').count(), 1);
        let value: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(value["id"], "a:1");
        let png = base64::engine::general_purpose::STANDARD
            .decode(value["image_png_b64"].as_str().unwrap())
            .unwrap();
        let decoded = image::load_from_memory(&png).unwrap().to_rgb8();
        assert_eq!(decoded, img);
    }

    #[test]
    fn responses() {
        let ok = Response::parse(r#"{"id":"x","label":"cat"}"#).unwrap();
        assert_eq!(ok.into_label().unwrap().as_str(), "cat");
        let err = Response::parse(r#"{"id":"x","error":"bad png"}"#).unwrap();
        assert!(matches!(err.into_label(), Err(PredictError::Remote { .. })));
        let neither = Response::parse(r#"{"id":"x"}"#).unwrap();
        assert!(matches!(
            neither.into_label(),
            Err(PredictError::Malformed(_))
        ));
        assert!(matches!(
            Response::parse("nope"),
            Err(PredictError::Malformed(_))
        ));
    }
}
