//! Vehicle geometry from orbital renders: alpha bounding boxes, side and
//! front view identification, and height-relative dimensions.

mod dims;
mod image;
mod render;
mod views;

pub use dims::{
    estimate_dims, estimate_vehicle, wheelbase, VehicleDims, VehicleMetadata,
    DEFAULT_MIN_TIRE_CONFIDENCE,
};
pub use image::{alpha_bbox, BBox2D, RgbaImage, DEFAULT_ALPHA_THRESHOLD};
pub use render::render_cuboid;
pub use views::{identify_views, ViewIdentification, METADATA_VIEWS};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetadataError {
    #[error("image is {width}x{height} but has {len} bytes")]
    ImageShape { width: u32, height: u32, len: usize },
    #[error("no pixel has alpha above {0}")]
    EmptyObject(u8),
    #[error("expected {expected} views, got {found}")]
    ViewCount { expected: usize, found: usize },
    #[error("only {0} tire detections meet the confidence threshold")]
    TooFewTires(usize),
    #[error("wheelbase {wheelbase:.4} is not within (0, length {length:.4}]")]
    WheelbaseRange { wheelbase: f64, length: f64 },
    #[error("invalid box: {0}")]
    InvalidBox(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TireBox {
    #[serde(flatten)]
    pub bbox: BBox2D,
    pub confidence: f64,
}

/// Tire detections for one view of one object, as produced by an external
/// detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TireDetection {
    pub object_id: String,
    pub azimuth_index: usize,
    pub boxes: Vec<TireBox>,
}
