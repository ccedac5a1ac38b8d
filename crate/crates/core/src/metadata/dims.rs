use serde::{Deserialize, Serialize};

use super::{identify_views, BBox2D, MetadataError, TireBox, TireDetection, ViewIdentification};

pub const DEFAULT_MIN_TIRE_CONFIDENCE: f64 = 0.5;

/// Dimensions relative to the side-view height, which is 1 by construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleDims {
    pub length: f64,
    pub width: f64,
    pub height: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wheelbase: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_height: Option<f64>,
}

/// Ratios of orthographic silhouette extents.
pub fn estimate_dims(side: &BBox2D, front: &BBox2D) -> VehicleDims {
    let h = side.height() as f64;
    VehicleDims {
        length: side.width() as f64 / h,
        width: front.width() as f64 / h,
        height: 1.0,
        wheelbase: None,
        raw_height: None,
    }
}

/// Distance between the outermost qualifying tire centres over the side
/// height.
pub fn wheelbase(
    side: &BBox2D,
    tires: &[TireBox],
    min_confidence: f64,
) -> Result<f64, MetadataError> {
    for t in tires {
        if !t.bbox.is_ordered() || !(0.0..=1.0).contains(&t.confidence) {
            return Err(MetadataError::InvalidBox(format!("{t:?}")));
        }
    }
    let centres: Vec<f64> = tires
        .iter()
        .filter(|t| t.confidence >= min_confidence)
        .map(|t| t.bbox.center_x())
        .collect();
    if centres.len() < 2 {
        return Err(MetadataError::TooFewTires(centres.len()));
    }
    let left = centres.iter().copied().fold(f64::INFINITY, f64::min);
    let right = centres.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((right - left) / side.height() as f64)
}

/// Per-object geometry output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleMetadata {
    pub object_id: String,
    #[serde(flatten)]
    pub dims: VehicleDims,
    pub views: ViewIdentification,
    /// Side view whose box was measured: the wider of the two.
    pub measured_side: usize,
    pub measured_front: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wheelbase_note: Option<String>,
}

fn wider(boxes: &[BBox2D], a: usize, b: usize) -> usize {
    if boxes[b].width() > boxes[a].width() {
        b
    } else {
        a
    }
}

/// Identifies views, measures the wider member of each pair, and adds a
/// wheelbase from detections in a side view when one qualifies.
pub fn estimate_vehicle(
    object_id: &str,
    boxes: &[BBox2D],
    tires: &[TireDetection],
    min_confidence: f64,
) -> Result<VehicleMetadata, MetadataError> {
    let views = identify_views(boxes)?;
    let side = wider(boxes, views.side[0], views.side[1]);
    let other_side = if side == views.side[0] {
        views.side[1]
    } else {
        views.side[0]
    };
    let front = wider(boxes, views.front, views.back);
    let mut dims = estimate_dims(&boxes[side], &boxes[front]);
    let mut note = None;
    let mut result = Err(MetadataError::TooFewTires(0));
    for s in [side, other_side] {
        let in_view: Vec<TireBox> = tires
            .iter()
            .filter(|d| d.object_id == object_id && d.azimuth_index == s)
            .flat_map(|d| d.boxes.iter().copied())
            .collect();
        // Boxes measured in the other side view are scaled by that view's height.
        result = wheelbase(&boxes[s], &in_view, min_confidence);
        if result.is_ok() {
            break;
        }
    }
    match result {
        Ok(wb) if wb > 0.0 && wb <= dims.length => dims.wheelbase = Some(wb),
        Ok(wb) => {
            note = Some(
                MetadataError::WheelbaseRange {
                    wheelbase: wb,
                    length: dims.length,
                }
                .to_string(),
            )
        }
        Err(e) => note = Some(e.to_string()),
    }
    Ok(VehicleMetadata {
        object_id: object_id.to_string(),
        dims,
        views,
        measured_side: side,
        measured_front: front,
        wheelbase_note: note,
    })
}
