use serde::{Deserialize, Serialize};

use super::MetadataError;

pub const DEFAULT_ALPHA_THRESHOLD: u8 = 8;

/// 8-bit RGBA pixels, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbaImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl RgbaImage {
    pub fn transparent(width: u32, height: u32) -> Self {
        assert!(width >= 1 && height >= 1, "image must be non-empty");
        RgbaImage {
            width,
            height,
            data: vec![0; width as usize * height as usize * 4],
        }
    }

    pub fn from_raw(width: u32, height: u32, data: Vec<u8>) -> Result<Self, MetadataError> {
        if width == 0 || height == 0 || data.len() != width as usize * height as usize * 4 {
            return Err(MetadataError::ImageShape {
                width,
                height,
                len: data.len(),
            });
        }
        Ok(RgbaImage {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    fn offset(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * 4
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 4] {
        let o = self.offset(x, y);
        [
            self.data[o],
            self.data[o + 1],
            self.data[o + 2],
            self.data[o + 3],
        ]
    }

    pub fn set_pixel(&mut self, x: u32, y: u32, rgba: [u8; 4]) {
        let o = self.offset(x, y);
        self.data[o..o + 4].copy_from_slice(&rgba);
    }

    pub fn alpha(&self, x: u32, y: u32) -> u8 {
        self.data[self.offset(x, y) + 3]
    }

    pub fn fill_rect(&mut self, x0: u32, y0: u32, x1: u32, y1: u32, rgba: [u8; 4]) {
        for y in y0..=y1.min(self.height - 1) {
            for x in x0..=x1.min(self.width - 1) {
                self.set_pixel(x, y, rgba);
            }
        }
    }
}

/// Inclusive pixel box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox2D {
    pub x_min: u32,
    pub y_min: u32,
    pub x_max: u32,
    pub y_max: u32,
}

impl BBox2D {
    pub fn new(x_min: u32, y_min: u32, x_max: u32, y_max: u32) -> Result<Self, MetadataError> {
        if x_min > x_max || y_min > y_max {
            return Err(MetadataError::InvalidBox(format!(
                "({x_min},{y_min})-({x_max},{y_max})"
            )));
        }
        Ok(BBox2D {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    pub fn is_ordered(&self) -> bool {
        self.x_min <= self.x_max && self.y_min <= self.y_max
    }

    pub fn width(&self) -> u32 {
        self.x_max - self.x_min + 1
    }

    pub fn height(&self) -> u32 {
        self.y_max - self.y_min + 1
    }

    pub fn center_x(&self) -> f64 {
        (self.x_min as f64 + self.x_max as f64) / 2.0
    }
}

/// Tight box over pixels whose alpha is strictly above `threshold`.
pub fn alpha_bbox(img: &RgbaImage, threshold: u8) -> Result<BBox2D, MetadataError> {
    let mut b: Option<BBox2D> = None;
    for y in 0..img.height {
        for x in 0..img.width {
            if img.alpha(x, y) > threshold {
                let cur = b.get_or_insert(BBox2D {
                    x_min: x,
                    y_min: y,
                    x_max: x,
                    y_max: y,
                });
                cur.x_min = cur.x_min.min(x);
                cur.x_max = cur.x_max.max(x);
                cur.y_max = y;
            }
        }
    }
    b.ok_or(MetadataError::EmptyObject(threshold))
}
