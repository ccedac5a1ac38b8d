use serde::{Deserialize, Serialize};

use super::{BBox2D, MetadataError};

/// Orbital views rendered per object for geometry.
pub const METADATA_VIEWS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewIdentification {
    /// Ascending azimuth indices.
    pub side: [usize; 2],
    pub front: usize,
    pub back: usize,
    /// Set when the choice was a tie or the silhouette is not elongated.
    pub warning: bool,
}

fn circular_distance(a: usize, b: usize, n: usize) -> usize {
    let d = a.abs_diff(b) % n;
    d.min(n - d)
}

/// Front and back are the opposite pair with the smallest combined box
/// width; the side views sit a quarter turn away. The widest box must lie
/// within an eighth of a turn of a side view, otherwise `warning` is set.
pub fn identify_views(boxes: &[BBox2D]) -> Result<ViewIdentification, MetadataError> {
    let n = METADATA_VIEWS;
    if boxes.len() != n {
        return Err(MetadataError::ViewCount {
            expected: n,
            found: boxes.len(),
        });
    }
    let half = n / 2;
    let quarter = n / 4;
    let pair_width = |i: usize| boxes[i].width() as u64 + boxes[i + half].width() as u64;
    let best = (0..half)
        .min_by_key(|&i| (pair_width(i), i))
        .expect("non-empty");
    let tied = (0..half)
        .filter(|&i| pair_width(i) == pair_width(best))
        .count()
        > 1;

    let (a, b) = (best, best + half);
    let (front, back) = if circular_distance(b, 0, n) < circular_distance(a, 0, n) {
        (b, a)
    } else {
        (a, b)
    };
    let mut side = [(best + quarter) % n, (best + quarter + half) % n];
    side.sort_unstable();

    let widest = (0..n)
        .max_by_key(|&i| (boxes[i].width(), std::cmp::Reverse(i)))
        .expect("non-empty");
    let near_side = side
        .iter()
        .any(|&s| circular_distance(s, widest, n) <= n / 8);
    let side_width = boxes[side[0]].width() as u64 + boxes[side[1]].width() as u64;
    let elongated = side_width > pair_width(best);

    Ok(ViewIdentification {
        side,
        front,
        back,
        warning: tied || !near_side || !elongated,
    })
}
