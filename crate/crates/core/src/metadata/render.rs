use super::RgbaImage;

fn overlap(lo: f64, hi: f64, p: u32) -> f64 {
    let (a, b) = (p as f64, p as f64 + 1.0);
    (hi.min(b) - lo.max(a)).max(0.0)
}

/// Orthographic side-on silhouette of an axis-aligned box seen from
/// `azimuth_deg`, where 0° looks along the length axis. The box is centred
/// in a `size`×`size` frame at `scale` pixels per unit; alpha is the covered
/// fraction of each pixel.
pub fn render_cuboid(
    length: f64,
    width: f64,
    height: f64,
    azimuth_deg: f64,
    size: u32,
    scale: f64,
) -> RgbaImage {
    let t = azimuth_deg.to_radians();
    let w = (length * t.sin().abs() + width * t.cos().abs()) * scale;
    let h = height * scale;
    let c = size as f64 / 2.0;
    let (x0, x1, y0, y1) = (c - w / 2.0, c + w / 2.0, c - h / 2.0, c + h / 2.0);
    let mut img = RgbaImage::transparent(size, size);
    for y in 0..size {
        let fy = overlap(y0, y1, y);
        if fy == 0.0 {
            continue;
        }
        for x in 0..size {
            let cov = fy * overlap(x0, x1, x);
            if cov > 0.0 {
                img.set_pixel(x, y, [180, 180, 190, (cov * 255.0).round() as u8]);
            }
        }
    }
    img
}
