//! JSONL and PNG helpers.

use std::path::Path;

use qcurate_core::io::atomic_write;
use qcurate_core::metadata::RgbaImage;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, CliResult, ResultExt};

pub fn require_file(path: &Path, what: &str) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::input(format!(
            "{what} {} does not exist",
            path.display()
        )))
    }
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> CliResult<()> {
    write_text(path, &to_jsonl(items))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).or_internal(format!("creating {}", dir.display()))?;
    }
    atomic_write(path, text.as_bytes()).or_internal(format!("writing {}", path.display()))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> CliResult<Vec<T>> {
    let text = std::fs::read_to_string(path).or_input(format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).or_input(format!("{}:{}", path.display(), i + 1)))
        .collect()
}

pub fn read_png(path: &Path) -> CliResult<RgbaImage> {
    let file = std::fs::File::open(path).or_input(format!("opening {}", path.display()))?;
    let mut decoder = png::Decoder::new(std::io::BufReader::new(file));
    decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = decoder
        .read_info()
        .or_input(format!("decoding {}", path.display()))?;
    let mut buf = vec![
        0;
        reader
            .output_buffer_size()
            .ok_or_else(|| CliError::input("PNG too large"))?
    ];
    let info = reader
        .next_frame(&mut buf)
        .or_input(format!("decoding {}", path.display()))?;
    buf.truncate(info.buffer_size());
    let (w, h) = (info.width, info.height);
    let rgba: Vec<u8> = match info.color_type {
        png::ColorType::Rgba => buf,
        png::ColorType::Rgb => buf
            .chunks(3)
            .flat_map(|p| [p[0], p[1], p[2], 255])
            .collect(),
        png::ColorType::GrayscaleAlpha => buf
            .chunks(2)
            .flat_map(|p| [p[0], p[0], p[0], p[1]])
            .collect(),
        png::ColorType::Grayscale => buf.iter().flat_map(|&g| [g, g, g, 255]).collect(),
        png::ColorType::Indexed => {
            return Err(CliError::input(format!(
                "{}: unexpanded palette",
                path.display()
            )))
        }
    };
    RgbaImage::from_raw(w, h, rgba).or_input(format!("{}", path.display()))
}

pub fn png_bytes(img: &RgbaImage) -> Vec<u8> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width(), img.height());
        enc.set_color(png::ColorType::Rgba);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc.write_header().expect("in-memory PNG header");
        w.write_image_data(img.as_raw())
            .expect("in-memory PNG data");
    }
    out
}

pub fn write_png(path: &Path, img: &RgbaImage) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).or_internal(format!("creating {}", dir.display()))?;
    }
    atomic_write(path, &png_bytes(img)).or_internal(format!("writing {}", path.display()))
}
