use std::path::{Path, PathBuf};

use image::{ImageBuffer, Luma};

use super::GrayImage;
use crate::error::{Error, Result};

/// Locates `frame_%06d.png` (or `.pgm`) inside `dir`.
pub fn frame_path(dir: &Path, index: u32) -> Option<PathBuf> {
    ["png", "pgm"]
        .iter()
        .map(|ext| dir.join(format!("frame_{index:06}.{ext}")))
        .find(|p| p.is_file())
}

/// Loads one frame as grayscale; 8- and 16-bit inputs are scaled to `[0, 1]`.
pub fn load_frame(dir: &Path, index: u32) -> Result<GrayImage> {
    let path = frame_path(dir, index).ok_or_else(|| Error::Image {
        path: dir.join(format!("frame_{index:06}.png")),
        message: "frame not found (.png or .pgm)".into(),
    })?;
    let img = image::open(&path).map_err(|e| Error::Image {
        path: path.clone(),
        message: e.to_string(),
    })?;
    let luma = img.into_luma16();
    let (w, h) = luma.dimensions();
    let pixels = luma.into_raw().into_iter().map(|p| p as f64 / 65535.0).collect();
    GrayImage::new(w as usize, h as usize, pixels)
}

pub fn load_frames(dir: &Path, indices: impl IntoIterator<Item = u32>) -> Result<Vec<GrayImage>> {
    indices.into_iter().map(|i| load_frame(dir, i)).collect()
}

/// Saves an image as 8-bit grayscale; the format follows the extension.
pub fn save_frame(path: impl AsRef<Path>, img: &GrayImage) -> Result<()> {
    let path = path.as_ref();
    let buf: ImageBuffer<Luma<u8>, Vec<u8>> = ImageBuffer::from_raw(
        img.width() as u32,
        img.height() as u32,
        img.pixels().iter().map(|&p| (p * 255.0).round() as u8).collect(),
    )
    .expect("buffer matches dimensions");
    buf.save(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_and_pgm_round_trip_at_8_bits() {
        let dir = tempfile::tempdir().unwrap();
        let img = GrayImage::from_fn(7, 5, |x, y| ((x * 5 + y * 3) % 16) as f64 / 15.0);
        save_frame(dir.path().join("frame_000000.png"), &img).unwrap();
        save_frame(dir.path().join("frame_000001.pgm"), &img).unwrap();
        for i in 0..2 {
            let back = load_frame(dir.path(), i).unwrap();
            assert_eq!((back.width(), back.height()), (7, 5));
            for (a, b) in back.pixels().iter().zip(img.pixels()) {
                assert!((a - b).abs() <= 0.5 / 255.0 + 1e-12);
            }
        }
        assert!(load_frame(dir.path(), 2).is_err());
    }
}
