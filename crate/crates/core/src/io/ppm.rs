use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageFormat};

use crate::error::{Result, SlfError};
use crate::mapping::Image;

/// Rounds each channel to the nearest integer in `[0, 255]`.
pub fn to_rgb8(img: &Image) -> Vec<u8> {
    img.data.iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect()
}

/// Binary PPM (P6, maxval 255).
pub fn ppm_bytes(img: &Image) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    PnmEncoder::new(&mut buf)
        .with_subtype(PnmSubtype::Pixmap(SampleEncoding::Binary))
        .write_image(&to_rgb8(img), img.width as u32, img.height as u32, ExtendedColorType::Rgb8)
        .map_err(|e| SlfError::Format(format!("ppm: {e}")))?;
    Ok(buf)
}

pub fn read_ppm(bytes: &[u8]) -> Result<Image> {
    if !bytes.starts_with(b"P6") {
        return Err(SlfError::Format("not a binary PPM (P6)".into()));
    }
    let decoded = image::load_from_memory_with_format(bytes, ImageFormat::Pnm)
        .map_err(|e| SlfError::Format(format!("ppm: {e}")))?;
    let DynamicImage::ImageRgb8(rgb) = decoded else {
        return Err(SlfError::Format("ppm maxval must be 255".into()));
    };
    Ok(Image {
        width: rgb.width() as usize,
        height: rgb.height() as usize,
        data: rgb.as_raw().iter().map(|&b| b as f64).collect(),
    })
}

pub fn load_ppm(path: &Path) -> Result<Image> {
    let bytes = std::fs::read(path).map_err(|e| SlfError::from(e).context(path.display()))?;
    read_ppm(&bytes).map_err(|e| e.context(path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_round_trip() {
        let mut img = Image::new(3, 2, [0.0; 3]);
        img.set(0, 0, [255.0, 0.4, 0.6]);
        img.set(2, 1, [300.0, -4.0, 127.5]);
        let bytes = ppm_bytes(&img).unwrap();
        assert!(bytes.starts_with(b"P6"));
        let back = read_ppm(&bytes).unwrap();
        assert_eq!((back.width, back.height), (3, 2));
        assert_eq!(back.get(0, 0), [255.0, 0.0, 1.0]);
        assert_eq!(back.get(2, 1), [255.0, 0.0, 128.0]);
    }

    #[test]
    fn rejects_other_formats() {
        assert!(read_ppm(b"P3\n1 1\n255\n0 0 0\n").is_err());
        assert!(read_ppm(b"P6\n1 1\n65535\n\0\0\0\0\0\0").is_err());
        assert!(read_ppm(b"P6\n2 2\n255\n\0\0\0").is_err());
    }
}
