use std::io::Cursor;
use std::path::Path;

use super::{GeoRaster, RgbImage};
use crate::error::{format_err, Error, Result};

/// Encode an RGB image as an 8-bit, alpha-free PNG.
pub fn encode_png(image: &RgbImage) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, image.width as u32, image.height as u32);
        encoder.set_color(png::ColorType::Rgb);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder
            .write_header()
            .map_err(|e| format_err(format!("png header: {e}")))?;
        writer
            .write_image_data(&image.data)
            .map_err(|e| format_err(format!("png data: {e}")))?;
        writer.finish().map_err(|e| format_err(format!("png finish: {e}")))?;
    }
    Ok(out)
}

/// Decode a PNG to 8-bit RGB. Grey, palette and alpha inputs are converted.
pub fn decode_png(bytes: &[u8]) -> Result<RgbImage> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = decoder.read_info().map_err(|e| format_err(format!("png: {e}")))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| format_err("png: image too large"))?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(|e| format_err(format!("png: {e}")))?;
    buf.truncate(info.buffer_size());
    let (w, h) = (info.width as usize, info.height as usize);
    let data = match info.color_type {
        png::ColorType::Rgb => buf,
        png::ColorType::Rgba => buf.chunks_exact(4).flat_map(|p| [p[0], p[1], p[2]]).collect(),
        png::ColorType::Grayscale => buf.iter().flat_map(|&g| [g, g, g]).collect(),
        png::ColorType::GrayscaleAlpha => buf.chunks_exact(2).flat_map(|p| [p[0], p[0], p[0]]).collect(),
        png::ColorType::Indexed => return Err(Error::Unsupported("unexpanded palette PNG".into())),
    };
    RgbImage::from_raw(w, h, data)
}

pub fn read_png(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::from(e).in_file(path))?;
    decode_png(&bytes).map_err(|e| e.in_file(path))
}

pub fn write_rgb_png(image: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_png(image)?;
    std::fs::write(path, bytes).map_err(|e| Error::from(e).in_file(path))
}

/// Save the raster's RGB bands as a PNG. The raster must have exactly 3 bands.
pub fn write_png(r: &GeoRaster, path: impl AsRef<Path>) -> Result<()> {
    write_rgb_png(&r.to_rgb_image()?, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster_io::GeoTransform;
    use proptest::prelude::*;

    #[test]
    fn single_pixel_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.png");
        let r = GeoRaster::new(1, 1, 3, vec![7, 8, 9], GeoTransform::identity()).unwrap();
        write_png(&r, &path).unwrap();
        assert_eq!(read_png(&path).unwrap().data, vec![7, 8, 9]);
    }

    #[test]
    fn single_band_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let r = GeoRaster::new(2, 2, 1, vec![0; 4], GeoTransform::identity()).unwrap();
        assert!(matches!(write_png(&r, dir.path().join("x.png")), Err(Error::Precondition(_))));
    }

    proptest! {
        #[test]
        fn encode_decode_is_bit_exact((w, h, data) in (1usize..24, 1usize..24)
            .prop_flat_map(|(w, h)| (Just(w), Just(h), proptest::collection::vec(any::<u8>(), w * h * 3))))
        {
            let img = RgbImage::from_raw(w, h, data).unwrap();
            prop_assert_eq!(decode_png(&encode_png(&img).unwrap()).unwrap(), img);
        }
    }
}
