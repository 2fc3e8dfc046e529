//! Occupancy masks from and to single-channel images.

use std::io::BufReader;
use std::path::Path;

use image::codecs::png::PngDecoder;
use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder, ImageFormat, ImageReader};

use crate::error::{Error, Result};
use crate::grid::{Mask, ScalarField};

/// Default cut between free (dark) and building (bright) pixels.
pub const DEFAULT_THRESHOLD: u8 = 127;

/// Reads a PGM or PNG image as a 2D mask of shape `[height, width]`; row 0
/// is the top row. Pixels brighter than `threshold` (after conversion to
/// 8-bit luma) are obstacles.
pub fn load_mask(path: &Path, threshold: u8) -> Result<Mask> {
    let fail = |reason: String| Error::format(Some(path), reason);
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    if reader.format() == Some(ImageFormat::Png) {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let png = PngDecoder::new(BufReader::new(file)).map_err(|e| fail(e.to_string()))?;
        if png.is_apng().map_err(|e| fail(e.to_string()))? {
            return Err(fail("animated images are not supported".into()));
        }
    }
    let luma = reader.decode().map_err(|e| fail(e.to_string()))?.to_luma8();
    let (width, height) = luma.dimensions();
    let blocked = luma.pixels().map(|p| p.0[0] > threshold).collect();
    Mask::new(&[height as usize, width as usize], blocked)
}

fn encode_gray(path: &Path, pixels: &[u8], height: usize, width: usize) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let out = std::io::BufWriter::new(file);
    let png = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    let result = if png {
        image::codecs::png::PngEncoder::new(out).write_image(
            pixels,
            width as u32,
            height as u32,
            ExtendedColorType::L8,
        )
    } else {
        PnmEncoder::new(out)
            .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
            .write_image(pixels, width as u32, height as u32, ExtendedColorType::L8)
    };
    result.map_err(|e| Error::format(Some(path), e.to_string()))
}

fn plane_shape(shape: &[usize]) -> Result<(usize, usize)> {
    match *shape {
        [h, w] => Ok((h, w)),
        _ => Err(Error::InvalidArgument(format!(
            "images hold 2D data, got shape {shape:?}"
        ))),
    }
}

/// Writes a 2D mask with obstacles at 255 and free space at 0. The format
/// follows the extension: `.png` gives PNG, anything else binary PGM.
pub fn write_mask(mask: &Mask, path: &Path) -> Result<()> {
    let (h, w) = plane_shape(mask.shape())?;
    let pixels: Vec<u8> = mask.blocked().iter().map(|&b| if b { 255 } else { 0 }).collect();
    encode_gray(path, &pixels, h, w)
}

/// Min-max scaled 8-bit rendering of a 2D field; a constant field maps to 0.
pub fn write_field_image(field: &ScalarField, path: &Path) -> Result<()> {
    let (h, w) = plane_shape(field.geometry().shape())?;
    let (lo, hi) = (field.min(), field.max());
    let span = hi - lo;
    let pixels: Vec<u8> = field
        .values()
        .iter()
        .map(|&v| {
            if span > 0.0 {
                ((v - lo) / span * 255.0).round() as u8
            } else {
                0
            }
        })
        .collect();
    encode_gray(path, &pixels, h, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridGeometry;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn all_zero_image_is_all_free() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("zero.pgm");
        std::fs::write(&path, b"P2\n3 2\n255\n0 0 0\n0 0 0\n").unwrap();
        let mask = load_mask(&path, DEFAULT_THRESHOLD).unwrap();
        assert_eq!(mask.shape(), &[2, 3]);
        assert_eq!(mask.free_count(), 6);
    }

    #[test]
    fn ascii_checkerboard_keeps_dimensions_and_orientation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("check.pgm");
        let mut text = String::from("P2\n5 4\n255\n");
        for r in 0..4 {
            for c in 0..5 {
                text.push_str(if (r + c) % 2 == 0 { "255 " } else { "0 " });
            }
            text.push('\n');
        }
        std::fs::write(&path, text).unwrap();
        let mask = load_mask(&path, DEFAULT_THRESHOLD).unwrap();
        assert_eq!(mask.shape(), &[4, 5]);
        for r in 0..4 {
            for c in 0..5 {
                assert_eq!(mask.is_blocked(r * 5 + c), (r + c) % 2 == 0);
            }
        }
    }

    #[test]
    fn threshold_is_strict() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.pgm");
        std::fs::write(&path, b"P2\n3 1\n255\n99 100 101\n").unwrap();
        let mask = load_mask(&path, 100).unwrap();
        assert_eq!(mask.blocked(), &[false, false, true]);
    }

    #[test]
    fn random_masks_round_trip_through_pgm_and_png() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for name in ["m.pgm", "m.png"] {
            let blocked = (0..23 * 17).map(|_| rng.gen_bool(0.4)).collect();
            let mask = Mask::new(&[23, 17], blocked).unwrap();
            let path = dir.path().join(name);
            write_mask(&mask, &path).unwrap();
            assert_eq!(load_mask(&path, DEFAULT_THRESHOLD).unwrap(), mask);
        }
    }

    #[test]
    fn unreadable_files_are_format_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.pgm");
        std::fs::write(&path, b"P5\n10 10\n255\nshort").unwrap();
        assert!(matches!(load_mask(&path, 127), Err(Error::Format { .. })));
        assert!(matches!(load_mask(&dir.path().join("missing.png"), 127), Err(Error::Io { .. })));
    }

    #[test]
    fn field_rendering_spans_the_byte_range() {
        let dir = tempfile::tempdir().unwrap();
        let g = GridGeometry::new(&[4, 4], 1.0).unwrap();
        let field = ScalarField::from_world_fn(g, |w| w[0] - 3.0 * w[1]).unwrap();
        let path = dir.path().join("f.pgm");
        write_field_image(&field, &path).unwrap();
        let img = image::open(&path).unwrap().to_luma8();
        assert_eq!(img.get_pixel(0, 3).0[0], 255); // row 3, column 0
        assert_eq!(img.get_pixel(3, 0).0[0], 0);
    }
}
