//! Binary portable graymap (P5) exchange with a TOML sidecar.

use serde::{Deserialize, Serialize};

use super::{EyeImage, ImageGeometry};
use crate::error::{Error, Result};

/// Projection metadata carried next to an exported image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageMetadata {
    pub mm_per_pixel_x: f64,
    pub mm_per_pixel_y: f64,
    pub optical_center_row: f64,
    pub optical_center_col: f64,
    #[serde(default)]
    pub fill_intensity: f64,
}

impl ImageMetadata {
    pub fn of(image: &EyeImage) -> Self {
        let (row, col) = image.optical_center();
        Self {
            mm_per_pixel_x: image.mm_per_pixel_x(),
            mm_per_pixel_y: image.mm_per_pixel_y(),
            optical_center_row: row,
            optical_center_col: col,
            fill_intensity: image.fill(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("metadata serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::ConfigParse {
            line: crate::cli_io::toml_error_line(text, &e),
            message: e.message().to_string(),
        })
    }
}

/// Encodes an image as a binary graymap with the given maxval.
pub fn export_pgm(image: &EyeImage, maxval: u16) -> Vec<u8> {
    let maxval = maxval.max(1);
    let mut out = format!("P5\n{} {}\n{}\n", image.cols(), image.rows(), maxval).into_bytes();
    let scale = maxval as f64;
    for &v in image.intensities() {
        let q = (v * scale).round() as u16;
        if maxval < 256 {
            out.push(q as u8);
        } else {
            out.extend_from_slice(&q.to_be_bytes());
        }
    }
    out
}

/// Decodes a binary graymap; intensities are normalised by maxval.
pub fn import_eye_image(bytes: &[u8], metadata: Option<&ImageMetadata>) -> Result<EyeImage> {
    let mut cursor = HeaderCursor { bytes, pos: 0 };
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        let message = if bytes.starts_with(b"P2") {
            "ASCII graymap (P2) is not supported; expected P5"
        } else {
            "missing P5 magic number"
        };
        return Err(Error::ImageParse {
            offset: 0,
            message: message.into(),
        });
    }
    cursor.pos = 2;
    let width = cursor.number("width")?;
    let height = cursor.number("height")?;
    let maxval = cursor.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::ImageParse {
            offset: cursor.pos,
            message: "image dimensions must be > 0".into(),
        });
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::ImageParse {
            offset: cursor.pos,
            message: format!("maxval {maxval} outside 1..=65535"),
        });
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(cursor.pos) {
        Some(b) if b.is_ascii_whitespace() => cursor.pos += 1,
        _ => {
            return Err(Error::ImageParse {
                offset: cursor.pos,
                message: "expected whitespace after maxval".into(),
            })
        }
    }
    let sample_bytes = if maxval < 256 { 1 } else { 2 };
    let n = width * height;
    let start = cursor.pos;
    let needed = n * sample_bytes;
    if bytes.len() - start < needed {
        return Err(Error::ImageParse {
            offset: bytes.len(),
            message: format!(
                "raster truncated: need {needed} bytes, have {}",
                bytes.len() - start
            ),
        });
    }
    let raster = &bytes[start..start + needed];
    let scale = maxval as f64;
    let mut intensities = Vec::with_capacity(n);
    for (i, chunk) in raster.chunks(sample_bytes).enumerate() {
        let v = if sample_bytes == 1 {
            chunk[0] as usize
        } else {
            u16::from_be_bytes([chunk[0], chunk[1]]) as usize
        };
        if v > maxval {
            return Err(Error::ImageParse {
                offset: start + i * sample_bytes,
                message: format!("sample {v} exceeds maxval {maxval}"),
            });
        }
        intensities.push(v as f64 / scale);
    }

    let meta = metadata.ok_or_else(|| {
        Error::config(
            "sidecar",
            "imported images need mm_per_pixel and optical_center metadata",
        )
    })?;
    let geometry = ImageGeometry {
        rows: height,
        cols: width,
        mm_per_pixel_x: meta.mm_per_pixel_x,
        mm_per_pixel_y: meta.mm_per_pixel_y,
        optical_center: (meta.optical_center_row, meta.optical_center_col),
    };
    EyeImage::new(geometry, intensities, meta.fill_intensity)
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let before = self.pos;
        self.skip_whitespace_and_comments();
        if self.pos == before {
            return Err(Error::ImageParse {
                offset: self.pos,
                message: format!("expected whitespace before {what}"),
            });
        }
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(Error::ImageParse {
                offset: start,
                message: format!("expected decimal {what}"),
            });
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or(Error::ImageParse {
                offset: start,
                message: format!("{what} out of range"),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> ImageMetadata {
        ImageMetadata {
            mm_per_pixel_x: 0.1,
            mm_per_pixel_y: 0.1,
            optical_center_row: 0.5,
            optical_center_col: 0.5,
            fill_intensity: 0.0,
        }
    }

    #[test]
    fn normalizes_by_maxval() {
        let mut bytes = b"P5\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 255, 128, 64]);
        let img = import_eye_image(&bytes, Some(&meta())).unwrap();
        assert_eq!(img.intensities(), &[0.0, 1.0, 128.0 / 255.0, 64.0 / 255.0]);
    }

    #[test]
    fn rejects_ascii_variant() {
        let bytes = b"P2\n2 2\n255\n0 1 2 3\n";
        match import_eye_image(bytes, Some(&meta())) {
            Err(Error::ImageParse { offset: 0, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reports_offset_of_bad_header() {
        let bytes = b"P5\n2 x\n255\n";
        match import_eye_image(bytes, Some(&meta())) {
            Err(Error::ImageParse { offset, .. }) => assert_eq!(offset, 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn truncated_raster_is_an_error() {
        let mut bytes = b"P5\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3]);
        assert!(matches!(
            import_eye_image(&bytes, Some(&meta())),
            Err(Error::ImageParse { .. })
        ));
    }

    #[test]
    fn missing_sidecar_is_config_error() {
        let mut bytes = b"P5\n1 1\n255\n".to_vec();
        bytes.push(7);
        assert!(matches!(
            import_eye_image(&bytes, None),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn comments_and_sixteen_bit() {
        let mut bytes = b"P5 # made by hand\n1 2\n# depth\n65535\n".to_vec();
        bytes.extend_from_slice(&[0xff, 0xff, 0x80, 0x00]);
        let img = import_eye_image(&bytes, Some(&meta())).unwrap();
        assert_eq!(img.intensities(), &[1.0, 32768.0 / 65535.0]);
    }

    #[test]
    fn sidecar_round_trips() {
        let m = meta();
        assert_eq!(ImageMetadata::from_toml(&m.to_toml()).unwrap(), m);
    }
}
