//! Portable float map (PFM) reading and writing.
//!
//! Files are written little-endian (scale `-1.0`) with rows bottom-to-top, as
//! the format requires. In memory, rows are top-to-bottom.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{EncodedImage, LinearImage, CHANNELS};

/// Encodes an RGB float buffer as a little-endian PFM byte stream.
pub fn encode_pfm(width: usize, height: usize, data: &[f32]) -> Vec<u8> {
    debug_assert_eq!(data.len(), width * height * CHANNELS);
    let header = format!("PF\n{width} {height}\n-1.0\n");
    let mut out = Vec::with_capacity(header.len() + data.len() * 4);
    out.extend_from_slice(header.as_bytes());
    let row_len = width * CHANNELS;
    for y in (0..height).rev() {
        for v in &data[y * row_len..(y + 1) * row_len] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

pub fn write_pfm(img: &LinearImage, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), &encode_pfm(img.width(), img.height(), img.data()))
}

/// Writes encoded values; the encoding tag is not stored in the file.
pub fn write_encoded_pfm(img: &EncodedImage, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), &encode_pfm(img.width(), img.height(), img.data()))
}

/// Parsed PFM contents before validation of the pixel values.
#[derive(Debug, Clone, PartialEq)]
pub struct PfmData {
    pub width: usize,
    pub height: usize,
    /// Number of channels stored in the file (1 for `Pf`, 3 for `PF`).
    pub file_channels: usize,
    pub scale: f32,
    /// RGB, top-to-bottom; grey files are replicated into three channels.
    pub rgb: Vec<f32>,
}

/// Decodes a PFM byte stream. `source` only labels error messages.
pub fn decode_pfm(bytes: &[u8], source: &Path) -> Result<PfmData> {
    let fail = |reason: String| Error::Pfm {
        path: source.to_path_buf(),
        reason,
    };
    let mut pos = 0usize;
    // Reads one whitespace-delimited token and consumes exactly one trailing
    // whitespace byte.
    let mut token = |what: &str| -> Result<String> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos || pos >= bytes.len() {
            return Err(fail(format!("missing {what} in header")));
        }
        let tok = String::from_utf8_lossy(&bytes[start..pos]).into_owned();
        pos += 1;
        Ok(tok)
    };
    let magic = token("magic")?;
    let file_channels = match magic.as_str() {
        "PF" => 3,
        "Pf" => 1,
        other => return Err(fail(format!("bad magic {other:?}"))),
    };
    let dim = |s: String, what: &str| -> Result<usize> {
        s.parse::<usize>()
            .ok()
            .filter(|&v| v > 0)
            .ok_or_else(|| fail(format!("bad {what} {s:?}")))
    };
    let width = dim(token("width")?, "width")?;
    let height = dim(token("height")?, "height")?;
    let scale_tok = token("scale")?;
    let scale: f32 = scale_tok
        .parse()
        .ok()
        .filter(|s: &f32| s.is_finite() && *s != 0.0)
        .ok_or_else(|| fail(format!("bad scale {scale_tok:?}")))?;
    let little = scale < 0.0;

    let count = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(file_channels))
        .ok_or_else(|| fail("dimensions overflow".into()))?;
    let payload = &bytes[pos..];
    if payload.len() < count * 4 {
        return Err(fail(format!(
            "truncated payload: expected {} bytes, found {}",
            count * 4,
            payload.len()
        )));
    }
    if payload.len() > count * 4 {
        return Err(fail(format!(
            "{} trailing bytes after payload",
            payload.len() - count * 4
        )));
    }
    let values: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| {
            let b = [c[0], c[1], c[2], c[3]];
            if little {
                f32::from_le_bytes(b)
            } else {
                f32::from_be_bytes(b)
            }
        })
        .collect();

    let row_len = width * file_channels;
    let mut rgb = Vec::with_capacity(width * height * CHANNELS);
    for y in (0..height).rev() {
        let row = &values[y * row_len..(y + 1) * row_len];
        if file_channels == 3 {
            rgb.extend_from_slice(row);
        } else {
            for &v in row {
                rgb.extend_from_slice(&[v; 3]);
            }
        }
    }
    Ok(PfmData {
        width,
        height,
        file_channels,
        scale,
        rgb,
    })
}

/// Reads a PFM file as a linear image. NaN, infinite and negative values are
/// rejected.
pub fn read_pfm(path: impl AsRef<Path>) -> Result<LinearImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let pfm = decode_pfm(&bytes, path)?;
    if let Some((i, v)) = pfm
        .rgb
        .iter()
        .enumerate()
        .find(|(_, v)| !v.is_finite() || **v < 0.0)
    {
        return Err(Error::Pfm {
            path: path.to_path_buf(),
            reason: format!("invalid pixel value {v} at element {i}"),
        });
    }
    LinearImage::new(pfm.width, pfm.height, pfm.rgb)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_one_pixel_file() {
        let img = LinearImage::constant(1, 1, 1.0).unwrap();
        let bytes = encode_pfm(1, 1, img.data());
        let mut expected = b"PF\n1 1\n-1.0\n".to_vec();
        for _ in 0..3 {
            expected.extend_from_slice(&[0x00, 0x00, 0x80, 0x3F]);
        }
        assert_eq!(bytes, expected);
    }

    #[test]
    fn rows_are_stored_bottom_up() {
        let img = LinearImage::from_fn(1, 2, |_, y| [y as f32; 3]).unwrap();
        let bytes = encode_pfm(1, 2, img.data());
        let payload = &bytes[bytes.len() - 24..];
        assert_eq!(&payload[0..4], &1.0f32.to_le_bytes());
        assert_eq!(&payload[12..16], &0.0f32.to_le_bytes());
    }

    #[test]
    fn big_endian_and_grey() {
        let mut bytes = b"Pf\n2 1\n1.0\n".to_vec();
        bytes.extend_from_slice(&0.5f32.to_be_bytes());
        bytes.extend_from_slice(&2.0f32.to_be_bytes());
        let p = decode_pfm(&bytes, Path::new("mem")).unwrap();
        assert_eq!(p.file_channels, 1);
        assert_eq!(p.rgb, vec![0.5, 0.5, 0.5, 2.0, 2.0, 2.0]);
    }

    #[test]
    fn malformed_inputs() {
        let m = Path::new("mem");
        assert!(decode_pfm(b"P6\n1 1\n-1.0\n", m).is_err());
        assert!(decode_pfm(b"PF\n0 1\n-1.0\n", m).is_err());
        assert!(decode_pfm(b"PF\n1 1\n0.0\n", m).is_err());
        assert!(decode_pfm(b"PF\n1 1\n-1.0\n\0\0\0", m).is_err());
        assert!(decode_pfm(b"PF\n1", m).is_err());
        let mut extra = encode_pfm(1, 1, &[0.0; 3]);
        extra.push(0);
        assert!(decode_pfm(&extra, m).is_err());
    }

    #[test]
    fn rejects_nan_and_negative_on_read() {
        let dir = tempfile::tempdir().unwrap();
        for bad in [f32::NAN, -1.0, f32::INFINITY] {
            let path = dir.path().join("bad.pfm");
            fs::write(&path, encode_pfm(1, 1, &[0.0, bad, 0.0])).unwrap();
            assert!(matches!(read_pfm(&path), Err(Error::Pfm { .. })));
        }
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/img.pfm");
        let img = LinearImage::from_fn(5, 3, |x, y| [x as f32 * 0.1, y as f32, 1e-30]).unwrap();
        write_pfm(&img, &path).unwrap();
        assert_eq!(read_pfm(&path).unwrap(), img);
        assert!(read_pfm(dir.path().join("missing.pfm")).is_err());
    }
}
