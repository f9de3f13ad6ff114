//! Minimal binary Netpbm support: P5 (8/16-bit gray) and P6 (8-bit RGB).
//!
//! 16-bit samples are big-endian, as the format requires.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// A decoded Netpbm image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PnmImage {
    Gray8 {
        width: usize,
        height: usize,
        data: Vec<u8>,
    },
    Gray16 {
        width: usize,
        height: usize,
        data: Vec<u16>,
    },
    Rgb8 {
        width: usize,
        height: usize,
        data: Vec<u8>,
    },
}

impl PnmImage {
    pub fn dimensions(&self) -> (usize, usize) {
        match self {
            PnmImage::Gray8 { width, height, .. }
            | PnmImage::Gray16 { width, height, .. }
            | PnmImage::Rgb8 { width, height, .. } => (*width, *height),
        }
    }
}

pub fn encode_pgm8(width: usize, height: usize, data: &[u8]) -> Vec<u8> {
    assert_eq!(data.len(), width * height);
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(data);
    out
}

pub fn encode_pgm16(width: usize, height: usize, data: &[u16]) -> Vec<u8> {
    assert_eq!(data.len(), width * height);
    let mut out = format!("P5\n{width} {height}\n65535\n").into_bytes();
    out.reserve(data.len() * 2);
    for v in data {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out
}

pub fn encode_ppm(width: usize, height: usize, data: &[u8]) -> Vec<u8> {
    assert_eq!(data.len(), width * height * 3);
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(data);
    out
}

pub fn write_pgm8(path: &Path, width: usize, height: usize, data: &[u8]) -> Result<()> {
    fs::write(path, encode_pgm8(width, height, data)).map_err(|e| Error::io(path, e))
}

pub fn write_pgm16(path: &Path, width: usize, height: usize, data: &[u16]) -> Result<()> {
    fs::write(path, encode_pgm16(width, height, data)).map_err(|e| Error::io(path, e))
}

pub fn write_ppm(path: &Path, width: usize, height: usize, data: &[u8]) -> Result<()> {
    fs::write(path, encode_ppm(width, height, data)).map_err(|e| Error::io(path, e))
}

pub fn read_pnm(path: &Path) -> Result<PnmImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|message| Error::Format {
        path: path.to_path_buf(),
        message,
    })
}

struct Header {
    magic: [u8; 2],
    width: usize,
    height: usize,
    maxval: usize,
    data_start: usize,
}

fn parse_header(bytes: &[u8]) -> std::result::Result<Header, String> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err("missing P magic".into());
    }
    let magic = [bytes[0], bytes[1]];
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err("truncated header".into()),
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(format!("expected a number at byte {start}"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .unwrap()
            .parse()
            .map_err(|e| format!("bad header number: {e}"))?;
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err("missing whitespace after maxval".into()),
    }
    Ok(Header {
        magic,
        width: fields[0],
        height: fields[1],
        maxval: fields[2],
        data_start: pos,
    })
}

pub fn decode(bytes: &[u8]) -> std::result::Result<PnmImage, String> {
    let h = parse_header(bytes)?;
    let raster = &bytes[h.data_start..];
    let n = h.width * h.height;
    match (&h.magic, h.maxval) {
        (b"P5", 1..=255) => {
            if raster.len() != n {
                return Err(format!("expected {n} bytes of raster, got {}", raster.len()));
            }
            Ok(PnmImage::Gray8 {
                width: h.width,
                height: h.height,
                data: raster.to_vec(),
            })
        }
        (b"P5", 256..=65535) => {
            if raster.len() != 2 * n {
                return Err(format!(
                    "expected {} bytes of raster, got {}",
                    2 * n,
                    raster.len()
                ));
            }
            let data = raster
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]))
                .collect();
            Ok(PnmImage::Gray16 {
                width: h.width,
                height: h.height,
                data,
            })
        }
        (b"P6", 1..=255) => {
            if raster.len() != 3 * n {
                return Err(format!(
                    "expected {} bytes of raster, got {}",
                    3 * n,
                    raster.len()
                ));
            }
            Ok(PnmImage::Rgb8 {
                width: h.width,
                height: h.height,
                data: raster.to_vec(),
            })
        }
        (m, maxval) => Err(format!(
            "unsupported format {}{} with maxval {maxval}",
            m[0] as char, m[1] as char
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pgm16_is_big_endian() {
        let bytes = encode_pgm16(2, 1, &[0x0102, 0xfffe]);
        assert_eq!(&bytes[..13], b"P5\n2 1\n65535\n");
        assert_eq!(&bytes[13..], &[0x01, 0x02, 0xff, 0xfe]);
    }

    #[test]
    fn header_comments_are_skipped() {
        let mut bytes = b"P5\n# made by hand\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3, 4]);
        let img = decode(&bytes).unwrap();
        assert_eq!(
            img,
            PnmImage::Gray8 {
                width: 2,
                height: 2,
                data: vec![1, 2, 3, 4]
            }
        );
    }

    #[test]
    fn truncated_raster_is_rejected() {
        let mut bytes = encode_ppm(2, 2, &[7; 12]);
        bytes.pop();
        assert!(decode(&bytes).is_err());
    }

    proptest! {
        #[test]
        fn gray16_roundtrip(w in 1usize..9, h in 1usize..9, seed in any::<u64>()) {
            let data: Vec<u16> = (0..w * h)
                .map(|i| (seed.wrapping_mul(i as u64 + 1) >> 17) as u16)
                .collect();
            let img = decode(&encode_pgm16(w, h, &data)).unwrap();
            prop_assert_eq!(img, PnmImage::Gray16 { width: w, height: h, data });
        }
    }
}
