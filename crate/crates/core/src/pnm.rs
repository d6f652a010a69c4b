//! Binary PGM (P5) encoding for 8-bit tactile frames and 16-bit depth images.

use std::fs;
use std::path::Path;

use crate::error::{io_err, Error, Result};
use crate::pose_estimation::DepthImage;
use crate::tactile_image::GrayFrame;

fn header(width: usize, height: usize, maxval: u32) -> Vec<u8> {
    format!("P5\n{width} {height}\n{maxval}\n").into_bytes()
}

pub fn encode_pgm(frame: &GrayFrame) -> Vec<u8> {
    let mut out = header(frame.width(), frame.height(), 255);
    out.extend_from_slice(frame.data());
    out
}

/// 16-bit samples are big-endian as Netpbm requires.
pub fn encode_pgm16(depth: &DepthImage) -> Vec<u8> {
    let mut out = header(depth.width(), depth.height(), 65535);
    for &v in depth.data() {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out
}

struct Parsed<'a> {
    width: usize,
    height: usize,
    maxval: u32,
    body: &'a [u8],
}

fn parse(bytes: &[u8]) -> Result<Parsed<'_>> {
    let fmt = |m: &str| Error::Format(format!("pgm: {m}"));
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(fmt("missing P5 magic"));
    }
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for field in &mut fields {
        // Skip whitespace and comment lines.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(fmt("truncated header")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(fmt("expected a number in header"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| fmt("header number out of range"))?;
    }
    // Exactly one whitespace byte separates the header from the raster.
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(fmt("missing separator after maxval"));
    }
    pos += 1;
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err(fmt("invalid dimensions or maxval"));
    }
    Ok(Parsed {
        width: width as usize,
        height: height as usize,
        maxval,
        body: &bytes[pos..],
    })
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayFrame> {
    let p = parse(bytes)?;
    if p.maxval != 255 {
        return Err(Error::Format(format!("pgm: expected maxval 255, got {}", p.maxval)));
    }
    let n = p.width * p.height;
    if p.body.len() != n {
        return Err(Error::Format(format!("pgm: expected {n} raster bytes, got {}", p.body.len())));
    }
    GrayFrame::new(p.width, p.height, p.body.to_vec())
}

pub fn decode_pgm16(bytes: &[u8]) -> Result<DepthImage> {
    let p = parse(bytes)?;
    if p.maxval != 65535 {
        return Err(Error::Format(format!("pgm: expected maxval 65535, got {}", p.maxval)));
    }
    let n = p.width * p.height;
    if p.body.len() != 2 * n {
        return Err(Error::Format(format!("pgm: expected {} raster bytes, got {}", 2 * n, p.body.len())));
    }
    let data = p.body.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect();
    DepthImage::new(p.width, p.height, data)
}

pub fn write_pgm(path: &Path, frame: &GrayFrame) -> Result<()> {
    fs::write(path, encode_pgm(frame)).map_err(io_err(path))
}

pub fn read_pgm(path: &Path) -> Result<GrayFrame> {
    decode_pgm(&fs::read(path).map_err(io_err(path))?)
}

pub fn write_pgm16(path: &Path, depth: &DepthImage) -> Result<()> {
    fs::write(path, encode_pgm16(depth)).map_err(io_err(path))
}

pub fn read_pgm16(path: &Path) -> Result<DepthImage> {
    decode_pgm16(&fs::read(path).map_err(io_err(path))?)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn header_layout_is_exact() {
        let f = GrayFrame::new(3, 2, vec![0, 1, 2, 253, 254, 255]).unwrap();
        let bytes = encode_pgm(&f);
        assert_eq!(&bytes[..11], b"P5\n3 2\n255\n");
        assert_eq!(&bytes[11..], &[0, 1, 2, 253, 254, 255]);
    }

    #[test]
    fn comments_in_header_are_skipped() {
        let mut bytes = b"P5\n# made by hand\n2 1\n# another\n255\n".to_vec();
        bytes.extend_from_slice(&[7, 9]);
        assert_eq!(decode_pgm(&bytes).unwrap().data(), &[7, 9]);
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        assert!(decode_pgm(b"P2\n1 1\n255\n\x00").is_err());
        assert!(decode_pgm(b"P5\n2 2\n255\n\x00").is_err());
        assert!(decode_pgm(b"P5\n1 1\n65535\n\x00\x00").is_err());
        assert!(decode_pgm16(b"P5\n1 1\n255\n\x00").is_err());
    }

    #[test]
    fn sixteen_bit_is_big_endian() {
        let d = DepthImage::new(2, 1, vec![0x0102, 800]).unwrap();
        let bytes = encode_pgm16(&d);
        assert_eq!(&bytes[bytes.len() - 4..], &[0x01, 0x02, 0x03, 0x20]);
        assert_eq!(decode_pgm16(&bytes).unwrap(), d);
    }

    proptest! {
        #[test]
        fn pgm_roundtrip(w in 1usize..20, h in 1usize..20, seed in any::<u64>()) {
            let f = GrayFrame::from_fn(w, h, |x, y| (seed.wrapping_mul(31).wrapping_add((x * 17 + y * 101) as u64) % 256) as u8);
            prop_assert_eq!(decode_pgm(&encode_pgm(&f)).unwrap(), f);
        }
    }
}
