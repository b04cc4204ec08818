//! Binary (P5) PGM images. Masks are stored as 0/255; on read, anything above
//! 127 counts as foreground.

use super::{IoError, IoResult};
use crate::mask::Mask;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

pub fn write_mask_pgm(path: &Path, mask: &Mask) -> IoResult<()> {
    let bytes: Vec<u8> = mask.data.iter().map(|&m| if m { 255 } else { 0 }).collect();
    write_raster(path, mask.width, mask.height, &bytes)
}

pub fn read_mask_pgm(path: &Path) -> IoResult<Mask> {
    let (w, h, bytes) = read_raster(path)?;
    Ok(Mask {
        width: w,
        height: h,
        data: bytes.iter().map(|&b| b > 127).collect(),
    })
}

/// Store an intensity image in `[0,1]` as 8-bit gray, clamping out-of-range.
pub fn write_gray_pgm(path: &Path, w: usize, h: usize, pixels: &[f32]) -> IoResult<()> {
    assert_eq!(pixels.len(), w * h, "pixel buffer must be w*h");
    let bytes: Vec<u8> = pixels
        .iter()
        .map(|&p| (p.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    write_raster(path, w, h, &bytes)
}

pub fn read_gray_pgm(path: &Path) -> IoResult<(usize, usize, Vec<f32>)> {
    let (w, h, bytes) = read_raster(path)?;
    Ok((w, h, bytes.iter().map(|&b| b as f32 / 255.0).collect()))
}

fn write_raster(path: &Path, w: usize, h: usize, bytes: &[u8]) -> IoResult<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write!(out, "P5\n{w} {h}\n255\n")?;
    out.write_all(bytes)?;
    out.flush()?;
    Ok(())
}

fn read_raster(path: &Path) -> IoResult<(usize, usize, Vec<u8>)> {
    let mut input = BufReader::new(File::open(path)?);
    let mut all = Vec::new();
    input.read_to_end(&mut all)?;
    if all.len() < 2 || &all[0..2] != b"P5" {
        return Err(IoError::BadMagic { expected: "pgm" });
    }
    let mut pos = 2usize;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        *field = read_header_int(&all, &mut pos)?;
    }
    let (w, h, maxval) = (fields[0], fields[1], fields[2]);
    if maxval != 255 {
        return Err(malformed(format!("maxval {maxval}, only 255 supported")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    if all.len() < pos || all.len() - pos != w * h {
        return Err(malformed(format!(
            "raster has {} bytes, header implies {}",
            all.len().saturating_sub(pos),
            w * h
        )));
    }
    Ok((w, h, all[pos..].to_vec()))
}

/// Parse the next decimal field, skipping whitespace and `#` comment lines.
fn read_header_int(bytes: &[u8], pos: &mut usize) -> IoResult<usize> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if start == *pos {
        return Err(malformed("expected integer header field".into()));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| malformed("unparsable header field".into()))
}

fn malformed(detail: String) -> IoError {
    IoError::Malformed {
        format: "pgm",
        detail,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.pgm");
        let mask = Mask::from_fn(5, 3, |x, y| (x + y) % 2 == 0);
        write_mask_pgm(&path, &mask).unwrap();
        let back = read_mask_pgm(&path).unwrap();
        assert_eq!(back, mask);
    }

    #[test]
    fn header_comments_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.pgm");
        let mut bytes = b"P5\n# produced by hand\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 255, 255, 0]);
        std::fs::write(&path, bytes).unwrap();
        let mask = read_mask_pgm(&path).unwrap();
        assert_eq!(mask.data, vec![false, true, true, false]);
    }

    #[test]
    fn short_raster_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.pgm");
        std::fs::write(&path, b"P5\n4 4\n255\nxx").unwrap();
        assert!(read_mask_pgm(&path).is_err());
    }
}
