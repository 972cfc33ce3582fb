//! File formats.
//!
//! * images and masks: 8-bit grayscale PNG (mask foreground = 255);
//! * orientation fields: `OFD1`, u32 LE width, u32 LE height, then
//!   width×height f32 LE radians, row-major;
//! * frequency maps: same layout with magic `FQM1`;
//! * minutiae: UTF-8 text, header `MIN1 <count>` then `<x> <y> <dir> <E|B>`
//!   per line.

use std::fmt::Write as _;
use std::io::Cursor;
use std::path::Path;

use crate::error::{Error, Location, Result};
use crate::raster::{FrequencyMap, GrayImage, Minutia, MinutiaKind, MinutiaSet, OrientationField, SegmentationMask};
use crate::scalar::Real;

pub const ORIENTATION_MAGIC: &[u8; 4] = b"OFD1";
pub const FREQUENCY_MAGIC: &[u8; 4] = b"FQM1";
pub const MINUTIAE_MAGIC: &str = "MIN1";

const HEADER_LEN: usize = 12;

// ---------------------------------------------------------------- PNG

pub fn encode_gray_png(img: &GrayImage) -> Result<Vec<u8>> {
    let buf = image::GrayImage::from_raw(img.width() as u32, img.height() as u32, img.as_slice().to_vec())
        .expect("buffer length matches dimensions");
    let mut out = Cursor::new(Vec::new());
    buf.write_to(&mut out, image::ImageFormat::Png)?;
    Ok(out.into_inner())
}

/// Decodes a PNG; colour inputs are converted to luma.
pub fn decode_gray_png(bytes: &[u8]) -> Result<GrayImage> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)?.into_luma8();
    let (w, h) = img.dimensions();
    GrayImage::new(w as usize, h as usize, img.into_raw())
}

pub fn read_gray_png(path: impl AsRef<Path>) -> Result<GrayImage> {
    decode_gray_png(&std::fs::read(path)?)
}

pub fn write_gray_png(path: impl AsRef<Path>, img: &GrayImage) -> Result<()> {
    std::fs::write(path, encode_gray_png(img)?)?;
    Ok(())
}

pub fn mask_to_gray(mask: &SegmentationMask) -> GrayImage {
    GrayImage::from_grid(mask.map(|&f| if f { 255 } else { 0 }))
}

/// Pixels ≥ 128 are foreground.
pub fn gray_to_mask(img: &GrayImage) -> SegmentationMask {
    SegmentationMask::from_grid(img.map(|&p| p >= 128))
}

pub fn read_mask_png(path: impl AsRef<Path>) -> Result<SegmentationMask> {
    read_gray_png(path).map(|g| gray_to_mask(&g))
}

pub fn write_mask_png(path: impl AsRef<Path>, mask: &SegmentationMask) -> Result<()> {
    write_gray_png(path, &mask_to_gray(mask))
}

// ---------------------------------------------------------------- fields

fn encode_field<T: Real>(magic: &[u8; 4], width: usize, height: usize, values: &[T]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + values.len() * 4);
    out.extend_from_slice(magic);
    out.extend_from_slice(&(width as u32).to_le_bytes());
    out.extend_from_slice(&(height as u32).to_le_bytes());
    for v in values {
        out.extend_from_slice(&(v.to_f32().unwrap_or(f32::NAN)).to_le_bytes());
    }
    out
}

fn decode_field(format: &'static str, magic: &[u8; 4], bytes: &[u8]) -> Result<(usize, usize, Vec<f32>)> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::parse(format, Location::Byte(bytes.len()), "truncated header"));
    }
    if &bytes[..4] != magic {
        return Err(Error::parse(format, Location::Byte(0), "bad magic"));
    }
    let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if width == 0 || height == 0 {
        return Err(Error::parse(format, Location::Byte(4), "zero dimension"));
    }
    let payload = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::parse(format, Location::Byte(4), "dimension overflow"))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() < payload {
        return Err(Error::parse(format, Location::Byte(bytes.len()), "truncated payload"));
    }
    if body.len() > payload {
        return Err(Error::parse(format, Location::Byte(HEADER_LEN + payload), "trailing bytes"));
    }
    let mut values = Vec::with_capacity(width * height);
    for (i, chunk) in body.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::parse(format, Location::Byte(HEADER_LEN + 4 * i), "non-finite value"));
        }
        values.push(v);
    }
    Ok((width, height, values))
}

pub fn encode_orientation<T: Real>(field: &OrientationField<T>) -> Vec<u8> {
    encode_field(ORIENTATION_MAGIC, field.width(), field.height(), field.as_slice())
}

pub fn decode_orientation<T: Real>(bytes: &[u8]) -> Result<OrientationField<T>> {
    let (w, h, v) = decode_field("OFD1", ORIENTATION_MAGIC, bytes)?;
    OrientationField::new(w, h, v.into_iter().map(|a| T::of(a as f64)).collect())
}

pub fn encode_frequency<T: Real>(map: &FrequencyMap<T>) -> Vec<u8> {
    encode_field(FREQUENCY_MAGIC, map.width(), map.height(), map.as_slice())
}

pub fn decode_frequency<T: Real>(bytes: &[u8]) -> Result<FrequencyMap<T>> {
    let (w, h, v) = decode_field("FQM1", FREQUENCY_MAGIC, bytes)?;
    if let Some(i) = v.iter().position(|&f| f < 0.0) {
        return Err(Error::parse("FQM1", Location::Byte(HEADER_LEN + 4 * i), "negative frequency"));
    }
    FrequencyMap::new(w, h, v.into_iter().map(|f| T::of(f as f64)).collect())
}

pub fn read_orientation<T: Real>(path: impl AsRef<Path>) -> Result<OrientationField<T>> {
    decode_orientation(&std::fs::read(path)?)
}

pub fn write_orientation<T: Real>(path: impl AsRef<Path>, field: &OrientationField<T>) -> Result<()> {
    std::fs::write(path, encode_orientation(field))?;
    Ok(())
}

pub fn read_frequency<T: Real>(path: impl AsRef<Path>) -> Result<FrequencyMap<T>> {
    decode_frequency(&std::fs::read(path)?)
}

pub fn write_frequency<T: Real>(path: impl AsRef<Path>, map: &FrequencyMap<T>) -> Result<()> {
    std::fs::write(path, encode_frequency(map))?;
    Ok(())
}

// ---------------------------------------------------------------- minutiae

pub fn format_minutiae(set: &[Minutia]) -> String {
    let mut s = format!("{MINUTIAE_MAGIC} {}\n", set.len());
    for m in set {
        writeln!(s, "{} {} {} {}", m.x, m.y, m.direction, m.kind.code()).unwrap();
    }
    s
}

fn parse_real(tok: &str, line: usize, what: &str) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| Error::parse("MIN1", Location::Line(line), format!("bad {what} `{tok}`")))?;
    if !v.is_finite() {
        return Err(Error::parse("MIN1", Location::Line(line), format!("non-finite {what}")));
    }
    Ok(v)
}

pub fn parse_minutiae(text: &str) -> Result<MinutiaSet> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse("MIN1", Location::Line(1), "missing header"))?;
    let mut head = header.split_whitespace();
    if head.next() != Some(MINUTIAE_MAGIC) {
        return Err(Error::parse("MIN1", Location::Line(1), "bad magic"));
    }
    let count: usize = head
        .next()
        .and_then(|c| c.parse().ok())
        .ok_or_else(|| Error::parse("MIN1", Location::Line(1), "bad count"))?;
    if head.next().is_some() {
        return Err(Error::parse("MIN1", Location::Line(1), "unexpected token in header"));
    }

    let mut set = Vec::with_capacity(count.min(1 << 16));
    for (no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        if set.len() == count {
            return Err(Error::parse("MIN1", Location::Line(no), "more entries than declared"));
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 4 {
            return Err(Error::parse("MIN1", Location::Line(no), "expected `<x> <y> <direction> <E|B>`"));
        }
        let x = parse_real(toks[0], no, "x")?;
        let y = parse_real(toks[1], no, "y")?;
        let dir = parse_real(toks[2], no, "direction")?;
        let kind = match toks[3] {
            "E" => MinutiaKind::Ending,
            "B" => MinutiaKind::Bifurcation,
            other => {
                return Err(Error::parse("MIN1", Location::Line(no), format!("bad kind `{other}`")));
            }
        };
        set.push(Minutia::new(x, y, dir, kind));
    }
    if set.len() != count {
        return Err(Error::parse(
            "MIN1",
            Location::Line(text.lines().count() + 1),
            format!("truncated: {} of {count} entries", set.len()),
        ));
    }
    Ok(set)
}

pub fn read_minutiae(path: impl AsRef<Path>) -> Result<MinutiaSet> {
    parse_minutiae(&std::fs::read_to_string(path)?)
}

pub fn write_minutiae(path: impl AsRef<Path>, set: &[Minutia]) -> Result<()> {
    std::fs::write(path, format_minutiae(set))?;
    Ok(())
}
