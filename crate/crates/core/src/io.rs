//! File formats: center-set CSV, the `SFLD` binary scalar field, and a lossy
//! 16-bit grayscale PNG export for viewing fields.
//!
//! `SFLD` layout, all little-endian:
//!
//! | offset | size      | content                      |
//! |--------|-----------|------------------------------|
//! | 0      | 4         | magic `SFLD`                 |
//! | 4      | 1         | version, currently 1         |
//! | 5      | 4         | height (`u32`)               |
//! | 9      | 4         | width (`u32`)                |
//! | 13     | 4 * h * w | `f32` values, row-major      |

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{CenterSet, Point, ScalarField};

pub const SFLD_MAGIC: &[u8; 4] = b"SFLD";
pub const SFLD_VERSION: u8 = 1;
const SFLD_HEADER_LEN: usize = 13;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Serializes a field; values are narrowed to `f32`.
pub fn encode_sfld(field: &ScalarField) -> Vec<u8> {
    let mut out = Vec::with_capacity(SFLD_HEADER_LEN + 4 * field.values().len());
    out.extend_from_slice(SFLD_MAGIC);
    out.push(SFLD_VERSION);
    out.extend_from_slice(&(field.height() as u32).to_le_bytes());
    out.extend_from_slice(&(field.width() as u32).to_le_bytes());
    for &v in field.values() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn decode_sfld(bytes: &[u8]) -> std::result::Result<ScalarField, String> {
    if bytes.len() < SFLD_HEADER_LEN {
        return Err(format!("truncated header ({} bytes)", bytes.len()));
    }
    if &bytes[..4] != SFLD_MAGIC {
        return Err("bad magic, expected `SFLD`".into());
    }
    if bytes[4] != SFLD_VERSION {
        return Err(format!("unsupported version {}", bytes[4]));
    }
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
    let (height, width) = (u32_at(5), u32_at(9));
    let expected = height
        .checked_mul(width)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(SFLD_HEADER_LEN))
        .ok_or("dimensions overflow")?;
    if bytes.len() != expected {
        return Err(format!(
            "expected {expected} bytes for {height}x{width}, found {}",
            bytes.len()
        ));
    }
    let values = bytes[SFLD_HEADER_LEN..]
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
        .collect();
    ScalarField::from_vec(height, width, values).map_err(|e| e.to_string())
}

pub fn write_sfld(path: &Path, field: &ScalarField) -> Result<()> {
    std::fs::write(path, encode_sfld(field)).map_err(io_err(path))
}

pub fn read_sfld(path: &Path) -> Result<ScalarField> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    decode_sfld(&bytes).map_err(|m| format_err(path, m))
}

/// Renders centers as `row,col` CSV with a header line.
pub fn centers_to_csv(centers: &[Point]) -> String {
    let mut out = String::from("row,col\n");
    for p in centers {
        out.push_str(&format!("{},{}\n", p.row, p.col));
    }
    out
}

/// Parses `row,col` CSV. Blank lines are skipped; the header is mandatory.
pub fn parse_centers_csv(text: &str) -> std::result::Result<Vec<Point>, String> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, header)) if header.replace(' ', "") == "row,col" => {}
        Some((n, other)) => return Err(format!("line {n}: expected header `row,col`, found `{other}`")),
        None => return Err("missing header `row,col`".into()),
    }
    lines
        .map(|(n, line)| {
            let mut parts = line.split(',').map(str::trim);
            let (Some(r), Some(c), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(format!("line {n}: expected two fields, found `{line}`"));
            };
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|e| format!("line {n}: `{s}` is not a non-negative integer ({e})"))
            };
            Ok(Point::new(parse(r)?, parse(c)?))
        })
        .collect()
}

pub fn read_centers(path: &Path) -> Result<Vec<Point>> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_centers_csv(&text).map_err(|m| format_err(path, m))
}

/// Reads a center CSV and validates it against a `height x width` grid.
pub fn read_center_set(path: &Path, height: usize, width: usize) -> Result<CenterSet> {
    CenterSet::new(height, width, read_centers(path)?)
}

pub fn write_centers(path: &Path, centers: &[Point]) -> Result<()> {
    std::fs::write(path, centers_to_csv(centers)).map_err(io_err(path))
}

/// Linear map of `[0, max]` to `0..=65535`; negatives clamp to 0, and an
/// all-nonpositive field maps to black.
pub fn field_to_gray16(field: &ScalarField) -> Vec<u16> {
    let max = field.max().filter(|m| *m > 0.0 && m.is_finite());
    field
        .values()
        .iter()
        .map(|&v| match max {
            Some(m) if v.is_finite() => ((v / m).clamp(0.0, 1.0) * 65535.0).round() as u16,
            Some(_) if v == f64::INFINITY => u16::MAX,
            _ => 0,
        })
        .collect()
}

/// 16-bit grayscale PNG for visualization. Lossy.
pub fn export_png16(path: &Path, field: &ScalarField) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut encoder = png::Encoder::new(
        BufWriter::new(file),
        field.width() as u32,
        field.height() as u32,
    );
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Sixteen);
    let png_err = |e: png::EncodingError| format_err(path, e.to_string());
    let mut writer = encoder.write_header().map_err(png_err)?;
    let data: Vec<u8> = field_to_gray16(field)
        .into_iter()
        .flat_map(u16::to_be_bytes)
        .collect();
    writer.write_image_data(&data).map_err(png_err)?;
    writer.finish().map_err(png_err)?;
    Ok(())
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    w.write_all(contents.as_bytes()).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sfld_layout_is_exact() {
        let f = ScalarField::from_vec(1, 2, vec![1.0, -0.5]).unwrap();
        let bytes = encode_sfld(&f);
        let mut expected = b"SFLD\x01".to_vec();
        expected.extend_from_slice(&[1, 0, 0, 0, 2, 0, 0, 0]);
        expected.extend_from_slice(&1.0f32.to_le_bytes());
        expected.extend_from_slice(&(-0.5f32).to_le_bytes());
        assert_eq!(bytes, expected);
        assert_eq!(decode_sfld(&bytes).unwrap(), f);
    }

    #[test]
    fn sfld_rejects_corruption() {
        let f = ScalarField::zeros(2, 3);
        let good = encode_sfld(&f);
        assert!(decode_sfld(&good[..good.len() - 1]).is_err());
        assert!(decode_sfld(&good[..5]).is_err());
        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(decode_sfld(&bad_magic).unwrap_err().contains("magic"));
        let mut bad_version = good;
        bad_version[4] = 2;
        assert!(decode_sfld(&bad_version).unwrap_err().contains("version"));
    }

    #[test]
    fn csv_parsing() {
        let pts = parse_centers_csv("row,col\n3,4\n\n10, 2\n").unwrap();
        assert_eq!(pts, vec![Point::new(3, 4), Point::new(10, 2)]);
        assert_eq!(parse_centers_csv(&centers_to_csv(&pts)).unwrap(), pts);
        assert!(parse_centers_csv("row,col\n").unwrap().is_empty());
        assert!(parse_centers_csv("3,4\n").is_err());
        assert!(parse_centers_csv("row,col\n3\n").is_err());
        assert!(parse_centers_csv("row,col\n-1,2\n").is_err());
        assert!(parse_centers_csv("").is_err());
    }

    #[test]
    fn gray16_mapping() {
        let f = ScalarField::from_vec(1, 4, vec![0.0, 0.5, 1.0, -1.0]).unwrap();
        assert_eq!(field_to_gray16(&f), vec![0, 32768, 65535, 0]);
        assert_eq!(field_to_gray16(&ScalarField::zeros(1, 2)), vec![0, 0]);
    }

    #[test]
    fn png_export_writes_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.png");
        let mut f = ScalarField::zeros(5, 7);
        f[(2, 3)] = 2.0;
        export_png16(&path, &f).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[1..4], b"PNG");
    }
}
