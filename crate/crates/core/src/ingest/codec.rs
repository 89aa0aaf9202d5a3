//! Frame codecs: binary PGM (P5) and 8-bit grayscale PNG.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use crate::frame::Frame;
use crate::ingest::IngestError;

/// Decode a binary PGM (P5) file. Comments and arbitrary whitespace are
/// accepted in the header; the maxval must be 255.
pub fn read_pgm(path: &Path) -> Result<Frame, IngestError> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| IngestError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
    parse_pgm(&bytes).map_err(|detail| IngestError::UnsupportedPixelFormat {
        path: path.display().to_string(),
        detail,
    })
}

fn parse_pgm(bytes: &[u8]) -> Result<Frame, String> {
    let mut pos = 0usize;
    if bytes.len() < 2 || &bytes[0..2] != b"P5" {
        return Err("not a binary PGM (missing P5 magic)".into());
    }
    pos += 2;
    let width = read_header_int(bytes, &mut pos)?;
    let height = read_header_int(bytes, &mut pos)?;
    let maxval = read_header_int(bytes, &mut pos)?;
    if maxval != 255 {
        return Err(format!("maxval {maxval} unsupported, expected 255"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err("missing whitespace before raster".into());
    }
    pos += 1;
    if width == 0 || height == 0 {
        return Err("zero dimension".into());
    }
    let expected = (width as usize) * (height as usize);
    let raster = &bytes[pos..];
    if raster.len() < expected {
        return Err(format!(
            "raster truncated: expected {expected} bytes, found {}",
            raster.len()
        ));
    }
    Ok(Frame::new(width, height, raster[..expected].to_vec()))
}

/// Read the next decimal integer in a PGM header, skipping whitespace and
/// `#` comment lines.
fn read_header_int(bytes: &[u8], pos: &mut usize) -> Result<u32, String> {
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
    if *pos == start {
        return Err("malformed header: expected integer".into());
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| "header integer out of range".into())
}

/// Write a frame as canonical binary PGM: `P5\n{w} {h}\n255\n` + raster.
pub fn write_pgm(path: &Path, frame: &Frame) -> Result<(), IngestError> {
    let io_err = |e| IngestError::Io {
        path: path.display().to_string(),
        source: e,
    };
    let mut f = File::create(path).map_err(io_err)?;
    let header = format!("P5\n{} {}\n255\n", frame.width(), frame.height());
    f.write_all(header.as_bytes()).map_err(io_err)?;
    f.write_all(frame.data()).map_err(io_err)?;
    Ok(())
}

/// Decode an 8-bit grayscale PNG. Other color types or bit depths are
/// rejected rather than converted.
pub fn read_png(path: &Path) -> Result<Frame, IngestError> {
    let file = File::open(path).map_err(|e| IngestError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let unsupported = |detail: String| IngestError::UnsupportedPixelFormat {
        path: path.display().to_string(),
        detail,
    };
    let decoder = png::Decoder::new(BufReader::new(file));
    let mut reader = decoder
        .read_info()
        .map_err(|e| unsupported(format!("png decode failed: {e}")))?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
        return Err(unsupported(format!(
            "png must be 8-bit grayscale, got {:?} {:?}",
            info.color_type,
            info.bit_depth
        )));
    }
    let mut buf = vec![0u8; reader.output_buffer_size()];
    let frame_info = reader
        .next_frame(&mut buf)
        .map_err(|e| unsupported(format!("png decode failed: {e}")))?;
    buf.truncate(frame_info.buffer_size());
    if frame_info.width == 0 || frame_info.height == 0 {
        return Err(unsupported("zero dimension".into()));
    }
    Ok(Frame::new(frame_info.width, frame_info.height, buf))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("frame_000001.pgm");
        let frame = Frame::from_fn(5, 3, |x, y| (x * 11 + y * 31) as u8);
        write_pgm(&path, &frame).unwrap();
        let back = read_pgm(&path).unwrap();
        assert_eq!(back, frame);
    }

    #[test]
    fn pgm_header_comments_and_whitespace() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"P5\n# recorded by rig 3\n  2\t2 # inline\n255\n");
        bytes.extend_from_slice(&[1, 2, 3, 4]);
        let frame = parse_pgm(&bytes).unwrap();
        assert_eq!(frame.dimensions(), (2, 2));
        assert_eq!(frame.data(), &[1, 2, 3, 4]);
    }

    #[test]
    fn pgm_rejects_wrong_maxval() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"P5\n2 2\n65535\n");
        bytes.extend_from_slice(&[0; 8]);
        assert!(parse_pgm(&bytes).is_err());
    }

    #[test]
    fn pgm_rejects_truncated_raster() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"P5\n4 4\n255\n");
        bytes.extend_from_slice(&[0; 10]);
        let err = parse_pgm(&bytes).unwrap_err();
        assert!(err.contains("truncated"));
    }

    #[test]
    fn png_round_trip_gray() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("frame_01.png");
        let frame = Frame::from_fn(7, 4, |x, y| (x * 9 + y * 17) as u8);
        let file = File::create(&path).unwrap();
        let mut enc = png::Encoder::new(std::io::BufWriter::new(file), 7, 4);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().unwrap();
        writer.write_image_data(frame.data()).unwrap();
        writer.finish().unwrap();
        let back = read_png(&path).unwrap();
        assert_eq!(back, frame);
    }

    #[test]
    fn png_rejects_rgb() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("frame_01.png");
        let file = File::create(&path).unwrap();
        let mut enc = png::Encoder::new(std::io::BufWriter::new(file), 2, 2);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().unwrap();
        writer.write_image_data(&[0u8; 12]).unwrap();
        writer.finish().unwrap();
        let err = read_png(&path).unwrap_err();
        assert!(matches!(err, IngestError::UnsupportedPixelFormat { .. }));
    }
}
