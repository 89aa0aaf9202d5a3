//! Raster outputs: montage sheets, track overlays and PNG encoding.

use std::path::Path;

use dropscope_core::{histogram_stretch, round_half_up, Frame, Track};

use crate::error::CliError;
use crate::output::atomic_write;

const GUTTER_PX: u32 = 2;
const GUTTER_VALUE: u8 = 128;

/// Colors cycled by track id for overlay drawing.
const PALETTE: [[u8; 3]; 8] = [
    [230, 25, 75],
    [60, 180, 75],
    [255, 225, 25],
    [0, 130, 200],
    [245, 130, 48],
    [145, 30, 180],
    [70, 240, 240],
    [240, 50, 230],
];

/// Frames to skip between montage panels for a sampling interval in
/// milliseconds, never less than one.
pub fn compute_stride(interval_ms: f64, fps: f64) -> usize {
    round_half_up(interval_ms / 1000.0 * fps).max(1.0) as usize
}

/// Number of panels a montage of `frames` frames gets at `stride`.
pub fn panel_count(frames: usize, stride: usize) -> usize {
    (frames - 1) / stride + 1
}

/// Compose every `stride`-th frame into a grid, contrast-stretching each
/// panel independently. Panels are separated by gray gutters and trailing
/// grid cells stay gutter-gray.
pub fn build_montage(frames: &[Frame], stride: usize, saturation: f64) -> Result<Frame, CliError> {
    if stride > frames.len() {
        return Err(CliError::StrideExceedsStack {
            stride,
            frames: frames.len(),
        });
    }
    let panels: Vec<Frame> = frames
        .iter()
        .step_by(stride)
        .map(|f| histogram_stretch(f, saturation))
        .collect::<Result<_, _>>()?;
    let n = panels.len() as u32;
    let cols = (n as f64).sqrt().ceil() as u32;
    let rows = n.div_ceil(cols);
    let (fw, fh) = panels[0].dimensions();
    let width = cols * fw + (cols - 1) * GUTTER_PX;
    let height = rows * fh + (rows - 1) * GUTTER_PX;
    let mut data = vec![GUTTER_VALUE; (width as usize) * (height as usize)];
    for (i, panel) in panels.iter().enumerate() {
        let x0 = (i as u32 % cols) * (fw + GUTTER_PX);
        let y0 = (i as u32 / cols) * (fh + GUTTER_PX);
        for y in 0..fh {
            let dst = ((y0 + y) as usize) * (width as usize) + x0 as usize;
            data[dst..dst + fw as usize].copy_from_slice(panel.row(y));
        }
    }
    Ok(Frame::new(width, height, data))
}

fn put_rgb(buf: &mut [u8], width: u32, height: u32, x: i64, y: i64, color: [u8; 3]) {
    if x < 0 || y < 0 || x >= width as i64 || y >= height as i64 {
        return;
    }
    let i = (y as usize * width as usize + x as usize) * 3;
    buf[i..i + 3].copy_from_slice(&color);
}

fn draw_segment(
    buf: &mut [u8],
    width: u32,
    height: u32,
    (x0, y0): (i64, i64),
    (x1, y1): (i64, i64),
    color: [u8; 3],
) {
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    let (mut x, mut y) = (x0, y0);
    loop {
        put_rgb(buf, width, height, x, y, color);
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

fn draw_cross(buf: &mut [u8], width: u32, height: u32, x: i64, y: i64, color: [u8; 3]) {
    for d in -3..=3 {
        put_rgb(buf, width, height, x + d, y, color);
        put_rgb(buf, width, height, x, y + d, color);
    }
}

/// Draw track trajectories over the contrast-stretched final frame.
/// Returns interleaved RGB rows.
pub fn track_overlay(
    frames: &[Frame],
    tracks: &[Track],
    saturation: f64,
) -> Result<(u32, u32, Vec<u8>), CliError> {
    let last = frames.last().expect("stacks hold at least one frame");
    let background = histogram_stretch(last, saturation)?;
    let (width, height) = background.dimensions();
    let mut buf = vec![0u8; (width as usize) * (height as usize) * 3];
    for (i, &v) in background.data().iter().enumerate() {
        buf[i * 3] = v;
        buf[i * 3 + 1] = v;
        buf[i * 3 + 2] = v;
    }
    for track in tracks {
        let color = PALETTE[track.track_id as usize % PALETTE.len()];
        let points: Vec<(i64, i64)> = track
            .detections
            .iter()
            .map(|d| (round_half_up(d.x_px) as i64, round_half_up(d.y_px) as i64))
            .collect();
        for pair in points.windows(2) {
            draw_segment(&mut buf, width, height, pair[0], pair[1], color);
        }
        for &(x, y) in &points {
            draw_cross(&mut buf, width, height, x, y, color);
        }
    }
    Ok((width, height, buf))
}

/// Config echo for PNG text chunks, escaped down to ASCII so it always
/// fits the chunk's character set.
fn ascii_json(config: &serde_json::Value) -> String {
    let raw = config.to_string();
    let mut out = String::with_capacity(raw.len());
    for c in raw.chars() {
        if (0x20..0x7f).contains(&(c as u32)) {
            out.push(c);
        } else {
            let mut units = [0u16; 2];
            for unit in c.encode_utf16(&mut units) {
                out.push_str(&format!("\\u{unit:04x}"));
            }
        }
    }
    out
}

fn encode_png(
    width: u32,
    height: u32,
    color: png::ColorType,
    data: &[u8],
    config: &serde_json::Value,
) -> Result<Vec<u8>, String> {
    let mut bytes = Vec::new();
    let mut encoder = png::Encoder::new(&mut bytes, width, height);
    encoder.set_color(color);
    encoder.set_depth(png::BitDepth::Eight);
    encoder
        .add_text_chunk("config".to_string(), ascii_json(config))
        .map_err(|e| e.to_string())?;
    let mut writer = encoder.write_header().map_err(|e| e.to_string())?;
    writer.write_image_data(data).map_err(|e| e.to_string())?;
    writer.finish().map_err(|e| e.to_string())?;
    Ok(bytes)
}

pub fn write_gray_png(
    path: &Path,
    frame: &Frame,
    config: &serde_json::Value,
) -> Result<(), CliError> {
    let (width, height) = frame.dimensions();
    let bytes = encode_png(width, height, png::ColorType::Grayscale, frame.data(), config)
        .map_err(|e| CliError::UnwritableOutput(format!("{}: {e}", path.display())))?;
    atomic_write(path, &bytes)
}

pub fn write_rgb_png(
    path: &Path,
    width: u32,
    height: u32,
    data: &[u8],
    config: &serde_json::Value,
) -> Result<(), CliError> {
    let bytes = encode_png(width, height, png::ColorType::Rgb, data, config)
        .map_err(|e| CliError::UnwritableOutput(format!("{}: {e}", path.display())))?;
    atomic_write(path, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use dropscope_core::Detection;

    #[test]
    fn stride_rounds_to_nearest_frame() {
        assert_eq!(compute_stride(38.0, 240.0), 9);
        assert_eq!(compute_stride(100.0, 240.0), 24);
        assert_eq!(compute_stride(1.0, 240.0), 1);
        assert_eq!(compute_stride(2.0, 240.0), 1);
        assert_eq!(panel_count(120, 9), 14);
        assert_eq!(panel_count(1, 1), 1);
        assert_eq!(panel_count(9, 9), 1);
        assert_eq!(panel_count(10, 9), 2);
    }

    fn spot_frame(w: u32, h: u32, x: u32) -> Frame {
        Frame::from_fn(w, h, |px, py| if px == x && py == 0 { 255 } else { 0 })
    }

    #[test]
    fn montage_grid_and_gutters() {
        let frames: Vec<Frame> = (0..5).map(|i| spot_frame(4, 3, i % 4)).collect();
        let montage = build_montage(&frames, 2, 0.0).unwrap();
        // Three panels (frames 0, 2, 4) in a 2x2 grid of 4x3 cells.
        assert_eq!(montage.dimensions(), (10, 8));
        assert_eq!(montage.get(0, 0), 255);
        assert_eq!(montage.get(8, 0), 255);
        assert_eq!(montage.get(0, 5), 255);
        // Gutter column and row.
        assert_eq!(montage.get(4, 0), 128);
        assert_eq!(montage.get(0, 3), 128);
        // Unused bottom-right cell stays gutter-gray.
        assert_eq!(montage.get(9, 7), 128);
    }

    #[test]
    fn montage_rejects_oversized_stride() {
        let frames = vec![spot_frame(4, 3, 0)];
        let err = build_montage(&frames, 2, 0.005).unwrap_err();
        assert!(matches!(
            err,
            CliError::StrideExceedsStack { stride: 2, frames: 1 }
        ));
    }

    fn det(frame_index: usize, x: f64, y: f64) -> Detection {
        Detection {
            frame_index,
            x_px: x,
            y_px: y,
            area_px: 1,
            mean_intensity: 200.0,
            peak_intensity: 200,
        }
    }

    #[test]
    fn overlay_draws_palette_colored_paths() {
        let frames = vec![Frame::from_fn(16, 16, |x, y| ((x + y) * 8) as u8)];
        let tracks = vec![Track {
            track_id: 1,
            detections: vec![det(0, 8.0, 2.0), det(1, 8.0, 9.0)],
        }];
        let (w, h, buf) = track_overlay(&frames, &tracks, 0.005).unwrap();
        assert_eq!((w, h), (16, 16));
        let color = PALETTE[1];
        // Vertical segment between the two centroids.
        for y in 2usize..=9 {
            let i = (y * w as usize + 8) * 3;
            assert_eq!(&buf[i..i + 3], &color);
        }
        // Cross arm extends sideways from the first centroid.
        let i = (2 * w as usize + 5) * 3;
        assert_eq!(&buf[i..i + 3], &color);
        // A far corner keeps the grayscale background.
        assert_eq!(buf[0], buf[1]);
        assert_eq!(buf[1], buf[2]);
    }

    #[test]
    fn overlay_clips_out_of_frame_points() {
        let frames = vec![Frame::filled(8, 8, 100)];
        let tracks = vec![Track {
            track_id: 0,
            detections: vec![det(0, -5.0, -5.0), det(1, 20.0, 20.0)],
        }];
        let (_, _, buf) = track_overlay(&frames, &tracks, 0.0).unwrap();
        assert_eq!(buf.len(), 8 * 8 * 3);
    }

    #[test]
    fn config_json_escapes_to_ascii() {
        let config = serde_json::json!({"trial": "μ-test", "n": 3});
        let text = ascii_json(&config);
        assert!(text.is_ascii());
        assert!(text.contains("\\u03bc-test"));
        let round: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(round, config);
    }

    #[test]
    fn png_round_trip_keeps_pixels_and_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.png");
        let frame = Frame::from_fn(5, 4, |x, y| (x * 10 + y) as u8);
        let config = serde_json::json!({"command": "montage"});
        write_gray_png(&path, &frame, &config).unwrap();

        let file = std::fs::File::open(&path).unwrap();
        let decoder = png::Decoder::new(file);
        let mut reader = decoder.read_info().unwrap();
        assert!(reader
            .info()
            .uncompressed_latin1_text
            .iter()
            .any(|t| t.keyword == "config" && t.text.contains("montage")));
        let mut data = vec![0u8; reader.output_buffer_size()];
        let info = reader.next_frame(&mut data).unwrap();
        assert_eq!((info.width, info.height), (5, 4));
        assert_eq!(&data[..info.buffer_size()], frame.data());
    }
}
