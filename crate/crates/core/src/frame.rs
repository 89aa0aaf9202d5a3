//! Grayscale frame and binary mask grids.

/// A single 8-bit grayscale frame, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl Frame {
    /// Wrap raw row-major pixel data.
    ///
    /// Panics if the dimensions are zero or do not match the data length;
    /// callers validate sizes before constructing frames.
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Self {
        assert!(width > 0 && height > 0, "frame dimensions must be nonzero");
        assert_eq!(
            data.len(),
            (width as usize) * (height as usize),
            "pixel buffer length must equal width * height"
        );
        Self {
            width,
            height,
            data,
        }
    }

    /// Frame with every pixel set to `value`.
    pub fn filled(width: u32, height: u32, value: u8) -> Self {
        Self::new(width, height, vec![value; (width as usize) * (height as usize)])
    }

    /// Build a frame by evaluating `f(x, y)` for every pixel.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> u8) -> Self {
        let mut data = Vec::with_capacity((width as usize) * (height as usize));
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[(y as usize) * (self.width as usize) + (x as usize)]
    }

    #[inline]
    pub fn row(&self, y: u32) -> &[u8] {
        let w = self.width as usize;
        let start = (y as usize) * w;
        &self.data[start..start + w]
    }

    /// Arithmetic mean pixel value over the whole frame.
    pub fn mean(&self) -> f64 {
        let sum: u64 = self.data.iter().map(|&v| v as u64).sum();
        sum as f64 / self.data.len() as f64
    }

    /// Arithmetic mean over the half-open row range `[y0, y1)`.
    pub fn mean_rows(&self, y0: u32, y1: u32) -> f64 {
        assert!(y0 < y1 && y1 <= self.height, "invalid row range");
        let w = self.width as usize;
        let start = (y0 as usize) * w;
        let end = (y1 as usize) * w;
        let sum: u64 = self.data[start..end].iter().map(|&v| v as u64).sum();
        sum as f64 / (end - start) as f64
    }
}

/// A binary pixel grid produced by thresholding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: u32,
    height: u32,
    data: Vec<bool>,
}

impl Mask {
    pub fn new(width: u32, height: u32, data: Vec<bool>) -> Self {
        assert!(width > 0 && height > 0, "mask dimensions must be nonzero");
        assert_eq!(
            data.len(),
            (width as usize) * (height as usize),
            "mask buffer length must equal width * height"
        );
        Self {
            width,
            height,
            data,
        }
    }

    pub fn empty(width: u32, height: u32) -> Self {
        Self::new(width, height, vec![false; (width as usize) * (height as usize)])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.data[(y as usize) * (self.width as usize) + (x as usize)]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        self.data[(y as usize) * (self.width as usize) + (x as usize)] = value;
    }

    /// Number of set pixels.
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}

/// Round half-up quantization used everywhere pixel values are produced.
#[inline]
pub fn round_half_up(x: f64) -> f64 {
    (x + 0.5).floor()
}

/// Quantize an intensity to the 8-bit range with round-half-up.
#[inline]
pub fn quantize_u8(x: f64) -> u8 {
    round_half_up(x).clamp(0.0, 255.0) as u8
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_fn_row_major() {
        let f = Frame::from_fn(3, 2, |x, y| (y * 10 + x) as u8);
        assert_eq!(f.data(), &[0, 1, 2, 10, 11, 12]);
        assert_eq!(f.get(2, 1), 12);
        assert_eq!(f.row(1), &[10, 11, 12]);
    }

    #[test]
    fn mean_rows_matches_full_mean() {
        let f = Frame::from_fn(4, 5, |x, y| (x * 7 + y * 13) as u8);
        let top = f.mean_rows(0, 2);
        let bottom = f.mean_rows(2, 5);
        let combined = (top * 2.0 * 4.0 + bottom * 3.0 * 4.0) / 20.0;
        assert!((combined - f.mean()).abs() < 1e-12);
    }

    #[test]
    fn round_half_up_halfway() {
        assert_eq!(round_half_up(127.5), 128.0);
        assert_eq!(round_half_up(2.4999), 2.0);
        assert_eq!(quantize_u8(255.6), 255);
        assert_eq!(quantize_u8(-3.0), 0);
    }

    #[test]
    #[should_panic]
    fn wrong_buffer_length_panics() {
        let _ = Frame::new(2, 2, vec![0; 3]);
    }
}
