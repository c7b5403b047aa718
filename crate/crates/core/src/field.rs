//! Multi-channel planar grids and the PPGF binary container.
//!
//! PPGF layout (all little-endian): the magic bytes `PPGF`, `u32` channels,
//! `u32` height, `u32` width, `f32` stride, then `channels * height * width`
//! `f32` values in channel, row, column order.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const PPGF_MAGIC: &[u8; 4] = b"PPGF";
pub const DEFAULT_STRIDE: f32 = 4.0;

/// Raw PPGF payload before any semantic validation.
#[derive(Debug, Clone, PartialEq)]
pub struct PpgfData {
    pub channels: u32,
    pub height: u32,
    pub width: u32,
    pub stride: f32,
    pub values: Vec<f32>,
}

impl PpgfData {
    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        let mut buf = Vec::with_capacity(20 + self.values.len() * 4);
        buf.extend_from_slice(PPGF_MAGIC);
        buf.extend_from_slice(&self.channels.to_le_bytes());
        buf.extend_from_slice(&self.height.to_le_bytes());
        buf.extend_from_slice(&self.width.to_le_bytes());
        buf.extend_from_slice(&self.stride.to_le_bytes());
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 20 {
            return Err(Error::Format(format!("header truncated ({} bytes)", bytes.len())));
        }
        if &bytes[..4] != PPGF_MAGIC {
            return Err(Error::Format("bad magic, expected PPGF".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let channels = u32_at(4);
        let height = u32_at(8);
        let width = u32_at(12);
        let stride = f32::from_le_bytes(bytes[16..20].try_into().unwrap());
        let count = (channels as usize)
            .checked_mul(height as usize)
            .and_then(|v| v.checked_mul(width as usize))
            .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
        let body = &bytes[20..];
        if body.len() != count * 4 {
            return Err(Error::Format(format!(
                "expected {} payload bytes for {channels}x{height}x{width}, found {}",
                count * 4,
                body.len()
            )));
        }
        let values = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self {
            channels,
            height,
            width,
            stride,
            values,
        })
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)
            .map_err(|e| Error::Format(format!("read failed: {e}")))?;
        Self::from_bytes(&bytes)
    }
}

/// A `channels x height x width` grid of `f32` with a stride mapping grid
/// cells to image pixels: cell `(row, col)` sits at image point
/// `(col * stride, row * stride)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarField {
    channels: usize,
    height: usize,
    width: usize,
    stride: f64,
    values: Vec<f32>,
}

impl PlanarField {
    pub fn new(
        channels: usize,
        height: usize,
        width: usize,
        stride: f64,
        values: Vec<f32>,
    ) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::invalid(format!(
                "field dimensions must be positive, got {channels}x{height}x{width}"
            )));
        }
        if !(stride.is_finite() && stride > 0.0) {
            return Err(Error::invalid(format!("stride must be positive, got {stride}")));
        }
        if values.len() != channels * height * width {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {channels}x{height}x{width} field",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite value at offset {pos}")));
        }
        if channels == 1 {
            if let Some(pos) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::invalid(format!(
                    "heatmap value {} at offset {pos} outside [0, 1]",
                    values[pos]
                )));
            }
        }
        Ok(Self {
            channels,
            height,
            width,
            stride,
            values,
        })
    }

    pub fn zeros(channels: usize, height: usize, width: usize, stride: f64) -> Result<Self> {
        Self::new(channels, height, width, stride, vec![0.0; channels * height * width])
    }

    /// Single-channel heatmap from a row-major closure over `(row, col)`.
    pub fn heatmap_from_fn(
        height: usize,
        width: usize,
        stride: f64,
        f: impl Fn(usize, usize) -> f32,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                values.push(f(r, c));
            }
        }
        Self::new(1, height, width, stride, values)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn stride(&self) -> f64 {
        self.stride
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn is_heatmap(&self) -> bool {
        self.channels == 1
    }

    #[inline]
    pub fn get(&self, channel: usize, row: usize, col: usize) -> f32 {
        self.values[(channel * self.height + row) * self.width + col]
    }

    /// Image frame covered by the grid, in pixels.
    pub fn image_size(&self) -> (u32, u32) {
        (
            (self.width as f64 * self.stride).round() as u32,
            (self.height as f64 * self.stride).round() as u32,
        )
    }

    pub fn to_ppgf(&self) -> PpgfData {
        PpgfData {
            channels: self.channels as u32,
            height: self.height as u32,
            width: self.width as u32,
            stride: self.stride as f32,
            values: self.values.clone(),
        }
    }

    pub fn from_ppgf(data: PpgfData) -> Result<Self> {
        Self::new(
            data.channels as usize,
            data.height as usize,
            data.width as usize,
            data.stride as f64,
            data.values,
        )
    }

    pub fn read_ppgf(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_ppgf(PpgfData::from_bytes(&bytes)?)
    }
}
