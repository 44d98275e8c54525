//! Dense feature maps and filter banks.
//!
//! Everything is stored row-major in `(y, x, c)` order for feature maps and
//! `(kh, kw, in_channel, out_channel)` order for filters. Both containers are
//! immutable once built; transforms produce new values.

use crate::error::{Error, Result};

/// A rank-3 feature map of shape `height x width x channels`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    /// Builds a tensor from values in layout order.
    pub fn new(height: usize, width: usize, channels: usize, values: Vec<f64>) -> Result<Self> {
        check_positive(&[("height", height), ("width", width), ("channels", channels)])?;
        let expected = height * width * channels;
        if values.len() != expected {
            return Err(Error::shape(format!(
                "tensor {height}x{width}x{channels} needs {expected} values, got {}",
                values.len()
            )));
        }
        Ok(Self { height, width, channels, data: values })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Result<Self> {
        Self::new(height, width, channels, vec![0.0; height * width * channels])
    }

    /// Builds a tensor by evaluating `f(y, x, c)` at every position.
    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(y, x, c));
                }
            }
        }
        Self::new(height, width, channels, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn offset(&self, y: usize, x: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }

    /// Element at `(y, x, c)`, or `None` outside the tensor.
    pub fn get(&self, y: usize, x: usize, c: usize) -> Option<f64> {
        if y < self.height && x < self.width && c < self.channels {
            Some(self.data[self.offset(y, x, c)])
        } else {
            None
        }
    }

    /// Element at `(y, x, c)`. Panics outside the tensor.
    #[inline]
    pub fn at(&self, y: usize, x: usize, c: usize) -> f64 {
        assert!(
            y < self.height && x < self.width && c < self.channels,
            "index ({y}, {x}, {c}) out of bounds for {}x{}x{}",
            self.height,
            self.width,
            self.channels
        );
        self.data[self.offset(y, x, c)]
    }

    /// Largest absolute elementwise difference. Shapes must agree.
    pub fn max_abs_diff(&self, other: &Tensor3) -> Option<f64> {
        if self.dims() != other.dims() {
            return None;
        }
        Some(self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    /// First coordinate where the two tensors differ bitwise.
    pub fn first_difference(&self, other: &Tensor3) -> Option<(usize, usize, usize)> {
        if self.dims() != other.dims() {
            return Some((0, 0, 0));
        }
        let i = self.data.iter().zip(&other.data).position(|(a, b)| a.to_bits() != b.to_bits())?;
        let c = i % self.channels;
        let x = (i / self.channels) % self.width;
        let y = i / (self.channels * self.width);
        Some((y, x, c))
    }
}

/// A rank-4 weight array of shape `kh x kw x in_channels x out_channels`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    kh: usize,
    kw: usize,
    in_channels: usize,
    out_channels: usize,
    data: Vec<f64>,
}

impl FilterBank {
    pub fn new(kh: usize, kw: usize, in_channels: usize, out_channels: usize, values: Vec<f64>) -> Result<Self> {
        check_positive(&[("kh", kh), ("kw", kw), ("in_channels", in_channels), ("out_channels", out_channels)])?;
        let expected = kh * kw * in_channels * out_channels;
        if values.len() != expected {
            return Err(Error::shape(format!(
                "filter {kh}x{kw}x{in_channels}x{out_channels} needs {expected} values, got {}",
                values.len()
            )));
        }
        Ok(Self { kh, kw, in_channels, out_channels, data: values })
    }

    pub fn zeros(kh: usize, kw: usize, in_channels: usize, out_channels: usize) -> Result<Self> {
        Self::new(kh, kw, in_channels, out_channels, vec![0.0; kh * kw * in_channels * out_channels])
    }

    /// Builds a bank by evaluating `f(kh, kw, ic, oc)` at every position.
    pub fn from_fn(
        kh: usize,
        kw: usize,
        in_channels: usize,
        out_channels: usize,
        mut f: impl FnMut(usize, usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(kh * kw * in_channels * out_channels);
        for h in 0..kh {
            for w in 0..kw {
                for ic in 0..in_channels {
                    for oc in 0..out_channels {
                        data.push(f(h, w, ic, oc));
                    }
                }
            }
        }
        Self::new(kh, kw, in_channels, out_channels, data)
    }

    pub fn kh(&self) -> usize {
        self.kh
    }

    pub fn kw(&self) -> usize {
        self.kw
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (self.kh, self.kw, self.in_channels, self.out_channels)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn offset(&self, h: usize, w: usize, ic: usize, oc: usize) -> usize {
        ((h * self.kw + w) * self.in_channels + ic) * self.out_channels + oc
    }

    #[inline]
    pub fn at(&self, h: usize, w: usize, ic: usize, oc: usize) -> f64 {
        assert!(
            h < self.kh && w < self.kw && ic < self.in_channels && oc < self.out_channels,
            "filter index ({h}, {w}, {ic}, {oc}) out of bounds"
        );
        self.data[self.offset(h, w, ic, oc)]
    }

    pub fn nonzero_count(&self) -> usize {
        self.data.iter().filter(|v| **v != 0.0).count()
    }
}

fn check_positive(dims: &[(&str, usize)]) -> Result<()> {
    match dims.iter().find(|(_, v)| *v == 0) {
        Some((name, _)) => Err(Error::shape(format!("{name} must be positive"))),
        None => Ok(()),
    }
}
