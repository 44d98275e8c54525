use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayerKind {
    Conv,
    Deconv,
}

impl LayerKind {
    pub fn name(self) -> &'static str {
        match self {
            LayerKind::Conv => "conv",
            LayerKind::Deconv => "deconv",
        }
    }
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Shape description of one convolution or deconvolution layer.
///
/// Convolutions are "valid" (no implicit input padding). Deconvolutions
/// produce `stride * (in - 1) + k` per axis, minus `2 * crop` when an output
/// crop is configured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub in_h: usize,
    pub in_w: usize,
    pub in_c: usize,
    pub kh: usize,
    pub kw: usize,
    pub out_c: usize,
    pub stride: usize,
    /// Rows/cols removed from every output edge (deconvolution only).
    pub crop: usize,
}

/// `HxWxC kKHxKW sS -> OC`, with ` crop C` appended when cropping.
impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}x{}x{} k{}x{} s{} -> {}",
            self.in_h, self.in_w, self.in_c, self.kh, self.kw, self.stride, self.out_c
        )?;
        if self.crop > 0 {
            write!(f, " crop {}", self.crop)?;
        }
        Ok(())
    }
}

impl LayerSpec {
    pub fn deconv(
        (in_h, in_w, in_c): (usize, usize, usize),
        (kh, kw): (usize, usize),
        out_c: usize,
        stride: usize,
    ) -> Result<Self> {
        let spec = Self { kind: LayerKind::Deconv, in_h, in_w, in_c, kh, kw, out_c, stride, crop: 0 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn conv(
        (in_h, in_w, in_c): (usize, usize, usize),
        (kh, kw): (usize, usize),
        out_c: usize,
        stride: usize,
    ) -> Result<Self> {
        let spec = Self { kind: LayerKind::Conv, in_h, in_w, in_c, kh, kw, out_c, stride, crop: 0 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_crop(mut self, crop: usize) -> Result<Self> {
        self.crop = crop;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("in_h", self.in_h),
            ("in_w", self.in_w),
            ("in_c", self.in_c),
            ("kh", self.kh),
            ("kw", self.kw),
            ("out_c", self.out_c),
            ("stride", self.stride),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Error::shape(format!("{name} must be positive")));
        }
        match self.kind {
            LayerKind::Conv => {
                if self.crop != 0 {
                    return Err(Error::shape("crop applies to deconvolution layers only"));
                }
                for (i, k, axis) in [(self.in_h, self.kh, "height"), (self.in_w, self.kw, "width")] {
                    if k > i {
                        return Err(Error::KernelTooLarge { kh: self.kh, kw: self.kw, h: self.in_h, w: self.in_w });
                    }
                    if (i - k) % self.stride != 0 {
                        return Err(Error::shape(format!(
                            "conv {axis}: ({i} - {k}) is not divisible by stride {}",
                            self.stride
                        )));
                    }
                }
            }
            LayerKind::Deconv => {
                let (h, w) = self.full_out_hw();
                if 2 * self.crop >= h.min(w) {
                    return Err(Error::shape(format!("crop {} leaves an empty {h}x{w} output", self.crop)));
                }
            }
        }
        Ok(())
    }

    /// Deconvolution output before any crop.
    pub fn full_out_hw(&self) -> (usize, usize) {
        match self.kind {
            LayerKind::Deconv => (self.stride * (self.in_h - 1) + self.kh, self.stride * (self.in_w - 1) + self.kw),
            LayerKind::Conv => self.out_hw(),
        }
    }

    pub fn out_hw(&self) -> (usize, usize) {
        match self.kind {
            LayerKind::Conv => ((self.in_h - self.kh) / self.stride + 1, (self.in_w - self.kw) / self.stride + 1),
            LayerKind::Deconv => {
                let (h, w) = self.full_out_hw();
                (h - 2 * self.crop, w - 2 * self.crop)
            }
        }
    }

    pub fn out_dims(&self) -> (usize, usize, usize) {
        let (h, w) = self.out_hw();
        (h, w, self.out_c)
    }

    pub fn in_dims(&self) -> (usize, usize, usize) {
        (self.in_h, self.in_w, self.in_c)
    }

    pub(crate) fn require_deconv(&self) -> Result<()> {
        match self.kind {
            LayerKind::Deconv => Ok(()),
            LayerKind::Conv => Err(Error::WrongKind { expected: "deconv", found: "conv" }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deconv_output_dims() {
        let l = LayerSpec::deconv((4, 3, 2), (4, 5), 3, 2).unwrap();
        assert_eq!(l.out_dims(), (10, 9, 3));
        let l = l.with_crop(1).unwrap();
        assert_eq!(l.out_dims(), (8, 7, 3));
    }

    #[test]
    fn conv_requires_divisible_extent() {
        assert!(LayerSpec::conv((5, 5, 1), (3, 3), 1, 2).is_ok());
        assert!(LayerSpec::conv((6, 5, 1), (3, 3), 1, 2).is_err());
        assert!(LayerSpec::conv((2, 5, 1), (3, 3), 1, 1).is_err());
        assert_eq!(LayerSpec::conv((7, 5, 1), (3, 1), 4, 2).unwrap().out_dims(), (3, 3, 4));
    }

    #[test]
    fn zero_stride_rejected() {
        assert!(LayerSpec::deconv((1, 1, 1), (1, 1), 1, 0).is_err());
    }

    #[test]
    fn excessive_crop_rejected() {
        let l = LayerSpec::deconv((1, 1, 1), (3, 3), 1, 2).unwrap();
        assert!(l.with_crop(1).is_ok());
        assert!(l.with_crop(2).is_err());
    }
}
