//! Ground-truth operators.
//!
//! Direct convolution, scatter-style transposed convolution (the oracle every
//! other path is checked against) and the zero-insertion lowering of a
//! transposed convolution to a stride-1 convolution. These stay loop-nest
//! simple on purpose; there are no fast paths here.
//!
//! The `*_counted` variants add the number of multiplies they execute to a
//! caller-supplied counter so MAC analysis can be checked against real work.

use crate::error::{Error, Result};
use crate::tensor::{FilterBank, Tensor3};

/// Stride and symmetric zero padding of a direct convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvParams {
    pub stride: usize,
    pub pad: usize,
}

impl ConvParams {
    pub fn new(stride: usize, pad: usize) -> Self {
        Self { stride, pad }
    }

    /// Stride 1, no padding.
    pub fn unit() -> Self {
        Self { stride: 1, pad: 0 }
    }

    /// Output extent along one axis, `floor((in + 2 pad - k) / stride) + 1`.
    pub fn out_len(&self, input: usize, k: usize) -> Option<usize> {
        (input + 2 * self.pad).checked_sub(k).map(|span| span / self.stride + 1)
    }
}

pub fn conv2d(input: &Tensor3, filters: &FilterBank, params: ConvParams) -> Result<Tensor3> {
    conv2d_counted(input, filters, params, &mut 0)
}

/// `out(oh, ow, oc) = sum over (ic, kh, kw) of in(oh*s + kh - pad, ow*s + kw - pad, ic) * w(kh, kw, ic, oc)`
///
/// Taps that read the zero border still count as executed multiplies.
pub fn conv2d_counted(input: &Tensor3, filters: &FilterBank, params: ConvParams, muls: &mut u64) -> Result<Tensor3> {
    if params.stride == 0 {
        return Err(Error::shape("stride must be positive"));
    }
    if filters.in_channels() != input.channels() {
        return Err(Error::ChannelMismatch { input: input.channels(), filter: filters.in_channels() });
    }
    let (ih, iw, ic_n) = input.dims();
    let (kh_n, kw_n, _, oc_n) = filters.dims();
    let too_large = || Error::KernelTooLarge { kh: kh_n, kw: kw_n, h: ih + 2 * params.pad, w: iw + 2 * params.pad };
    let oh_n = params.out_len(ih, kh_n).ok_or_else(too_large)?;
    let ow_n = params.out_len(iw, kw_n).ok_or_else(too_large)?;
    let pad = params.pad as isize;

    let mut out = Vec::with_capacity(oh_n * ow_n * oc_n);
    for oh in 0..oh_n {
        for ow in 0..ow_n {
            for oc in 0..oc_n {
                let mut acc = 0.0;
                for ic in 0..ic_n {
                    for kh in 0..kh_n {
                        let y = (oh * params.stride + kh) as isize - pad;
                        for kw in 0..kw_n {
                            let x = (ow * params.stride + kw) as isize - pad;
                            let a = if y >= 0 && x >= 0 {
                                input.get(y as usize, x as usize, ic).unwrap_or(0.0)
                            } else {
                                0.0
                            };
                            acc += a * filters.at(kh, kw, ic, oc);
                        }
                    }
                }
                *muls += (ic_n * kh_n * kw_n) as u64;
                out.push(acc);
            }
        }
    }
    Tensor3::new(oh_n, ow_n, oc_n, out)
}

pub fn deconv2d_oracle(input: &Tensor3, filters: &FilterBank, stride: usize) -> Result<Tensor3> {
    deconv2d_oracle_counted(input, filters, stride, &mut 0)
}

/// Transposed convolution by scatter-accumulate: each input element is scaled
/// by the whole filter and added into the output at offset `(ih*s, iw*s)`.
/// Output is `s*(I_H-1)+K_H` by `s*(I_W-1)+K_W` by `O_C`.
pub fn deconv2d_oracle_counted(
    input: &Tensor3,
    filters: &FilterBank,
    stride: usize,
    muls: &mut u64,
) -> Result<Tensor3> {
    if stride == 0 {
        return Err(Error::shape("stride must be positive"));
    }
    if filters.in_channels() != input.channels() {
        return Err(Error::ChannelMismatch { input: input.channels(), filter: filters.in_channels() });
    }
    let (ih_n, iw_n, ic_n) = input.dims();
    let (kh_n, kw_n, _, oc_n) = filters.dims();
    let oh_n = stride * (ih_n - 1) + kh_n;
    let ow_n = stride * (iw_n - 1) + kw_n;

    let mut out = vec![0.0; oh_n * ow_n * oc_n];
    for ic in 0..ic_n {
        for ih in 0..ih_n {
            for iw in 0..iw_n {
                let a = input.at(ih, iw, ic);
                for kh in 0..kh_n {
                    for kw in 0..kw_n {
                        let base = ((ih * stride + kh) * ow_n + iw * stride + kw) * oc_n;
                        for oc in 0..oc_n {
                            out[base + oc] += a * filters.at(kh, kw, ic, oc);
                        }
                    }
                }
            }
        }
    }
    *muls += (ih_n * iw_n * ic_n * kh_n * kw_n * oc_n) as u64;
    Tensor3::new(oh_n, ow_n, oc_n, out)
}

/// Zero-insertion expansion: `s-1` zeros between neighbouring elements, then
/// `K-1` zeros on every edge. Output is `s*(I-1) + 1 + 2*(K-1)` per axis.
pub fn nzp_expand(input: &Tensor3, kh: usize, kw: usize, stride: usize) -> Result<Tensor3> {
    if stride == 0 || kh == 0 || kw == 0 {
        return Err(Error::shape("stride and kernel size must be positive"));
    }
    let (ih, iw, c) = input.dims();
    let h = stride * (ih - 1) + 1 + 2 * (kh - 1);
    let w = stride * (iw - 1) + 1 + 2 * (kw - 1);
    let source = |pos: usize, border: usize, n: usize| -> Option<usize> {
        let inner = pos.checked_sub(border)?;
        (inner % stride == 0 && inner / stride < n).then_some(inner / stride)
    };
    Tensor3::from_fn(h, w, c, |y, x, ch| match (source(y, kh - 1, ih), source(x, kw - 1, iw)) {
        (Some(sy), Some(sx)) => input.at(sy, sx, ch),
        _ => 0.0,
    })
}

/// Rotates every `(ic, oc)` kernel plane by 180 degrees.
pub fn rot180(filters: &FilterBank) -> FilterBank {
    let (kh, kw, ic, oc) = filters.dims();
    FilterBank::from_fn(kh, kw, ic, oc, |h, w, i, o| filters.at(kh - 1 - h, kw - 1 - w, i, o))
        .expect("rotation preserves shape")
}

pub fn nzp_deconv2d(input: &Tensor3, filters: &FilterBank, stride: usize) -> Result<Tensor3> {
    nzp_deconv2d_counted(input, filters, stride, &mut 0)
}

/// Transposed convolution as `conv2d(nzp_expand(input), rot180(filters))` at stride 1.
pub fn nzp_deconv2d_counted(input: &Tensor3, filters: &FilterBank, stride: usize, muls: &mut u64) -> Result<Tensor3> {
    if filters.in_channels() != input.channels() {
        return Err(Error::ChannelMismatch { input: input.channels(), filter: filters.in_channels() });
    }
    let expanded = nzp_expand(input, filters.kh(), filters.kw(), stride)?;
    conv2d_counted(&expanded, &rot180(filters), ConvParams::unit(), muls)
}

/// Removes `crop` rows and columns from every edge.
pub fn crop_edges(t: &Tensor3, crop: usize) -> Result<Tensor3> {
    if crop == 0 {
        return Ok(t.clone());
    }
    let (h, w, c) = t.dims();
    if 2 * crop >= h || 2 * crop >= w {
        return Err(Error::shape(format!("crop {crop} leaves nothing of a {h}x{w} map")));
    }
    Tensor3::from_fn(h - 2 * crop, w - 2 * crop, c, |y, x, ch| t.at(y + crop, x + crop, ch))
}
