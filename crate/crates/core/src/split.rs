//! Split deconvolution: a stride-`s` transposed convolution computed exactly
//! as `s*s` stride-1 convolutions.
//!
//! The pipeline has an offline half and a per-input half:
//!
//! 1. [`expand_filter`] prepends `P_K = s*K_T - K` zero rows (top) and columns
//!    (left) so both kernel extents are multiples of `s`, with
//!    `K_T = ceil(K / s)`.
//! 2. [`split_filters`] samples the expanded kernel with stride `s` into
//!    `N = s*s` sub-kernels of `K_T x K_T`, each rotated by 180 degrees.
//! 3. [`pad_input_sd`] surrounds the input with a `P_I = K_T - 1` ring of zeros.
//! 4. Each sub-kernel is convolved with the padded input at stride 1, and
//!    [`merge_outputs`] interleaves the `N` results with stride `s`.
//!
//! Steps 1 and 2 are captured once in a [`SplitPlan`]; steps 3 and 4 run per
//! input via [`SplitPlan::execute`].
//!
//! The interleaved result is the transposed convolution with the *expanded*
//! kernel, which is the true output shifted down/right by `P_K`. The merge
//! therefore crops `P_K` rows from the top and `P_K` columns from the left.

use crate::error::{Error, Result};
use crate::reference::{conv2d_counted, ConvParams};
use crate::tensor::{FilterBank, Tensor3};

/// Per-axis split parameters for a kernel extent `k` and stride `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AxisSplit {
    /// `K_T = ceil(k / s)`
    pub kt: usize,
    /// `P_K = s * K_T - k`
    pub pk: usize,
    /// `P_I = K_T - 1`
    pub pi: usize,
}

impl AxisSplit {
    pub fn new(k: usize, stride: usize) -> Self {
        let kt = k.div_ceil(stride);
        Self { kt, pk: stride * kt - k, pi: kt - 1 }
    }
}

/// Precomputed split of one filter bank. Immutable and reusable across inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPlan {
    pub stride: usize,
    /// Original kernel extents.
    pub kh: usize,
    pub kw: usize,
    pub kt_h: usize,
    pub kt_w: usize,
    pub pk_h: usize,
    pub pk_w: usize,
    pub pi_h: usize,
    pub pi_w: usize,
    pub n_splits: usize,
    /// `n_splits` banks of `kt_h x kt_w x I_C x O_C`, indexed by split `n`.
    pub sub_filters: Vec<FilterBank>,
}

/// Where each split output lands in the final deconvolution output.
///
/// Sub-output `n` at `(y_i, x_i)` lands at
/// `(y_i*s + n/s - crop_top, x_i*s + n%s - crop_left)`; anything outside
/// `final_h x final_w` is discarded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MergeMap {
    pub stride: usize,
    pub final_h: usize,
    pub final_w: usize,
    pub crop_top: usize,
    pub crop_left: usize,
}

impl MergeMap {
    /// Merged coordinate of sub-output `n` at `(yi, xi)`, before trimming.
    pub fn target(&self, n: usize, yi: usize, xi: usize) -> Option<(usize, usize)> {
        let y = (yi * self.stride + n / self.stride).checked_sub(self.crop_top)?;
        let x = (xi * self.stride + n % self.stride).checked_sub(self.crop_left)?;
        (y < self.final_h && x < self.final_w).then_some((y, x))
    }
}

/// Zero-extends a filter on the top and left so each extent is a multiple of
/// `stride`. Returns the filter unchanged when no extension is needed.
pub fn expand_filter(filters: &FilterBank, stride: usize) -> Result<FilterBank> {
    if stride == 0 {
        return Err(Error::shape("stride must be positive"));
    }
    let (kh, kw, ic, oc) = filters.dims();
    let (sh, sw) = (AxisSplit::new(kh, stride), AxisSplit::new(kw, stride));
    if sh.pk == 0 && sw.pk == 0 {
        return Ok(filters.clone());
    }
    FilterBank::from_fn(kh + sh.pk, kw + sw.pk, ic, oc, |h, w, i, o| {
        match (h.checked_sub(sh.pk), w.checked_sub(sw.pk)) {
            (Some(y), Some(x)) => filters.at(y, x, i, o),
            _ => 0.0,
        }
    })
}

/// Samples an expanded filter into `stride * stride` rotated sub-filters.
///
/// Sub-filter `n` takes rows `n/s, n/s + s, ...` and columns
/// `n%s, n%s + s, ...`, written back to front so the first sampled tap lands
/// at `(K_T - 1, K_T - 1)`.
pub fn split_filters(expanded: &FilterBank, stride: usize) -> Result<Vec<FilterBank>> {
    if stride == 0 {
        return Err(Error::shape("stride must be positive"));
    }
    let (kh, kw, ic_n, oc_n) = expanded.dims();
    if kh % stride != 0 || kw % stride != 0 {
        return Err(Error::shape(format!("expanded filter {kh}x{kw} is not divisible by stride {stride}")));
    }
    let (kt_h, kt_w) = (kh / stride, kw / stride);
    let n_splits = stride * stride;
    let mut subs = Vec::with_capacity(n_splits);
    for n in 0..n_splits {
        let mut data = vec![0.0; kt_h * kt_w * ic_n * oc_n];
        let slot = |th: usize, tw: usize, ic: usize, oc: usize| ((th * kt_w + tw) * ic_n + ic) * oc_n + oc;
        for ic in 0..ic_n {
            let mut k_th = kt_h;
            for k_h in (n / stride..kh).step_by(stride) {
                k_th -= 1;
                let mut k_tw = kt_w;
                for k_w in (n % stride..kw).step_by(stride) {
                    k_tw -= 1;
                    for oc in 0..oc_n {
                        data[slot(k_th, k_tw, ic, oc)] = expanded.at(k_h, k_w, ic, oc);
                    }
                }
            }
        }
        subs.push(FilterBank::new(kt_h, kt_w, ic_n, oc_n, data)?);
    }
    Ok(subs)
}

/// Surrounds the input with `pi_h` zero rows above and below and `pi_w` zero
/// columns left and right.
pub fn pad_input_sd(input: &Tensor3, plan: &SplitPlan) -> Tensor3 {
    let (h, w, c) = input.dims();
    let (ph, pw) = (plan.pi_h, plan.pi_w);
    if ph == 0 && pw == 0 {
        return input.clone();
    }
    Tensor3::from_fn(h + 2 * ph, w + 2 * pw, c, |y, x, ch| match (y.checked_sub(ph), x.checked_sub(pw)) {
        (Some(sy), Some(sx)) if sy < h && sx < w => input.at(sy, sx, ch),
        _ => 0.0,
    })
    .expect("padding preserves positivity")
}

/// Interleaves `s*s` equally shaped split outputs into the final map.
pub fn merge_outputs(sub_outputs: &[Tensor3], map: &MergeMap) -> Result<Tensor3> {
    let s = map.stride;
    if s == 0 {
        return Err(Error::shape("stride must be positive"));
    }
    if sub_outputs.len() != s * s {
        return Err(Error::shape(format!(
            "expected {} split outputs for stride {s}, got {}",
            s * s,
            sub_outputs.len()
        )));
    }
    let dims = sub_outputs[0].dims();
    if let Some(bad) = sub_outputs.iter().find(|t| t.dims() != dims) {
        return Err(Error::shape(format!("split output {:?} differs from {:?}", bad.dims(), dims)));
    }
    let (h, w, c) = dims;
    let mut data = vec![0.0; map.final_h * map.final_w * c];
    let mut written = vec![false; map.final_h * map.final_w];
    for (n, sub) in sub_outputs.iter().enumerate() {
        for yi in 0..h {
            for xi in 0..w {
                let Some((y, x)) = map.target(n, yi, xi) else { continue };
                let cell = y * map.final_w + x;
                written[cell] = true;
                for ch in 0..c {
                    data[cell * c + ch] = sub.at(yi, xi, ch);
                }
            }
        }
    }
    if let Some(cell) = written.iter().position(|w| !w) {
        return Err(Error::Coverage { y: cell / map.final_w, x: cell % map.final_w });
    }
    Tensor3::new(map.final_h, map.final_w, c, data)
}

impl SplitPlan {
    /// Expands and splits `filters` for a stride-`stride` deconvolution.
    pub fn new(filters: &FilterBank, stride: usize) -> Result<Self> {
        let (kh, kw) = (filters.kh(), filters.kw());
        let expanded = expand_filter(filters, stride)?;
        let sub_filters = split_filters(&expanded, stride)?;
        let (sh, sw) = (AxisSplit::new(kh, stride), AxisSplit::new(kw, stride));
        Ok(Self {
            stride,
            kh,
            kw,
            kt_h: sh.kt,
            kt_w: sw.kt,
            pk_h: sh.pk,
            pk_w: sw.pk,
            pi_h: sh.pi,
            pi_w: sw.pi,
            n_splits: stride * stride,
            sub_filters,
        })
    }

    pub fn in_channels(&self) -> usize {
        self.sub_filters[0].in_channels()
    }

    pub fn out_channels(&self) -> usize {
        self.sub_filters[0].out_channels()
    }

    /// Extent of every split convolution output for an `in_h x in_w` input.
    pub fn sub_output_hw(&self, in_h: usize, in_w: usize) -> (usize, usize) {
        (in_h + self.kt_h - 1, in_w + self.kt_w - 1)
    }

    /// Merge placement for an `in_h x in_w` input with `crop` extra rows and
    /// columns trimmed from every output edge.
    pub fn merge_map(&self, in_h: usize, in_w: usize, crop: usize) -> Result<MergeMap> {
        let full_h = self.stride * (in_h - 1) + self.kh;
        let full_w = self.stride * (in_w - 1) + self.kw;
        if 2 * crop >= full_h || 2 * crop >= full_w {
            return Err(Error::shape(format!("crop {crop} leaves nothing of a {full_h}x{full_w} output")));
        }
        Ok(MergeMap {
            stride: self.stride,
            final_h: full_h - 2 * crop,
            final_w: full_w - 2 * crop,
            crop_top: self.pk_h + crop,
            crop_left: self.pk_w + crop,
        })
    }

    /// Inverts the sampling: rebuilds the expanded filter from the sub-filters.
    pub fn reassemble(&self) -> FilterBank {
        let s = self.stride;
        let (ic, oc) = (self.in_channels(), self.out_channels());
        FilterBank::from_fn(self.kt_h * s, self.kt_w * s, ic, oc, |h, w, i, o| {
            let n = (h % s) * s + w % s;
            self.sub_filters[n].at(self.kt_h - 1 - h / s, self.kt_w - 1 - w / s, i, o)
        })
        .expect("reassembly preserves shape")
    }

    pub fn execute(&self, input: &Tensor3) -> Result<Tensor3> {
        self.execute_counted(input, &mut 0)
    }

    pub fn execute_counted(&self, input: &Tensor3, muls: &mut u64) -> Result<Tensor3> {
        let map = self.merge_map(input.height(), input.width(), 0)?;
        self.execute_with_map(input, &map, muls)
    }

    /// Runs the split convolutions and merges with an explicit placement.
    pub fn execute_with_map(&self, input: &Tensor3, map: &MergeMap, muls: &mut u64) -> Result<Tensor3> {
        if input.channels() != self.in_channels() {
            return Err(Error::ChannelMismatch { input: input.channels(), filter: self.in_channels() });
        }
        let padded = pad_input_sd(input, self);
        let expect = self.sub_output_hw(input.height(), input.width());
        let subs = self
            .sub_filters
            .iter()
            .map(|w| {
                let out = conv2d_counted(&padded, w, ConvParams::unit(), muls)?;
                if (out.height(), out.width()) != expect {
                    return Err(Error::shape(format!(
                        "split output {}x{} differs from expected {}x{}",
                        out.height(),
                        out.width(),
                        expect.0,
                        expect.1
                    )));
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()?;
        merge_outputs(&subs, map)
    }
}

/// Transposed convolution computed through a [`SplitPlan`].
pub fn sd_deconv2d(input: &Tensor3, filters: &FilterBank, stride: usize) -> Result<Tensor3> {
    sd_deconv2d_counted(input, filters, stride, &mut 0)
}

pub fn sd_deconv2d_counted(input: &Tensor3, filters: &FilterBank, stride: usize, muls: &mut u64) -> Result<Tensor3> {
    if filters.in_channels() != input.channels() {
        return Err(Error::ChannelMismatch { input: input.channels(), filter: filters.in_channels() });
    }
    SplitPlan::new(filters, stride)?.execute_counted(input, muls)
}
