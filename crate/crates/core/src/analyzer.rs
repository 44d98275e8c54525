//! Structural MAC and weight-parameter counting.
//!
//! Counts depend only on layer shapes. A MAC is skipped under a sparsity mode
//! when its activation operand is a structural zero (inserted between input
//! pixels, or border padding) or its weight operand is a structural zero
//! (filter expansion padding). Zeros that happen to appear in data or trained
//! weights are not considered.
//!
//! Sparse-mode counts come from enumerating every output position and kernel
//! tap of the lowered convolutions; see [`Schedule`].

use std::fmt::{self, Write as _};

use crate::error::{Error, Result};
use crate::layer::{LayerKind, LayerSpec};
use crate::split::AxisSplit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SparsityMode {
    Dense,
    /// Skip MACs with a structural-zero activation.
    Asparse,
    /// Skip MACs with a structural-zero weight.
    Wsparse,
    /// Skip MACs with either operand a structural zero.
    AWsparse,
}

impl SparsityMode {
    pub const ALL: [SparsityMode; 4] =
        [SparsityMode::Dense, SparsityMode::Asparse, SparsityMode::Wsparse, SparsityMode::AWsparse];

    pub fn name(self) -> &'static str {
        match self {
            SparsityMode::Dense => "Dense",
            SparsityMode::Asparse => "Asparse",
            SparsityMode::Wsparse => "Wsparse",
            SparsityMode::AWsparse => "AWsparse",
        }
    }

    pub fn skips_activations(self) -> bool {
        matches!(self, SparsityMode::Asparse | SparsityMode::AWsparse)
    }

    pub fn skips_weights(self) -> bool {
        matches!(self, SparsityMode::Wsparse | SparsityMode::AWsparse)
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dense" => Some(SparsityMode::Dense),
            "asparse" => Some(SparsityMode::Asparse),
            "wsparse" => Some(SparsityMode::Wsparse),
            "awsparse" | "wasparse" => Some(SparsityMode::AWsparse),
            _ => None,
        }
    }
}

impl fmt::Display for SparsityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How a deconvolution layer is realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Native scatter-accumulate transposed convolution.
    Deconv,
    /// Zero insertion followed by one stride-1 convolution.
    Nzp,
    /// Split deconvolution: `s*s` stride-1 convolutions.
    Sd,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Deconv, Method::Nzp, Method::Sd];

    pub fn name(self) -> &'static str {
        match self {
            Method::Deconv => "Deconv",
            Method::Nzp => "NZP",
            Method::Sd => "SD",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Spatial tap counts for one output position of a lowered convolution.
/// Multiply by the input channel count for MACs per output activation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TapCounts {
    pub dense: u32,
    /// Taps whose activation is not a structural zero.
    pub act: u32,
    /// Taps whose weight is not a structural zero.
    pub weight: u32,
    /// Taps with both operands live.
    pub both: u32,
    /// Taps left when only fully-zero window rows are skipped.
    pub line: u32,
}

impl TapCounts {
    pub fn under(&self, mode: SparsityMode) -> u32 {
        match mode {
            SparsityMode::Dense => self.dense,
            SparsityMode::Asparse => self.act,
            SparsityMode::Wsparse => self.weight,
            SparsityMode::AWsparse => self.both,
        }
    }
}

/// One stride-1 convolution of a lowered deconvolution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvPass {
    pub out_h: usize,
    pub out_w: usize,
    pub in_c: usize,
    pub out_c: usize,
    /// Row-major over output positions.
    pub taps: Vec<TapCounts>,
}

impl ConvPass {
    /// Enumerates a valid stride-1 convolution over an input whose rows and
    /// columns are individually live or structurally zero, with a kernel whose
    /// rows and columns are likewise live or zero.
    fn enumerate(
        row_live: &[bool],
        col_live: &[bool],
        krow_live: &[bool],
        kcol_live: &[bool],
        in_c: usize,
        out_c: usize,
    ) -> Self {
        let (kh, kw) = (krow_live.len(), kcol_live.len());
        let out_h = row_live.len() + 1 - kh;
        let out_w = col_live.len() + 1 - kw;
        let mut taps = Vec::with_capacity(out_h * out_w);
        for oy in 0..out_h {
            for ox in 0..out_w {
                let mut t = TapCounts::default();
                for dy in 0..kh {
                    let mut line_live = false;
                    for dx in 0..kw {
                        let act = row_live[oy + dy] && col_live[ox + dx];
                        let weight = krow_live[dy] && kcol_live[dx];
                        line_live |= act;
                        t.dense += 1;
                        t.act += act as u32;
                        t.weight += weight as u32;
                        t.both += (act && weight) as u32;
                    }
                    if line_live {
                        t.line += kw as u32;
                    }
                }
                taps.push(t);
            }
        }
        Self { out_h, out_w, in_c, out_c, taps }
    }

    pub fn macs(&self, mode: SparsityMode) -> u64 {
        let spatial: u64 = self.taps.iter().map(|t| u64::from(t.under(mode))).sum();
        spatial * (self.in_c * self.out_c) as u64
    }
}

/// The stride-1 convolutions a method lowers a deconvolution layer into.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub method: Method,
    pub passes: Vec<ConvPass>,
}

impl Schedule {
    /// Lowers `layer` with `method`. The native deconvolution has no
    /// convolution schedule.
    pub fn new(layer: &LayerSpec, method: Method) -> Result<Self> {
        layer.require_deconv()?;
        match method {
            Method::Nzp => Ok(nzp_schedule(layer)),
            Method::Sd => Ok(sd_schedule(layer)),
            Method::Deconv => Err(Error::UnsupportedMethod(method)),
        }
    }

    pub fn macs(&self, mode: SparsityMode) -> u64 {
        self.passes.iter().map(|p| p.macs(mode)).sum()
    }
}

fn nzp_schedule(layer: &LayerSpec) -> Schedule {
    let s = layer.stride;
    let live = |len_in: usize, k: usize| -> Vec<bool> {
        let n = s * (len_in - 1) + 1 + 2 * (k - 1);
        (0..n).map(|r| r.checked_sub(k - 1).is_some_and(|i| i % s == 0 && i / s < len_in)).collect()
    };
    let pass = ConvPass::enumerate(
        &live(layer.in_h, layer.kh),
        &live(layer.in_w, layer.kw),
        &vec![true; layer.kh],
        &vec![true; layer.kw],
        layer.in_c,
        layer.out_c,
    );
    Schedule { method: Method::Nzp, passes: vec![pass] }
}

fn sd_schedule(layer: &LayerSpec) -> Schedule {
    let s = layer.stride;
    let (sh, sw) = (AxisSplit::new(layer.kh, s), AxisSplit::new(layer.kw, s));
    let ring =
        |len_in: usize, pi: usize| -> Vec<bool> { (0..len_in + 2 * pi).map(|r| r >= pi && r < pi + len_in).collect() };
    // sub-kernel tap t of phase p reads expanded row p + s*(K_T - 1 - t)
    let kernel = |phase: usize, ax: AxisSplit| -> Vec<bool> {
        (0..ax.kt).map(|t| phase + s * (ax.kt - 1 - t) >= ax.pk).collect()
    };
    let (rows, cols) = (ring(layer.in_h, sh.pi), ring(layer.in_w, sw.pi));
    let passes = (0..s * s)
        .map(|n| ConvPass::enumerate(&rows, &cols, &kernel(n / s, sh), &kernel(n % s, sw), layer.in_c, layer.out_c))
        .collect();
    Schedule { method: Method::Sd, passes }
}

/// MACs of the native transposed convolution: every input element meets every weight.
pub fn count_deconv_macs(layer: &LayerSpec) -> Result<u64> {
    layer.require_deconv()?;
    Ok((layer.in_h * layer.in_w * layer.kh * layer.kw * layer.in_c * layer.out_c) as u64)
}

pub fn count_nzp_macs(layer: &LayerSpec, mode: SparsityMode) -> Result<u64> {
    layer.require_deconv()?;
    match mode {
        // no structural zeros in the rotated filter
        SparsityMode::Dense | SparsityMode::Wsparse => {
            let (oh, ow) = layer.full_out_hw();
            Ok((oh * ow * layer.kh * layer.kw * layer.in_c * layer.out_c) as u64)
        }
        SparsityMode::Asparse | SparsityMode::AWsparse => Ok(nzp_schedule(layer).macs(mode)),
    }
}

pub fn count_sd_macs(layer: &LayerSpec, mode: SparsityMode) -> Result<u64> {
    layer.require_deconv()?;
    match mode {
        SparsityMode::Dense => {
            let s = layer.stride;
            let (sh, sw) = (AxisSplit::new(layer.kh, s), AxisSplit::new(layer.kw, s));
            let out = (layer.in_h + sh.kt - 1) * (layer.in_w + sw.kt - 1);
            Ok((s * s * out * sh.kt * sw.kt * layer.in_c * layer.out_c) as u64)
        }
        _ => Ok(sd_schedule(layer).macs(mode)),
    }
}

pub fn count_macs(layer: &LayerSpec, method: Method, mode: SparsityMode) -> Result<u64> {
    match method {
        Method::Deconv => count_deconv_macs(layer),
        Method::Nzp => count_nzp_macs(layer, mode),
        Method::Sd => count_sd_macs(layer, mode),
    }
}

/// `(stored parameters, nonzero parameters)` of the filter a method runs with.
/// With `compressed`, the SD expansion zeros are not stored.
pub fn count_weight_params(layer: &LayerSpec, method: Method, compressed: bool) -> Result<(u64, u64)> {
    layer.require_deconv()?;
    let original = (layer.kh * layer.kw * layer.in_c * layer.out_c) as u64;
    match method {
        Method::Deconv | Method::Nzp => Ok((original, original)),
        Method::Sd if compressed => Ok((original, original)),
        Method::Sd => {
            let s = layer.stride;
            let (kt_h, kt_w) = (layer.kh.div_ceil(s), layer.kw.div_ceil(s));
            Ok(((s * s * kt_h * kt_w * layer.in_c * layer.out_c) as u64, original))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountReport {
    pub layer_index: usize,
    pub layer: LayerSpec,
    pub method: Method,
    pub mode: SparsityMode,
    pub macs: u64,
    pub weight_params: u64,
    pub weight_nonzeros: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CensusTotal {
    pub method: Method,
    pub mode: SparsityMode,
    pub macs: u64,
    pub weight_params: u64,
    pub weight_nonzeros: u64,
}

/// Per-layer and whole-network counts for every method and mode.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Census {
    pub rows: Vec<CountReport>,
    pub totals: Vec<CensusTotal>,
}

/// Counts every deconvolution layer of a network. Other layers are skipped but
/// keep their position in `layer_index`.
pub fn mac_census(network: &[LayerSpec]) -> Census {
    let mut rows = Vec::new();
    for (layer_index, layer) in network.iter().enumerate() {
        if layer.kind != LayerKind::Deconv {
            continue;
        }
        let nzp = nzp_schedule(layer);
        let sd = sd_schedule(layer);
        for method in Method::ALL {
            let (weight_params, weight_nonzeros) = count_weight_params(layer, method, false).expect("deconv layer");
            for mode in SparsityMode::ALL {
                let macs = match method {
                    Method::Deconv => count_deconv_macs(layer).expect("deconv layer"),
                    Method::Nzp => nzp.macs(mode),
                    Method::Sd => sd.macs(mode),
                };
                rows.push(CountReport {
                    layer_index,
                    layer: *layer,
                    method,
                    mode,
                    macs,
                    weight_params,
                    weight_nonzeros,
                });
            }
        }
    }
    let totals = if rows.is_empty() {
        Vec::new()
    } else {
        Method::ALL
            .iter()
            .flat_map(|&method| SparsityMode::ALL.iter().map(move |&mode| (method, mode)))
            .map(|(method, mode)| {
                let sel = rows.iter().filter(|r| r.method == method && r.mode == mode);
                let mut t = CensusTotal { method, mode, macs: 0, weight_params: 0, weight_nonzeros: 0 };
                for r in sel {
                    t.macs += r.macs;
                    t.weight_params += r.weight_params;
                    t.weight_nonzeros += r.weight_nonzeros;
                }
                t
            })
            .collect()
    };
    Census { rows, totals }
}

impl Census {
    pub fn total(&self, method: Method, mode: SparsityMode) -> Option<&CensusTotal> {
        self.totals.iter().find(|t| t.method == method && t.mode == mode)
    }

    pub fn get(&self, layer_index: usize, method: Method, mode: SparsityMode) -> Option<&CountReport> {
        self.rows.iter().find(|r| r.layer_index == layer_index && r.method == method && r.mode == mode)
    }

    /// `layer_index,method,mode,macs,weight_params,weight_nonzeros`, with
    /// network totals on rows whose index is `total`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("layer_index,method,mode,macs,weight_params,weight_nonzeros\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.layer_index, r.method, r.mode, r.macs, r.weight_params, r.weight_nonzeros
            );
        }
        for t in &self.totals {
            let _ = writeln!(out, "total,{},{},{},{},{}", t.method, t.mode, t.macs, t.weight_params, t.weight_nonzeros);
        }
        out
    }

    /// Two tables: MACs per realization, and weight parameters before and
    /// after dropping expansion zeros.
    pub fn to_markdown(&self, title: &str) -> String {
        use Method::*;
        use SparsityMode::*;
        let mut out = format!("## {title}\n\n### Multiply-accumulate operations\n\n");
        out.push_str("| layer | shape | Deconv | NZP | SD | SD-AWsparse | NZP/Deconv | SD/Deconv |\n");
        out.push_str("|---|---|---:|---:|---:|---:|---:|---:|\n");
        let mut indices: Vec<usize> = self.rows.iter().map(|r| r.layer_index).collect();
        indices.dedup();
        let macs = |i: usize, m: Method, mode: SparsityMode| self.get(i, m, mode).map_or(0, |r| r.macs);
        for &i in &indices {
            let l = self.get(i, Deconv, Dense).expect("row").layer;
            let (d, n, s) = (macs(i, Deconv, Dense), macs(i, Nzp, Dense), macs(i, Sd, Dense));
            let _ = writeln!(
                out,
                "| {i} | {} | {d} | {n} | {s} | {} | {:.2} | {:.2} |",
                l,
                macs(i, Sd, AWsparse),
                ratio(n, d),
                ratio(s, d)
            );
        }
        if let (Some(d), Some(n), Some(s), Some(aw)) =
            (self.total(Deconv, Dense), self.total(Nzp, Dense), self.total(Sd, Dense), self.total(Sd, AWsparse))
        {
            let _ = writeln!(
                out,
                "| total | | {} | {} | {} | {} | {:.2} | {:.2} |",
                d.macs,
                n.macs,
                s.macs,
                aw.macs,
                ratio(n.macs, d.macs),
                ratio(s.macs, d.macs)
            );
        }

        out.push_str("\n### Weight parameters\n\n");
        out.push_str("| layer | shape | original | SD | SD compressed |\n");
        out.push_str("|---|---|---:|---:|---:|\n");
        let (mut to, mut ts, mut tc) = (0, 0, 0);
        for &i in &indices {
            let d = self.get(i, Deconv, Dense).expect("row");
            let s = self.get(i, Sd, Dense).expect("row");
            to += d.weight_params;
            ts += s.weight_params;
            tc += s.weight_nonzeros;
            let _ = writeln!(
                out,
                "| {i} | {} | {} | {} | {} |",
                d.layer, d.weight_params, s.weight_params, s.weight_nonzeros
            );
        }
        if !indices.is_empty() {
            let _ = writeln!(out, "| total | | {to} | {ts} | {tc} |");
        }
        out
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}
