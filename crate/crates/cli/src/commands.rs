//! Subcommand bodies. Each returns its report as a string so the binary only
//! has to route output and map errors to exit statuses.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdconv::io::{read_filter_file, read_tensor_file, write_filter_file};
use sdconv::reference::{conv2d, crop_edges, deconv2d_oracle, nzp_deconv2d, ConvParams};
use sdconv::sim::{network_speedup_with, Arch, SimConfig};
use sdconv::split::SplitPlan;
use sdconv::{mac_census, Error, FilterBank, LayerKind, LayerSpec, SparsityMode, Tensor3};

use crate::config::NetworkConfig;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or flag combinations.
    Usage(String),
    Core(Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => f.write_str(msg),
            CliError::Core(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Markdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMethod {
    Oracle,
    Nzp,
    Sd,
}

// ---------------------------------------------------------------- split

/// Splits a filter file for a stride-`stride` deconvolution, writing
/// `<out_base>.sub<n>.flt` for every split and `<out_base>.plan.txt`.
/// Returns the plan text.
pub fn split(filter_file: &Path, stride: usize, crop: usize, out_base: &Path) -> CliResult<String> {
    if stride == 0 {
        return Err(CliError::Usage("--stride must be positive".into()));
    }
    let filters = read_filter_file(filter_file)?;
    let plan = SplitPlan::new(&filters, stride)?;
    let mut text = String::new();
    let _ = writeln!(text, "stride {stride}");
    let _ = writeln!(text, "kernel {}x{}", plan.kh, plan.kw);
    let _ = writeln!(text, "channels {} -> {}", plan.in_channels(), plan.out_channels());
    let _ = writeln!(text, "kt {}x{}", plan.kt_h, plan.kt_w);
    let _ = writeln!(text, "pk {}x{}", plan.pk_h, plan.pk_w);
    let _ = writeln!(text, "pi {}x{}", plan.pi_h, plan.pi_w);
    let _ = writeln!(text, "splits {}", plan.n_splits);
    let _ = writeln!(text, "crop_top {}", plan.pk_h + crop);
    let _ = writeln!(text, "crop_left {}", plan.pk_w + crop);
    for (n, sub) in plan.sub_filters.iter().enumerate() {
        let path = suffixed(out_base, &format!(".sub{n}.flt"));
        write_filter_file(&path, sub)?;
        let _ = writeln!(text, "sub{n} {} zeros={}", path.display(), sub.data().len() - sub.nonzero_count());
    }
    std::fs::write(suffixed(out_base, ".plan.txt"), &text).map_err(Error::from)?;
    Ok(text)
}

fn suffixed(base: &Path, suffix: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

// ---------------------------------------------------------------- verify

/// Test hook: shift the split merge placement by one row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Faults {
    pub crop: bool,
}

/// The first disagreement found for one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub method: &'static str,
    pub at: (usize, usize, usize),
    pub expected: f64,
    /// `None` when the cell was never produced.
    pub found: Option<f64>,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (y, x, c) = self.at;
        write!(f, "{} differs at (y={y}, x={x}, c={c}): oracle {}, ", self.method, self.expected)?;
        match self.found {
            Some(v) => write!(f, "got {v}"),
            None => f.write_str("never written"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerCheck {
    pub nzp_max_dev: f64,
    pub sd_max_dev: f64,
    pub mismatch: Option<Mismatch>,
}

/// Whole numbers in [-4, 4]: every partial sum is exact in f64.
fn whole(rng: &mut ChaCha8Rng) -> f64 {
    f64::from(rng.gen_range(-4i32..=4))
}

/// Runs oracle, NZP and SD on a seeded random instance of `layer`.
pub fn check_layer(layer: &LayerSpec, rng: &mut ChaCha8Rng, faults: Faults) -> CliResult<LayerCheck> {
    let input = Tensor3::from_fn(layer.in_h, layer.in_w, layer.in_c, |_, _, _| whole(rng))?;
    let filters = FilterBank::from_fn(layer.kh, layer.kw, layer.in_c, layer.out_c, |_, _, _, _| whole(rng))?;
    let s = layer.stride;
    let oracle = crop_edges(&deconv2d_oracle(&input, &filters, s)?, layer.crop)?;
    let nzp = crop_edges(&nzp_deconv2d(&input, &filters, s)?, layer.crop)?;

    let plan = SplitPlan::new(&filters, s)?;
    let mut map = plan.merge_map(layer.in_h, layer.in_w, layer.crop)?;
    if faults.crop {
        map.crop_top += 1;
    }
    let sd = match plan.execute_with_map(&input, &map, &mut 0) {
        Ok(t) => Ok(t),
        Err(Error::Coverage { y, x }) => Err((y, x)),
        Err(e) => return Err(e.into()),
    };

    let nzp_max_dev = oracle.max_abs_diff(&nzp).unwrap_or(f64::INFINITY);
    let mut mismatch = oracle.first_difference(&nzp).map(|at| Mismatch {
        method: "NZP",
        at,
        expected: oracle.at(at.0, at.1, at.2),
        found: Some(nzp.at(at.0, at.1, at.2)),
    });
    let sd_max_dev = match &sd {
        Ok(sd) => {
            if mismatch.is_none() {
                mismatch = oracle.first_difference(sd).map(|at| Mismatch {
                    method: "SD",
                    at,
                    expected: oracle.at(at.0, at.1, at.2),
                    found: Some(sd.at(at.0, at.1, at.2)),
                });
            }
            oracle.max_abs_diff(sd).unwrap_or(f64::INFINITY)
        }
        Err((y, x)) => {
            mismatch.get_or_insert(Mismatch {
                method: "SD",
                at: (*y, *x, 0),
                expected: oracle.at(*y, *x, 0),
                found: None,
            });
            f64::INFINITY
        }
    };
    Ok(LayerCheck { nzp_max_dev, sd_max_dev, mismatch })
}

/// Verifies every deconvolution layer of a config. Returns the report and
/// whether everything matched.
pub fn verify_config(cfg: &NetworkConfig, seed: u64, faults: Faults) -> CliResult<(String, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = format!("verify {} (seed {seed})\n", cfg.title());
    let mut checked = 0;
    let mut failed = 0;
    for (i, layer) in cfg.layers.iter().enumerate() {
        if layer.kind != LayerKind::Deconv {
            let _ = writeln!(out, "layer {i}  {layer}  conv, skipped");
            continue;
        }
        let c = check_layer(layer, &mut rng, faults)?;
        checked += 1;
        let status = if c.mismatch.is_none() { "ok" } else { "MISMATCH" };
        let _ =
            writeln!(out, "layer {i}  {layer}  nzp_max_dev={}  sd_max_dev={}  {status}", c.nzp_max_dev, c.sd_max_dev);
        if let Some(m) = c.mismatch {
            failed += 1;
            let _ = writeln!(out, "  layer {i}: {m}");
        }
    }
    let pass = failed == 0;
    if pass {
        let _ = writeln!(out, "PASS: {checked} deconvolution layer(s) exact");
    } else {
        let _ = writeln!(out, "FAIL: {failed} of {checked} deconvolution layer(s) differ");
    }
    Ok((out, pass))
}

/// Every layer of the small-instance grid: input and kernel extents 1..=5 per
/// axis, strides 1..=4, channel counts 1..=3.
pub fn grid_layers() -> impl Iterator<Item = LayerSpec> {
    let r = || 1usize..=5;
    r().flat_map(move |ih| r().map(move |iw| (ih, iw)))
        .flat_map(move |(ih, iw)| r().flat_map(move |kh| r().map(move |kw| (ih, iw, kh, kw))))
        .flat_map(|(ih, iw, kh, kw)| (1..=4).map(move |s| (ih, iw, kh, kw, s)))
        .flat_map(|(ih, iw, kh, kw, s)| {
            (1..=3).flat_map(move |ic| {
                (1..=3).map(move |oc| LayerSpec::deconv((ih, iw, ic), (kh, kw), oc, s).expect("grid layer is valid"))
            })
        })
}

pub fn verify_grid(seed: u64, faults: Faults) -> CliResult<(String, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = format!("verify grid (seed {seed})\n");
    let mut per_stride = [(0usize, 0.0f64, 0.0f64); 4];
    let mut first_failure = None;
    let mut failed = 0;
    let mut total = 0;
    for layer in grid_layers() {
        let c = check_layer(&layer, &mut rng, faults)?;
        let slot = &mut per_stride[layer.stride - 1];
        slot.0 += 1;
        slot.1 = slot.1.max(c.nzp_max_dev);
        slot.2 = slot.2.max(c.sd_max_dev);
        total += 1;
        if let Some(m) = c.mismatch {
            failed += 1;
            first_failure.get_or_insert((layer, m));
        }
    }
    for (i, (n, nzp, sd)) in per_stride.iter().enumerate() {
        let _ = writeln!(out, "stride {}  {n} layers  nzp_max_dev={nzp}  sd_max_dev={sd}", i + 1);
    }
    let pass = failed == 0;
    match first_failure {
        None => {
            let _ = writeln!(out, "PASS: {total} layers exact");
        }
        Some((layer, m)) => {
            let _ = writeln!(out, "first mismatch: {layer}: {m}");
            let _ = writeln!(out, "FAIL: {failed} of {total} layers differ");
        }
    }
    Ok((out, pass))
}

// ---------------------------------------------------------------- analyze

pub fn analyze(cfg: &NetworkConfig, format: Format) -> String {
    let census = mac_census(&cfg.layers);
    match format {
        Format::Csv => census.to_csv(),
        Format::Markdown => census.to_markdown(cfg.title()),
    }
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateArgs {
    /// Empty means both architectures.
    pub archs: Vec<Arch>,
    /// Empty means every mode the architecture supports.
    pub modes: Vec<SparsityMode>,
    pub line_skip: bool,
    pub format: Format,
}

pub fn simulate(cfg: &NetworkConfig, args: &SimulateArgs) -> CliResult<String> {
    let explicit_arch = !args.archs.is_empty();
    let archs = if explicit_arch { args.archs.clone() } else { vec![Arch::DotArray, Arch::Grid2D] };
    let modes = if args.modes.is_empty() { SparsityMode::ALL.to_vec() } else { args.modes.clone() };
    if explicit_arch {
        for &arch in &archs {
            if let Some(&mode) = modes.iter().find(|m| !arch.supports(**m)) {
                return Err(CliError::Usage(format!("mode {mode} is not supported on the {arch} architecture")));
            }
        }
    }
    let sim_cfg = if args.line_skip { SimConfig::line_skip() } else { SimConfig::default() };
    let result = network_speedup_with(&cfg.layers, &sim_cfg, &archs, &modes);
    Ok(match args.format {
        Format::Csv => result.to_csv(),
        Format::Markdown => result.to_markdown(cfg.title()),
    })
}

// ---------------------------------------------------------------- run

/// Runs the network on `input`, one filter bank per layer.
pub fn run(cfg: &NetworkConfig, input: Tensor3, filters: &[FilterBank], method: RunMethod) -> CliResult<Tensor3> {
    if filters.len() != cfg.layers.len() {
        return Err(CliError::Usage(format!(
            "network has {} layer(s) but {} filter file(s) were given",
            cfg.layers.len(),
            filters.len()
        )));
    }
    let mut x = input;
    for (i, (layer, w)) in cfg.layers.iter().zip(filters).enumerate() {
        let shape_err = |msg: String| CliError::Core(Error::Shape(format!("layer {i} ({layer}): {msg}")));
        if x.dims() != layer.in_dims() {
            return Err(shape_err(format!("input is {:?}, layer expects {:?}", x.dims(), layer.in_dims())));
        }
        let want = (layer.kh, layer.kw, layer.in_c, layer.out_c);
        if w.dims() != want {
            return Err(shape_err(format!("filter is {:?}, layer expects {want:?}", w.dims())));
        }
        x = match layer.kind {
            LayerKind::Conv => conv2d(&x, w, ConvParams::new(layer.stride, 0))?,
            LayerKind::Deconv => match method {
                RunMethod::Oracle => crop_edges(&deconv2d_oracle(&x, w, layer.stride)?, layer.crop)?,
                RunMethod::Nzp => crop_edges(&nzp_deconv2d(&x, w, layer.stride)?, layer.crop)?,
                RunMethod::Sd => {
                    let plan = SplitPlan::new(w, layer.stride)?;
                    let map = plan.merge_map(layer.in_h, layer.in_w, layer.crop)?;
                    plan.execute_with_map(&x, &map, &mut 0)?
                }
            },
        };
    }
    Ok(x)
}

/// File-level wrapper around [`run`].
pub fn run_files(
    cfg: &NetworkConfig,
    input: &Path,
    filter_files: &[PathBuf],
    method: RunMethod,
    output: &Path,
) -> CliResult<()> {
    let x = read_tensor_file(input)?;
    let filters = filter_files.iter().map(read_filter_file).collect::<Result<Vec<_>, _>>()?;
    let y = run(cfg, x, &filters, method)?;
    sdconv::io::write_tensor_file(output, &y)?;
    Ok(())
}
