//! First-order cycle models of two convolution processor archetypes.
//!
//! Both models are compute bound: no memory traffic, no stalls, perfect
//! tiling. They consume the per-output tap counts of a [`Schedule`], so any
//! realization the analyzer can lower can be ranked.
//!
//! * **Dot-product array**: `d_out` units, each reducing a `d_in`-wide dot
//!   product per cycle. An output activation's taps (spatial taps times input
//!   channels) are packed into `d_in`-wide groups; the units take different
//!   output channels of the same position.
//! * **Output-stationary 2D array**: `rows x cols` PEs, each accumulating one
//!   output activation. Output positions (row-major) map onto PE rows and
//!   output channels onto PE columns; a tile takes as long as its busiest PE.
//!
//! Zero skipping is modeled per MAC with compaction. For the zero-insertion
//! lowering there is also a pessimistic variant (`nzp_line_skip`) in which
//! only window rows that are entirely structural zero can be skipped, and
//! every other row is issued in full.

use std::fmt::{self, Write as _};

use crate::analyzer::{ConvPass, Method, Schedule, SparsityMode, TapCounts};
use crate::error::{Error, Result};
use crate::layer::{LayerKind, LayerSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DotArrayConfig {
    /// Multipliers per unit.
    pub d_in: usize,
    /// Units.
    pub d_out: usize,
    pub freq_mhz: f64,
    pub nzp_line_skip: bool,
}

impl Default for DotArrayConfig {
    fn default() -> Self {
        Self { d_in: 16, d_out: 16, freq_mhz: 800.0, nzp_line_skip: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2DConfig {
    pub rows: usize,
    pub cols: usize,
    pub freq_mhz: f64,
    pub nzp_line_skip: bool,
}

impl Default for Grid2DConfig {
    fn default() -> Self {
        Self { rows: 32, cols: 7, freq_mhz: 800.0, nzp_line_skip: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arch {
    DotArray,
    Grid2D,
}

impl Arch {
    pub fn name(self) -> &'static str {
        match self {
            Arch::DotArray => "dot",
            Arch::Grid2D => "grid2d",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "dot" => Some(Arch::DotArray),
            "grid2d" => Some(Arch::Grid2D),
            _ => None,
        }
    }

    /// The dot-product array cannot skip zero weights.
    pub fn supports(self, mode: SparsityMode) -> bool {
        match self {
            Arch::DotArray => matches!(mode, SparsityMode::Dense | SparsityMode::Asparse),
            Arch::Grid2D => true,
        }
    }

    pub fn modes(self) -> Vec<SparsityMode> {
        SparsityMode::ALL.into_iter().filter(|m| self.supports(*m)).collect()
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The pair of processors a network is evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimConfig {
    pub dot: DotArrayConfig,
    pub grid: Grid2DConfig,
}

impl SimConfig {
    /// Both architectures with the pessimistic zero-insertion skipping model.
    pub fn line_skip() -> Self {
        let mut cfg = Self::default();
        cfg.dot.nzp_line_skip = true;
        cfg.grid.nzp_line_skip = true;
        cfg
    }

    fn peak(&self, arch: Arch) -> u64 {
        match arch {
            Arch::DotArray => (self.dot.d_in * self.dot.d_out) as u64,
            Arch::Grid2D => (self.grid.rows * self.grid.cols) as u64,
        }
    }

    fn freq_mhz(&self, arch: Arch) -> f64 {
        match arch {
            Arch::DotArray => self.dot.freq_mhz,
            Arch::Grid2D => self.grid.freq_mhz,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleReport {
    pub layer: LayerSpec,
    pub arch: Arch,
    pub method: Method,
    pub mode: SparsityMode,
    pub cycles: u64,
    /// MACs actually issued to multipliers.
    pub effective_macs: u64,
    pub peak_macs_per_cycle: u64,
    pub utilization: f64,
    pub latency_us: f64,
}

fn effective_taps(t: &TapCounts, method: Method, mode: SparsityMode, line_skip: bool) -> u64 {
    let taps = if line_skip && method == Method::Nzp && mode.skips_activations() { t.line } else { t.under(mode) };
    u64::from(taps)
}

fn dot_pass_cycles(pass: &ConvPass, cfg: &DotArrayConfig, method: Method, mode: SparsityMode) -> (u64, u64) {
    let groups = pass.out_c.div_ceil(cfg.d_out) as u64;
    let mut cycles = 0;
    let mut macs = 0;
    for t in &pass.taps {
        let taps = effective_taps(t, method, mode, cfg.nzp_line_skip) * pass.in_c as u64;
        cycles += taps.div_ceil(cfg.d_in as u64);
        macs += taps;
    }
    (cycles * groups, macs * pass.out_c as u64)
}

fn grid_pass_cycles(pass: &ConvPass, cfg: &Grid2DConfig, method: Method, mode: SparsityMode) -> (u64, u64) {
    let groups = pass.out_c.div_ceil(cfg.cols) as u64;
    let mut cycles = 0;
    let mut macs = 0;
    for block in pass.taps.chunks(cfg.rows) {
        let mut slowest = 0;
        for t in block {
            let taps = effective_taps(t, method, mode, cfg.nzp_line_skip) * pass.in_c as u64;
            slowest = slowest.max(taps);
            macs += taps;
        }
        cycles += slowest;
    }
    (cycles * groups, macs * pass.out_c as u64)
}

fn report(
    cfg: &SimConfig,
    layer: &LayerSpec,
    schedule: &Schedule,
    arch: Arch,
    mode: SparsityMode,
) -> Result<CycleReport> {
    if !arch.supports(mode) {
        return Err(Error::UnsupportedMode { arch: arch.name(), mode });
    }
    let method = schedule.method;
    let (cycles, effective_macs) = schedule
        .passes
        .iter()
        .map(|p| match arch {
            Arch::DotArray => dot_pass_cycles(p, &cfg.dot, method, mode),
            Arch::Grid2D => grid_pass_cycles(p, &cfg.grid, method, mode),
        })
        .fold((0, 0), |(c, m), (pc, pm)| (c + pc, m + pm));
    let peak = cfg.peak(arch);
    let utilization = if cycles == 0 { 0.0 } else { effective_macs as f64 / (cycles * peak) as f64 };
    Ok(CycleReport {
        layer: *layer,
        arch,
        method,
        mode,
        cycles,
        effective_macs,
        peak_macs_per_cycle: peak,
        utilization,
        latency_us: cycles as f64 / cfg.freq_mhz(arch),
    })
}

pub fn dot_array_cycles(
    layer: &LayerSpec,
    method: Method,
    mode: SparsityMode,
    cfg: &DotArrayConfig,
) -> Result<CycleReport> {
    if !Arch::DotArray.supports(mode) {
        return Err(Error::UnsupportedMode { arch: Arch::DotArray.name(), mode });
    }
    let schedule = Schedule::new(layer, method)?;
    let sim = SimConfig { dot: *cfg, ..SimConfig::default() };
    report(&sim, layer, &schedule, Arch::DotArray, mode)
}

pub fn grid2d_cycles(layer: &LayerSpec, method: Method, mode: SparsityMode, cfg: &Grid2DConfig) -> Result<CycleReport> {
    let schedule = Schedule::new(layer, method)?;
    let sim = SimConfig { grid: *cfg, ..SimConfig::default() };
    report(&sim, layer, &schedule, Arch::Grid2D, mode)
}

pub fn simulate(
    layer: &LayerSpec,
    arch: Arch,
    method: Method,
    mode: SparsityMode,
    cfg: &SimConfig,
) -> Result<CycleReport> {
    if !arch.supports(mode) {
        return Err(Error::UnsupportedMode { arch: arch.name(), mode });
    }
    let schedule = Schedule::new(layer, method)?;
    report(cfg, layer, &schedule, arch, mode)
}

/// One simulated (layer, architecture, method, mode) point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimRow {
    pub layer_index: usize,
    pub report: CycleReport,
    pub speedup_vs_nzp_dense: f64,
}

/// Network-level result of one (architecture, method, mode) combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedupSummary {
    pub arch: Arch,
    pub method: Method,
    pub mode: SparsityMode,
    pub total_cycles: u64,
    pub total_macs: u64,
    /// NZP-Dense total cycles over this combination's total cycles.
    pub total_speedup: f64,
    /// Geometric mean of the per-layer speedups over NZP-Dense.
    pub geomean_speedup: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NetworkSim {
    pub rows: Vec<SimRow>,
    pub summaries: Vec<SpeedupSummary>,
}

/// Simulates every deconvolution layer with the zero-insertion and split
/// lowerings on the requested architectures and modes, and summarizes each
/// combination against the zero-insertion dense baseline.
///
/// Modes an architecture does not support are skipped. NZP-Dense is always
/// simulated since it is the reference point.
pub fn network_speedup_with(
    network: &[LayerSpec],
    cfg: &SimConfig,
    archs: &[Arch],
    modes: &[SparsityMode],
) -> NetworkSim {
    let mut rows = Vec::new();
    let layers: Vec<(usize, &LayerSpec)> =
        network.iter().enumerate().filter(|(_, l)| l.kind == LayerKind::Deconv).collect();
    let schedules: Vec<(Schedule, Schedule)> = layers
        .iter()
        .map(|(_, l)| (Schedule::new(l, Method::Nzp).expect("deconv"), Schedule::new(l, Method::Sd).expect("deconv")))
        .collect();

    let mut summaries = Vec::new();
    for &arch in archs {
        let baselines: Vec<CycleReport> = layers
            .iter()
            .zip(&schedules)
            .map(|((_, l), (nzp, _))| report(cfg, l, nzp, arch, SparsityMode::Dense).expect("dense"))
            .collect();
        let base_total: u64 = baselines.iter().map(|r| r.cycles).sum();
        for method in [Method::Nzp, Method::Sd] {
            for &mode in modes.iter().filter(|m| arch.supports(**m)) {
                let mut total_cycles = 0;
                let mut total_macs = 0;
                let mut log_sum = 0.0;
                for (((idx, l), (nzp, sd)), base) in layers.iter().zip(&schedules).zip(&baselines) {
                    let schedule = if method == Method::Nzp { nzp } else { sd };
                    let r = report(cfg, l, schedule, arch, mode).expect("supported mode");
                    let speedup = ratio(base.cycles, r.cycles);
                    total_cycles += r.cycles;
                    total_macs += r.effective_macs;
                    log_sum += speedup.ln();
                    rows.push(SimRow { layer_index: *idx, report: r, speedup_vs_nzp_dense: speedup });
                }
                if !layers.is_empty() {
                    summaries.push(SpeedupSummary {
                        arch,
                        method,
                        mode,
                        total_cycles,
                        total_macs,
                        total_speedup: ratio(base_total, total_cycles),
                        geomean_speedup: (log_sum / layers.len() as f64).exp(),
                    });
                }
            }
        }
    }
    NetworkSim { rows, summaries }
}

/// [`network_speedup_with`] over both architectures and all supported modes.
pub fn network_speedup(network: &[LayerSpec], cfg: &SimConfig) -> NetworkSim {
    network_speedup_with(network, cfg, &[Arch::DotArray, Arch::Grid2D], &SparsityMode::ALL)
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

impl NetworkSim {
    pub fn summary(&self, arch: Arch, method: Method, mode: SparsityMode) -> Option<&SpeedupSummary> {
        self.summaries.iter().find(|s| s.arch == arch && s.method == method && s.mode == mode)
    }

    /// The lowest-cycle mode of `method` on `arch`.
    pub fn best(&self, arch: Arch, method: Method) -> Option<&SpeedupSummary> {
        self.summaries.iter().filter(|s| s.arch == arch && s.method == method).min_by_key(|s| s.total_cycles)
    }

    /// `layer_index,arch,method,mode,cycles,utilization,speedup_vs_nzp_dense`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("layer_index,arch,method,mode,cycles,utilization,speedup_vs_nzp_dense\n");
        for r in &self.rows {
            let c = &r.report;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:.4},{:.4}",
                r.layer_index, c.arch, c.method, c.mode, c.cycles, c.utilization, r.speedup_vs_nzp_dense
            );
        }
        for s in &self.summaries {
            let _ = writeln!(
                out,
                "total,{},{},{},{},{:.4},{:.4}",
                s.arch,
                s.method,
                s.mode,
                s.total_cycles,
                self.total_utilization(s),
                s.total_speedup
            );
        }
        out
    }

    fn total_utilization(&self, s: &SpeedupSummary) -> f64 {
        let peak = self.rows.iter().find(|r| r.report.arch == s.arch).map_or(1, |r| r.report.peak_macs_per_cycle);
        if s.total_cycles == 0 {
            0.0
        } else {
            s.total_macs as f64 / (s.total_cycles * peak) as f64
        }
    }

    pub fn to_markdown(&self, title: &str) -> String {
        let mut out = format!("## {title}\n\n");
        out.push_str("| arch | method | mode | cycles | utilization | speedup (total) | speedup (geomean) |\n");
        out.push_str("|---|---|---|---:|---:|---:|---:|\n");
        for s in &self.summaries {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {:.3} | {:.2}x | {:.2}x |",
                s.arch,
                s.method,
                s.mode,
                s.total_cycles,
                self.total_utilization(s),
                s.total_speedup,
                s.geomean_speedup
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyzer::count_macs;

    fn deconv(i: usize, k: usize, c: (usize, usize), s: usize) -> LayerSpec {
        LayerSpec::deconv((i, i, c.0), (k, k), c.1, s).unwrap()
    }

    #[test]
    fn defaults() {
        let d = DotArrayConfig::default();
        assert_eq!((d.d_in, d.d_out, d.freq_mhz), (16, 16, 800.0));
        let g = Grid2DConfig::default();
        assert_eq!((g.rows, g.cols, g.freq_mhz), (32, 7, 800.0));
    }

    #[test]
    fn dot_rejects_weight_skipping() {
        let l = deconv(4, 3, (1, 1), 2);
        for mode in [SparsityMode::Wsparse, SparsityMode::AWsparse] {
            assert!(matches!(
                dot_array_cycles(&l, Method::Sd, mode, &DotArrayConfig::default()),
                Err(Error::UnsupportedMode { .. })
            ));
        }
        assert!(matches!(
            dot_array_cycles(&l, Method::Deconv, SparsityMode::Dense, &DotArrayConfig::default()),
            Err(Error::UnsupportedMethod(_))
        ));
    }

    #[test]
    fn dot_perfect_packing() {
        // stride 1, 1x1 kernel: every output has exactly in_c = d_in taps
        let l = LayerSpec::deconv((5, 3, 16), (1, 1), 16, 1).unwrap();
        let r = dot_array_cycles(&l, Method::Sd, SparsityMode::Dense, &DotArrayConfig::default()).unwrap();
        assert_eq!(r.cycles, 15);
        assert_eq!(r.utilization, 1.0);
    }

    #[test]
    fn dot_asparse_beats_dense_for_nzp() {
        let l = deconv(6, 3, (4, 4), 2);
        let cfg = DotArrayConfig::default();
        let dense = dot_array_cycles(&l, Method::Nzp, SparsityMode::Dense, &cfg).unwrap();
        let sparse = dot_array_cycles(&l, Method::Nzp, SparsityMode::Asparse, &cfg).unwrap();
        assert!(sparse.cycles < dense.cycles);
    }

    #[test]
    fn dot_sd_not_slower_than_nzp_for_divisible_kernel() {
        for c in [1, 16, 48] {
            let l = deconv(16, 4, (c, c), 2);
            let cfg = DotArrayConfig::default();
            let sd = dot_array_cycles(&l, Method::Sd, SparsityMode::Asparse, &cfg).unwrap();
            let nzp = dot_array_cycles(&l, Method::Nzp, SparsityMode::Asparse, &cfg).unwrap();
            assert!(sd.cycles <= nzp.cycles, "c={c}: {} > {}", sd.cycles, nzp.cycles);
        }
    }

    #[test]
    fn grid_uniform_layer() {
        // 1x1 kernel, stride 1: every output has in_c taps
        let l = LayerSpec::deconv((10, 7, 3), (1, 1), 9, 1).unwrap();
        let cfg = Grid2DConfig::default();
        let r = grid2d_cycles(&l, Method::Nzp, SparsityMode::Dense, &cfg).unwrap();
        assert_eq!(r.cycles, (70u64.div_ceil(32)) * (9u64.div_ceil(7)) * 3);
    }

    #[test]
    fn grid_awsparse_vs_wsparse_for_k3() {
        let cfg = Grid2DConfig::default();
        // Ring padding only touches border outputs, and every 32-position tile
        // of an 8x8 input holds an interior output: the busiest PE is unchanged.
        let l = deconv(8, 3, (4, 4), 2);
        let w = grid2d_cycles(&l, Method::Sd, SparsityMode::Wsparse, &cfg).unwrap();
        let aw = grid2d_cycles(&l, Method::Sd, SparsityMode::AWsparse, &cfg).unwrap();
        assert!(aw.effective_macs < w.effective_macs);
        assert_eq!(aw.cycles, w.cycles);
        // A 1x1 input has nothing but border outputs.
        let l = deconv(1, 3, (4, 4), 2);
        let w = grid2d_cycles(&l, Method::Sd, SparsityMode::Wsparse, &cfg).unwrap();
        let aw = grid2d_cycles(&l, Method::Sd, SparsityMode::AWsparse, &cfg).unwrap();
        assert!(aw.cycles < w.cycles);
    }

    #[test]
    fn grid_nzp_dense_over_sd_awsparse_near_s_squared() {
        let l = deconv(32, 4, (64, 64), 2);
        let cfg = Grid2DConfig::default();
        let nzp = grid2d_cycles(&l, Method::Nzp, SparsityMode::Dense, &cfg).unwrap();
        let sd = grid2d_cycles(&l, Method::Sd, SparsityMode::AWsparse, &cfg).unwrap();
        let r = nzp.cycles as f64 / sd.cycles as f64;
        assert!((r - 4.0).abs() <= 0.15 * 4.0, "ratio {r}");
    }

    #[test]
    fn dense_cycles_are_ceil_packed_counts() {
        let cfg = SimConfig::default();
        for l in [deconv(5, 3, (3, 5), 2), deconv(4, 4, (20, 9), 2), deconv(3, 5, (1, 1), 3)] {
            for method in [Method::Nzp, Method::Sd] {
                let sched = Schedule::new(&l, method).unwrap();
                let dot = simulate(&l, Arch::DotArray, method, SparsityMode::Dense, &cfg).unwrap();
                let grid = simulate(&l, Arch::Grid2D, method, SparsityMode::Dense, &cfg).unwrap();
                let mut expect_dot = 0;
                let mut expect_grid = 0;
                for p in &sched.passes {
                    let per_out = (p.taps[0].dense as usize * p.in_c) as u64;
                    let outs = (p.out_h * p.out_w) as u64;
                    expect_dot += outs * per_out.div_ceil(16) * p.out_c.div_ceil(16) as u64;
                    expect_grid += outs.div_ceil(32) * per_out * p.out_c.div_ceil(7) as u64;
                }
                assert_eq!(dot.cycles, expect_dot);
                assert_eq!(grid.cycles, expect_grid);
                assert_eq!(dot.effective_macs, count_macs(&l, method, SparsityMode::Dense).unwrap());
            }
        }
    }

    #[test]
    fn stride_one_layer_has_unit_speedup() {
        let net = [deconv(6, 3, (8, 8), 1)];
        let sim = network_speedup(&net, &SimConfig::default());
        for arch in [Arch::DotArray, Arch::Grid2D] {
            let s = sim.summary(arch, Method::Sd, SparsityMode::Dense).unwrap();
            assert_eq!(s.total_speedup, 1.0);
            assert_eq!(s.geomean_speedup, 1.0);
        }
    }

    #[test]
    fn network_totals_are_additive() {
        let net = [deconv(4, 4, (32, 16), 2), deconv(8, 3, (16, 8), 2), deconv(5, 5, (8, 3), 3)];
        let sim = network_speedup(&net, &SimConfig::default());
        for s in &sim.summaries {
            let sum: u64 = sim
                .rows
                .iter()
                .filter(|r| r.report.arch == s.arch && r.report.method == s.method && r.report.mode == s.mode)
                .map(|r| r.report.cycles)
                .sum();
            assert_eq!(sum, s.total_cycles);
        }
        assert_eq!(sim, network_speedup(&net, &SimConfig::default()));
    }

    #[test]
    fn empty_network() {
        let sim = network_speedup(&[], &SimConfig::default());
        assert!(sim.rows.is_empty() && sim.summaries.is_empty());
        assert_eq!(sim.to_csv(), "layer_index,arch,method,mode,cycles,utilization,speedup_vs_nzp_dense\n");
    }
}
