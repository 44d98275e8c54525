//! Exact lowering of strided transposed convolutions ("deconvolutions") into
//! `stride * stride` ordinary stride-1 convolutions, plus the tooling to check
//! and cost it.
//!
//! - [`reference`]: direct convolution, the scatter oracle, and the
//!   zero-insertion (NZP) lowering.
//! - [`split`]: the split-deconvolution transform and its output merge.
//! - [`analyzer`]: structural MAC and weight counts under sparsity modes.
//! - [`sim`]: cycle models of a dot-product array and a 2D PE grid.
//!
//! ```
//! use sdconv::{deconv2d_oracle, sd_deconv2d, FilterBank, Tensor3};
//!
//! let input = Tensor3::from_fn(3, 3, 2, |y, x, c| (y * 3 + x + c) as f64)?;
//! let filters = FilterBank::from_fn(4, 4, 2, 1, |h, w, i, _| (h + 2 * w + i) as f64 - 3.0)?;
//! let sd = sd_deconv2d(&input, &filters, 2)?;
//! assert_eq!(sd, deconv2d_oracle(&input, &filters, 2)?);
//! # Ok::<(), sdconv::Error>(())
//! ```

pub mod analyzer;
pub mod error;
pub mod io;
pub mod layer;
pub mod reference;
pub mod sim;
pub mod split;
pub mod tensor;

pub use analyzer::{count_macs, count_weight_params, mac_census, Census, Method, Schedule, SparsityMode};
pub use error::{Error, Result};
pub use layer::{LayerKind, LayerSpec};
pub use reference::{conv2d, deconv2d_oracle, nzp_deconv2d, ConvParams};
pub use sim::{network_speedup, simulate, Arch, SimConfig};
pub use split::{sd_deconv2d, SplitPlan};
pub use tensor::{FilterBank, Tensor3};
