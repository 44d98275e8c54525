//! Compiles the guide's code snippets as doc-tests. Nothing here is meant to
//! be used directly.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/tensors.md")]
pub mod tensors {}

#[doc = include_str!("../../../book/src/deconvolution.md")]
pub mod deconvolution {}

#[doc = include_str!("../../../book/src/split.md")]
pub mod split {}

#[doc = include_str!("../../../book/src/counting.md")]
pub mod counting {}

#[doc = include_str!("../../../book/src/cost-models.md")]
pub mod cost_models {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}

#[doc = include_str!("../../../README.md")]
pub mod readme {}
