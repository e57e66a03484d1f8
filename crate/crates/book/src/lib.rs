//! Compiles the guide's code blocks as doc-tests, one module per chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/function-spaces.md")]
pub mod function_spaces {}

#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}

#[doc = include_str!("../../../book/src/spatial-distribution.md")]
pub mod spatial_distribution {}

#[doc = include_str!("../../../book/src/quantiles.md")]
pub mod quantiles {}

#[doc = include_str!("../../../book/src/depth.md")]
pub mod depth {}

#[doc = include_str!("../../../book/src/efficiency.md")]
pub mod efficiency {}

#[doc = include_str!("../../../book/src/convergence.md")]
pub mod convergence {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
