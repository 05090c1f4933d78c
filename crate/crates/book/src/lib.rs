//! The guide's chapters, compiled so that `cargo test` runs their snippets.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/geometry.md")]
pub mod geometry {}
#[doc = include_str!("../../../book/src/meshes.md")]
pub mod meshes {}
#[doc = include_str!("../../../book/src/refinement.md")]
pub mod refinement {}
#[doc = include_str!("../../../book/src/interpolation.md")]
pub mod interpolation {}
#[doc = include_str!("../../../book/src/verification.md")]
pub mod verification {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
#[doc = include_str!("../../../README.md")]
pub mod readme {}
