//! Chapters of the guide in `book/src`, included here so that their code
//! blocks run as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/thermodynamics.md")]
pub mod chapter1 {}

#[doc = include_str!("../../../book/src/grid.md")]
pub mod chapter2 {}

#[doc = include_str!("../../../book/src/steady_states.md")]
pub mod chapter3 {}

#[doc = include_str!("../../../book/src/noise.md")]
pub mod chapter4 {}

#[doc = include_str!("../../../book/src/process.md")]
pub mod chapter5 {}

#[doc = include_str!("../../../book/src/long_range.md")]
pub mod chapter6 {}

#[doc = include_str!("../../../book/src/pipeline.md")]
pub mod chapter7 {}
