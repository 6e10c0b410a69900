//! Compiles and runs the code in the guide under `book/src` as doc-tests.
//! Each chapter gets its own module so a failure points at its chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/market.md")]
pub mod market {}
#[doc = include_str!("../../../book/src/dynamics.md")]
pub mod dynamics {}
#[doc = include_str!("../../../book/src/platform.md")]
pub mod platform {}
#[doc = include_str!("../../../book/src/welfare.md")]
pub mod welfare {}
#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
