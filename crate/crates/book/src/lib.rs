//! Compiles the guide's code listings as doctests.
//!
//! mdbook cannot link external crates when testing, so each chapter is pulled
//! in as a module doc and `cargo test` runs the listings against `ivisflow`.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/log-format.md")]
pub mod log_format {}
#[doc = include_str!("../../../book/src/extraction.md")]
pub mod extraction {}
#[doc = include_str!("../../../book/src/flows.md")]
pub mod flows {}
#[doc = include_str!("../../../book/src/glance.md")]
pub mod glance {}
#[doc = include_str!("../../../book/src/boxplots.md")]
pub mod boxplots {}
#[doc = include_str!("../../../book/src/service.md")]
pub mod service {}
#[doc = include_str!("../../../book/src/generator.md")]
pub mod generator {}
