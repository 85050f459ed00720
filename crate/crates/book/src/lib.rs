//! The guide in `book/src`, one module per chapter, so that `cargo test
//! --doc -p finsler-book` runs every listing. A failing doc test names the
//! module, which names the chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/norms.md")]
pub mod norms {}
#[doc = include_str!("../../../book/src/elastic.md")]
pub mod elastic {}
#[doc = include_str!("../../../book/src/geodesics.md")]
pub mod geodesics {}
#[doc = include_str!("../../../book/src/distances.md")]
pub mod distances {}
#[doc = include_str!("../../../book/src/reconstruction.md")]
pub mod reconstruction {}
#[doc = include_str!("../../../book/src/nonuniqueness.md")]
pub mod nonuniqueness {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
