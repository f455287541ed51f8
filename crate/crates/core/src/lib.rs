//! LP decoding of binary linear codes by penalty dual decomposition, with an
//! iterative parity-polytope projector that can be warm-started by a tiny
//! shift-only neural network.
//!
//! ```
//! use polydec::{channel, code::CodeModel, pdd::{self, PddConfig}};
//!
//! let code = CodeModel::from_dense(&[
//!     vec![1, 1, 0, 1, 0, 0],
//!     vec![0, 1, 1, 0, 1, 0],
//!     vec![1, 0, 1, 0, 0, 1],
//! ])?;
//! let mut rng = channel::frame_rng(7, 0, 0);
//! let v = channel::all_zero_frame(code.n_vars(), 0.3, &mut rng);
//! let out = pdd::decode(&code, &v, PddConfig::default(), None)?;
//! assert_eq!(out.converged, code.syndrome_ok(&out.bits)?);
//! # Ok::<(), polydec::Error>(())
//! ```
//!
//! The guide under `book/` walks through the model, the projector and the
//! benchmark harness; its code blocks run as doctests of this crate.

pub mod baseline;
pub mod bench;
pub mod channel;
pub mod code;
pub mod cppnet;
pub mod decoder;
pub mod error;
pub mod pdd;
pub mod projection;

pub use error::{Error, Result};

// Compile and run the guide's code blocks with `cargo test --doc`.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/codes.md")]
    mod codes {}
    #[doc = include_str!("../../../book/src/projection.md")]
    mod projection {}
    #[doc = include_str!("../../../book/src/cppnet.md")]
    mod cppnet {}
    #[doc = include_str!("../../../book/src/pdd.md")]
    mod pdd {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/harness.md")]
    mod harness {}
}
