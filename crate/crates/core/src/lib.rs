//! Discrete sampling per group by local competition keys.
//!
//! Each row draws a key from its own strength and a uniform derived from its
//! identity; the winner of a group is the row with the extremal key. Because the
//! per-row work is independent and the winner selection is associative, the
//! same procedure runs sequentially, sharded across threads, or incrementally
//! as rows change.
//!
//! - [`families`]: key formulas for the supported max/min-compatible families.
//! - [`sampler`]: keying and grouped reduction.
//! - [`dynamic`]: winners maintained under upserts and deletes.
//! - [`baselines`]: alias and inverse-CDF samplers used as references.
//! - [`stats`]: chi-square and Kolmogorov-Smirnov tests and experiment runners.
//! - [`cli`]: the `keyrace` command-line front end.

pub mod baselines;
pub mod cli;
pub mod dynamic;
pub mod error;
pub mod families;
pub mod io;
pub mod sampler;
pub mod stats;
pub mod validate;

pub use error::{Error, Result};
pub use families::{Family, Key, ModelSpec, Orientation};
pub use sampler::{GroupWinner, KeyedRow, Row, SeedContext, WinnerMap};
