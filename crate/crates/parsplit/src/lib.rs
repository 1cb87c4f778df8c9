//! Primal-dual splitting for coupled monotone inclusions built from sums,
//! linear compositions, parallel sums, and parallel compositions, with an
//! image-restoration front end (mixed first/second-order total variation
//! regularization by infimal convolution, wavelet sparsity, box constraint).
//!
//! Layering, bottom up:
//! * [`vecmath`] — small dense-vector helpers.
//! * [`linop`] — matrix-free linear operators with certified adjoints and
//!   power-iteration norm estimation.
//! * [`prox`] — proximity operators / resolvent families and smooth terms.
//! * [`calculus`] — dense oracles for parallel sums and parallel
//!   compositions of strongly positive operators, plus an identity suite.
//! * [`coupled`] — the generic m-primal / K-dual iteration engine.
//! * [`parsum`] — the structured inclusion with parallel-sum terms and its
//!   reduction onto the engine.
//! * [`imaging`] — difference/blur/wavelet operators, degradation model,
//!   quality metrics, and portable image I/O.
//! * [`schema`] — a JSON problem description mapped onto [`parsum`].
//! * [`selftest`] — the battery behind the `selftest` subcommand.
//!
//! See the `examples/` directory for one runnable walkthrough per
//! capability; the thin `parsplit` binary exposes `degrade`, `restore`,
//! `metrics`, and `selftest`.

pub mod calculus;
pub mod coupled;
pub mod error;
pub mod imaging;
pub mod linop;
pub mod parsum;
pub mod prox;
pub mod restore;
pub mod schema;
pub mod selftest;
pub mod vecmath;

pub use error::{Error, Result};
