//! Physical-layer MIMO simulation.
//!
//! The crate models the end-to-end narrowband signal chain
//!
//! ```text
//! s_hat = W^H (sqrt(Ptx) * G * H F s + n)
//! ```
//!
//! with arbitrary antenna arrays, stochastic and geometric channel models,
//! large-scale path loss, fully-digital and hybrid digital/analog
//! transceivers, and a network layer that superimposes interference and
//! reports Gaussian-signaling mutual information and symbol estimation error.
//!
//! Modules are layered bottom-up:
//!
//! - [`array`]: element geometry, array response and gain.
//! - [`channel`]: frequency-flat channel realizations.
//! - [`path_loss`]: large-scale amplitude gain models.
//! - [`analog`]: analog beamforming constraints shared by both ends.
//! - [`transmitter`] / [`receiver`]: precoding, combining and noise.
//! - [`link`]: devices and head/tail links with link-level metrics.
//! - [`network`]: source/destination pairs and interference aggregation.
//! - [`scenario`]: JSON scenario files and the Monte-Carlo driver.

// `!(x > 0.0)` is used throughout to reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analog;
pub mod array;
pub mod channel;
pub mod csi;
pub mod device;
pub mod error;
pub mod linalg;
pub mod link;
pub mod network;
pub mod path_loss;
pub mod receiver;
pub mod rng;
pub mod scenario;
pub mod transmitter;
pub mod units;

pub use error::{Error, Result};

/// Complex double-precision scalar used throughout the crate.
pub type C64 = num_complex::Complex<f64>;
/// Dynamically sized complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;
/// Dynamically sized complex column vector.
pub type CVec = nalgebra::DVector<C64>;
