//! Capacity and optimal transmit covariance of a single-user MISO channel
//! under sum, per-antenna and independent multiple-access power constraints.
//!
//! The closed forms live in [`covariance`] and [`capacity`]; [`oracle`]
//! holds independent numerical maximizers used to cross-check them, and
//! [`ergodic`] estimates Rayleigh-fading capacities by Monte Carlo.
//! [`experiments`] drives the CLI sweeps and CSV output.

pub mod capacity;
pub mod channel;
pub mod covariance;
pub mod ergodic;
pub mod error;
pub mod experiments;
pub mod hermitian;
pub mod oracle;
pub mod special;

pub use error::{Error, Result};
pub use num_complex::Complex64;
