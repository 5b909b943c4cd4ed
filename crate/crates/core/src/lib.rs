//! Covariance-matrix toolkit and secret-key-rate engine for multipartite
//! continuous-variable quantum secret sharing through a measurement-device
//! independent relay.
//!
//! Layers, bottom up:
//! - [`gaussian`]: covariance matrices, symplectic spectra, entropies, conditioning
//! - [`symplectic`]: beamsplitters, squeezers and other Gaussian unitaries
//! - [`protocol`]: channel dressing, relay interferometer, closed-form reduced states
//! - [`oracle`]: brute-force simulation of the whole relay pipeline
//! - [`rates`]: Holevo bound, mutual information, key rates, modulation search
//! - [`schemes`]: distances, group layouts, max-distance search, sweeps
//! - [`figures`]: built-in sweep definitions for the standard plots
//!
//! All matrices are in shot-noise units (vacuum = identity), quadrature order
//! `(q1, p1, q2, p2, ...)`.

pub mod error;
pub mod figures;
pub mod gaussian;
pub mod optimize;
pub mod oracle;
pub mod output;
pub mod protocol;
pub mod rates;
pub mod schemes;
pub mod symplectic;

pub use error::{Error, Result};
