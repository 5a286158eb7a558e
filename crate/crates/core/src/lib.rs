//! Numerical laboratory for nonlinear interference in WDM fiber links.
//!
//! * [`dispersion`], [`signal`], [`units`]: sampled fields and the linear
//!   dispersion operator in normalized units.
//! * [`perturbation`]: first-order perturbation model, XPM coefficients in
//!   closed form and a brute-force reference.
//! * [`codebook`]: QAM alphabets, constant-composition codes and IUD sources.
//! * [`ssfm`]: split-step Fourier propagation and digital back-propagation.
//! * [`txrx`]: WDM transmitter and receiver chain.
//! * [`experiments`]: configuration, sweeps and table emitters behind the CLI.

// Negated comparisons are used on purpose so NaN parameters are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod codebook;
pub mod dispersion;
pub mod error;
pub mod experiments;
pub mod perturbation;
pub mod quad;
pub mod rng;
pub mod signal;
pub mod special;
pub mod spectral;
pub mod ssfm;
pub mod txrx;
pub mod units;

pub use codebook::{Alphabet, Scheme};
pub use error::{Error, Result};
pub use perturbation::PerturbTable;
pub use signal::{Boundary, SampledSignal};
pub use ssfm::{Amplifier, LinkSpec, StepPolicy};
pub use txrx::{ChannelPlan, PulseShape, SymbolFrame};
pub use units::{normalize, NormalizationMap, PhysicalParams};
