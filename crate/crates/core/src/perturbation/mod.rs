//! First-order perturbation model of the Kerr nonlinearity.
//!
//! The received symbol of interest is `a_{0,0} + Delta`, with `Delta` a sum of
//! coefficients `C(k1,j1,k2,j2,k3,j3,z)` weighted by symbol triples. Only
//! triples with `|k1 - k2 + k3| <= 1` contribute. [`chi`] evaluates the XPM
//! coefficients `chi_{k,j}(z) = C(k,j,k,j,0,0,z)` from a one-dimensional
//! frequency integral, [`bruteforce`] evaluates any `C` directly, and
//! [`first_order`] computes the whole first-order field without truncation.

pub mod bruteforce;
pub mod chi;
pub mod first_order;
pub mod predict;

pub use bruteforce::{c_bruteforce, SpmCoefficients};
pub use chi::{chi, spatial_integral, PerturbTable};
pub use first_order::{first_order_field, FirstOrderOptions};
pub use predict::{
    count_nonzero_c, delta_spm, delta_xpm_blockwise, delta_xpm_dominant, predict_rx_symbol,
    BlockwiseXpm, NliPrediction,
};
pub use crate::special::{si, sincsq_antiderivative};
