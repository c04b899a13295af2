//! Security analysis of unidimensional (single-quadrature) coherent-state
//! CV-QKD against Gaussian collective attacks, with the symmetric GG02
//! protocol as baseline.
//!
//! All variances are in shot-noise units and all rates in bits per use.
//!
//! ```
//! use cvqkd_core::{keyrate, ProtocolConfig, QuadratureChannel, SearchSettings, Variant};
//!
//! let config = ProtocolConfig::new(10.0, Variant::UdPessimistic).unwrap();
//! let x = QuadratureChannel::new(0.1, 0.05).unwrap();
//! let worst = keyrate::worst_case_key_rate(&config, &x, 1.0, &SearchSettings::default()).unwrap();
//! assert!(worst.key_rate > 0.0);
//! ```

// Validation uses `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotic;
pub mod error;
pub mod keyrate;
pub mod protocols;
pub mod region;
pub mod symplectic;

pub use error::{Error, Result};
pub use keyrate::{KeyRateResult, SearchSettings};
pub use protocols::{
    ChannelParams, PQuadObservation, PhysicalityParabola, ProtocolConfig, QuadratureChannel,
    Variant,
};
pub use region::{LossGrid, RegionMap, RegionRecord, SecureInterval, SweepCurve};
pub use symplectic::{ConditionalCovariance, SymplecticSpectrum, TwoModeCovariance};
