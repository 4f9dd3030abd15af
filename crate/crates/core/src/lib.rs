//! Single-excitation dynamics of an inhomogeneous spin ensemble coupled to
//! one cavity mode.
//!
//! Two routes to the same physics live side by side: the frequency-domain
//! response functions ([`response`], [`states`], [`shear`]) for the
//! continuum limit, and exact propagation of a discretized ensemble
//! ([`dynamics`]).

pub mod dynamics;
pub mod error;
pub mod export;
pub mod hilbert;
pub mod quad;
pub mod response;
pub mod shear;
pub mod spectral;
pub mod states;

pub use error::{Checked, Error, Result, Warning};
pub use num_complex::Complex64 as C64;
