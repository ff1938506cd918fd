//! Skin structures on discretized singular hypersurfaces.
//!
//! A hypersurface H with singular set Σ is modelled as a metric graph carrying the
//! norm |A| of the second fundamental form at each vertex. On top of it the crate
//! computes metric skin transforms ⟨A⟩_α, skin adapted and quantitatively
//! transversal ball covers, Whitney smoothings, Hardy tightness constants, skin
//! uniform curves and domains, and the skin and quasi-hyperbolic metrics.

pub mod cover;
pub mod error;
pub mod graph;
pub mod skinfield;
pub mod spectral;
pub mod surface;
pub mod uniformity;

pub use error::{Error, Result};

/// First 16 hex digits of the SHA-256 of `bytes`; used as artifact ids.
pub fn content_id(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes).iter().take(8).map(|b| format!("{b:02x}")).collect()
}
