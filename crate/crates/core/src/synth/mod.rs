//! Synthetic labeled data: lesion patches, a susceptibility forward model and
//! patch augmentation.
//!
//! Every generator is a pure function of its inputs and a `u64` seed. Random
//! streams come from ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64`), a
//! counter-based generator, so sample sequences are portable.

mod augment;
mod lesion;
mod qsm;

pub use augment::{augment, flip_axis, gaussian_kernel, kernel_radius, AugmentConfig, FlipAxis};
pub use lesion::{generate_lesion, LesionKind, LesionSpec, AXIAL_ASPECT, MARGIN};
pub use qsm::{dipole_kernel, qsm_forward, QsmPhantom};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The crate-wide random stream for `seed`.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
