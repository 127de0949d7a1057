//! Directed accumulation (DeDA-style scatter), grid sampling, rim
//! parameterization and accumulator-space transforms on dense `f64` maps.

pub mod bench;
pub mod datr;
pub mod deda;
pub mod error;
pub mod io;
pub mod kernels;
pub mod reduce;
pub mod sampling;
pub mod synth;
pub mod tensor;
pub mod transforms;

pub use error::{Error, Result};
pub use tensor::{mesh_grid, FeatureMap, GridSet, KernelSpec, SamplingGrid};
