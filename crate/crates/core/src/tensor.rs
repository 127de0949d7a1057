//! Dense containers shared by every operator.
//!
//! All tensors are row-major with the channel (or coordinate) axis outermost.
//! Spatial axes are named `x` (rows) and `y` (columns), with an optional
//! leading axial axis for volumes: a volume is `(C, D, H, W)`.
//! Coordinates are absolute pixel units indexed from 0.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, mismatch, Result};

fn check_extents(dims: &[usize], allowed: std::ops::RangeInclusive<usize>) -> Result<usize> {
    if !allowed.contains(&dims.len()) {
        return Err(invalid(format!(
            "expected {}..={} spatial extents, got {:?}",
            allowed.start(),
            allowed.end(),
            dims
        )));
    }
    if dims.contains(&0) {
        return Err(invalid(format!(
            "spatial extents must be positive, got {dims:?}"
        )));
    }
    Ok(dims.iter().product())
}

/// A dense real feature map of shape `(C, dims...)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap {
    channels: usize,
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl FeatureMap {
    /// Builds a map from row-major, channel-outermost data. Every value must be finite.
    pub fn new(channels: usize, dims: &[usize], data: Vec<f64>) -> Result<Self> {
        if channels == 0 {
            return Err(invalid("channel count must be positive"));
        }
        let plane = check_extents(dims, 1..=3)?;
        if data.len() != channels * plane {
            return Err(mismatch(format!(
                "data length {} does not match {} x {:?}",
                data.len(),
                channels,
                dims
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite value at flat index {pos}")));
        }
        Ok(Self {
            channels,
            dims: dims.to_vec(),
            data,
        })
    }

    pub fn zeros(channels: usize, dims: &[usize]) -> Result<Self> {
        let plane = check_extents(dims, 1..=3)?;
        Self::new(channels, dims, vec![0.0; channels * plane])
    }

    pub fn filled(channels: usize, dims: &[usize], value: f64) -> Result<Self> {
        let plane = check_extents(dims, 1..=3)?;
        Self::new(channels, dims, vec![value; channels * plane])
    }

    /// Builds a single-channel 2D map from a closure over `(row, col)`.
    pub fn from_fn_2d(h: usize, w: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(h * w);
        for i in 0..h {
            for j in 0..w {
                data.push(f(i, j));
            }
        }
        Self::new(1, &[h, w], data)
    }

    /// Internal constructor for operator outputs, which are finite by construction.
    pub(crate) fn from_parts(channels: usize, dims: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), channels * dims.iter().product::<usize>());
        Self {
            channels,
            dims,
            data,
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Full shape including the channel axis.
    pub fn shape(&self) -> Vec<usize> {
        std::iter::once(self.channels)
            .chain(self.dims.iter().copied())
            .collect()
    }

    /// Number of spatial cells per channel.
    pub fn plane_len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.plane_len();
        &self.data[c * n..(c + 1) * n]
    }

    /// Copies channel `c` into a new single-channel map.
    pub fn channel_map(&self, c: usize) -> FeatureMap {
        Self::from_parts(1, self.dims.clone(), self.channel(c).to_vec())
    }

    /// Value at `(c, i, j)` of a 2D map.
    pub fn at2(&self, c: usize, i: usize, j: usize) -> f64 {
        debug_assert_eq!(self.dims.len(), 2);
        self.data[(c * self.dims[0] + i) * self.dims[1] + j]
    }

    /// Requires a `(C, H, W)` map and returns `(H, W)`.
    pub fn require_2d(&self) -> Result<(usize, usize)> {
        match self.dims.as_slice() {
            &[h, w] => Ok((h, w)),
            other => Err(mismatch(format!(
                "expected 2D spatial map, got extents {other:?}"
            ))),
        }
    }

    /// Requires a `(C, D, H, W)` map and returns `(D, H, W)`.
    pub fn require_3d(&self) -> Result<(usize, usize, usize)> {
        match self.dims.as_slice() {
            &[d, h, w] => Ok((d, h, w)),
            other => Err(mismatch(format!(
                "expected 3D spatial map, got extents {other:?}"
            ))),
        }
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Row-major flat index of the largest value in channel `c` (first wins on ties).
    pub fn argmax_flat(&self, c: usize) -> usize {
        let mut best = 0;
        let plane = self.channel(c);
        for (idx, &v) in plane.iter().enumerate() {
            if v > plane[best] {
                best = idx;
            }
        }
        best
    }

    /// Unravels a flat spatial index into per-axis indices.
    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (axis, &extent) in self.dims.iter().enumerate().rev() {
            out[axis] = flat % extent;
            flat /= extent;
        }
        out
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<FeatureMap> {
        FeatureMap::new(
            self.channels,
            &self.dims,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Inner product over all cells, summed left to right.
    pub fn dot(&self, other: &FeatureMap) -> Result<f64> {
        if self.shape() != other.shape() {
            return Err(mismatch(format!(
                "inner product of {:?} and {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0, |acc, (a, b)| acc + a * b))
    }

    /// Stacks equally shaped maps along a new leading spatial axis.
    pub fn stack_slices(slices: &[FeatureMap]) -> Result<FeatureMap> {
        let first = slices
            .first()
            .ok_or_else(|| invalid("cannot stack zero slices"))?;
        let (h, w) = first.require_2d()?;
        let c = first.channels;
        let d = slices.len();
        let plane = h * w;
        let mut data = vec![0.0; c * d * plane];
        for (z, s) in slices.iter().enumerate() {
            if s.shape() != first.shape() {
                return Err(mismatch("slices must share a shape"));
            }
            for ch in 0..c {
                let dst = (ch * d + z) * plane;
                data[dst..dst + plane].copy_from_slice(s.channel(ch));
            }
        }
        Ok(Self::from_parts(c, vec![d, h, w], data))
    }

    /// Extracts axial slice `z` of a `(C, D, H, W)` volume as a `(C, H, W)` map.
    pub fn axial_slice(&self, z: usize) -> Result<FeatureMap> {
        let (d, h, w) = self.require_3d()?;
        if z >= d {
            return Err(invalid(format!("slice {z} out of range for depth {d}")));
        }
        let plane = h * w;
        let mut data = Vec::with_capacity(self.channels * plane);
        for ch in 0..self.channels {
            let src = (ch * d + z) * plane;
            data.extend_from_slice(&self.data[src..src + plane]);
        }
        Ok(Self::from_parts(self.channels, vec![h, w], data))
    }
}

/// Per-location target coordinates, shape `(Q, spatial...)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplingGrid {
    coord_dims: usize,
    spatial: Vec<usize>,
    coords: Vec<f64>,
}

impl SamplingGrid {
    pub fn new(coord_dims: usize, spatial: &[usize], coords: Vec<f64>) -> Result<Self> {
        if coord_dims == 0 {
            return Err(invalid("coordinate dimensionality must be positive"));
        }
        let plane = check_extents(spatial, 1..=3)?;
        if coords.len() != coord_dims * plane {
            return Err(mismatch(format!(
                "coords length {} does not match {} x {:?}",
                coords.len(),
                coord_dims,
                spatial
            )));
        }
        Ok(Self {
            coord_dims,
            spatial: spatial.to_vec(),
            coords,
        })
    }

    pub fn coord_dims(&self) -> usize {
        self.coord_dims
    }

    pub fn spatial(&self) -> &[usize] {
        &self.spatial
    }

    pub fn plane_len(&self) -> usize {
        self.spatial.iter().product()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Coordinate plane for target axis `q`.
    pub fn axis(&self, q: usize) -> &[f64] {
        let n = self.plane_len();
        &self.coords[q * n..(q + 1) * n]
    }

    /// Target coordinate along axis `q` for flat source location `idx`.
    #[inline]
    pub fn coord(&self, q: usize, idx: usize) -> f64 {
        self.coords[q * self.plane_len() + idx]
    }

    pub fn ensure_finite(&self) -> Result<()> {
        match self.coords.iter().position(|v| !v.is_finite()) {
            Some(pos) => Err(invalid(format!(
                "non-finite grid coordinate at flat index {pos}"
            ))),
            None => Ok(()),
        }
    }
}

/// An ordered, non-empty set of grids sharing `Q` and spatial extents.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSet {
    grids: Vec<SamplingGrid>,
}

impl GridSet {
    pub fn new(grids: Vec<SamplingGrid>) -> Result<Self> {
        let first = grids
            .first()
            .ok_or_else(|| invalid("a grid set needs at least one grid"))?;
        for g in &grids[1..] {
            if g.coord_dims != first.coord_dims || g.spatial != first.spatial {
                return Err(mismatch(format!(
                    "grid of Q={} over {:?} does not match Q={} over {:?}",
                    g.coord_dims, g.spatial, first.coord_dims, first.spatial
                )));
            }
        }
        Ok(Self { grids })
    }

    pub fn single(grid: SamplingGrid) -> Self {
        Self { grids: vec![grid] }
    }

    pub fn len(&self) -> usize {
        self.grids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grids.is_empty()
    }

    pub fn grids(&self) -> &[SamplingGrid] {
        &self.grids
    }

    pub fn coord_dims(&self) -> usize {
        self.grids[0].coord_dims
    }

    pub fn spatial(&self) -> &[usize] {
        &self.grids[0].spatial
    }

    /// Concatenates two compatible sets, preserving order.
    pub fn union(&self, other: &GridSet) -> Result<GridSet> {
        let mut grids = self.grids.clone();
        grids.extend(other.grids.iter().cloned());
        GridSet::new(grids)
    }
}

/// Sampling kernel family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelSpec {
    /// Nearest integer, `floor(g + 0.5)`.
    Integer,
    /// Tent weights `max(0, 1 - |g - n|)`.
    Bilinear,
}

impl std::str::FromStr for KernelSpec {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "integer" => Ok(KernelSpec::Integer),
            "bilinear" => Ok(KernelSpec::Bilinear),
            other => Err(invalid(format!("unknown kernel {other:?}"))),
        }
    }
}

/// Identity grid over `dims`: each location holds its own index.
pub fn mesh_grid(dims: &[usize]) -> Result<SamplingGrid> {
    let plane = check_extents(dims, 2..=3)?;
    let q = dims.len();
    let mut coords = vec![0.0; q * plane];
    for flat in 0..plane {
        let mut rem = flat;
        for axis in (0..q).rev() {
            coords[axis * plane + flat] = (rem % dims[axis]) as f64;
            rem /= dims[axis];
        }
    }
    SamplingGrid::new(q, dims, coords)
}
