//! Patch augmentation: recentering, flips, in-plane affine and Gaussian blur.
//!
//! Patches are `(C, D, H, W)` volumes with `D` the axial (slice) axis. The
//! random draws for one call happen in a fixed order: flip, flip axis, scale,
//! rotation, blur sigma along `H`, along `W`, along `D`.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::tensor::FeatureMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlipAxis {
    /// Reverses slices (`D`).
    Axial,
    /// Reverses rows (`H`).
    Coronal,
    /// Reverses columns (`W`).
    Sagittal,
}

impl FlipAxis {
    const ALL: [FlipAxis; 3] = [FlipAxis::Axial, FlipAxis::Coronal, FlipAxis::Sagittal];

    fn dim(self) -> usize {
        match self {
            FlipAxis::Axial => 0,
            FlipAxis::Coronal => 1,
            FlipAxis::Sagittal => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    /// Flip along one random axis with probability 1/2.
    pub flip: bool,
    pub scale_range: (f64, f64),
    pub rotation_deg_range: (f64, f64),
    /// `(mean, std)` of the in-plane blur sigma, truncated at zero.
    pub blur_sigma_inplane: (f64, f64),
    /// `(mean, std)` of the axial blur sigma, truncated at zero.
    pub blur_sigma_axial: (f64, f64),
    /// Voxel spacing along `(H, W, D)` in mm.
    pub voxel_size: (f64, f64, f64),
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            flip: true,
            scale_range: (0.95, 1.05),
            rotation_deg_range: (-5.0, 5.0),
            blur_sigma_inplane: (0.1, 0.95),
            blur_sigma_axial: (0.03, 0.3),
            voxel_size: (0.75, 0.75, 3.0),
            seed: 0,
        }
    }
}

impl AugmentConfig {
    /// No flip, unit scale, zero rotation and zero blur.
    pub fn identity(seed: u64) -> Self {
        Self {
            flip: false,
            scale_range: (1.0, 1.0),
            rotation_deg_range: (0.0, 0.0),
            blur_sigma_inplane: (0.0, 0.0),
            blur_sigma_axial: (0.0, 0.0),
            seed,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let ordered = |(a, b): (f64, f64)| a.is_finite() && b.is_finite() && a <= b;
        if !ordered(self.scale_range) || self.scale_range.0 <= 0.0 {
            return Err(invalid(format!("bad scale range {:?}", self.scale_range)));
        }
        if !ordered(self.rotation_deg_range) {
            return Err(invalid(format!(
                "bad rotation range {:?}",
                self.rotation_deg_range
            )));
        }
        for (m, s) in [self.blur_sigma_inplane, self.blur_sigma_axial] {
            if !(m.is_finite() && s.is_finite() && s >= 0.0) {
                return Err(invalid(format!("bad blur distribution ({m}, {s})")));
            }
        }
        let (a, b, c) = self.voxel_size;
        if !(a > 0.0 && b > 0.0 && c > 0.0) {
            return Err(invalid("voxel sizes must be positive"));
        }
        Ok(())
    }
}

/// Gaussian kernel radius, `floor(4 sigma + 0.5)`.
pub fn kernel_radius(sigma: f64) -> usize {
    (4.0 * sigma + 0.5).floor().max(0.0) as usize
}

/// Normalized 1D Gaussian taps of length `2 * kernel_radius(sigma) + 1`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let r = kernel_radius(sigma) as isize;
    let taps: Vec<f64> = (-r..=r)
        .map(|x| (-(x * x) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / total).collect()
}

fn volume_dims(patch: &FeatureMap) -> Result<[usize; 3]> {
    let (d, h, w) = patch.require_3d().map_err(|_| {
        invalid(format!(
            "augmentation needs a 3D patch, got {:?}",
            patch.dims()
        ))
    })?;
    Ok([d, h, w])
}

fn strides(dims: [usize; 3]) -> [usize; 3] {
    [dims[1] * dims[2], dims[2], 1]
}

/// Reverses one spatial axis of a `(C, D, H, W)` patch.
pub fn flip_axis(patch: &FeatureMap, axis: FlipAxis) -> Result<FeatureMap> {
    let dims = volume_dims(patch)?;
    let st = strides(dims);
    let a = axis.dim();
    let plane = patch.plane_len();
    let mut data = vec![0.0; patch.data().len()];
    for ch in 0..patch.channels() {
        let src = patch.channel(ch);
        let dst = &mut data[ch * plane..(ch + 1) * plane];
        for (idx, &v) in src.iter().enumerate() {
            let coord = (idx / st[a]) % dims[a];
            let mirrored = idx - coord * st[a] + (dims[a] - 1 - coord) * st[a];
            dst[mirrored] = v;
        }
    }
    Ok(FeatureMap::from_parts(
        patch.channels(),
        patch.dims().to_vec(),
        data,
    ))
}

/// Integer shift moving the intensity-weighted center of mass (positive part)
/// to the geometric center.
fn recenter(patch: &FeatureMap, dims: [usize; 3]) -> FeatureMap {
    let st = strides(dims);
    let mut mass = 0.0;
    let mut moment = [0.0; 3];
    for ch in 0..patch.channels() {
        for (idx, &v) in patch.channel(ch).iter().enumerate() {
            let m = v.max(0.0);
            mass += m;
            for a in 0..3 {
                moment[a] += m * ((idx / st[a]) % dims[a]) as f64;
            }
        }
    }
    if mass <= 0.0 {
        return patch.clone();
    }
    let shift: [isize; 3] = std::array::from_fn(|a| {
        let center = (dims[a] as f64 - 1.0) / 2.0;
        (center - moment[a] / mass).round() as isize
    });
    if shift == [0, 0, 0] {
        return patch.clone();
    }
    let plane = patch.plane_len();
    let mut data = vec![0.0; patch.data().len()];
    for ch in 0..patch.channels() {
        let src = patch.channel(ch);
        for (idx, &v) in src.iter().enumerate() {
            let mut dst = 0usize;
            let mut inside = true;
            for a in 0..3 {
                let c = ((idx / st[a]) % dims[a]) as isize + shift[a];
                if c < 0 || c >= dims[a] as isize {
                    inside = false;
                    break;
                }
                dst += c as usize * st[a];
            }
            if inside {
                data[ch * plane + dst] = v;
            }
        }
    }
    FeatureMap::from_parts(patch.channels(), patch.dims().to_vec(), data)
}

fn trilinear(src: &[f64], dims: [usize; 3], p: [f64; 3]) -> f64 {
    let st = strides(dims);
    let base: [f64; 3] = std::array::from_fn(|a| p[a].floor());
    let mut acc = 0.0;
    for corner in 0..8 {
        let mut weight = 1.0;
        let mut idx = 0usize;
        let mut inside = true;
        for a in 0..3 {
            let up = (corner >> a) & 1 == 1;
            let n = base[a] + if up { 1.0 } else { 0.0 };
            let wgt = 1.0 - (p[a] - n).abs();
            if n < 0.0 || n >= dims[a] as f64 || wgt <= 0.0 {
                inside = false;
                break;
            }
            weight *= wgt;
            idx += n as usize * st[a];
        }
        if inside {
            acc += weight * src[idx];
        }
    }
    acc
}

/// In-plane rotation about the patch center combined with isotropic scaling in
/// physical units, resampled trilinearly with zero padding.
fn affine(
    patch: &FeatureMap,
    dims: [usize; 3],
    scale: f64,
    degrees: f64,
    voxel: (f64, f64, f64),
) -> FeatureMap {
    if scale == 1.0 && degrees == 0.0 {
        return patch.clone();
    }
    let (sin, cos) = degrees.to_radians().sin_cos();
    let center: [f64; 3] = std::array::from_fn(|a| (dims[a] as f64 - 1.0) / 2.0);
    let (vx, vy, _) = voxel;
    let plane = patch.plane_len();
    let mut data = vec![0.0; patch.data().len()];
    for ch in 0..patch.channels() {
        let src = patch.channel(ch);
        let dst = &mut data[ch * plane..(ch + 1) * plane];
        let mut idx = 0;
        for z in 0..dims[0] {
            for i in 0..dims[1] {
                for j in 0..dims[2] {
                    // inverse map: undo scale, rotate by -theta
                    let px = (i as f64 - center[1]) * vx / scale;
                    let py = (j as f64 - center[2]) * vy / scale;
                    let qx = cos * px + sin * py;
                    let qy = -sin * px + cos * py;
                    let p = [
                        (z as f64 - center[0]) / scale + center[0],
                        qx / vx + center[1],
                        qy / vy + center[2],
                    ];
                    dst[idx] = trilinear(src, dims, p);
                    idx += 1;
                }
            }
        }
    }
    FeatureMap::from_parts(patch.channels(), patch.dims().to_vec(), data)
}

fn blur_axis(patch: &FeatureMap, dims: [usize; 3], axis: usize, sigma: f64) -> FeatureMap {
    let taps = gaussian_kernel(sigma);
    if taps.len() == 1 {
        return patch.clone();
    }
    let r = (taps.len() / 2) as isize;
    let st = strides(dims);
    let n = dims[axis] as isize;
    let plane = patch.plane_len();
    let mut data = vec![0.0; patch.data().len()];
    for ch in 0..patch.channels() {
        let src = patch.channel(ch);
        let dst = &mut data[ch * plane..(ch + 1) * plane];
        for (idx, out) in dst.iter_mut().enumerate() {
            let coord = ((idx / st[axis]) % dims[axis]) as isize;
            let line_start = idx - coord as usize * st[axis];
            let mut acc = 0.0;
            for (t, w) in taps.iter().enumerate() {
                let c = (coord + t as isize - r).clamp(0, n - 1) as usize;
                acc += w * src[line_start + c * st[axis]];
            }
            *out = acc;
        }
    }
    FeatureMap::from_parts(patch.channels(), patch.dims().to_vec(), data)
}

fn truncated_sigma<R: Rng>(rng: &mut R, (mean, std): (f64, f64)) -> Result<f64> {
    let normal = Normal::new(mean, std).map_err(|e| invalid(e.to_string()))?;
    Ok(normal.sample(rng).max(0.0))
}

fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Applies the augmentation pipeline to a `(C, D, H, W)` patch.
pub fn augment(patch: &FeatureMap, cfg: &AugmentConfig) -> Result<FeatureMap> {
    cfg.validate()?;
    let dims = volume_dims(patch)?;
    let mut rng = super::rng(cfg.seed);
    let do_flip = rng.random_bool(0.5);
    let axis = FlipAxis::ALL[rng.random_range(0..3)];
    let scale = uniform(&mut rng, cfg.scale_range);
    let degrees = uniform(&mut rng, cfg.rotation_deg_range);
    let sigma_h = truncated_sigma(&mut rng, cfg.blur_sigma_inplane)?;
    let sigma_w = truncated_sigma(&mut rng, cfg.blur_sigma_inplane)?;
    let sigma_d = truncated_sigma(&mut rng, cfg.blur_sigma_axial)?;

    let mut out = recenter(patch, dims);
    if cfg.flip && do_flip {
        out = flip_axis(&out, axis)?;
    }
    out = affine(&out, dims, scale, degrees, cfg.voxel_size);
    out = blur_axis(&out, dims, 1, sigma_h);
    out = blur_axis(&out, dims, 2, sigma_w);
    out = blur_axis(&out, dims, 0, sigma_d);
    Ok(out)
}
