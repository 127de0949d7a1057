//! Rim parameterization by directed accumulation.
//!
//! Every pixel votes at distance `k` along its unit image gradient, for each
//! radius `k` in the configured set. Gradient magnitudes and raw feature values
//! are accumulated into separate maps, `v_s` and `v_u`, with the integer kernel.
//!
//! Axis convention: `x` is the row axis and `y` the column axis. A grid for
//! radius `k` holds `(k * ux + i, k * uy + j)` at pixel `(i, j)`.
//!
//! Gradients point from dark to bright. For a bright rim on a darker
//! background, pixels just outside the rim have gradients pointing inward, so
//! their votes at `k` equal to their distance from the center land on the
//! center:
//!
//! ```text
//!            . . . o . . .          o  outer-edge pixel
//!          .               .        -> its unit gradient (inward)
//!        o -> -> -> X <- <- <- o    X  accumulator peak
//!          .               .
//!            . . . o . . .
//! ```
//!
//! Pixels on the inner side of the rim point outward and vote away from the
//! center.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deda::deda_forward;
use crate::error::{invalid, mismatch, Result};
use crate::tensor::{FeatureMap, GridSet, KernelSpec, SamplingGrid};

pub const DEFAULT_RADII: [u32; 6] = [5, 7, 9, 11, 13, 15];
pub const DEFAULT_EPSILON: f64 = 1e-8;

fn default_radii() -> Vec<u32> {
    DEFAULT_RADII.to_vec()
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatrConfig {
    /// Shift distances in pixels, strictly ascending.
    #[serde(default = "default_radii")]
    pub radii: Vec<u32>,
    /// Added to the gradient magnitude before normalizing.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Accumulator extents; the source extents when absent.
    #[serde(default)]
    pub target_dims: Option<Vec<usize>>,
    /// Use every radius `1..=max(H, W)` instead of `radii`.
    #[serde(default)]
    pub full_range: bool,
    /// Keep one output channel per radius instead of summing over radii.
    /// Channel `c * N + r` holds source channel `c` at radius index `r`.
    #[serde(default)]
    pub per_radius_channels: bool,
}

impl Default for DatrConfig {
    fn default() -> Self {
        Self {
            radii: default_radii(),
            epsilon: DEFAULT_EPSILON,
            target_dims: None,
            full_range: false,
            per_radius_channels: false,
        }
    }
}

impl DatrConfig {
    pub fn with_radii(radii: &[u32]) -> Self {
        Self {
            radii: radii.to_vec(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(invalid(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !self.full_range {
            if self.radii.is_empty() {
                return Err(invalid("radius set is empty"));
            }
            if self.radii.contains(&0) {
                return Err(invalid("radii must be positive"));
            }
            if self.radii.windows(2).any(|w| w[0] >= w[1]) {
                return Err(invalid(format!(
                    "radii must be distinct and ascending, got {:?}",
                    self.radii
                )));
            }
        }
        if let Some(t) = &self.target_dims {
            if t.len() != 2 || t.contains(&0) {
                return Err(invalid(format!(
                    "target extents must be two positive values, got {t:?}"
                )));
            }
        }
        Ok(())
    }

    /// Radii actually used for a source of extents `(h, w)`.
    pub fn effective_radii(&self, h: usize, w: usize) -> Vec<u32> {
        if self.full_range {
            (1..=h.max(w) as u32).collect()
        } else {
            self.radii.clone()
        }
    }
}

/// Sobel derivatives, magnitude and normalized direction of a 2D map.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientField {
    pub gx: FeatureMap,
    pub gy: FeatureMap,
    pub magnitude: FeatureMap,
    pub unit_x: FeatureMap,
    pub unit_y: FeatureMap,
}

impl GradientField {
    pub fn channels(&self) -> usize {
        self.gx.channels()
    }

    /// Restricts every component to channel `c`.
    pub fn channel(&self, c: usize) -> GradientField {
        GradientField {
            gx: self.gx.channel_map(c),
            gy: self.gy.channel_map(c),
            magnitude: self.magnitude.channel_map(c),
            unit_x: self.unit_x.channel_map(c),
            unit_y: self.unit_y.channel_map(c),
        }
    }
}

const SOBEL_SMOOTH: [f64; 3] = [1.0, 2.0, 1.0];

/// 3x3 Sobel gradients with replicate border padding.
///
/// `gx` differentiates along rows with `[[-1,-2,-1],[0,0,0],[1,2,1]]`, `gy` along
/// columns with its transpose. Kernels are unnormalized.
pub fn sobel_gradients(source: &FeatureMap, epsilon: f64) -> Result<GradientField> {
    let (h, w) = source.require_2d()?;
    if h < 3 || w < 3 {
        return Err(invalid(format!(
            "Sobel needs extents of at least 3, got {h}x{w}"
        )));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    let c = source.channels();
    let n = c * h * w;
    let mut gx = vec![0.0; n];
    let mut gy = vec![0.0; n];
    let clamp = |v: isize, hi: usize| v.clamp(0, hi as isize - 1) as usize;
    for ch in 0..c {
        let plane = source.channel(ch);
        let base = ch * h * w;
        for i in 0..h {
            for j in 0..w {
                let rows = [clamp(i as isize - 1, h), i, clamp(i as isize + 1, h)];
                let cols = [clamp(j as isize - 1, w), j, clamp(j as isize + 1, w)];
                let at = |r: usize, c: usize| plane[r * w + c];
                // differences first, so flat neighbourhoods give exact zeros
                let mut sx = 0.0;
                let mut sy = 0.0;
                for t in 0..3 {
                    sx += SOBEL_SMOOTH[t] * (at(rows[2], cols[t]) - at(rows[0], cols[t]));
                    sy += SOBEL_SMOOTH[t] * (at(rows[t], cols[2]) - at(rows[t], cols[0]));
                }
                gx[base + i * w + j] = sx;
                gy[base + i * w + j] = sy;
            }
        }
    }
    let magnitude: Vec<f64> = gx
        .iter()
        .zip(&gy)
        .map(|(x, y)| (x * x + y * y).sqrt())
        .collect();
    let unit_x = gx
        .iter()
        .zip(&magnitude)
        .map(|(g, s)| g / (s + epsilon))
        .collect();
    let unit_y = gy
        .iter()
        .zip(&magnitude)
        .map(|(g, s)| g / (s + epsilon))
        .collect();
    let dims = vec![h, w];
    Ok(GradientField {
        gx: FeatureMap::from_parts(c, dims.clone(), gx),
        gy: FeatureMap::from_parts(c, dims.clone(), gy),
        magnitude: FeatureMap::from_parts(c, dims.clone(), magnitude),
        unit_x: FeatureMap::from_parts(c, dims.clone(), unit_x),
        unit_y: FeatureMap::from_parts(c, dims, unit_y),
    })
}

/// One grid per radius: each pixel shifted `k` steps along its unit gradient.
///
/// The field must be single-channel; use [`GradientField::channel`] first.
pub fn build_rim_grids(field: &GradientField, radii: &[u32]) -> Result<GridSet> {
    if field.channels() != 1 {
        return Err(mismatch(format!(
            "rim grids are built per channel, field has {}",
            field.channels()
        )));
    }
    if radii.is_empty() {
        return Err(invalid("radius set is empty"));
    }
    if radii.contains(&0) {
        return Err(invalid("radii must be positive"));
    }
    let (h, w) = field.unit_x.require_2d()?;
    let ux = field.unit_x.data();
    let uy = field.unit_y.data();
    let plane = h * w;
    let grids = radii
        .iter()
        .map(|&k| {
            let k = f64::from(k);
            let mut coords = vec![0.0; 2 * plane];
            for i in 0..h {
                for j in 0..w {
                    let s = i * w + j;
                    coords[s] = k * ux[s] + i as f64;
                    coords[plane + s] = k * uy[s] + j as f64;
                }
            }
            SamplingGrid::new(2, &[h, w], coords)
        })
        .collect::<Result<Vec<_>>>()?;
    GridSet::new(grids)
}

/// Accumulated feature values (`v_u`) and gradient magnitudes (`v_s`).
#[derive(Clone, Debug, PartialEq)]
pub struct DatrMaps {
    pub v_u: FeatureMap,
    pub v_s: FeatureMap,
}

fn concat_channels(maps: Vec<FeatureMap>) -> FeatureMap {
    let dims = maps[0].dims().to_vec();
    let channels = maps.iter().map(FeatureMap::channels).sum();
    let data = maps.into_iter().flat_map(FeatureMap::into_data).collect();
    FeatureMap::from_parts(channels, dims, data)
}

/// Rim transform of a `(C, H, W)` map. Grids come from each channel's own gradients.
pub fn datr_transform(source: &FeatureMap, cfg: &DatrConfig) -> Result<DatrMaps> {
    cfg.validate()?;
    let (h, w) = source.require_2d()?;
    let field = sobel_gradients(source, cfg.epsilon)?;
    let radii = cfg.effective_radii(h, w);
    let target = cfg.target_dims.clone().unwrap_or_else(|| vec![h, w]);

    let mut v_u = Vec::with_capacity(source.channels());
    let mut v_s = Vec::with_capacity(source.channels());
    for ch in 0..source.channels() {
        let field_c = field.channel(ch);
        let grids = build_rim_grids(&field_c, &radii)?;
        let u = source.channel_map(ch);
        if cfg.per_radius_channels {
            for grid in grids.grids() {
                let single = GridSet::single(grid.clone());
                v_u.push(deda_forward(&u, &single, KernelSpec::Integer, &target)?);
                v_s.push(deda_forward(
                    &field_c.magnitude,
                    &single,
                    KernelSpec::Integer,
                    &target,
                )?);
            }
        } else {
            v_u.push(deda_forward(&u, &grids, KernelSpec::Integer, &target)?);
            v_s.push(deda_forward(
                &field_c.magnitude,
                &grids,
                KernelSpec::Integer,
                &target,
            )?);
        }
    }
    Ok(DatrMaps {
        v_u: concat_channels(v_u),
        v_s: concat_channels(v_s),
    })
}

/// Applies [`datr_transform`] to every axial slice of a `(C, D, H, W)` volume.
pub fn datr_volume(source: &FeatureMap, cfg: &DatrConfig) -> Result<DatrMaps> {
    let (d, _, _) = source.require_3d()?;
    let per_slice = (0..d)
        .into_par_iter()
        .map(|z| datr_transform(&source.axial_slice(z)?, cfg))
        .collect::<Result<Vec<_>>>()?;
    let (us, ss): (Vec<_>, Vec<_>) = per_slice.into_iter().map(|m| (m.v_u, m.v_s)).unzip();
    Ok(DatrMaps {
        v_u: FeatureMap::stack_slices(&us)?,
        v_s: FeatureMap::stack_slices(&ss)?,
    })
}
