//! A fixed, non-learned rim score computed from accumulator features.
//!
//! Each pixel votes its gradient magnitude `S` (giving `v_s`) and `S^2` along
//! its unit gradient at every radius. Around the patch center, within a window
//! of Chebyshev radius [`CENTER_WINDOW`], the cell `p` with the largest `v_s` is
//! the convergence point. The score is
//!
//! `(S^2 votes)(p) / v_s(p) / 8 - mean_w U`
//!
//! The first term is the gradient-weighted mean magnitude of the edges
//! converging on `p`, in units of intensity per pixel (8 is the Sobel response
//! to a unit ramp). The second is the mean intensity of the central window. A
//! bright rim over a darker core converges steep edges onto a dim center and
//! scores high; a lesion fading out from a bright core scores low. Patches with
//! no gradient score 0. Volumes take the highest slice score.

use rayon::prelude::*;

use crate::datr::{build_rim_grids, sobel_gradients, DatrConfig};
use crate::deda::deda_forward;
use crate::error::{invalid, Result};
use crate::tensor::{FeatureMap, KernelSpec};

pub const CENTER_WINDOW: usize = 1;

/// Sobel response to a unit-slope ramp.
const SOBEL_GAIN: f64 = 8.0;

fn window(extent: usize) -> std::ops::RangeInclusive<usize> {
    let center = (extent as f64 - 1.0) / 2.0;
    let lo = (center.floor() as usize).saturating_sub(CENTER_WINDOW);
    let hi = (center.ceil() as usize + CENTER_WINDOW).min(extent - 1);
    lo..=hi
}

/// Score of one `(1, H, W)` plane.
fn plane_score(plane: &FeatureMap, cfg: &DatrConfig) -> Result<f64> {
    let (h, w) = plane.require_2d()?;
    let field = sobel_gradients(plane, cfg.epsilon)?;
    let grids = build_rim_grids(&field, &cfg.effective_radii(h, w))?;
    let s = field.magnitude.data();
    let weighted: Vec<f64> = s.iter().map(|s| s * s).chain(s.iter().copied()).collect();
    let acc = deda_forward(
        &FeatureMap::new(2, &[h, w], weighted)?,
        &grids,
        KernelSpec::Integer,
        &[h, w],
    )?;

    let mut peak = (0.0, 0.0);
    let mut center_sum = 0.0;
    let mut cells = 0.0;
    for i in window(h) {
        for j in window(w) {
            let vs = acc.at2(1, i, j);
            if vs > peak.1 {
                peak = (acc.at2(0, i, j), vs);
            }
            center_sum += plane.at2(0, i, j);
            cells += 1.0;
        }
    }
    if peak.1 == 0.0 {
        return Ok(0.0);
    }
    Ok(peak.0 / peak.1 / SOBEL_GAIN - center_sum / cells)
}

/// Rim score of one `(C, H, W)` or `(C, D, H, W)` patch; the highest over channels.
pub fn peak_feature_score(patch: &FeatureMap, cfg: &DatrConfig) -> Result<f64> {
    cfg.validate()?;
    if cfg.target_dims.is_some() || cfg.per_radius_channels {
        return Err(invalid(
            "peak scores need source-sized accumulators summed over radii",
        ));
    }
    let planes: Vec<FeatureMap> = match patch.dims().len() {
        2 => (0..patch.channels())
            .map(|c| patch.channel_map(c))
            .collect(),
        3 => {
            let d = patch.dims()[0];
            let mut out = Vec::with_capacity(d * patch.channels());
            for z in 0..d {
                let slice = patch.axial_slice(z)?;
                out.extend((0..slice.channels()).map(|c| slice.channel_map(c)));
            }
            out
        }
        _ => {
            return Err(invalid(format!(
                "patches must be 2D or 3D, got {:?}",
                patch.dims()
            )))
        }
    };
    let mut best = f64::NEG_INFINITY;
    for p in &planes {
        best = best.max(plane_score(p, cfg)?);
    }
    Ok(best)
}

/// Scores every patch; order is preserved and results do not depend on threading.
pub fn peak_feature_classifier(patches: &[FeatureMap], cfg: &DatrConfig) -> Result<Vec<f64>> {
    patches
        .par_iter()
        .map(|p| peak_feature_score(p, cfg))
        .collect()
}
