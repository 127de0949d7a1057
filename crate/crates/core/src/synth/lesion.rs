use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::tensor::FeatureMap;

/// In-plane margin, in pixels, a lesion must keep from the patch border.
pub const MARGIN: f64 = 2.0;

/// Axial distances are scaled by this factor, the slice-thickness to in-plane
/// spacing ratio of a 0.75 x 0.75 x 3 mm grid.
pub const AXIAL_ASPECT: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LesionKind {
    RimPositive,
    RimNegative,
}

impl LesionKind {
    pub fn is_positive(self) -> bool {
        self == LesionKind::RimPositive
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LesionKind::RimPositive => "rim+",
            LesionKind::RimNegative => "rim-",
        }
    }
}

impl std::str::FromStr for LesionKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rim+" | "RimPositive" => Ok(LesionKind::RimPositive),
            "rim-" | "RimNegative" => Ok(LesionKind::RimNegative),
            other => Err(invalid(format!("unknown lesion kind {other:?}"))),
        }
    }
}

/// Geometry and appearance of one synthetic lesion.
///
/// `center` is `(x, y)` or `(x, y, z)`: row, column and, for volumes, slice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LesionSpec {
    pub kind: LesionKind,
    pub center: Vec<f64>,
    /// Rim radius in pixels, within `[5, 15]`.
    pub radius: f64,
    pub rim_width: f64,
    pub rim_intensity: f64,
    pub interior_intensity: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl LesionSpec {
    pub fn validate(&self) -> Result<()> {
        if !(5.0..=15.0).contains(&self.radius) {
            return Err(invalid(format!("radius {} outside [5, 15]", self.radius)));
        }
        if !(self.rim_width > 0.0 && self.radius > self.rim_width) {
            return Err(invalid(format!(
                "need radius > rim_width > 0, got {} and {}",
                self.radius, self.rim_width
            )));
        }
        if self.kind.is_positive() && self.rim_intensity <= self.interior_intensity {
            return Err(invalid(
                "a rim+ lesion needs rim_intensity > interior_intensity",
            ));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(invalid(format!(
                "noise sigma must be non-negative, got {}",
                self.noise_sigma
            )));
        }
        if !(2..=3).contains(&self.center.len()) || self.center.iter().any(|v| !v.is_finite()) {
            return Err(invalid(format!(
                "center must be 2 or 3 finite values, got {:?}",
                self.center
            )));
        }
        Ok(())
    }

    /// Radius of the lesion's outer boundary.
    pub fn outer_radius(&self) -> f64 {
        self.radius + self.rim_width / 2.0
    }

    /// Noise-free intensity at distance `r` from the center.
    fn profile(&self, r: f64) -> f64 {
        let half = self.rim_width / 2.0;
        match self.kind {
            LesionKind::RimPositive => {
                if (r - self.radius).abs() <= half {
                    self.rim_intensity
                } else if r < self.radius - half {
                    self.interior_intensity
                } else {
                    0.0
                }
            }
            LesionKind::RimNegative => {
                // plateau, then a raised-cosine fall-off one rim width wide
                let outer = self.outer_radius();
                let start = outer - self.rim_width;
                if r <= start {
                    self.interior_intensity
                } else if r < outer {
                    let t = (r - start) / self.rim_width;
                    self.interior_intensity * 0.5 * (1.0 + (std::f64::consts::PI * t).cos())
                } else {
                    0.0
                }
            }
        }
    }
}

/// Renders a lesion into a single-channel patch of extents `[H, W]` or `[D, H, W]`.
pub fn generate_lesion(spec: &LesionSpec, dims: &[usize]) -> Result<(FeatureMap, LesionSpec)> {
    spec.validate()?;
    if spec.center.len() != dims.len() {
        return Err(invalid(format!(
            "center {:?} does not match patch extents {:?}",
            spec.center, dims
        )));
    }
    let (d, h, w) = match dims {
        &[h, w] => (1, h, w),
        &[d, h, w] => (d, h, w),
        other => {
            return Err(invalid(format!(
                "patch extents must be 2D or 3D, got {other:?}"
            )))
        }
    };
    let (cx, cy) = (spec.center[0], spec.center[1]);
    let cz = spec.center.get(2).copied().unwrap_or(0.0);
    let outer = spec.outer_radius();
    let fits =
        |c: f64, extent: usize| c - outer >= MARGIN && c + outer <= extent as f64 - 1.0 - MARGIN;
    if !fits(cx, h) || !fits(cy, w) {
        return Err(invalid(format!(
            "lesion of outer radius {outer} at ({cx}, {cy}) does not fit {h}x{w} with margin {MARGIN}"
        )));
    }
    if !(0.0..=(d - 1) as f64).contains(&cz) {
        return Err(invalid(format!("slice center {cz} outside depth {d}")));
    }

    let mut data = Vec::with_capacity(d * h * w);
    for z in 0..d {
        let dz = (z as f64 - cz) * AXIAL_ASPECT;
        for i in 0..h {
            let dx = i as f64 - cx;
            for j in 0..w {
                let dy = j as f64 - cy;
                data.push(spec.profile((dx * dx + dy * dy + dz * dz).sqrt()));
            }
        }
    }
    if spec.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, spec.noise_sigma).map_err(|e| invalid(e.to_string()))?;
        let mut rng = super::rng(spec.seed);
        for v in &mut data {
            *v += normal.sample(&mut rng);
        }
    }
    Ok((FeatureMap::new(1, dims, data)?, spec.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: LesionKind) -> LesionSpec {
        LesionSpec {
            kind,
            center: vec![16.0, 16.0],
            radius: 6.0,
            rim_width: 2.0,
            rim_intensity: 1.0,
            interior_intensity: 0.3,
            noise_sigma: 0.0,
            seed: 11,
        }
    }

    #[test]
    fn noiseless_rim_peak_is_rim_intensity() {
        let (patch, label) = generate_lesion(&spec(LesionKind::RimPositive), &[32, 32]).unwrap();
        assert_eq!(label, spec(LesionKind::RimPositive));
        let mut annulus_max = f64::MIN;
        for i in 0..32 {
            for j in 0..32 {
                let r = ((i as f64 - 16.0).powi(2) + (j as f64 - 16.0).powi(2)).sqrt();
                if (r - 6.0).abs() <= 1.0 {
                    annulus_max = annulus_max.max(patch.at2(0, i, j));
                }
            }
        }
        assert_eq!(annulus_max, 1.0);
        assert_eq!(patch.at2(0, 16, 16), 0.3);
        assert_eq!(patch.at2(0, 0, 0), 0.0);
    }

    #[test]
    fn rim_negative_has_no_annulus() {
        let (patch, _) = generate_lesion(&spec(LesionKind::RimNegative), &[32, 32]).unwrap();
        let max = patch.data().iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(max, 0.3);
    }

    #[test]
    fn seeded_noise_is_repeatable() {
        let mut s = spec(LesionKind::RimPositive);
        s.noise_sigma = 0.1;
        let a = generate_lesion(&s, &[32, 32]).unwrap().0;
        let b = generate_lesion(&s, &[32, 32]).unwrap().0;
        assert_eq!(a, b);
        s.seed += 1;
        let c = generate_lesion(&s, &[32, 32]).unwrap().0;
        assert_ne!(a, c);
    }

    #[test]
    fn volume_lesion_fades_axially() {
        let mut s = spec(LesionKind::RimPositive);
        s.center.push(3.0);
        let (vol, _) = generate_lesion(&s, &[8, 32, 32]).unwrap();
        assert_eq!(vol.shape(), vec![1, 8, 32, 32]);
        let energy = |z: usize| vol.axial_slice(z).unwrap().sum();
        assert!(energy(3) > energy(4));
        assert!(energy(4) > 0.0);
        assert_eq!(energy(7), 0.0);
    }

    #[test]
    fn rejects_invalid_specs() {
        let mut s = spec(LesionKind::RimPositive);
        s.center = vec![5.0, 16.0];
        assert!(generate_lesion(&s, &[32, 32]).is_err());
        let mut s = spec(LesionKind::RimPositive);
        s.rim_intensity = 0.2;
        assert!(generate_lesion(&s, &[32, 32]).is_err());
        let mut s = spec(LesionKind::RimPositive);
        s.radius = 4.0;
        assert!(generate_lesion(&s, &[32, 32]).is_err());
        let mut s = spec(LesionKind::RimPositive);
        s.rim_width = 7.0;
        assert!(generate_lesion(&s, &[32, 32]).is_err());
        assert!(generate_lesion(&spec(LesionKind::RimPositive), &[32, 32, 8]).is_err());
    }
}
