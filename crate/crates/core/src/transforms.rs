//! Radon, Hough and polar transforms expressed as accumulations or reads.
//!
//! Angle convention, shared by all three: `x` is the row index `i`, `y` the
//! column index `j`. The Radon projection at angle `a` bins the coordinate
//! `j cos a + i sin a`, so angle 0 sums columns and angle pi/2 sums rows. A
//! Hough line is `rho = i cos t + j sin t` with `t` in `[0, pi)` and `rho` in
//! `[-diag, diag]`. Polar samples sit at `center + r (cos phi, sin phi)` in
//! `(i, j)`.

use std::f64::consts::PI;

use crate::deda::deda_forward;
use crate::error::{invalid, Result};
use crate::sampling::grid_sample;
use crate::tensor::{FeatureMap, GridSet, KernelSpec, SamplingGrid};

/// Bin coordinate of pixel `(i, j)` for a projection at `angle` into `num_bins`
/// bins centered on the image center.
pub fn radon_bin_coordinate(
    i: usize,
    j: usize,
    angle: f64,
    dims: (usize, usize),
    num_bins: usize,
) -> f64 {
    let (s, c) = angle.sin_cos();
    let ci = (dims.0 as f64 - 1.0) / 2.0;
    let cj = (dims.1 as f64 - 1.0) / 2.0;
    let center = cj * c + ci * s;
    (j as f64 * c + i as f64 * s) - center + (num_bins as f64 - 1.0) / 2.0
}

/// Projects a `(C, H, W)` map onto `num_bins` bins at `angle` radians.
pub fn radon_projection(source: &FeatureMap, angle: f64, num_bins: usize) -> Result<FeatureMap> {
    if !angle.is_finite() {
        return Err(invalid(format!("angle must be finite, got {angle}")));
    }
    if num_bins == 0 {
        return Err(invalid("at least one projection bin is required"));
    }
    let (h, w) = source.require_2d()?;
    let mut coords = Vec::with_capacity(h * w);
    for i in 0..h {
        for j in 0..w {
            coords.push(radon_bin_coordinate(i, j, angle, (h, w), num_bins));
        }
    }
    let grid = SamplingGrid::new(1, &[h, w], coords)?;
    deda_forward(
        source,
        &GridSet::single(grid),
        KernelSpec::Integer,
        &[num_bins],
    )
}

/// Continuous `rho` bin coordinate for a line through `(i, j)` at angle `theta`.
pub fn hough_rho_coordinate(i: usize, j: usize, theta: f64, diag: f64, num_rho: usize) -> f64 {
    let rho = i as f64 * theta.cos() + j as f64 * theta.sin();
    if diag == 0.0 {
        return (num_rho as f64 - 1.0) / 2.0;
    }
    (rho + diag) / (2.0 * diag) * (num_rho as f64 - 1.0)
}

/// Angle of Hough column `t`.
pub fn hough_theta(t: usize, num_theta: usize) -> f64 {
    t as f64 * PI / num_theta as f64
}

/// `(rho, theta)` accumulator of a non-negative edge map, one grid per angle.
pub fn hough_lines(edge_map: &FeatureMap, num_rho: usize, num_theta: usize) -> Result<FeatureMap> {
    if num_rho == 0 || num_theta == 0 {
        return Err(invalid(format!(
            "accumulator needs positive extents, got {num_rho} x {num_theta}"
        )));
    }
    let (h, w) = edge_map.require_2d()?;
    if edge_map.data().iter().any(|&v| v < 0.0) {
        return Err(invalid("edge map must be non-negative"));
    }
    let diag = (((h - 1) * (h - 1) + (w - 1) * (w - 1)) as f64).sqrt();
    let plane = h * w;
    let grids = (0..num_theta)
        .map(|t| {
            let theta = hough_theta(t, num_theta);
            let mut coords = vec![t as f64; 2 * plane];
            for i in 0..h {
                for j in 0..w {
                    coords[i * w + j] = hough_rho_coordinate(i, j, theta, diag, num_rho);
                }
            }
            SamplingGrid::new(2, &[h, w], coords)
        })
        .collect::<Result<Vec<_>>>()?;
    deda_forward(
        edge_map,
        &GridSet::new(grids)?,
        KernelSpec::Integer,
        &[num_rho, num_theta],
    )
}

/// Resamples onto a `(num_r, num_phi)` polar raster around `center`, bilinearly.
/// Radius steps are one pixel; angles are `2 pi p / num_phi`.
pub fn polar_resample(
    source: &FeatureMap,
    center: (f64, f64),
    num_r: usize,
    num_phi: usize,
) -> Result<FeatureMap> {
    let (h, w) = source.require_2d()?;
    if num_r == 0 || num_phi == 0 {
        return Err(invalid("polar raster needs positive extents"));
    }
    let (cx, cy) = center;
    let inside = (0.0..=(h - 1) as f64).contains(&cx) && (0.0..=(w - 1) as f64).contains(&cy);
    if !inside {
        return Err(invalid(format!(
            "center ({cx}, {cy}) lies outside the {h}x{w} source"
        )));
    }
    let plane = num_r * num_phi;
    let mut coords = vec![0.0; 2 * plane];
    for r in 0..num_r {
        for p in 0..num_phi {
            let phi = 2.0 * PI * p as f64 / num_phi as f64;
            let (s, c) = phi.sin_cos();
            coords[r * num_phi + p] = cx + r as f64 * c;
            coords[plane + r * num_phi + p] = cy + r as f64 * s;
        }
    }
    let grid = SamplingGrid::new(2, &[num_r, num_phi], coords)?;
    grid_sample(source, &grid, KernelSpec::Bilinear)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radon_of_ones_at_zero() {
        let src = FeatureMap::filled(1, &[3, 3], 1.0).unwrap();
        let p = radon_projection(&src, 0.0, 3).unwrap();
        assert_eq!(p.shape(), vec![1, 3]);
        assert_eq!(p.data(), &[3.0, 3.0, 3.0]);
    }

    #[test]
    fn radon_conserves_mass_at_axis_angles() {
        let src = FeatureMap::from_fn_2d(4, 5, |i, j| (i * 5 + j) as f64 * 0.25).unwrap();
        for (angle, bins) in [(0.0, 5), (PI / 2.0, 4)] {
            let p = radon_projection(&src, angle, bins).unwrap();
            assert_eq!(p.sum(), src.sum());
        }
    }

    #[test]
    fn radon_rejects_bad_arguments() {
        let src = FeatureMap::zeros(1, &[3, 3]).unwrap();
        assert!(radon_projection(&src, f64::NAN, 3).is_err());
        assert!(radon_projection(&src, 0.0, 0).is_err());
    }

    #[test]
    fn empty_edge_map_gives_empty_accumulator() {
        let e = FeatureMap::zeros(1, &[8, 8]).unwrap();
        let acc = hough_lines(&e, 21, 18).unwrap();
        assert_eq!(acc.shape(), vec![1, 21, 18]);
        assert!(acc.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn hough_argument_checks() {
        let e = FeatureMap::zeros(1, &[4, 4]).unwrap();
        assert!(hough_lines(&e, 0, 4).is_err());
        assert!(hough_lines(&e, 4, 0).is_err());
        let neg = FeatureMap::filled(1, &[4, 4], -1.0).unwrap();
        assert!(hough_lines(&neg, 4, 4).is_err());
    }

    #[test]
    fn polar_of_constant_is_constant() {
        let src = FeatureMap::filled(1, &[9, 9], 2.5).unwrap();
        let p = polar_resample(&src, (4.0, 4.0), 4, 16).unwrap();
        for &v in p.data() {
            assert!((v - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn polar_single_angle_is_a_ray() {
        let src = FeatureMap::from_fn_2d(6, 6, |i, j| (i * 10 + j) as f64).unwrap();
        let p = polar_resample(&src, (1.0, 2.0), 4, 1).unwrap();
        assert_eq!(p.data(), &[12.0, 22.0, 32.0, 42.0]);
    }

    #[test]
    fn polar_center_must_be_inside() {
        let src = FeatureMap::zeros(1, &[5, 5]).unwrap();
        assert!(polar_resample(&src, (5.5, 2.0), 3, 8).is_err());
        assert!(polar_resample(&src, (2.0, -0.1), 3, 8).is_err());
    }
}
