#![allow(dead_code)]

use dirac_core::{FeatureMap, GridSet, SamplingGrid};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    dirac_core::synth::rng(seed)
}

pub fn random_map(rng: &mut ChaCha8Rng, c: usize, dims: &[usize]) -> FeatureMap {
    let n = c * dims.iter().product::<usize>();
    FeatureMap::new(
        c,
        dims,
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
    )
    .unwrap()
}

/// Coordinate in `[-1, extent]` kept at least `gap` away from integers and half-integers.
pub fn off_kink(rng: &mut ChaCha8Rng, extent: usize, gap: f64) -> f64 {
    loop {
        let v: f64 = rng.random_range(-1.0..extent as f64);
        let frac = v - v.floor();
        if frac > gap && (frac - 0.5).abs() > gap && frac < 1.0 - gap {
            return v;
        }
    }
}

pub fn random_grid(rng: &mut ChaCha8Rng, source: &[usize], target: &[usize]) -> SamplingGrid {
    let plane: usize = source.iter().product();
    let mut coords = Vec::with_capacity(plane * target.len());
    for &t in target {
        for _ in 0..plane {
            coords.push(off_kink(rng, t, 1e-3));
        }
    }
    SamplingGrid::new(target.len(), source, coords).unwrap()
}

pub fn random_grids(rng: &mut ChaCha8Rng, n: usize, source: &[usize], target: &[usize]) -> GridSet {
    GridSet::new((0..n).map(|_| random_grid(rng, source, target)).collect()).unwrap()
}

pub fn rel_err(a: f64, f: f64) -> f64 {
    (a - f).abs() / a.abs().max(f.abs()).max(1e-3)
}

pub fn ring(h: usize, w: usize, center: (f64, f64), radius: f64, half_width: f64) -> FeatureMap {
    FeatureMap::from_fn_2d(h, w, |i, j| {
        let r = ((i as f64 - center.0).powi(2) + (j as f64 - center.1).powi(2)).sqrt();
        if (r - radius).abs() <= half_width {
            1.0
        } else {
            0.0
        }
    })
    .unwrap()
}
