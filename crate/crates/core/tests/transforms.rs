mod common;

use std::f64::consts::{FRAC_PI_2, PI};

use common::{ring, rng};
use dirac_core::transforms::{hough_lines, polar_resample, radon_projection};
use dirac_core::FeatureMap;
use rand::Rng;

fn first_argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Direct voting: every edge pixel increments one rho bin per angle.
fn brute_hough(img: &FeatureMap, num_rho: usize, num_theta: usize) -> Vec<f64> {
    let (h, w) = (img.dims()[0], img.dims()[1]);
    let diag = ((h - 1) as f64).hypot((w - 1) as f64);
    let mut acc = vec![0.0; num_rho * num_theta];
    for i in 0..h {
        for j in 0..w {
            let v = img.at2(0, i, j);
            if v == 0.0 {
                continue;
            }
            for t in 0..num_theta {
                let theta = PI * t as f64 / num_theta as f64;
                let rho = i as f64 * theta.cos() + j as f64 * theta.sin();
                let bin = ((rho + diag) / (2.0 * diag) * (num_rho - 1) as f64 + 0.5).floor();
                if bin >= 0.0 && (bin as usize) < num_rho {
                    acc[bin as usize * num_theta + t] += v;
                }
            }
        }
    }
    acc
}

fn random_line(r: &mut rand_chacha::ChaCha8Rng, n: usize) -> FeatureMap {
    let theta: f64 = r.random_range(0.0..PI);
    let (ci, cj) = (
        r.random_range(4.0..n as f64 - 4.0),
        r.random_range(4.0..n as f64 - 4.0),
    );
    let rho = ci * theta.cos() + cj * theta.sin();
    FeatureMap::from_fn_2d(n, n, |i, j| {
        let d = i as f64 * theta.cos() + j as f64 * theta.sin() - rho;
        if d.abs() <= 0.5 {
            1.0
        } else {
            0.0
        }
    })
    .unwrap()
}

#[test]
fn radon_axes_are_exact_sums() {
    let mut r = rng(21);
    for _ in 0..10 {
        let img = common::random_map(&mut r, 1, &[9, 13]);
        let cols: Vec<f64> = (0..13)
            .map(|j| (0..9).fold(0.0, |s, i| s + img.at2(0, i, j)))
            .collect();
        let rows: Vec<f64> = (0..9)
            .map(|i| (0..13).fold(0.0, |s, j| s + img.at2(0, i, j)))
            .collect();
        assert_eq!(
            radon_projection(&img, 0.0, 13).unwrap().data(),
            cols.as_slice()
        );
        assert_eq!(
            radon_projection(&img, FRAC_PI_2, 9).unwrap().data(),
            rows.as_slice()
        );
    }
}

#[test]
fn hough_matches_brute_force_voting() {
    let mut r = rng(22);
    for _ in 0..20 {
        let img = random_line(&mut r, 32);
        let acc = hough_lines(&img, 91, 60).unwrap();
        let brute = brute_hough(&img, 91, 60);
        assert_eq!(acc.data(), brute.as_slice());
        assert_eq!(acc.argmax_flat(0), first_argmax(&brute));
    }
}

#[test]
fn parallel_lines_share_an_angle() {
    let img =
        FeatureMap::from_fn_2d(30, 30, |_, j| if j == 8 || j == 21 { 1.0 } else { 0.0 }).unwrap();
    let num_theta = 36;
    let acc = hough_lines(&img, 85, num_theta).unwrap();
    // columns j = const are lines with theta = pi/2
    let t = num_theta / 2;
    let column: Vec<f64> = (0..85).map(|p| acc.at2(0, p, t)).collect();
    let peaks = column.iter().filter(|&&v| v == 30.0).count();
    assert_eq!(peaks, 2);
    assert_eq!(acc.data().iter().cloned().fold(0.0, f64::max), 30.0);
}

#[test]
fn polar_ring_is_a_band() {
    let img = ring(33, 33, (16.0, 16.0), 8.0, 1.5);
    let p = polar_resample(&img, (16.0, 16.0), 14, 48).unwrap();
    for phi in 0..48 {
        assert_eq!(p.at2(0, 8, phi), 1.0);
        assert_eq!(p.at2(0, 3, phi), 0.0);
        assert_eq!(p.at2(0, 12, phi), 0.0);
    }
}
