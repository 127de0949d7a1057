//! Forward field model `b = chi * d + n`.
//!
//! The convolution is evaluated in k-space with the unit dipole kernel
//! `D(k) = 1/3 - kz^2 / |k|^2` for a main field along the axial (`z`) axis,
//! with `D(0) = 0`. Voxels are unit-spaced and the convolution is circular.

use rand_distr::{Distribution, Normal};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{invalid, Result};
use crate::tensor::FeatureMap;

#[derive(Clone, Debug, PartialEq)]
pub struct QsmPhantom {
    pub chi: FeatureMap,
    pub field: FeatureMap,
    pub noise_sigma: f64,
}

fn fftfreq(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let k = if i < n.div_ceil(2) {
                i as f64
            } else {
                i as f64 - n as f64
            };
            k / n as f64
        })
        .collect()
}

/// Dipole kernel over `[D, H, W]` in unshifted FFT order.
pub fn dipole_kernel(dims: [usize; 3]) -> Vec<f64> {
    let [d, h, w] = dims;
    let (kz, kx, ky) = (fftfreq(d), fftfreq(h), fftfreq(w));
    let mut out = Vec::with_capacity(d * h * w);
    for z in &kz {
        for x in &kx {
            for y in &ky {
                let k2 = z * z + x * x + y * y;
                out.push(if k2 == 0.0 {
                    0.0
                } else {
                    1.0 / 3.0 - z * z / k2
                });
            }
        }
    }
    out
}

/// In-place 3D FFT over a `[D, H, W]` row-major buffer, one axis at a time.
fn fft3(buf: &mut [Complex64], dims: [usize; 3], inverse: bool) {
    let mut planner = FftPlanner::new();
    let strides = [dims[1] * dims[2], dims[2], 1];
    for axis in 0..3 {
        let n = dims[axis];
        if n == 1 {
            continue;
        }
        let fft = if inverse {
            planner.plan_fft_inverse(n)
        } else {
            planner.plan_fft_forward(n)
        };
        let stride = strides[axis];
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for start in 0..buf.len() {
            // line starts are the cells whose coordinate along `axis` is zero
            if !(start / stride).is_multiple_of(n) {
                continue;
            }
            for (t, v) in line.iter_mut().enumerate() {
                *v = buf[start + t * stride];
            }
            fft.process(&mut line);
            for (t, v) in line.iter().enumerate() {
                buf[start + t * stride] = *v;
            }
        }
    }
    if inverse {
        let scale = 1.0 / buf.len() as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }
}

/// Simulates the field map of a `(C, D, H, W)` susceptibility volume, per channel.
pub fn qsm_forward(chi: &FeatureMap, noise_sigma: f64, seed: u64) -> Result<QsmPhantom> {
    let (d, h, w) = chi.require_3d().map_err(|_| {
        invalid(format!(
            "susceptibility must be 3D, got extents {:?}",
            chi.dims()
        ))
    })?;
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(invalid(format!(
            "noise sigma must be non-negative, got {noise_sigma}"
        )));
    }
    let dims = [d, h, w];
    let kernel = dipole_kernel(dims);
    let mut field = Vec::with_capacity(chi.data().len());
    for ch in 0..chi.channels() {
        let mut buf: Vec<Complex64> = chi
            .channel(ch)
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        fft3(&mut buf, dims, false);
        for (v, k) in buf.iter_mut().zip(&kernel) {
            *v *= *k;
        }
        fft3(&mut buf, dims, true);
        field.extend(buf.iter().map(|v| v.re));
    }
    if noise_sigma > 0.0 {
        let normal = Normal::new(0.0, noise_sigma).map_err(|e| invalid(e.to_string()))?;
        let mut rng = super::rng(seed);
        for v in &mut field {
            *v += normal.sample(&mut rng);
        }
    }
    Ok(QsmPhantom {
        chi: chi.clone(),
        field: FeatureMap::new(chi.channels(), chi.dims(), field)?,
        noise_sigma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_and_constant_susceptibility_give_zero_field() {
        let zero = FeatureMap::zeros(1, &[4, 6, 5]).unwrap();
        let p = qsm_forward(&zero, 0.0, 1).unwrap();
        assert!(p.field.data().iter().all(|&v| v == 0.0));
        let flat = FeatureMap::filled(1, &[4, 6, 5], 0.7).unwrap();
        let p = qsm_forward(&flat, 0.0, 1).unwrap();
        assert!(p.field.data().iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn kernel_bounds_and_dc() {
        let k = dipole_kernel([6, 8, 8]);
        assert_eq!(k[0], 0.0);
        assert!(k
            .iter()
            .all(|&v| (-2.0 / 3.0 - 1e-15..=1.0 / 3.0 + 1e-15).contains(&v)));
        // pure kz frequency: 1/3 - 1
        assert!((k[64] - (1.0 / 3.0 - 1.0)).abs() < 1e-15);
        // pure in-plane frequency: 1/3
        assert!((k[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_planar_input() {
        let plane = FeatureMap::zeros(1, &[4, 4]).unwrap();
        assert!(matches!(
            qsm_forward(&plane, 0.0, 0),
            Err(crate::Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn noise_is_seeded() {
        let zero = FeatureMap::zeros(1, &[2, 3, 3]).unwrap();
        let a = qsm_forward(&zero, 0.1, 9).unwrap();
        let b = qsm_forward(&zero, 0.1, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.field.data().iter().any(|&v| v != 0.0));
    }
}
