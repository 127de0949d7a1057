//! Sampling kernels and their derivatives.

use crate::error::{invalid, Result};
use crate::tensor::KernelSpec;

fn check_finite(g: f64) -> Result<()> {
    if g.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("non-finite coordinate {g}")))
    }
}

#[inline]
fn eval_unchecked(spec: KernelSpec, g: f64, n: i64) -> f64 {
    match spec {
        KernelSpec::Integer => {
            if (g + 0.5).floor() == n as f64 {
                1.0
            } else {
                0.0
            }
        }
        KernelSpec::Bilinear => (1.0 - (g - n as f64).abs()).max(0.0),
    }
}

#[inline]
fn derivative_unchecked(spec: KernelSpec, g: f64, n: i64) -> f64 {
    match spec {
        KernelSpec::Integer => 0.0,
        KernelSpec::Bilinear => {
            let d = g - n as f64;
            let a = d.abs();
            if a > 0.0 && a < 1.0 {
                -d.signum()
            } else {
                0.0
            }
        }
    }
}

/// Kernel weight of coordinate `g` at grid index `n`.
pub fn kernel_eval(spec: KernelSpec, g: f64, n: i64) -> Result<f64> {
    check_finite(g)?;
    Ok(eval_unchecked(spec, g, n))
}

/// Derivative of the kernel weight with respect to `g`; zero at kinks.
pub fn kernel_derivative(spec: KernelSpec, g: f64, n: i64) -> Result<f64> {
    check_finite(g)?;
    Ok(derivative_unchecked(spec, g, n))
}

/// Up to two grid indices with non-zero support for one coordinate.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Taps {
    pub idx: [i64; 2],
    pub weight: [f64; 2],
    pub slope: [f64; 2],
    pub len: usize,
}

impl Taps {
    /// Support of `g` restricted to `[0, extent)`. Weights use the same
    /// expressions as [`kernel_eval`], so tap sums agree with the dense double
    /// sum bit for bit.
    #[inline]
    pub fn new(spec: KernelSpec, g: f64, extent: usize) -> Self {
        let mut taps = Taps {
            idx: [0; 2],
            weight: [0.0; 2],
            slope: [0.0; 2],
            len: 0,
        };
        let candidates: [i64; 2] = match spec {
            KernelSpec::Integer => {
                let n = (g + 0.5).floor() as i64;
                [n, i64::MIN]
            }
            KernelSpec::Bilinear => {
                let n = g.floor() as i64;
                [n, n + 1]
            }
        };
        for n in candidates {
            if n < 0 || n >= extent as i64 {
                continue;
            }
            let w = eval_unchecked(spec, g, n);
            let s = derivative_unchecked(spec, g, n);
            if w == 0.0 && s == 0.0 {
                continue;
            }
            taps.idx[taps.len] = n;
            taps.weight[taps.len] = w;
            taps.slope[taps.len] = s;
            taps.len += 1;
        }
        taps
    }

    #[inline]
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        (0..self.len).map(move |t| (self.idx[t] as usize, self.weight[t], self.slope[t]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    use KernelSpec::{Bilinear, Integer};

    #[test]
    fn integer_rounds_half_up() {
        assert_eq!(kernel_eval(Integer, 1.4, 1).unwrap(), 1.0);
        assert_eq!(kernel_eval(Integer, 1.4, 2).unwrap(), 0.0);
        assert_eq!(kernel_eval(Integer, 1.5, 2).unwrap(), 1.0);
        assert_eq!(kernel_eval(Integer, -0.5, 0).unwrap(), 1.0);
    }

    #[test]
    fn bilinear_weights() {
        assert_eq!(kernel_eval(Bilinear, 1.25, 1).unwrap(), 0.75);
        assert_eq!(kernel_eval(Bilinear, 1.25, 2).unwrap(), 0.25);
        assert_eq!(kernel_eval(Bilinear, 5.0, 5).unwrap(), 1.0);
        assert_eq!(kernel_eval(Bilinear, 5.0, 7).unwrap(), 0.0);
    }

    #[test]
    fn derivatives() {
        assert_eq!(kernel_derivative(Bilinear, 1.25, 1).unwrap(), -1.0);
        assert_eq!(kernel_derivative(Bilinear, 0.75, 1).unwrap(), 1.0);
        assert_eq!(kernel_derivative(Bilinear, 1.0, 1).unwrap(), 0.0);
        assert_eq!(kernel_derivative(Bilinear, 2.0, 1).unwrap(), 0.0);
        for (g, n) in [(0.3, 0), (1.7, 2), (-4.0, 3)] {
            assert_eq!(kernel_derivative(Integer, g, n).unwrap(), 0.0);
        }
    }

    #[test]
    fn non_finite_is_rejected() {
        assert!(kernel_eval(Bilinear, f64::NAN, 0).is_err());
        assert!(kernel_derivative(Integer, f64::INFINITY, 0).is_err());
    }

    #[test]
    fn taps_drop_out_of_range() {
        let t = Taps::new(Bilinear, -0.25, 4);
        assert_eq!(t.len, 1);
        assert_eq!(t.idx[0], 0);
        assert_eq!(t.weight[0], 0.75);
        let t = Taps::new(Integer, 0.4, 2);
        assert_eq!((t.len, t.idx[0]), (1, 0));
        assert_eq!(Taps::new(Integer, 2.2, 2).len, 0);
    }

    proptest! {
        #[test]
        fn bilinear_partition_of_unity(g in 0.0f64..15.0) {
            let lo = g.floor() as i64;
            let s = kernel_eval(Bilinear, g, lo).unwrap() + kernel_eval(Bilinear, g, lo + 1).unwrap();
            prop_assert!((s - 1.0).abs() < 1e-15);
        }

        #[test]
        fn integer_selects_exactly_one(g in -3.0f64..20.0) {
            let hits = (-5..25).filter(|&n| kernel_eval(Integer, g, n).unwrap() == 1.0).count();
            prop_assert_eq!(hits, 1);
        }

        #[test]
        fn derivative_matches_central_difference(base in 0i64..10, frac in 0.01f64..0.99, off in -1i64..=1) {
            let g = base as f64 + frac;
            let n = base + off;
            let h = 1e-7;
            let fd = (kernel_eval(Bilinear, g + h, n).unwrap() - kernel_eval(Bilinear, g - h, n).unwrap()) / (2.0 * h);
            let an = kernel_derivative(Bilinear, g, n).unwrap();
            prop_assert!((fd - an).abs() <= 1e-8, "fd {} vs analytic {}", fd, an);
        }

        #[test]
        fn taps_agree_with_dense_evaluation(g in -2.0f64..12.0, extent in 1usize..10) {
            for spec in [Integer, Bilinear] {
                let taps = Taps::new(spec, g, extent);
                for n in 0..extent as i64 {
                    let dense = kernel_eval(spec, g, n).unwrap();
                    let sparse = taps.iter().find(|t| t.0 as i64 == n).map(|t| t.1).unwrap_or(0.0);
                    prop_assert_eq!(dense.to_bits(), sparse.to_bits());
                }
            }
        }
    }
}
