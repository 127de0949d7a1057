//! Directed accumulation (scatter) and its adjoint.
//!
//! Forward, for grids `k = 1..N` over the source extents:
//!
//! `V[c, t] = sum_k sum_s U[c, s] * prod_q K(G_q[k][s], t_q)`
//!
//! Backward reads the upstream gradient at each source pixel's target
//! coordinates, which is a grid-sampling read summed over grids. With one grid
//! the backward pass and [`crate::sampling::grid_sample`] perform the same
//! arithmetic in the same order.
//!
//! Votes landing outside the target are dropped. Each output cell receives its
//! terms in the order `k`, then source row, then source column, for both the
//! sequential and the parallel forward.

use rayon::prelude::*;

use crate::error::{invalid, mismatch, Result};
use crate::kernels::Taps;
use crate::reduce::exact_sum;
use crate::tensor::{FeatureMap, GridSet, KernelSpec};

pub const MAX_TARGET_DIMS: usize = 3;

fn check_grids(grids: &GridSet, source_dims: &[usize], target_dims: &[usize]) -> Result<()> {
    if grids.spatial() != source_dims {
        return Err(mismatch(format!(
            "grid spatial extents {:?} must equal source extents {:?}",
            grids.spatial(),
            source_dims
        )));
    }
    if target_dims.is_empty() || target_dims.len() > MAX_TARGET_DIMS {
        return Err(mismatch(format!(
            "target must have 1..={MAX_TARGET_DIMS} extents, got {target_dims:?}"
        )));
    }
    if target_dims.contains(&0) {
        return Err(invalid(format!(
            "target extents must be positive, got {target_dims:?}"
        )));
    }
    if grids.coord_dims() != target_dims.len() {
        return Err(mismatch(format!(
            "grids carry Q = {} coordinates but target has {} extents",
            grids.coord_dims(),
            target_dims.len()
        )));
    }
    for g in grids.grids() {
        g.ensure_finite()?;
    }
    Ok(())
}

fn strides(dims: &[usize]) -> [usize; MAX_TARGET_DIMS] {
    let mut s = [0; MAX_TARGET_DIMS];
    let mut acc = 1;
    for q in (0..dims.len()).rev() {
        s[q] = acc;
        acc *= dims[q];
    }
    s
}

/// Calls `f(target_flat, value * w_0 * w_1 * ...)` for every in-bounds vote of
/// one source location, axis 0 outermost.
#[inline]
fn for_each_vote(
    taps: &[Taps; MAX_TARGET_DIMS],
    q: usize,
    stride: &[usize; MAX_TARGET_DIMS],
    value: f64,
    mut f: impl FnMut(usize, f64),
) {
    match q {
        1 => {
            for (a, wa, _) in taps[0].iter() {
                f(a, value * wa);
            }
        }
        2 => {
            for (a, wa, _) in taps[0].iter() {
                for (b, wb, _) in taps[1].iter() {
                    f(a * stride[0] + b, value * wa * wb);
                }
            }
        }
        _ => {
            for (a, wa, _) in taps[0].iter() {
                for (b, wb, _) in taps[1].iter() {
                    for (c, wc, _) in taps[2].iter() {
                        f(a * stride[0] + b * stride[1] + c, value * wa * wb * wc);
                    }
                }
            }
        }
    }
}

#[inline]
fn taps_at(
    grid: &crate::tensor::SamplingGrid,
    s: usize,
    spec: KernelSpec,
    target_dims: &[usize],
) -> [Taps; MAX_TARGET_DIMS] {
    let mut taps = [Taps::new(spec, 0.0, 0); MAX_TARGET_DIMS];
    for (q, &extent) in target_dims.iter().enumerate() {
        taps[q] = Taps::new(spec, grid.coord(q, s), extent);
    }
    taps
}

/// Accumulates one channel into `out`, keeping only votes with flat target
/// index in `window` (offset so that `out[0]` is `window.start`).
fn accumulate_plane(
    plane: &[f64],
    grids: &GridSet,
    spec: KernelSpec,
    target_dims: &[usize],
    window: std::ops::Range<usize>,
    out: &mut [f64],
) {
    let q = target_dims.len();
    let stride = strides(target_dims);
    for grid in grids.grids() {
        for (s, &u) in plane.iter().enumerate() {
            let taps = taps_at(grid, s, spec, target_dims);
            for_each_vote(&taps, q, &stride, u, |t, v| {
                if window.contains(&t) {
                    out[t - window.start] += v;
                }
            });
        }
    }
}

fn output_shape(source: &FeatureMap, grids: &GridSet, target_dims: &[usize]) -> Result<usize> {
    source.require_2d()?;
    check_grids(grids, source.dims(), target_dims)?;
    Ok(target_dims.iter().product())
}

/// Scatters `source` into a `(C, target_dims...)` accumulator.
///
/// Parallel over channels and over bands of the leading target axis; bit-identical
/// to [`deda_forward_seq`].
pub fn deda_forward(
    source: &FeatureMap,
    grids: &GridSet,
    spec: KernelSpec,
    target_dims: &[usize],
) -> Result<FeatureMap> {
    let out_plane = output_shape(source, grids, target_dims)?;
    let c = source.channels();
    let lead = target_dims[0];
    let row = out_plane / lead;
    let bands = rayon::current_num_threads().clamp(1, lead);
    let band_rows = lead.div_ceil(bands);
    let band_len = band_rows * row;

    let mut data = vec![0.0; c * out_plane];
    data.par_chunks_mut(out_plane)
        .enumerate()
        .for_each(|(ch, out)| {
            let plane = source.channel(ch);
            out.par_chunks_mut(band_len)
                .enumerate()
                .for_each(|(b, band)| {
                    let start = b * band_len;
                    accumulate_plane(
                        plane,
                        grids,
                        spec,
                        target_dims,
                        start..start + band.len(),
                        band,
                    );
                });
        });
    Ok(FeatureMap::from_parts(c, target_dims.to_vec(), data))
}

/// Single-threaded reference accumulation.
pub fn deda_forward_seq(
    source: &FeatureMap,
    grids: &GridSet,
    spec: KernelSpec,
    target_dims: &[usize],
) -> Result<FeatureMap> {
    let out_plane = output_shape(source, grids, target_dims)?;
    let c = source.channels();
    let mut data = vec![0.0; c * out_plane];
    for (ch, out) in data.chunks_mut(out_plane).enumerate() {
        accumulate_plane(
            source.channel(ch),
            grids,
            spec,
            target_dims,
            0..out_plane,
            out,
        );
    }
    Ok(FeatureMap::from_parts(c, target_dims.to_vec(), data))
}

/// Gradient of a loss with respect to the source, given `upstream = dL/dV`.
pub fn deda_backward(
    upstream: &FeatureMap,
    grids: &GridSet,
    spec: KernelSpec,
    source_dims: &[usize],
) -> Result<FeatureMap> {
    let (h, w) = match source_dims {
        &[h, w] if h > 0 && w > 0 => (h, w),
        other => {
            return Err(mismatch(format!(
                "source extents must be 2D, got {other:?}"
            )))
        }
    };
    let target_dims = upstream.dims();
    check_grids(grids, source_dims, target_dims)?;
    let q = target_dims.len();
    let stride = strides(target_dims);
    let c = upstream.channels();
    let in_plane = h * w;

    let mut data = vec![0.0; c * in_plane];
    data.par_chunks_mut(in_plane)
        .enumerate()
        .for_each(|(ch, out)| {
            let a = upstream.channel(ch);
            out.par_iter_mut().enumerate().for_each(|(s, dst)| {
                let mut acc = 0.0;
                for grid in grids.grids() {
                    let taps = taps_at(grid, s, spec, target_dims);
                    match q {
                        1 => {
                            for (t0, w0, _) in taps[0].iter() {
                                acc += a[t0] * w0;
                            }
                        }
                        2 => {
                            for (t0, w0, _) in taps[0].iter() {
                                let row = &a[t0 * stride[0]..];
                                for (t1, w1, _) in taps[1].iter() {
                                    acc += row[t1] * w0 * w1;
                                }
                            }
                        }
                        _ => {
                            for (t0, w0, _) in taps[0].iter() {
                                for (t1, w1, _) in taps[1].iter() {
                                    for (t2, w2, _) in taps[2].iter() {
                                        acc +=
                                            a[t0 * stride[0] + t1 * stride[1] + t2] * w0 * w1 * w2;
                                    }
                                }
                            }
                        }
                    }
                }
                *dst = acc;
            });
        });
    Ok(FeatureMap::from_parts(c, vec![h, w], data))
}

/// Relative gap in the adjoint identity `<D(U), A> = <U, D^T(A)>`.
///
/// The target extents are taken from `probe`. Both inner products are
/// correctly rounded, so instances where the two sides are the same multiset of
/// products report exactly zero.
pub fn adjoint_check(
    source: &FeatureMap,
    probe: &FeatureMap,
    grids: &GridSet,
    spec: KernelSpec,
) -> Result<f64> {
    if probe.channels() != source.channels() {
        return Err(mismatch(format!(
            "probe has {} channels, source has {}",
            probe.channels(),
            source.channels()
        )));
    }
    let forward = deda_forward(source, grids, spec, probe.dims())?;
    let backward = deda_backward(probe, grids, spec, source.dims())?;
    let lhs = inner(&forward, probe)?;
    let rhs = inner(source, &backward)?;
    Ok((lhs - rhs).abs() / (lhs.abs() + f64::MIN_POSITIVE))
}

fn inner(a: &FeatureMap, b: &FeatureMap) -> Result<f64> {
    let products: Vec<f64> = a.data().iter().zip(b.data()).map(|(x, y)| x * y).collect();
    exact_sum(&products)
}
