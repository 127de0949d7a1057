//! Grid sampling: the gather-side dual of directed accumulation.
//!
//! `V[c, p] = sum_n sum_m U[c, n, m] * K(Gx[p], n) * K(Gy[p], m)`
//!
//! The output takes the grid's spatial extents. Coordinates whose support falls
//! outside the source contribute nothing (zero padding).

use rayon::prelude::*;

use crate::error::{mismatch, Result};
use crate::kernels::Taps;
use crate::tensor::{FeatureMap, KernelSpec, SamplingGrid};

fn check_inputs(source: &FeatureMap, grid: &SamplingGrid) -> Result<(usize, usize, usize)> {
    let (h, w) = source.require_2d()?;
    if grid.coord_dims() != 2 {
        return Err(mismatch(format!(
            "grid sampling needs Q = 2 coordinates, got {}",
            grid.coord_dims()
        )));
    }
    if grid.spatial().len() != 2 {
        return Err(mismatch(format!(
            "grid must be 2D over output cells, got {:?}",
            grid.spatial()
        )));
    }
    grid.ensure_finite()?;
    Ok((h, w, grid.plane_len()))
}

#[inline]
fn sample_cell(plane: &[f64], w: usize, tx: &Taps, ty: &Taps) -> f64 {
    let mut acc = 0.0;
    for (n, wx, _) in tx.iter() {
        let row = &plane[n * w..(n + 1) * w];
        for (m, wy, _) in ty.iter() {
            acc += row[m] * wx * wy;
        }
    }
    acc
}

fn sample_plane(
    plane: &[f64],
    (h, w): (usize, usize),
    grid: &SamplingGrid,
    spec: KernelSpec,
    out: &mut [f64],
) {
    let (gx, gy) = (grid.axis(0), grid.axis(1));
    for (p, o) in out.iter_mut().enumerate() {
        let tx = Taps::new(spec, gx[p], h);
        let ty = Taps::new(spec, gy[p], w);
        *o = sample_cell(plane, w, &tx, &ty);
    }
}

/// Reads `source` at every grid location. Output shape is `(C, grid spatial...)`.
pub fn grid_sample(
    source: &FeatureMap,
    grid: &SamplingGrid,
    spec: KernelSpec,
) -> Result<FeatureMap> {
    let (h, w, out_plane) = check_inputs(source, grid)?;
    let c = source.channels();
    let mut data = vec![0.0; c * out_plane];
    data.par_chunks_mut(out_plane)
        .enumerate()
        .for_each(|(ch, out)| sample_plane(source.channel(ch), (h, w), grid, spec, out));
    Ok(FeatureMap::from_parts(c, grid.spatial().to_vec(), data))
}

/// Single-threaded reference for [`grid_sample`].
pub fn grid_sample_seq(
    source: &FeatureMap,
    grid: &SamplingGrid,
    spec: KernelSpec,
) -> Result<FeatureMap> {
    let (h, w, out_plane) = check_inputs(source, grid)?;
    let c = source.channels();
    let mut data = vec![0.0; c * out_plane];
    for (ch, out) in data.chunks_mut(out_plane).enumerate() {
        sample_plane(source.channel(ch), (h, w), grid, spec, out);
    }
    Ok(FeatureMap::from_parts(c, grid.spatial().to_vec(), data))
}

/// Gradients of a loss with respect to the source map and the grid coordinates.
#[derive(Clone, Debug)]
pub struct SampleGrads {
    pub source: FeatureMap,
    pub grid: SamplingGrid,
}

/// Backward pass of [`grid_sample`] given `upstream = dL/dV`.
pub fn grid_sample_backward(
    upstream: &FeatureMap,
    source: &FeatureMap,
    grid: &SamplingGrid,
    spec: KernelSpec,
) -> Result<SampleGrads> {
    let (h, w, out_plane) = check_inputs(source, grid)?;
    let c = source.channels();
    if upstream.channels() != c || upstream.dims() != grid.spatial() {
        return Err(mismatch(format!(
            "upstream {:?} does not match sampled output {:?}",
            upstream.shape(),
            std::iter::once(c)
                .chain(grid.spatial().iter().copied())
                .collect::<Vec<_>>()
        )));
    }
    let (gx, gy) = (grid.axis(0), grid.axis(1));
    let taps: Vec<(Taps, Taps)> = (0..out_plane)
        .map(|p| (Taps::new(spec, gx[p], h), Taps::new(spec, gy[p], w)))
        .collect();

    let in_plane = h * w;
    let mut grad_source = vec![0.0; c * in_plane];
    grad_source
        .par_chunks_mut(in_plane)
        .enumerate()
        .for_each(|(ch, dst)| {
            let up = upstream.channel(ch);
            for (p, (tx, ty)) in taps.iter().enumerate() {
                let a = up[p];
                for (n, wx, _) in tx.iter() {
                    for (m, wy, _) in ty.iter() {
                        dst[n * w + m] += a * wx * wy;
                    }
                }
            }
        });

    let mut grad_grid = vec![0.0; 2 * out_plane];
    let (ggx, ggy) = grad_grid.split_at_mut(out_plane);
    ggx.par_iter_mut()
        .zip(ggy.par_iter_mut())
        .enumerate()
        .for_each(|(p, (dx, dy))| {
            let (tx, ty) = &taps[p];
            for ch in 0..c {
                let a = upstream.channel(ch)[p];
                let plane = source.channel(ch);
                let mut sx = 0.0;
                let mut sy = 0.0;
                for (n, wx, slope_x) in tx.iter() {
                    for (m, wy, slope_y) in ty.iter() {
                        let u = plane[n * w + m];
                        sx += u * slope_x * wy;
                        sy += u * wx * slope_y;
                    }
                }
                *dx += a * sx;
                *dy += a * sy;
            }
        });

    Ok(SampleGrads {
        source: FeatureMap::from_parts(c, vec![h, w], grad_source),
        grid: SamplingGrid::new(2, grid.spatial(), grad_grid)?,
    })
}
