//! Analytic gradients against central finite differences on random instances.
//!
//! Grid coordinates are drawn at least 1e-3 away from integers and
//! half-integers, where the kernels have kinks or jumps.

use std::io::Write;

use dirac_core::deda::{adjoint_check, deda_backward, deda_forward};
use dirac_core::sampling::{grid_sample, grid_sample_backward};
use dirac_core::{FeatureMap, GridSet, KernelSpec, SamplingGrid};
use rand::Rng;

use crate::args::GradcheckArgs;
use crate::error::CliError;

pub const STEP: f64 = 1e-5;
pub const GRADIENT_TOL: f64 = 1e-4;
pub const ADJOINT_TOL: f64 = 1e-12;
pub const MAX_SIZE: usize = 16;

/// `|a - f| / max(|a|, |f|, 1e-3)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GradReport {
    pub deda_source: f64,
    pub sample_source: f64,
    pub sample_grid: f64,
    /// Largest absolute grid gradient; zero for the integer kernel.
    pub grid_grad_abs: f64,
    pub adjoint: f64,
}

impl GradReport {
    pub fn passed(&self) -> bool {
        self.deda_source <= GRADIENT_TOL
            && self.sample_source <= GRADIENT_TOL
            && self.sample_grid <= GRADIENT_TOL
            && self.adjoint <= ADJOINT_TOL
    }

    fn merge(&mut self, o: GradReport) {
        self.deda_source = self.deda_source.max(o.deda_source);
        self.sample_source = self.sample_source.max(o.sample_source);
        self.sample_grid = self.sample_grid.max(o.sample_grid);
        self.grid_grad_abs = self.grid_grad_abs.max(o.grid_grad_abs);
        self.adjoint = self.adjoint.max(o.adjoint);
    }
}

fn coordinate<R: Rng>(rng: &mut R, extent: usize) -> f64 {
    loop {
        let v: f64 = rng.random_range(-1.0..extent as f64);
        let frac = v - v.floor();
        if frac > 1e-3 && (frac - 0.5).abs() > 1e-3 && frac < 1.0 - 1e-3 {
            return v;
        }
    }
}

fn random_map<R: Rng>(rng: &mut R, c: usize, h: usize, w: usize) -> FeatureMap {
    FeatureMap::new(
        c,
        &[h, w],
        (0..c * h * w)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect(),
    )
    .expect("finite values")
}

fn random_grid<R: Rng>(rng: &mut R, spatial: [usize; 2], target: [usize; 2]) -> SamplingGrid {
    let plane = spatial[0] * spatial[1];
    let coords = target
        .iter()
        .flat_map(|&t| (0..plane).map(move |_| t))
        .map(|t| coordinate(rng, t))
        .collect();
    SamplingGrid::new(2, &spatial, coords).expect("finite coordinates")
}

fn dot(a: &FeatureMap, b: &FeatureMap) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

fn nudged(map: &FeatureMap, idx: usize, delta: f64) -> FeatureMap {
    let mut data = map.data().to_vec();
    data[idx] += delta;
    FeatureMap::new(map.channels(), map.dims(), data).expect("finite values")
}

/// One random instance at `size x size` with `num_grids` grids.
pub fn check_instance<R: Rng>(
    rng: &mut R,
    size: usize,
    num_grids: usize,
    spec: KernelSpec,
) -> dirac_core::Result<GradReport> {
    let dims = [size, size];
    let mut r = GradReport::default();

    let u = random_map(rng, 2, size, size);
    let grids = GridSet::new(
        (0..num_grids)
            .map(|_| random_grid(rng, dims, dims))
            .collect(),
    )?;
    let a = random_map(rng, 2, size, size);
    let grad = deda_backward(&a, &grids, spec, &dims)?;
    let loss = |m: &FeatureMap| -> dirac_core::Result<f64> {
        Ok(dot(&deda_forward(m, &grids, spec, &dims)?, &a))
    };
    for idx in 0..u.data().len() {
        let fd = (loss(&nudged(&u, idx, STEP))? - loss(&nudged(&u, idx, -STEP))?) / (2.0 * STEP);
        r.deda_source = r.deda_source.max(relative_error(grad.data()[idx], fd));
    }
    r.adjoint = adjoint_check(&u, &a, &grids, spec)?;

    let grid = random_grid(rng, dims, dims);
    let grads = grid_sample_backward(&a, &u, &grid, spec)?;
    let loss = |m: &FeatureMap, g: &SamplingGrid| -> dirac_core::Result<f64> {
        Ok(dot(&grid_sample(m, g, spec)?, &a))
    };
    for idx in 0..u.data().len() {
        let fd = (loss(&nudged(&u, idx, STEP), &grid)? - loss(&nudged(&u, idx, -STEP), &grid)?)
            / (2.0 * STEP);
        r.sample_source = r
            .sample_source
            .max(relative_error(grads.source.data()[idx], fd));
    }
    for idx in 0..grid.coords().len() {
        let shifted = |d: f64| {
            let mut c = grid.coords().to_vec();
            c[idx] += d;
            SamplingGrid::new(2, grid.spatial(), c)
        };
        let fd = (loss(&u, &shifted(STEP)?)? - loss(&u, &shifted(-STEP)?)?) / (2.0 * STEP);
        let analytic = grads.grid.coords()[idx];
        r.sample_grid = r.sample_grid.max(relative_error(analytic, fd));
        r.grid_grad_abs = r.grid_grad_abs.max(analytic.abs());
    }
    Ok(r)
}

pub fn run_checks(
    size: usize,
    num_grids: usize,
    instances: usize,
    spec: KernelSpec,
    seed: u64,
) -> dirac_core::Result<GradReport> {
    let mut rng = dirac_core::synth::rng(seed);
    let mut total = GradReport::default();
    for _ in 0..instances {
        total.merge(check_instance(&mut rng, size, num_grids, spec)?);
    }
    Ok(total)
}

pub fn run(args: &GradcheckArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if !(2..=MAX_SIZE).contains(&args.size) {
        return Err(CliError::Usage(format!(
            "--size must lie in 2..={MAX_SIZE}, got {}",
            args.size
        )));
    }
    if args.instances == 0 || args.grids == 0 {
        return Err(CliError::Usage(
            "--instances and --grids must be positive".into(),
        ));
    }
    let spec = KernelSpec::from(args.kernel);
    let r = run_checks(args.size, args.grids, args.instances, spec, args.seed)?;
    writeln!(
        out,
        "gradcheck kernel={spec:?} size={0}x{0} grids={1} instances={2} seed={3}",
        args.size, args.grids, args.instances, args.seed
    )?;
    writeln!(
        out,
        "deda_backward source     max rel err {:.3e}",
        r.deda_source
    )?;
    writeln!(
        out,
        "grid_sample_backward src max rel err {:.3e}",
        r.sample_source
    )?;
    writeln!(
        out,
        "grid_sample_backward grd max rel err {:.3e}",
        r.sample_grid
    )?;
    writeln!(
        out,
        "grid gradient            max abs     {:.3e}",
        r.grid_grad_abs
    )?;
    writeln!(
        out,
        "adjoint identity         max rel gap {:.3e}",
        r.adjoint
    )?;
    if r.passed() {
        writeln!(out, "PASS")?;
        Ok(())
    } else {
        writeln!(out, "FAIL")?;
        Err(CliError::CheckFailed(format!(
            "gradient error above {GRADIENT_TOL:e} or adjoint gap above {ADJOINT_TOL:e}"
        )))
    }
}
