use std::io::Write;

use dirac_core::datr::{datr_transform, datr_volume, DatrConfig};
use dirac_core::FeatureMap;
use serde::Serialize;

use crate::args::DatrArgs;
use crate::error::CliError;
use crate::files::{read_json, read_map, with_suffix, write_json, write_map, write_planes};

#[derive(Debug, Serialize)]
struct Peak {
    channel: usize,
    slice: Option<usize>,
    row: usize,
    col: usize,
    v_s: f64,
}

#[derive(Debug, Serialize)]
struct Sidecar<'a> {
    input: String,
    shape: Vec<usize>,
    config: &'a DatrConfig,
    radii: Vec<u32>,
    /// Location of the largest `v_s` per channel and slice; first in row-major order on ties.
    peaks: Vec<Peak>,
}

fn peaks(v_s: &FeatureMap) -> Vec<Peak> {
    let dims = v_s.dims();
    let (d, h, w) = match *dims {
        [h, w] => (1, h, w),
        [d, h, w] => (d, h, w),
        _ => unreachable!("rim maps are 2D or 3D"),
    };
    let mut out = Vec::new();
    for c in 0..v_s.channels() {
        for z in 0..d {
            let plane = &v_s.channel(c)[z * h * w..(z + 1) * h * w];
            let mut best = 0;
            for (i, v) in plane.iter().enumerate() {
                if *v > plane[best] {
                    best = i;
                }
            }
            out.push(Peak {
                channel: c,
                slice: (dims.len() == 3).then_some(z),
                row: best / w,
                col: best % w,
                v_s: plane[best],
            });
        }
    }
    out
}

pub fn run(args: &DatrArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg: DatrConfig = match &args.config {
        Some(p) => read_json(p)?,
        None => DatrConfig::default(),
    };
    if let Some(r) = &args.radii {
        cfg.radii = r.clone();
    }
    cfg.full_range |= args.full_range;
    let source = read_map(&args.input)?;
    let maps = match source.dims().len() {
        2 => datr_transform(&source, &cfg)?,
        3 => datr_volume(&source, &cfg)?,
        _ => {
            return Err(CliError::Usage(format!(
                "{}: expected a (C, H, W) map or (C, D, H, W) volume, got {:?}",
                args.input.display(),
                source.shape()
            )))
        }
    };
    let prefix = &args.out.output;
    write_map(&with_suffix(prefix, "vu", "dact"), &maps.v_u)?;
    write_map(&with_suffix(prefix, "vs", "dact"), &maps.v_s)?;
    write_planes(prefix, "vu", &maps.v_u, args.out.ascii)?;
    write_planes(prefix, "vs", &maps.v_s, args.out.ascii)?;

    let dims = source.dims();
    let (h, w) = (dims[dims.len() - 2], dims[dims.len() - 1]);
    let sidecar = Sidecar {
        input: args.input.display().to_string(),
        shape: source.shape(),
        config: &cfg,
        radii: cfg.effective_radii(h, w),
        peaks: peaks(&maps.v_s),
    };
    write_json(&with_suffix(prefix, "peaks", "json"), &sidecar)?;
    for p in &sidecar.peaks {
        match p.slice {
            Some(z) => writeln!(
                out,
                "channel {} slice {}: v_s peak {} at ({}, {})",
                p.channel, z, p.v_s, p.row, p.col
            )?,
            None => writeln!(
                out,
                "channel {}: v_s peak {} at ({}, {})",
                p.channel, p.v_s, p.row, p.col
            )?,
        }
    }
    Ok(())
}
