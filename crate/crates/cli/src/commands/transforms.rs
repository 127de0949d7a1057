use std::f64::consts::PI;
use std::io::Write;

use dirac_core::transforms::{hough_lines, hough_theta, polar_resample, radon_projection};
use dirac_core::FeatureMap;
use serde::Serialize;

use crate::args::{HoughArgs, PolarArgs, RadonArgs};
use crate::error::CliError;
use crate::files::{read_map, with_suffix, write_json, write_map, write_planes};

fn read_plane_map(path: &std::path::Path) -> Result<(FeatureMap, usize, usize), CliError> {
    let map = read_map(path)?;
    match *map.dims() {
        [h, w] => Ok((map, h, w)),
        _ => Err(CliError::Usage(format!(
            "{}: expected a (C, H, W) map, got {:?}",
            path.display(),
            map.shape()
        ))),
    }
}

fn diagonal(h: usize, w: usize) -> f64 {
    ((h * h + w * w) as f64).sqrt()
}

fn positive(name: &str, v: usize) -> Result<usize, CliError> {
    if v == 0 {
        return Err(CliError::Usage(format!("{name} must be positive")));
    }
    Ok(v)
}

fn save(
    prefix: &std::path::Path,
    part: &str,
    map: &FeatureMap,
    ascii: bool,
) -> Result<(), CliError> {
    write_map(&with_suffix(prefix, part, "dact"), map)?;
    write_planes(prefix, part, map, ascii)?;
    Ok(())
}

/// Sinogram of shape `(C, angles, bins)`; row `a` is the projection at `pi * a / angles`.
pub fn radon(args: &RadonArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (src, h, w) = read_plane_map(&args.input)?;
    let angles = positive("--angles", args.angles)?;
    let bins = positive(
        "--bins",
        args.bins.unwrap_or_else(|| diagonal(h, w).ceil() as usize),
    )?;
    let mut data = vec![0.0; src.channels() * angles * bins];
    for a in 0..angles {
        let p = radon_projection(&src, PI * a as f64 / angles as f64, bins)?;
        for c in 0..src.channels() {
            let dst = (c * angles + a) * bins;
            data[dst..dst + bins].copy_from_slice(p.channel(c));
        }
    }
    let sino = FeatureMap::new(src.channels(), &[angles, bins], data)?;
    save(&args.out.output, "radon", &sino, args.out.ascii)?;
    writeln!(out, "sinogram {} angles x {} bins", angles, bins)?;
    Ok(())
}

#[derive(Serialize)]
struct HoughPeak {
    channel: usize,
    rho_bin: usize,
    theta_bin: usize,
    theta: f64,
    votes: f64,
}

/// Accumulator of shape `(C, rho, theta)` plus the strongest line per channel.
pub fn hough(args: &HoughArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (src, h, w) = read_plane_map(&args.input)?;
    let num_rho = positive(
        "--rho",
        args.rho
            .unwrap_or_else(|| 2 * diagonal(h, w).ceil() as usize + 1),
    )?;
    let num_theta = positive("--theta", args.theta)?;
    let acc = hough_lines(&src, num_rho, num_theta)?;
    save(&args.out.output, "hough", &acc, args.out.ascii)?;
    let peaks: Vec<HoughPeak> = (0..acc.channels())
        .map(|c| {
            let flat = acc.argmax_flat(c);
            HoughPeak {
                channel: c,
                rho_bin: flat / num_theta,
                theta_bin: flat % num_theta,
                theta: hough_theta(flat % num_theta, num_theta),
                votes: acc.channel(c)[flat],
            }
        })
        .collect();
    write_json(&with_suffix(&args.out.output, "hough", "json"), &peaks)?;
    for p in &peaks {
        writeln!(
            out,
            "channel {}: peak {} votes at rho bin {}, theta {:.6}",
            p.channel, p.votes, p.rho_bin, p.theta
        )?;
    }
    Ok(())
}

/// Polar raster of shape `(C, radii, angles)`.
pub fn polar(args: &PolarArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (src, h, w) = read_plane_map(&args.input)?;
    let center = match args.center.as_deref() {
        Some(&[x, y]) => (x, y),
        Some(_) => return Err(CliError::Usage("--center takes row,col".into())),
        None => ((h as f64 - 1.0) / 2.0, (w as f64 - 1.0) / 2.0),
    };
    let num_r = positive("--num-radii", args.num_radii.unwrap_or(h.min(w) / 2))?;
    let angles = positive("--angles", args.angles)?;
    let p = polar_resample(&src, center, num_r, angles)?;
    save(&args.out.output, "polar", &p, args.out.ascii)?;
    writeln!(
        out,
        "polar raster {} radii x {} angles around ({}, {})",
        num_r, angles, center.0, center.1
    )?;
    Ok(())
}
