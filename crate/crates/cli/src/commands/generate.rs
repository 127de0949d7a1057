use std::io::Write;
use std::path::Path;

use dirac_core::bench::{generate_dataset, BenchConfig};
use serde::{Deserialize, Serialize};

use crate::args::GenerateArgs;
use crate::error::CliError;
use crate::files::{csv_bytes, read_json, write_atomic, write_map, write_plane};

pub const MANIFEST: &str = "manifest.csv";

/// One manifest row. `center` is `row;col`; `file` is relative to the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub id: String,
    pub kind: String,
    pub radius: f64,
    pub center: String,
    pub seed: u64,
    pub file: String,
}

pub fn load_config(path: Option<&Path>) -> Result<BenchConfig, CliError> {
    match path {
        Some(p) => read_json(p),
        None => Ok(BenchConfig::default()),
    }
}

pub fn run(args: &GenerateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg = load_config(args.config.as_deref())?;
    cfg.count = args.count;
    cfg.seed = args.seed;
    let cases = generate_dataset(&cfg)?;
    std::fs::create_dir_all(&args.output).map_err(|e| CliError::io(&args.output, e))?;

    let mut rows = Vec::with_capacity(cases.len());
    for c in &cases {
        let file = format!("{}.dact", c.id);
        write_map(&args.output.join(&file), &c.patch)?;
        let (h, w) = c.patch.require_2d()?;
        write_plane(
            &args.output.join(format!("{}.pgm", c.id)),
            c.patch.data(),
            h,
            w,
            args.ascii,
        )?;
        rows.push(ManifestRow {
            id: c.id.clone(),
            kind: c.spec.kind.as_str().to_string(),
            radius: c.spec.radius,
            center: c
                .spec
                .center
                .iter()
                .map(f64::to_string)
                .collect::<Vec<_>>()
                .join(";"),
            seed: c.spec.seed,
            file,
        });
    }
    write_atomic(&args.output.join(MANIFEST), &csv_bytes(&rows)?)?;
    let positives = cases.iter().filter(|c| c.label()).count();
    writeln!(
        out,
        "wrote {} patches ({} rim+) to {}",
        cases.len(),
        positives,
        args.output.display()
    )?;
    Ok(())
}
