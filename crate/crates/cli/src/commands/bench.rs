use std::io::Write;
use std::path::Path;

use dirac_core::bench::{
    generate_dataset, run_benchmark, subject_of, BenchCase, BenchConfig, BenchResult, FoldMetrics,
    MetricsReport,
};
use dirac_core::synth::LesionKind;
use serde::Serialize;

use super::generate::{load_config, ManifestRow};
use crate::args::BenchArgs;
use crate::error::CliError;
use crate::files::{csv_bytes, read_map, with_suffix, write_atomic, write_json};

fn read_manifest(path: &Path) -> Result<Vec<BenchCase>, CliError> {
    let parse_err = |msg: String| CliError::Parse {
        path: path.to_path_buf(),
        msg,
    };
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut cases = Vec::new();
    for (line, row) in csv::Reader::from_reader(file)
        .deserialize::<ManifestRow>()
        .enumerate()
    {
        let row = row.map_err(|e| parse_err(format!("row {}: {e}", line + 1)))?;
        let kind: LesionKind = row
            .kind
            .parse()
            .map_err(|e: dirac_core::Error| parse_err(format!("row {}: {e}", line + 1)))?;
        cases.push(BenchCase {
            subject: subject_of(&row.id).to_string(),
            id: row.id,
            label: kind.is_positive(),
            patch: read_map(&base.join(&row.file))?,
        });
    }
    if cases.is_empty() {
        return Err(parse_err("manifest lists no lesions".into()));
    }
    Ok(cases)
}

#[derive(Serialize)]
struct MetricsFile<'a> {
    lesions: usize,
    positives: usize,
    seed: u64,
    folds: usize,
    report: &'a MetricsReport,
    per_fold: &'a [FoldMetrics],
}

#[derive(Serialize)]
struct FoldRow<'a> {
    subject: &'a str,
    rim_count: u32,
    group: usize,
    fold: usize,
}

#[derive(Serialize)]
struct ScoreRow<'a> {
    id: &'a str,
    subject: &'a str,
    label: bool,
    score: f64,
}

fn write_outputs(
    prefix: &Path,
    cases: &[BenchCase],
    result: &BenchResult,
    cfg: &BenchConfig,
) -> Result<(), CliError> {
    write_atomic(
        &with_suffix(prefix, "metrics", "csv"),
        &csv_bytes(&[&result.report])?,
    )?;
    write_json(
        &with_suffix(prefix, "metrics", "json"),
        &MetricsFile {
            lesions: cases.len(),
            positives: cases.iter().filter(|c| c.label).count(),
            seed: cfg.seed,
            folds: cfg.folds,
            report: &result.report,
            per_fold: &result.per_fold,
        },
    )?;
    let folds: Vec<FoldRow> = result
        .folds
        .entries
        .iter()
        .map(|e| FoldRow {
            subject: &e.id,
            rim_count: e.rim_count,
            group: e.group,
            fold: e.fold,
        })
        .collect();
    write_atomic(&with_suffix(prefix, "folds", "csv"), &csv_bytes(&folds)?)?;
    let scores: Vec<ScoreRow> = cases
        .iter()
        .zip(&result.scores)
        .map(|(c, &score)| ScoreRow {
            id: &c.id,
            subject: &c.subject,
            label: c.label,
            score,
        })
        .collect();
    write_atomic(&with_suffix(prefix, "scores", "csv"), &csv_bytes(&scores)?)
}

pub fn run(args: &BenchArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg = load_config(args.config.as_deref())?;
    cfg.seed = args.seed;
    if let Some(r) = &args.radii {
        cfg.datr.radii = r.clone();
    }
    let cases: Vec<BenchCase> = match (&args.manifest, args.generate) {
        (Some(path), _) => read_manifest(path)?,
        (None, Some(n)) => {
            cfg.count = n;
            generate_dataset(&cfg)?
                .iter()
                .map(BenchCase::from)
                .collect()
        }
        (None, None) => return Err(CliError::Usage("give --manifest or --generate".into())),
    };
    let result = run_benchmark(&cases, &cfg.datr, cfg.folds, cfg.seed)?;
    write_outputs(&args.output, &cases, &result, &cfg)?;

    let r = &result.report;
    writeln!(
        out,
        "lesions {} (rim+ {})",
        cases.len(),
        cases.iter().filter(|c| c.label).count()
    )?;
    writeln!(
        out,
        "accuracy {:.4}  f1 {:.4}  sensitivity {:.4}  specificity {:.4}  precision {:.4}",
        r.accuracy, r.f1, r.sensitivity, r.specificity, r.precision
    )?;
    writeln!(
        out,
        "roc_auc {:.4}  proc_auc {:.4}  pr_auc {:.4}",
        r.roc_auc, r.proc_auc, r.pr_auc
    )?;
    match (r.pearson_rho, r.mse) {
        (Some(rho), Some(mse)) => writeln!(out, "subject counts: rho {rho:.4}  mse {mse:.4}")?,
        _ => writeln!(out, "subject counts: correlation undefined")?,
    }
    Ok(())
}
