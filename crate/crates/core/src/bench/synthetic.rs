//! End-to-end benchmark on generated lesion patches.
//!
//! Lesions are spread over subjects with uneven loads so that the rim+ count
//! groups used for stratification are populated. Lesion ids have the form
//! `<subject>-l<index>`.
//!
//! Evaluation follows cross-validation: for every fold the F1-optimal
//! threshold is fitted on the other folds and applied to the held-out lesions.
//! Confusion metrics and subject counts come from those held-out predictions.
//! Curve areas use the pooled scores, which do not depend on the folds.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::classifier::peak_feature_classifier;
use super::folds::{stratified_folds, FoldAssignment};
use super::metrics::{
    best_f1_threshold, classify_scores, f1_score, partial_roc_auc, pr_auc, roc_auc, subject_counts,
    Confusion, LesionOutcome, MetricsReport, PARTIAL_FPR,
};
use crate::datr::DatrConfig;
use crate::error::{invalid, Result};
use crate::synth::{generate_lesion, LesionKind, LesionSpec};
use crate::tensor::FeatureMap;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    /// Number of lesion patches.
    pub count: usize,
    pub seed: u64,
    /// Share of rim+ lesions; 1/11 gives roughly one rim+ per ten rim-.
    pub positive_fraction: f64,
    /// Patch extents, `[H, W]`.
    pub dims: Vec<usize>,
    /// Noise standard deviation relative to the rim contrast.
    pub noise_rel: f64,
    pub folds: usize,
    pub datr: DatrConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            count: 500,
            seed: 7,
            positive_fraction: 1.0 / 11.0,
            dims: vec![40, 40],
            noise_rel: 0.05,
            folds: 5,
            datr: DatrConfig::default(),
        }
    }
}

/// Rim contrast over the interior for generated rim+ lesions.
pub const RIM_CONTRAST: f64 = 1.0;

/// One labeled patch.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticCase {
    pub id: String,
    pub subject: String,
    pub spec: LesionSpec,
    pub patch: FeatureMap,
}

impl SyntheticCase {
    pub fn label(&self) -> bool {
        self.spec.kind.is_positive()
    }
}

/// A scored lesion as the benchmark sees it: identity, label and image.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchCase {
    pub id: String,
    pub subject: String,
    pub label: bool,
    pub patch: FeatureMap,
}

impl From<&SyntheticCase> for BenchCase {
    fn from(c: &SyntheticCase) -> Self {
        BenchCase {
            id: c.id.clone(),
            subject: c.subject.clone(),
            label: c.label(),
            patch: c.patch.clone(),
        }
    }
}

/// Subject part of a lesion id.
pub fn subject_of(id: &str) -> &str {
    id.split_once("-l").map_or(id, |(s, _)| s)
}

fn uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Lesion parameters for generated case `index`.
fn draw_spec<R: Rng>(rng: &mut R, kind: LesionKind, dims: &[usize], noise_rel: f64) -> LesionSpec {
    let center = dims
        .iter()
        .map(|&d| (d as f64 - 1.0) / 2.0 + uniform(rng, -0.5, 0.5))
        .collect();
    let radius = uniform(rng, 5.0, 15.0);
    let rim_width = uniform(rng, 1.5, 2.5);
    let (rim_intensity, interior_intensity) = match kind {
        LesionKind::RimPositive => {
            let interior = uniform(rng, 0.1, 0.4);
            (interior + RIM_CONTRAST, interior)
        }
        LesionKind::RimNegative => {
            let interior = uniform(rng, 0.3, 1.0);
            (interior, interior)
        }
    };
    LesionSpec {
        kind,
        center,
        radius,
        rim_width,
        rim_intensity,
        interior_intensity,
        noise_sigma: noise_rel * RIM_CONTRAST,
        seed: rng.random(),
    }
}

pub fn generate_dataset(cfg: &BenchConfig) -> Result<Vec<SyntheticCase>> {
    if cfg.count < 2 {
        return Err(invalid("a benchmark needs at least two lesions"));
    }
    if cfg.dims.len() != 2 {
        return Err(invalid(format!(
            "benchmark patches are 2D, got {:?}",
            cfg.dims
        )));
    }
    if !(cfg.noise_rel >= 0.0 && cfg.noise_rel.is_finite()) {
        return Err(invalid("noise level must be non-negative"));
    }
    let positives =
        ((cfg.count as f64 * cfg.positive_fraction).round() as usize).clamp(1, cfg.count - 1);
    let mut rng = crate::synth::rng(cfg.seed);

    let num_subjects = (cfg.count / 10).max(cfg.folds);
    let load = Normal::new(0.0f64, 0.8).expect("valid normal");
    let weights: Vec<f64> = (0..num_subjects)
        .map(|_| load.sample(&mut rng).exp())
        .collect();
    let total: f64 = weights.iter().sum();

    let mut kinds = vec![LesionKind::RimNegative; cfg.count];
    kinds[..positives].fill(LesionKind::RimPositive);
    rand::seq::SliceRandom::shuffle(kinds.as_mut_slice(), &mut rng);

    let mut per_subject = vec![0usize; num_subjects];
    let mut cases = Vec::with_capacity(cfg.count);
    for kind in kinds {
        let mut pick = uniform(&mut rng, 0.0, total);
        let mut subject = num_subjects - 1;
        for (s, w) in weights.iter().enumerate() {
            if pick < *w {
                subject = s;
                break;
            }
            pick -= w;
        }
        let spec = draw_spec(&mut rng, kind, &cfg.dims, cfg.noise_rel);
        let (patch, spec) = generate_lesion(&spec, &cfg.dims)?;
        let subject_id = format!("s{subject:03}");
        let id = format!("{subject_id}-l{:04}", per_subject[subject]);
        per_subject[subject] += 1;
        cases.push(SyntheticCase {
            id,
            subject: subject_id,
            spec,
            patch,
        });
    }
    Ok(cases)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub lesions: usize,
    pub positives: usize,
    /// Threshold fitted on the other folds.
    pub threshold: f64,
    /// Curve and confusion metrics within this fold, when both classes occur.
    pub report: Option<MetricsReport>,
}

#[derive(Clone, Debug)]
pub struct BenchResult {
    pub report: MetricsReport,
    pub per_fold: Vec<FoldMetrics>,
    pub folds: FoldAssignment,
    pub scores: Vec<f64>,
}

/// Scores `cases` with the peak-feature classifier and evaluates them over
/// subject-stratified folds.
pub fn run_benchmark(
    cases: &[BenchCase],
    datr: &DatrConfig,
    folds: usize,
    seed: u64,
) -> Result<BenchResult> {
    let labels: Vec<bool> = cases.iter().map(|c| c.label).collect();
    let patches: Vec<FeatureMap> = cases.iter().map(|c| c.patch.clone()).collect();
    let scores = peak_feature_classifier(&patches, datr)?;
    // validates class balance before any fold work
    roc_auc(&labels, &scores)?;

    let mut subjects: BTreeMap<&str, u32> = BTreeMap::new();
    for c in cases {
        *subjects.entry(c.subject.as_str()).or_default() += u32::from(c.label);
    }
    let subject_list: Vec<(String, u32)> =
        subjects.iter().map(|(s, n)| (s.to_string(), *n)).collect();
    let assignment = stratified_folds(&subject_list, folds, seed)?;
    let fold_of: BTreeMap<&str, usize> = assignment
        .entries
        .iter()
        .map(|e| (e.id.as_str(), e.fold))
        .collect();
    let case_fold: Vec<usize> = cases.iter().map(|c| fold_of[c.subject.as_str()]).collect();

    let mut predicted = vec![false; cases.len()];
    let mut pooled = Confusion::default();
    let mut per_fold = Vec::with_capacity(folds);
    for f in 0..folds {
        let (train, test): (Vec<usize>, Vec<usize>) =
            (0..cases.len()).partition(|&i| case_fold[i] != f);
        let pick = |idx: &[usize]| -> (Vec<bool>, Vec<f64>) {
            (
                idx.iter().map(|&i| labels[i]).collect(),
                idx.iter().map(|&i| scores[i]).collect(),
            )
        };
        let (train_y, train_s) = pick(&train);
        let threshold = match best_f1_threshold(&train_y, &train_s) {
            Ok((t, _)) => t,
            // a training split without both classes predicts nothing positive
            Err(_) => f64::INFINITY,
        };
        for &i in &test {
            predicted[i] = scores[i] >= threshold;
        }
        let (test_y, test_s) = pick(&test);
        let test_pred: Vec<bool> = test.iter().map(|&i| predicted[i]).collect();
        pooled.add(Confusion::from_predictions(&test_y, &test_pred));
        per_fold.push(FoldMetrics {
            fold: f,
            lesions: test.len(),
            positives: test_y.iter().filter(|&&y| y).count(),
            threshold,
            report: classify_scores(&test_y, &test_s).ok(),
        });
    }

    let mut by_subject: BTreeMap<&str, Vec<LesionOutcome>> = BTreeMap::new();
    for (i, c) in cases.iter().enumerate() {
        by_subject
            .entry(c.subject.as_str())
            .or_default()
            .push(LesionOutcome {
                predicted: predicted[i],
                actual: labels[i],
            });
    }
    let grouped: Vec<Vec<LesionOutcome>> = by_subject.into_values().collect();
    let agreement = subject_counts(&grouped).ok();

    let finite: Vec<f64> = per_fold
        .iter()
        .map(|f| f.threshold)
        .filter(|t| t.is_finite())
        .collect();
    let threshold = if finite.is_empty() {
        f64::INFINITY
    } else {
        finite.iter().sum::<f64>() / finite.len() as f64
    };
    let precision = pooled.precision();
    let sensitivity = pooled.sensitivity();
    let report = MetricsReport {
        accuracy: pooled.accuracy(),
        f1: f1_score(precision, sensitivity),
        sensitivity,
        specificity: pooled.specificity(),
        precision,
        roc_auc: roc_auc(&labels, &scores)?,
        proc_auc: partial_roc_auc(&labels, &scores, PARTIAL_FPR)?,
        pr_auc: pr_auc(&labels, &scores)?,
        pearson_rho: agreement.map(|a| a.rho),
        mse: agreement.map(|a| a.mse),
        threshold,
    };
    Ok(BenchResult {
        report,
        per_fold,
        folds: assignment,
        scores,
    })
}
