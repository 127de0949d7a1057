//! Lesion-level classification metrics and subject-level count agreement.
//!
//! Curves are built from distinct score thresholds, highest first; tied scores
//! enter together. ROC AUC integrates the curve with trapezoids. The partial
//! ROC AUC over false-positive rates `(0, 0.1)` and the PR AUC treat each curve
//! as piecewise constant between its points. The partial area is divided by
//! 0.1 so a perfect ranking scores 1.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Upper false-positive rate of the partial ROC area.
pub const PARTIAL_FPR: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub f1: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub precision: f64,
    pub roc_auc: f64,
    pub proc_auc: f64,
    pub pr_auc: f64,
    /// Subject-level Pearson correlation of rim+ counts, when computed.
    pub pearson_rho: Option<f64>,
    /// Subject-level mean squared count error, when computed.
    pub mse: Option<f64>,
    pub threshold: f64,
}

/// Harmonic mean of precision and sensitivity; zero when both are zero.
pub fn f1_score(precision: f64, sensitivity: f64) -> f64 {
    let denom = precision + sensitivity;
    if denom > 0.0 {
        2.0 * precision * sensitivity / denom
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Confusion {
    pub fn from_predictions(labels: &[bool], predicted: &[bool]) -> Self {
        let mut c = Confusion::default();
        for (&y, &p) in labels.iter().zip(predicted) {
            match (y, p) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn add(&mut self, other: Confusion) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.tn += other.tn;
        self.fn_ += other.fn_;
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.tp + self.tn + self.fp + self.fn_)
    }

    pub fn sensitivity(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn specificity(&self) -> f64 {
        ratio(self.tn, self.tn + self.fp)
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn f1(&self) -> f64 {
        f1_score(self.precision(), self.sensitivity())
    }
}

fn check_inputs(labels: &[bool], scores: &[f64]) -> Result<(usize, usize)> {
    if labels.len() != scores.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} labels but {} scores",
            labels.len(),
            scores.len()
        )));
    }
    if labels.len() < 2 {
        return Err(invalid("need at least two samples"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(invalid("scores must be finite"));
    }
    let pos = labels.iter().filter(|&&y| y).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(invalid("both classes must be present"));
    }
    Ok((pos, neg))
}

/// One point per distinct threshold, highest score first.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    pub threshold: f64,
    pub tp: usize,
    pub fp: usize,
}

fn curve(labels: &[bool], scores: &[f64]) -> Vec<CurvePoint> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = Vec::new();
    let (mut tp, mut fp) = (0, 0);
    for (rank, &idx) in order.iter().enumerate() {
        if labels[idx] {
            tp += 1;
        } else {
            fp += 1;
        }
        let last_of_tie = order
            .get(rank + 1)
            .is_none_or(|&next| scores[next] != scores[idx]);
        if last_of_tie {
            points.push(CurvePoint {
                threshold: scores[idx],
                tp,
                fp,
            });
        }
    }
    points
}

/// ROC points `(fpr, tpr)` starting at the origin.
pub fn roc_points(labels: &[bool], scores: &[f64]) -> Result<Vec<(f64, f64)>> {
    let (pos, neg) = check_inputs(labels, scores)?;
    let mut pts = vec![(0.0, 0.0)];
    pts.extend(
        curve(labels, scores)
            .into_iter()
            .map(|p| (p.fp as f64 / neg as f64, p.tp as f64 / pos as f64)),
    );
    Ok(pts)
}

pub fn roc_auc(labels: &[bool], scores: &[f64]) -> Result<f64> {
    let pts = roc_points(labels, scores)?;
    Ok(pts
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum())
}

/// Area under the step-interpolated ROC curve over `fpr in (0, max_fpr)`,
/// divided by `max_fpr`.
pub fn partial_roc_auc(labels: &[bool], scores: &[f64], max_fpr: f64) -> Result<f64> {
    if !(max_fpr > 0.0 && max_fpr <= 1.0) {
        return Err(invalid(format!(
            "max_fpr must lie in (0, 1], got {max_fpr}"
        )));
    }
    let pts = roc_points(labels, scores)?;
    let mut area = 0.0;
    for (i, &(fpr, tpr)) in pts.iter().enumerate() {
        let next = pts.get(i + 1).map_or(1.0, |p| p.0);
        let width = next.min(max_fpr) - fpr.min(max_fpr);
        area += tpr * width;
    }
    Ok(area / max_fpr)
}

/// Area under the step-interpolated precision-recall curve. Precision at
/// recall zero is that of the highest-scoring group.
pub fn pr_auc(labels: &[bool], scores: &[f64]) -> Result<f64> {
    let (pos, _) = check_inputs(labels, scores)?;
    let mut area = 0.0;
    let mut prev_recall = 0.0;
    for p in curve(labels, scores) {
        let recall = p.tp as f64 / pos as f64;
        let precision = p.tp as f64 / (p.tp + p.fp) as f64;
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Ok(area)
}

/// Score threshold maximizing F1 for `score >= threshold`; ties go to the
/// lowest threshold.
pub fn best_f1_threshold(labels: &[bool], scores: &[f64]) -> Result<(f64, Confusion)> {
    let (pos, neg) = check_inputs(labels, scores)?;
    let mut best: Option<(f64, f64, Confusion)> = None;
    // ascending thresholds, strict improvement keeps the lowest on ties
    for p in curve(labels, scores).into_iter().rev() {
        let c = Confusion {
            tp: p.tp,
            fp: p.fp,
            tn: neg - p.fp,
            fn_: pos - p.tp,
        };
        let f1 = c.f1();
        if best.is_none_or(|(b, _, _)| f1 > b) {
            best = Some((f1, p.threshold, c));
        }
    }
    let (_, t, c) = best.expect("non-empty curve");
    Ok((t, c))
}

/// Metrics at the F1-optimal threshold plus threshold-free curve areas.
pub fn classify_scores(labels: &[bool], scores: &[f64]) -> Result<MetricsReport> {
    let (threshold, confusion) = best_f1_threshold(labels, scores)?;
    Ok(MetricsReport {
        accuracy: confusion.accuracy(),
        f1: confusion.f1(),
        sensitivity: confusion.sensitivity(),
        specificity: confusion.specificity(),
        precision: confusion.precision(),
        roc_auc: roc_auc(labels, scores)?,
        proc_auc: partial_roc_auc(labels, scores, PARTIAL_FPR)?,
        pr_auc: pr_auc(labels, scores)?,
        pearson_rho: None,
        mse: None,
        threshold,
    })
}

/// Pearson correlation from a single pass of co-moment updates.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(invalid(
            "pearson needs two equal-length series of length >= 2",
        ));
    }
    let (mut mx, mut my, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (n, (&a, &b)) in x.iter().zip(y).enumerate() {
        let k = (n + 1) as f64;
        let dx = a - mx;
        let dy = b - my;
        mx += dx / k;
        my += dy / k;
        sxx += dx * (a - mx);
        syy += dy * (b - my);
        sxy += dx * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::UndefinedCorrelation(
            "a series has zero variance".into(),
        ));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

pub fn mean_squared_error(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.is_empty() {
        return Err(invalid("mse needs two equal-length, non-empty series"));
    }
    Ok(x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / x.len() as f64)
}

/// Outcome of one lesion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LesionOutcome {
    pub predicted: bool,
    pub actual: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CountAgreement {
    pub rho: f64,
    pub mse: f64,
}

/// Agreement between predicted and true rim+ counts per subject.
pub fn subject_counts(subjects: &[Vec<LesionOutcome>]) -> Result<CountAgreement> {
    if subjects.len() < 2 {
        return Err(invalid("need at least two subjects"));
    }
    let count = |f: fn(&LesionOutcome) -> bool| -> Vec<f64> {
        subjects
            .iter()
            .map(|s| s.iter().filter(|o| f(o)).count() as f64)
            .collect()
    };
    let predicted = count(|o| o.predicted);
    let actual = count(|o| o.actual);
    Ok(CountAgreement {
        rho: pearson(&predicted, &actual)?,
        mse: mean_squared_error(&predicted, &actual)?,
    })
}
