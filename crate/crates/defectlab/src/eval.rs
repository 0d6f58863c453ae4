//! Confusion-matrix metrics, rank-based AUC, Balance, stratified k-fold
//! cross-validation (paper-faithful and leak-free orders) and Win-Draw-Loss
//! tallies.

use crate::balance::{balance as dbb_balance, DbbConfig};
use crate::data::{encode, Dataset, ImputeStats};
use crate::error::{Error, Result};
use crate::rbf::{train as train_rbf, RbfConfig};
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Counts indexed `[actual][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
    pub classes: Vec<String>,
    /// Index of the defective class.
    pub positive: usize,
}

impl ConfusionMatrix {
    pub fn new(classes: Vec<String>, positive: usize) -> Self {
        let c = classes.len();
        ConfusionMatrix {
            counts: vec![vec![0; c]; c],
            classes,
            positive,
        }
    }

    pub fn record(&mut self, actual: usize, predicted: usize) {
        self.counts[actual][predicted] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn merged(&self, other: &ConfusionMatrix) -> ConfusionMatrix {
        let mut out = self.clone();
        for (i, row) in other.counts.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                out.counts[i][j] += v;
            }
        }
        out
    }
}

/// Summary scores for one evaluation. All values in [0, 1]; `auc` is absent
/// when either score pool is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    pub balance: f64,
    pub auc: Option<f64>,
    /// Probability of detection: recall of the positive class.
    pub pd: f64,
    /// Probability of false alarm on the non-defective pool.
    pub pf: f64,
    pub per_class_precision: Vec<f64>,
    pub per_class_recall: Vec<f64>,
    pub train_seconds: f64,
    pub test_seconds: f64,
}

/// Scores from a confusion matrix (AUC and timings filled in by the caller).
/// precision / recall / F are support-weighted class averages. Balance is
/// 1 - ||(pf, 1 - pd)|| / sqrt(2) with the defective class positive.
pub fn metrics(cm: &ConfusionMatrix) -> Result<MetricReport> {
    let c = cm.classes.len();
    let total = cm.total();
    if total == 0 {
        return Err(Error::Data("empty confusion matrix".into()));
    }
    let total = total as f64;
    let trace: u64 = (0..c).map(|i| cm.counts[i][i]).sum();
    let row_sums: Vec<f64> = cm.counts.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let col_sums: Vec<f64> = (0..c)
        .map(|j| cm.counts.iter().map(|r| r[j]).sum::<u64>() as f64)
        .collect();
    let mut per_class_precision = Vec::with_capacity(c);
    let mut per_class_recall = Vec::with_capacity(c);
    let mut precision = 0.0;
    let mut recall = 0.0;
    let mut f_score = 0.0;
    for k in 0..c {
        let tp = cm.counts[k][k] as f64;
        let p = if col_sums[k] > 0.0 { tp / col_sums[k] } else { 0.0 };
        let r = if row_sums[k] > 0.0 { tp / row_sums[k] } else { 0.0 };
        let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        per_class_precision.push(p);
        per_class_recall.push(r);
        let weight = row_sums[k] / total;
        precision += weight * p;
        recall += weight * r;
        f_score += weight * f;
    }
    let pd = per_class_recall[cm.positive];
    let fp = (0..c)
        .filter(|&i| i != cm.positive)
        .map(|i| cm.counts[i][cm.positive])
        .sum::<u64>() as f64;
    let negatives = total - row_sums[cm.positive];
    let pf = if negatives > 0.0 { fp / negatives } else { 0.0 };
    let balance = 1.0 - (pf * pf + (1.0 - pd) * (1.0 - pd)).sqrt() / 2.0_f64.sqrt();
    Ok(MetricReport {
        accuracy: trace as f64 / total,
        precision,
        recall,
        f_score,
        balance,
        auc: None,
        pd,
        pf,
        per_class_precision,
        per_class_recall,
        train_seconds: 0.0,
        test_seconds: 0.0,
    })
}

/// Rank-based AUC with midranks for ties; `None` when either pool is empty
/// (never silently 0.5).
pub fn auc(pos_scores: &[f64], neg_scores: &[f64]) -> Option<f64> {
    if pos_scores.is_empty() || neg_scores.is_empty() {
        return None;
    }
    let rd = crate::stats::RankData::new(&[pos_scores.to_vec(), neg_scores.to_vec()])
        .expect("both pools non-empty");
    let n_pos = pos_scores.len() as f64;
    let n_neg = neg_scores.len() as f64;
    Some((rd.rank_sums[0] - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvMode {
    /// Impute, encode and balance the whole dataset before splitting;
    /// reproduces the original experimental protocol including its leakage.
    PaperFaithful,
    /// Imputation statistics and balancing are fitted on training folds
    /// only; test folds stay untouched.
    LeakFree,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvConfig {
    pub folds: usize,
    pub mode: CvMode,
    /// Stratified fold assignment (default); plain random is available for
    /// protocol fidelity.
    #[serde(default = "default_true")]
    pub stratified: bool,
    pub seed: u64,
    /// Class label treated as defective.
    pub positive_label: String,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Pipeline {
    #[serde(default)]
    pub balance: Option<DbbConfig>,
    pub classifier: RbfConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub per_fold: Vec<MetricReport>,
    /// Unweighted mean over folds; AUC from the pooled test scores.
    pub aggregate: MetricReport,
    pub confusion: ConfusionMatrix,
}

/// Derive a per-fold RNG seed from the master seed (splitmix64 step), so
/// serial and parallel fold execution agree.
fn fold_seed(master: u64, fold: u64) -> u64 {
    let mut z = master ^ fold.wrapping_mul(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Assign each row to a fold. Stratified: within every class, shuffled rows
/// are dealt round-robin, so per-fold class counts differ by at most one.
fn assign_folds(
    labels: &[usize],
    n_classes: usize,
    folds: usize,
    stratified: bool,
    seed: u64,
) -> Vec<usize> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0usize; labels.len()];
    if stratified {
        for class in 0..n_classes {
            let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
            members.shuffle(&mut rng);
            for (pos, &row) in members.iter().enumerate() {
                assignment[row] = pos % folds;
            }
        }
    } else {
        let mut order: Vec<usize> = (0..labels.len()).collect();
        order.shuffle(&mut rng);
        for (pos, &row) in order.iter().enumerate() {
            assignment[row] = pos % folds;
        }
    }
    assignment
}

/// Stratified k-fold cross-validation of an optional-balance + RBF pipeline.
pub fn cross_validate(
    d: &Dataset,
    pipeline: &Pipeline,
    cv: &CvConfig,
) -> Result<CvReport> {
    if cv.folds < 2 {
        return Err(Error::Config("cv: folds must be >= 2".into()));
    }
    let positive = d
        .schema
        .class_labels
        .iter()
        .position(|l| l == &cv.positive_label)
        .ok_or_else(|| {
            Error::Config(format!(
                "positive label '{}' is not a class category",
                cv.positive_label
            ))
        })?;
    match cv.mode {
        CvMode::LeakFree => cross_validate_leak_free(d, pipeline, cv, positive),
        CvMode::PaperFaithful => cross_validate_paper(d, pipeline, cv, positive),
    }
}

fn check_min_counts(counts: &[usize], labels: &[String], folds: usize) -> Result<()> {
    let offending: Vec<&str> = counts
        .iter()
        .zip(labels)
        .filter(|(&n, _)| n > 0 && n < folds)
        .map(|(_, l)| l.as_str())
        .collect();
    if !offending.is_empty() {
        return Err(Error::Data(format!(
            "classes with fewer instances than folds: {}",
            offending.join(", ")
        )));
    }
    Ok(())
}

fn cross_validate_paper(
    d: &Dataset,
    pipeline: &Pipeline,
    cv: &CvConfig,
    positive: usize,
) -> Result<CvReport> {
    let imputed = crate::data::impute_global(d);
    let mut encoded = encode(&imputed)?;
    if let Some(bal) = &pipeline.balance {
        encoded = dbb_balance(&encoded, bal)?;
    }
    check_min_counts(&encoded.class_counts(), &d.schema.class_labels, cv.folds)?;
    let assignment = assign_folds(
        &encoded.labels,
        d.schema.class_labels.len(),
        cv.folds,
        cv.stratified,
        fold_seed(cv.seed, u64::MAX),
    );
    let mut folds = Vec::with_capacity(cv.folds);
    for f in 0..cv.folds {
        let train: Vec<usize> = (0..encoded.n_rows()).filter(|&i| assignment[i] != f).collect();
        let test: Vec<usize> = (0..encoded.n_rows()).filter(|&i| assignment[i] == f).collect();
        folds.push((encoded.select(&train), encoded.select(&test)));
    }
    run_folds(folds, pipeline, cv, positive, d.schema.class_labels.clone())
}

fn cross_validate_leak_free(
    d: &Dataset,
    pipeline: &Pipeline,
    cv: &CvConfig,
    positive: usize,
) -> Result<CvReport> {
    check_min_counts(&d.class_counts(), &d.schema.class_labels, cv.folds)?;
    let labels: Vec<usize> = d.rows.iter().map(|r| r.label).collect();
    let assignment = assign_folds(
        &labels,
        d.schema.class_labels.len(),
        cv.folds,
        cv.stratified,
        fold_seed(cv.seed, u64::MAX),
    );
    let mut folds = Vec::with_capacity(cv.folds);
    for f in 0..cv.folds {
        let train: Vec<usize> = (0..d.rows.len()).filter(|&i| assignment[i] != f).collect();
        let test: Vec<usize> = (0..d.rows.len()).filter(|&i| assignment[i] == f).collect();
        // imputation statistics come from the training rows only
        let stats = ImputeStats::fit_rows(d, &train);
        let filled = stats.apply(d);
        let encoded = encode(&filled)?;
        let mut train_data = encoded.select(&train);
        if let Some(bal) = &pipeline.balance {
            let mut bal = *bal;
            bal.seed = fold_seed(cv.seed, f as u64 ^ 0x5ba1a).wrapping_add(bal.seed);
            train_data = dbb_balance(&train_data, &bal)?;
        }
        folds.push((train_data, encoded.select(&test)));
    }
    run_folds(folds, pipeline, cv, positive, d.schema.class_labels.clone())
}

fn run_folds(
    folds: Vec<(crate::data::EncodedDataset, crate::data::EncodedDataset)>,
    pipeline: &Pipeline,
    cv: &CvConfig,
    positive: usize,
    classes: Vec<String>,
) -> Result<CvReport> {
    let mut per_fold = Vec::with_capacity(folds.len());
    let mut pooled_pos = Vec::new();
    let mut pooled_neg = Vec::new();
    let mut confusion = ConfusionMatrix::new(classes.clone(), positive);
    for (f, (train_data, test_data)) in folds.into_iter().enumerate() {
        let mut clf = pipeline.classifier;
        clf.seed = fold_seed(cv.seed, f as u64).wrapping_add(clf.seed);
        let t0 = Instant::now();
        let net = train_rbf(&train_data, &clf)?;
        let train_seconds = t0.elapsed().as_secs_f64();

        let t1 = Instant::now();
        let mut cm = ConfusionMatrix::new(classes.clone(), positive);
        let mut fold_pos = Vec::new();
        let mut fold_neg = Vec::new();
        for (x, &actual) in test_data.matrix.iter().zip(&test_data.labels) {
            let (scores, predicted) = net.predict(x)?;
            cm.record(actual, predicted);
            if actual == positive {
                fold_pos.push(scores[positive]);
            } else {
                fold_neg.push(scores[positive]);
            }
        }
        let test_seconds = t1.elapsed().as_secs_f64();
        let mut report = metrics(&cm)?;
        report.auc = auc(&fold_pos, &fold_neg);
        report.train_seconds = train_seconds;
        report.test_seconds = test_seconds;
        confusion = confusion.merged(&cm);
        pooled_pos.extend(fold_pos);
        pooled_neg.extend(fold_neg);
        per_fold.push(report);
    }
    let n = per_fold.len() as f64;
    let mean = |f: fn(&MetricReport) -> f64| per_fold.iter().map(f).sum::<f64>() / n;
    let aggregate = MetricReport {
        accuracy: mean(|r| r.accuracy),
        precision: mean(|r| r.precision),
        recall: mean(|r| r.recall),
        f_score: mean(|r| r.f_score),
        balance: mean(|r| r.balance),
        // pooled across folds: per-fold ROC degenerates on tiny defect counts
        auc: auc(&pooled_pos, &pooled_neg),
        pd: mean(|r| r.pd),
        pf: mean(|r| r.pf),
        per_class_precision: Vec::new(),
        per_class_recall: Vec::new(),
        train_seconds: per_fold.iter().map(|r| r.train_seconds).sum(),
        test_seconds: per_fold.iter().map(|r| r.test_seconds).sum(),
    };
    Ok(CvReport {
        per_fold,
        aggregate,
        confusion,
    })
}

/// Win-Draw-Loss tally of paired metric values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WdlRecord {
    pub wins: usize,
    pub draws: usize,
    pub losses: usize,
    pub epsilon: f64,
}

impl std::fmt::Display for WdlRecord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}/{}", self.wins, self.draws, self.losses)
    }
}

pub fn wdl(a: &[f64], b: &[f64], epsilon: f64) -> Result<WdlRecord> {
    if a.len() != b.len() {
        return Err(Error::Data(format!(
            "W-D-L inputs have different lengths: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let mut record = WdlRecord {
        wins: 0,
        draws: 0,
        losses: 0,
        epsilon,
    };
    for (&x, &y) in a.iter().zip(b) {
        if (x - y).abs() <= epsilon {
            record.draws += 1;
        } else if x > y {
            record.wins += 1;
        } else {
            record.losses += 1;
        }
    }
    Ok(record)
}
