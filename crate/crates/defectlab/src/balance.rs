//! Distribution-based balancing: learn a per-class, per-feature distribution
//! from the training data and regenerate a fully balanced training set by
//! sampling from it. The original instances are completely replaced.

use crate::data::EncodedDataset;
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Number of instances to generate per class. Serializes as a plain number
/// or the string `"max"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleSize {
    /// Fixed count per class (default 30).
    Count(usize),
    /// Use the largest observed class count, so no class loses data volume.
    Max,
}

impl Serialize for SampleSize {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SampleSize::Count(n) => s.serialize_u64(*n as u64),
            SampleSize::Max => s.serialize_str("max"),
        }
    }
}

impl<'de> Deserialize<'de> for SampleSize {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(n) => Ok(SampleSize::Count(n as usize)),
            Raw::Text(s) if s.eq_ignore_ascii_case("max") => Ok(SampleSize::Max),
            Raw::Text(s) => Err(serde::de::Error::custom(format!(
                "b must be a positive integer or \"max\", got \"{s}\""
            ))),
        }
    }
}

impl Default for SampleSize {
    fn default() -> Self {
        SampleSize::Count(30)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gaussian,
    Poisson,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DbbConfig {
    pub b: SampleSize,
    pub family: Family,
    pub sigma_floor: f64,
    pub seed: u64,
}

impl Default for DbbConfig {
    fn default() -> Self {
        DbbConfig {
            b: SampleSize::default(),
            family: Family::Gaussian,
            // a single-instance class has sample std 0; the floor keeps
            // sampling well-defined without visibly perturbing values
            sigma_floor: 1e-9,
            seed: 0,
        }
    }
}

impl DbbConfig {
    pub fn validate(&self) -> Result<()> {
        if let SampleSize::Count(0) = self.b {
            return Err(Error::Config("balance: b must be >= 1".into()));
        }
        if !(self.sigma_floor > 0.0) {
            return Err(Error::Config("balance: sigma_floor must be > 0".into()));
        }
        Ok(())
    }
}

/// Learned distribution for one (class, feature) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FeatureDistribution {
    Gaussian { mean: f64, std: f64 },
    Poisson { lambda: f64 },
}

/// Per-class, per-feature distribution parameters plus enough schema context
/// to emit a dataset of the same shape.
#[derive(Debug, Clone)]
pub struct DbbModel {
    /// Class indices present in the fitted data, ascending.
    pub classes: Vec<usize>,
    /// `params[c][f]` for class `classes[c]`, encoded feature `f`.
    pub params: Vec<Vec<FeatureDistribution>>,
    /// Observed per-class counts, aligned with `classes`.
    pub class_counts: Vec<usize>,
    pub schema: crate::data::FeatureSchema,
    pub columns: Vec<crate::data::ColumnSource>,
}

impl DbbModel {
    pub fn n_features(&self) -> usize {
        self.columns.len()
    }
}

/// Learn class-conditional distributions for every encoded feature.
///
/// Gaussian: sample mean and standard deviation (n−1 divisor, a single
/// instance yields 0) clamped below by `sigma_floor`. Poisson: lambda is the
/// class-conditional mean, used only when every observed value for that
/// (class, feature) pair is nonnegative; otherwise that feature falls back
/// to Gaussian.
pub fn fit(d: &EncodedDataset, cfg: &DbbConfig) -> Result<DbbModel> {
    cfg.validate()?;
    if d.n_rows() == 0 {
        return Err(Error::Data("cannot fit balancer on an empty dataset".into()));
    }
    let counts = d.class_counts();
    let classes: Vec<usize> = (0..counts.len()).filter(|&c| counts[c] > 0).collect();
    let mut params = Vec::with_capacity(classes.len());
    for &class in &classes {
        let rows: Vec<&Vec<f64>> = d
            .matrix
            .iter()
            .zip(&d.labels)
            .filter(|(_, &l)| l == class)
            .map(|(r, _)| r)
            .collect();
        let n = rows.len() as f64;
        let mut class_params = Vec::with_capacity(d.n_cols());
        for j in 0..d.n_cols() {
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let use_poisson =
                cfg.family == Family::Poisson && rows.iter().all(|r| r[j] >= 0.0);
            let p = if use_poisson {
                FeatureDistribution::Poisson {
                    lambda: mean.max(0.0),
                }
            } else {
                let std = if rows.len() > 1 {
                    let ss = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>();
                    (ss / (n - 1.0)).sqrt()
                } else {
                    0.0
                };
                FeatureDistribution::Gaussian {
                    mean,
                    std: std.max(cfg.sigma_floor),
                }
            };
            class_params.push(p);
        }
        params.push(class_params);
    }
    Ok(DbbModel {
        class_counts: classes.iter().map(|&c| counts[c]).collect(),
        classes,
        params,
        schema: d.schema.clone(),
        columns: d.columns.clone(),
    })
}

/// Draw a fully balanced dataset: exactly `b` rows per class, every feature
/// sampled independently from its learned distribution. Deterministic given
/// the seed. One-hot groups are repaired to argmax after sampling so the
/// generated rows stay schema-valid.
pub fn sample(model: &DbbModel, cfg: &DbbConfig) -> Result<EncodedDataset> {
    cfg.validate()?;
    let b = match cfg.b {
        SampleSize::Count(n) => n,
        SampleSize::Max => *model
            .class_counts
            .iter()
            .max()
            .ok_or_else(|| Error::Data("balancer model has no classes".into()))?,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut matrix = Vec::with_capacity(model.classes.len() * b);
    let mut labels = Vec::with_capacity(model.classes.len() * b);
    for (ci, &class) in model.classes.iter().enumerate() {
        for _ in 0..b {
            let mut row = Vec::with_capacity(model.n_features());
            for p in &model.params[ci] {
                row.push(draw(p, &mut rng)?);
            }
            matrix.push(row);
            labels.push(class);
        }
    }
    let mut out = EncodedDataset {
        schema: model.schema.clone(),
        columns: model.columns.clone(),
        matrix,
        labels,
    };
    repair_one_hot(&mut out);
    Ok(out)
}

/// fit + sample.
pub fn balance(d: &EncodedDataset, cfg: &DbbConfig) -> Result<EncodedDataset> {
    let model = fit(d, cfg)?;
    sample(&model, cfg)
}

fn draw(p: &FeatureDistribution, rng: &mut ChaCha8Rng) -> Result<f64> {
    match *p {
        FeatureDistribution::Gaussian { mean, std } => {
            let dist = Normal::new(mean, std)
                .map_err(|e| Error::Numeric(format!("invalid Gaussian parameters: {e}")))?;
            Ok(dist.sample(rng))
        }
        FeatureDistribution::Poisson { lambda } => Ok(sample_poisson(lambda, rng)),
    }
}

/// Poisson sampler: Knuth multiplication below lambda 30, normal
/// approximation rounded to the nearest nonnegative integer above.
fn sample_poisson(lambda: f64, rng: &mut ChaCha8Rng) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    if lambda < 30.0 {
        let limit = (-lambda).exp();
        let mut k = 0u64;
        let mut p = 1.0;
        loop {
            p *= rng.random::<f64>();
            if p <= limit {
                break;
            }
            k += 1;
        }
        k as f64
    } else {
        let dist = Normal::new(lambda, lambda.sqrt()).expect("lambda > 0");
        dist.sample(rng).round().max(0.0)
    }
}

/// Snap each one-hot group to its argmax (ties → lowest column).
fn repair_one_hot(d: &mut EncodedDataset) {
    let groups = d.one_hot_groups();
    if groups.is_empty() {
        return;
    }
    for row in &mut d.matrix {
        for group in &groups {
            let mut best = group.start;
            for c in group.clone() {
                if row[c] > row[best] {
                    best = c;
                }
            }
            for c in group.clone() {
                row[c] = if c == best { 1.0 } else { 0.0 };
            }
        }
    }
}
