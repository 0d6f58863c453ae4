//! Radial-basis-function network classifier: Gaussian hidden units around
//! K-means (or incrementally chosen) centers, linear output layer solved in
//! closed form with an optional ridge penalty.

mod kmeans;

pub use kmeans::kmeans;

use crate::data::EncodedDataset;
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainMode {
    FixedK,
    Incremental,
}

/// Hidden-unit width: a fixed value for every neuron, or the d_max/sqrt(2k)
/// heuristic computed from the final centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Width {
    Auto,
    #[serde(untagged)]
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputActivation {
    Linear,
    /// Rational fast sigmoid 0.5 * (z / (1 + |z|)) + 0.5, elementwise.
    LogisticApprox,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RbfConfig {
    pub mode: TrainMode,
    /// Hidden units for FIXED_K training.
    pub k: usize,
    pub width: Width,
    /// Ridge penalty on the output weights (applied uniformly, bias included).
    pub ridge: f64,
    /// Incremental stop: training stops once mean per-row squared error
    /// drops to this level.
    pub max_error: f64,
    pub max_neurons: usize,
    pub output_activation: OutputActivation,
    pub kmeans_iters: usize,
    pub seed: u64,
}

impl Default for RbfConfig {
    fn default() -> Self {
        RbfConfig {
            mode: TrainMode::FixedK,
            k: 1,
            width: Width::Auto,
            ridge: 1e-8,
            max_error: 1e-3,
            max_neurons: 50,
            output_activation: OutputActivation::LogisticApprox,
            kmeans_iters: 100,
            seed: 0,
        }
    }
}

impl RbfConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("rbf: k must be >= 1".into()));
        }
        if let Width::Fixed(w) = self.width {
            if !(w > 0.0) {
                return Err(Error::Config("rbf: width must be > 0".into()));
            }
        }
        if self.ridge < 0.0 {
            return Err(Error::Config("rbf: ridge must be >= 0".into()));
        }
        if !(self.max_error > 0.0) {
            return Err(Error::Config("rbf: max_error must be > 0".into()));
        }
        if self.max_neurons == 0 {
            return Err(Error::Config("rbf: max_neurons must be >= 1".into()));
        }
        if self.kmeans_iters == 0 {
            return Err(Error::Config("rbf: kmeans_iters must be >= 1".into()));
        }
        Ok(())
    }
}

/// A trained network. Centers and widths define the hidden layer; `weights`
/// is (n_centers + 1) x n_classes with the bias row last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbfNetwork {
    pub centers: Vec<Vec<f64>>,
    pub widths: Vec<f64>,
    /// Row-major, `centers.len() + 1` rows by `classes.len()` columns.
    pub weights: Vec<Vec<f64>>,
    pub classes: Vec<String>,
    pub output_activation: OutputActivation,
}

/// Versioned on-disk form.
#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    #[serde(flatten)]
    network: RbfNetwork,
}

const MODEL_FORMAT_VERSION: u32 = 1;

impl RbfNetwork {
    pub fn n_centers(&self) -> usize {
        self.centers.len()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn input_dim(&self) -> usize {
        self.centers.first().map(Vec::len).unwrap_or(0)
    }

    /// Gaussian kernel responses for `x` plus a trailing constant-1 bias
    /// entry: phi_j = exp(-||x - c_j||^2 / (2 sigma_j^2)).
    pub fn activations(&self, x: &[f64]) -> Result<Vec<f64>> {
        if !self.centers.is_empty() && x.len() != self.input_dim() {
            return Err(Error::Data(format!(
                "input has dimension {}, network expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        let mut phi = Vec::with_capacity(self.centers.len() + 1);
        for (c, &sigma) in self.centers.iter().zip(&self.widths) {
            let d2: f64 = c.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
            phi.push((-d2 / (2.0 * sigma * sigma)).exp());
        }
        phi.push(1.0);
        Ok(phi)
    }

    /// Class scores and the predicted label (argmax, ties → lowest index).
    pub fn predict(&self, x: &[f64]) -> Result<(Vec<f64>, usize)> {
        let phi = self.activations(x)?;
        let mut scores = vec![0.0; self.n_classes()];
        for (row, w) in self.weights.iter().enumerate() {
            for (k, s) in scores.iter_mut().enumerate() {
                *s += phi[row] * w[k];
            }
        }
        if self.output_activation == OutputActivation::LogisticApprox {
            for s in &mut scores {
                *s = fast_sigmoid(*s);
            }
        }
        let label = argmax(&scores);
        Ok((scores, label))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            network: self.clone(),
        })
        .expect("network is always serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)
            .map_err(|e| Error::Data(format!("invalid model file: {e}")))?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Data(format!(
                "unsupported model format version {}",
                file.format_version
            )));
        }
        if file.network.centers.len() != file.network.widths.len()
            || file.network.weights.len() != file.network.centers.len() + 1
        {
            return Err(Error::Data("model file has inconsistent dimensions".into()));
        }
        Ok(file.network)
    }
}

/// Strictly increasing rational approximation of the logistic function;
/// maps 0 to 0.5 and never changes an argmax.
pub fn fast_sigmoid(z: f64) -> f64 {
    0.5 * (z / (1.0 + z.abs())) + 0.5
}

fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Least-squares output weights: minimizes ||Phi W - T||^2 + ridge ||W||^2.
/// Positive ridge goes through the regularized normal equations; ridge 0
/// uses the minimum-norm pseudo-inverse so rank-deficient designs are fine.
pub fn solve_output_weights(
    phi: &DMatrix<f64>,
    targets: &DMatrix<f64>,
    ridge: f64,
) -> Result<DMatrix<f64>> {
    if phi.nrows() == 0 || phi.nrows() != targets.nrows() {
        return Err(Error::Numeric(format!(
            "design matrix has {} rows, targets {}",
            phi.nrows(),
            targets.nrows()
        )));
    }
    if ridge > 0.0 {
        let m = phi.ncols();
        let gram = phi.transpose() * phi + DMatrix::identity(m, m) * ridge;
        let rhs = phi.transpose() * targets;
        let chol = gram
            .cholesky()
            .ok_or_else(|| Error::Numeric("ridge normal equations not positive definite".into()))?;
        Ok(chol.solve(&rhs))
    } else {
        let svd = phi.clone().svd(true, true);
        let pinv = svd
            .pseudo_inverse(1e-12)
            .map_err(|e| Error::Numeric(format!("SVD failed: {e}")))?;
        Ok(pinv * targets)
    }
}

fn one_hot_targets(labels: &[usize], n_classes: usize) -> DMatrix<f64> {
    let mut t = DMatrix::zeros(labels.len(), n_classes);
    for (i, &l) in labels.iter().enumerate() {
        t[(i, l)] = 1.0;
    }
    t
}

fn design_matrix(net: &RbfNetwork, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let mut phi = DMatrix::zeros(rows.len(), net.n_centers() + 1);
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in net.activations(row)?.into_iter().enumerate() {
            phi[(i, j)] = v;
        }
    }
    Ok(phi)
}

fn set_weights(net: &mut RbfNetwork, w: &DMatrix<f64>) {
    net.weights = (0..w.nrows())
        .map(|r| (0..w.ncols()).map(|c| w[(r, c)]).collect())
        .collect();
}

/// K-means centers, shared width, closed-form output weights.
pub fn train_fixed(d: &EncodedDataset, cfg: &RbfConfig) -> Result<RbfNetwork> {
    cfg.validate()?;
    if cfg.mode != TrainMode::FixedK {
        return Err(Error::Config("train_fixed requires mode = fixed_k".into()));
    }
    let n = d.n_rows();
    if cfg.k > n {
        return Err(Error::Data(format!(
            "k = {} exceeds the {} training rows",
            cfg.k, n
        )));
    }
    let (centers, _) = kmeans(&d.matrix, cfg.k, cfg.kmeans_iters, cfg.seed)?;
    let widths = match cfg.width {
        Width::Fixed(w) => vec![w; centers.len()],
        Width::Auto => vec![auto_width(&centers, &d.matrix); centers.len()],
    };
    let mut net = RbfNetwork {
        centers,
        widths,
        weights: Vec::new(),
        classes: d.schema.class_labels.clone(),
        output_activation: cfg.output_activation,
    };
    let phi = design_matrix(&net, &d.matrix)?;
    let targets = one_hot_targets(&d.labels, net.n_classes());
    let w = solve_output_weights(&phi, &targets, cfg.ridge)?;
    set_weights(&mut net, &w);
    Ok(net)
}

/// d_max / sqrt(2k); with a single center the mean point-to-center distance.
/// Floored at 1e-9 so degenerate geometries stay usable.
fn auto_width(centers: &[Vec<f64>], points: &[Vec<f64>]) -> f64 {
    let w = if centers.len() == 1 {
        let c = &centers[0];
        let total: f64 = points
            .iter()
            .map(|p| {
                p.iter()
                    .zip(c)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .sum();
        total / points.len() as f64
    } else {
        let mut d_max: f64 = 0.0;
        for i in 0..centers.len() {
            for j in (i + 1)..centers.len() {
                let d2: f64 = centers[i]
                    .iter()
                    .zip(&centers[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                d_max = d_max.max(d2.sqrt());
            }
        }
        d_max / (2.0 * centers.len() as f64).sqrt()
    };
    w.max(1e-9)
}

/// Grow the hidden layer one neuron at a time, always centering the new
/// neuron on the row with the worst per-row error. Do-while semantics: even
/// an already-satisfying bias-only network gains one neuron.
pub fn train_incremental(d: &EncodedDataset, cfg: &RbfConfig) -> Result<RbfNetwork> {
    cfg.validate()?;
    if cfg.mode != TrainMode::Incremental {
        return Err(Error::Config("train_incremental requires mode = incremental".into()));
    }
    let width = match cfg.width {
        Width::Fixed(w) => w,
        Width::Auto => {
            return Err(Error::Config(
                "incremental training needs an explicit width".into(),
            ))
        }
    };
    let n = d.n_rows();
    if n == 0 {
        return Err(Error::Data("cannot train on an empty dataset".into()));
    }
    let n_classes = d.schema.class_labels.len();
    let targets = one_hot_targets(&d.labels, n_classes);
    let mut net = RbfNetwork {
        centers: Vec::new(),
        widths: Vec::new(),
        weights: Vec::new(),
        classes: d.schema.class_labels.clone(),
        output_activation: cfg.output_activation,
    };
    // bias-only start
    let phi = design_matrix(&net, &d.matrix)?;
    let w = solve_output_weights(&phi, &targets, cfg.ridge)?;
    set_weights(&mut net, &w);

    let mut seeded = vec![false; n];
    loop {
        let errors = per_row_errors(&net, &d.matrix, &targets)?;
        let Some(worst) = errors
            .iter()
            .enumerate()
            .filter(|(i, _)| !seeded[*i])
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
        else {
            break; // every row has already seeded a neuron
        };
        seeded[worst] = true;
        net.centers.push(d.matrix[worst].clone());
        net.widths.push(width);
        let phi = design_matrix(&net, &d.matrix)?;
        let w = solve_output_weights(&phi, &targets, cfg.ridge)?;
        set_weights(&mut net, &w);
        let net_error =
            per_row_errors(&net, &d.matrix, &targets)?.iter().sum::<f64>() / n as f64;
        if net_error <= cfg.max_error || net.n_centers() >= cfg.max_neurons {
            break;
        }
    }
    Ok(net)
}

/// Squared Euclidean error of the raw linear output against the one-hot
/// target, per training row.
fn per_row_errors(
    net: &RbfNetwork,
    rows: &[Vec<f64>],
    targets: &DMatrix<f64>,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let phi = net.activations(row)?;
        let mut err = 0.0;
        for k in 0..net.n_classes() {
            let raw: f64 = (0..net.n_centers() + 1)
                .map(|j| phi[j] * net.weights[j][k])
                .sum();
            let diff = raw - targets[(i, k)];
            err += diff * diff;
        }
        out.push(err);
    }
    Ok(out)
}

/// Dispatch on the configured mode.
pub fn train(d: &EncodedDataset, cfg: &RbfConfig) -> Result<RbfNetwork> {
    match cfg.mode {
        TrainMode::FixedK => train_fixed(d, cfg),
        TrainMode::Incremental => train_incremental(d, cfg),
    }
}
