//! Rank-based classifier comparison: Kruskal-Wallis omnibus test with tie
//! correction, post-hoc pairwise comparisons (Conover, Dunn, Tukey-Kramer
//! Nemenyi and its chi-square fall-back), Holm and Benjamini-Hochberg
//! p-value adjustments, and the Mann-Whitney U test.

pub mod dist;

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Pooled midranks plus the per-group summaries every rank test needs.
#[derive(Debug, Clone)]
pub struct RankData {
    /// Group sizes n_j.
    pub sizes: Vec<usize>,
    /// Midranks, pooled, in group order.
    pub ranks: Vec<Vec<f64>>,
    /// Per-group rank sums R_j.
    pub rank_sums: Vec<f64>,
    /// Per-group mean ranks.
    pub mean_ranks: Vec<f64>,
    /// Tie group sizes (each >= 2).
    pub tie_sizes: Vec<usize>,
    /// Sum over tie groups of t^3 - t.
    pub tie_term: f64,
    /// Total observation count.
    pub n_total: usize,
}

impl RankData {
    pub fn new(groups: &[Vec<f64>]) -> Result<Self> {
        if groups.len() < 2 {
            return Err(Error::Data("rank tests need at least 2 groups".into()));
        }
        for (i, g) in groups.iter().enumerate() {
            if g.is_empty() {
                return Err(Error::Data(format!("group {i} is empty")));
            }
            if g.iter().any(|x| !x.is_finite()) {
                return Err(Error::Numeric(format!("group {i} contains a non-finite value")));
            }
        }
        let n_total: usize = groups.iter().map(Vec::len).sum();
        // pool with back-pointers, sort, assign midranks over tie blocks
        let mut pooled: Vec<(f64, usize, usize)> = Vec::with_capacity(n_total);
        for (g, group) in groups.iter().enumerate() {
            for (i, &x) in group.iter().enumerate() {
                pooled.push((x, g, i));
            }
        }
        pooled.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite values"));
        let mut ranks: Vec<Vec<f64>> = groups.iter().map(|g| vec![0.0; g.len()]).collect();
        let mut tie_sizes = Vec::new();
        let mut pos = 0;
        while pos < n_total {
            let mut end = pos + 1;
            while end < n_total && pooled[end].0 == pooled[pos].0 {
                end += 1;
            }
            let midrank = (pos + 1 + end) as f64 / 2.0;
            if end - pos >= 2 {
                tie_sizes.push(end - pos);
            }
            for item in &pooled[pos..end] {
                ranks[item.1][item.2] = midrank;
            }
            pos = end;
        }
        let tie_term = tie_sizes
            .iter()
            .map(|&t| (t * t * t - t) as f64)
            .sum::<f64>();
        let rank_sums: Vec<f64> = ranks.iter().map(|r| r.iter().sum()).collect();
        let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
        let mean_ranks = rank_sums
            .iter()
            .zip(&sizes)
            .map(|(r, &n)| r / n as f64)
            .collect();
        Ok(RankData {
            sizes,
            ranks,
            rank_sums,
            mean_ranks,
            tie_sizes,
            tie_term,
            n_total,
        })
    }

    pub fn n_groups(&self) -> usize {
        self.sizes.len()
    }

    /// 1 - T/(N^3 - N); the Kruskal-Wallis tie-correction denominator.
    fn tie_correction(&self) -> f64 {
        let n = self.n_total as f64;
        1.0 - self.tie_term / (n * n * n - n)
    }

    /// Tie-adjusted pooled rank variance S^2 =
    /// (1/(N-1)) * (sum R_i^2 - N(N+1)^2/4) over all midranks.
    fn pooled_rank_variance(&self) -> f64 {
        let n = self.n_total as f64;
        let sum_sq: f64 = self.ranks.iter().flatten().map(|r| r * r).sum();
        (sum_sq - n * (n + 1.0) * (n + 1.0) / 4.0) / (n - 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub df: Option<usize>,
    pub p_value: f64,
    pub method: String,
}

/// Kruskal-Wallis H with tie correction, chi-square p-value with k-1 df.
/// A fully tied pool yields H' = 0, p = 1.
pub fn kruskal_wallis(groups: &[Vec<f64>]) -> Result<TestResult> {
    let rd = RankData::new(groups)?;
    kruskal_wallis_ranked(&rd)
}

pub fn kruskal_wallis_ranked(rd: &RankData) -> Result<TestResult> {
    if rd.n_total < 3 {
        return Err(Error::Data("Kruskal-Wallis needs at least 3 observations".into()));
    }
    let n = rd.n_total as f64;
    let h_raw = 12.0 / (n * (n + 1.0))
        * rd.rank_sums
            .iter()
            .zip(&rd.sizes)
            .map(|(r, &nj)| r * r / nj as f64)
            .sum::<f64>()
        - 3.0 * (n + 1.0);
    let correction = rd.tie_correction();
    let df = rd.n_groups() - 1;
    let (statistic, p_value) = if correction <= 0.0 {
        (0.0, 1.0) // every observation tied
    } else {
        let h = h_raw / correction;
        (h, dist::chisq_sf(h.max(0.0), df)?)
    };
    Ok(TestResult {
        statistic,
        df: Some(df),
        p_value,
        method: "kruskal-wallis".into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PosthocMethod {
    Conover,
    Dunn,
    NemenyiTukey,
    NemenyiChisq,
}

impl PosthocMethod {
    pub const ALL: [PosthocMethod; 4] = [
        PosthocMethod::Conover,
        PosthocMethod::Dunn,
        PosthocMethod::NemenyiTukey,
        PosthocMethod::NemenyiChisq,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PosthocMethod::Conover => "conover",
            PosthocMethod::Dunn => "dunn",
            PosthocMethod::NemenyiTukey => "nemenyi-tukey",
            PosthocMethod::NemenyiChisq => "nemenyi-chisq",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Adjustment {
    None,
    Holm,
    Bh,
}

impl Adjustment {
    pub const ALL: [Adjustment; 3] = [Adjustment::None, Adjustment::Holm, Adjustment::Bh];

    pub fn name(&self) -> &'static str {
        match self {
            Adjustment::None => "none",
            Adjustment::Holm => "holm",
            Adjustment::Bh => "bh",
        }
    }
}

/// Pairwise p-values as a lower-triangular matrix: entry (i, j) with j < i
/// compares groups i and j.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosthocMatrix {
    pub method: PosthocMethod,
    pub adjustment: Adjustment,
    /// `p[i][j]` for j < i; inner vectors have length i.
    pub p: Vec<Vec<f64>>,
}

impl PosthocMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i > j {
            self.p[i][j]
        } else {
            self.p[j][i]
        }
    }
}

/// Pairwise comparisons after a Kruskal-Wallis run. `h` is the tie-corrected
/// omnibus statistic (used by Conover's variance term).
pub fn posthoc(
    rd: &RankData,
    h: f64,
    method: PosthocMethod,
    adjustment: Adjustment,
) -> Result<PosthocMatrix> {
    let k = rd.n_groups();
    let n = rd.n_total as f64;
    let mut raw: Vec<f64> = Vec::with_capacity(k * (k - 1) / 2);
    for i in 1..k {
        for j in 0..i {
            let diff = (rd.mean_ranks[i] - rd.mean_ranks[j]).abs();
            let inv = 1.0 / rd.sizes[i] as f64 + 1.0 / rd.sizes[j] as f64;
            let p = match method {
                PosthocMethod::Conover => {
                    let s2 = rd.pooled_rank_variance();
                    let var = s2 * ((n - 1.0 - h) / (n - k as f64)) * inv;
                    if var <= 0.0 {
                        1.0
                    } else {
                        let t = diff / var.sqrt();
                        (2.0 * dist::student_t_sf(t, rd.n_total - k)?).min(1.0)
                    }
                }
                PosthocMethod::Dunn => {
                    let var = (n * (n + 1.0) / 12.0 - rd.tie_term / (12.0 * (n - 1.0))) * inv;
                    if var <= 0.0 {
                        1.0
                    } else {
                        (2.0 * dist::normal_sf(diff / var.sqrt())).min(1.0)
                    }
                }
                PosthocMethod::NemenyiTukey => {
                    // no tie adjustment in this variant
                    let var = (n * (n + 1.0) / 24.0) * inv;
                    dist::studentized_range_sf(diff / var.sqrt(), k)?
                }
                PosthocMethod::NemenyiChisq => {
                    let var = (n * (n + 1.0) / 12.0 - rd.tie_term / (12.0 * (n - 1.0))) * inv;
                    if var <= 0.0 {
                        1.0
                    } else {
                        dist::chisq_sf(diff * diff / var, k - 1)?
                    }
                }
            };
            raw.push(p);
        }
    }
    let adjusted = adjust(&raw, adjustment);
    let mut p = Vec::with_capacity(k);
    let mut it = adjusted.into_iter();
    p.push(Vec::new());
    for i in 1..k {
        p.push((0..i).map(|_| it.next().expect("length matches")).collect());
    }
    Ok(PosthocMatrix {
        method,
        adjustment,
        p,
    })
}

/// Multiple-comparison adjustment over a family of p-values.
/// Holm: step-down max of (m - j + 1) * p_(j). BH: step-up min of m * p_(j) / j.
pub fn adjust(p_values: &[f64], adjustment: Adjustment) -> Vec<f64> {
    let m = p_values.len();
    if m == 0 || adjustment == Adjustment::None {
        return p_values.to_vec();
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].partial_cmp(&p_values[b]).expect("finite p"));
    let mut out = vec![0.0; m];
    match adjustment {
        Adjustment::Holm => {
            let mut running = 0.0_f64;
            for (rank, &idx) in order.iter().enumerate() {
                let scaled = ((m - rank) as f64 * p_values[idx]).min(1.0);
                running = running.max(scaled);
                out[idx] = running;
            }
        }
        Adjustment::Bh => {
            let mut running = 1.0_f64;
            for (rev, &idx) in order.iter().rev().enumerate() {
                let rank = m - rev; // 1-based ascending rank
                let scaled = (m as f64 * p_values[idx] / rank as f64).min(1.0);
                running = running.min(scaled);
                out[idx] = running;
            }
        }
        Adjustment::None => unreachable!(),
    }
    out
}

/// Mann-Whitney U with the normal approximation. `continuity` applies the
/// 0.5 correction toward the mean; `tie_correction` subtracts the tie term
/// from the variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MannWhitneyResult {
    pub u: f64,
    pub u_a: f64,
    pub u_b: f64,
    pub z: f64,
    pub p_value: f64,
}

pub fn mann_whitney(
    a: &[f64],
    b: &[f64],
    continuity: bool,
    tie_correction: bool,
) -> Result<MannWhitneyResult> {
    let rd = RankData::new(&[a.to_vec(), b.to_vec()])?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let n = na + nb;
    let u_a = na * nb + na * (na + 1.0) / 2.0 - rd.rank_sums[0];
    let u_b = na * nb - u_a;
    let u = u_a.min(u_b);
    let mu = na * nb / 2.0;
    let tie = if tie_correction {
        rd.tie_term / (n * (n - 1.0))
    } else {
        0.0
    };
    let var = na * nb / 12.0 * ((n + 1.0) - tie);
    let (z, p_value) = if var <= 0.0 || u == mu {
        (0.0, 1.0)
    } else {
        let shift = if continuity { 0.5 * (mu - u).signum() } else { 0.0 };
        let z = (u - mu + shift) / var.sqrt();
        (z, (2.0 * dist::normal_sf(z.abs())).min(1.0))
    };
    Ok(MannWhitneyResult {
        u,
        u_a,
        u_b,
        z,
        p_value,
    })
}
