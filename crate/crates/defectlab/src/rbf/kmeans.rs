//! Lloyd's algorithm with seeded initialization from k distinct data points.

use crate::error::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Cluster `points` into `k` groups. Initialization picks k distinct rows
/// uniformly without replacement; iteration stops when assignments are
/// stable or after `iters` passes. An emptied cluster is re-seeded to the
/// point farthest from its current center. Ties in assignment go to the
/// lowest center index.
pub fn kmeans(
    points: &[Vec<f64>],
    k: usize,
    iters: usize,
    seed: u64,
) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    let n = points.len();
    if k == 0 {
        return Err(Error::Config("kmeans: k must be >= 1".into()));
    }
    if k > n {
        return Err(Error::Data(format!("kmeans: k = {k} exceeds {n} points")));
    }
    let dim = points[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = rand::seq::index::sample(&mut rng, n, k);
    let mut centers: Vec<Vec<f64>> = init.iter().map(|i| points[i].clone()).collect();

    let mut assignments = vec![usize::MAX; n];
    for _ in 0..iters {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let a = nearest(p, &centers);
            if a != assignments[i] {
                assignments[i] = a;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        // recompute means
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, p) in points.iter().enumerate() {
            let a = assignments[i];
            counts[a] += 1;
            for (s, &x) in sums[a].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for s in &mut sums[c] {
                    *s /= counts[c] as f64;
                }
                centers[c] = std::mem::take(&mut sums[c]);
            } else {
                // re-seed to the point farthest from its own center
                let far = points
                    .iter()
                    .enumerate()
                    .max_by(|a, b| {
                        let da = dist2(a.1, &centers[assignments[a.0]]);
                        let db = dist2(b.1, &centers[assignments[b.0]]);
                        da.partial_cmp(&db).unwrap().then(b.0.cmp(&a.0))
                    })
                    .map(|(i, _)| i)
                    .expect("points non-empty");
                centers[c] = points[far].clone();
            }
        }
    }
    Ok((centers, assignments))
}

fn nearest(p: &[f64], centers: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = dist2(p, &centers[0]);
    for (c, center) in centers.iter().enumerate().skip(1) {
        let d = dist2(p, center);
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    best
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Within-cluster sum of squares for a given clustering.
#[cfg(test)]
pub fn wcss(points: &[Vec<f64>], centers: &[Vec<f64>], assignments: &[usize]) -> f64 {
    points
        .iter()
        .zip(assignments)
        .map(|(p, &a)| dist2(p, &centers[a]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k1_center_is_the_mean() {
        let points = vec![vec![0.0, 0.0], vec![2.0, 4.0], vec![4.0, 2.0]];
        let (centers, assignments) = kmeans(&points, 1, 50, 0).unwrap();
        assert_eq!(centers, vec![vec![2.0, 2.0]]);
        assert_eq!(assignments, vec![0, 0, 0]);
    }

    #[test]
    fn two_well_separated_pairs() {
        let points = vec![
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![10.0, 0.0],
            vec![10.0, 1.0],
        ];
        // brute force over 2-partitions says {(0,0.5),(10,0.5)} is the unique
        // WCSS optimum; seed 0 reaches it
        let (mut centers, _) = kmeans(&points, 2, 50, 0).unwrap();
        centers.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        assert_eq!(centers, vec![vec![0.0, 0.5], vec![10.0, 0.5]]);
    }

    #[test]
    fn k_equals_n_gives_zero_wcss() {
        let points = vec![vec![1.0], vec![2.0], vec![5.0]];
        let (centers, assignments) = kmeans(&points, 3, 50, 1).unwrap();
        assert_eq!(wcss(&points, &centers, &assignments), 0.0);
        let mut sorted: Vec<f64> = centers.iter().map(|c| c[0]).collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(sorted, vec![1.0, 2.0, 5.0]);
    }

    #[test]
    fn k_greater_than_n_is_an_error() {
        assert!(kmeans(&[vec![1.0]], 2, 10, 0).is_err());
    }

    #[test]
    fn wcss_non_increasing_per_iteration() {
        let points: Vec<Vec<f64>> = (0..60)
            .map(|i| vec![(i as f64 * 0.73).sin() * 10.0, (i as f64 * 1.37).cos() * 10.0])
            .collect();
        let mut last = f64::INFINITY;
        for iters in 1..12 {
            let (centers, assignments) = kmeans(&points, 4, iters, 7).unwrap();
            let w = wcss(&points, &centers, &assignments);
            assert!(w <= last + 1e-9, "iters {iters}: {w} > {last}");
            last = w;
        }
    }

    #[test]
    fn deterministic_for_a_seed() {
        let points: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64 % 7.0, i as f64 % 3.0]).collect();
        assert_eq!(
            kmeans(&points, 3, 50, 42).unwrap(),
            kmeans(&points, 3, 50, 42).unwrap()
        );
    }
}
