//! Lloyd's k-means with k-means++ seeding, used to place prototypes.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Coordinate jitter applied when fewer distinct rows than clusters exist.
pub const DUPLICATE_JITTER: f64 = 1e-6;

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Returns `k` centroids. Rows must be non-empty and share a dimension.
pub fn kmeans<R: Rng>(rows: &[Vec<f64>], k: usize, max_iter: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut centroids = seed_plus_plus(rows, k, rng);
    let d = rows[0].len();
    let mut assign = vec![usize::MAX; rows.len()];
    for _ in 0..max_iter {
        let mut changed = false;
        for (i, row) in rows.iter().enumerate() {
            let best = nearest(&centroids, row).0;
            if assign[i] != best {
                assign[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (row, &c) in rows.iter().zip(&assign) {
            counts[c] += 1;
            for (s, x) in sums[c].iter_mut().zip(row) {
                *s += x;
            }
        }
        for c in 0..k {
            // empty clusters keep their previous position
            if counts[c] > 0 {
                for (dst, s) in centroids[c].iter_mut().zip(&sums[c]) {
                    *dst = s / counts[c] as f64;
                }
            }
        }
    }
    centroids
}

fn nearest(centroids: &[Vec<f64>], row: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, cen) in centroids.iter().enumerate() {
        let d = squared_distance(cen, row);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn seed_plus_plus<R: Rng>(rows: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = rows.len();
    let mut centroids = Vec::with_capacity(k);
    centroids.push(rows[rng.random_range(0..n)].clone());
    let mut d2: Vec<f64> = rows.iter().map(|r| squared_distance(r, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, w) in d2.iter().enumerate() {
                if u < *w {
                    pick = i;
                    break;
                }
                u -= w;
            }
            rows[pick].clone()
        } else {
            // every row already coincides with a centroid
            let base = &rows[rng.random_range(0..n)];
            base.iter()
                .map(|x| {
                    let z: f64 = StandardNormal.sample(rng);
                    x + DUPLICATE_JITTER * z
                })
                .collect()
        };
        for (dist, row) in d2.iter_mut().zip(rows) {
            *dist = dist.min(squared_distance(row, &next));
        }
        centroids.push(next);
    }
    centroids
}
