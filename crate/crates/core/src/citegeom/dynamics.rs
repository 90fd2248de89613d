//! k-means clustering of aligned RoG time series with elbow-based model
//! selection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::series::TemporalSeries;

/// Aligns series onto a common year axis spanning all inputs; undefined
/// entries become zeros (including the padding after each series' last
/// value). Returns the axis start year and the dense rows.
pub fn align_series(series: &[TemporalSeries]) -> Result<(i32, Vec<Vec<f64>>)> {
    if series.is_empty() {
        return Err(Error::invalid("no series to align"));
    }
    let start = series.iter().map(|s| s.start_year).min().expect("non-empty");
    let end = series.iter().map(|s| s.end_year()).max().expect("non-empty");
    let len = (end - start + 1) as usize;
    let rows = series
        .iter()
        .map(|s| {
            (0..len)
                .map(|i| s.get(start + i as i32).unwrap_or(0.0))
                .collect()
        })
        .collect();
    Ok((start, rows))
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Within-cluster sum of squared distances.
    pub distortion: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd's algorithm with seeded k-means++ initialization. Deterministic for
/// a fixed seed; empty clusters are re-seeded with the point farthest from
/// its current centroid.
pub fn kmeans(rows: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeansResult> {
    let n = rows.len();
    if k == 0 {
        return Err(Error::invalid("k must be positive"));
    }
    if n < k {
        return Err(Error::invalid(format!("fewer series ({n}) than clusters ({k})")));
    }
    let dim = rows[0].len();
    if rows.iter().any(|r| r.len() != dim) {
        return Err(Error::invalid("series are not aligned to a common axis"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (k as u64).wrapping_mul(0x9E3779B97F4A7C15));

    // k-means++ seeding.
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(rows[rng.gen_range(0..n)].clone());
    let mut min_d2: Vec<f64> = rows.iter().map(|r| sq_dist(r, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = min_d2.iter().sum();
        let next = if total <= 0.0 {
            // All remaining points coincide with a centroid; take the
            // smallest unused index.
            min_d2
                .iter()
                .enumerate()
                .map(|(i, _)| i)
                .find(|&i| !centroids.contains(&rows[i]))
                .unwrap_or(0)
        } else {
            let mut target = rng.gen_range(0.0..total);
            let mut chosen = n - 1;
            for (i, &d) in min_d2.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        };
        centroids.push(rows[next].clone());
        for (i, row) in rows.iter().enumerate() {
            let d = sq_dist(row, centroids.last().expect("just pushed"));
            if d < min_d2[i] {
                min_d2[i] = d;
            }
        }
    }

    let mut assignments = vec![0usize; n];
    for _iter in 0..200 {
        let mut changed = false;
        for (i, row) in rows.iter().enumerate() {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (c, centroid) in centroids.iter().enumerate() {
                let d = sq_dist(row, centroid);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if assignments[i] != best {
                assignments[i] = best;
                changed = true;
            }
        }

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, row) in rows.iter().enumerate() {
            counts[assignments[i]] += 1;
            for (s, v) in sums[assignments[i]].iter_mut().zip(row) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // Re-seed with the point farthest from its centroid.
                let (far, _) = rows
                    .iter()
                    .enumerate()
                    .map(|(i, r)| (i, sq_dist(r, &centroids[assignments[i]])))
                    .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
                    .expect("n >= k >= 1");
                centroids[c] = rows[far].clone();
                assignments[far] = c;
                changed = true;
            } else {
                for (j, s) in sums[c].iter().enumerate() {
                    centroids[c][j] = s / counts[c] as f64;
                }
            }
        }
        if !changed {
            break;
        }
    }

    let distortion = rows
        .iter()
        .enumerate()
        .map(|(i, r)| sq_dist(r, &centroids[assignments[i]]))
        .sum();
    Ok(KMeansResult {
        k,
        assignments,
        centroids,
        distortion,
    })
}

#[derive(Debug, Clone)]
pub struct DynamicsResult {
    pub start_year: i32,
    pub chosen: KMeansResult,
    /// (k, distortion) across the swept range.
    pub distortion_curve: Vec<(usize, f64)>,
}

/// Sweeps k over `k_range` (inclusive), picks k by the elbow rule (maximum
/// discrete second difference of the distortion curve; ties to the smaller
/// k), and returns that clustering. Errors when any requested k exceeds the
/// series count.
pub fn cluster_rog_dynamics(
    series: &[TemporalSeries],
    k_range: (usize, usize),
    seed: u64,
) -> Result<DynamicsResult> {
    let (k_lo, k_hi) = k_range;
    if k_lo == 0 || k_lo > k_hi {
        return Err(Error::invalid("invalid k range"));
    }
    if k_hi > series.len() {
        return Err(Error::invalid(format!(
            "fewer series ({}) than clusters ({k_hi})",
            series.len()
        )));
    }
    let (start_year, rows) = align_series(series)?;

    let mut results = Vec::new();
    for k in k_lo..=k_hi {
        results.push(kmeans(&rows, k, seed)?);
    }
    let curve: Vec<(usize, f64)> = results.iter().map(|r| (r.k, r.distortion)).collect();

    let chosen_k = if curve.len() < 3 {
        curve[0].0
    } else {
        let mut best_k = curve[1].0;
        let mut best_curvature = f64::NEG_INFINITY;
        for i in 1..curve.len() - 1 {
            let curvature = curve[i - 1].1 - 2.0 * curve[i].1 + curve[i + 1].1;
            if curvature > best_curvature {
                best_curvature = curvature;
                best_k = curve[i].0;
            }
        }
        best_k
    };
    let chosen = results
        .into_iter()
        .find(|r| r.k == chosen_k)
        .expect("chosen k swept");
    Ok(DynamicsResult {
        start_year,
        chosen,
        distortion_curve: curve,
    })
}
