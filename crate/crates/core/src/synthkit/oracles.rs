//! Brute-force verification oracles. These are deliberately simple
//! implementations used only by tests and the acceptance suite; they share
//! no code with the optimized counterparts they check.

use crate::atlas::PointSpace;
use crate::error::{Error, Result};

/// Oracles refuse instances past this size: they exist for verification,
/// not throughput.
pub const MAX_ORACLE_SIZE: usize = 2048;

fn guard(n: usize, what: &str) -> Result<()> {
    if n > MAX_ORACLE_SIZE {
        return Err(Error::invalid(format!(
            "{what} oracle limited to {MAX_ORACLE_SIZE} items, got {n}"
        )));
    }
    Ok(())
}

/// Exhaustive k-nearest-neighbor scan: every pairwise distance, full sort,
/// ties by index. Returns (index, distance) ascending.
pub fn oracle_knn<S: PointSpace + ?Sized>(
    space: &S,
    query_idx: usize,
    k: usize,
) -> Result<Vec<(usize, f64)>> {
    let n = space.len();
    guard(n, "knn")?;
    if k >= n {
        return Err(Error::invalid("oracle_knn: k must be below point count"));
    }
    let q = space.point_vec(query_idx);
    let mut rows: Vec<(usize, f64)> = (0..n)
        .filter(|&i| i != query_idx)
        .map(|i| {
            let p = space.point_vec(i);
            let mut d2 = 0.0;
            for (a, b) in q.iter().zip(&p) {
                let diff = a - b;
                d2 += diff * diff;
            }
            (i, d2)
        })
        .collect();
    rows.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    rows.truncate(k);
    Ok(rows.into_iter().map(|(i, d2)| (i, d2.sqrt())).collect())
}

/// Total weight of a minimum spanning tree over the complete
/// mutual-reachability graph, via Kruskal on the full edge list.
/// `min_samples` follows the core-distance definition: the distance to each
/// point's min_samples-th nearest *other* point.
pub fn oracle_mst_weight(points: &[[f64; 2]], min_samples: usize) -> Result<f64> {
    let n = points.len();
    guard(n, "mst")?;
    if n < 2 {
        return Err(Error::invalid("oracle_mst: need at least 2 points"));
    }
    if min_samples == 0 || min_samples >= n {
        return Err(Error::invalid("oracle_mst: min_samples out of range"));
    }

    let dist = |a: usize, b: usize| -> f64 {
        let dx = points[a][0] - points[b][0];
        let dy = points[a][1] - points[b][1];
        (dx * dx + dy * dy).sqrt()
    };

    let mut core = vec![0.0f64; n];
    for i in 0..n {
        let mut ds: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| dist(i, j)).collect();
        ds.sort_by(f64::total_cmp);
        core[i] = ds[min_samples - 1];
    }

    let mut edges: Vec<(f64, usize, usize)> = Vec::with_capacity(n * (n - 1) / 2);
    for a in 0..n {
        for b in (a + 1)..n {
            let w = dist(a, b).max(core[a]).max(core[b]);
            edges.push((w, a, b));
        }
    }
    edges.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));

    // Union-find.
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }

    let mut total = 0.0;
    let mut used = 0;
    for (w, a, b) in edges {
        let ra = find(&mut parent, a);
        let rb = find(&mut parent, b);
        if ra != rb {
            parent[ra] = rb;
            total += w;
            used += 1;
            if used == n - 1 {
                break;
            }
        }
    }
    Ok(total)
}

/// Core numbers by iterative peeling: for k = 1, 2, ... repeatedly delete
/// vertices of degree < k; a vertex's core number is the last k it survived.
/// `adjacency` is a simple undirected graph as neighbor lists.
pub fn oracle_kcore(adjacency: &[Vec<usize>]) -> Result<Vec<u32>> {
    let n = adjacency.len();
    guard(n, "kcore")?;
    let mut core = vec![0u32; n];
    let mut alive = vec![true; n];
    let mut k = 1u32;
    loop {
        if !alive.iter().any(|&a| a) {
            break;
        }
        // Peel everything of degree < k among the still-alive vertices.
        loop {
            let mut removed_any = false;
            for v in 0..n {
                if !alive[v] {
                    continue;
                }
                let deg = adjacency[v].iter().filter(|&&u| alive[u]).count();
                if (deg as u32) < k {
                    alive[v] = false;
                    removed_any = true;
                }
            }
            if !removed_any {
                break;
            }
        }
        for v in 0..n {
            if alive[v] {
                core[v] = k;
            }
        }
        k += 1;
    }
    Ok(core)
}

/// Radius of gyration by the naive two-pass route: materialize every
/// distance, then take the quadratic mean.
pub fn oracle_rog(focal: [f64; 2], citers: &[[f64; 2]]) -> Result<f64> {
    guard(citers.len(), "rog")?;
    if citers.is_empty() {
        return Err(Error::invalid("oracle_rog: empty citer set"));
    }
    let dists: Vec<f64> = citers
        .iter()
        .map(|c| {
            let dx = focal[0] - c[0];
            let dy = focal[1] - c[1];
            (dx * dx + dy * dy).sqrt()
        })
        .collect();
    let mean_sq = dists.iter().map(|d| d * d).sum::<f64>() / dists.len() as f64;
    Ok(mean_sq.sqrt())
}

/// Farthest-point distance by exhaustive scan.
pub fn oracle_max_distance(focal: [f64; 2], points: &[[f64; 2]]) -> Result<f64> {
    guard(points.len(), "max distance")?;
    Ok(points
        .iter()
        .map(|p| {
            let dx = focal[0] - p[0];
            let dy = focal[1] - p[1];
            (dx * dx + dy * dy).sqrt()
        })
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kcore_of_k4_is_three() {
        let adj = vec![vec![1, 2, 3], vec![0, 2, 3], vec![0, 1, 3], vec![0, 1, 2]];
        assert_eq!(oracle_kcore(&adj).unwrap(), vec![3, 3, 3, 3]);
    }

    #[test]
    fn kcore_of_star_is_one() {
        let adj = vec![vec![1, 2, 3, 4, 5], vec![0], vec![0], vec![0], vec![0], vec![0]];
        assert_eq!(oracle_kcore(&adj).unwrap(), vec![1; 6]);
    }

    #[test]
    fn rog_of_two_citers_at_three_and_four() {
        let r = oracle_rog([0.0, 0.0], &[[3.0, 0.0], [0.0, 4.0]]).unwrap();
        assert!((r - 12.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn guardrail_trips() {
        let big = vec![[0.0, 0.0]; MAX_ORACLE_SIZE + 1];
        assert!(oracle_max_distance([0.0, 0.0], &big).is_err());
    }
}
