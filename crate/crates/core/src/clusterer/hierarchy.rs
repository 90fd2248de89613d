//! Core distances, mutual-reachability MST, and the single-linkage
//! dendrogram built from it.

use rayon::prelude::*;

use crate::atlas::KdTree2;
use crate::error::{Error, Result};

/// One merge of the single-linkage dendrogram. Node ids follow the usual
/// linkage convention: leaves are `0..n`, merge `i` creates node `n + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub distance: f64,
    pub size: usize,
}

/// Single-linkage dendrogram over mutual-reachability distances: exactly
/// `n - 1` merges in non-decreasing distance order.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    pub n_points: usize,
    pub merges: Vec<Merge>,
}

impl Hierarchy {
    /// Sum of merge distances, which equals the total weight of the
    /// underlying minimum spanning tree.
    pub fn total_weight(&self) -> f64 {
        self.merges.iter().map(|m| m.distance).sum()
    }

    /// Children of an internal node (id >= n_points).
    pub fn children(&self, node: usize) -> (usize, usize) {
        let m = &self.merges[node - self.n_points];
        (m.a, m.b)
    }

    /// Size of any node: 1 for leaves, merged size for internal nodes.
    pub fn node_size(&self, node: usize) -> usize {
        if node < self.n_points {
            1
        } else {
            self.merges[node - self.n_points].size
        }
    }

    pub fn root(&self) -> usize {
        self.n_points + self.merges.len() - 1
    }

    /// Leaf point indices under `node`, ascending.
    pub fn points_under(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(cur) = stack.pop() {
            if cur < self.n_points {
                out.push(cur);
            } else {
                let (a, b) = self.children(cur);
                stack.push(a);
                stack.push(b);
            }
        }
        out.sort_unstable();
        out
    }
}

/// Distance from each point to its `min_samples`-th nearest other point.
pub fn core_distances(points: &[[f64; 2]], min_samples: usize) -> Result<Vec<f64>> {
    let n = points.len();
    if min_samples == 0 {
        return Err(Error::invalid("min_samples must be positive"));
    }
    if min_samples >= n {
        return Err(Error::invalid(format!(
            "min_samples {min_samples} must be below the point count {n}"
        )));
    }
    let tree = KdTree2::build(points);
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let nn = tree.knn_sq(points[i], min_samples, Some(i));
            nn.last().expect("min_samples >= 1").1.sqrt()
        })
        .collect())
}

fn euclidean(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}

/// Mutual reachability: max(core_a, core_b, d(a, b)).
pub fn mutual_reachability(points: &[[f64; 2]], core: &[f64], a: usize, b: usize) -> f64 {
    euclidean(points[a], points[b]).max(core[a]).max(core[b])
}

/// MST edges of the complete mutual-reachability graph via dense Prim.
/// Ties are resolved by ascending point index, and the returned edges are
/// canonically sorted by (distance, low index, high index).
fn mst_edges(points: &[[f64; 2]], core: &[f64]) -> Vec<(usize, usize, f64)> {
    let n = points.len();
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut from = vec![0usize; n];
    let mut edges = Vec::with_capacity(n - 1);

    let mut current = 0usize;
    for _ in 1..n {
        in_tree[current] = true;
        let mut next = usize::MAX;
        let mut next_dist = f64::INFINITY;
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let mrd = mutual_reachability(points, core, current, j);
            if mrd < best[j] {
                best[j] = mrd;
                from[j] = current;
            }
            if best[j] < next_dist {
                next_dist = best[j];
                next = j;
            }
        }
        edges.push((from[next], next, next_dist));
        current = next;
    }

    edges = edges
        .into_iter()
        .map(|(a, b, d)| if a <= b { (a, b, d) } else { (b, a, d) })
        .collect();
    edges.sort_by(|x, y| {
        x.2.total_cmp(&y.2)
            .then(x.0.cmp(&y.0))
            .then(x.1.cmp(&y.1))
    });
    edges
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
    next_label: usize,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        let total = 2 * n - 1;
        UnionFind {
            parent: (0..total).collect(),
            size: (0..total).map(|i| if i < n { 1 } else { 0 }).collect(),
            next_label: n,
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn merge(&mut self, a: usize, b: usize) -> usize {
        let label = self.next_label;
        self.next_label += 1;
        self.parent[a] = label;
        self.parent[b] = label;
        self.size[label] = self.size[a] + self.size[b];
        label
    }
}

/// Builds the single-linkage dendrogram over mutual-reachability distances.
pub fn build_hierarchy(points: &[[f64; 2]], min_samples: usize) -> Result<Hierarchy> {
    let n = points.len();
    if n < 2 {
        return Err(Error::invalid("hierarchy needs at least 2 points"));
    }
    for (i, p) in points.iter().enumerate() {
        if !p[0].is_finite() || !p[1].is_finite() {
            return Err(Error::invalid(format!("non-finite coordinates at point {i}")));
        }
    }
    let core = core_distances(points, min_samples)?;
    let edges = mst_edges(points, &core);

    let mut uf = UnionFind::new(n);
    let mut merges = Vec::with_capacity(n - 1);
    for (a, b, distance) in edges {
        let ra = uf.find(a);
        let rb = uf.find(b);
        let label = uf.merge(ra, rb);
        merges.push(Merge {
            a: ra,
            b: rb,
            distance,
            size: uf.size[label],
        });
    }
    Ok(Hierarchy {
        n_points: n,
        merges,
    })
}
