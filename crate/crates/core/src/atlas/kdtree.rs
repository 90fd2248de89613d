//! Exact 2-D k-nearest-neighbor index.
//!
//! Ties in distance are broken by ascending point index so results are
//! deterministic and directly comparable with an exhaustive-scan oracle.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug, Clone, Copy)]
struct Node {
    point: u32,
    left: i32,
    right: i32,
}

const NONE: i32 = -1;

/// Candidate in the bounded result heap; the heap keeps the *worst* candidate
/// on top. Ordering is lexicographic on (squared distance, index).
#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    d2: f64,
    idx: u32,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2
            .total_cmp(&other.d2)
            .then(self.idx.cmp(&other.idx))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone)]
pub struct KdTree2 {
    points: Vec<[f64; 2]>,
    nodes: Vec<Node>,
    root: i32,
}

impl KdTree2 {
    pub fn build(points: &[[f64; 2]]) -> Self {
        let mut order: Vec<u32> = (0..points.len() as u32).collect();
        let mut tree = KdTree2 {
            points: points.to_vec(),
            nodes: Vec::with_capacity(points.len()),
            root: NONE,
        };
        tree.root = tree.build_rec(&mut order, 0);
        tree
    }

    fn build_rec(&mut self, order: &mut [u32], depth: usize) -> i32 {
        if order.is_empty() {
            return NONE;
        }
        let axis = depth % 2;
        let mid = order.len() / 2;
        let points = &self.points;
        order.select_nth_unstable_by(mid, |&a, &b| {
            points[a as usize][axis]
                .total_cmp(&points[b as usize][axis])
                .then(a.cmp(&b))
        });
        let point = order[mid];
        let node_id = self.nodes.len() as i32;
        self.nodes.push(Node {
            point,
            left: NONE,
            right: NONE,
        });
        let (lo, rest) = order.split_at_mut(mid);
        let hi = &mut rest[1..];
        let left = self.build_rec(lo, depth + 1);
        let right = self.build_rec(hi, depth + 1);
        self.nodes[node_id as usize].left = left;
        self.nodes[node_id as usize].right = right;
        node_id
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The k nearest points to `query`, ascending by (distance, index),
    /// optionally excluding one point index. Returns squared distances.
    pub fn knn_sq(&self, query: [f64; 2], k: usize, exclude: Option<usize>) -> Vec<(usize, f64)> {
        if k == 0 || self.points.is_empty() {
            return Vec::new();
        }
        let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
        self.search(self.root, query, k, exclude, 0, &mut heap);
        let mut out: Vec<Candidate> = heap.into_vec();
        out.sort();
        out.into_iter().map(|c| (c.idx as usize, c.d2)).collect()
    }

    fn search(
        &self,
        node_id: i32,
        query: [f64; 2],
        k: usize,
        exclude: Option<usize>,
        depth: usize,
        heap: &mut BinaryHeap<Candidate>,
    ) {
        if node_id == NONE {
            return;
        }
        let node = self.nodes[node_id as usize];
        let idx = node.point as usize;
        let p = self.points[idx];
        if Some(idx) != exclude {
            let dx = query[0] - p[0];
            let dy = query[1] - p[1];
            let cand = Candidate {
                d2: dx * dx + dy * dy,
                idx: node.point,
            };
            if heap.len() < k {
                heap.push(cand);
            } else if cand < *heap.peek().expect("heap nonempty") {
                heap.pop();
                heap.push(cand);
            }
        }

        let axis = depth % 2;
        let diff = query[axis] - p[axis];
        let (near, far) = if diff <= 0.0 {
            (node.left, node.right)
        } else {
            (node.right, node.left)
        };
        self.search(near, query, k, exclude, depth + 1, heap);
        // The far side may still hold a closer point, or an equal-distance
        // point with a smaller index, so prune only on a strictly larger gap.
        let must_visit = heap.len() < k
            || diff * diff <= heap.peek().expect("heap nonempty").d2;
        if must_visit {
            self.search(far, query, k, exclude, depth + 1, heap);
        }
    }
}
