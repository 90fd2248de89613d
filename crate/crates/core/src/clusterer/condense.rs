//! Condensation of a single-linkage dendrogram: splits whose smaller side
//! falls below `min_cluster_size` become point fall-outs instead of new
//! clusters, with lambda = 1 / mutual-reachability distance.

use crate::error::{Error, Result};

use super::hierarchy::Hierarchy;

#[derive(Debug, Clone)]
pub struct CondensedNode {
    pub parent: Option<usize>,
    pub lambda_birth: f64,
    /// Lambda of the node's final event: the split creating its children,
    /// or the dissolution that emptied it.
    pub lambda_death: f64,
    pub size_at_birth: usize,
    /// Exactly zero or two entries.
    pub children: Vec<usize>,
    /// (point index, lambda at which the point left this node), sorted by
    /// (lambda, point).
    pub fallouts: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
pub struct CondensedTree {
    pub min_cluster_size: usize,
    pub n_points: usize,
    /// Node 0 is the root covering all points.
    pub nodes: Vec<CondensedNode>,
}

impl CondensedTree {
    pub const ROOT: usize = 0;

    /// Node ids with no children, ascending.
    pub fn leaves(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].children.is_empty())
            .collect()
    }

    /// Lambda lifetime of a branch.
    pub fn persistence(&self, node: usize) -> f64 {
        self.nodes[node].lambda_death - self.nodes[node].lambda_birth
    }

    /// For every point, the node it fell out of and the lambda at departure.
    pub fn departures(&self) -> Vec<(usize, f64)> {
        let mut out = vec![(usize::MAX, f64::NAN); self.n_points];
        for (node_id, node) in self.nodes.iter().enumerate() {
            for &(point, lambda) in &node.fallouts {
                debug_assert_eq!(out[point].0, usize::MAX, "point departs twice");
                out[point] = (node_id, lambda);
            }
        }
        debug_assert!(out.iter().all(|(n, _)| *n != usize::MAX));
        out
    }

    /// Node ids in the subtree rooted at `node`, including it.
    pub fn subtree(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(cur) = stack.pop() {
            out.push(cur);
            stack.extend(self.nodes[cur].children.iter().copied());
        }
        out.sort_unstable();
        out
    }

    pub fn is_ancestor_or_self(&self, ancestor: usize, mut node: usize) -> bool {
        loop {
            if node == ancestor {
                return true;
            }
            match self.nodes[node].parent {
                Some(p) => node = p,
                None => return false,
            }
        }
    }
}

fn to_lambda(distance: f64) -> f64 {
    if distance > 0.0 {
        1.0 / distance
    } else {
        f64::INFINITY
    }
}

/// Condenses a hierarchy. Every point departs exactly once; member counts
/// satisfy `size_at_birth == fallouts + sum(child size_at_birth)` on every
/// node.
pub fn condense(hierarchy: &Hierarchy, min_cluster_size: usize) -> Result<CondensedTree> {
    if min_cluster_size < 2 {
        return Err(Error::invalid("min_cluster_size must be at least 2"));
    }
    let n = hierarchy.n_points;
    let mut nodes = vec![CondensedNode {
        parent: None,
        lambda_birth: 0.0,
        lambda_death: 0.0,
        size_at_birth: n,
        children: Vec::new(),
        fallouts: Vec::new(),
    }];

    // (single-linkage node, condensed node id). The single-linkage node is
    // always internal here: a continuing side of size >= min_cluster_size >= 2.
    let mut stack: Vec<(usize, usize)> = vec![(hierarchy.root(), 0)];
    while let Some((slt_node, cid)) = stack.pop() {
        let (a, b) = hierarchy.children(slt_node);
        let merge = &hierarchy.merges[slt_node - n];
        let lambda = to_lambda(merge.distance);
        let size_a = hierarchy.node_size(a);
        let size_b = hierarchy.node_size(b);
        let big_a = size_a >= min_cluster_size;
        let big_b = size_b >= min_cluster_size;

        match (big_a, big_b) {
            (true, true) => {
                let ca = nodes.len();
                nodes.push(CondensedNode {
                    parent: Some(cid),
                    lambda_birth: lambda,
                    lambda_death: lambda,
                    size_at_birth: size_a,
                    children: Vec::new(),
                    fallouts: Vec::new(),
                });
                let cb = nodes.len();
                nodes.push(CondensedNode {
                    parent: Some(cid),
                    lambda_birth: lambda,
                    lambda_death: lambda,
                    size_at_birth: size_b,
                    children: Vec::new(),
                    fallouts: Vec::new(),
                });
                nodes[cid].children = vec![ca, cb];
                nodes[cid].lambda_death = lambda;
                stack.push((b, cb));
                stack.push((a, ca));
            }
            (true, false) => {
                drop_points(hierarchy, b, lambda, &mut nodes[cid]);
                stack.push((a, cid));
            }
            (false, true) => {
                drop_points(hierarchy, a, lambda, &mut nodes[cid]);
                stack.push((b, cid));
            }
            (false, false) => {
                drop_points(hierarchy, a, lambda, &mut nodes[cid]);
                drop_points(hierarchy, b, lambda, &mut nodes[cid]);
                nodes[cid].lambda_death = lambda;
            }
        }
    }

    for node in &mut nodes {
        node.fallouts
            .sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)));
    }

    Ok(CondensedTree {
        min_cluster_size,
        n_points: n,
        nodes,
    })
}

fn drop_points(hierarchy: &Hierarchy, slt_node: usize, lambda: f64, node: &mut CondensedNode) {
    for point in hierarchy.points_under(slt_node) {
        node.fallouts.push((point, lambda));
    }
    node.lambda_death = lambda;
}
