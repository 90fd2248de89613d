//! Hierarchical density clustering of the 2-D map: core distances,
//! mutual-reachability MST, single-linkage hierarchy, condensed tree, manual
//! cluster selection, and nested re-clustering of a chosen branch.

mod condense;
mod hierarchy;

pub use condense::{condense, CondensedNode, CondensedTree};
pub use hierarchy::{build_hierarchy, core_distances, mutual_reachability, Hierarchy, Merge};

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::PaperId;
use crate::error::{Error, Result};

/// Noise label used in `clusters.csv`.
pub const NOISE_LABEL: i64 = -1;

/// Clustering knobs. The defaults mirror the reference run's ratios of
/// neighborhood size and minimum cluster size to corpus size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterParams {
    pub min_samples: usize,
    pub min_cluster_size: usize,
}

impl ClusterParams {
    pub fn scaled_defaults(n_points: usize) -> Self {
        ClusterParams {
            min_samples: (n_points / 8556).max(1),
            min_cluster_size: (n_points / 856).max(2),
        }
    }
}

/// A manual cut: the branch (condensed-tree node id) and the density
/// threshold at which membership is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub branch: usize,
    pub lambda: f64,
}

/// Per-point cluster labels; `NOISE_LABEL` marks unclustered points.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub labels: Vec<i64>,
    pub n_clusters: usize,
}

impl ClusterAssignment {
    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == NOISE_LABEL).count()
    }

    pub fn noise_share(&self) -> f64 {
        if self.labels.is_empty() {
            0.0
        } else {
            self.noise_count() as f64 / self.labels.len() as f64
        }
    }

    pub fn members(&self, label: i64) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == label)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.n_clusters];
        for &l in &self.labels {
            if l >= 0 {
                sizes[l as usize] += 1;
            }
        }
        sizes
    }
}

/// Deterministic manual-cut selection. A point belongs to the selected
/// branch whose subtree contains its departure, provided it departed at or
/// after the cut's lambda; all other points are noise. Labels follow cut
/// order. Selecting both an ancestor and its descendant is an error.
pub fn select_clusters(tree: &CondensedTree, cuts: &[Cut]) -> Result<ClusterAssignment> {
    for cut in cuts {
        if cut.branch >= tree.nodes.len() {
            return Err(Error::invalid(format!(
                "cut references branch {} but the tree has {} nodes",
                cut.branch,
                tree.nodes.len()
            )));
        }
        let node = &tree.nodes[cut.branch];
        if cut.lambda < node.lambda_birth || cut.lambda > node.lambda_death {
            return Err(Error::invalid(format!(
                "cut lambda {} outside branch {} lifetime [{}, {}]",
                cut.lambda, cut.branch, node.lambda_birth, node.lambda_death
            )));
        }
    }
    for (i, a) in cuts.iter().enumerate() {
        for b in cuts.iter().skip(i + 1) {
            if tree.is_ancestor_or_self(a.branch, b.branch)
                || tree.is_ancestor_or_self(b.branch, a.branch)
            {
                return Err(Error::invalid(format!(
                    "overlapping selections: branches {} and {}",
                    a.branch, b.branch
                )));
            }
        }
    }

    // Map every tree node to the selected branch covering it, if any.
    let mut selected_of: Vec<Option<usize>> = vec![None; tree.nodes.len()];
    for (k, cut) in cuts.iter().enumerate() {
        for node in tree.subtree(cut.branch) {
            selected_of[node] = Some(k);
        }
    }

    let departures = tree.departures();
    let mut labels = vec![NOISE_LABEL; tree.n_points];
    for (point, &(node, lambda)) in departures.iter().enumerate() {
        if let Some(k) = selected_of[node] {
            if lambda >= cuts[k].lambda {
                labels[point] = k as i64;
            }
        }
    }
    Ok(ClusterAssignment {
        labels,
        n_clusters: cuts.len(),
    })
}

/// The default unattended selection: every leaf branch, cut at its birth,
/// i.e. each leaf keeps all points that ever belonged to it.
pub fn leaf_cuts(tree: &CondensedTree) -> Vec<Cut> {
    tree.leaves()
        .into_iter()
        .map(|branch| Cut {
            branch,
            lambda: tree.nodes[branch].lambda_birth,
        })
        .collect()
}

/// Re-clusters a subset of the map (one selected cluster) with fresh
/// parameters. Lambda values in the returned tree are local to the subset.
/// The returned hierarchy/tree index into `subset` positions.
pub fn refine(
    points: &[[f64; 2]],
    subset: &[usize],
    params: ClusterParams,
) -> Result<(Hierarchy, CondensedTree)> {
    if subset.len() <= params.min_cluster_size {
        return Err(Error::invalid(format!(
            "refine subset of {} points is too small for min_cluster_size {}",
            subset.len(),
            params.min_cluster_size
        )));
    }
    let sub: Vec<[f64; 2]> = subset.iter().map(|&i| points[i]).collect();
    let hierarchy = build_hierarchy(&sub, params.min_samples)?;
    let tree = condense(&hierarchy, params.min_cluster_size)?;
    Ok((hierarchy, tree))
}

// ---------------------------------------------------------------------------
// Serialization: tree.json and clusters.csv
// ---------------------------------------------------------------------------

/// Lambdas can be infinite (zero-distance merges); the JSON form encodes
/// infinity as null.
fn lambda_to_json(l: f64) -> Option<f64> {
    l.is_finite().then_some(l)
}

fn lambda_from_json(l: Option<f64>) -> f64 {
    l.unwrap_or(f64::INFINITY)
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeFile {
    id: usize,
    parent: Option<usize>,
    lambda_birth: Option<f64>,
    lambda_death: Option<f64>,
    size: usize,
    children: Vec<usize>,
    /// (paper id, departure lambda) pairs.
    fallouts: Vec<(PaperId, Option<f64>)>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TreeFile {
    min_cluster_size: usize,
    n_points: usize,
    nodes: Vec<NodeFile>,
}

/// Writes `tree.json`. `ids` maps point indices to paper ids.
pub fn save_tree(tree: &CondensedTree, ids: &[PaperId], path: &Path) -> Result<()> {
    if ids.len() != tree.n_points {
        return Err(Error::invalid("id list does not match tree point count"));
    }
    let file = TreeFile {
        min_cluster_size: tree.min_cluster_size,
        n_points: tree.n_points,
        nodes: tree
            .nodes
            .iter()
            .enumerate()
            .map(|(id, n)| NodeFile {
                id,
                parent: n.parent,
                lambda_birth: lambda_to_json(n.lambda_birth),
                lambda_death: lambda_to_json(n.lambda_death),
                size: n.size_at_birth,
                children: n.children.clone(),
                fallouts: n
                    .fallouts
                    .iter()
                    .map(|&(p, l)| (ids[p].clone(), lambda_to_json(l)))
                    .collect(),
            })
            .collect(),
    };
    let out = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    serde_json::to_writer_pretty(out, &file)
        .map_err(|e| Error::invalid(format!("serialize tree: {e}")))
}

/// Reads `tree.json` back, returning the tree plus the id order used for
/// point indices (ascending id).
pub fn load_tree(path: &Path) -> Result<(CondensedTree, Vec<PaperId>)> {
    let file: TreeFile = serde_json::from_reader(BufReader::new(
        File::open(path).map_err(|e| Error::io(path, e))?,
    ))
    .map_err(|e| Error::invalid(format!("parse {}: {e}", path.display())))?;

    let mut all_ids: Vec<PaperId> = file
        .nodes
        .iter()
        .flat_map(|n| n.fallouts.iter().map(|(id, _)| id.clone()))
        .collect();
    all_ids.sort();
    all_ids.dedup();
    if all_ids.len() != file.n_points {
        return Err(Error::invalid(format!(
            "tree file lists {} unique departing points, expected {}",
            all_ids.len(),
            file.n_points
        )));
    }
    let index: BTreeMap<&PaperId, usize> =
        all_ids.iter().enumerate().map(|(i, id)| (id, i)).collect();

    let nodes = file
        .nodes
        .into_iter()
        .map(|n| CondensedNode {
            parent: n.parent,
            lambda_birth: lambda_from_json(n.lambda_birth),
            lambda_death: lambda_from_json(n.lambda_death),
            size_at_birth: n.size,
            children: n.children,
            fallouts: n
                .fallouts
                .into_iter()
                .map(|(id, l)| (index[&id], lambda_from_json(l)))
                .collect(),
        })
        .collect();

    Ok((
        CondensedTree {
            min_cluster_size: file.min_cluster_size,
            n_points: file.n_points,
            nodes,
        },
        all_ids,
    ))
}

/// Writes `clusters.csv` (`id,label`, noise as -1), id-sorted.
pub fn save_assignment(
    assignment: &ClusterAssignment,
    ids: &[PaperId],
    path: &Path,
) -> Result<()> {
    if ids.len() != assignment.labels.len() {
        return Err(Error::invalid("id list does not match assignment length"));
    }
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&a, &b| ids[a].cmp(&ids[b]));
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::invalid(format!("open {}: {e}", path.display())))?;
    w.write_record(["id", "label"])
        .map_err(|e| Error::invalid(format!("write clusters: {e}")))?;
    for i in order {
        w.write_record([ids[i].as_str(), &assignment.labels[i].to_string()])
            .map_err(|e| Error::invalid(format!("write clusters: {e}")))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads `clusters.csv` and aligns labels to `ids` order.
pub fn load_assignment(path: &Path, ids: &[PaperId]) -> Result<ClusterAssignment> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::invalid(format!("open {}: {e}", path.display())))?;
    let mut by_id: BTreeMap<PaperId, i64> = BTreeMap::new();
    for (row_no, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::parse(path, row_no + 2, e.to_string()))?;
        let label: i64 = row[1]
            .parse()
            .map_err(|e| Error::parse(path, row_no + 2, format!("bad label: {e}")))?;
        by_id.insert(PaperId::new(&row[0]), label);
    }
    let mut labels = Vec::with_capacity(ids.len());
    for id in ids {
        let Some(&l) = by_id.get(id) else {
            return Err(Error::invalid(format!("clusters file missing id {id}")));
        };
        labels.push(l);
    }
    let n_clusters = labels.iter().filter(|&&l| l >= 0).map(|&l| l + 1).max().unwrap_or(0) as usize;
    Ok(ClusterAssignment { labels, n_clusters })
}
