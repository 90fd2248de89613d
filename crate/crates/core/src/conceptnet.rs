//! Per-cluster concept co-occurrence networks: yearly graphs, cumulative
//! accumulation, k-core decomposition, and the normalized coreness of a
//! tagged concept subset over time.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::corpus::ConceptId;
use crate::error::{Error, Result};
use crate::series::{standard_error, TemporalSeries};

/// Undirected weighted co-occurrence graph for one year. Edge keys are
/// canonical (low, high) concept pairs; weights count papers.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct YearlyGraph {
    pub year: i32,
    pub nodes: BTreeSet<ConceptId>,
    pub edges: BTreeMap<(ConceptId, ConceptId), u32>,
}

impl YearlyGraph {
    pub fn new(year: i32) -> Self {
        YearlyGraph {
            year,
            nodes: BTreeSet::new(),
            edges: BTreeMap::new(),
        }
    }

    pub fn add_edge(&mut self, a: ConceptId, b: ConceptId, weight: u32) {
        assert!(a != b, "self-loops are not allowed");
        assert!(weight >= 1);
        let key = if a <= b { (a, b) } else { (b, a) };
        self.nodes.insert(key.0.clone());
        self.nodes.insert(key.1.clone());
        *self.edges.entry(key).or_insert(0) += weight;
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Co-occurrence graph of one year of papers: an edge per unordered concept
/// pair co-appearing on a paper, weighted by the number of papers containing
/// both. Papers with fewer than two distinct concepts contribute nothing.
pub fn yearly_cooccurrence<'a, I>(year: i32, papers_concepts: I) -> YearlyGraph
where
    I: IntoIterator<Item = &'a [ConceptId]>,
{
    let mut graph = YearlyGraph::new(year);
    for concepts in papers_concepts {
        // Concept lists are already sorted and deduplicated by concept_view.
        if concepts.len() < 2 {
            continue;
        }
        for i in 0..concepts.len() {
            for j in (i + 1)..concepts.len() {
                graph.add_edge(concepts[i].clone(), concepts[j].clone(), 1);
            }
        }
    }
    graph
}

/// Union of all yearly graphs up to `year`, with summed edge weights and
/// core numbers recomputed after every accumulation step.
#[derive(Debug, Clone, Default)]
pub struct CumulativeGraph {
    pub year: i32,
    pub nodes: BTreeSet<ConceptId>,
    pub edges: BTreeMap<(ConceptId, ConceptId), u32>,
    pub core: BTreeMap<ConceptId, u32>,
    pub c_max: u32,
}

impl CumulativeGraph {
    /// An empty cumulative graph positioned just before `first_year`.
    pub fn before(first_year: i32) -> Self {
        CumulativeGraph {
            year: first_year - 1,
            ..Default::default()
        }
    }

    fn recompute_cores(&mut self) {
        let (core, c_max) = kcore_by_concept(&self.nodes, &self.edges);
        self.core = core;
        self.c_max = c_max;
    }
}

/// Accumulates one more year: node and edge union, weights summed, core
/// numbers recomputed. The incoming year must directly follow the previous.
pub fn accumulate(prev: &CumulativeGraph, current: &YearlyGraph) -> Result<CumulativeGraph> {
    if current.year != prev.year + 1 {
        return Err(Error::invalid(format!(
            "accumulate expects year {} after {}, got {}",
            prev.year + 1,
            prev.year,
            current.year
        )));
    }
    let mut next = CumulativeGraph {
        year: current.year,
        nodes: prev.nodes.clone(),
        edges: prev.edges.clone(),
        core: BTreeMap::new(),
        c_max: 0,
    };
    next.nodes.extend(current.nodes.iter().cloned());
    for (key, w) in &current.edges {
        *next.edges.entry(key.clone()).or_insert(0) += w;
    }
    next.recompute_cores();
    Ok(next)
}

/// k-core decomposition on the unweighted simple graph (weights are stored
/// but ignored), via bucketed peeling. Returns per-node core numbers and the
/// maximum core number.
pub fn kcore_by_concept(
    nodes: &BTreeSet<ConceptId>,
    edges: &BTreeMap<(ConceptId, ConceptId), u32>,
) -> (BTreeMap<ConceptId, u32>, u32) {
    let ids: Vec<&ConceptId> = nodes.iter().collect();
    let index: BTreeMap<&ConceptId, usize> =
        ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let mut adjacency = vec![Vec::new(); ids.len()];
    for (a, b) in edges.keys() {
        let ia = index[a];
        let ib = index[b];
        adjacency[ia].push(ib);
        adjacency[ib].push(ia);
    }
    let core = core_numbers(&adjacency);
    let c_max = core.iter().copied().max().unwrap_or(0);
    (
        ids.into_iter()
            .zip(core.iter().copied())
            .map(|(id, c)| (id.clone(), c))
            .collect(),
        c_max,
    )
}

/// Core numbers of a simple undirected graph given as adjacency lists,
/// using the linear-time bucket ordering.
pub fn core_numbers(adjacency: &[Vec<usize>]) -> Vec<u32> {
    let n = adjacency.len();
    if n == 0 {
        return Vec::new();
    }
    let mut degree: Vec<usize> = adjacency.iter().map(Vec::len).collect();
    let max_degree = degree.iter().copied().max().unwrap_or(0);

    // vert: vertices sorted by current degree; pos: position of each vertex
    // in vert; bin: start offset of each degree bucket.
    let mut bin = vec![0usize; max_degree + 1];
    for &d in &degree {
        bin[d] += 1;
    }
    let mut start = 0;
    for b in bin.iter_mut() {
        let count = *b;
        *b = start;
        start += count;
    }
    let mut vert = vec![0usize; n];
    let mut pos = vec![0usize; n];
    for v in 0..n {
        pos[v] = bin[degree[v]];
        vert[pos[v]] = v;
        bin[degree[v]] += 1;
    }
    for d in (1..=max_degree).rev() {
        bin[d] = bin[d - 1];
    }
    bin[0] = 0;

    for i in 0..n {
        let v = vert[i];
        for &u in &adjacency[v] {
            if degree[u] > degree[v] {
                let du = degree[u];
                let pu = pos[u];
                let pw = bin[du];
                let w = vert[pw];
                if u != w {
                    pos[u] = pw;
                    pos[w] = pu;
                    vert[pu] = w;
                    vert[pw] = u;
                }
                bin[du] += 1;
                degree[u] -= 1;
            }
        }
    }

    degree.iter().map(|&d| d as u32).collect()
}

/// Node set of the largest connected component. Ties go to the component
/// containing the smallest concept id.
pub fn giant_component(graph: &CumulativeGraph) -> BTreeSet<ConceptId> {
    let mut adjacency: BTreeMap<&ConceptId, Vec<&ConceptId>> =
        graph.nodes.iter().map(|n| (n, Vec::new())).collect();
    for (a, b) in graph.edges.keys() {
        adjacency.get_mut(a).expect("edge endpoint in nodes").push(b);
        adjacency.get_mut(b).expect("edge endpoint in nodes").push(a);
    }
    let mut visited: BTreeSet<&ConceptId> = BTreeSet::new();
    let mut best: Vec<&ConceptId> = Vec::new();
    for start in graph.nodes.iter() {
        if visited.contains(start) {
            continue;
        }
        let mut component = vec![start];
        let mut stack = vec![start];
        visited.insert(start);
        while let Some(cur) = stack.pop() {
            for &next in &adjacency[cur] {
                if visited.insert(next) {
                    component.push(next);
                    stack.push(next);
                }
            }
        }
        if component.len() > best.len() {
            best = component;
        }
    }
    best.into_iter().cloned().collect()
}

/// One year of the coreness series.
#[derive(Debug, Clone, PartialEq)]
pub struct CorenessPoint {
    pub year: i32,
    /// Mean normalized coreness of the tagged concepts inside the giant
    /// component; `None` when none are present.
    pub mean: Option<f64>,
    pub stderr: Option<f64>,
    /// Tagged concepts found in the giant component this year.
    pub n_tagged: usize,
    pub c_max: u32,
    pub giant_size: usize,
}

/// Coreness summary across years plus both tagged-share denominators for
/// the final year (all concepts ever seen vs. the final giant component).
#[derive(Debug, Clone)]
pub struct CorenessSeries {
    pub points: Vec<CorenessPoint>,
    pub final_tagged_count: usize,
    pub share_of_all_concepts: f64,
    pub share_of_giant_concepts: f64,
}

impl CorenessSeries {
    pub fn mean_series(&self) -> TemporalSeries {
        let start = self.points.first().map(|p| p.year).unwrap_or(0);
        TemporalSeries::new(start, self.points.iter().map(|p| p.mean).collect())
    }

    /// First year whose giant component contains at least one tagged concept.
    pub fn year_of_apparition(&self) -> Option<i32> {
        self.points.iter().find(|p| p.n_tagged > 0).map(|p| p.year)
    }
}

/// Accumulates the yearly graphs over `years` and tracks, per year, the mean
/// normalized coreness c/c_max of `tagged` concepts restricted to the giant
/// component. Standard error is stdev/sqrt(count). Years where no tagged
/// concept sits in the giant component yield gaps.
pub fn coreness_series(
    yearly: &[YearlyGraph],
    tagged: &BTreeSet<ConceptId>,
    years: (i32, i32),
) -> Result<CorenessSeries> {
    if tagged.is_empty() {
        return Err(Error::invalid("tagged concept set is empty"));
    }
    let (start, end) = years;
    if start > end {
        return Err(Error::invalid("invalid year range"));
    }
    let by_year: BTreeMap<i32, &YearlyGraph> = yearly.iter().map(|g| (g.year, g)).collect();

    let mut cumulative = CumulativeGraph::before(start);
    let mut points = Vec::with_capacity((end - start + 1) as usize);
    for year in start..=end {
        let empty = YearlyGraph::new(year);
        let current = by_year.get(&year).copied().unwrap_or(&empty);
        cumulative = accumulate(&cumulative, current)?;

        let giant = giant_component(&cumulative);
        // Core numbers on the restricted subgraph.
        let sub_edges: BTreeMap<(ConceptId, ConceptId), u32> = cumulative
            .edges
            .iter()
            .filter(|((a, b), _)| giant.contains(a) && giant.contains(b))
            .map(|(k, v)| (k.clone(), *v))
            .collect();
        let (core, c_max) = kcore_by_concept(&giant, &sub_edges);

        let values: Vec<f64> = tagged
            .iter()
            .filter_map(|c| core.get(c))
            .map(|&c| c as f64 / c_max.max(1) as f64)
            .collect();
        let (mean, stderr) = if values.is_empty() {
            (None, None)
        } else {
            (
                Some(values.iter().sum::<f64>() / values.len() as f64),
                Some(standard_error(&values)),
            )
        };
        points.push(CorenessPoint {
            year,
            mean,
            stderr,
            n_tagged: values.len(),
            c_max,
            giant_size: giant.len(),
        });
    }

    let final_giant = giant_component(&cumulative);
    let tagged_all = tagged.iter().filter(|c| cumulative.nodes.contains(*c)).count();
    let tagged_giant = tagged.iter().filter(|c| final_giant.contains(*c)).count();
    Ok(CorenessSeries {
        points,
        final_tagged_count: tagged_all,
        share_of_all_concepts: if cumulative.nodes.is_empty() {
            0.0
        } else {
            tagged_all as f64 / cumulative.nodes.len() as f64
        },
        share_of_giant_concepts: if final_giant.is_empty() {
            0.0
        } else {
            tagged_giant as f64 / final_giant.len() as f64
        },
    })
}

/// Writes a `conceptnet_<cluster>_<year>.edges` file:
/// `concept_a,concept_b,weight` rows in canonical order.
pub fn write_edges(
    edges: &BTreeMap<(ConceptId, ConceptId), u32>,
    path: &Path,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::invalid(format!("open {}: {e}", path.display())))?;
    w.write_record(["concept_a", "concept_b", "weight"])
        .map_err(|e| Error::invalid(format!("write edges: {e}")))?;
    for ((a, b), weight) in edges {
        w.write_record([a.as_str(), b.as_str(), &weight.to_string()])
            .map_err(|e| Error::invalid(format!("write edges: {e}")))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `coreness_<cluster>.csv`: year, mean, stderr, n_ai, c_max rows
/// with empty mean/stderr on gap years.
pub fn write_coreness(series: &CorenessSeries, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::invalid(format!("open {}: {e}", path.display())))?;
    w.write_record(["year", "mean", "stderr", "n_ai", "c_max"])
        .map_err(|e| Error::invalid(format!("write coreness: {e}")))?;
    for p in &series.points {
        w.write_record([
            p.year.to_string(),
            p.mean.map(|v| format!("{v:?}")).unwrap_or_default(),
            p.stderr.map(|v| format!("{v:?}")).unwrap_or_default(),
            p.n_tagged.to_string(),
            p.c_max.to_string(),
        ])
        .map_err(|e| Error::invalid(format!("write coreness: {e}")))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
