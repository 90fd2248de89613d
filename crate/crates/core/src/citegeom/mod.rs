//! Citation geometry on the knowledge map: radius of gyration of a paper's
//! citers, its normalized form, cohort aggregates, inter-cluster citation
//! matrices, and per-paper RoG dynamics.

mod dynamics;

pub use dynamics::{align_series, cluster_rog_dynamics, kmeans, DynamicsResult, KMeansResult};

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::atlas::MapCoordinates;
use crate::clusterer::{ClusterAssignment, NOISE_LABEL};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::series::{standard_error, TemporalSeries};

/// Directed citation graph over corpus indices with per-paper in-neighbor
/// (citer) lists.
#[derive(Debug, Clone)]
pub struct CitationGraph {
    citers: Vec<Vec<usize>>,
    cited: Vec<Vec<usize>>,
    n_edges: usize,
}

impl CitationGraph {
    pub fn from_corpus(corpus: &Corpus) -> Self {
        let n = corpus.len();
        let mut citers = vec![Vec::new(); n];
        let mut cited = vec![Vec::new(); n];
        let mut n_edges = 0;
        for &(a, b) in corpus.citation_index_pairs() {
            citers[b].push(a);
            cited[a].push(b);
            n_edges += 1;
        }
        for list in citers.iter_mut().chain(cited.iter_mut()) {
            list.sort_unstable();
        }
        CitationGraph {
            citers,
            cited,
            n_edges,
        }
    }

    /// Papers citing `idx` (in-neighbors), ascending corpus index.
    pub fn citers_of(&self, idx: usize) -> &[usize] {
        &self.citers[idx]
    }

    /// Papers cited by `idx` (out-neighbors).
    pub fn cited_by(&self, idx: usize) -> &[usize] {
        &self.cited[idx]
    }

    pub fn n_edges(&self) -> usize {
        self.n_edges
    }
}

/// Radius of gyration: quadratic mean distance from the focal point to its
/// citers.
pub fn rog(focal: [f64; 2], citers: &[[f64; 2]]) -> Result<f64> {
    if citers.is_empty() {
        return Err(Error::invalid("radius of gyration needs at least one citer"));
    }
    let mut sum_sq = 0.0;
    for c in citers {
        let dx = focal[0] - c[0];
        let dy = focal[1] - c[1];
        sum_sq += dx * dx + dy * dy;
    }
    Ok((sum_sq / citers.len() as f64).sqrt())
}

/// r_g divided by the focal paper's farthest-point distance; always within
/// [0, 1]. A zero `d_max` (all-coincident map) is an error.
pub fn normalized_rog(focal: [f64; 2], citers: &[[f64; 2]], d_max: f64) -> Result<f64> {
    if d_max <= 0.0 {
        return Err(Error::invalid(
            "farthest-point distance is zero: degenerate all-coincident map",
        ));
    }
    Ok(rog(focal, citers)? / d_max)
}

/// Andrew's monotone chain; returns hull point indices. Collinear points are
/// dropped, so degenerate inputs reduce to segment endpoints (or one point).
fn convex_hull(points: &[[f64; 2]]) -> Vec<usize> {
    let n = points.len();
    if n <= 2 {
        return (0..n).collect();
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        points[a][0]
            .total_cmp(&points[b][0])
            .then(points[a][1].total_cmp(&points[b][1]))
            .then(a.cmp(&b))
    });
    order.dedup_by(|a, b| points[*a] == points[*b]);
    if order.len() <= 2 {
        return order;
    }
    let cross = |o: usize, a: usize, b: usize| -> f64 {
        (points[a][0] - points[o][0]) * (points[b][1] - points[o][1])
            - (points[a][1] - points[o][1]) * (points[b][0] - points[o][0])
    };
    let mut hull: Vec<usize> = Vec::with_capacity(order.len() * 2);
    for &p in &order {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in order.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Farthest-point queries against a fixed point set. The farthest point
/// from any query lies on the convex hull, so only hull vertices are
/// scanned.
#[derive(Debug, Clone)]
pub struct FarthestPointIndex {
    hull: Vec<[f64; 2]>,
}

impl FarthestPointIndex {
    pub fn build(points: &[[f64; 2]]) -> Self {
        let hull = convex_hull(points)
            .into_iter()
            .map(|i| points[i])
            .collect();
        FarthestPointIndex { hull }
    }

    /// Distance from `focal` to the farthest indexed point.
    pub fn max_distance(&self, focal: [f64; 2]) -> f64 {
        self.hull
            .iter()
            .map(|p| {
                let dx = focal[0] - p[0];
                let dy = focal[1] - p[1];
                (dx * dx + dy * dy).sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// Precomputed context for map-space citation geometry: coordinates aligned
/// to corpus indices and the convex hull used for farthest-point queries.
pub struct CitationGeometry<'a> {
    pub corpus: &'a Corpus,
    pub coords: &'a MapCoordinates,
    pub citations: &'a CitationGraph,
    /// Map position per corpus index; `None` when the paper is unmapped.
    point: Vec<Option<[f64; 2]>>,
    farthest: FarthestPointIndex,
}

impl<'a> CitationGeometry<'a> {
    pub fn new(
        corpus: &'a Corpus,
        coords: &'a MapCoordinates,
        citations: &'a CitationGraph,
    ) -> Result<Self> {
        coords.check_against(corpus)?;
        let point: Vec<Option<[f64; 2]>> = corpus
            .papers()
            .iter()
            .map(|p| coords.point_of(&p.id))
            .collect();
        Ok(CitationGeometry {
            corpus,
            coords,
            citations,
            point,
            farthest: FarthestPointIndex::build(coords.points()),
        })
    }

    pub fn point_of_index(&self, idx: usize) -> Option<[f64; 2]> {
        self.point[idx]
    }

    /// Distance from `focal` to the farthest mapped paper (noise included).
    pub fn max_distance(&self, focal: [f64; 2]) -> f64 {
        self.farthest.max_distance(focal)
    }

    /// Mapped citer positions of a paper, in ascending citer index order.
    pub fn citer_points(&self, idx: usize) -> Vec<[f64; 2]> {
        self.citations
            .citers_of(idx)
            .iter()
            .filter_map(|&c| self.point[c])
            .collect()
    }

    /// Full gyration record for one paper, or `None` when it is unmapped or
    /// has no mapped citers.
    pub fn record(&self, idx: usize) -> Option<GyrationRecord> {
        let focal = self.point[idx]?;
        let citers = self.citer_points(idx);
        if citers.is_empty() {
            return None;
        }
        let r_g = rog(focal, &citers).expect("non-empty citers");
        let d_max = self.max_distance(focal);
        if d_max <= 0.0 {
            return None;
        }
        Some(GyrationRecord {
            paper: idx,
            n_citers: citers.len(),
            r_g,
            d_max,
            r_tilde: r_g / d_max,
        })
    }

    /// Records for every paper with at least `min_citations` mapped citers,
    /// ascending corpus index.
    pub fn records(&self, min_citations: usize) -> Vec<GyrationRecord> {
        let n = self.corpus.len();
        (0..n)
            .into_par_iter()
            .filter_map(|i| self.record(i))
            .filter(|r| r.n_citers >= min_citations)
            .collect::<Vec<_>>()
    }
}

/// Per-paper citation gyration values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GyrationRecord {
    pub paper: usize,
    pub n_citers: usize,
    pub r_g: f64,
    pub d_max: f64,
    /// r_g / d_max, in [0, 1].
    pub r_tilde: f64,
}

/// Yearly cohort means split by the AI flag; normalized values are the
/// default reading, raw r_g companions included.
#[derive(Debug, Clone)]
pub struct YearlyMeanRog {
    pub ai_mean: TemporalSeries,
    pub ai_stderr: TemporalSeries,
    pub ai_n: Vec<usize>,
    pub non_ai_mean: TemporalSeries,
    pub non_ai_stderr: TemporalSeries,
    pub non_ai_n: Vec<usize>,
    pub ai_mean_raw: TemporalSeries,
    pub non_ai_mean_raw: TemporalSeries,
}

/// Groups papers by publication year and AI flag (citations aggregated over
/// the whole horizon) and averages r̃_g per cohort; cohorts below
/// `min_citations` per paper or with no papers yield gaps.
pub fn yearly_mean_rog(
    geometry: &CitationGeometry<'_>,
    min_citations: usize,
) -> Result<YearlyMeanRog> {
    let Some((y0, y1)) = geometry.corpus.year_range() else {
        return Err(Error::invalid("empty corpus"));
    };
    let records = geometry.records(min_citations);
    let span = (y1 - y0 + 1) as usize;
    let mut ai_vals: Vec<Vec<f64>> = vec![Vec::new(); span];
    let mut ai_raw: Vec<Vec<f64>> = vec![Vec::new(); span];
    let mut non_vals: Vec<Vec<f64>> = vec![Vec::new(); span];
    let mut non_raw: Vec<Vec<f64>> = vec![Vec::new(); span];
    for r in &records {
        let paper = geometry.corpus.paper(r.paper);
        let slot = (paper.year - y0) as usize;
        if paper.ai_flag {
            ai_vals[slot].push(r.r_tilde);
            ai_raw[slot].push(r.r_g);
        } else {
            non_vals[slot].push(r.r_tilde);
            non_raw[slot].push(r.r_g);
        }
    }

    let mean_of = |vals: &[Vec<f64>]| -> TemporalSeries {
        TemporalSeries::new(
            y0,
            vals.iter()
                .map(|v| {
                    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
                })
                .collect(),
        )
    };
    let stderr_of = |vals: &[Vec<f64>]| -> TemporalSeries {
        TemporalSeries::new(
            y0,
            vals.iter()
                .map(|v| (!v.is_empty()).then(|| standard_error(v)))
                .collect(),
        )
    };

    Ok(YearlyMeanRog {
        ai_mean: mean_of(&ai_vals),
        ai_stderr: stderr_of(&ai_vals),
        ai_n: ai_vals.iter().map(Vec::len).collect(),
        non_ai_mean: mean_of(&non_vals),
        non_ai_stderr: stderr_of(&non_vals),
        non_ai_n: non_vals.iter().map(Vec::len).collect(),
        ai_mean_raw: mean_of(&ai_raw),
        non_ai_mean_raw: mean_of(&non_raw),
    })
}

/// Quartile summary for box-plot emission (linear interpolation quantiles).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxStats {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    debug_assert!(n > 0);
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

impl BoxStats {
    pub fn from_sample(sorted: &[f64]) -> Option<BoxStats> {
        if sorted.is_empty() {
            return None;
        }
        Some(BoxStats {
            n: sorted.len(),
            min: sorted[0],
            q1: quantile(sorted, 0.25),
            median: quantile(sorted, 0.5),
            q3: quantile(sorted, 0.75),
            max: sorted[sorted.len() - 1],
        })
    }
}

/// The paired AI / non-AI normalized RoG samples of one cluster.
#[derive(Debug, Clone)]
pub struct RogDistribution {
    pub cluster: i64,
    pub ai: Vec<f64>,
    pub non_ai: Vec<f64>,
    pub ai_stats: Option<BoxStats>,
    pub non_ai_stats: Option<BoxStats>,
}

/// Time-aggregated per-cluster r̃_g distributions split by the AI flag.
pub fn cluster_rog_distributions(
    records: &[GyrationRecord],
    corpus: &Corpus,
    assignment: &ClusterAssignment,
) -> Vec<RogDistribution> {
    let mut out = Vec::with_capacity(assignment.n_clusters);
    for cluster in 0..assignment.n_clusters as i64 {
        let mut ai = Vec::new();
        let mut non_ai = Vec::new();
        for r in records {
            if assignment.labels[r.paper] != cluster {
                continue;
            }
            if corpus.paper(r.paper).ai_flag {
                ai.push(r.r_tilde);
            } else {
                non_ai.push(r.r_tilde);
            }
        }
        ai.sort_by(f64::total_cmp);
        non_ai.sort_by(f64::total_cmp);
        out.push(RogDistribution {
            cluster,
            ai_stats: BoxStats::from_sample(&ai),
            non_ai_stats: BoxStats::from_sample(&non_ai),
            ai,
            non_ai,
        });
    }
    out
}

/// How citations from a citing paper to several AI papers of one target
/// cluster are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixCountMode {
    /// Every citation edge counts.
    Edges,
    /// Each (citing paper, target cluster) pair counts once.
    Papers,
}

/// Row-normalized cluster-to-cluster citation matrix restricted to
/// AI-flagged targets.
#[derive(Debug, Clone)]
pub struct CitationMatrix {
    pub m: usize,
    pub counts: Vec<Vec<u64>>,
    /// Rows divided by their sum; all-zero rows stay zero and are flagged.
    pub normalized: Vec<Vec<f64>>,
    pub zero_rows: Vec<bool>,
}

/// Cell (i, j) counts papers in cluster i citing AI papers in cluster j,
/// then each row is normalized by its sum. Noise papers sit outside the
/// matrix on both axes.
pub fn ai_citation_matrix(
    geometry: &CitationGeometry<'_>,
    assignment: &ClusterAssignment,
    mode: MatrixCountMode,
) -> Result<CitationMatrix> {
    let m = assignment.n_clusters;
    if m == 0 {
        return Err(Error::invalid("no clusters assigned"));
    }
    let mut counts = vec![vec![0u64; m]; m];
    let mut seen_pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (cited_idx, citer_list) in geometry.citations.citers.iter().enumerate() {
        if !geometry.corpus.paper(cited_idx).ai_flag {
            continue;
        }
        let lj = assignment.labels[cited_idx];
        if lj == NOISE_LABEL {
            continue;
        }
        for &citer in citer_list {
            let li = assignment.labels[citer];
            if li == NOISE_LABEL {
                continue;
            }
            match mode {
                MatrixCountMode::Edges => counts[li as usize][lj as usize] += 1,
                MatrixCountMode::Papers => {
                    if seen_pairs.insert((citer, lj as usize)) {
                        counts[li as usize][lj as usize] += 1;
                    }
                }
            }
        }
    }
    let mut normalized = vec![vec![0.0; m]; m];
    let mut zero_rows = vec![false; m];
    for i in 0..m {
        let total: u64 = counts[i].iter().sum();
        if total == 0 {
            zero_rows[i] = true;
        } else {
            for j in 0..m {
                normalized[i][j] = counts[i][j] as f64 / total as f64;
            }
        }
    }
    Ok(CitationMatrix {
        m,
        counts,
        normalized,
        zero_rows,
    })
}

/// Cumulative-citation RoG per year: the value at year t uses every mapped
/// citer published up to t, and is defined once at least `min_citations`
/// citers have arrived.
pub fn cumulative_rog_series(
    focal: [f64; 2],
    citers: &[(i32, [f64; 2])],
    horizon: (i32, i32),
    min_citations: usize,
) -> TemporalSeries {
    let (y0, y1) = horizon;
    let mut by_year: Vec<(i32, [f64; 2])> = citers.to_vec();
    by_year.sort_by_key(|(y, _)| *y);

    let mut series = TemporalSeries::empty(y0, y1);
    let mut sum_sq = 0.0;
    let mut count = 0usize;
    let mut cursor = 0;
    for year in y0..=y1 {
        while cursor < by_year.len() && by_year[cursor].0 <= year {
            let c = by_year[cursor].1;
            let dx = focal[0] - c[0];
            let dy = focal[1] - c[1];
            sum_sq += dx * dx + dy * dy;
            count += 1;
            cursor += 1;
        }
        if count >= min_citations.max(1) {
            series.set(year, (sum_sq / count as f64).sqrt());
        }
    }
    series
}

/// Log returns log(1 + R_t) with R_t = (r_g(t) - r_g(t-1)) / r_g(t-1).
/// Defined from the first year following a defined, positive value; zero
/// predecessors push the start to the next valid year.
pub fn log_return_series(rg: &TemporalSeries) -> TemporalSeries {
    let mut out = TemporalSeries::empty(rg.start_year, rg.end_year());
    for year in (rg.start_year + 1)..=rg.end_year() {
        let (Some(prev), Some(cur)) = (rg.get(year - 1), rg.get(year)) else {
            continue;
        };
        if prev <= 0.0 {
            continue;
        }
        out.set(year, ((cur - prev) / prev).ln_1p());
    }
    out
}

/// Per-paper log-return series for one publication-year cohort.
pub fn cohort_log_return_series(
    geometry: &CitationGeometry<'_>,
    cohort_year: i32,
    ai_only: bool,
    min_citations: usize,
) -> Result<Vec<(crate::corpus::PaperId, TemporalSeries)>> {
    let Some((_, y1)) = geometry.corpus.year_range() else {
        return Err(Error::invalid("empty corpus"));
    };
    let mut out = Vec::new();
    for (idx, paper) in geometry.corpus.papers().iter().enumerate() {
        if paper.year != cohort_year || (ai_only && !paper.ai_flag) {
            continue;
        }
        let Some(focal) = geometry.point_of_index(idx) else {
            continue;
        };
        let citers: Vec<(i32, [f64; 2])> = geometry
            .citations
            .citers_of(idx)
            .iter()
            .filter_map(|&c| {
                geometry
                    .point_of_index(c)
                    .map(|p| (geometry.corpus.paper(c).year, p))
            })
            .collect();
        if citers.len() < min_citations {
            continue;
        }
        let rg = cumulative_rog_series(focal, &citers, (cohort_year, y1), min_citations);
        out.push((paper.id.clone(), log_return_series(&rg)));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

use std::path::Path;

use crate::corpus::PaperId;

/// Writes `rog.csv`: id, year, n_citers, r_g, d_max, r_tilde, ai_flag,
/// cluster (noise as -1), id-sorted.
pub fn write_rog_csv(
    records: &[GyrationRecord],
    corpus: &Corpus,
    assignment: &ClusterAssignment,
    path: &Path,
) -> Result<()> {
    let mut rows: Vec<&GyrationRecord> = records.iter().collect();
    rows.sort_by(|a, b| corpus.paper(a.paper).id.cmp(&corpus.paper(b.paper).id));
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::invalid(format!("open {}: {e}", path.display())))?;
    w.write_record(["id", "year", "n_citers", "r_g", "d_max", "r_tilde", "ai_flag", "cluster"])
        .map_err(|e| Error::invalid(format!("write rog: {e}")))?;
    for r in rows {
        let paper = corpus.paper(r.paper);
        w.write_record([
            paper.id.as_str(),
            &paper.year.to_string(),
            &r.n_citers.to_string(),
            &format!("{:?}", r.r_g),
            &format!("{:?}", r.d_max),
            &format!("{:?}", r.r_tilde),
            &paper.ai_flag.to_string(),
            &assignment.labels[r.paper].to_string(),
        ])
        .map_err(|e| Error::invalid(format!("write rog: {e}")))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `citation_matrix.csv`: row-normalized m x m matrix with `C<i>`
/// header labels on both axes.
pub fn write_matrix_csv(matrix: &CitationMatrix, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::invalid(format!("open {}: {e}", path.display())))?;
    let mut header = vec!["citing".to_string()];
    header.extend((0..matrix.m).map(|j| format!("C{j}")));
    w.write_record(&header)
        .map_err(|e| Error::invalid(format!("write matrix: {e}")))?;
    for i in 0..matrix.m {
        let mut row = vec![format!("C{i}")];
        row.extend(matrix.normalized[i].iter().map(|v| format!("{v:?}")));
        w.write_record(&row)
            .map_err(|e| Error::invalid(format!("write matrix: {e}")))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `rog_yearly_mean.csv`: year, group, n, mean_r_tilde,
/// stderr_r_tilde, mean_r_g rows (gap years skipped).
pub fn write_yearly_mean_csv(series: &YearlyMeanRog, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::invalid(format!("open {}: {e}", path.display())))?;
    w.write_record(["year", "group", "n", "mean_r_tilde", "stderr_r_tilde", "mean_r_g"])
        .map_err(|e| Error::invalid(format!("write yearly mean: {e}")))?;
    let y0 = series.ai_mean.start_year;
    let groups: [(&str, &TemporalSeries, &TemporalSeries, &TemporalSeries, &[usize]); 2] = [
        ("ai", &series.ai_mean, &series.ai_stderr, &series.ai_mean_raw, &series.ai_n),
        (
            "non_ai",
            &series.non_ai_mean,
            &series.non_ai_stderr,
            &series.non_ai_mean_raw,
            &series.non_ai_n,
        ),
    ];
    for (name, mean, stderr, raw, ns) in groups {
        for (year, value) in mean.defined() {
            let slot = (year - y0) as usize;
            w.write_record([
                year.to_string(),
                name.to_string(),
                ns[slot].to_string(),
                format!("{value:?}"),
                format!("{:?}", stderr.get(year).unwrap_or(0.0)),
                format!("{:?}", raw.get(year).unwrap_or(0.0)),
            ])
            .map_err(|e| Error::invalid(format!("write yearly mean: {e}")))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `rog_distributions.csv`: cluster, group, n, min, q1, median, q3,
/// max per box.
pub fn write_distributions_csv(dists: &[RogDistribution], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::invalid(format!("open {}: {e}", path.display())))?;
    w.write_record(["cluster", "group", "n", "min", "q1", "median", "q3", "max"])
        .map_err(|e| Error::invalid(format!("write distributions: {e}")))?;
    for d in dists {
        for (group, stats) in [("ai", &d.ai_stats), ("non_ai", &d.non_ai_stats)] {
            if let Some(s) = stats {
                w.write_record([
                    d.cluster.to_string(),
                    group.to_string(),
                    s.n.to_string(),
                    format!("{:?}", s.min),
                    format!("{:?}", s.q1),
                    format!("{:?}", s.median),
                    format!("{:?}", s.q3),
                    format!("{:?}", s.max),
                ])
                .map_err(|e| Error::invalid(format!("write distributions: {e}")))?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `rog_series_<year>.csv`: per-paper log-return series of one
/// cohort, long format (id, year, log_return).
pub fn write_cohort_series_csv(
    series: &[(PaperId, TemporalSeries)],
    path: &Path,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::invalid(format!("open {}: {e}", path.display())))?;
    w.write_record(["id", "year", "log_return"])
        .map_err(|e| Error::invalid(format!("write cohort series: {e}")))?;
    for (id, s) in series {
        for (year, value) in s.defined() {
            w.write_record([id.as_str(), &year.to_string(), &format!("{value:?}")])
                .map_err(|e| Error::invalid(format!("write cohort series: {e}")))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `dynamics_clusters_<year>.json` payload.
#[derive(Debug, serde::Serialize, serde::Deserialize)]
pub struct DynamicsFile {
    pub cohort_year: i32,
    pub start_year: i32,
    pub k: usize,
    pub distortion_curve: Vec<(usize, f64)>,
    /// Paper id -> cluster assignment, id-sorted.
    pub assignments: std::collections::BTreeMap<PaperId, usize>,
    pub centroids: Vec<Vec<f64>>,
}

pub fn write_dynamics_json(file: &DynamicsFile, path: &Path) -> Result<()> {
    let out = std::io::BufWriter::new(
        std::fs::File::create(path).map_err(|e| Error::io(path, e))?,
    );
    serde_json::to_writer_pretty(out, file)
        .map_err(|e| Error::invalid(format!("serialize dynamics: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::MapProvenance;
    use crate::corpus::{PaperId, PaperRecord};
    use crate::synthkit::oracles::{oracle_max_distance, oracle_rog};
    use rand::{Rng, SeedableRng};

    fn paper(id: &str, year: i32, ai: bool) -> PaperRecord {
        PaperRecord {
            id: PaperId::new(id),
            title: String::new(),
            abstract_text: None,
            year,
            venue_id: "v".into(),
            ref_count: 10,
            citation_count: 10,
            fos_labels: vec![],
            topic: None,
            keywords: vec![],
            ai_flag: ai,
        }
    }

    #[test]
    fn rog_zero_when_citers_at_focal() {
        let r = rog([2.0, 3.0], &[[2.0, 3.0], [2.0, 3.0]]).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn rog_two_citers_at_three_and_four() {
        let r = rog([0.0, 0.0], &[[3.0, 0.0], [0.0, 4.0]]).unwrap();
        assert!((r - 12.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rog_rejects_empty() {
        assert!(rog([0.0, 0.0], &[]).is_err());
    }

    #[test]
    fn rog_matches_oracle_fuzz() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        for _ in 0..50 {
            let focal = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
            let citers: Vec<[f64; 2]> = (0..rng.gen_range(1..40))
                .map(|_| [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)])
                .collect();
            let got = rog(focal, &citers).unwrap();
            let want = oracle_rog(focal, &citers).unwrap();
            assert!((got - want).abs() <= 1e-9 * want.max(1.0));
        }
    }

    #[test]
    fn hull_max_distance_matches_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(43);
        let pts: Vec<[f64; 2]> = (0..500)
            .map(|_| [rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)])
            .collect();
        let hull_idx = convex_hull(&pts);
        let hull: Vec<[f64; 2]> = hull_idx.iter().map(|&i| pts[i]).collect();
        for _ in 0..50 {
            let q = [rng.gen_range(-12.0..12.0), rng.gen_range(-12.0..12.0)];
            let via_hull = hull
                .iter()
                .map(|p| ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt())
                .fold(0.0, f64::max);
            let exhaustive = oracle_max_distance(q, &pts).unwrap();
            assert_eq!(via_hull, exhaustive);
        }
    }

    #[test]
    fn hull_handles_collinear_points() {
        let pts: Vec<[f64; 2]> = (0..20).map(|i| [i as f64, 0.0]).collect();
        let hull = convex_hull(&pts);
        assert_eq!(hull.len(), 2);
        let d = oracle_max_distance([3.0, 0.0], &pts).unwrap();
        assert_eq!(d, 16.0);
    }

    fn small_world() -> (Corpus, MapCoordinates) {
        // p0 at origin cited by p1 (far) and p2 (near); p3 is the far corner.
        let papers = vec![
            paper("p0", 1990, true),
            paper("p1", 1995, false),
            paper("p2", 1996, false),
            paper("p3", 1990, false),
        ];
        let citations = vec![
            (PaperId::new("p1"), PaperId::new("p0")),
            (PaperId::new("p2"), PaperId::new("p0")),
        ];
        let corpus = Corpus::from_parts(papers, citations).unwrap();
        let coords = MapCoordinates::from_parts(
            vec![
                PaperId::new("p0"),
                PaperId::new("p1"),
                PaperId::new("p2"),
                PaperId::new("p3"),
            ],
            vec![[0.0, 0.0], [3.0, 0.0], [0.0, 4.0], [0.0, 7.0]],
            MapProvenance::Imported,
        )
        .unwrap();
        (corpus, coords)
    }

    #[test]
    fn two_papers_have_symmetric_max_distance() {
        let papers = vec![paper("a", 1990, false), paper("b", 1990, false)];
        let corpus = Corpus::from_parts(papers, vec![]).unwrap();
        let coords = MapCoordinates::from_parts(
            vec![PaperId::new("a"), PaperId::new("b")],
            vec![[0.0, 0.0], [7.0, 0.0]],
            MapProvenance::Imported,
        )
        .unwrap();
        let graph = CitationGraph::from_corpus(&corpus);
        let geom = CitationGeometry::new(&corpus, &coords, &graph).unwrap();
        assert_eq!(geom.max_distance([0.0, 0.0]), 7.0);
        assert_eq!(geom.max_distance([7.0, 0.0]), 7.0);
    }

    #[test]
    fn record_normalizes_into_unit_interval() {
        let (corpus, coords) = small_world();
        let graph = CitationGraph::from_corpus(&corpus);
        let geom = CitationGeometry::new(&corpus, &coords, &graph).unwrap();
        let rec = geom.record(0).unwrap();
        assert_eq!(rec.n_citers, 2);
        assert!((rec.r_g - 12.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(rec.d_max, 7.0);
        assert!((rec.r_tilde - 12.5f64.sqrt() / 7.0).abs() < 1e-12);
        assert!(rec.r_tilde >= 0.0 && rec.r_tilde <= 1.0);
    }

    #[test]
    fn normalized_rog_rejects_degenerate_map() {
        assert!(normalized_rog([0.0, 0.0], &[[0.0, 0.0]], 0.0).is_err());
        let v = normalized_rog([0.0, 0.0], &[[3.0, 0.0]], 6.0).unwrap();
        assert_eq!(v, 0.5);
    }

    #[test]
    fn single_citer_at_farthest_point_gives_one() {
        let papers = vec![paper("a", 1990, false), paper("b", 1991, false)];
        let corpus = Corpus::from_parts(
            papers,
            vec![(PaperId::new("b"), PaperId::new("a"))],
        )
        .unwrap();
        let coords = MapCoordinates::from_parts(
            vec![PaperId::new("a"), PaperId::new("b")],
            vec![[0.0, 0.0], [5.0, 0.0]],
            MapProvenance::Imported,
        )
        .unwrap();
        let graph = CitationGraph::from_corpus(&corpus);
        let geom = CitationGeometry::new(&corpus, &coords, &graph).unwrap();
        let rec = geom.record(0).unwrap();
        assert_eq!(rec.r_tilde, 1.0);
    }

    #[test]
    fn adding_citer_at_current_rog_is_a_fixed_point() {
        let focal = [0.0, 0.0];
        let citers = vec![[3.0, 0.0], [0.0, 4.0], [1.0, 1.0]];
        let r = rog(focal, &citers).unwrap();
        let mut extended = citers.clone();
        extended.push([r, 0.0]);
        let r2 = rog(focal, &extended).unwrap();
        assert!((r - r2).abs() < 1e-12);
    }

    #[test]
    fn yearly_mean_constant_geometry_is_constant() {
        // One AI paper per year, each cited by two citers at the same
        // distances; identical geometry gives a constant series.
        let mut papers = Vec::new();
        let mut citations = Vec::new();
        let mut ids = Vec::new();
        let mut pts = Vec::new();
        for (i, year) in (1990..1995).enumerate() {
            let focal = format!("f{i}");
            let c1 = format!("c{i}a");
            let c2 = format!("c{i}b");
            papers.push(paper(&focal, year, true));
            papers.push(paper(&c1, year, false));
            papers.push(paper(&c2, year, false));
            citations.push((PaperId::new(&c1), PaperId::new(&focal)));
            citations.push((PaperId::new(&c2), PaperId::new(&focal)));
            let base = i as f64 * 100.0;
            ids.extend([PaperId::new(&focal), PaperId::new(&c1), PaperId::new(&c2)]);
            pts.extend([[base, 0.0], [base + 3.0, 0.0], [base, 4.0]]);
        }
        // Fix the global extent so every focal has the same d_max.
        papers.push(paper("anchor1", 1990, false));
        papers.push(paper("anchor2", 1990, false));
        ids.push(PaperId::new("anchor1"));
        ids.push(PaperId::new("anchor2"));
        pts.push([-1000.0, 0.0]);
        pts.push([1400.0, 0.0]);

        let corpus = Corpus::from_parts(papers, citations).unwrap();
        let coords =
            MapCoordinates::from_parts(ids, pts, MapProvenance::Imported).unwrap();
        let graph = CitationGraph::from_corpus(&corpus);
        let geom = CitationGeometry::new(&corpus, &coords, &graph).unwrap();
        let series = yearly_mean_rog(&geom, 2).unwrap();
        let values: Vec<f64> = series.ai_mean.defined().map(|(_, v)| v).collect();
        assert_eq!(values.len(), 5);
        // d_max varies by focal position along the anchor line, so compare
        // the raw means instead, which depend only on citer geometry.
        let raw: Vec<f64> = series.ai_mean_raw.defined().map(|(_, v)| v).collect();
        for v in &raw {
            assert!((v - 12.5f64.sqrt()).abs() < 1e-12);
        }
        // Cohorts below the citation threshold are gaps.
        let sparse = yearly_mean_rog(&geom, 3).unwrap();
        assert_eq!(sparse.ai_mean.defined().count(), 0);
    }

    #[test]
    fn distributions_degenerate_and_consistent() {
        let (corpus, coords) = small_world();
        let graph = CitationGraph::from_corpus(&corpus);
        let geom = CitationGeometry::new(&corpus, &coords, &graph).unwrap();
        let records = geom.records(1);
        let assignment = ClusterAssignment {
            labels: vec![0, 0, 0, 0],
            n_clusters: 1,
        };
        let dists = cluster_rog_distributions(&records, &corpus, &assignment);
        assert_eq!(dists.len(), 1);
        let ai = dists[0].ai_stats.unwrap();
        assert_eq!(ai.n, 1);
        assert_eq!(ai.median, dists[0].ai[0]);
        // Medians recomputed from the emitted samples match.
        let recomputed = BoxStats::from_sample(&dists[0].ai).unwrap();
        assert_eq!(recomputed.median, ai.median);
    }

    #[test]
    fn matrix_within_single_cluster_is_diagonal_one() {
        let (corpus, coords) = small_world();
        let graph = CitationGraph::from_corpus(&corpus);
        let geom = CitationGeometry::new(&corpus, &coords, &graph).unwrap();
        let assignment = ClusterAssignment {
            labels: vec![0, 0, 0, 0],
            n_clusters: 1,
        };
        let m = ai_citation_matrix(&geom, &assignment, MatrixCountMode::Edges).unwrap();
        assert_eq!(m.normalized[0][0], 1.0);
        assert!(!m.zero_rows[0]);
    }

    #[test]
    fn matrix_rows_sum_to_one_or_flagged() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(47);
        let n = 60;
        let mut papers = Vec::new();
        for i in 0..n {
            papers.push(paper(&format!("p{i:02}"), 1990, rng.gen_bool(0.5)));
        }
        let mut citations = Vec::new();
        for i in 0..n {
            for _ in 0..3 {
                let j = rng.gen_range(0..n);
                if i != j {
                    citations.push((
                        PaperId::new(&format!("p{i:02}")),
                        PaperId::new(&format!("p{j:02}")),
                    ));
                }
            }
        }
        let corpus = Corpus::from_parts(papers, citations).unwrap();
        let ids: Vec<PaperId> = (0..n).map(|i| PaperId::new(&format!("p{i:02}"))).collect();
        let pts: Vec<[f64; 2]> = (0..n)
            .map(|_| [rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)])
            .collect();
        let coords = MapCoordinates::from_parts(ids, pts, MapProvenance::Imported).unwrap();
        let graph = CitationGraph::from_corpus(&corpus);
        let geom = CitationGeometry::new(&corpus, &coords, &graph).unwrap();
        let labels: Vec<i64> = (0..n).map(|i| (i % 3) as i64).collect();
        let assignment = ClusterAssignment {
            labels,
            n_clusters: 3,
        };
        for mode in [MatrixCountMode::Edges, MatrixCountMode::Papers] {
            let m = ai_citation_matrix(&geom, &assignment, mode).unwrap();
            for i in 0..m.m {
                let sum: f64 = m.normalized[i].iter().sum();
                if m.zero_rows[i] {
                    assert_eq!(sum, 0.0);
                } else {
                    assert!((sum - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn constant_rog_gives_zero_returns() {
        let citers = vec![(1991, [3.0, 0.0]), (1991, [0.0, 3.0]), (1991, [-3.0, 0.0])];
        let rg = cumulative_rog_series([0.0, 0.0], &citers, (1990, 1999), 3);
        let lr = log_return_series(&rg);
        let vals: Vec<f64> = lr.defined().map(|(_, v)| v).collect();
        assert_eq!(vals.len(), 8);
        assert!(vals.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn doubling_rog_gives_log_two() {
        // Three citers at distance 1 in 1991, then enough mass at the right
        // distance to double the quadratic mean in 1995.
        let mut citers = vec![(1991, [1.0, 0.0]), (1991, [0.0, 1.0]), (1991, [-1.0, 0.0])];
        // After adding k citers at distance d: r' = sqrt((3 + k d^2)/(3 + k)).
        // Choose k = 9, d = sqrt(5) so r' = 2.
        let d = 5.0f64.sqrt();
        for _ in 0..9 {
            citers.push((1995, [d, 0.0]));
        }
        let rg = cumulative_rog_series([0.0, 0.0], &citers, (1990, 1996), 3);
        let lr = log_return_series(&rg);
        let v1995 = lr.get(1995).unwrap();
        assert!((v1995 - 2f64.ln()).abs() < 1e-12, "{v1995}");
        assert_eq!(lr.get(1994), Some(0.0));
    }

    #[test]
    fn burst_then_flat_has_single_early_peak() {
        let mut citers = vec![
            (1991, [5.0, 0.0]),
            (1991, [0.0, 5.0]),
            (1991, [-5.0, 0.0]),
        ];
        for year in 1992..1999 {
            citers.push((year, [5.0, 0.0]));
        }
        let rg = cumulative_rog_series([0.0, 0.0], &citers, (1990, 1999), 3);
        let lr = log_return_series(&rg);
        let vals: Vec<(i32, f64)> = lr.defined().collect();
        // All same distance: returns are exactly zero after the burst.
        assert!(vals.iter().all(|&(_, v)| v.abs() < 1e-12));

        // Now a genuine far burst at 1992 followed by near citers.
        let mut citers = vec![
            (1991, [1.0, 0.0]),
            (1991, [0.0, 1.0]),
            (1991, [-1.0, 0.0]),
        ];
        citers.push((1992, [20.0, 0.0]));
        for year in 1993..1999 {
            citers.push((year, [1.0, 0.0]));
        }
        let rg = cumulative_rog_series([0.0, 0.0], &citers, (1990, 1999), 3);
        let lr = log_return_series(&rg);
        let peak_year = lr
            .defined()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(y, _)| y)
            .unwrap();
        assert_eq!(peak_year, 1992);
        let peak = lr.get(1992).unwrap();
        assert!(peak > 1.0);
        for (y, v) in lr.defined() {
            if y > 1992 {
                assert!(v <= 0.0, "year {y} should drift down, got {v}");
            }
        }
    }

    #[test]
    fn incremental_rog_matches_scratch_recomputation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(53);
        let focal = [0.0, 0.0];
        let citers: Vec<(i32, [f64; 2])> = (0..60)
            .map(|_| {
                (
                    rng.gen_range(1990..2000),
                    [rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)],
                )
            })
            .collect();
        let series = cumulative_rog_series(focal, &citers, (1990, 1999), 1);
        for year in 1990..=1999 {
            let upto: Vec<[f64; 2]> = citers
                .iter()
                .filter(|(y, _)| *y <= year)
                .map(|(_, p)| *p)
                .collect();
            if upto.is_empty() {
                assert_eq!(series.get(year), None);
            } else {
                let direct = rog(focal, &upto).unwrap();
                let inc = series.get(year).unwrap();
                assert!((direct - inc).abs() <= 1e-9 * direct.max(1.0));
            }
        }
    }
}
