//! Cluster characterization: taxonomy rankings for naming, AI shares,
//! temporal size series, cumulative AI growth curves, map snapshots, and
//! density grids for figure emission.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::atlas::MapCoordinates;
use crate::clusterer::{ClusterAssignment, NOISE_LABEL};
use crate::corpus::{ConceptId, Corpus, PaperId};
use crate::error::{Error, Result};
use crate::series::TemporalSeries;

/// The taxonomies available for concept rankings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Taxonomy {
    FosLevel2,
    FosLevel3,
    Topics,
    Keywords,
}

impl Taxonomy {
    pub const ALL: [Taxonomy; 4] = [
        Taxonomy::FosLevel2,
        Taxonomy::FosLevel3,
        Taxonomy::Topics,
        Taxonomy::Keywords,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Taxonomy::FosLevel2 => "fos_level2",
            Taxonomy::FosLevel3 => "fos_level3",
            Taxonomy::Topics => "topics",
            Taxonomy::Keywords => "keywords",
        }
    }
}

fn terms_of(paper: &crate::corpus::PaperRecord, taxonomy: Taxonomy) -> Vec<String> {
    let mut terms: Vec<String> = match taxonomy {
        Taxonomy::FosLevel2 => paper
            .fos_labels
            .iter()
            .filter(|(_, l)| *l == 2)
            .map(|(c, _)| c.as_str().to_string())
            .collect(),
        Taxonomy::FosLevel3 => paper
            .fos_labels
            .iter()
            .filter(|(_, l)| *l == 3)
            .map(|(c, _)| c.as_str().to_string())
            .collect(),
        Taxonomy::Topics => paper.topic.iter().map(|t| t.topic.clone()).collect(),
        Taxonomy::Keywords => paper.keywords.clone(),
    };
    terms.sort();
    terms.dedup();
    terms
}

/// Top-`top_n` terms among the cluster's papers, by descending paper count,
/// ties by term. Each paper counts a term once. An empty cluster yields an
/// empty ranking.
pub fn rank_concepts(
    corpus: &Corpus,
    assignment: &ClusterAssignment,
    cluster: i64,
    taxonomy: Taxonomy,
    top_n: usize,
) -> Vec<(String, usize)> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for (idx, paper) in corpus.papers().iter().enumerate() {
        if assignment.labels[idx] != cluster {
            continue;
        }
        for term in terms_of(paper, taxonomy) {
            *counts.entry(term).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.truncate(top_n);
    ranked
}

/// Per-cluster profile emitted as `profile_<cluster>.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterProfile {
    pub cluster: i64,
    pub total_count: usize,
    pub ai_paper_count: usize,
    pub ai_share: f64,
    /// taxonomy name -> ranked (term, count) pairs.
    pub rankings: BTreeMap<String, Vec<(String, usize)>>,
}

pub fn cluster_profile(
    corpus: &Corpus,
    assignment: &ClusterAssignment,
    cluster: i64,
    top_n: usize,
) -> ClusterProfile {
    let mut total = 0usize;
    let mut ai = 0usize;
    for (idx, paper) in corpus.papers().iter().enumerate() {
        if assignment.labels[idx] == cluster {
            total += 1;
            if paper.ai_flag {
                ai += 1;
            }
        }
    }
    let rankings = Taxonomy::ALL
        .iter()
        .map(|&t| {
            (
                t.name().to_string(),
                rank_concepts(corpus, assignment, cluster, t, top_n),
            )
        })
        .collect();
    ClusterProfile {
        cluster,
        total_count: total,
        ai_paper_count: ai,
        ai_share: if total == 0 {
            0.0
        } else {
            ai as f64 / total as f64
        },
        rankings,
    }
}

/// Distribution of the corpus' AI papers over clusters. Shares sum to one
/// together with the noise share.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AiShares {
    /// Indexed by cluster label.
    pub per_cluster: Vec<f64>,
    pub noise: f64,
    pub total_ai_papers: usize,
}

pub fn ai_share_per_cluster(corpus: &Corpus, assignment: &ClusterAssignment) -> Result<AiShares> {
    let total_ai = corpus.ai_count();
    if total_ai == 0 {
        return Err(Error::invalid("corpus has no AI-flagged papers"));
    }
    let mut per_cluster = vec![0usize; assignment.n_clusters];
    let mut noise = 0usize;
    for (idx, paper) in corpus.papers().iter().enumerate() {
        if !paper.ai_flag {
            continue;
        }
        match assignment.labels[idx] {
            NOISE_LABEL => noise += 1,
            l => per_cluster[l as usize] += 1,
        }
    }
    Ok(AiShares {
        per_cluster: per_cluster
            .iter()
            .map(|&c| c as f64 / total_ai as f64)
            .collect(),
        noise: noise as f64 / total_ai as f64,
        total_ai_papers: total_ai,
    })
}

/// Yearly size and AI-content series of one cluster, all normalized against
/// the cluster's time-aggregated size. The within-year AI share is the
/// companion reading of the shaded area.
#[derive(Debug, Clone)]
pub struct ClusterSizeSeries {
    pub cluster: i64,
    pub total: usize,
    /// Yearly paper count / cluster total; sums to 1 over the window.
    pub size_share: TemporalSeries,
    /// Yearly AI count / cluster total (same normalization as size_share).
    pub ai_share_of_total: TemporalSeries,
    /// Yearly AI count / yearly count; gap when the year is empty.
    pub ai_share_within_year: TemporalSeries,
}

/// Per-cluster (noise included as pseudo-cluster -1) normalized yearly size
/// series with both AI-share variants.
pub fn cluster_size_series(
    corpus: &Corpus,
    assignment: &ClusterAssignment,
    window: (i32, i32),
) -> Result<Vec<ClusterSizeSeries>> {
    let (y0, y1) = window;
    if y0 > y1 {
        return Err(Error::invalid("invalid year window"));
    }
    let span = (y1 - y0 + 1) as usize;
    let mut labels: Vec<i64> = (0..assignment.n_clusters as i64).collect();
    labels.push(NOISE_LABEL);

    let mut out = Vec::with_capacity(labels.len());
    for cluster in labels {
        let mut counts = vec![0usize; span];
        let mut ai_counts = vec![0usize; span];
        let mut total = 0usize;
        for (idx, paper) in corpus.papers().iter().enumerate() {
            if assignment.labels[idx] != cluster {
                continue;
            }
            total += 1;
            if paper.year < y0 || paper.year > y1 {
                continue;
            }
            let slot = (paper.year - y0) as usize;
            counts[slot] += 1;
            if paper.ai_flag {
                ai_counts[slot] += 1;
            }
        }
        let denom = total.max(1) as f64;
        out.push(ClusterSizeSeries {
            cluster,
            total,
            size_share: TemporalSeries::new(
                y0,
                counts.iter().map(|&c| Some(c as f64 / denom)).collect(),
            ),
            ai_share_of_total: TemporalSeries::new(
                y0,
                ai_counts.iter().map(|&c| Some(c as f64 / denom)).collect(),
            ),
            ai_share_within_year: TemporalSeries::new(
                y0,
                counts
                    .iter()
                    .zip(&ai_counts)
                    .map(|(&c, &a)| (c > 0).then(|| a as f64 / c as f64))
                    .collect(),
            ),
        });
    }
    Ok(out)
}

/// Cumulative AI-paper curves per cluster, each divided by its value at
/// `normalize_year`. Clusters with no AI papers up to that year are omitted,
/// with a warning naming them.
pub fn cumulative_ai_series(
    corpus: &Corpus,
    assignment: &ClusterAssignment,
    window: (i32, i32),
    normalize_year: i32,
) -> Result<(BTreeMap<i64, TemporalSeries>, Vec<String>)> {
    let (y0, y1) = window;
    if normalize_year < y0 || normalize_year > y1 {
        return Err(Error::invalid("normalize_year outside the window"));
    }
    let span = (y1 - y0 + 1) as usize;
    let mut series = BTreeMap::new();
    let mut warnings = Vec::new();
    for cluster in 0..assignment.n_clusters as i64 {
        let mut yearly = vec![0usize; span];
        for (idx, paper) in corpus.papers().iter().enumerate() {
            if assignment.labels[idx] != cluster || !paper.ai_flag {
                continue;
            }
            if paper.year >= y0 && paper.year <= y1 {
                yearly[(paper.year - y0) as usize] += 1;
            }
        }
        let mut cumulative = Vec::with_capacity(span);
        let mut acc = 0usize;
        for c in &yearly {
            acc += c;
            cumulative.push(acc);
        }
        let at_norm = cumulative[(normalize_year - y0) as usize];
        if at_norm == 0 {
            warnings.push(format!(
                "cluster {cluster} has no AI papers up to {normalize_year}; series omitted"
            ));
            continue;
        }
        series.insert(
            cluster,
            TemporalSeries::new(
                y0,
                cumulative
                    .iter()
                    .map(|&c| Some(c as f64 / at_norm as f64))
                    .collect(),
            ),
        );
    }
    Ok((series, warnings))
}

/// One period of the temporal map decomposition.
#[derive(Debug, Clone, Serialize)]
pub struct Snapshot {
    pub start_year: i32,
    pub end_year: i32,
    pub n: usize,
    /// (id, x, y, label, ai), sorted by id.
    pub entries: Vec<(PaperId, f64, f64, i64, bool)>,
}

/// Splits the window into consecutive `period_length`-year slices (the last
/// one truncated) and gathers each period's mapped papers.
pub fn snapshot_maps(
    coords: &MapCoordinates,
    corpus: &Corpus,
    assignment: &ClusterAssignment,
    window: (i32, i32),
    period_length: u32,
) -> Result<Vec<Snapshot>> {
    if period_length == 0 {
        return Err(Error::invalid("period_length must be positive"));
    }
    let (y0, y1) = window;
    if y0 > y1 {
        return Err(Error::invalid("invalid year window"));
    }
    let mut snapshots = Vec::new();
    let mut start = y0;
    while start <= y1 {
        let end = (start + period_length as i32 - 1).min(y1);
        let mut entries = Vec::new();
        for (idx, paper) in corpus.papers().iter().enumerate() {
            if paper.year < start || paper.year > end {
                continue;
            }
            let Some(p) = coords.point_of(&paper.id) else {
                continue;
            };
            entries.push((
                paper.id.clone(),
                p[0],
                p[1],
                assignment.labels[idx],
                paper.ai_flag,
            ));
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        snapshots.push(Snapshot {
            start_year: start,
            end_year: end,
            n: entries.len(),
            entries,
        });
        start = end + 1;
    }
    Ok(snapshots)
}

/// Cell counts over the bounding box of the map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityGrid {
    pub rows: usize,
    pub cols: usize,
    /// Row-major counts.
    pub counts: Vec<u64>,
}

impl DensityGrid {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn at(&self, row: usize, col: usize) -> u64 {
        self.counts[row * self.cols + col]
    }
}

/// Histogram of map points on a `resolution` x `resolution` grid covering
/// the bounding box; max-edge points land in the last cell. Zero-extent
/// axes collapse into column (or row) zero.
pub fn density_grid(coords: &MapCoordinates, resolution: usize) -> Result<DensityGrid> {
    if resolution < 2 {
        return Err(Error::invalid("grid resolution must be at least 2 per axis"));
    }
    let pts = coords.points();
    if pts.is_empty() {
        return Ok(DensityGrid {
            rows: resolution,
            cols: resolution,
            counts: vec![0; resolution * resolution],
        });
    }
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in pts {
        x_min = x_min.min(p[0]);
        x_max = x_max.max(p[0]);
        y_min = y_min.min(p[1]);
        y_max = y_max.max(p[1]);
    }
    let cell_of = |v: f64, lo: f64, hi: f64| -> usize {
        if hi <= lo {
            return 0;
        }
        let t = (v - lo) / (hi - lo);
        ((t * resolution as f64) as usize).min(resolution - 1)
    };
    let mut counts = vec![0u64; resolution * resolution];
    for p in pts {
        let col = cell_of(p[0], x_min, x_max);
        let row = cell_of(p[1], y_min, y_max);
        counts[row * resolution + col] += 1;
    }
    Ok(DensityGrid {
        rows: resolution,
        cols: resolution,
        counts,
    })
}

/// Yearly share of each tagged concept among all tagged-concept occurrences
/// on that year's AI papers. The top 10 concepts by total occurrences are
/// flagged.
#[derive(Debug, Clone)]
pub struct ConceptShareSeries {
    pub concept: ConceptId,
    pub total_occurrences: usize,
    pub top10: bool,
    pub series: TemporalSeries,
}

pub fn ai_concept_share_series(
    corpus: &Corpus,
    ai_concepts: &BTreeSet<ConceptId>,
    window: (i32, i32),
) -> Result<Vec<ConceptShareSeries>> {
    if ai_concepts.is_empty() {
        return Err(Error::invalid("AI concept set is empty"));
    }
    let (y0, y1) = window;
    if y0 > y1 {
        return Err(Error::invalid("invalid year window"));
    }
    let span = (y1 - y0 + 1) as usize;
    let mut per_concept: BTreeMap<&ConceptId, Vec<usize>> = BTreeMap::new();
    let mut yearly_totals = vec![0usize; span];
    for paper in corpus.papers() {
        if !paper.ai_flag || paper.year < y0 || paper.year > y1 {
            continue;
        }
        let slot = (paper.year - y0) as usize;
        let mut seen: BTreeSet<&ConceptId> = BTreeSet::new();
        for (concept, _) in &paper.fos_labels {
            if ai_concepts.contains(concept) && seen.insert(concept) {
                per_concept.entry(concept).or_insert_with(|| vec![0; span])[slot] += 1;
                yearly_totals[slot] += 1;
            }
        }
    }

    let mut totals: Vec<(&ConceptId, usize)> = per_concept
        .iter()
        .map(|(c, counts)| (*c, counts.iter().sum()))
        .collect();
    totals.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let top: BTreeSet<&ConceptId> = totals.iter().take(10).map(|(c, _)| *c).collect();

    Ok(per_concept
        .iter()
        .map(|(concept, counts)| ConceptShareSeries {
            concept: (*concept).clone(),
            total_occurrences: counts.iter().sum(),
            top10: top.contains(*concept),
            series: TemporalSeries::new(
                y0,
                counts
                    .iter()
                    .zip(&yearly_totals)
                    .map(|(&c, &t)| (t > 0).then(|| c as f64 / t as f64))
                    .collect(),
            ),
        })
        .collect())
}

/// Writes a `series_<name>.csv` file: `year,value` with empty values on
/// gap years.
pub fn write_series_csv(series: &TemporalSeries, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::invalid(format!("open {}: {e}", path.display())))?;
    w.write_record(["year", "value"])
        .map_err(|e| Error::invalid(format!("write series: {e}")))?;
    for (year, value) in series.iter_years() {
        w.write_record([
            year.to_string(),
            value.map(|v| format!("{v:?}")).unwrap_or_default(),
        ])
        .map_err(|e| Error::invalid(format!("write series: {e}")))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `grid.csv`: `row,col,count` for every cell.
pub fn write_grid_csv(grid: &DensityGrid, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::invalid(format!("open {}: {e}", path.display())))?;
    w.write_record(["row", "col", "count"])
        .map_err(|e| Error::invalid(format!("write grid: {e}")))?;
    for row in 0..grid.rows {
        for col in 0..grid.cols {
            w.write_record([
                row.to_string(),
                col.to_string(),
                grid.at(row, col).to_string(),
            ])
            .map_err(|e| Error::invalid(format!("write grid: {e}")))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `snapshot_<period>.csv`: `id,x,y,label,ai`.
pub fn write_snapshot_csv(snapshot: &Snapshot, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::invalid(format!("open {}: {e}", path.display())))?;
    w.write_record(["id", "x", "y", "label", "ai"])
        .map_err(|e| Error::invalid(format!("write snapshot: {e}")))?;
    for (id, x, y, label, ai) in &snapshot.entries {
        w.write_record([
            id.as_str(),
            &format!("{x:?}"),
            &format!("{y:?}"),
            &label.to_string(),
            &ai.to_string(),
        ])
        .map_err(|e| Error::invalid(format!("write snapshot: {e}")))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::MapProvenance;
    use crate::corpus::PaperRecord;

    fn paper(id: &str, year: i32, ai: bool, fos: &[(&str, u8)]) -> PaperRecord {
        PaperRecord {
            id: PaperId::new(id),
            title: String::new(),
            abstract_text: None,
            year,
            venue_id: "v".into(),
            ref_count: 10,
            citation_count: 10,
            fos_labels: fos
                .iter()
                .map(|(c, l)| (ConceptId::new(*c), *l))
                .collect(),
            topic: None,
            keywords: vec![],
            ai_flag: ai,
        }
    }

    fn assignment(labels: Vec<i64>, n_clusters: usize) -> ClusterAssignment {
        ClusterAssignment { labels, n_clusters }
    }

    #[test]
    fn shared_concept_ranks_first() {
        let corpus = Corpus::from_parts(
            vec![
                paper("p1", 1990, false, &[("shared", 2), ("only1", 2)]),
                paper("p2", 1991, false, &[("shared", 2), ("only2", 2)]),
            ],
            vec![],
        )
        .unwrap();
        let a = assignment(vec![0, 0], 1);
        let ranked = rank_concepts(&corpus, &a, 0, Taxonomy::FosLevel2, 5);
        assert_eq!(ranked[0], ("shared".to_string(), 2));
        assert_eq!(ranked.len(), 3);
    }

    #[test]
    fn top_n_larger_than_distinct_returns_full_ranking() {
        let corpus = Corpus::from_parts(
            vec![paper("p1", 1990, false, &[("a", 3), ("b", 3)])],
            vec![],
        )
        .unwrap();
        let a = assignment(vec![0], 1);
        let ranked = rank_concepts(&corpus, &a, 0, Taxonomy::FosLevel3, 100);
        assert_eq!(ranked.len(), 2);
    }

    #[test]
    fn empty_cluster_gives_empty_ranking() {
        let corpus =
            Corpus::from_parts(vec![paper("p1", 1990, false, &[("a", 2)])], vec![]).unwrap();
        let a = assignment(vec![0], 2);
        assert!(rank_concepts(&corpus, &a, 1, Taxonomy::FosLevel2, 5).is_empty());
    }

    #[test]
    fn rankings_are_stable_across_reruns_with_ties() {
        // Every concept appears exactly once, so ordering is decided purely
        // by the tie rule.
        let corpus = Corpus::from_parts(
            vec![paper("p1", 1990, false, &[("z", 2), ("a", 2), ("m", 2)])],
            vec![],
        )
        .unwrap();
        let a = assignment(vec![0], 1);
        let first = rank_concepts(&corpus, &a, 0, Taxonomy::FosLevel2, 3);
        let second = rank_concepts(&corpus, &a, 0, Taxonomy::FosLevel2, 3);
        assert_eq!(first, second);
        let names: Vec<&str> = first.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, vec!["a", "m", "z"]);
    }

    #[test]
    fn ai_share_all_in_one_cluster() {
        let corpus = Corpus::from_parts(
            vec![
                paper("p1", 1990, true, &[]),
                paper("p2", 1990, true, &[]),
                paper("p3", 1990, false, &[]),
            ],
            vec![],
        )
        .unwrap();
        let a = assignment(vec![0, 0, 1], 2);
        let shares = ai_share_per_cluster(&corpus, &a).unwrap();
        assert_eq!(shares.per_cluster, vec![1.0, 0.0]);
        assert_eq!(shares.noise, 0.0);
    }

    #[test]
    fn ai_share_three_one_split() {
        let corpus = Corpus::from_parts(
            vec![
                paper("p1", 1990, true, &[]),
                paper("p2", 1990, true, &[]),
                paper("p3", 1990, true, &[]),
                paper("p4", 1990, true, &[]),
            ],
            vec![],
        )
        .unwrap();
        let a = assignment(vec![0, 0, 0, 1], 2);
        let shares = ai_share_per_cluster(&corpus, &a).unwrap();
        assert_eq!(shares.per_cluster, vec![0.75, 0.25]);
    }

    #[test]
    fn ai_share_errors_without_ai_papers() {
        let corpus =
            Corpus::from_parts(vec![paper("p1", 1990, false, &[])], vec![]).unwrap();
        let a = assignment(vec![0], 1);
        assert!(ai_share_per_cluster(&corpus, &a).is_err());
    }

    #[test]
    fn ai_shares_and_noise_sum_to_one() {
        let mut papers = Vec::new();
        let mut labels = Vec::new();
        for i in 0..30 {
            papers.push(paper(&format!("p{i:02}"), 1990, i % 2 == 0, &[]));
            labels.push(match i % 4 {
                0 => 0,
                1 => 1,
                2 => 2,
                _ => NOISE_LABEL,
            });
        }
        let corpus = Corpus::from_parts(papers, vec![]).unwrap();
        let a = assignment(labels, 3);
        let shares = ai_share_per_cluster(&corpus, &a).unwrap();
        let sum: f64 = shares.per_cluster.iter().sum::<f64>() + shares.noise;
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_year_cluster_series_is_unit_spike() {
        let papers: Vec<PaperRecord> =
            (0..10).map(|i| paper(&format!("p{i}"), 1995, false, &[])).collect();
        let corpus = Corpus::from_parts(papers, vec![]).unwrap();
        let a = assignment(vec![0; 10], 1);
        let series = cluster_size_series(&corpus, &a, (1990, 1999)).unwrap();
        let s = &series[0];
        assert_eq!(s.size_share.get(1995), Some(1.0));
        assert_eq!(s.size_share.get(1994), Some(0.0));
    }

    #[test]
    fn size_shares_sum_to_one_per_cluster() {
        let mut papers = Vec::new();
        let mut labels = Vec::new();
        for i in 0..40 {
            papers.push(paper(&format!("p{i:02}"), 1990 + (i % 7), i % 3 == 0, &[]));
            labels.push((i % 2) as i64);
        }
        let corpus = Corpus::from_parts(papers, vec![]).unwrap();
        let a = assignment(labels, 2);
        for s in cluster_size_series(&corpus, &a, (1990, 1999)).unwrap() {
            if s.total == 0 {
                continue;
            }
            let sum: f64 = s.size_share.defined().map(|(_, v)| v).sum();
            assert!((sum - 1.0).abs() < 1e-12, "cluster {}", s.cluster);
        }
    }

    #[test]
    fn cumulative_ai_step_and_ramp() {
        // Cluster 0: all AI papers in one year -> step 0 -> 1.
        // Cluster 1: one AI paper per year -> linear ramp.
        let mut papers = Vec::new();
        let mut labels = Vec::new();
        for i in 0..4 {
            papers.push(paper(&format!("s{i}"), 1995, true, &[]));
            labels.push(0);
        }
        for (i, year) in (1990..2000).enumerate() {
            papers.push(paper(&format!("r{i}"), year, true, &[]));
            labels.push(1);
        }
        let corpus = Corpus::from_parts(papers, vec![]).unwrap();
        let a = assignment(labels, 2);
        let (series, warnings) =
            cumulative_ai_series(&corpus, &a, (1990, 1999), 1999).unwrap();
        assert!(warnings.is_empty());
        let step = &series[&0];
        assert_eq!(step.get(1994), Some(0.0));
        assert_eq!(step.get(1995), Some(1.0));
        assert_eq!(step.get(1999), Some(1.0));
        let ramp = &series[&1];
        for (i, year) in (1990..2000).enumerate() {
            let expect = (i + 1) as f64 / 10.0;
            assert!((ramp.get(year).unwrap() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn cumulative_ai_convexity_after_acceleration() {
        // Quadratic arrivals after 2000: second difference positive.
        let mut papers = Vec::new();
        let mut idx = 0;
        for year in 2000..2010 {
            let arrivals = (year - 2000 + 1) * (year - 2000 + 1) / 2 + 1;
            for _ in 0..arrivals {
                papers.push(paper(&format!("p{idx:03}"), year, true, &[]));
                idx += 1;
            }
        }
        let n = papers.len();
        let corpus = Corpus::from_parts(papers, vec![]).unwrap();
        let a = assignment(vec![0; n], 1);
        let (series, _) = cumulative_ai_series(&corpus, &a, (2000, 2009), 2009).unwrap();
        let diffs = series[&0].second_difference();
        let positives = diffs.defined().filter(|&(_, v)| v > 0.0).count();
        let negatives = diffs.defined().filter(|&(_, v)| v < 0.0).count();
        assert!(positives > 0 && negatives == 0);
    }

    #[test]
    fn cumulative_ai_warns_on_empty_cluster() {
        let corpus = Corpus::from_parts(
            vec![paper("p1", 1990, true, &[]), paper("p2", 1990, false, &[])],
            vec![],
        )
        .unwrap();
        let a = assignment(vec![0, 1], 2);
        let (series, warnings) =
            cumulative_ai_series(&corpus, &a, (1990, 1995), 1995).unwrap();
        assert!(series.contains_key(&0));
        assert!(!series.contains_key(&1));
        assert_eq!(warnings.len(), 1);
    }

    fn simple_coords(ids: &[&str], pts: Vec<[f64; 2]>) -> MapCoordinates {
        MapCoordinates::from_parts(
            ids.iter().map(|s| PaperId::new(*s)).collect(),
            pts,
            MapProvenance::Imported,
        )
        .unwrap()
    }

    #[test]
    fn snapshots_cover_one_paper_per_year() {
        let papers: Vec<PaperRecord> = (0..25)
            .map(|i| paper(&format!("p{i:02}"), 1970 + i, false, &[]))
            .collect();
        let ids: Vec<&str> = (0..25).map(|_| "").collect();
        let _ = ids;
        let corpus = Corpus::from_parts(papers, vec![]).unwrap();
        let id_strs: Vec<String> = (0..25).map(|i| format!("p{i:02}")).collect();
        let coords = simple_coords(
            &id_strs.iter().map(String::as_str).collect::<Vec<_>>(),
            (0..25).map(|i| [i as f64, 0.0]).collect(),
        );
        let a = assignment(vec![0; 25], 1);
        let snaps = snapshot_maps(&coords, &corpus, &a, (1970, 1994), 5).unwrap();
        assert_eq!(snaps.len(), 5);
        for s in &snaps {
            assert_eq!(s.n, 5);
        }
        let total: usize = snaps.iter().map(|s| s.n).sum();
        assert_eq!(total, corpus.len());
    }

    #[test]
    fn empty_period_has_zero_n() {
        let corpus =
            Corpus::from_parts(vec![paper("p1", 1970, false, &[])], vec![]).unwrap();
        let coords = simple_coords(&["p1"], vec![[0.0, 0.0]]);
        let a = assignment(vec![0], 1);
        let snaps = snapshot_maps(&coords, &corpus, &a, (1970, 1979), 5).unwrap();
        assert_eq!(snaps.len(), 2);
        assert_eq!(snaps[0].n, 1);
        assert_eq!(snaps[1].n, 0);
        assert!(snaps[1].entries.is_empty());
    }

    #[test]
    fn density_grid_single_cell_and_conservation() {
        let coords = simple_coords(
            &["a", "b", "c"],
            vec![[1.0, 1.0], [1.0, 1.0], [1.0, 1.0]],
        );
        let grid = density_grid(&coords, 4).unwrap();
        assert_eq!(grid.total(), 3);
        let nonzero: Vec<u64> = grid.counts.iter().copied().filter(|&c| c > 0).collect();
        assert_eq!(nonzero, vec![3]);
    }

    #[test]
    fn density_grid_rejects_tiny_resolution() {
        let coords = simple_coords(&["a"], vec![[0.0, 0.0]]);
        assert!(density_grid(&coords, 1).is_err());
    }

    #[test]
    fn density_grid_roughly_uniform_for_uniform_points() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(61);
        let n = 4000;
        let ids: Vec<String> = (0..n).map(|i| format!("p{i:04}")).collect();
        let coords = simple_coords(
            &ids.iter().map(String::as_str).collect::<Vec<_>>(),
            (0..n)
                .map(|_| [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)])
                .collect(),
        );
        let grid = density_grid(&coords, 4).unwrap();
        assert_eq!(grid.total(), n as u64);
        let occupied: Vec<u64> = grid.counts.iter().copied().filter(|&c| c > 0).collect();
        let max = *occupied.iter().max().unwrap() as f64;
        let min = *occupied.iter().min().unwrap() as f64;
        assert!(max / min < 3.0, "max {max} min {min}");
    }

    #[test]
    fn concept_share_single_and_split() {
        let corpus = Corpus::from_parts(
            vec![
                paper("p1", 1990, true, &[("nn", 2)]),
                paper("p2", 1991, true, &[("nn", 2), ("svm", 2)]),
                paper("p3", 1991, true, &[("svm", 2)]),
                paper("p4", 1992, false, &[("nn", 2)]),
            ],
            vec![],
        )
        .unwrap();
        let set = BTreeSet::from([ConceptId::new("nn"), ConceptId::new("svm")]);
        let series = ai_concept_share_series(&corpus, &set, (1990, 1992)).unwrap();
        let nn = series.iter().find(|s| s.concept.as_str() == "nn").unwrap();
        assert_eq!(nn.series.get(1990), Some(1.0));
        assert_eq!(nn.series.get(1991), Some(1.0 / 3.0));
        // 1992 has no AI papers: gap.
        assert_eq!(nn.series.get(1992), None);
        let svm = series.iter().find(|s| s.concept.as_str() == "svm").unwrap();
        assert_eq!(svm.series.get(1991), Some(2.0 / 3.0));
    }

    #[test]
    fn concept_share_equal_occurrence_is_half() {
        let corpus = Corpus::from_parts(
            vec![paper("p1", 1990, true, &[("a", 2), ("b", 2)])],
            vec![],
        )
        .unwrap();
        let set = BTreeSet::from([ConceptId::new("a"), ConceptId::new("b")]);
        let series = ai_concept_share_series(&corpus, &set, (1990, 1990)).unwrap();
        for s in &series {
            assert_eq!(s.series.get(1990), Some(0.5));
        }
    }
}
