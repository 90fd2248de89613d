//! Stage implementations. Every stage reads only files, writes its
//! artifacts into the output directory, and records a deterministic
//! manifest; stages are therefore resumable and individually re-runnable.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use scimap_core::atlas::{
    fallback_project, import_coords, import_vectors, neighbor_overlap, write_coords,
    MapCoordinates, PointSpace,
};
use scimap_core::citegeom::{
    ai_citation_matrix, cluster_rog_distributions, cluster_rog_dynamics,
    cohort_log_return_series, write_cohort_series_csv, write_distributions_csv,
    write_dynamics_json, write_matrix_csv, write_rog_csv, write_yearly_mean_csv,
    yearly_mean_rog, CitationGeometry, CitationGraph, DynamicsFile,
};
use scimap_core::clusterer::{
    build_hierarchy, condense, leaf_cuts, load_assignment, refine, save_assignment, save_tree,
    select_clusters, ClusterAssignment, ClusterParams, NOISE_LABEL,
};
use scimap_core::conceptnet::{
    accumulate, coreness_series, write_coreness, write_edges, CumulativeGraph,
    yearly_cooccurrence,
};
use scimap_core::corpus::{
    ai_concepts, concept_view, load_corpus, tag_ai, AiKeywordList, Corpus,
};
use scimap_core::profiler::{
    ai_concept_share_series, ai_share_per_cluster, cluster_profile, cluster_size_series,
    cumulative_ai_series, density_grid, snapshot_maps, write_grid_csv, write_series_csv,
    write_snapshot_csv,
};
use scimap_core::synthkit::{self, gen_corpus, write_world};
use scimap_core::validator::{
    confusion_matrix, knn_accuracy_sweep, write_confusion_csv, write_sweep_csv, LabeledSplit,
};

use crate::config::{config_digest_text, PipelineConfig};
use crate::manifest::{sha256_text, write_timing, Manifest};
use crate::StageError;

pub struct StageCtx<'a> {
    pub config: &'a PipelineConfig,
    pub out: &'a Path,
    pub seed: u64,
}

impl StageCtx<'_> {
    fn digest(&self) -> String {
        sha256_text(&config_digest_text(self.config))
    }

    /// Relative input paths resolve against the output directory, which is
    /// where `synth` deposits its world.
    fn resolve(&self, configured: &Option<PathBuf>, default_name: &str) -> PathBuf {
        match configured {
            Some(p) if p.is_absolute() => p.clone(),
            Some(p) => self.out.join(p),
            None => self.out.join(default_name),
        }
    }

    fn require(&self, path: &Path, producer: &'static str) -> Result<(), StageError> {
        if path.exists() {
            Ok(())
        } else {
            Err(StageError::MissingArtifact {
                path: path.to_path_buf(),
                producer,
            })
        }
    }
}

const CORPUS_FILE: &str = "corpus.jsonl";
const CORPUS_CITATIONS_FILE: &str = "corpus_citations.csv";
const COORDS_OUT: &str = "coords.csv";

fn data(e: scimap_core::Error) -> StageError {
    StageError::Data(e)
}

/// Loads the ingested corpus artifacts, re-applying the (idempotent)
/// filters. Used by every stage downstream of `ingest`.
fn load_ingested(ctx: &StageCtx<'_>) -> Result<Corpus, StageError> {
    let papers = ctx.out.join(CORPUS_FILE);
    let citations = ctx.out.join(CORPUS_CITATIONS_FILE);
    ctx.require(&papers, "ingest")?;
    ctx.require(&citations, "ingest")?;
    let (corpus, _) = load_corpus(&papers, &citations, &ctx.config.ingest.to_core()).map_err(data)?;
    Ok(corpus)
}

fn load_keywords(ctx: &StageCtx<'_>) -> Result<AiKeywordList, StageError> {
    let path = ctx.resolve(&ctx.config.ingest.keywords, synthkit::KEYWORDS_FILE);
    ctx.require(&path, "synth")?;
    AiKeywordList::load(&path).map_err(data)
}

fn load_coords(ctx: &StageCtx<'_>, corpus: &Corpus) -> Result<MapCoordinates, StageError> {
    let path = ctx.out.join(COORDS_OUT);
    ctx.require(&path, "project")?;
    import_coords(&path, Some(corpus)).map_err(data)
}

fn load_clusters(
    ctx: &StageCtx<'_>,
    coords: &MapCoordinates,
) -> Result<ClusterAssignment, StageError> {
    let path = ctx.out.join("clusters.csv");
    ctx.require(&path, "cluster")?;
    load_assignment(&path, coords.ids()).map_err(data)
}

/// Cluster labels aligned to corpus indices (unmapped papers are noise).
fn assignment_for_corpus(
    corpus: &Corpus,
    coords: &MapCoordinates,
    assignment: &ClusterAssignment,
) -> ClusterAssignment {
    let mut labels = vec![NOISE_LABEL; corpus.len()];
    for (coord_idx, id) in coords.ids().iter().enumerate() {
        if let Some(paper_idx) = corpus.index_of(id) {
            labels[paper_idx] = assignment.labels[coord_idx];
        }
    }
    ClusterAssignment {
        labels,
        n_clusters: assignment.n_clusters,
    }
}

pub fn run_synth(ctx: &StageCtx<'_>) -> Result<(), StageError> {
    let start = Instant::now();
    let Some(spec) = &ctx.config.synth else {
        return Err(StageError::Config(
            "synth requires a [synth] section in the config".into(),
        ));
    };
    let mut spec = spec.clone();
    spec.seed = ctx.seed;
    let world = gen_corpus(&spec).map_err(data)?;
    write_world(&world, ctx.out).map_err(data)?;

    let mut manifest = Manifest::new("synth", ctx.seed, ctx.digest());
    for name in [
        synthkit::PAPERS_FILE,
        synthkit::CITATIONS_FILE,
        synthkit::KEYWORDS_FILE,
        synthkit::VECTORS_FILE,
        synthkit::COORDS_FILE,
    ] {
        manifest.add_output(&ctx.out.join(name))?;
    }
    manifest.write(ctx.out)?;
    write_timing(ctx.out, "synth", start.elapsed().as_millis());
    Ok(())
}

pub fn run_ingest(ctx: &StageCtx<'_>) -> Result<(), StageError> {
    let start = Instant::now();
    let papers = ctx.resolve(&ctx.config.ingest.papers, synthkit::PAPERS_FILE);
    let citations = ctx.resolve(&ctx.config.ingest.citations, synthkit::CITATIONS_FILE);
    ctx.require(&papers, "synth")?;
    ctx.require(&citations, "synth")?;
    let keywords = load_keywords(ctx)?;

    let mut manifest = Manifest::new("ingest", ctx.seed, ctx.digest());
    manifest.add_input(&papers)?;
    manifest.add_input(&citations)?;

    let (mut corpus, report) =
        load_corpus(&papers, &citations, &ctx.config.ingest.to_core()).map_err(data)?;
    let flagged = tag_ai(&mut corpus, &keywords);

    let corpus_path = ctx.out.join(CORPUS_FILE);
    let citations_path = ctx.out.join(CORPUS_CITATIONS_FILE);
    corpus.write_jsonl(&corpus_path, &citations_path).map_err(data)?;

    let report_path = ctx.out.join("drop_report.json");
    let mut report_json = serde_json::to_value(&report)
        .map_err(|e| StageError::Config(format!("serialize drop report: {e}")))?;
    report_json["ai_flagged"] = serde_json::json!(flagged);
    std::fs::write(
        &report_path,
        serde_json::to_string_pretty(&report_json).expect("valid json") + "\n",
    )
    .map_err(|e| StageError::Config(format!("write drop report: {e}")))?;

    manifest.add_output(&corpus_path)?;
    manifest.add_output(&citations_path)?;
    manifest.add_output(&report_path)?;
    manifest.write(ctx.out)?;
    write_timing(ctx.out, "ingest", start.elapsed().as_millis());
    Ok(())
}

pub fn run_project(ctx: &StageCtx<'_>) -> Result<(), StageError> {
    let start = Instant::now();
    let corpus = load_ingested(ctx)?;
    let mut manifest = Manifest::new("project", ctx.seed, ctx.digest());
    manifest.add_input(&ctx.out.join(CORPUS_FILE))?;

    let coords = match &ctx.config.vectors.coords {
        Some(configured) => {
            let path = ctx.resolve(&Some(configured.clone()), synthkit::COORDS_FILE);
            ctx.require(&path, "synth")?;
            manifest.add_input(&path)?;
            import_coords(&path, Some(&corpus)).map_err(data)?
        }
        None => {
            let path = ctx.resolve(&ctx.config.vectors.path, synthkit::VECTORS_FILE);
            ctx.require(&path, "synth")?;
            manifest.add_input(&path)?;
            let store =
                import_vectors(&path, ctx.config.vectors.dim, Some(&corpus)).map_err(data)?;
            fallback_project(&store).map_err(data)?
        }
    };

    let out_path = ctx.out.join(COORDS_OUT);
    write_coords(&coords, &out_path).map_err(data)?;
    manifest.add_output(&out_path)?;
    manifest.write(ctx.out)?;
    write_timing(ctx.out, "project", start.elapsed().as_millis());
    Ok(())
}

pub fn run_cluster(ctx: &StageCtx<'_>) -> Result<(), StageError> {
    let start = Instant::now();
    let coords_path = ctx.out.join(COORDS_OUT);
    ctx.require(&coords_path, "project")?;
    let coords = import_coords(&coords_path, None).map_err(data)?;

    let mut manifest = Manifest::new("cluster", ctx.seed, ctx.digest());
    manifest.add_input(&coords_path)?;

    let defaults = ClusterParams::scaled_defaults(coords.len());
    let params = ClusterParams {
        min_samples: ctx.config.cluster.min_samples.unwrap_or(defaults.min_samples),
        min_cluster_size: ctx
            .config
            .cluster
            .min_cluster_size
            .unwrap_or(defaults.min_cluster_size),
    };

    let hierarchy = build_hierarchy(coords.points(), params.min_samples).map_err(data)?;
    let tree = condense(&hierarchy, params.min_cluster_size).map_err(data)?;

    let tree_path = ctx.out.join("tree.json");
    save_tree(&tree, coords.ids(), &tree_path).map_err(data)?;
    manifest.add_output(&tree_path)?;

    let cuts = if ctx.config.cluster.cuts.is_empty() {
        leaf_cuts(&tree)
    } else {
        ctx.config.cluster.cuts.clone()
    };
    let assignment = select_clusters(&tree, &cuts).map_err(data)?;
    let clusters_path = ctx.out.join("clusters.csv");
    save_assignment(&assignment, coords.ids(), &clusters_path).map_err(data)?;
    manifest.add_output(&clusters_path)?;

    for target in &ctx.config.cluster.refine {
        let subset = assignment.members(target.cluster);
        let (_, refined) = refine(
            coords.points(),
            &subset,
            ClusterParams {
                min_samples: target.min_samples,
                min_cluster_size: target.min_cluster_size,
            },
        )
        .map_err(data)?;
        let subset_ids: Vec<scimap_core::PaperId> = subset
            .iter()
            .map(|&i| coords.ids()[i].clone())
            .collect();
        let path = ctx.out.join(format!("tree_refined_c{}.json", target.cluster));
        save_tree(&refined, &subset_ids, &path).map_err(data)?;
        manifest.add_output(&path)?;
    }

    manifest.write(ctx.out)?;
    write_timing(ctx.out, "cluster", start.elapsed().as_millis());
    Ok(())
}

pub fn run_profile(ctx: &StageCtx<'_>) -> Result<(), StageError> {
    let start = Instant::now();
    let corpus = load_ingested(ctx)?;
    let coords = load_coords(ctx, &corpus)?;
    let map_assignment = load_clusters(ctx, &coords)?;
    let assignment = assignment_for_corpus(&corpus, &coords, &map_assignment);
    let keywords = load_keywords(ctx)?;

    let mut manifest = Manifest::new("profile", ctx.seed, ctx.digest());
    manifest.add_input(&ctx.out.join(CORPUS_FILE))?;
    manifest.add_input(&ctx.out.join(COORDS_OUT))?;
    manifest.add_input(&ctx.out.join("clusters.csv"))?;

    let window = corpus
        .year_range()
        .ok_or_else(|| StageError::Data(scimap_core::Error::invalid("empty corpus")))?;
    let cfg = &ctx.config.profile;

    // Per-cluster profile JSON, noise included as its own pseudo-cluster.
    let mut labels: Vec<i64> = (0..assignment.n_clusters as i64).collect();
    labels.push(NOISE_LABEL);
    for &label in &labels {
        let profile = cluster_profile(&corpus, &assignment, label, cfg.top_n);
        let name = if label == NOISE_LABEL {
            "profile_noise.json".to_string()
        } else {
            format!("profile_c{label}.json")
        };
        let path = ctx.out.join(name);
        std::fs::write(
            &path,
            serde_json::to_string_pretty(&profile).expect("valid json") + "\n",
        )
        .map_err(|e| StageError::Config(format!("write profile: {e}")))?;
        manifest.add_output(&path)?;
    }

    let shares = ai_share_per_cluster(&corpus, &assignment).map_err(data)?;
    let shares_path = ctx.out.join("ai_shares.json");
    std::fs::write(
        &shares_path,
        serde_json::to_string_pretty(&shares).expect("valid json") + "\n",
    )
    .map_err(|e| StageError::Config(format!("write shares: {e}")))?;
    manifest.add_output(&shares_path)?;

    for s in cluster_size_series(&corpus, &assignment, window).map_err(data)? {
        let tag = if s.cluster == NOISE_LABEL {
            "noise".to_string()
        } else {
            format!("c{}", s.cluster)
        };
        for (name, series) in [
            (format!("series_size_{tag}.csv"), &s.size_share),
            (format!("series_ai_total_{tag}.csv"), &s.ai_share_of_total),
            (format!("series_ai_within_{tag}.csv"), &s.ai_share_within_year),
        ] {
            let path = ctx.out.join(name);
            write_series_csv(series, &path).map_err(data)?;
            manifest.add_output(&path)?;
        }
    }

    let normalize_year = cfg.normalize_year.unwrap_or(window.1 - 1).clamp(window.0, window.1);
    let (cumulative, warnings) =
        cumulative_ai_series(&corpus, &assignment, window, normalize_year).map_err(data)?;
    for w in &warnings {
        eprintln!("profile: {w}");
    }
    for (label, series) in &cumulative {
        let path = ctx.out.join(format!("series_cumulative_ai_c{label}.csv"));
        write_series_csv(series, &path).map_err(data)?;
        manifest.add_output(&path)?;
    }

    for snapshot in
        snapshot_maps(&coords, &corpus, &assignment, window, cfg.period_length).map_err(data)?
    {
        let path = ctx
            .out
            .join(format!("snapshot_{}_{}.csv", snapshot.start_year, snapshot.end_year));
        write_snapshot_csv(&snapshot, &path).map_err(data)?;
        manifest.add_output(&path)?;
    }

    let grid = density_grid(&coords, cfg.grid_resolution).map_err(data)?;
    let grid_path = ctx.out.join("grid.csv");
    write_grid_csv(&grid, &grid_path).map_err(data)?;
    manifest.add_output(&grid_path)?;

    let concept_set = ai_concepts(&corpus, &keywords);
    if !concept_set.is_empty() {
        let series = ai_concept_share_series(&corpus, &concept_set, window).map_err(data)?;
        let path = ctx.out.join("ai_concept_shares.csv");
        let mut w = csv::WriterBuilder::new()
            .from_path(&path)
            .map_err(|e| StageError::Config(format!("open {}: {e}", path.display())))?;
        w.write_record(["year", "concept", "share", "top10"])
            .map_err(|e| StageError::Config(format!("write concept shares: {e}")))?;
        for s in &series {
            for (year, value) in s.series.defined() {
                w.write_record([
                    year.to_string(),
                    s.concept.as_str().to_string(),
                    format!("{value:?}"),
                    s.top10.to_string(),
                ])
                .map_err(|e| StageError::Config(format!("write concept shares: {e}")))?;
            }
        }
        w.flush()
            .map_err(|e| StageError::Config(format!("write concept shares: {e}")))?;
        manifest.add_output(&path)?;
    }

    manifest.write(ctx.out)?;
    write_timing(ctx.out, "profile", start.elapsed().as_millis());
    Ok(())
}

pub fn run_conceptnet(ctx: &StageCtx<'_>) -> Result<(), StageError> {
    let start = Instant::now();
    let corpus = load_ingested(ctx)?;
    let coords = load_coords(ctx, &corpus)?;
    let map_assignment = load_clusters(ctx, &coords)?;
    let assignment = assignment_for_corpus(&corpus, &coords, &map_assignment);
    let keywords = load_keywords(ctx)?;

    let mut manifest = Manifest::new("conceptnet", ctx.seed, ctx.digest());
    manifest.add_input(&ctx.out.join(CORPUS_FILE))?;
    manifest.add_input(&ctx.out.join("clusters.csv"))?;

    let cfg = &ctx.config.conceptnet;
    let levels: std::collections::BTreeSet<u8> = cfg.levels.iter().copied().collect();
    let view = concept_view(&corpus, &levels).map_err(data)?;
    let tagged = ai_concepts(&corpus, &keywords);
    let window = corpus
        .year_range()
        .ok_or_else(|| StageError::Data(scimap_core::Error::invalid("empty corpus")))?;

    let clusters: Vec<i64> = if cfg.clusters.is_empty() {
        (0..assignment.n_clusters as i64).collect()
    } else {
        cfg.clusters.clone()
    };
    let edge_years = if cfg.edge_years.is_empty() {
        vec![window.1]
    } else {
        cfg.edge_years.clone()
    };

    let mut summary = BTreeMap::new();
    for &label in &clusters {
        // Yearly co-occurrence graphs of this cluster's eligible papers.
        let mut by_year: BTreeMap<i32, Vec<&[scimap_core::ConceptId]>> = BTreeMap::new();
        for (idx, paper) in corpus.papers().iter().enumerate() {
            if assignment.labels[idx] != label || !view.is_eligible(idx) {
                continue;
            }
            by_year.entry(paper.year).or_default().push(view.concepts_of(idx));
        }
        let yearly: Vec<scimap_core::conceptnet::YearlyGraph> = by_year
            .iter()
            .map(|(&year, papers)| yearly_cooccurrence(year, papers.iter().copied()))
            .collect();

        if tagged.is_empty() {
            eprintln!("conceptnet: no AI concepts matched; skipping coreness for c{label}");
        } else {
            match coreness_series(&yearly, &tagged, window) {
                Ok(series) => {
                    let path = ctx.out.join(format!("coreness_c{label}.csv"));
                    write_coreness(&series, &path).map_err(data)?;
                    manifest.add_output(&path)?;
                    summary.insert(
                        format!("c{label}"),
                        serde_json::json!({
                            "year_of_apparition": series.year_of_apparition(),
                            "n_ai_concepts": series.final_tagged_count,
                            "share_of_all_concepts": series.share_of_all_concepts,
                            "share_of_giant_concepts": series.share_of_giant_concepts,
                        }),
                    );
                }
                Err(e) => {
                    return Err(data(e));
                }
            }
        }

        // Cumulative edge lists at the requested years.
        let mut cumulative = CumulativeGraph::before(window.0);
        let empty = |y: i32| scimap_core::conceptnet::YearlyGraph::new(y);
        let graph_by_year: BTreeMap<i32, &scimap_core::conceptnet::YearlyGraph> =
            yearly.iter().map(|g| (g.year, g)).collect();
        for year in window.0..=window.1 {
            let e = empty(year);
            let g = graph_by_year.get(&year).copied().unwrap_or(&e);
            cumulative = accumulate(&cumulative, g).map_err(data)?;
            if edge_years.contains(&year) {
                let path = ctx.out.join(format!("conceptnet_c{label}_{year}.edges"));
                write_edges(&cumulative.edges, &path).map_err(data)?;
                manifest.add_output(&path)?;
            }
        }
    }

    let summary_path = ctx.out.join("conceptnet_summary.json");
    std::fs::write(
        &summary_path,
        serde_json::to_string_pretty(&summary).expect("valid json") + "\n",
    )
    .map_err(|e| StageError::Config(format!("write summary: {e}")))?;
    manifest.add_output(&summary_path)?;

    manifest.write(ctx.out)?;
    write_timing(ctx.out, "conceptnet", start.elapsed().as_millis());
    Ok(())
}

pub fn run_citegeom(ctx: &StageCtx<'_>) -> Result<(), StageError> {
    let start = Instant::now();
    let corpus = load_ingested(ctx)?;
    let coords = load_coords(ctx, &corpus)?;
    let map_assignment = load_clusters(ctx, &coords)?;
    let assignment = assignment_for_corpus(&corpus, &coords, &map_assignment);

    let mut manifest = Manifest::new("citegeom", ctx.seed, ctx.digest());
    manifest.add_input(&ctx.out.join(CORPUS_FILE))?;
    manifest.add_input(&ctx.out.join(CORPUS_CITATIONS_FILE))?;
    manifest.add_input(&ctx.out.join(COORDS_OUT))?;
    manifest.add_input(&ctx.out.join("clusters.csv"))?;

    let cfg = &ctx.config.citegeom;
    let citations = CitationGraph::from_corpus(&corpus);
    let geometry = CitationGeometry::new(&corpus, &coords, &citations).map_err(data)?;

    let records = geometry.records(cfg.min_citations);
    let rog_path = ctx.out.join("rog.csv");
    write_rog_csv(&records, &corpus, &assignment, &rog_path).map_err(data)?;
    manifest.add_output(&rog_path)?;

    let yearly = yearly_mean_rog(&geometry, cfg.min_citations).map_err(data)?;
    let yearly_path = ctx.out.join("rog_yearly_mean.csv");
    write_yearly_mean_csv(&yearly, &yearly_path).map_err(data)?;
    manifest.add_output(&yearly_path)?;

    let dists = cluster_rog_distributions(&records, &corpus, &assignment);
    let dists_path = ctx.out.join("rog_distributions.csv");
    write_distributions_csv(&dists, &dists_path).map_err(data)?;
    manifest.add_output(&dists_path)?;

    let matrix = ai_citation_matrix(&geometry, &assignment, cfg.count_mode).map_err(data)?;
    let matrix_path = ctx.out.join("citation_matrix.csv");
    write_matrix_csv(&matrix, &matrix_path).map_err(data)?;
    manifest.add_output(&matrix_path)?;

    for &cohort_year in &cfg.cohort_years {
        let series = cohort_log_return_series(&geometry, cohort_year, true, cfg.min_citations)
            .map_err(data)?;
        let series_path = ctx.out.join(format!("rog_series_{cohort_year}.csv"));
        write_cohort_series_csv(&series, &series_path).map_err(data)?;
        manifest.add_output(&series_path)?;

        if series.len() < 2 {
            eprintln!(
                "citegeom: cohort {cohort_year} has {} eligible series; skipping dynamics",
                series.len()
            );
            continue;
        }
        let k_hi = cfg.k_range[1].min(series.len());
        let k_lo = cfg.k_range[0].min(k_hi);
        let only_series: Vec<scimap_core::TemporalSeries> =
            series.iter().map(|(_, s)| s.clone()).collect();
        let dynamics =
            cluster_rog_dynamics(&only_series, (k_lo, k_hi), ctx.seed).map_err(data)?;
        let file = DynamicsFile {
            cohort_year,
            start_year: dynamics.start_year,
            k: dynamics.chosen.k,
            distortion_curve: dynamics.distortion_curve.clone(),
            assignments: series
                .iter()
                .zip(&dynamics.chosen.assignments)
                .map(|((id, _), &c)| (id.clone(), c))
                .collect(),
            centroids: dynamics.chosen.centroids.clone(),
        };
        let path = ctx.out.join(format!("dynamics_clusters_{cohort_year}.json"));
        write_dynamics_json(&file, &path).map_err(data)?;
        manifest.add_output(&path)?;
    }

    manifest.write(ctx.out)?;
    write_timing(ctx.out, "citegeom", start.elapsed().as_millis());
    Ok(())
}

pub fn run_validate(ctx: &StageCtx<'_>) -> Result<(), StageError> {
    let start = Instant::now();
    let corpus = load_ingested(ctx)?;
    let coords = load_coords(ctx, &corpus)?;
    let vectors_path = ctx.resolve(&ctx.config.vectors.path, synthkit::VECTORS_FILE);
    ctx.require(&vectors_path, "synth")?;
    let vectors =
        import_vectors(&vectors_path, ctx.config.vectors.dim, Some(&corpus)).map_err(data)?;

    let mut manifest = Manifest::new("validate", ctx.seed, ctx.digest());
    manifest.add_input(&ctx.out.join(CORPUS_FILE))?;
    manifest.add_input(&vectors_path)?;
    manifest.add_input(&ctx.out.join(COORDS_OUT))?;

    let cfg = &ctx.config.validate;
    let mut summary = BTreeMap::new();

    struct SpaceRun<'a> {
        name: &'a str,
        fraction: f64,
    }
    for run in [
        SpaceRun {
            name: "vectors",
            fraction: cfg.high_test_fraction,
        },
        SpaceRun {
            name: "coords",
            fraction: cfg.low_test_fraction,
        },
    ] {
        let (sweep, confusion) = if run.name == "vectors" {
            let split = LabeledSplit::build(&corpus, &vectors, cfg.threshold, run.fraction, ctx.seed)
                .map_err(data)?;
            let ks: Vec<usize> = cfg
                .k_values
                .iter()
                .copied()
                .filter(|&k| k < split.train.len())
                .collect();
            let sweep = knn_accuracy_sweep(&vectors, &split, &ks).map_err(data)?;
            let confusion = confusion_matrix(&vectors, &split, sweep.best_k).map_err(data)?;
            (sweep, confusion)
        } else {
            let split = LabeledSplit::build(&corpus, &coords, cfg.threshold, run.fraction, ctx.seed)
                .map_err(data)?;
            let ks: Vec<usize> = cfg
                .k_values
                .iter()
                .copied()
                .filter(|&k| k < split.train.len())
                .collect();
            let sweep = knn_accuracy_sweep(&coords, &split, &ks).map_err(data)?;
            let confusion = confusion_matrix(&coords, &split, sweep.best_k).map_err(data)?;
            (sweep, confusion)
        };

        let sweep_path = ctx.out.join(format!("accuracy_sweep_{}.csv", run.name));
        write_sweep_csv(&sweep, &sweep_path).map_err(data)?;
        manifest.add_output(&sweep_path)?;
        if run.name == "coords" {
            // Also the bare interface name for the headline (map) sweep.
            let bare = ctx.out.join("accuracy_sweep.csv");
            write_sweep_csv(&sweep, &bare).map_err(data)?;
            manifest.add_output(&bare)?;
        }
        let confusion_path = ctx.out.join(format!("confusion_{}.csv", run.name));
        write_confusion_csv(&confusion, &confusion_path).map_err(data)?;
        manifest.add_output(&confusion_path)?;
        summary.insert(
            run.name.to_string(),
            serde_json::json!({
                "best_k": sweep.best_k,
                "accuracy_at_best_k": confusion.accuracy,
                "test_fraction": run.fraction,
            }),
        );
    }

    // Cross-space neighbor preservation on the common id set.
    if vectors.len() == coords.len() && vectors.len() > cfg.overlap_k {
        let overlap = neighbor_overlap(&vectors, &coords, cfg.overlap_k).map_err(data)?;
        let path = ctx.out.join("neighbor_overlap.csv");
        let mut w = csv::Writer::from_path(&path)
            .map_err(|e| StageError::Config(format!("open {}: {e}", path.display())))?;
        w.write_record(["id", "share"])
            .map_err(|e| StageError::Config(format!("write overlap: {e}")))?;
        for (id, share) in &overlap.per_paper {
            w.write_record([id.as_str(), &format!("{share:?}")])
                .map_err(|e| StageError::Config(format!("write overlap: {e}")))?;
        }
        w.flush()
            .map_err(|e| StageError::Config(format!("write overlap: {e}")))?;
        manifest.add_output(&path)?;
        summary.insert(
            "neighbor_overlap".to_string(),
            serde_json::json!({"k": overlap.k, "mean": overlap.mean}),
        );
    }

    let summary_path = ctx.out.join("validate_summary.json");
    std::fs::write(
        &summary_path,
        serde_json::to_string_pretty(&summary).expect("valid json") + "\n",
    )
    .map_err(|e| StageError::Config(format!("write summary: {e}")))?;
    manifest.add_output(&summary_path)?;

    manifest.write(ctx.out)?;
    write_timing(ctx.out, "validate", start.elapsed().as_millis());
    Ok(())
}

pub fn run_all(ctx: &StageCtx<'_>) -> Result<(), StageError> {
    run_ingest(ctx)?;
    run_project(ctx)?;
    run_cluster(ctx)?;
    run_profile(ctx)?;
    run_conceptnet(ctx)?;
    run_citegeom(ctx)?;
    run_validate(ctx)?;
    Ok(())
}
