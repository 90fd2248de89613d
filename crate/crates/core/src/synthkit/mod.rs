//! Deterministic synthetic-world generators and brute-force oracles. The
//! generators emit the same shapes the ingestion modules consume, so the
//! whole pipeline runs unmodified on synthetic data; the oracles verify the
//! optimized algorithms on small instances.

pub mod oracles;

use std::collections::BTreeSet;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::atlas::{MapCoordinates, MapProvenance, VectorStore};
use crate::conceptnet::YearlyGraph;
use crate::corpus::{
    tag_ai, AiKeywordList, ConceptId, Corpus, PaperId, PaperRecord, TopicLabels,
};
use crate::error::{Error, Result};

/// Phrases injected into synthetic AI paper titles; they double as the
/// synthetic AI keyword list.
pub const SYNTH_AI_PHRASES: [&str; 4] = [
    "neural network",
    "deep learning",
    "machine learning",
    "expert system",
];

/// Optional density bump on a blob's year profile.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct YearWave {
    pub year: i32,
    pub weight: f64,
    pub sigma: f64,
}

fn default_concepts() -> usize {
    24
}

fn default_ai_concepts() -> usize {
    4
}

fn default_concepts_per_paper() -> [usize; 2] {
    [2, 4]
}

/// One planted cluster of papers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlobSpec {
    pub label: String,
    pub center: [f64; 2],
    pub sigma: f64,
    pub count: usize,
    pub year_start: i32,
    pub year_end: i32,
    /// When non-empty, yearly arrival weights follow these waves instead of
    /// a uniform profile.
    #[serde(default)]
    pub year_waves: Vec<YearWave>,
    /// Probability that a paper carries an AI phrase in its title.
    #[serde(default)]
    pub ai_rate: f64,
    /// Vocabulary size of the blob's concept pool.
    #[serde(default = "default_concepts")]
    pub concepts: usize,
    /// Leading concepts of the pool that are AI-related (their names embed
    /// an AI phrase).
    #[serde(default = "default_ai_concepts")]
    pub ai_concepts: usize,
    /// Inclusive range of concepts drawn per paper.
    #[serde(default = "default_concepts_per_paper")]
    pub concepts_per_paper: [usize; 2],
}

fn default_in_cluster_prob() -> f64 {
    0.8
}

fn default_preferential_weight() -> f64 {
    1.0
}

fn default_refs_per_paper() -> [usize; 2] {
    [1, 4]
}

/// Citation wiring model: assortativity plus preferential attachment.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CitationModel {
    /// Probability that a reference targets the citer's own blob.
    #[serde(default = "default_in_cluster_prob")]
    pub in_cluster_prob: f64,
    /// Weight of accumulated in-degree when choosing a target.
    #[serde(default = "default_preferential_weight")]
    pub preferential_weight: f64,
    /// Inclusive range of references drawn per paper.
    #[serde(default = "default_refs_per_paper")]
    pub refs_per_paper: [usize; 2],
}

impl Default for CitationModel {
    fn default() -> Self {
        CitationModel {
            in_cluster_prob: default_in_cluster_prob(),
            preferential_weight: default_preferential_weight(),
            refs_per_paper: default_refs_per_paper(),
        }
    }
}

fn default_dim() -> usize {
    8
}

fn default_vector_noise() -> f64 {
    0.05
}

/// Full synthetic-world specification (`[synth]` config section).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSpec {
    pub seed: u64,
    /// Embedding dimensionality; the first two components carry the planted
    /// map geometry.
    #[serde(default = "default_dim")]
    pub dim: usize,
    pub blobs: Vec<BlobSpec>,
    #[serde(default)]
    pub citations: CitationModel,
    /// Stddev of the isotropic noise added to embedding vectors, as a
    /// fraction of each blob's sigma.
    #[serde(default = "default_vector_noise")]
    pub vector_noise: f64,
}

impl SynthSpec {
    fn validate(&self) -> Result<()> {
        if self.blobs.is_empty() {
            return Err(Error::invalid("synth spec has no blobs"));
        }
        if self.dim < 2 {
            return Err(Error::invalid("synth dim must be at least 2"));
        }
        for (i, b) in self.blobs.iter().enumerate() {
            if b.count == 0 {
                return Err(Error::invalid(format!("blob {i} has zero papers")));
            }
            if b.sigma <= 0.0 {
                return Err(Error::invalid(format!("blob {i} has non-positive sigma")));
            }
            if b.year_start > b.year_end {
                return Err(Error::invalid(format!("blob {i} has an empty year range")));
            }
            if !(0.0..=1.0).contains(&b.ai_rate) {
                return Err(Error::invalid(format!("blob {i} ai_rate outside [0, 1]")));
            }
            if b.ai_concepts > b.concepts || b.concepts == 0 {
                return Err(Error::invalid(format!("blob {i} concept pool is invalid")));
            }
            if b.concepts_per_paper[0] > b.concepts_per_paper[1]
                || b.concepts_per_paper[1] > b.concepts
            {
                return Err(Error::invalid(format!(
                    "blob {i} concepts_per_paper range is invalid"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.citations.in_cluster_prob) {
            return Err(Error::invalid("in_cluster_prob outside [0, 1]"));
        }
        if self.citations.preferential_weight < 0.0 {
            return Err(Error::invalid("preferential_weight must be non-negative"));
        }
        if self.citations.refs_per_paper[0] > self.citations.refs_per_paper[1] {
            return Err(Error::invalid("refs_per_paper range is invalid"));
        }
        Ok(())
    }
}

/// Everything `gen_corpus` plants, including the ground-truth blob of every
/// paper for recovery tests.
pub struct SynthWorld {
    pub corpus: Corpus,
    pub vectors: VectorStore,
    pub coords: MapCoordinates,
    pub keywords: AiKeywordList,
    /// Generating blob index per corpus paper index.
    pub truth: Vec<usize>,
}

/// Standard normal via Box–Muller, driven by the shared seeded stream.
fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn sample_year(rng: &mut ChaCha8Rng, blob: &BlobSpec) -> i32 {
    let span = (blob.year_end - blob.year_start + 1) as usize;
    if blob.year_waves.is_empty() {
        return blob.year_start + rng.gen_range(0..span) as i32;
    }
    let weights: Vec<f64> = (0..span)
        .map(|i| {
            let year = blob.year_start + i as i32;
            blob.year_waves
                .iter()
                .map(|w| {
                    let z = (year - w.year) as f64 / w.sigma.max(1e-9);
                    w.weight * (-0.5 * z * z).exp()
                })
                .sum::<f64>()
                .max(1e-12)
        })
        .collect();
    let total: f64 = weights.iter().sum();
    let mut target = rng.gen_range(0.0..total);
    for (i, w) in weights.iter().enumerate() {
        if target < *w {
            return blob.year_start + i as i32;
        }
        target -= w;
    }
    blob.year_end
}

/// Generates the reproducible synthetic world: planted map clusters with
/// yearly arrivals, AI phrase injection, per-blob concept pools, topic
/// labels, and an assortative preferential-attachment citation graph.
/// Identical seeds produce identical worlds.
pub fn gen_corpus(spec: &SynthSpec) -> Result<SynthWorld> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    struct Draft {
        blob: usize,
        year: i32,
        point: [f64; 2],
        ai: bool,
    }

    let mut drafts: Vec<Draft> = Vec::new();
    for (bi, blob) in spec.blobs.iter().enumerate() {
        for _ in 0..blob.count {
            let point = [
                blob.center[0] + blob.sigma * gauss(&mut rng),
                blob.center[1] + blob.sigma * gauss(&mut rng),
            ];
            drafts.push(Draft {
                blob: bi,
                year: sample_year(&mut rng, blob),
                point,
                ai: rng.gen_bool(blob.ai_rate),
            });
        }
    }

    // Ids are zero-padded in generation order, so id order equals index
    // order everywhere downstream.
    let ids: Vec<PaperId> = (0..drafts.len())
        .map(|i| PaperId::new(format!("p{i:06}")))
        .collect();

    let mut papers = Vec::with_capacity(drafts.len());
    let mut vec_entries = Vec::with_capacity(drafts.len());
    let mut truth = Vec::with_capacity(drafts.len());
    for (i, d) in drafts.iter().enumerate() {
        let blob = &spec.blobs[d.blob];
        let phrase = SYNTH_AI_PHRASES[rng.gen_range(0..SYNTH_AI_PHRASES.len())];
        let title = if d.ai {
            format!("Study {i} of {} using {phrase}", blob.label)
        } else {
            format!("Study {i} of {}", blob.label)
        };

        let n_concepts =
            rng.gen_range(blob.concepts_per_paper[0]..=blob.concepts_per_paper[1]);
        let mut chosen: BTreeSet<usize> = BTreeSet::new();
        if d.ai && blob.ai_concepts > 0 {
            chosen.insert(rng.gen_range(0..blob.ai_concepts));
        }
        // Guard against tiny pools: stop once the pool is exhausted.
        while chosen.len() < n_concepts && chosen.len() < blob.concepts {
            let pick = if d.ai || blob.ai_concepts == blob.concepts {
                rng.gen_range(0..blob.concepts)
            } else {
                // Non-AI papers draw from the non-AI part of the pool.
                blob.ai_concepts + rng.gen_range(0..blob.concepts - blob.ai_concepts)
            };
            chosen.insert(pick);
        }
        let fos_labels: Vec<(ConceptId, u8)> = chosen
            .iter()
            .map(|&k| {
                let name = if k < blob.ai_concepts {
                    format!("{} topic {k:03} ({})", SYNTH_AI_PHRASES[k % SYNTH_AI_PHRASES.len()], blob.label)
                } else {
                    format!("field {k:03} ({})", blob.label)
                };
                (ConceptId::new(name), 2 + (k % 2) as u8)
            })
            .collect();

        let abstract_text = if rng.gen_bool(0.7) {
            Some(format!("We examine {} across {} cases.", blob.label, 1 + i % 40))
        } else {
            None
        };

        papers.push(PaperRecord {
            id: ids[i].clone(),
            title,
            abstract_text,
            year: d.year,
            venue_id: format!("v{:02}", d.blob),
            ref_count: 10 + rng.gen_range(0..30),
            citation_count: 10 + rng.gen_range(0..50),
            fos_labels,
            topic: Some(TopicLabels {
                topic: format!("t_{}_{}", blob.label, i % 3),
                subfield: format!("sf_{}", blob.label),
                field: "f_synth".into(),
                domain: "d_synth".into(),
            }),
            keywords: vec![format!("kw_{}_{}", blob.label, i % 5)],
            ai_flag: false,
        });

        let mut v = vec![0f32; spec.dim];
        v[0] = d.point[0] as f32;
        v[1] = d.point[1] as f32;
        let noise = spec.vector_noise * blob.sigma;
        for slot in v.iter_mut() {
            *slot += (noise * gauss(&mut rng)) as f32;
        }
        vec_entries.push((ids[i].clone(), v));
        truth.push(d.blob);
    }

    // Citations: papers cite strictly earlier ones; targets picked by blob
    // assortativity, then preferential attachment within the target blob.
    let mut order: Vec<usize> = (0..papers.len()).collect();
    order.sort_by_key(|&i| (papers[i].year, i));
    let mut in_degree = vec![0usize; papers.len()];
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    let n_blobs = spec.blobs.len();
    for pos in 0..order.len() {
        let citer = order[pos];
        let citer_year = papers[citer].year;
        let earlier = &order[..pos];
        let first_same_year = earlier.partition_point(|&j| papers[j].year < citer_year);
        let earlier = &earlier[..first_same_year];
        if earlier.is_empty() {
            continue;
        }
        let n_refs = rng.gen_range(
            spec.citations.refs_per_paper[0]..=spec.citations.refs_per_paper[1],
        );
        let mut already_cited: BTreeSet<usize> = BTreeSet::new();
        for _ in 0..n_refs {
            let own = truth[citer];
            let target_blob = if n_blobs == 1 || rng.gen_bool(spec.citations.in_cluster_prob) {
                own
            } else {
                let mut other = rng.gen_range(0..n_blobs - 1);
                if other >= own {
                    other += 1;
                }
                other
            };
            // Sampling among not-yet-cited targets keeps the realized edge
            // mix at the configured in-cluster probability.
            let candidates: Vec<usize> = earlier
                .iter()
                .copied()
                .filter(|&j| truth[j] == target_blob && !already_cited.contains(&j))
                .collect();
            if candidates.is_empty() {
                continue;
            }
            let weights: Vec<f64> = candidates
                .iter()
                .map(|&j| 1.0 + spec.citations.preferential_weight * in_degree[j] as f64)
                .collect();
            let total: f64 = weights.iter().sum();
            let mut target = rng.gen_range(0.0..total);
            let mut chosen = candidates[candidates.len() - 1];
            for (j, w) in candidates.iter().zip(&weights) {
                if target < *w {
                    chosen = *j;
                    break;
                }
                target -= w;
            }
            already_cited.insert(chosen);
            edges.insert((citer, chosen));
            in_degree[chosen] += 1;
        }
    }

    let citation_pairs: Vec<(PaperId, PaperId)> = edges
        .iter()
        .map(|&(a, b)| (ids[a].clone(), ids[b].clone()))
        .collect();

    let mut corpus = Corpus::from_parts(papers, citation_pairs)?;
    let keywords = AiKeywordList::new(
        SYNTH_AI_PHRASES.iter().map(|s| s.to_string()).collect(),
    )?;
    tag_ai(&mut corpus, &keywords);

    let vectors = VectorStore::from_parts(spec.dim, vec_entries)?;
    let coords = MapCoordinates::from_parts(
        ids.clone(),
        drafts.iter().map(|d| d.point).collect(),
        MapProvenance::Imported,
    )?;

    Ok(SynthWorld {
        corpus,
        vectors,
        coords,
        keywords,
        truth,
    })
}

/// Standard output file names of the synthetic world.
pub const PAPERS_FILE: &str = "papers.jsonl";
pub const CITATIONS_FILE: &str = "citations.csv";
pub const KEYWORDS_FILE: &str = "ai_keywords.txt";
pub const VECTORS_FILE: &str = "vectors.f32";
pub const COORDS_FILE: &str = "coords.csv";

/// Writes the world in the exact file formats the pipeline ingests.
pub fn write_world(world: &SynthWorld, dir: &Path) -> Result<()> {
    world
        .corpus
        .write_jsonl(&dir.join(PAPERS_FILE), &dir.join(CITATIONS_FILE))?;
    world.keywords.write(&dir.join(KEYWORDS_FILE))?;
    crate::atlas::write_vectors(&world.vectors, &dir.join(VECTORS_FILE))?;
    crate::atlas::write_coords(&world.coords, &dir.join(COORDS_FILE))?;
    Ok(())
}

/// 1-D Gaussian peaks embedded on the map's x axis: the planted-cluster
/// fixture. Returns points and their generating peak indices.
pub fn gen_gaussian_peaks_1d(
    peaks: &[(f64, f64, usize)],
    seed: u64,
) -> (Vec<[f64; 2]>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::new();
    let mut truth = Vec::new();
    for (pi, &(center, sigma, count)) in peaks.iter().enumerate() {
        for _ in 0..count {
            points.push([center + sigma * gauss(&mut rng), 0.0]);
            truth.push(pi);
        }
    }
    (points, truth)
}

/// Direction of the planted coreness scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorenessScenario {
    /// Tagged concepts seed a dense initial core; later years attach
    /// untagged concepts preferentially to each other, so the tagged mean
    /// coreness strictly decreases.
    Dilution,
    /// Tagged concepts start peripheral and densify among themselves year
    /// after year, so their mean coreness strictly increases.
    Concentration,
}

/// Builds the yearly concept graphs of a planted coreness scenario plus the
/// tagged concept set. Deterministic by construction.
pub fn gen_coreness_scenario(
    scenario: CorenessScenario,
    start_year: i32,
    years: usize,
) -> (Vec<YearlyGraph>, BTreeSet<ConceptId>) {
    assert!(years >= 2, "a trend needs at least two years");
    let ai = |i: usize| ConceptId::new(format!("ai_{i:02}"));
    let bg = |tag: String| ConceptId::new(tag);
    let mut graphs = Vec::with_capacity(years);
    match scenario {
        CorenessScenario::Dilution => {
            // Year 0: tagged clique K8 (core number 7 everywhere).
            let mut g0 = YearlyGraph::new(start_year);
            for i in 0..8 {
                for j in (i + 1)..8 {
                    g0.add_edge(ai(i), ai(j), 1);
                }
            }
            graphs.push(g0);
            // Year y: a fresh untagged clique of size 8 + y, hooked onto the
            // tagged core; c_max grows to 7 + y while tagged cores stay 7.
            for y in 1..years {
                let mut g = YearlyGraph::new(start_year + y as i32);
                let size = 8 + y;
                for i in 0..size {
                    for j in (i + 1)..size {
                        g.add_edge(bg(format!("bg_{y:02}_{i:03}")), bg(format!("bg_{y:02}_{j:03}")), 1);
                    }
                }
                g.add_edge(bg(format!("bg_{y:02}_000")), ai(0), 1);
                graphs.push(g);
            }
        }
        CorenessScenario::Concentration => {
            assert!(years <= 12, "circulant construction saturates past 12 years");
            // Year 0: untagged clique K30 (c_max 29) with 26 tagged pendants.
            let mut g0 = YearlyGraph::new(start_year);
            for i in 0..30 {
                for j in (i + 1)..30 {
                    g0.add_edge(bg(format!("bg_{i:03}")), bg(format!("bg_{j:03}")), 1);
                }
            }
            for i in 0..26 {
                g0.add_edge(ai(i), bg("bg_000".into()), 1);
            }
            graphs.push(g0);
            // Year y adds the distance-y chords of a circulant over the 26
            // tagged nodes: their core number climbs to 2y, still below 29.
            for y in 1..years {
                let mut g = YearlyGraph::new(start_year + y as i32);
                for i in 0..26 {
                    g.add_edge(ai(i), ai((i + y) % 26), 1);
                }
                graphs.push(g);
            }
        }
    }
    let tagged: BTreeSet<ConceptId> = (0..match scenario {
        CorenessScenario::Dilution => 8,
        CorenessScenario::Concentration => 26,
    })
        .map(ai)
        .collect();
    (graphs, tagged)
}

/// One synthetic paper of a citation-burst cohort: its map position and the
/// arrival-year/position schedule of its citers.
pub struct BurstPaper {
    pub cohort: usize,
    pub publication_year: i32,
    pub focal: [f64; 2],
    pub citers: Vec<(i32, [f64; 2])>,
}

/// Cohorts of papers whose citation RoG bursts at a controlled lag after
/// publication: near citers at the publication year, a far burst at
/// `publication + lag`, then near citers. Log-return series peak at the lag.
pub fn gen_burst_cohorts(
    lags: &[u32],
    papers_per_cohort: usize,
    publication_year: i32,
    horizon: i32,
    seed: u64,
) -> Vec<BurstPaper> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (ci, &lag) in lags.iter().enumerate() {
        for p in 0..papers_per_cohort {
            let focal = [ci as f64 * 50.0 + p as f64, (p % 7) as f64];
            let mut citers = Vec::new();
            for angle_step in 0..3 {
                let angle = angle_step as f64 * 2.1 + rng.gen_range(0.0..0.3);
                let r = 1.0 + rng.gen_range(-0.1..0.1);
                citers.push((
                    publication_year,
                    [focal[0] + r * angle.cos(), focal[1] + r * angle.sin()],
                ));
            }
            let burst_year = publication_year + lag as i32;
            for b in 0..5 {
                let angle = b as f64 * 1.3 + rng.gen_range(0.0..0.2);
                let r = 30.0 + rng.gen_range(-1.0..1.0);
                citers.push((
                    burst_year,
                    [focal[0] + r * angle.cos(), focal[1] + r * angle.sin()],
                ));
            }
            for year in (burst_year + 1)..=horizon {
                let angle = rng.gen_range(0.0..std::f64::consts::TAU);
                citers.push((year, [focal[0] + angle.cos(), focal[1] + angle.sin()]));
            }
            out.push(BurstPaper {
                cohort: ci,
                publication_year,
                focal,
                citers,
            });
        }
    }
    out
}
