//! Bibliographic corpus: loading, filtering, AI tagging, and concept views.
//!
//! Input formats: `papers.jsonl` (one JSON object per line), `citations.csv`
//! (`citer,cited` with header) and `ai_keywords.txt` (one phrase per line,
//! `#` comments allowed).

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Opaque paper identifier. Ordering is lexicographic and is the tie-break
/// order used by every deterministic ranking in the engine.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PaperId(pub String);

impl PaperId {
    pub fn new(id: impl Into<String>) -> Self {
        PaperId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PaperId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Opaque concept (field-of-study) identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConceptId(pub String);

impl ConceptId {
    pub fn new(id: impl Into<String>) -> Self {
        ConceptId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Primary-topic labels: topic plus its subfield/field/domain ancestors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicLabels {
    pub topic: String,
    pub subfield: String,
    pub field: String,
    pub domain: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PaperRecord {
    pub id: PaperId,
    pub title: String,
    pub abstract_text: Option<String>,
    pub year: i32,
    pub venue_id: String,
    pub ref_count: u32,
    pub citation_count: u32,
    /// (concept, level) pairs; levels run 0 (general) to 5 (specific).
    pub fos_labels: Vec<(ConceptId, u8)>,
    pub topic: Option<TopicLabels>,
    pub keywords: Vec<String>,
    pub ai_flag: bool,
}

/// Wire form of one `papers.jsonl` record.
#[derive(Debug, Serialize, Deserialize)]
struct PaperJson {
    id: PaperId,
    title: String,
    #[serde(rename = "abstract", default, skip_serializing_if = "Option::is_none")]
    abstract_text: Option<String>,
    year: i32,
    venue: String,
    refs: u32,
    cites: u32,
    fos: Vec<(ConceptId, u8)>,
    #[serde(default)]
    topic: Option<TopicLabels>,
    #[serde(default)]
    keywords: Vec<String>,
    #[serde(default)]
    ai: bool,
}

impl PaperJson {
    fn from_record(r: &PaperRecord) -> Self {
        PaperJson {
            id: r.id.clone(),
            title: r.title.clone(),
            abstract_text: r.abstract_text.clone(),
            year: r.year,
            venue: r.venue_id.clone(),
            refs: r.ref_count,
            cites: r.citation_count,
            fos: r.fos_labels.clone(),
            topic: r.topic.clone(),
            keywords: r.keywords.clone(),
            ai: r.ai_flag,
        }
    }

    fn into_record(self) -> PaperRecord {
        PaperRecord {
            id: self.id,
            title: self.title,
            abstract_text: self.abstract_text,
            year: self.year,
            venue_id: self.venue,
            ref_count: self.refs,
            citation_count: self.cites,
            fos_labels: self.fos,
            topic: self.topic,
            keywords: self.keywords,
            ai_flag: self.ai,
        }
    }
}

/// Ingestion filters, config file section `[ingest]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IngestionConfig {
    pub year_min: i32,
    pub year_max: i32,
    pub min_refs: u32,
    pub min_cites: u32,
    /// Optional allow-list of venue ids, one per line, `#` comments allowed.
    #[serde(default)]
    pub venues_file: Option<std::path::PathBuf>,
}

impl Default for IngestionConfig {
    fn default() -> Self {
        IngestionConfig {
            year_min: 1970,
            year_max: 2020,
            min_refs: 10,
            min_cites: 10,
            venues_file: None,
        }
    }
}

/// Per-filter drop counts produced by `load_corpus`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropReport {
    pub papers_scanned: usize,
    pub papers_retained: usize,
    pub dropped_year: usize,
    pub dropped_min_refs: usize,
    pub dropped_min_cites: usize,
    pub dropped_venue: usize,
    pub citations_scanned: usize,
    pub citations_retained: usize,
    pub citations_dangling: usize,
    pub citations_self_loop: usize,
    pub citations_duplicate: usize,
}

/// The loaded, filtered corpus. Immutable after ingestion apart from AI
/// tagging; safe for concurrent reads downstream.
#[derive(Debug, Clone)]
pub struct Corpus {
    papers: Vec<PaperRecord>,
    index: HashMap<PaperId, usize>,
    /// Deduplicated `(citer, cited)` index pairs, sorted.
    citations: Vec<(usize, usize)>,
}

impl Corpus {
    pub fn from_parts(papers: Vec<PaperRecord>, citations: Vec<(PaperId, PaperId)>) -> Result<Self> {
        let mut index = HashMap::with_capacity(papers.len());
        for (i, p) in papers.iter().enumerate() {
            if index.insert(p.id.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate paper id {}", p.id)));
            }
        }
        let mut edges = Vec::with_capacity(citations.len());
        for (citer, cited) in &citations {
            let (Some(&a), Some(&b)) = (index.get(citer), index.get(cited)) else {
                return Err(Error::invalid(format!(
                    "citation references unknown paper ({citer} -> {cited})"
                )));
            };
            if a == b {
                return Err(Error::invalid(format!("self-citation on {citer}")));
            }
            edges.push((a, b));
        }
        edges.sort_unstable();
        edges.dedup();
        Ok(Corpus {
            papers,
            index,
            citations: edges,
        })
    }

    pub fn len(&self) -> usize {
        self.papers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.papers.is_empty()
    }

    pub fn papers(&self) -> &[PaperRecord] {
        &self.papers
    }

    pub fn paper(&self, idx: usize) -> &PaperRecord {
        &self.papers[idx]
    }

    pub fn index_of(&self, id: &PaperId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn contains(&self, id: &PaperId) -> bool {
        self.index.contains_key(id)
    }

    /// Citation edges as `(citer, cited)` paper indices, sorted and unique.
    pub fn citation_index_pairs(&self) -> &[(usize, usize)] {
        &self.citations
    }

    pub fn ai_count(&self) -> usize {
        self.papers.iter().filter(|p| p.ai_flag).count()
    }

    /// Publication year range actually present, `None` for an empty corpus.
    pub fn year_range(&self) -> Option<(i32, i32)> {
        let min = self.papers.iter().map(|p| p.year).min()?;
        let max = self.papers.iter().map(|p| p.year).max()?;
        Some((min, max))
    }

    /// Paper ids sorted lexicographically.
    pub fn sorted_ids(&self) -> Vec<PaperId> {
        let mut ids: Vec<PaperId> = self.papers.iter().map(|p| p.id.clone()).collect();
        ids.sort();
        ids
    }

    /// Writes the corpus back out in the `papers.jsonl` schema (with the
    /// `ai` flag materialized) plus a canonical `citations.csv`. Records are
    /// sorted by id so re-emission is byte-stable.
    pub fn write_jsonl(&self, papers_path: &Path, citations_path: &Path) -> Result<()> {
        let mut order: Vec<usize> = (0..self.papers.len()).collect();
        order.sort_by(|&a, &b| self.papers[a].id.cmp(&self.papers[b].id));

        let mut out = std::io::BufWriter::new(
            File::create(papers_path).map_err(|e| Error::io(papers_path, e))?,
        );
        for &i in &order {
            let line = serde_json::to_string(&PaperJson::from_record(&self.papers[i]))
                .map_err(|e| Error::invalid(format!("serialize {}: {e}", self.papers[i].id)))?;
            writeln!(out, "{line}").map_err(|e| Error::io(papers_path, e))?;
        }
        out.flush().map_err(|e| Error::io(papers_path, e))?;

        let mut rows: Vec<(&PaperId, &PaperId)> = self
            .citations
            .iter()
            .map(|&(a, b)| (&self.papers[a].id, &self.papers[b].id))
            .collect();
        rows.sort();
        let mut w = csv::Writer::from_path(citations_path)
            .map_err(|e| Error::invalid(format!("open {}: {e}", citations_path.display())))?;
        w.write_record(["citer", "cited"])
            .map_err(|e| Error::invalid(format!("write citations: {e}")))?;
        for (a, b) in rows {
            w.write_record([a.as_str(), b.as_str()])
                .map_err(|e| Error::invalid(format!("write citations: {e}")))?;
        }
        w.flush().map_err(|e| Error::io(citations_path, e))?;
        Ok(())
    }
}

fn read_lines(path: &Path) -> Result<impl Iterator<Item = (usize, std::io::Result<String>)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(BufReader::new(file)
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l)))
}

fn load_venue_set(path: &Path) -> Result<HashSet<String>> {
    let mut set = HashSet::new();
    for (line_no, line) in read_lines(path)? {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        set.insert(trimmed.to_string());
        let _ = line_no;
    }
    Ok(set)
}

/// Loads and filters a corpus. Papers failing a filter are dropped and
/// counted against the first failing filter in the order year, refs, cites,
/// venue. Citation edges with a dropped or unknown endpoint are dropped and
/// counted, never fatal; self-loops and duplicate pairs likewise.
pub fn load_corpus(
    papers_path: &Path,
    citations_path: &Path,
    config: &IngestionConfig,
) -> Result<(Corpus, DropReport)> {
    let venue_set = match &config.venues_file {
        Some(p) => Some(load_venue_set(p)?),
        None => None,
    };

    let mut report = DropReport::default();
    let mut papers: Vec<PaperRecord> = Vec::new();
    let mut index: HashMap<PaperId, usize> = HashMap::new();

    for (line_no, line) in read_lines(papers_path)? {
        let line = line.map_err(|e| Error::io(papers_path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        report.papers_scanned += 1;
        let json: PaperJson = serde_json::from_str(&line)
            .map_err(|e| Error::parse(papers_path, line_no, e.to_string()))?;
        for (concept, level) in &json.fos {
            if *level > 5 {
                return Err(Error::parse(
                    papers_path,
                    line_no,
                    format!("fos level {level} out of range 0..=5 for concept {concept}"),
                ));
            }
        }
        let record = json.into_record();
        if record.year < config.year_min || record.year > config.year_max {
            report.dropped_year += 1;
            continue;
        }
        if record.ref_count < config.min_refs {
            report.dropped_min_refs += 1;
            continue;
        }
        if record.citation_count < config.min_cites {
            report.dropped_min_cites += 1;
            continue;
        }
        if let Some(venues) = &venue_set {
            if !venues.contains(&record.venue_id) {
                report.dropped_venue += 1;
                continue;
            }
        }
        if index.contains_key(&record.id) {
            return Err(Error::parse(
                papers_path,
                line_no,
                format!("duplicate paper id {}", record.id),
            ));
        }
        index.insert(record.id.clone(), papers.len());
        papers.push(record);
    }
    report.papers_retained = papers.len();

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(citations_path)
        .map_err(|e| Error::invalid(format!("open {}: {e}", citations_path.display())))?;
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for (row_no, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::parse(citations_path, row_no + 2, e.to_string()))?;
        if row.len() != 2 {
            return Err(Error::parse(
                citations_path,
                row_no + 2,
                format!("expected 2 columns, found {}", row.len()),
            ));
        }
        report.citations_scanned += 1;
        let citer = PaperId::new(&row[0]);
        let cited = PaperId::new(&row[1]);
        let (Some(&a), Some(&b)) = (index.get(&citer), index.get(&cited)) else {
            report.citations_dangling += 1;
            continue;
        };
        if a == b {
            report.citations_self_loop += 1;
            continue;
        }
        edges.push((a, b));
    }
    edges.sort_unstable();
    let before = edges.len();
    edges.dedup();
    report.citations_duplicate = before - edges.len();
    report.citations_retained = edges.len();

    Ok((
        Corpus {
            papers,
            index,
            citations: edges,
        },
        report,
    ))
}

/// Ordered list of lowercase AI match phrases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AiKeywordList {
    phrases: Vec<String>,
}

impl AiKeywordList {
    /// Phrases are lowercased; the list must be non-empty and free of
    /// duplicates after lowercasing.
    pub fn new(phrases: Vec<String>) -> Result<Self> {
        let lowered: Vec<String> = phrases
            .into_iter()
            .map(|p| p.trim().to_lowercase())
            .filter(|p| !p.is_empty())
            .collect();
        if lowered.is_empty() {
            return Err(Error::invalid("AI keyword list is empty"));
        }
        let mut seen = HashSet::new();
        for p in &lowered {
            if !seen.insert(p.clone()) {
                return Err(Error::invalid(format!("duplicate AI keyword phrase '{p}'")));
            }
        }
        Ok(AiKeywordList { phrases: lowered })
    }

    /// `ai_keywords.txt`: one phrase per line, `#` comments allowed.
    pub fn load(path: &Path) -> Result<Self> {
        let mut phrases = Vec::new();
        for (line_no, line) in read_lines(path)? {
            let line = line.map_err(|e| Error::io(path, e))?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            phrases.push(trimmed.to_string());
            let _ = line_no;
        }
        Self::new(phrases)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out =
            std::io::BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
        for p in &self.phrases {
            writeln!(out, "{p}").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn phrases(&self) -> &[String] {
        &self.phrases
    }
}

/// True when `phrase` occurs in `haystack` as a case-insensitive substring
/// flanked by word boundaries (non-alphanumeric or string edge). Both inputs
/// must already be lowercase.
fn phrase_matches(haystack: &str, phrase: &str) -> bool {
    let mut from = 0;
    while let Some(pos) = haystack[from..].find(phrase) {
        let start = from + pos;
        let end = start + phrase.len();
        let left_ok = start == 0
            || !haystack[..start]
                .chars()
                .next_back()
                .is_some_and(|c| c.is_alphanumeric());
        let right_ok = end == haystack.len()
            || !haystack[end..].chars().next().is_some_and(|c| c.is_alphanumeric());
        if left_ok && right_ok {
            return true;
        }
        // Advance by one character, not one byte.
        let step = haystack[start..].chars().next().map_or(1, |c| c.len_utf8());
        from = start + step;
        if from >= haystack.len() {
            break;
        }
    }
    false
}

/// Sets `ai_flag` on every paper: flagged iff any phrase matches the title,
/// or the abstract when present. Returns the number of flagged papers.
pub fn tag_ai(corpus: &mut Corpus, keywords: &AiKeywordList) -> usize {
    let mut count = 0;
    for paper in &mut corpus.papers {
        let mut haystack = paper.title.to_lowercase();
        if let Some(a) = &paper.abstract_text {
            haystack.push(' ');
            haystack.push_str(&a.to_lowercase());
        }
        paper.ai_flag = keywords
            .phrases
            .iter()
            .any(|p| phrase_matches(&haystack, p));
        if paper.ai_flag {
            count += 1;
        }
    }
    count
}

/// Concepts retained per paper at the selected taxonomy levels.
#[derive(Debug, Clone)]
pub struct ConceptView {
    pub levels: BTreeSet<u8>,
    /// Sorted, deduplicated concept ids per paper (corpus order).
    concepts: Vec<Vec<ConceptId>>,
}

impl ConceptView {
    pub fn concepts_of(&self, paper_idx: usize) -> &[ConceptId] {
        &self.concepts[paper_idx]
    }

    /// Eligible for co-occurrence analysis: at least two retained concepts.
    pub fn is_eligible(&self, paper_idx: usize) -> bool {
        self.concepts[paper_idx].len() >= 2
    }

    pub fn eligible_count(&self) -> usize {
        self.concepts.iter().filter(|c| c.len() >= 2).count()
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }
}

/// Restricts every paper's fos labels to the requested levels.
pub fn concept_view(corpus: &Corpus, levels: &BTreeSet<u8>) -> Result<ConceptView> {
    if levels.iter().any(|&l| l > 5) {
        return Err(Error::invalid("concept levels must be within 0..=5"));
    }
    let concepts = corpus
        .papers
        .iter()
        .map(|p| {
            let mut c: Vec<ConceptId> = p
                .fos_labels
                .iter()
                .filter(|(_, level)| levels.contains(level))
                .map(|(id, _)| id.clone())
                .collect();
            c.sort();
            c.dedup();
            c
        })
        .collect();
    Ok(ConceptView {
        levels: levels.clone(),
        concepts,
    })
}

/// The AI-related concept set: fields of study whose name matches the AI
/// keyword list under the same word-boundary rule used for titles.
pub fn ai_concepts(corpus: &Corpus, keywords: &AiKeywordList) -> BTreeSet<ConceptId> {
    let mut all: BTreeSet<ConceptId> = BTreeSet::new();
    for p in &corpus.papers {
        for (c, _) in &p.fos_labels {
            all.insert(c.clone());
        }
    }
    all.into_iter()
        .filter(|c| {
            let name = c.as_str().to_lowercase();
            keywords.phrases.iter().any(|p| phrase_matches(&name, p))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn record(id: &str, year: i32, refs: u32, cites: u32) -> PaperRecord {
        PaperRecord {
            id: PaperId::new(id),
            title: format!("paper {id}"),
            abstract_text: None,
            year,
            venue_id: "v0".into(),
            ref_count: refs,
            citation_count: cites,
            fos_labels: vec![],
            topic: None,
            keywords: vec![],
            ai_flag: false,
        }
    }

    fn jsonl_line(id: &str, year: i32, refs: u32, cites: u32) -> String {
        format!(
            r#"{{"id":"{id}","title":"paper {id}","year":{year},"venue":"v0","refs":{refs},"cites":{cites},"fos":[],"topic":null,"keywords":[]}}"#
        )
    }

    fn write_files(dir: &Path, papers: &[String], citations: &[(&str, &str)]) -> (std::path::PathBuf, std::path::PathBuf) {
        let papers_path = dir.join("papers.jsonl");
        let citations_path = dir.join("citations.csv");
        let mut f = File::create(&papers_path).unwrap();
        for line in papers {
            writeln!(f, "{line}").unwrap();
        }
        let mut c = File::create(&citations_path).unwrap();
        writeln!(c, "citer,cited").unwrap();
        for (a, b) in citations {
            writeln!(c, "{a},{b}").unwrap();
        }
        (papers_path, citations_path)
    }

    #[test]
    fn load_passes_wellformed_records() {
        let dir = tempfile::tempdir().unwrap();
        let lines = vec![
            jsonl_line("p1", 1990, 12, 15),
            jsonl_line("p2", 2000, 10, 10),
            jsonl_line("p3", 2010, 30, 40),
        ];
        let (pp, cp) = write_files(dir.path(), &lines, &[("p1", "p2")]);
        let (corpus, report) = load_corpus(&pp, &cp, &IngestionConfig::default()).unwrap();
        assert_eq!(corpus.len(), 3);
        assert_eq!(report.papers_retained, 3);
        assert_eq!(report.dropped_year, 0);
        assert_eq!(report.dropped_min_refs, 0);
        assert_eq!(report.dropped_min_cites, 0);
        assert_eq!(report.citations_retained, 1);
    }

    #[test]
    fn drops_below_min_refs_boundary() {
        let dir = tempfile::tempdir().unwrap();
        let lines = vec![jsonl_line("p1", 1990, 9, 15), jsonl_line("p2", 1990, 10, 15)];
        let (pp, cp) = write_files(dir.path(), &lines, &[]);
        let (corpus, report) = load_corpus(&pp, &cp, &IngestionConfig::default()).unwrap();
        assert_eq!(corpus.len(), 1);
        assert_eq!(report.dropped_min_refs, 1);
    }

    #[test]
    fn malformed_record_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let lines = vec![jsonl_line("p1", 1990, 12, 15), "{not json".to_string()];
        let (pp, cp) = write_files(dir.path(), &lines, &[]);
        let err = load_corpus(&pp, &cp, &IngestionConfig::default()).unwrap_err();
        match err {
            Error::Parse { record, .. } => assert_eq!(record, 2),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn duplicate_id_is_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let lines = vec![jsonl_line("p1", 1990, 12, 15), jsonl_line("p1", 1991, 12, 15)];
        let (pp, cp) = write_files(dir.path(), &lines, &[]);
        let err = load_corpus(&pp, &cp, &IngestionConfig::default()).unwrap_err();
        assert!(err.to_string().contains("duplicate paper id"));
    }

    #[test]
    fn venue_allowlist_filters_and_counts() {
        let dir = tempfile::tempdir().unwrap();
        let lines = vec![
            jsonl_line("p1", 1990, 12, 15),
            r#"{"id":"p2","title":"t","year":1990,"venue":"v9","refs":12,"cites":15,"fos":[],"topic":null,"keywords":[]}"#.to_string(),
        ];
        let (pp, cp) = write_files(dir.path(), &lines, &[]);
        let venues = dir.path().join("venues.txt");
        std::fs::write(&venues, "# allowed venues\nv0\n").unwrap();
        let cfg = IngestionConfig {
            venues_file: Some(venues),
            ..IngestionConfig::default()
        };
        let (corpus, report) = load_corpus(&pp, &cp, &cfg).unwrap();
        assert_eq!(corpus.len(), 1);
        assert_eq!(report.dropped_venue, 1);
    }

    #[test]
    fn dangling_citation_dropped_and_counted() {
        let dir = tempfile::tempdir().unwrap();
        let lines = vec![jsonl_line("p1", 1990, 12, 15)];
        let (pp, cp) = write_files(dir.path(), &lines, &[("p1", "ghost"), ("p1", "p1")]);
        let (corpus, report) = load_corpus(&pp, &cp, &IngestionConfig::default()).unwrap();
        assert_eq!(corpus.citation_index_pairs().len(), 0);
        assert_eq!(report.citations_dangling, 1);
        assert_eq!(report.citations_self_loop, 1);
    }

    #[test]
    fn fos_level_out_of_range_is_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let line = r#"{"id":"p1","title":"t","year":1990,"venue":"v","refs":10,"cites":10,"fos":[["c",6]],"topic":null,"keywords":[]}"#;
        let (pp, cp) = write_files(dir.path(), &[line.to_string()], &[]);
        let err = load_corpus(&pp, &cp, &IngestionConfig::default()).unwrap_err();
        assert!(err.to_string().contains("out of range"));
    }

    #[test]
    fn filtering_is_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let lines: Vec<String> = (0..20)
            .map(|i| jsonl_line(&format!("p{i:02}"), 1960 + i * 3, 5 + i as u32, 8 + i as u32))
            .collect();
        let (pp, cp) = write_files(dir.path(), &lines, &[("p05", "p06"), ("p06", "p07")]);
        let cfg = IngestionConfig::default();
        let (corpus, _) = load_corpus(&pp, &cp, &cfg).unwrap();

        let out_p = dir.path().join("round.jsonl");
        let out_c = dir.path().join("round.csv");
        corpus.write_jsonl(&out_p, &out_c).unwrap();
        let (again, report) = load_corpus(&out_p, &out_c, &cfg).unwrap();
        assert_eq!(again.len(), corpus.len());
        assert_eq!(report.papers_scanned, report.papers_retained);
        assert_eq!(report.citations_scanned, report.citations_retained);

        // Second re-emission is byte-identical.
        let out_p2 = dir.path().join("round2.jsonl");
        let out_c2 = dir.path().join("round2.csv");
        again.write_jsonl(&out_p2, &out_c2).unwrap();
        assert_eq!(std::fs::read(&out_p).unwrap(), std::fs::read(&out_p2).unwrap());
        assert_eq!(std::fs::read(&out_c).unwrap(), std::fs::read(&out_c2).unwrap());
    }

    #[test]
    fn tag_ai_direct_phrase_hit() {
        let mut p = record("p1", 1990, 10, 10);
        p.title = "A deep learning approach".into();
        let mut corpus = Corpus::from_parts(vec![p], vec![]).unwrap();
        let kw = AiKeywordList::new(vec!["deep learning".into()]).unwrap();
        assert_eq!(tag_ai(&mut corpus, &kw), 1);
        assert!(corpus.paper(0).ai_flag);
    }

    #[test]
    fn tag_ai_no_phrase_present() {
        let mut p = record("p1", 1990, 10, 10);
        p.title = "Retinal ganglion physiology".into();
        let mut corpus = Corpus::from_parts(vec![p], vec![]).unwrap();
        let kw = AiKeywordList::new(vec!["deep learning".into(), "ai".into()]).unwrap();
        assert_eq!(tag_ai(&mut corpus, &kw), 0);
    }

    #[test]
    fn tag_ai_respects_word_boundaries() {
        // "ai" must not match inside "brain".
        let mut p = record("p1", 1990, 10, 10);
        p.title = "Mapping the brain".into();
        let mut q = record("p2", 1990, 10, 10);
        q.title = "AI, in clinical use".into();
        let mut corpus = Corpus::from_parts(vec![p, q], vec![]).unwrap();
        let kw = AiKeywordList::new(vec!["ai".into()]).unwrap();
        assert_eq!(tag_ai(&mut corpus, &kw), 1);
        assert!(!corpus.paper(0).ai_flag);
        assert!(corpus.paper(1).ai_flag);
    }

    #[test]
    fn tag_ai_matches_abstract_too() {
        let mut p = record("p1", 1990, 10, 10);
        p.abstract_text = Some("We apply a neural network to spike trains".into());
        let mut corpus = Corpus::from_parts(vec![p], vec![]).unwrap();
        let kw = AiKeywordList::new(vec!["neural network".into()]).unwrap();
        assert_eq!(tag_ai(&mut corpus, &kw), 1);
    }

    #[test]
    fn tag_ai_monotone_in_keyword_list() {
        let mut papers = Vec::new();
        let titles = [
            "deep learning for eyes",
            "support vector machine study",
            "retina mapping",
            "an expert system for diagnosis",
        ];
        for (i, t) in titles.iter().enumerate() {
            let mut p = record(&format!("p{i}"), 1990, 10, 10);
            p.title = (*t).into();
            papers.push(p);
        }
        let mut corpus = Corpus::from_parts(papers, vec![]).unwrap();
        let small = AiKeywordList::new(vec!["deep learning".into()]).unwrap();
        let big = AiKeywordList::new(vec![
            "deep learning".into(),
            "expert system".into(),
            "support vector machine".into(),
        ])
        .unwrap();
        tag_ai(&mut corpus, &small);
        let flagged_small: Vec<bool> = corpus.papers().iter().map(|p| p.ai_flag).collect();
        tag_ai(&mut corpus, &big);
        for (i, was) in flagged_small.iter().enumerate() {
            if *was {
                assert!(corpus.paper(i).ai_flag, "adding phrases unflagged paper {i}");
            }
        }
    }

    #[test]
    fn concept_view_levels_and_eligibility() {
        let mut p = record("p1", 1990, 10, 10);
        p.fos_labels = vec![
            (ConceptId::new("a"), 1),
            (ConceptId::new("b"), 3),
            (ConceptId::new("c"), 3),
        ];
        let mut q = record("p2", 1990, 10, 10);
        q.fos_labels = vec![(ConceptId::new("d"), 3)];
        let corpus = Corpus::from_parts(vec![p, q], vec![]).unwrap();
        let view = concept_view(&corpus, &BTreeSet::from([2, 3])).unwrap();
        assert_eq!(view.concepts_of(0).len(), 2);
        assert!(view.is_eligible(0));
        assert!(!view.is_eligible(1));
        assert_eq!(view.eligible_count(), 1);
    }

    #[test]
    fn ai_concepts_by_name_match() {
        let mut p = record("p1", 1990, 10, 10);
        p.fos_labels = vec![
            (ConceptId::new("Artificial neural network"), 2),
            (ConceptId::new("Retina"), 2),
        ];
        let corpus = Corpus::from_parts(vec![p], vec![]).unwrap();
        let kw = AiKeywordList::new(vec!["neural network".into()]).unwrap();
        let set = ai_concepts(&corpus, &kw);
        assert_eq!(set.len(), 1);
        assert!(set.contains(&ConceptId::new("Artificial neural network")));
    }

    #[test]
    fn keyword_list_rejects_empty_and_duplicates() {
        assert!(AiKeywordList::new(vec![]).is_err());
        assert!(AiKeywordList::new(vec!["AI".into(), "ai".into()]).is_err());
    }
}
