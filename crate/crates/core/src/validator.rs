//! Label-structure validation of an embedding or projection: kNN subfield
//! classification accuracy sweeps and row-normalized confusion matrices.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::atlas::{NeighborIndex, PointSpace};
use crate::corpus::Corpus;
use crate::error::{Error, Result};

/// A train/test split over a point space with subfield labels. Retained
/// labels carry at least `threshold` papers corpus-wide.
#[derive(Debug, Clone)]
pub struct LabeledSplit {
    /// Space indices, disjoint from `test`.
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Per space index: position in `label_set`, for labeled points only.
    pub labels: Vec<Option<usize>>,
    /// Retained subfield names, sorted.
    pub label_set: Vec<String>,
    pub threshold: usize,
}

impl LabeledSplit {
    /// Labels points by their primary topic's subfield, keeps subfields with
    /// at least `threshold` labeled papers in the corpus, and splits the
    /// eligible points with a seeded shuffle.
    pub fn build<S: PointSpace + ?Sized>(
        corpus: &Corpus,
        space: &S,
        threshold: usize,
        test_fraction: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&test_fraction) || test_fraction <= 0.0 {
            return Err(Error::invalid("test_fraction must be in (0, 1)"));
        }
        let mut corpus_counts: BTreeMap<&str, usize> = BTreeMap::new();
        for paper in corpus.papers() {
            if let Some(topic) = &paper.topic {
                *corpus_counts.entry(topic.subfield.as_str()).or_insert(0) += 1;
            }
        }
        let label_set: Vec<String> = corpus_counts
            .iter()
            .filter(|(_, &c)| c >= threshold)
            .map(|(s, _)| s.to_string())
            .collect();
        if label_set.is_empty() {
            return Err(Error::invalid(format!(
                "no subfield reaches the population threshold {threshold}"
            )));
        }
        let label_index: BTreeMap<&str, usize> = label_set
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();

        let mut labels = vec![None; space.len()];
        let mut eligible = Vec::new();
        for idx in 0..space.len() {
            let Some(paper_idx) = corpus.index_of(space.id(idx)) else {
                return Err(Error::invalid(format!(
                    "space id {} not present in corpus",
                    space.id(idx)
                )));
            };
            if let Some(topic) = &corpus.paper(paper_idx).topic {
                if let Some(&l) = label_index.get(topic.subfield.as_str()) {
                    labels[idx] = Some(l);
                    eligible.push(idx);
                }
            }
        }
        if eligible.len() < 2 {
            return Err(Error::invalid("fewer than 2 labeled points to split"));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        eligible.shuffle(&mut rng);
        let n_test = ((eligible.len() as f64 * test_fraction).round() as usize)
            .clamp(1, eligible.len() - 1);
        let mut test: Vec<usize> = eligible[..n_test].to_vec();
        let mut train: Vec<usize> = eligible[n_test..].to_vec();
        train.sort_unstable();
        test.sort_unstable();
        Ok(LabeledSplit {
            train,
            test,
            labels,
            label_set,
            threshold,
        })
    }
}

/// Majority vote over the neighbor labels; ties broken by the largest summed
/// inverse distance, then by the smallest label id. Zero distances vote with
/// infinite weight.
fn vote(neighbors: &[(usize, f64)], labels: &[Option<usize>], n_labels: usize) -> usize {
    let mut counts = vec![0usize; n_labels];
    let mut weights = vec![0.0f64; n_labels];
    for &(idx, dist) in neighbors {
        let label = labels[idx].expect("train points are labeled");
        counts[label] += 1;
        weights[label] += if dist > 0.0 { 1.0 / dist } else { f64::INFINITY };
    }
    let mut best = 0usize;
    for l in 1..n_labels {
        let better = counts[l] > counts[best]
            || (counts[l] == counts[best] && weights[l] > weights[best]);
        if better {
            best = l;
        }
    }
    best
}

#[derive(Debug, Clone)]
pub struct AccuracySweep {
    /// (k, accuracy) in the requested order.
    pub accuracies: Vec<(usize, f64)>,
    /// Argmax accuracy; ties go to the smallest k.
    pub best_k: usize,
}

/// Predicted label per test point using the k nearest train points.
fn predict<S: PointSpace + ?Sized>(
    space: &S,
    split: &LabeledSplit,
    index: &NeighborIndex,
    k: usize,
) -> Vec<usize> {
    split
        .test
        .par_iter()
        .map(|&t| {
            let q = space.point_vec(t);
            let neighbors = index.query(&q, k, None);
            vote(&neighbors, &split.labels, split.label_set.len())
        })
        .collect()
}

/// Sweeps k values, scoring majority-vote subfield prediction accuracy on
/// the test points. Every k must be below the train size.
pub fn knn_accuracy_sweep<S: PointSpace + ?Sized>(
    space: &S,
    split: &LabeledSplit,
    ks: &[usize],
) -> Result<AccuracySweep> {
    if ks.is_empty() {
        return Err(Error::invalid("no k values requested"));
    }
    for &k in ks {
        if k == 0 || k >= split.train.len() {
            return Err(Error::invalid(format!(
                "k = {k} out of range for train size {}",
                split.train.len()
            )));
        }
    }
    let index = NeighborIndex::build_subset(space, &split.train);
    let mut accuracies = Vec::with_capacity(ks.len());
    for &k in ks {
        let predictions = predict(space, split, &index, k);
        let correct = predictions
            .iter()
            .zip(&split.test)
            .filter(|&(&p, &t)| split.labels[t] == Some(p))
            .count();
        accuracies.push((k, correct as f64 / split.test.len() as f64));
    }
    let best_k = accuracies
        .iter()
        .fold(None::<(usize, f64)>, |best, &(k, acc)| match best {
            None => Some((k, acc)),
            Some((bk, bacc)) => {
                if acc > bacc || (acc == bacc && k < bk) {
                    Some((k, acc))
                } else {
                    Some((bk, bacc))
                }
            }
        })
        .map(|(k, _)| k)
        .expect("non-empty ks");
    Ok(AccuracySweep { accuracies, best_k })
}

/// Row-normalized confusion matrix over the retained labels.
#[derive(Debug, Clone)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
    /// Rows divided by their sums; empty observed rows stay zero and are
    /// flagged.
    pub normalized: Vec<Vec<f64>>,
    pub empty_rows: Vec<bool>,
    pub accuracy: f64,
}

/// Confusion of observed (rows) vs predicted (columns) subfields at a fixed
/// k; each nonempty row sums to one.
pub fn confusion_matrix<S: PointSpace + ?Sized>(
    space: &S,
    split: &LabeledSplit,
    k: usize,
) -> Result<ConfusionMatrix> {
    if k == 0 || k >= split.train.len() {
        return Err(Error::invalid(format!(
            "k = {k} out of range for train size {}",
            split.train.len()
        )));
    }
    let m = split.label_set.len();
    let index = NeighborIndex::build_subset(space, &split.train);
    let predictions = predict(space, split, &index, k);
    let mut counts = vec![vec![0u64; m]; m];
    let mut correct = 0usize;
    for (&t, &p) in split.test.iter().zip(&predictions) {
        let observed = split.labels[t].expect("test points are labeled");
        counts[observed][p] += 1;
        if observed == p {
            correct += 1;
        }
    }
    let mut normalized = vec![vec![0.0; m]; m];
    let mut empty_rows = vec![false; m];
    for i in 0..m {
        let total: u64 = counts[i].iter().sum();
        if total == 0 {
            empty_rows[i] = true;
        } else {
            for j in 0..m {
                normalized[i][j] = counts[i][j] as f64 / total as f64;
            }
        }
    }
    Ok(ConfusionMatrix {
        labels: split.label_set.clone(),
        counts,
        normalized,
        empty_rows,
        accuracy: correct as f64 / split.test.len() as f64,
    })
}

/// Writes `accuracy_sweep.csv`: `k,accuracy`.
pub fn write_sweep_csv(sweep: &AccuracySweep, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::invalid(format!("open {}: {e}", path.display())))?;
    w.write_record(["k", "accuracy"])
        .map_err(|e| Error::invalid(format!("write sweep: {e}")))?;
    for (k, acc) in &sweep.accuracies {
        w.write_record([k.to_string(), format!("{acc:?}")])
            .map_err(|e| Error::invalid(format!("write sweep: {e}")))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `confusion_<space>.csv`: dense matrix with label headers.
pub fn write_confusion_csv(matrix: &ConfusionMatrix, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::invalid(format!("open {}: {e}", path.display())))?;
    let mut header = vec!["observed".to_string()];
    header.extend(matrix.labels.iter().cloned());
    w.write_record(&header)
        .map_err(|e| Error::invalid(format!("write confusion: {e}")))?;
    for (i, label) in matrix.labels.iter().enumerate() {
        let mut row = vec![label.clone()];
        row.extend(matrix.normalized[i].iter().map(|v| format!("{v:?}")));
        w.write_record(&row)
            .map_err(|e| Error::invalid(format!("write confusion: {e}")))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
