//! Property tests for the invariants that hold on arbitrary inputs, not
//! just planted fixtures.

use proptest::prelude::*;

use scimap_core::atlas::{MapCoordinates, MapProvenance, NeighborIndex};
use scimap_core::citegeom::{rog, FarthestPointIndex};
use scimap_core::clusterer::{core_distances, mutual_reachability};
use scimap_core::conceptnet::core_numbers;
use scimap_core::corpus::{tag_ai, AiKeywordList, Corpus, PaperId, PaperRecord};
use scimap_core::synthkit::oracles::{oracle_kcore, oracle_knn};

fn arb_points(max_n: usize) -> impl Strategy<Value = Vec<[f64; 2]>> {
    prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 2..max_n)
        .prop_map(|v| v.into_iter().map(|(x, y)| [x, y]).collect())
}

fn coords_of(points: &[[f64; 2]]) -> MapCoordinates {
    let ids: Vec<PaperId> = (0..points.len())
        .map(|i| PaperId::new(format!("p{i:04}")))
        .collect();
    MapCoordinates::from_parts(ids, points.to_vec(), MapProvenance::Imported).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Indexed kNN equals the exhaustive oracle: same ids, same order,
    /// non-decreasing distances.
    #[test]
    fn knn_matches_oracle(points in arb_points(60), q_frac in 0.0f64..1.0, k_frac in 0.0f64..1.0) {
        let coords = coords_of(&points);
        let n = points.len();
        let q = ((q_frac * n as f64) as usize).min(n - 1);
        let k = 1 + ((k_frac * (n - 1) as f64) as usize).min(n - 2);
        let index = NeighborIndex::build(&coords);
        let fast = index.knn_of(q, k);
        let slow = oracle_knn(&coords, q, k).unwrap();
        prop_assert_eq!(fast.len(), slow.len());
        for ((fi, fd), (si, sd)) in fast.iter().zip(&slow) {
            prop_assert_eq!(fi, si);
            prop_assert_eq!(fd, sd);
        }
        for w in fast.windows(2) {
            prop_assert!(w[0].1 <= w[1].1);
        }
    }

    /// r_g scales linearly under uniform map scaling; r_tilde is invariant.
    #[test]
    fn rog_scaling_law(points in arb_points(40), scale in 0.01f64..50.0, focal_frac in 0.0f64..1.0) {
        let n = points.len();
        let focal_idx = ((focal_frac * n as f64) as usize).min(n - 1);
        let citers: Vec<[f64; 2]> = points.iter().step_by(2).copied().collect();
        prop_assume!(!citers.is_empty());

        let scaled: Vec<[f64; 2]> = points.iter().map(|p| [p[0] * scale, p[1] * scale]).collect();
        let scaled_citers: Vec<[f64; 2]> = scaled.iter().step_by(2).copied().collect();

        let r1 = rog(points[focal_idx], &citers).unwrap();
        let r2 = rog(scaled[focal_idx], &scaled_citers).unwrap();
        let expect = r1 * scale;
        prop_assert!((r2 - expect).abs() <= 1e-9 * expect.max(1.0), "{r2} vs {expect}");

        let d1 = FarthestPointIndex::build(&points).max_distance(points[focal_idx]);
        let d2 = FarthestPointIndex::build(&scaled).max_distance(scaled[focal_idx]);
        prop_assume!(d1 > 0.0);
        let t1 = r1 / d1;
        let t2 = r2 / d2;
        prop_assert!((t1 - t2).abs() <= 1e-9, "r_tilde {t1} vs {t2}");
        prop_assert!((0.0..=1.0 + 1e-12).contains(&t1));
    }

    /// Mutual reachability dominates the Euclidean distance pointwise, and
    /// equals it for mutual nearest neighbors at min_samples = 1.
    #[test]
    fn mutual_reachability_dominates(points in arb_points(40)) {
        let core = core_distances(&points, 1).unwrap();
        let n = points.len();
        for a in 0..n {
            for b in (a + 1)..n {
                let euclid = {
                    let dx = points[a][0] - points[b][0];
                    let dy = points[a][1] - points[b][1];
                    (dx * dx + dy * dy).sqrt()
                };
                let mreach = mutual_reachability(&points, &core, a, b);
                prop_assert!(mreach >= euclid);
                // Mutual nearest neighbors: both core distances equal the
                // pair distance, so reachability collapses onto it.
                if core[a] == euclid && core[b] == euclid {
                    prop_assert_eq!(mreach, euclid);
                }
            }
        }
    }

    /// Optimized core numbers equal the peeling oracle on arbitrary graphs,
    /// and adding one edge never decreases any core number.
    #[test]
    fn kcore_oracle_and_monotonicity(
        n in 2usize..60,
        edges in prop::collection::vec((0usize..60, 0usize..60), 0..160),
        extra in (0usize..60, 0usize..60),
    ) {
        let mut adjacency = vec![vec![]; n];
        let mut present = std::collections::BTreeSet::new();
        let mut add = |adjacency: &mut Vec<Vec<usize>>, present: &mut std::collections::BTreeSet<(usize, usize)>, a: usize, b: usize| {
            let (a, b) = (a % n, b % n);
            if a == b {
                return;
            }
            let key = (a.min(b), a.max(b));
            if present.insert(key) {
                adjacency[key.0].push(key.1);
                adjacency[key.1].push(key.0);
            }
        };
        for (a, b) in edges {
            add(&mut adjacency, &mut present, a, b);
        }
        let before = core_numbers(&adjacency);
        prop_assert_eq!(&before, &oracle_kcore(&adjacency).unwrap());

        add(&mut adjacency, &mut present, extra.0, extra.1);
        let after = core_numbers(&adjacency);
        for v in 0..n {
            prop_assert!(after[v] >= before[v]);
        }
    }

    /// Extending the keyword list never unflags a paper.
    #[test]
    fn tag_ai_is_monotone(
        titles in prop::collection::vec("[a-z]{2,8}( [a-z]{2,8}){0,4}", 1..12),
        base in prop::collection::vec("[a-z]{2,8}", 1..4),
        extension in prop::collection::vec("[a-z]{2,8}", 1..4),
    ) {
        let papers: Vec<PaperRecord> = titles
            .iter()
            .enumerate()
            .map(|(i, t)| PaperRecord {
                id: PaperId::new(format!("p{i:03}")),
                title: t.clone(),
                abstract_text: None,
                year: 1990,
                venue_id: "v".into(),
                ref_count: 10,
                citation_count: 10,
                fos_labels: vec![],
                topic: None,
                keywords: vec![],
                ai_flag: false,
            })
            .collect();
        let mut corpus = Corpus::from_parts(papers, vec![]).unwrap();

        let mut big: Vec<String> = base.clone();
        big.extend(extension.iter().cloned());
        big.sort();
        big.dedup();
        prop_assume!(big.len() > base.len());

        let small_list = AiKeywordList::new(base.clone());
        prop_assume!(small_list.is_ok());
        let small_list = small_list.unwrap();
        let big_list = AiKeywordList::new(big).unwrap();

        tag_ai(&mut corpus, &small_list);
        let small_flags: Vec<bool> = corpus.papers().iter().map(|p| p.ai_flag).collect();
        tag_ai(&mut corpus, &big_list);
        for (i, was) in small_flags.iter().enumerate() {
            if *was {
                prop_assert!(corpus.paper(i).ai_flag);
            }
        }
    }
}
