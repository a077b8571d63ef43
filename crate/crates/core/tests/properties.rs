use std::collections::BTreeSet;
use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use geodist::corpus::{build_vocabulary, format_document, parse_line, CorpusFormat, Document, RegionId, TokenizerConfig};
use geodist::embed::{EmbeddingModel, TrainingConfig};
use geodist::freqdist::{frequency_score, Smoothing};
use geodist::scoring::{cosine_distance, distance_score, standardize, RawScore};
use geodist::semdist::stable_changed_set;
use geodist::significance::{
    confidence_interval, permute_labels, verdict, BetaRule, ReportRow, SignificanceReport, Verdict,
};
use geodist::syndist::js_divergence;

const REGIONS: [&str; 3] = ["US", "UK", "AU"];

fn doc_strategy() -> impl Strategy<Value = Document> {
    (
        0..REGIONS.len(),
        prop::collection::vec(0u8..12, 1..6),
        1u64..5,
        prop::option::of(0u8..3),
    )
        .prop_map(|(r, toks, weight, slice)| {
            let mut d = Document::new(
                RegionId::new(REGIONS[r]).unwrap(),
                toks.into_iter().map(|t| format!("t{t}")).collect(),
            )
            .with_weight(weight);
            d.slice = slice.map(|s| format!("{}", 1950 + 5 * s as u32));
            d
        })
}

fn corpus_strategy() -> impl Strategy<Value = Vec<Document>> {
    prop::collection::vec(doc_strategy(), 2..30)
}

fn distribution(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0u32..20, len)
        .prop_filter("needs mass", |v| v.iter().any(|&x| x > 0))
        .prop_map(|v| {
            let total: u32 = v.iter().sum();
            v.into_iter().map(|x| x as f64 / total as f64).collect()
        })
}

fn nonzero_vector(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, d).prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-6)
}

fn report(words: &BTreeSet<u8>) -> SignificanceReport {
    SignificanceReport {
        region_i: "US".into(),
        region_j: "UK".into(),
        bootstrap: 1,
        alpha: 0.95,
        beta_rule: BetaRule::Absolute(0.0),
        beta: 0.0,
        seeds: vec![0],
        rows: (0u8..16)
            .map(|w| ReportRow {
                word: format!("w{w}"),
                effect: 0.0,
                z: 0.0,
                lci: 0.0,
                hci: 0.0,
                verdict: if words.contains(&w) {
                    Verdict::Significant
                } else {
                    Verdict::NotSignificant
                },
            })
            .collect(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn permutation_keeps_labels_and_text(docs in corpus_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let permuted = permute_labels(&docs, &mut rng);
        prop_assert_eq!(permuted.len(), docs.len());
        let mut before: Vec<_> = docs.iter().map(|d| d.region.clone()).collect();
        let mut after: Vec<_> = permuted.iter().map(|d| d.region.clone()).collect();
        before.sort();
        after.sort();
        prop_assert_eq!(before, after);
        for (a, b) in docs.iter().zip(&permuted) {
            prop_assert_eq!(&a.tokens, &b.tokens);
            prop_assert_eq!(a.weight, b.weight);
            prop_assert_eq!(&a.slice, &b.slice);
        }
    }

    #[test]
    fn weighted_counts_equal_expanded_counts(docs in corpus_strategy()) {
        let expanded: Vec<Document> = docs
            .iter()
            .flat_map(|d| std::iter::repeat_n(d.clone().with_weight(1), d.weight as usize))
            .collect();
        let a = build_vocabulary(&docs, 1).unwrap();
        let b = build_vocabulary(&expanded, 1).unwrap();
        prop_assert_eq!(a.words(), b.words());
        prop_assert_eq!(a.regions(), b.regions());
        for w in 0..a.len() {
            prop_assert_eq!(a.count(w), b.count(w));
            let per_region: u64 = (0..a.regions().len()).map(|r| a.region_count(w, r)).sum();
            prop_assert_eq!(per_region, a.count(w));
            for r in 0..a.regions().len() {
                prop_assert_eq!(a.region_count(w, r), b.region_count(w, r));
            }
        }
        for r in 0..a.regions().len() {
            prop_assert_eq!(a.total_tokens(r), b.total_tokens(r));
        }
    }

    #[test]
    fn ngram_lines_round_trip(docs in corpus_strategy()) {
        let tok = TokenizerConfig::verbatim();
        for d in docs.iter().filter(|d| d.slice.is_some()) {
            let line = format_document(d, CorpusFormat::Ngrams);
            let back = parse_line(&line, CorpusFormat::Ngrams, &tok).unwrap().unwrap();
            prop_assert_eq!(&back, d);
        }
    }

    #[test]
    fn frequency_delta_is_antisymmetric(docs in corpus_strategy()) {
        let vocab = build_vocabulary(&docs, 1).unwrap();
        let regions: Vec<String> = vocab.regions().iter().map(|r| r.to_string()).collect();
        prop_assume!(regions.len() >= 2);
        for w in vocab.words() {
            let ij = frequency_score(&vocab, w, &regions[0], &regions[1], Smoothing::AddOneFloor).unwrap();
            let ji = frequency_score(&vocab, w, &regions[1], &regions[0], Smoothing::Fixed(1e-9)).unwrap();
            let ji_floor = frequency_score(&vocab, w, &regions[1], &regions[0], Smoothing::AddOneFloor).unwrap();
            prop_assert_eq!(ij.delta, -ji_floor.delta);
            prop_assert!(ji.delta.is_finite());
        }
    }

    #[test]
    fn jsd_is_symmetric_and_bounded((p, q) in (2usize..8).prop_flat_map(|n| (distribution(n), distribution(n)))) {
        let pq = js_divergence(&p, &q).unwrap();
        let qp = js_divergence(&q, &p).unwrap();
        prop_assert_eq!(pq.to_bits(), qp.to_bits());
        prop_assert!((0.0..=1.0).contains(&pq));
        prop_assert_eq!(js_divergence(&p, &p).unwrap(), 0.0);
        let mut p0 = p.clone();
        let mut q0 = q.clone();
        p0.push(0.0);
        q0.push(0.0);
        prop_assert_eq!(js_divergence(&p0, &q0).unwrap(), pq);
    }

    #[test]
    fn cosine_distance_is_scale_invariant(
        (u, v) in (1usize..12).prop_flat_map(|d| (nonzero_vector(d), nonzero_vector(d))),
        a in 1e-3f64..1e3,
        b in 1e-3f64..1e3,
    ) {
        let base = cosine_distance(&u, &v).unwrap();
        let au: Vec<f64> = u.iter().map(|x| a * x).collect();
        let bv: Vec<f64> = v.iter().map(|x| b * x).collect();
        prop_assert!((cosine_distance(&au, &bv).unwrap() - base).abs() < 1e-9);
        prop_assert_eq!(cosine_distance(&v, &u).unwrap(), base);
        prop_assert!((0.0..=2.0).contains(&base));
    }

    #[test]
    fn standardization_is_affine_invariant(
        raw in prop::collection::vec(-5.0f64..5.0, 2..40),
        scale in 0.01f64..100.0,
        shift in -100.0f64..100.0,
    ) {
        let spread = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - raw.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assume!(spread > 1e-3);
        let entries = |f: &dyn Fn(f64) -> f64| -> Vec<RawScore> {
            raw.iter()
                .enumerate()
                .map(|(i, &x)| RawScore { word: format!("w{i}"), raw: f(x), scorable: true })
                .collect()
        };
        let a = standardize("US", "UK", entries(&|x| x)).unwrap();
        let b = standardize("US", "UK", entries(&|x| scale * x + shift)).unwrap();
        let n = raw.len() as f64;
        let mean_z = a.scores.iter().map(|s| s.z).sum::<f64>() / n;
        let std_z = (a.scores.iter().map(|s| (s.z - mean_z).powi(2)).sum::<f64>() / n).sqrt();
        prop_assert!(mean_z.abs() < 1e-9);
        prop_assert!((std_z - 1.0).abs() < 1e-9);
        for (x, y) in a.scores.iter().zip(&b.scores) {
            prop_assert!((x.z - y.z).abs() < 1e-9);
        }
    }

    #[test]
    fn interval_bounds_are_ordered(
        mut scores in prop::collection::vec(-1.0f64..1.0, 1..60),
        alpha in 0.5f64..0.999,
    ) {
        scores.sort_by(f64::total_cmp);
        let (lci, hci) = confidence_interval(&scores, alpha).unwrap();
        prop_assert!(lci <= hci);
        prop_assert!(scores[0] <= lci && hci <= scores[scores.len() - 1]);
    }

    #[test]
    fn verdict_is_the_conjunction(e in -1.0f64..1.0, z in -4.0f64..4.0, hci in -1.0f64..1.0, beta in -4.0f64..4.0) {
        let v = verdict(e, z, hci - 0.5, hci, beta);
        prop_assert_eq!(v == Verdict::Significant, z >= beta && e > hci);
    }

    #[test]
    fn stable_set_shrinks_as_slices_are_added(sets in prop::collection::vec(prop::collection::btree_set(0u8..16, 0..16), 1..6)) {
        let reports: Vec<_> = sets.iter().map(report).collect();
        let mut previous: Option<BTreeSet<String>> = None;
        for k in 1..=reports.len() {
            let w = stable_changed_set(&reports[..k]).unwrap();
            for r in &reports[..k] {
                for word in &w {
                    prop_assert_eq!(r.row(word).unwrap().verdict, Verdict::Significant);
                }
            }
            if let Some(p) = &previous {
                prop_assert!(w.is_subset(p));
            }
            previous = Some(w);
        }
    }

    #[test]
    fn distance_score_is_exactly_symmetric(seed in any::<u64>()) {
        use rand::Rng;
        let docs: Vec<Document> = ["US", "UK"]
            .iter()
            .flat_map(|r| {
                (0..4).map(move |i| Document::new(RegionId::new(*r).unwrap(), vec![format!("w{i}"), "x".into()]))
            })
            .collect();
        let vocab = Arc::new(build_vocabulary(&docs, 1).unwrap());
        let mut model = EmbeddingModel::new(vocab.clone(), TrainingConfig { dim: 6, seed, ..TrainingConfig::default() }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for w in 0..vocab.len() {
            for r in 0..2 {
                for x in model.delta_mut(w, r) {
                    *x = rng.gen_range(-1.0..1.0);
                }
            }
        }
        for w in vocab.words() {
            prop_assert_eq!(
                distance_score(&model, w, "US", "UK").unwrap().to_bits(),
                distance_score(&model, w, "UK", "US").unwrap().to_bits()
            );
        }
    }
}
