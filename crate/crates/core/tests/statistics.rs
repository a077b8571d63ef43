use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use geodist::corpus::{build_vocabulary, Document, RegionId};
use geodist::embed::{mean_pair_loss, EncodedCorpus, Trainer, TrainingConfig};
use geodist::scoring::score_table;
use geodist::significance::{estimate_null, null_run, permute_label_indices};
use geodist::synthgen::{generate, SyntheticSpec};

fn config(dim: usize, epochs: usize, seed: u64) -> TrainingConfig {
    TrainingConfig {
        dim,
        epochs,
        seed,
        ..TrainingConfig::default()
    }
}

#[test]
fn mixture_contexts_within_multinomial_bands() {
    let spec = SyntheticSpec {
        pairs_per_region: 200_000,
        seed: 31,
        ..SyntheticSpec::default()
    }
    .plant(1, 0.5, 5)
    .unwrap();
    let planted = spec.planted[0].word;
    let name = spec.word_name(planted);
    let docs = generate(&spec).unwrap();
    let expected = spec.context_distribution(planted, true);
    // the mixture puts half its mass on the base block and half on the alternate set
    let alt: f64 = spec.planted[0].alternate.iter().map(|&c| expected[c]).sum();
    assert!((alt - 0.5).abs() < 1e-12);
    assert!((expected.iter().sum::<f64>() - 1.0).abs() < 1e-12);

    let mut counts = vec![0u64; spec.vocab_size];
    for d in docs.iter().filter(|d| d.region.as_str() == "B" && d.tokens[0] == name) {
        let c: usize = d.tokens[1][1..].parse().unwrap();
        counts[c] += 1;
    }
    let n: u64 = counts.iter().sum();
    assert!(n > 500, "planted word {name} drawn only {n} times");
    let mut chi2 = 0.0;
    let mut cells = 0;
    for (c, (&obs, &p)) in counts.iter().zip(&expected).enumerate() {
        if p == 0.0 {
            assert_eq!(obs, 0, "context {c} outside the mixture support");
            continue;
        }
        let mean = n as f64 * p;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((obs as f64 - mean).abs() <= 3.0 * sd, "context {c}: {obs} vs {mean:.1}");
        chi2 += (obs as f64 - mean).powi(2) / mean;
        cells += 1;
    }
    // 0.999 quantile of chi-square with 18 degrees of freedom is 42.3
    assert_eq!(cells, 19);
    assert!(chi2 < 42.3, "chi-square {chi2}");
}

#[test]
fn reference_region_ignores_the_plant() {
    let spec = SyntheticSpec {
        pairs_per_region: 20_000,
        seed: 2,
        ..SyntheticSpec::default()
    }
    .plant(3, 1.0, 8)
    .unwrap();
    let planted: Vec<String> = spec.planted.iter().map(|p| spec.word_name(p.word)).collect();
    for d in generate(&spec).unwrap().iter().filter(|d| d.region.as_str() == "A") {
        if planted.contains(&d.tokens[0]) {
            let center: usize = d.tokens[0][1..].parse().unwrap();
            let context: usize = d.tokens[1][1..].parse().unwrap();
            assert_eq!(spec.block_of(center), spec.block_of(context));
        }
    }
}

#[test]
fn training_lowers_the_loss() {
    let spec = SyntheticSpec {
        pairs_per_region: 5_000,
        seed: 1,
        ..SyntheticSpec::default()
    };
    let docs = generate(&spec).unwrap();
    let vocab = Arc::new(build_vocabulary(&docs, 1).unwrap());
    let corpus = EncodedCorpus::new(&docs, &vocab).unwrap();
    let mut trainer = Trainer::new(&docs, vocab, config(16, 3, 4)).unwrap();
    let mut losses = vec![mean_pair_loss(trainer.model(), &corpus)];
    while !trainer.is_done() {
        trainer.run_epoch().unwrap();
        losses.push(mean_pair_loss(trainer.model(), &corpus));
    }
    for w in losses.windows(2) {
        assert!(w[1] < w[0], "loss went up: {losses:?}");
    }
    // node vectors start at zero, so every branch has probability 1/2 and the
    // initial loss is the mean code length of the predicted word times ln 2
    let tree = trainer.model().tree();
    let bits: usize = (0..corpus.len())
        .map(|i| corpus.doc(i).iter().map(|&w| tree.code(w as usize).len()).sum::<usize>())
        .sum();
    let initial = bits as f64 / (2 * corpus.len()) as f64 * std::f64::consts::LN_2;
    assert!((losses[0] - initial).abs() < 1e-9, "{} vs {initial}", losses[0]);
    // contexts are uniform over 9 block mates: no model gets below ln 9
    assert!(*losses.last().unwrap() > 9f64.ln());
}

#[test]
fn null_scores_stay_below_planted_scores() {
    let spec = SyntheticSpec {
        pairs_per_region: 20_000,
        seed: 12,
        ..SyntheticSpec::default()
    }
    .plant(5, 0.9, 3)
    .unwrap();
    let docs = generate(&spec).unwrap();
    let vocab = Arc::new(build_vocabulary(&docs, 1).unwrap());
    let corpus = EncodedCorpus::new(&docs, &vocab).unwrap();
    let cfg = config(20, 3, 100);
    let observed = geodist::embed::train_encoded(&corpus, vocab.clone(), cfg.clone()).unwrap();
    let table = score_table(&observed, "A", "B", 1).unwrap();
    let null = estimate_null(&corpus, vocab.clone(), ("A", "B"), 3, &cfg, 100).unwrap();
    let max_null = null.runs.iter().flatten().cloned().fold(0.0, f64::max);
    let min_planted = spec
        .planted
        .iter()
        .map(|p| table.get(&spec.word_name(p.word)).unwrap().raw)
        .fold(f64::INFINITY, f64::min);
    assert!(max_null < min_planted, "null max {max_null} vs planted min {min_planted}");

    // one run gives one sorted score per word; the same master seed repeats exactly
    let single = estimate_null(&corpus, vocab.clone(), ("A", "B"), 1, &cfg, 100).unwrap();
    assert_eq!(single.bootstrap(), 1);
    assert!((0..vocab.len()).all(|w| single.scores(w).len() == 1));
    assert_eq!(single.runs[0], null.runs[0]);
    assert_eq!(single.seeds, vec![101]);
    let again = estimate_null(&corpus, vocab.clone(), ("A", "B"), 3, &cfg, 100).unwrap();
    assert_eq!(again, null);
}

#[test]
fn null_run_permutes_but_keeps_region_sizes() {
    let docs: Vec<Document> = (0..40)
        .map(|i| {
            let r = if i < 30 { "US" } else { "UK" };
            Document::new(RegionId::new(r).unwrap(), vec![format!("w{}", i % 5), format!("w{}", (i + 1) % 5)])
        })
        .collect();
    let vocab = Arc::new(build_vocabulary(&docs, 1).unwrap());
    let corpus = EncodedCorpus::new(&docs, &vocab).unwrap();
    let model = null_run(&corpus, &vocab, &config(4, 1, 0), 9).unwrap();
    assert_eq!(model.config().seed, 9);
    assert_eq!(model.config().threads, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let labels = permute_label_indices(corpus.labels(), &mut rng);
    assert_ne!(labels, corpus.labels());
    for r in 0..2 {
        let count = |l: &[usize]| l.iter().filter(|&&x| x == r).count();
        assert_eq!(count(&labels), count(corpus.labels()));
    }
}
