use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{step_kernel, EmbeddingModel, StepScratch};
use crate::corpus::{Document, Vocabulary};
use crate::error::{Error, Result};

/// Documents heavier than this are trained once with a scaled learning rate
/// instead of being repeated.
pub const MAX_REPEATED_WEIGHT: u64 = 16;

/// Learning-rate schedule over the scheduled training pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LrSchedule {
    Fixed,
    /// Linear from `lr` down to `lr / 100`.
    #[default]
    LinearDecay,
}

impl std::str::FromStr for LrSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(LrSchedule::Fixed),
            "linear" | "linear-decay" => Ok(LrSchedule::LinearDecay),
            other => Err(Error::InvalidArgument(format!("unknown lr schedule {other:?}"))),
        }
    }
}

impl std::fmt::Display for LrSchedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LrSchedule::Fixed => "fixed",
            LrSchedule::LinearDecay => "linear-decay",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    /// Embedding width.
    pub dim: usize,
    /// Maximum context offset; windows never cross document boundaries.
    pub window: usize,
    /// Initial learning rate.
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    pub lr_schedule: LrSchedule,
    /// Worker count. With more than one worker, updates are lock-free and
    /// results are no longer bit-reproducible.
    pub threads: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            dim: 200,
            window: 10,
            lr: 0.025,
            epochs: 5,
            seed: 0,
            lr_schedule: LrSchedule::LinearDecay,
            threads: 1,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.dim == 0 {
            return bad("dim must be >= 1");
        }
        if self.window == 0 {
            return bad("window must be >= 1");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be > 0");
        }
        if self.epochs == 0 {
            return bad("epochs must be >= 1");
        }
        if self.threads == 0 {
            return bad("threads must be >= 1");
        }
        Ok(())
    }
}

/// A corpus mapped onto vocabulary indices, with region labels kept apart
/// from token content so label permutations are cheap.
#[derive(Debug, Clone)]
pub struct EncodedCorpus {
    tokens: Vec<u32>,
    offsets: Vec<usize>,
    weights: Vec<u64>,
    labels: Vec<usize>,
}

impl EncodedCorpus {
    /// Encodes documents; out-of-vocabulary tokens are dropped before windowing.
    pub fn new(docs: &[Document], vocab: &Vocabulary) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut tokens = Vec::new();
        let mut offsets = vec![0];
        let mut weights = Vec::with_capacity(docs.len());
        let mut labels = Vec::with_capacity(docs.len());
        for doc in docs {
            labels.push(vocab.region_index(doc.region.as_str())?);
            weights.push(doc.weight.max(1));
            tokens.extend(
                doc.tokens
                    .iter()
                    .filter_map(|t| vocab.index_of(t).map(|i| i as u32)),
            );
            offsets.push(tokens.len());
        }
        Ok(EncodedCorpus {
            tokens,
            offsets,
            weights,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Same documents with a new label assignment.
    pub fn with_labels(&self, labels: Vec<usize>) -> Self {
        assert_eq!(labels.len(), self.labels.len(), "one label per document");
        EncodedCorpus {
            labels,
            ..self.clone()
        }
    }

    pub fn doc(&self, i: usize) -> &[u32] {
        &self.tokens[self.offsets[i]..self.offsets[i + 1]]
    }

    fn pairs_in(&self, i: usize, window: usize) -> u64 {
        let n = self.offsets[i + 1] - self.offsets[i];
        (0..n)
            .map(|c| (c.min(window) + (n - 1 - c).min(window)) as u64)
            .sum()
    }

    fn passes(&self, i: usize) -> (u64, f64) {
        let w = self.weights[i];
        if w <= MAX_REPEATED_WEIGHT {
            (w, 1.0)
        } else {
            (1, w as f64)
        }
    }

    /// Training pairs scheduled for one epoch.
    pub fn pairs_per_epoch(&self, window: usize) -> u64 {
        (0..self.len())
            .map(|i| self.pairs_in(i, window) * self.passes(i).0)
            .sum()
    }
}

/// Lock-free view of the parameters shared by worker threads.
#[derive(Clone, Copy)]
struct Hogwild {
    main: *mut f64,
    deltas: *const *mut f64,
    nodes: *mut f64,
    nodes_len: usize,
    dim: usize,
}

// SAFETY: workers write the same parameter arrays without synchronization;
// lost or torn updates are tolerated by asynchronous SGD, and the arrays
// outlive the scoped threads.
unsafe impl Send for Hogwild {}
unsafe impl Sync for Hogwild {}

/// Epoch-by-epoch training driver.
pub struct Trainer {
    model: EmbeddingModel,
    corpus: EncodedCorpus,
    rng: ChaCha8Rng,
    epoch: usize,
    processed: u64,
    total: u64,
}

impl Trainer {
    pub fn new(docs: &[Document], vocab: Arc<Vocabulary>, config: TrainingConfig) -> Result<Self> {
        let corpus = EncodedCorpus::new(docs, &vocab)?;
        Self::from_encoded(corpus, vocab, config)
    }

    pub fn from_encoded(corpus: EncodedCorpus, vocab: Arc<Vocabulary>, config: TrainingConfig) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if corpus.labels.iter().any(|&l| l >= vocab.regions().len()) {
            return Err(Error::InvalidArgument("document label outside region list".into()));
        }
        let model = EmbeddingModel::new(vocab, config.clone())?;
        let total = corpus.pairs_per_epoch(config.window) * config.epochs as u64;
        // the stream offset keeps shuffling independent of initialization
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(1);
        Ok(Trainer {
            model,
            corpus,
            rng,
            epoch: 0,
            processed: 0,
            total,
        })
    }

    pub fn model(&self) -> &EmbeddingModel {
        &self.model
    }

    pub fn epochs_done(&self) -> usize {
        self.epoch
    }

    pub fn is_done(&self) -> bool {
        self.epoch >= self.model.config.epochs
    }

    fn lr_at(config: &TrainingConfig, processed: u64, total: u64) -> f64 {
        match config.lr_schedule {
            LrSchedule::Fixed => config.lr,
            LrSchedule::LinearDecay => {
                let frac = (processed as f64 / total.max(1) as f64).min(1.0);
                config.lr * (1.0 - 0.99 * frac)
            }
        }
    }

    /// Runs one pass over the shuffled documents.
    pub fn run_epoch(&mut self) -> Result<()> {
        let mut order: Vec<usize> = (0..self.corpus.len()).collect();
        order.shuffle(&mut self.rng);
        if self.model.config.threads <= 1 {
            self.epoch_serial(&order);
        } else {
            self.epoch_parallel(&order);
        }
        self.epoch += 1;
        let finite = self.model.main.iter().all(|x| x.is_finite())
            && self.model.nodes.iter().all(|x| x.is_finite())
            && self.model.deltas.iter().flatten().all(|x| x.is_finite());
        if !finite {
            return Err(Error::NonFinite { epoch: self.epoch });
        }
        Ok(())
    }

    fn epoch_serial(&mut self, order: &[usize]) {
        let config = self.model.config.clone();
        let dim = self.model.dim;
        let window = config.window;
        let mut scratch = StepScratch::new(dim);
        let model = &mut self.model;
        for &i in order {
            let region = self.corpus.labels[i];
            let doc = self.corpus.doc(i);
            let (passes, scale) = self.corpus.passes(i);
            for _ in 0..passes {
                for (c, &center) in doc.iter().enumerate() {
                    let lo = c.saturating_sub(window);
                    let hi = (c + window).min(doc.len() - 1);
                    let wi = center as usize;
                    for (o, &context) in doc[lo..=hi].iter().enumerate() {
                        if lo + o == c {
                            continue;
                        }
                        let lr = Self::lr_at(&config, self.processed, self.total) * scale;
                        self.processed += 1;
                        let wj = context as usize;
                        step_kernel(
                            &mut model.main[wi * dim..(wi + 1) * dim],
                            &mut model.deltas[region][wi * dim..(wi + 1) * dim],
                            &mut model.nodes,
                            dim,
                            model.tree.code(wj),
                            model.tree.path(wj),
                            lr,
                            &mut scratch,
                            false,
                        );
                    }
                }
            }
        }
    }

    fn epoch_parallel(&mut self, order: &[usize]) {
        let config = self.model.config.clone();
        let threads = config.threads;
        let dim = self.model.dim;
        let window = config.window;
        let total = self.total;
        let processed = AtomicU64::new(self.processed);
        let mut delta_ptrs: Vec<*mut f64> = self.model.deltas.iter_mut().map(|d| d.as_mut_ptr()).collect();
        let shared = Hogwild {
            main: self.model.main.as_mut_ptr(),
            deltas: delta_ptrs.as_mut_ptr(),
            nodes: self.model.nodes.as_mut_ptr(),
            nodes_len: self.model.nodes.len(),
            dim,
        };
        let tree = &self.model.tree;
        let corpus = &self.corpus;
        let chunk = order.len().div_ceil(threads);
        let stop = AtomicBool::new(false);
        std::thread::scope(|scope| {
            for shard in order.chunks(chunk.max(1)) {
                let processed = &processed;
                let config = &config;
                let stop = &stop;
                scope.spawn(move || {
                    let shared = shared;
                    let mut scratch = StepScratch::new(dim);
                    for &i in shard {
                        if stop.load(Ordering::Relaxed) {
                            return;
                        }
                        let region = corpus.labels[i];
                        let doc = corpus.doc(i);
                        let (passes, scale) = corpus.passes(i);
                        for _ in 0..passes {
                            for (c, &center) in doc.iter().enumerate() {
                                let lo = c.saturating_sub(window);
                                let hi = (c + window).min(doc.len() - 1);
                                let wi = center as usize;
                                for (o, &context) in doc[lo..=hi].iter().enumerate() {
                                    if lo + o == c {
                                        continue;
                                    }
                                    let done = processed.fetch_add(1, Ordering::Relaxed);
                                    let lr = Self::lr_at(config, done, total) * scale;
                                    let wj = context as usize;
                                    // SAFETY: indices are in bounds of arrays that outlive the scope.
                                    unsafe {
                                        let main = std::slice::from_raw_parts_mut(shared.main.add(wi * dim), dim);
                                        let delta = std::slice::from_raw_parts_mut(
                                            (*shared.deltas.add(region)).add(wi * dim),
                                            dim,
                                        );
                                        let nodes = std::slice::from_raw_parts_mut(shared.nodes, shared.nodes_len);
                                        step_kernel(
                                            main,
                                            delta,
                                            nodes,
                                            shared.dim,
                                            tree.code(wj),
                                            tree.path(wj),
                                            lr,
                                            &mut scratch,
                                            false,
                                        );
                                    }
                                }
                            }
                        }
                    }
                });
            }
        });
        self.processed = processed.into_inner();
    }

    pub fn finish(mut self) -> Result<EmbeddingModel> {
        while !self.is_done() {
            self.run_epoch()?;
        }
        Ok(self.model)
    }
}

/// Trains a model on `docs` with every document's active set `{region, MAIN}`.
pub fn train(docs: &[Document], vocab: Arc<Vocabulary>, config: TrainingConfig) -> Result<EmbeddingModel> {
    Trainer::new(docs, vocab, config)?.finish()
}

/// Trains on an already encoded corpus.
pub fn train_encoded(
    corpus: &EncodedCorpus,
    vocab: Arc<Vocabulary>,
    config: TrainingConfig,
) -> Result<EmbeddingModel> {
    Trainer::from_encoded(corpus.clone(), vocab, config)?.finish()
}

/// Mean `-ln Pr(context | center, region)` over every window pair of the corpus,
/// evaluated directly through the model's context probabilities.
pub fn mean_pair_loss(model: &EmbeddingModel, corpus: &EncodedCorpus) -> f64 {
    let window = model.config.window;
    let (mut sum, mut n) = (0.0, 0u64);
    for i in 0..corpus.len() {
        let doc = corpus.doc(i);
        let r = corpus.labels[i];
        let w = corpus.weights[i] as f64;
        for c in 0..doc.len() {
            for o in c.saturating_sub(window)..=(c + window).min(doc.len().saturating_sub(1)) {
                if o != c {
                    sum += w * model.pair_loss(doc[c] as usize, r, doc[o] as usize);
                    n += corpus.weights[i];
                }
            }
        }
    }
    if n == 0 { 0.0 } else { sum / n as f64 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocabulary, RegionId};

    fn docs(lines: &[(&str, &str)]) -> Vec<Document> {
        lines
            .iter()
            .map(|(r, t)| {
                Document::new(
                    RegionId::new(*r).unwrap(),
                    t.split_whitespace().map(String::from).collect(),
                )
            })
            .collect()
    }

    #[test]
    fn config_validation() {
        assert!(TrainingConfig::default().validate().is_ok());
        for bad in [
            TrainingConfig { dim: 0, ..Default::default() },
            TrainingConfig { window: 0, ..Default::default() },
            TrainingConfig { lr: 0.0, ..Default::default() },
            TrainingConfig { epochs: 0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn pair_counting_respects_window_and_weight() {
        let d = docs(&[("US", "a b c d e")]);
        let v = build_vocabulary(&d, 1).unwrap();
        let c = EncodedCorpus::new(&d, &v).unwrap();
        assert_eq!(c.pairs_per_epoch(10), 20);
        assert_eq!(c.pairs_per_epoch(1), 8);
        let heavy = vec![d[0].clone().with_weight(3)];
        let c = EncodedCorpus::new(&heavy, &v).unwrap();
        assert_eq!(c.pairs_per_epoch(1), 24);
        let heavier = vec![d[0].clone().with_weight(40)];
        let c = EncodedCorpus::new(&heavier, &v).unwrap();
        assert_eq!(c.pairs_per_epoch(1), 8);
    }

    #[test]
    fn unknown_region_and_empty() {
        let d = docs(&[("US", "a b"), ("UK", "b a")]);
        let v = build_vocabulary(&d[..1], 1).unwrap();
        assert!(matches!(EncodedCorpus::new(&d, &v), Err(Error::UnknownRegion(_))));
        assert!(matches!(EncodedCorpus::new(&[], &v), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn deterministic_single_thread() {
        let d = docs(&[("US", "a b c a"), ("UK", "c b a b"), ("US", "a c"), ("UK", "b b c")]);
        let v = Arc::new(build_vocabulary(&d, 1).unwrap());
        let cfg = TrainingConfig { dim: 8, epochs: 3, seed: 11, ..Default::default() };
        let m1 = train(&d, v.clone(), cfg.clone()).unwrap();
        let m2 = train(&d, v.clone(), cfg.clone()).unwrap();
        assert_eq!(m1, m2);
        let m3 = train(&d, v, TrainingConfig { seed: 12, ..cfg }).unwrap();
        assert_ne!(m1, m3);
    }

    #[test]
    fn multi_threaded_training_runs() {
        let d = docs(&[("US", "a b c a"), ("UK", "c b a b"), ("US", "a c"), ("UK", "b b c")]);
        let v = Arc::new(build_vocabulary(&d, 1).unwrap());
        let cfg = TrainingConfig { dim: 8, epochs: 2, threads: 3, ..Default::default() };
        let m = train(&d, v, cfg).unwrap();
        assert!(m.main.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn nan_guard() {
        let d = docs(&[("US", "a b c a"), ("UK", "c b a b")]);
        let v = Arc::new(build_vocabulary(&d, 1).unwrap());
        let cfg = TrainingConfig { dim: 4, lr: 1e300, lr_schedule: LrSchedule::Fixed, ..Default::default() };
        assert!(matches!(train(&d, v, cfg), Err(Error::NonFinite { .. })));
    }
}
