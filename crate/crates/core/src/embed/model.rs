use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::huffman::HuffmanTree;
use super::train::TrainingConfig;
use crate::corpus::{RegionId, Vocabulary, MAIN_REGION};
use crate::error::{Error, Result};

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Region-conditioned skip-gram model with a hierarchical softmax output layer.
///
/// Every word has a global vector (`MAIN`) and one differential vector per
/// region; the vector of `w` in region `r` is their sum. Output-side
/// parameters live on the internal nodes of the Huffman tree and are shared
/// by all regions.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    pub(crate) vocab: Arc<Vocabulary>,
    pub(crate) regions: Vec<RegionId>,
    pub(crate) dim: usize,
    pub(crate) main: Vec<f64>,
    pub(crate) deltas: Vec<Vec<f64>>,
    pub(crate) tree: HuffmanTree,
    pub(crate) nodes: Vec<f64>,
    pub(crate) config: TrainingConfig,
}

/// Gradient of `-ln Pr(context | center, region)` for one training pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGradient {
    pub loss: f64,
    /// Gradient with respect to the composed input vector; identical for the
    /// global and the regional summand.
    pub input: Vec<f64>,
    /// Gradient for each internal node on the context word's path.
    pub nodes: Vec<(u32, Vec<f64>)>,
}

impl EmbeddingModel {
    /// Fresh model: global vectors uniform in `[-0.5/d, 0.5/d]` from the
    /// config seed, differential vectors and internal nodes zero.
    pub fn new(vocab: Arc<Vocabulary>, config: TrainingConfig) -> Result<Self> {
        config.validate()?;
        let tree = HuffmanTree::build(vocab.counts())?;
        let regions = vocab.regions().to_vec();
        let dim = config.dim;
        let n = vocab.len();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let half = 0.5 / dim as f64;
        let main = (0..n * dim).map(|_| rng.gen_range(-half..half)).collect();
        Ok(EmbeddingModel {
            deltas: vec![vec![0.0; n * dim]; regions.len()],
            nodes: vec![0.0; (n - 1) * dim],
            vocab,
            regions,
            dim,
            main,
            tree,
            config,
        })
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn shared_vocabulary(&self) -> Arc<Vocabulary> {
        Arc::clone(&self.vocab)
    }

    pub fn regions(&self) -> &[RegionId] {
        &self.regions
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn config(&self) -> &TrainingConfig {
        &self.config
    }

    pub fn tree(&self) -> &HuffmanTree {
        &self.tree
    }

    pub fn region_index(&self, region: &str) -> Result<usize> {
        self.regions
            .iter()
            .position(|r| r.as_str() == region)
            .ok_or_else(|| Error::UnknownRegion(region.to_string()))
    }

    pub fn word_index(&self, word: &str) -> Result<usize> {
        self.vocab.word_index(word)
    }

    /// Global vector of word `w`.
    pub fn global(&self, w: usize) -> &[f64] {
        &self.main[w * self.dim..(w + 1) * self.dim]
    }

    /// Differential vector of word `w` in region `r`.
    pub fn delta(&self, w: usize, r: usize) -> &[f64] {
        &self.deltas[r][w * self.dim..(w + 1) * self.dim]
    }

    pub fn global_mut(&mut self, w: usize) -> &mut [f64] {
        let d = self.dim;
        &mut self.main[w * d..(w + 1) * d]
    }

    pub fn delta_mut(&mut self, w: usize, r: usize) -> &mut [f64] {
        let d = self.dim;
        &mut self.deltas[r][w * d..(w + 1) * d]
    }

    /// Parameter vector of internal node `k`.
    pub fn node(&self, k: usize) -> &[f64] {
        &self.nodes[k * self.dim..(k + 1) * self.dim]
    }

    pub fn node_mut(&mut self, k: usize) -> &mut [f64] {
        let d = self.dim;
        &mut self.nodes[k * d..(k + 1) * d]
    }

    /// Composed vector of word `w` in region `r`: global plus differential.
    pub fn embedding(&self, w: usize, r: usize) -> Vec<f64> {
        self.global(w)
            .iter()
            .zip(self.delta(w, r))
            .map(|(a, b)| a + b)
            .collect()
    }

    /// `Pr(wj | wi, r)` under the hierarchical softmax.
    pub fn context_probability_idx(&self, wi: usize, r: usize, wj: usize) -> f64 {
        (-self.pair_loss(wi, r, wj)).exp()
    }

    /// `-ln Pr(wj | wi, r)`.
    pub fn pair_loss(&self, wi: usize, r: usize, wj: usize) -> f64 {
        let h = self.embedding(wi, r);
        self.tree
            .code(wj)
            .iter()
            .zip(self.tree.path(wj))
            .map(|(&bit, &k)| {
                let x = dot(self.node(k as usize), &h);
                let s = if bit == 0 { x } else { -x };
                // -ln sigma(s) computed without cancellation for large |s|
                if s > 0.0 {
                    (-s).exp().ln_1p()
                } else {
                    -s + s.exp().ln_1p()
                }
            })
            .sum()
    }

    /// Analytic gradient of [`pair_loss`](Self::pair_loss).
    pub fn pair_gradient(&self, wi: usize, r: usize, wj: usize) -> PairGradient {
        let h = self.embedding(wi, r);
        let mut input = vec![0.0; self.dim];
        let mut nodes = Vec::new();
        let mut loss = 0.0;
        for (&bit, &k) in self.tree.code(wj).iter().zip(self.tree.path(wj)) {
            let v = self.node(k as usize);
            let x = dot(v, &h);
            let sign = if bit == 0 { 1.0 } else { -1.0 };
            let p = sigmoid(sign * x);
            loss -= p.ln();
            let coeff = -sign * (1.0 - p);
            input.iter_mut().zip(v).for_each(|(g, vi)| *g += coeff * vi);
            nodes.push((k, h.iter().map(|hi| coeff * hi).collect()));
        }
        PairGradient { loss, input, nodes }
    }

    /// One SGD step on `-ln Pr(wj | wi, r)`. Returns the loss before the step.
    ///
    /// Node vectors move along their gradient; the input-side gradient is
    /// applied unchanged to both the global and the regional vector of `wi`.
    pub fn sgd_step(&mut self, wi: usize, r: usize, wj: usize, lr: f64) -> f64 {
        let mut scratch = StepScratch::new(self.dim);
        let d = self.dim;
        let (code, path) = (self.tree.code(wj), self.tree.path(wj));
        step_kernel(
            &mut self.main[wi * d..(wi + 1) * d],
            &mut self.deltas[r][wi * d..(wi + 1) * d],
            &mut self.nodes,
            d,
            code,
            path,
            lr,
            &mut scratch,
            true,
        )
    }
}

pub(crate) struct StepScratch {
    h: Vec<f64>,
    grad: Vec<f64>,
}

impl StepScratch {
    pub(crate) fn new(dim: usize) -> Self {
        StepScratch {
            h: vec![0.0; dim],
            grad: vec![0.0; dim],
        }
    }
}

/// Shared SGD kernel. Returns the pre-step loss when `want_loss` is set, else 0.
#[allow(clippy::too_many_arguments)]
#[inline]
pub(crate) fn step_kernel(
    main: &mut [f64],
    delta: &mut [f64],
    nodes: &mut [f64],
    dim: usize,
    code: &[u8],
    path: &[u32],
    lr: f64,
    scratch: &mut StepScratch,
    want_loss: bool,
) -> f64 {
    let h = &mut scratch.h;
    let grad = &mut scratch.grad;
    for ((hi, a), b) in h.iter_mut().zip(main.iter()).zip(delta.iter()) {
        *hi = a + b;
    }
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut loss = 0.0;
    for (&bit, &k) in code.iter().zip(path) {
        let v = &mut nodes[k as usize * dim..(k as usize + 1) * dim];
        let x = dot(v, h);
        let sign = if bit == 0 { 1.0 } else { -1.0 };
        let p = sigmoid(sign * x);
        if want_loss {
            loss -= p.ln();
        }
        let coeff = -sign * (1.0 - p);
        let step = lr * coeff;
        for ((g, vi), hi) in grad.iter_mut().zip(v.iter_mut()).zip(h.iter()) {
            *g += coeff * *vi;
            *vi -= step * hi;
        }
    }
    for ((m, dl), g) in main.iter_mut().zip(delta.iter_mut()).zip(grad.iter()) {
        let u = lr * g;
        *m -= u;
        *dl -= u;
    }
    loss
}

/// `Pr(wj | wi, r)` by word and region name.
pub fn context_probability(model: &EmbeddingModel, wi: &str, region: &str, wj: &str) -> Result<f64> {
    let i = model.word_index(wi)?;
    let j = model.word_index(wj)?;
    let r = model.region_index(region)?;
    Ok(model.context_probability_idx(i, r, j))
}

/// `φ_r(w)`. The reserved region `MAIN` returns the global vector.
pub fn region_embedding(model: &EmbeddingModel, word: &str, region: &str) -> Result<Vec<f64>> {
    let w = model.word_index(word)?;
    if region == MAIN_REGION {
        return Ok(model.global(w).to_vec());
    }
    let r = model.region_index(region)?;
    Ok(model.embedding(w, r))
}

/// The `k` words whose region-`r` vectors are closest in cosine similarity to
/// that of `word`, excluding `word`. Ties keep vocabulary order.
pub fn nearest_neighbors(
    model: &EmbeddingModel,
    word: &str,
    region: &str,
    k: usize,
) -> Result<Vec<(String, f64)>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let target = region_embedding(model, word, region)?;
    let w = model.word_index(word)?;
    let tnorm = dot(&target, &target).sqrt();
    if tnorm == 0.0 {
        return Err(Error::ZeroEmbedding {
            word: word.to_string(),
            region: region.to_string(),
        });
    }
    let r = if region == MAIN_REGION {
        None
    } else {
        Some(model.region_index(region)?)
    };
    let mut sims: Vec<(usize, f64)> = (0..model.vocab.len())
        .filter(|&v| v != w)
        .filter_map(|v| {
            let e = match r {
                Some(r) => model.embedding(v, r),
                None => model.global(v).to_vec(),
            };
            let n = dot(&e, &e).sqrt();
            (n > 0.0).then(|| (v, dot(&target, &e) / (tnorm * n)))
        })
        .collect();
    // stable sort keeps vocabulary order among ties
    sims.sort_by(|a, b| b.1.total_cmp(&a.1));
    sims.truncate(k);
    Ok(sims
        .into_iter()
        .map(|(v, s)| (model.vocab.word(v).to_string(), s))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocabulary, Document, RegionId};

    fn toy_model(words: &[(&str, u64)], dim: usize, seed: u64) -> EmbeddingModel {
        let mut docs = Vec::new();
        for (i, (w, n)) in words.iter().enumerate() {
            let region = if i % 2 == 0 { "US" } else { "UK" };
            docs.push(Document::new(RegionId::new(region).unwrap(), vec![w.to_string()]).with_weight(*n));
        }
        let vocab = Arc::new(build_vocabulary(&docs, 1).unwrap());
        let config = TrainingConfig {
            dim,
            seed,
            ..TrainingConfig::default()
        };
        EmbeddingModel::new(vocab, config).unwrap()
    }

    #[test]
    fn zero_parameters_give_dyadic_probabilities() {
        let mut m = toy_model(&[("a", 8), ("b", 4), ("c", 2), ("d", 1), ("e", 1)], 4, 1);
        m.main.iter_mut().for_each(|x| *x = 0.0);
        for wj in 0..5 {
            let p = m.context_probability_idx(0, 0, wj);
            let expected = 0.5f64.powi(m.tree.code(wj).len() as i32);
            assert!((p - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        let mut m = toy_model(&[("a", 9), ("b", 5), ("c", 4), ("d", 2), ("e", 1), ("f", 1)], 6, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        m.nodes.iter_mut().for_each(|x| *x = rng.gen_range(-1.0..1.0));
        m.deltas[1].iter_mut().for_each(|x| *x = rng.gen_range(-1.0..1.0));
        for wi in 0..6 {
            for r in 0..2 {
                let total: f64 = (0..6).map(|wj| m.context_probability_idx(wi, r, wj)).sum();
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn equal_deltas_equal_probabilities() {
        let mut m = toy_model(&[("a", 3), ("b", 2), ("c", 1)], 4, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        m.nodes.iter_mut().for_each(|x| *x = rng.gen_range(-1.0..1.0));
        let d: Vec<f64> = (0..m.deltas[0].len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        m.deltas[0] = d.clone();
        m.deltas[1] = d;
        for wj in 0..3 {
            assert_eq!(m.context_probability_idx(1, 0, wj), m.context_probability_idx(1, 1, wj));
        }
    }

    #[test]
    fn shared_gradient_and_descent() {
        let mut m = toy_model(&[("a", 3), ("b", 2), ("c", 2), ("d", 1)], 5, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        m.nodes.iter_mut().for_each(|x| *x = rng.gen_range(-0.5..0.5));
        let before_main = m.global(2).to_vec();
        let before = m.pair_loss(2, 1, 0);
        let grad = m.pair_gradient(2, 1, 0);
        let lr = 1e-3;
        let reported = m.sgd_step(2, 1, 0, lr);
        assert!((reported - before).abs() < 1e-12);
        assert!(m.pair_loss(2, 1, 0) < before);
        let expected: Vec<f64> = grad.input.iter().map(|g| -lr * g).collect();
        assert_eq!(m.delta(2, 1), &expected[..]);
        for ((after, b), e) in m.global(2).iter().zip(&before_main).zip(&expected) {
            assert!((after - b - e).abs() < 1e-15);
        }
        assert!(m.delta(2, 0).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn region_embedding_composes() {
        let mut m = toy_model(&[("a", 3), ("b", 2), ("c", 1)], 3, 5);
        assert_eq!(region_embedding(&m, "a", "US").unwrap(), m.global(0));
        m.delta_mut(0, 0).copy_from_slice(&[1.0, 2.0, 3.0]);
        let e = region_embedding(&m, "a", "US").unwrap();
        for (i, x) in e.iter().enumerate() {
            assert!((x - m.global(0)[i] - m.delta(0, 0)[i]).abs() < 1e-15);
        }
        assert_eq!(region_embedding(&m, "a", "MAIN").unwrap(), m.global(0));
        assert!(region_embedding(&m, "zz", "US").is_err());
        assert!(region_embedding(&m, "a", "AU").is_err());
    }

    #[test]
    fn nearest_on_hand_set_vectors() {
        let mut m = toy_model(&[("a", 3), ("b", 2), ("c", 1)], 2, 5);
        m.global_mut(0).copy_from_slice(&[1.0, 0.0]);
        m.global_mut(1).copy_from_slice(&[0.0, 1.0]);
        m.global_mut(2).copy_from_slice(&[1.0, 0.2]);
        let nn = nearest_neighbors(&m, "a", "US", 1).unwrap();
        assert_eq!(nn[0].0, "c");
        let expected = 1.0 / (1.0f64 + 0.04).sqrt();
        assert!((nn[0].1 - expected).abs() < 1e-12);
        let all = nearest_neighbors(&m, "a", "US", 10).unwrap();
        assert_eq!(all.iter().map(|(w, _)| w.as_str()).collect::<Vec<_>>(), ["c", "b"]);
    }
}
