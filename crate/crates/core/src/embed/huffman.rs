use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Binary Huffman coding of the vocabulary used by the hierarchical softmax.
///
/// Leaf `w` has a `code` (bits from the root down) and a `path` of internal
/// node indices in `0..len-1` of the same length. Internal node `k` is the
/// `k`-th merge, so the root is always node `len - 2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HuffmanTree {
    codes: Vec<Vec<u8>>,
    paths: Vec<Vec<u32>>,
}

impl HuffmanTree {
    /// Builds the tree from word counts by repeatedly merging the two lightest
    /// nodes. Among equal counts the node created first wins; of the two
    /// merged nodes the one created first becomes the `0` child.
    pub fn build(counts: &[u64]) -> Result<Self> {
        let n = counts.len();
        if n < 2 {
            return Err(Error::VocabularyTooSmall(n));
        }
        // node ids: leaves 0..n, internal nodes n..2n-1 in creation order
        let mut parent = vec![0usize; 2 * n - 1];
        let mut bit = vec![0u8; 2 * n - 1];
        let mut heap: BinaryHeap<Reverse<(u64, usize)>> = counts
            .iter()
            .enumerate()
            .map(|(i, &c)| Reverse((c, i)))
            .collect();
        for next in n..2 * n - 1 {
            let Reverse((ca, a)) = heap.pop().expect("heap holds at least two nodes");
            let Reverse((cb, b)) = heap.pop().expect("heap holds at least two nodes");
            let (left, right) = if a < b { (a, b) } else { (b, a) };
            parent[left] = next;
            parent[right] = next;
            bit[left] = 0;
            bit[right] = 1;
            heap.push(Reverse((ca.saturating_add(cb), next)));
        }
        let root = 2 * n - 2;
        let mut codes = Vec::with_capacity(n);
        let mut paths = Vec::with_capacity(n);
        for leaf in 0..n {
            let mut code = Vec::new();
            let mut path = Vec::new();
            let mut node = leaf;
            while node != root {
                code.push(bit[node]);
                node = parent[node];
                path.push((node - n) as u32);
            }
            code.reverse();
            path.reverse();
            codes.push(code);
            paths.push(path);
        }
        Ok(HuffmanTree { codes, paths })
    }

    /// Reassembles a tree from stored codes and paths, checking their shape.
    pub fn from_parts(codes: Vec<Vec<u8>>, paths: Vec<Vec<u32>>) -> Result<Self> {
        let n = codes.len();
        if n < 2 || paths.len() != n {
            return Err(Error::Format("huffman: bad leaf count".into()));
        }
        for (c, p) in codes.iter().zip(&paths) {
            if c.is_empty()
                || c.len() != p.len()
                || c.iter().any(|&b| b > 1)
                || p.iter().any(|&k| k as usize >= n - 1)
            {
                return Err(Error::Format("huffman: malformed code or path".into()));
            }
        }
        Ok(HuffmanTree { codes, paths })
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn internal_nodes(&self) -> usize {
        self.codes.len() - 1
    }

    pub fn code(&self, word: usize) -> &[u8] {
        &self.codes[word]
    }

    pub fn path(&self, word: usize) -> &[u32] {
        &self.paths[word]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lengths(counts: &[u64]) -> Vec<usize> {
        let t = HuffmanTree::build(counts).unwrap();
        (0..counts.len()).map(|w| t.code(w).len()).collect()
    }

    fn prefix_free(t: &HuffmanTree) -> bool {
        for a in 0..t.len() {
            for b in 0..t.len() {
                if a != b && t.code(b).starts_with(t.code(a)) {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn two_words() {
        let t = HuffmanTree::build(&[3, 1]).unwrap();
        assert_eq!(t.internal_nodes(), 1);
        assert_eq!(t.code(0).len(), 1);
        assert_eq!(t.code(1).len(), 1);
        assert_ne!(t.code(0), t.code(1));
        assert_eq!(t.path(0), [0]);
    }

    #[test]
    fn textbook_lengths() {
        assert_eq!(lengths(&[8, 4, 2, 1, 1]), [1, 2, 3, 4, 4]);
    }

    /// Brute force: the minimum of sum(count * length) over every length vector
    /// satisfying Kraft's equality (complete prefix codes), lengths up to n-1.
    fn optimal_cost(counts: &[u64]) -> u64 {
        fn go(counts: &[u64], i: usize, kraft: f64, acc: u64, best: &mut u64) {
            if i == counts.len() {
                if (kraft - 1.0).abs() < 1e-12 {
                    *best = (*best).min(acc);
                }
                return;
            }
            for len in 1..counts.len() {
                let k = kraft + 0.5f64.powi(len as i32);
                if k <= 1.0 + 1e-12 {
                    go(counts, i + 1, k, acc + counts[i] * len as u64, best);
                }
            }
        }
        let mut best = u64::MAX;
        go(counts, 0, 0.0, 0, &mut best);
        best
    }

    #[test]
    fn equal_counts_are_optimal() {
        let counts = [5, 5, 5, 5];
        assert_eq!(lengths(&counts), [2, 2, 2, 2]);
        let cost: u64 = lengths(&counts).iter().zip(&counts).map(|(&l, &c)| l as u64 * c).sum();
        assert_eq!(cost, optimal_cost(&counts));
    }

    #[test]
    fn matches_brute_force_and_orders_lengths() {
        for counts in [
            vec![10, 7, 7, 3, 2],
            vec![1, 1, 1, 1, 1, 1],
            vec![40, 20, 10, 5, 3, 1],
            vec![9, 8, 2, 2, 1],
        ] {
            let t = HuffmanTree::build(&counts).unwrap();
            assert!(prefix_free(&t));
            assert_eq!(t.internal_nodes(), counts.len() - 1);
            let ls = lengths(&counts);
            let cost: u64 = ls.iter().zip(&counts).map(|(&l, &c)| l as u64 * c).sum();
            assert_eq!(cost, optimal_cost(&counts), "{counts:?}");
            for a in 0..counts.len() {
                for b in 0..counts.len() {
                    if counts[a] > counts[b] {
                        assert!(ls[a] <= ls[b]);
                    }
                }
            }
        }
    }

    #[test]
    fn root_is_last_internal_node() {
        let t = HuffmanTree::build(&[4, 3, 2, 1]).unwrap();
        for w in 0..4 {
            assert_eq!(t.path(w)[0], 2);
        }
    }

    #[test]
    fn too_small() {
        assert!(matches!(HuffmanTree::build(&[1]), Err(Error::VocabularyTooSmall(1))));
    }
}
