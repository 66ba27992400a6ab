//! Single-scan K-nearest-neighbor search over dictionary frames.
//!
//! Both similarity regimes share one selection routine: the first `K`
//! frames fill the neighbor set unconditionally, after which a frame
//! replaces the current worst member only if it scores strictly higher.
//! "Worst" is the lowest score, and among equal scores the highest index,
//! so the result equals sorting all frames by (score descending, index
//! ascending) and taking the first `K`.

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::wta::{CodeRow, HashCodes};

/// Cosine similarity in `[-1, 1]`; defined as 0 when either vector is zero.
pub fn cosine_similarity(x: &[f32], h: &[f32]) -> f64 {
    let (mut dot, mut xx, mut hh) = (0.0f64, 0.0f64, 0.0f64);
    for (&a, &b) in x.iter().zip(h) {
        let (a, b) = (a as f64, b as f64);
        dot += a * b;
        xx += a * a;
        hh += b * b;
    }
    if xx == 0.0 || hh == 0.0 {
        return 0.0;
    }
    (dot / (xx.sqrt() * hh.sqrt())).clamp(-1.0, 1.0)
}

/// Up to `K` dictionary frames, ordered best first.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborSet {
    indices: Vec<usize>,
    scores: Vec<f64>,
    a_min: f64,
}

impl NeighborSet {
    /// From `(index, score)` pairs already in ranked order.
    pub fn from_ranked(ranked: Vec<(usize, f64)>) -> Self {
        let a_min = ranked.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let (indices, scores) = ranked.into_iter().unzip();
        Self {
            indices,
            scores,
            a_min,
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    /// Smallest score in the set (`+inf` when empty).
    pub fn a_min(&self) -> f64 {
        self.a_min
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Indices sorted ascending, for set comparisons.
    pub fn sorted_indices(&self) -> Vec<usize> {
        let mut v = self.indices.clone();
        v.sort_unstable();
        v
    }
}

fn worst_slot<S: PartialOrd + Copy>(set: &[(usize, S)]) -> usize {
    let mut worst = 0;
    for (i, &(idx, score)) in set.iter().enumerate().skip(1) {
        let (widx, wscore) = set[worst];
        if score < wscore || (score == wscore && idx > widx) {
            worst = i;
        }
    }
    worst
}

/// Top `k` of `n` scored items under (score desc, index asc).
pub(crate) fn top_k<S, F>(n: usize, k: usize, mut score: F) -> Vec<(usize, S)>
where
    S: PartialOrd + Copy,
    F: FnMut(usize) -> S,
{
    let mut set: Vec<(usize, S)> = Vec::with_capacity(k);
    let mut worst = 0;
    for t in 0..n {
        let s = score(t);
        if set.len() < k {
            set.push((t, s));
            if set.len() == k {
                worst = worst_slot(&set);
            }
        } else if s > set[worst].1 {
            set[worst] = (t, s);
            worst = worst_slot(&set);
        }
    }
    set.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("scores are comparable")
            .then(a.0.cmp(&b.0))
    });
    set
}

fn check_k(frames: usize, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidParameter("K must be at least 1".into()));
    }
    if frames < k {
        return Err(Error::DictionaryTooSmall { frames, k });
    }
    Ok(())
}

/// Cached dictionary row norms for repeated cosine scans.
#[derive(Clone, Debug)]
pub struct CosineIndex<'a> {
    feats: &'a FeatureMatrix,
    norms: Vec<f64>,
}

impl<'a> CosineIndex<'a> {
    pub fn new(feats: &'a FeatureMatrix) -> Self {
        let norms = feats
            .iter_rows()
            .map(|r| r.iter().map(|&v| v as f64 * v as f64).sum::<f64>().sqrt())
            .collect();
        Self { feats, norms }
    }

    pub fn features(&self) -> &FeatureMatrix {
        self.feats
    }

    pub fn search(&self, query: &[f32], k: usize) -> Result<NeighborSet> {
        check_k(self.feats.rows(), k)?;
        if query.len() != self.feats.dim() {
            return Err(Error::DimensionMismatch {
                what: "query features",
                expected: self.feats.dim(),
                got: query.len(),
            });
        }
        let qn = query
            .iter()
            .map(|&v| v as f64 * v as f64)
            .sum::<f64>()
            .sqrt();
        let ranked = top_k(self.feats.rows(), k, |t| {
            let norm = self.norms[t];
            if qn == 0.0 || norm == 0.0 {
                return 0.0;
            }
            let dot: f64 = query
                .iter()
                .zip(self.feats.row(t))
                .map(|(&a, &b)| a as f64 * b as f64)
                .sum();
            (dot / (qn * norm)).clamp(-1.0, 1.0)
        });
        Ok(NeighborSet::from_ranked(ranked))
    }
}

/// K nearest dictionary rows by cosine similarity.
pub fn knn_cosine(query: &[f32], dict: &FeatureMatrix, k: usize) -> Result<NeighborSet> {
    CosineIndex::new(dict).search(query, k)
}

/// K nearest dictionary rows by Hamming similarity of packed codes.
pub fn knn_hamming(query: CodeRow<'_>, dict: &HashCodes, k: usize) -> Result<NeighborSet> {
    check_k(dict.len(), k)?;
    let layout = dict.layout();
    if query.layout() != layout {
        return Err(Error::InvalidParameter(format!(
            "query codes (L = {}, M = {}) do not match dictionary codes (L = {}, M = {})",
            query.layout().l(),
            query.layout().m(),
            layout.l(),
            layout.m()
        )));
    }
    let wpr = layout.words_per_row();
    let words = dict.words();
    let q = query.words();
    let ranked = top_k(dict.len(), k, |t| {
        layout.matches(q, &words[t * wpr..(t + 1) * wpr])
    });
    let l = layout.l() as f64;
    Ok(NeighborSet::from_ranked(
        ranked.into_iter().map(|(i, m)| (i, m as f64 / l)).collect(),
    ))
}
