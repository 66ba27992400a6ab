//! Self-affinity matrices and rank correlation between them.

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::knn::cosine_similarity;
use crate::wta::{hamming_similarity, HashCodes};

/// Square row-major similarity matrix over a subset of frames.
#[derive(Clone, Debug, PartialEq)]
pub struct AffinityMatrix {
    pub frames: Vec<usize>,
    pub values: Vec<f64>,
}

impl AffinityMatrix {
    pub fn size(&self) -> usize {
        self.frames.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size() + j]
    }

    /// Entries strictly above the diagonal, row by row.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let n = self.size();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .collect()
    }
}

/// At most `max` frame indices spread evenly over `0..total`.
pub fn subsample_frames(total: usize, max: usize) -> Vec<usize> {
    if total <= max {
        return (0..total).collect();
    }
    (0..max).map(|i| i * total / max).collect()
}

pub fn cosine_affinity(feats: &FeatureMatrix, frames: &[usize]) -> AffinityMatrix {
    let values = frames
        .iter()
        .flat_map(|&a| frames.iter().map(move |&b| (a, b)))
        .map(|(a, b)| cosine_similarity(feats.row(a), feats.row(b)))
        .collect();
    AffinityMatrix {
        frames: frames.to_vec(),
        values,
    }
}

pub fn hamming_affinity(codes: &HashCodes, frames: &[usize]) -> AffinityMatrix {
    let values = frames
        .iter()
        .flat_map(|&a| frames.iter().map(move |&b| (a, b)))
        .map(|(a, b)| hamming_similarity(codes.row(a), codes.row(b)).expect("shared layout"))
        .collect();
    AffinityMatrix {
        frames: frames.to_vec(),
        values,
    }
}

/// 1-based ranks with ties sharing their mean rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    (va > 0.0 && vb > 0.0).then(|| (cov / (va.sqrt() * vb.sqrt())).clamp(-1.0, 1.0))
}

/// Spearman rank correlation (Pearson correlation of average ranks).
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            what: "rank correlation inputs",
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::EmptyInput(
            "rank correlation needs two or more values",
        ));
    }
    pearson(&average_ranks(a), &average_ranks(b))
        .ok_or(Error::Degenerate("constant input to rank correlation"))
}

/// Spearman correlation between the off-diagonal entries of two affinity
/// matrices over the same frames.
pub fn affinity_correlation(a: &AffinityMatrix, b: &AffinityMatrix) -> Result<f64> {
    if a.frames != b.frames {
        return Err(Error::InvalidParameter(
            "affinity matrices cover different frames".into(),
        ));
    }
    spearman(&a.upper_triangle(), &b.upper_triangle())
}
