use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// `L x M` table of dimension indices. Indices within a row are distinct
/// and below `D`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermutationTable {
    entries: Vec<u32>,
    l: usize,
    m: usize,
    d: usize,
    seed: Option<u64>,
}

fn check_shape(l: usize, m: usize, d: usize) -> Result<()> {
    if l == 0 {
        return Err(Error::InvalidParameter(
            "code length L must be at least 1".into(),
        ));
    }
    if m < 2 || m > d {
        return Err(Error::InvalidParameter(format!(
            "subsample size M must satisfy 2 <= M <= D (M = {m}, D = {d})"
        )));
    }
    if m > 1 << 16 || d > u32::MAX as usize {
        return Err(Error::InvalidParameter(format!(
            "M = {m} or D = {d} too large"
        )));
    }
    Ok(())
}

/// Draw `L` rows of `M` distinct indices from `0..D`.
///
/// Each row runs a partial Fisher-Yates shuffle over a fresh identity array:
/// for `i` in `0..M`, swap position `i` with `i + below(D - i)`, then keep
/// the first `M` entries. Identical seeds give identical tables.
pub fn generate_permutations(seed: u64, l: usize, m: usize, d: usize) -> Result<PermutationTable> {
    check_shape(l, m, d)?;
    let mut rng = SeededRng::new(seed);
    let mut entries = Vec::with_capacity(l * m);
    let mut pool: Vec<u32> = Vec::with_capacity(d);
    for _ in 0..l {
        pool.clear();
        pool.extend(0..d as u32);
        for i in 0..m {
            let j = i + rng.below((d - i) as u64) as usize;
            pool.swap(i, j);
        }
        entries.extend_from_slice(&pool[..m]);
    }
    Ok(PermutationTable {
        entries,
        l,
        m,
        d,
        seed: Some(seed),
    })
}

impl PermutationTable {
    /// Build a table from explicit 0-based rows.
    pub fn from_rows(rows: &[Vec<u32>], d: usize) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        check_shape(rows.len(), m, d)?;
        let mut entries = Vec::with_capacity(rows.len() * m);
        for row in rows {
            if row.len() != m {
                return Err(Error::DimensionMismatch {
                    what: "permutation row",
                    expected: m,
                    got: row.len(),
                });
            }
            for (i, &idx) in row.iter().enumerate() {
                if idx as usize >= d {
                    return Err(Error::InvalidParameter(format!("index {idx} >= D = {d}")));
                }
                if row[..i].contains(&idx) {
                    return Err(Error::InvalidParameter(format!(
                        "repeated index {idx} in a row"
                    )));
                }
            }
            entries.extend_from_slice(row);
        }
        Ok(Self {
            entries,
            l: rows.len(),
            m,
            d,
            seed: None,
        })
    }

    /// Build a table from 1-based rows (indices in `1..=D`).
    pub fn from_one_based_rows(rows: &[Vec<u32>], d: usize) -> Result<Self> {
        let zero_based = rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&i| {
                        i.checked_sub(1)
                            .ok_or_else(|| Error::InvalidParameter("1-based index 0".into()))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(&zero_based, d)
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Seed the table was generated from, if any.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn row(&self, l: usize) -> &[u32] {
        &self.entries[l * self.m..(l + 1) * self.m]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[u32]> {
        self.entries.chunks_exact(self.m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let a = generate_permutations(42, 100, 6, 40).unwrap();
        let b = generate_permutations(42, 100, 6, 40).unwrap();
        let c = generate_permutations(43, 100, 6, 40).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.entries, c.entries);
        assert_eq!(a.seed(), Some(42));
    }

    #[test]
    fn rows_are_distinct_and_in_range() {
        let t = generate_permutations(1, 500, 8, 13).unwrap();
        for row in t.rows() {
            let mut sorted = row.to_vec();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(sorted.len(), 8);
            assert!(row.iter().all(|&i| i < 13));
        }
    }

    #[test]
    fn full_width_rows_are_permutations() {
        let t = generate_permutations(8, 20, 40, 40).unwrap();
        for row in t.rows() {
            let mut sorted = row.to_vec();
            sorted.sort_unstable();
            assert_eq!(sorted, (0..40).collect::<Vec<_>>());
        }
    }

    #[test]
    fn dimension_coverage_is_uniform() {
        let (l, m, d) = (10_000, 6, 40);
        let t = generate_permutations(2024, l, m, d).unwrap();
        let mut counts = vec![0usize; d];
        for row in t.rows() {
            for &i in row {
                counts[i as usize] += 1;
            }
        }
        let expected = l as f64 * m as f64 / d as f64;
        let mut chi2 = 0.0;
        for &c in &counts {
            let frac = c as f64 / l as f64;
            assert!((frac - 6.0 / 40.0).abs() < 0.02, "fraction {frac}");
            chi2 += (c as f64 - expected).powi(2) / expected;
        }
        // 39 degrees of freedom; p = 0.001 critical value is ~72.1
        assert!(chi2 < 72.1, "chi-square {chi2}");
    }

    #[test]
    fn parameter_errors() {
        assert!(generate_permutations(0, 10, 41, 40).is_err());
        assert!(generate_permutations(0, 10, 1, 40).is_err());
        assert!(generate_permutations(0, 0, 2, 40).is_err());
        assert!(PermutationTable::from_rows(&[vec![0, 0]], 4).is_err());
        assert!(PermutationTable::from_rows(&[vec![0, 4]], 4).is_err());
        assert!(PermutationTable::from_one_based_rows(&[vec![0, 1]], 4).is_err());
    }
}
