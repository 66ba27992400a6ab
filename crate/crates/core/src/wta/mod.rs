//! Winner-Take-All hashing.
//!
//! A [`PermutationTable`] holds `L` rows of `M` distinct dimension indices.
//! Hashing a `D`-vector records, for each row, the position (`0..M`) of the
//! largest selected entry. The resulting `L` small integers depend only on
//! the rank order of the input, so any strictly increasing element-wise
//! transform leaves them unchanged.
//!
//! Codes are bit-packed ([`CodeLayout`]) so that the fraction of matching
//! positions between two frames can be computed with XOR, a per-field OR
//! fold and popcount ([`hamming_similarity`]).

mod codes;
mod permutation;

pub use codes::{hamming_similarity, pack, unpack, CodeLayout, CodeRow, HashCodes};
pub use permutation::{generate_permutations, PermutationTable};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Hash one vector. Ties at the maximum go to the lowest position.
pub fn hash_vector<T: PartialOrd + Copy>(x: &[T], table: &PermutationTable) -> Result<Vec<u16>> {
    let mut out = vec![0; table.l()];
    hash_into(x, table, &mut out)?;
    Ok(out)
}

pub(crate) fn hash_into<T: PartialOrd + Copy>(
    x: &[T],
    table: &PermutationTable,
    out: &mut [u16],
) -> Result<()> {
    if x.len() != table.d() {
        return Err(Error::DimensionMismatch {
            what: "hashed vector",
            expected: table.d(),
            got: x.len(),
        });
    }
    if x.iter().any(|v| v.partial_cmp(v).is_none()) {
        return Err(Error::NanInput);
    }
    for (code, row) in out.iter_mut().zip(table.rows()) {
        let mut best = 0;
        let mut best_val = x[row[0] as usize];
        for (pos, &idx) in row.iter().enumerate().skip(1) {
            let v = x[idx as usize];
            if v > best_val {
                best = pos;
                best_val = v;
            }
        }
        *code = best as u16;
    }
    Ok(())
}

/// Hash every row of a feature matrix into packed codes.
pub fn hash_matrix(feats: &FeatureMatrix, table: &PermutationTable) -> Result<HashCodes> {
    if feats.dim() != table.d() {
        return Err(Error::DimensionMismatch {
            what: "feature dimension",
            expected: table.d(),
            got: feats.dim(),
        });
    }
    let layout = CodeLayout::new(table.l(), table.m())?;
    let mut codes = HashCodes::with_capacity(layout, feats.rows());
    let mut buf = vec![0u16; table.l()];
    for row in feats.iter_rows() {
        hash_into(row, table, &mut buf)?;
        codes.push(&buf)?;
    }
    Ok(codes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureKind;
    use crate::rng::SeededRng;

    fn worked_table() -> PermutationTable {
        PermutationTable::from_one_based_rows(&[vec![4, 1, 2], vec![3, 4, 2]], 4).unwrap()
    }

    #[test]
    fn worked_example() {
        let codes = hash_vector(&[6.6, 2.2, 4.4, 3.3], &worked_table()).unwrap();
        assert_eq!(codes, vec![1, 0]);
        let one_based: Vec<u16> = codes.iter().map(|c| c + 1).collect();
        assert_eq!(one_based, vec![2, 1]);
    }

    #[test]
    fn constant_vector_hashes_to_zero() {
        let table = generate_permutations(5, 50, 6, 20).unwrap();
        let codes = hash_vector(&[3.5f32; 20], &table).unwrap();
        assert!(codes.iter().all(|&c| c == 0));
    }

    #[test]
    fn nan_is_rejected() {
        let table = worked_table();
        assert!(matches!(
            hash_vector(&[1.0, f64::NAN, 0.0, 0.0], &table),
            Err(Error::NanInput)
        ));
        assert!(matches!(
            hash_vector(&[1.0, 2.0], &table),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn matches_materialized_subvector_oracle() {
        let mut rng = SeededRng::new(11);
        let table = generate_permutations(77, 64, 5, 30).unwrap();
        for _ in 0..50 {
            let x: Vec<f64> = (0..30).map(|_| rng.uniform()).collect();
            let codes = hash_vector(&x, &table).unwrap();
            for (l, row) in table.rows().enumerate() {
                let sub: Vec<f64> = row.iter().map(|&i| x[i as usize]).collect();
                let max = sub.iter().cloned().fold(f64::MIN, f64::max);
                let expect = sub.iter().position(|&v| v == max).unwrap();
                assert_eq!(codes[l] as usize, expect);
            }
        }
    }

    #[test]
    fn hash_matrix_rows_match_hash_vector() {
        let mut rng = SeededRng::new(2);
        let table = generate_permutations(3, 40, 6, 12).unwrap();
        let mut rows: Vec<Vec<f32>> = (0..100)
            .map(|_| (0..12).map(|_| rng.uniform() as f32).collect())
            .collect();
        rows.push(rows[0].clone());
        let feats = FeatureMatrix::from_rows(&rows, FeatureKind::Magnitude).unwrap();
        let codes = hash_matrix(&feats, &table).unwrap();
        assert_eq!(codes.len(), 101);
        for (n, row) in rows.iter().enumerate() {
            assert_eq!(codes.codes(n), hash_vector(row, &table).unwrap());
        }
        assert_eq!(codes.row(0).words(), codes.row(100).words());

        let narrow = FeatureMatrix::from_rows(&[vec![1.0; 11]], FeatureKind::Magnitude).unwrap();
        assert!(hash_matrix(&narrow, &table).is_err());
    }
}
