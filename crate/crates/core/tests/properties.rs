mod common;

use proptest::prelude::*;
use wtasep::dictionary::compute_irm;
use wtasep::features::FeatureExtractor;
use wtasep::mel::{to_mel, MelFilterbank};
use wtasep::wta::{pack, unpack, CodeLayout, HashCodes};
use wtasep::{
    build_dictionary, compute_ibm, generate_permutations, hash_vector, knn_cosine, knn_hamming,
    Complex64, ComplexSpectrogram, FeatureKind, FeatureMatrix, FrontendConfig, MixSpec, StftConfig,
};

/// `(M, codes)` with every code below `M`.
fn code_rows() -> impl Strategy<Value = (usize, usize, Vec<u16>, Vec<u16>)> {
    (2usize..=70, 1usize..=150).prop_flat_map(|(m, l)| {
        let code = 0..m as u16;
        (
            Just(m),
            Just(l),
            prop::collection::vec(code.clone(), l),
            prop::collection::vec(code, l),
        )
    })
}

/// Distinct-enough values: multiples of 1/8 in [-50, 50].
fn grid_vector(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((-400i32..=400).prop_map(|v| v as f64 / 8.0), d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn pack_unpack_round_trip((m, l, codes, _) in code_rows()) {
        let packed = pack(&codes, m).unwrap();
        prop_assert_eq!(packed.len(), CodeLayout::new(l, m).unwrap().words_per_row());
        prop_assert_eq!(unpack(&packed, l, m).unwrap(), codes);
    }

    #[test]
    fn packed_matches_naive((m, l, a, b) in code_rows()) {
        let layout = CodeLayout::new(l, m).unwrap();
        let naive = a.iter().zip(&b).filter(|(x, y)| x == y).count() as u32;
        prop_assert_eq!(layout.matches(&layout.pack(&a).unwrap(), &layout.pack(&b).unwrap()), naive);
    }

    #[test]
    fn codes_survive_monotone_transforms(x in grid_vector(40), seed in any::<u64>()) {
        let table = generate_permutations(seed, 50, 6, 40).unwrap();
        let base = hash_vector(&x, &table).unwrap();
        let exp: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        let cubic: Vec<f64> = x.iter().map(|v| v * v * v + v).collect();
        let shifted: Vec<f64> = x.iter().map(|v| (v + 51.0).ln_1p()).collect();
        prop_assert_eq!(hash_vector(&exp, &table).unwrap(), base.clone());
        prop_assert_eq!(hash_vector(&cubic, &table).unwrap(), base.clone());
        prop_assert_eq!(hash_vector(&shifted, &table).unwrap(), base);
    }

    #[test]
    fn tables_are_deterministic(seed in any::<u64>(), l in 1usize..60, m in 2usize..9) {
        let a = generate_permutations(seed, l, m, 40).unwrap();
        let b = generate_permutations(seed, l, m, 40).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn knn_ignores_query_scale(
        rows in prop::collection::vec(prop::collection::vec(0u8..=40, 12), 30),
        q in 0usize..30,
        shift in -4i32..=4,
    ) {
        let data: Vec<Vec<f32>> = rows.iter().map(|r| r.iter().map(|&v| v as f32 / 4.0).collect()).collect();
        let feats = FeatureMatrix::from_rows(&data, FeatureKind::Magnitude).unwrap();
        let scale = 2f32.powi(shift);
        let query = feats.row(q).to_vec();
        let scaled: Vec<f32> = query.iter().map(|v| v * scale).collect();
        prop_assert_eq!(
            knn_cosine(&query, &feats, 5).unwrap().sorted_indices(),
            knn_cosine(&scaled, &feats, 5).unwrap().sorted_indices()
        );

        let table = generate_permutations(3, 40, 4, 12).unwrap();
        let dict_codes: Vec<u16> = data.iter().flat_map(|r| hash_vector(r, &table).unwrap()).collect();
        let dict = HashCodes::from_codes(40, 4, &dict_codes).unwrap();
        let as_codes = |v: &[f32]| HashCodes::from_codes(40, 4, &hash_vector(v, &table).unwrap()).unwrap();
        let (plain, big) = (as_codes(&query), as_codes(&scaled));
        prop_assert_eq!(
            knn_hamming(plain.row(0), &dict, 5).unwrap().sorted_indices(),
            knn_hamming(big.row(0), &dict, 5).unwrap().sorted_indices()
        );
    }

    #[test]
    fn ibm_is_irm_above_half(
        speech in prop::collection::vec((0i32..64, -64i32..64), 2 * 33),
        noise in prop::collection::vec((0i32..64, -64i32..64), 2 * 33),
    ) {
        let config = StftConfig::new(64, 32).unwrap();
        let spec = |cells: &[(i32, i32)]| {
            let frames = cells
                .chunks(33)
                .map(|c| c.iter().map(|&(re, im)| Complex64::new(re as f64 / 16.0, im as f64 / 16.0)).collect())
                .collect();
            ComplexSpectrogram::from_frames(config, 8000, 96, frames).unwrap()
        };
        let (s, n) = (spec(&speech), spec(&noise));
        let ibm = compute_ibm(&s, &n).unwrap();
        let irm = compute_irm(&s, &n).unwrap();
        for t in 0..2 {
            for f in 0..33 {
                prop_assert_eq!(ibm.get(t, f), irm.row(t)[f] > 0.5, "t {} f {}", t, f);
            }
        }
    }

    #[test]
    fn mel_features_are_nonnegative(
        rows in prop::collection::vec(prop::collection::vec(0f32..100.0, 257), 1..4),
        bands in 4usize..48,
    ) {
        let mag = FeatureMatrix::from_rows(&rows, FeatureKind::Magnitude).unwrap();
        let fb = MelFilterbank::new(bands, 257, 16_000, 0.0, 8000.0).unwrap();
        let mel = to_mel(&mag, &fb).unwrap();
        prop_assert_eq!(mel.dim(), bands);
        prop_assert!(mel.as_slice().iter().all(|v| v.is_finite() && *v >= 0.0));
    }
}

#[test]
fn concatenated_dictionary_keeps_rows_aligned() {
    let sr = common::SR;
    let mut specs = common::pairs(70, 3, 5);
    // sentinel pair: noise equal to the speech, so at 0 dB |S| = |N| in every
    // bin and the strict IBM of its block is all zeros
    specs[1] = MixSpec::new(specs[1].speech.clone(), specs[1].speech.clone());
    let config = FrontendConfig::default();
    let whole = build_dictionary(&specs, &config).unwrap();
    assert_eq!(whole.len(), 15);

    for (i, spec) in specs.iter().enumerate() {
        let part = build_dictionary(std::slice::from_ref(spec), &config).unwrap();
        for t in 0..5 {
            let row = i * 5 + t;
            assert_eq!(
                whole.features().row(row),
                part.features().row(t),
                "features row {row}"
            );
            assert_eq!(whole.ibm().row(row), part.ibm().row(t), "mask row {row}");
        }
    }
    for row in 5..10 {
        assert!(
            whole.ibm().row(row).iter().all(|b| !b),
            "sentinel row {row}"
        );
    }
    assert!((0..5)
        .chain(10..15)
        .any(|row| whole.ibm().row(row).iter().any(|&b| b)));

    // features come from the mixture (twice the speech), not the clean speech
    let mix = wtasep::mix_at_snr(&specs[1]).unwrap();
    let extractor = FeatureExtractor::new(&config.features, &config.stft, sr).unwrap();
    let feats = extractor
        .extract(&wtasep::stft(&mix.mixture, &config.stft).unwrap())
        .unwrap();
    assert_eq!(feats.row(0), whole.features().row(5));
}
