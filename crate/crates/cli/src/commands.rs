use std::borrow::Cow;
use std::fs;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use wtasep::affinity::{affinity_correlation, cosine_affinity, hamming_affinity, subsample_frames};
use wtasep::knn::CosineIndex;
use wtasep::rng::SeededRng;
use wtasep::separator::oracle_irm;
use wtasep::synth::{self, NoiseProfile, SpeechProfile};
use wtasep::{
    bss_eval, build_dictionary, generate_permutations, hash_matrix, knn_hamming, read_wav,
    write_wav, FeatureKind, NeighborSet, SearchMode, SeparationDictionary, Separator,
    SeparatorParams, WavEncoding,
};

use crate::args::{
    BenchArgs, BuildArgs, EvaluateArgs, GridArgs, HashStatsArgs, SeparateArgs, SynthArgs,
};
use crate::inputs::{eval_set, load_dir, pairs, EvalItem};
use crate::report::{sink, write_matrix, write_rows, ScoreRow};
use crate::usage;

fn load_dict(path: &std::path::Path) -> Result<SeparationDictionary> {
    SeparationDictionary::load(path).with_context(|| format!("loading {}", path.display()))
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

pub fn synth(a: SynthArgs) -> Result<()> {
    if a.seconds.is_nan() || a.seconds <= 0.0 || a.speech == 0 || a.noise == 0 {
        return Err(usage("--seconds, --speech and --noise must be positive"));
    }
    let seed = a.seed.unwrap_or(0);
    let len = (a.seconds * a.sample_rate as f64).round() as usize;
    let (speech_dir, noise_dir) = (a.out.join("speech"), a.out.join("noise"));
    fs::create_dir_all(&speech_dir)?;
    fs::create_dir_all(&noise_dir)?;
    for i in 0..a.speech as u64 {
        let clip = synth::speech(
            seed.wrapping_add(i),
            len,
            a.sample_rate,
            &SpeechProfile::default(),
        );
        write_wav(
            speech_dir.join(format!("speech_{i:03}.wav")),
            &clip,
            WavEncoding::Float32,
        )?;
    }
    for i in 0..a.noise as u64 {
        let noise_seed = (seed ^ 0x9e37_79b9).wrapping_add(i);
        let clip = synth::noise(noise_seed, len, a.sample_rate, &NoiseProfile::default());
        write_wav(
            noise_dir.join(format!("noise_{i:03}.wav")),
            &clip,
            WavEncoding::Float32,
        )?;
    }
    println!(
        "wrote {} speech and {} noise clips of {len} samples to {}",
        a.speech,
        a.noise,
        a.out.display()
    );
    Ok(())
}

pub fn build_dict(a: BuildArgs) -> Result<()> {
    let config = a.frontend.config()?;
    let speech = load_dir(&a.speech)?;
    let noise = load_dir(&a.noise)?;
    let specs: Vec<_> = pairs(&speech, &noise, a.snr)
        .into_iter()
        .map(|(_, _, s)| s)
        .collect();
    let mut dict = build_dictionary(&specs, &config)?;
    if !a.no_codes {
        dict.attach_codes(a.seed.unwrap_or(0), a.l, a.m)?;
    }
    dict.save(&a.out)
        .with_context(|| format!("writing {}", a.out.display()))?;
    let size = fs::metadata(&a.out)?.len();

    let kind = match dict.feature_kind() {
        FeatureKind::Mel(_) => "mel",
        FeatureKind::Magnitude => "stft",
    };
    println!("pairs: {}", specs.len());
    println!("frames (T): {}", dict.len());
    println!("feature dim (D): {} ({kind})", dict.dim());
    println!("bins (F): {}", dict.n_bins());
    println!("size on disk: {size} bytes");
    let float_bytes = dict.feature_bytes_per_frame();
    match (dict.codes(), dict.code_bytes_per_frame()) {
        (Some(codes), Some(code_bytes)) => {
            println!(
                "codes: L = {}, M = {}, seed = {}",
                codes.l(),
                codes.m(),
                codes.seed
            );
            println!(
                "bytes per frame: features {float_bytes}, codes {code_bytes} ({:.1}x smaller)",
                float_bytes as f64 / code_bytes as f64
            );
        }
        _ => println!("bytes per frame: features {float_bytes}, codes not stored"),
    }
    Ok(())
}

pub fn separate(a: SeparateArgs) -> Result<()> {
    let dict = load_dict(&a.dict)?;
    let mixture = read_wav(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let separator = Separator::new(&dict, &a.search.params())?;
    let result = separator.separate(&mixture)?;
    write_wav(&a.output, &result.audio, a.encoding.into())
        .with_context(|| format!("writing {}", a.output.display()))?;
    let r = &result.report;
    println!(
        "mode: {}, frames: {}, tables: {}",
        separator.mode(),
        r.frames,
        r.tables
    );
    println!(
        "features {:.2} ms, hash {:.2} ms, search {:.2} ms, reconstruct {:.2} ms",
        ms(r.feature_time),
        ms(r.hash_time),
        ms(r.search_time),
        ms(r.reconstruct_time)
    );
    Ok(())
}

fn score_row(
    item: &EvalItem,
    mode: &str,
    params: Option<&SeparatorParams>,
    est: &wtasep::AudioBuffer,
) -> Result<ScoreRow> {
    let s = bss_eval(est, &item.speech, &item.mix.scaled_noise)?;
    let hashed = params.filter(|p| p.mode == SearchMode::Hamming);
    Ok(ScoreRow {
        utterance_id: item.utterance_id.clone(),
        noise_id: item.noise_id.clone(),
        mode: mode.to_string(),
        k: params.map(|p| p.k),
        m: hashed.map(|p| p.m),
        l: hashed.map(|p| p.l),
        sdr: s.sdr,
        sir: s.sir,
        sar: s.sar,
    })
}

pub fn evaluate(a: EvaluateArgs) -> Result<()> {
    let dict = load_dict(&a.dict)?;
    let items = eval_set(&a.set.speech, &a.set.noise, a.set.snr)?;
    let params = a.search.params();
    let separator = Separator::new(&dict, &params)?;
    let mode = params.mode.to_string();
    let mut rows = Vec::new();
    for item in &items {
        let est = separator.separate(&item.mix.mixture)?.audio;
        rows.push(score_row(item, &mode, Some(&params), &est)?);
        if a.baselines {
            rows.push(score_row(item, "mixture", None, &item.mix.mixture)?);
            let oracle = oracle_irm(
                &item.mix.mixture,
                &item.speech,
                &item.mix.scaled_noise,
                dict.stft_config(),
            )?;
            rows.push(score_row(item, "oracle", None, &oracle)?);
        }
    }
    write_rows(&rows, a.format, sink(a.output.as_deref())?)
}

fn mean_sdr(separator: &Separator<'_>, items: &[EvalItem]) -> Result<f64> {
    let mut total = 0.0;
    for item in items {
        let est = separator.separate(&item.mix.mixture)?.audio;
        total += bss_eval(&est, &item.speech, &item.mix.scaled_noise)?.sdr;
    }
    Ok(total / items.len() as f64)
}

/// Cells that fail, for instance with K larger than the dictionary, are
/// written as `error` and the grid continues.
pub fn grid_search(a: GridArgs) -> Result<()> {
    if a.k_list.is_empty() || a.m_list.is_empty() {
        return Err(usage("--k-list and --m-list must not be empty"));
    }
    let dict = load_dict(&a.dict)?;
    let items = eval_set(&a.set.speech, &a.set.noise, a.set.snr)?;
    let mut w = csv::Writer::from_writer(sink(a.output.as_deref())?);
    w.write_record(["K", "M", "L", "mean_sdr"])?;
    let mut best: Option<(usize, usize, f64)> = None;
    for &k in &a.k_list {
        for &m in &a.m_list {
            let params = SeparatorParams {
                k,
                m,
                l: a.l,
                tables: a.tables,
                seed: a.seed.unwrap_or(0),
                mode: SearchMode::Hamming,
            };
            let value = Separator::new(&dict, &params)
                .map_err(anyhow::Error::from)
                .and_then(|s| mean_sdr(&s, &items));
            let text = match value {
                Ok(v) => {
                    if best.is_none_or(|(_, _, b)| v > b) {
                        best = Some((k, m, v));
                    }
                    v.to_string()
                }
                Err(e) => {
                    eprintln!("K = {k}, M = {m}: {e:#}");
                    "error".to_string()
                }
            };
            w.write_record([k.to_string(), m.to_string(), a.l.to_string(), text])?;
        }
    }
    w.flush()?;
    match best {
        Some((k, m, v)) => eprintln!("best: K = {k}, M = {m}, mean SDR {v:.2} dB"),
        None => bail!("every grid cell failed"),
    }
    Ok(())
}

pub fn hash_stats(a: HashStatsArgs) -> Result<()> {
    if a.max_frames < 2 {
        return Err(usage("--max-frames must be at least 2"));
    }
    let dict = load_dict(&a.dict)?;
    let seed = a.seed.unwrap_or(0);
    let codes = match dict.codes() {
        Some(c) if c.seed == seed && c.l() == a.l && c.m() == a.m => Cow::Borrowed(&c.codes),
        _ => {
            let table = generate_permutations(seed, a.l, a.m, dict.dim())?;
            Cow::Owned(hash_matrix(dict.features(), &table)?)
        }
    };
    let frames = subsample_frames(dict.len(), a.max_frames);
    let cos = cosine_affinity(dict.features(), &frames);
    let ham = hamming_affinity(&codes, &frames);
    let rho = affinity_correlation(&cos, &ham)?;

    fs::create_dir_all(&a.out_dir)?;
    write_matrix(&a.out_dir.join("cosine_affinity.csv"), &frames, |i, j| {
        cos.get(i, j)
    })?;
    write_matrix(&a.out_dir.join("hamming_affinity.csv"), &frames, |i, j| {
        ham.get(i, j)
    })?;
    println!("frames: {}", frames.len());
    println!("spearman: {rho:.6}");
    Ok(())
}

/// FNV-1a over the neighbor indices of every query, in order.
fn digest(sets: &[NeighborSet]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for set in sets {
        for &i in set.indices().iter().chain([&usize::MAX]) {
            for b in (i as u64).to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
    }
    h
}

pub fn bench(a: BenchArgs) -> Result<()> {
    if a.queries == 0 {
        return Err(usage("--queries must be positive"));
    }
    let dict = load_dict(&a.dict)?;
    let Some(codes) = dict.codes() else {
        bail!(
            "{} has no stored codes; rebuild it without --no-codes",
            a.dict.display()
        );
    };
    let codes = &codes.codes;
    let mut rng = SeededRng::new(a.seed.unwrap_or(0));
    let queries: Vec<usize> = (0..a.queries)
        .map(|_| rng.below(dict.len() as u64) as usize)
        .collect();

    let index = CosineIndex::new(dict.features());
    let clock = Instant::now();
    let cosine = queries
        .iter()
        .map(|&q| index.search(dict.features().row(q), a.k))
        .collect::<wtasep::Result<Vec<_>>>()?;
    let cosine_time = clock.elapsed();

    let clock = Instant::now();
    let hamming = queries
        .iter()
        .map(|&q| knn_hamming(codes.row(q), codes, a.k))
        .collect::<wtasep::Result<Vec<_>>>()?;
    let hamming_time = clock.elapsed();

    let qps = |d: Duration| a.queries as f64 / d.as_secs_f64().max(1e-9);
    let code_bytes = dict.code_bytes_per_frame().unwrap_or_default();
    println!(
        "frames (T): {}, feature dim (D): {}, queries: {}, K = {}",
        dict.len(),
        dict.dim(),
        a.queries,
        a.k
    );
    println!(
        "bytes per frame: features {}, codes {code_bytes}",
        dict.feature_bytes_per_frame()
    );
    println!(
        "cosine: {:.1} queries/s, digest {:016x}",
        qps(cosine_time),
        digest(&cosine)
    );
    println!(
        "hamming: {:.1} queries/s, digest {:016x}",
        qps(hamming_time),
        digest(&hamming)
    );
    Ok(())
}
