use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use wtasep::dictionary::Mixture;
use wtasep::{mix_at_snr, read_wav, AudioBuffer, MixSpec};

use crate::usage;

pub struct Clip {
    pub id: String,
    pub audio: AudioBuffer,
}

/// `.wav` files of `dir` in name order.
pub fn wav_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry?.path();
        let is_wav = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("wav"));
        if is_wav && path.is_file() {
            files.push(path);
        }
    }
    if files.is_empty() {
        return Err(usage(format!("no input files in {}", dir.display())));
    }
    files.sort();
    Ok(files)
}

pub fn load_dir(dir: &Path) -> Result<Vec<Clip>> {
    wav_files(dir)?
        .into_iter()
        .map(|path| {
            let audio = read_wav(&path).with_context(|| format!("reading {}", path.display()))?;
            let id = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok(Clip { id, audio })
        })
        .collect()
}

/// Every speech clip paired with every noise clip, speech-major.
pub fn pairs(speech: &[Clip], noise: &[Clip], snr_db: f64) -> Vec<(String, String, MixSpec)> {
    speech
        .iter()
        .flat_map(|s| {
            noise.iter().map(move |n| {
                let spec = MixSpec::new(s.audio.clone(), n.audio.clone()).with_snr(snr_db);
                (s.id.clone(), n.id.clone(), spec)
            })
        })
        .collect()
}

pub struct EvalItem {
    pub utterance_id: String,
    pub noise_id: String,
    pub speech: AudioBuffer,
    pub mix: Mixture,
}

pub fn eval_set(speech_dir: &Path, noise_dir: &Path, snr_db: f64) -> Result<Vec<EvalItem>> {
    let (speech, noise) = (load_dir(speech_dir)?, load_dir(noise_dir)?);
    pairs(&speech, &noise, snr_db)
        .into_iter()
        .map(|(utterance_id, noise_id, spec)| {
            let mix = mix_at_snr(&spec)
                .with_context(|| format!("mixing {utterance_id} with {noise_id}"))?;
            Ok(EvalItem {
                utterance_id,
                noise_id,
                speech: spec.speech,
                mix,
            })
        })
        .collect()
}
