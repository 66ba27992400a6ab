use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use wtasep::{FeatureKind, FrontendConfig, SearchMode, SeparatorParams, StftConfig, WavEncoding};

#[derive(Parser, Debug)]
#[command(
    name = "wtasep",
    version,
    about = "KNN source separation with WTA hash codes"
)]
pub struct Cli {
    /// File of `key = value` lines applied as flags of the subcommand.
    /// Flags given on the command line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Reject any run whose seed is not given explicitly.
    #[arg(long, global = true)]
    pub require_seed: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a synthetic corpus of harmonic speech and modulated noise.
    Synth(SynthArgs),
    /// Mix every speech file with every noise file and store the dictionary.
    BuildDict(BuildArgs),
    /// Denoise one recording.
    Separate(SeparateArgs),
    /// Score separation on held-out speech and noise (CSV or JSON).
    Evaluate(EvaluateArgs),
    /// Mean SDR over a grid of K and M.
    GridSearch(GridArgs),
    /// Cosine and Hamming self-affinity matrices and their rank correlation.
    HashStats(HashStatsArgs),
    /// Query throughput of the cosine scan against the packed Hamming scan.
    Bench(BenchArgs),
}

impl Command {
    pub fn seed(&self) -> Option<u64> {
        match self {
            Self::Synth(a) => a.seed,
            Self::BuildDict(a) => a.seed,
            Self::Separate(a) => a.search.seed,
            Self::Evaluate(a) => a.search.seed,
            Self::GridSearch(a) => a.seed,
            Self::HashStats(a) => a.seed,
            Self::Bench(a) => a.seed,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Feature {
    Mel,
    Stft,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Mode {
    Hamming,
    Cosine,
}

impl From<Mode> for SearchMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Hamming => SearchMode::Hamming,
            Mode::Cosine => SearchMode::Cosine,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Encoding {
    F32,
    I16,
}

impl From<Encoding> for WavEncoding {
    fn from(e: Encoding) -> Self {
        match e {
            Encoding::F32 => WavEncoding::Float32,
            Encoding::I16 => WavEncoding::Int16,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Analysis settings. Frames start at sample 0 with no padding, so a
/// signal of `n` samples yields `1 + (n - window) / hop` frames.
#[derive(Args, Debug)]
pub struct FrontendArgs {
    #[arg(long, value_enum, default_value_t = Feature::Mel)]
    pub feature: Feature,
    #[arg(long, default_value_t = 40)]
    pub mel_bands: usize,
    #[arg(long, default_value_t = 1024)]
    pub window: usize,
    #[arg(long, default_value_t = 512)]
    pub hop: usize,
}

impl FrontendArgs {
    pub fn config(&self) -> Result<FrontendConfig> {
        Ok(FrontendConfig {
            stft: StftConfig::new(self.window, self.hop)?,
            features: match self.feature {
                Feature::Mel => FeatureKind::mel(self.mel_bands),
                Feature::Stft => FeatureKind::Magnitude,
            },
        })
    }
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    #[arg(long, value_enum, default_value_t = Mode::Hamming)]
    pub mode: Mode,
    /// Neighbors that vote on each frame's mask.
    #[arg(short, long, default_value_t = 5)]
    pub k: usize,
    /// Indices compared per code position.
    #[arg(short, long, default_value_t = 6)]
    pub m: usize,
    /// Code positions per frame.
    #[arg(short, long, default_value_t = 100)]
    pub l: usize,
    /// Independent permutation tables; their masks are averaged.
    #[arg(long, default_value_t = 1)]
    pub tables: usize,
    /// Seed of the first permutation table (table i uses seed + i).
    #[arg(long)]
    pub seed: Option<u64>,
}

impl SearchArgs {
    pub fn params(&self) -> SeparatorParams {
        SeparatorParams {
            k: self.k,
            m: self.m,
            l: self.l,
            tables: self.tables,
            seed: self.seed.unwrap_or(0),
            mode: self.mode.into(),
        }
    }
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Output directory; `speech/` and `noise/` are created inside.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub speech: usize,
    #[arg(long, default_value_t = 2)]
    pub noise: usize,
    #[arg(long, default_value_t = 3.0)]
    pub seconds: f64,
    #[arg(long, default_value_t = 16_000)]
    pub sample_rate: u32,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    /// Directory of clean speech WAV files.
    #[arg(long)]
    pub speech: PathBuf,
    /// Directory of noise WAV files, each at least as long as every speech file.
    #[arg(long)]
    pub noise: PathBuf,
    /// Dictionary file to write.
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub snr: f64,
    #[command(flatten)]
    pub frontend: FrontendArgs,
    /// Store features and masks only.
    #[arg(long)]
    pub no_codes: bool,
    #[arg(short, long, default_value_t = 6)]
    pub m: usize,
    #[arg(short, long, default_value_t = 100)]
    pub l: usize,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct SeparateArgs {
    #[arg(long)]
    pub dict: PathBuf,
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = Encoding::F32)]
    pub encoding: Encoding,
    #[command(flatten)]
    pub search: SearchArgs,
}

/// Held-out material: every speech file is mixed with every noise file.
#[derive(Args, Debug)]
pub struct EvalSetArgs {
    #[arg(long)]
    pub speech: PathBuf,
    #[arg(long)]
    pub noise: PathBuf,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub snr: f64,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub dict: PathBuf,
    #[command(flatten)]
    pub set: EvalSetArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Also score the unprocessed mixture and the oracle ratio mask.
    #[arg(long)]
    pub baselines: bool,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write scores here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GridArgs {
    #[arg(long)]
    pub dict: PathBuf,
    #[command(flatten)]
    pub set: EvalSetArgs,
    #[arg(long, value_delimiter = ',', default_values_t = [1, 5, 10])]
    pub k_list: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [2, 4, 6])]
    pub m_list: Vec<usize>,
    #[arg(short, long, default_value_t = 100)]
    pub l: usize,
    #[arg(long, default_value_t = 1)]
    pub tables: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the grid here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct HashStatsArgs {
    #[arg(long)]
    pub dict: PathBuf,
    /// Directory for `cosine_affinity.csv` and `hamming_affinity.csv`.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 500)]
    pub max_frames: usize,
    #[arg(short, long, default_value_t = 6)]
    pub m: usize,
    #[arg(short, long, default_value_t = 100)]
    pub l: usize,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Dictionary with stored codes.
    #[arg(long)]
    pub dict: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub queries: usize,
    #[arg(short, long, default_value_t = 5)]
    pub k: usize,
    /// Seed for the choice of query frames.
    #[arg(long)]
    pub seed: Option<u64>,
}
