use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gasketlab::ModeRequest;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "gasketlab", version, about = "Harmonic analysis on inhomogeneous Sierpinski gaskets")]
pub struct Cli {
    /// Worker threads (falls back to GASKETLAB_THREADS, then all cores).
    #[arg(long, global = true, env = "GASKETLAB_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Renormalisation factor r of the level-l subdivision, as p/q.
    Renorm(RenormArgs),
    /// Eigenstructure of the corner extension matrix.
    Spectra(RenormArgs),
    /// Admissible words of a depth with r_w and mu_w (CSV).
    Words(WordsArgs),
    /// Rank statistics of the energy-measure densities.
    DimEstimate(DimEstimateArgs),
    /// Energy / relative-capacity balance constants.
    VerifyA3(VerifyA3Args),
    /// Relative or point capacity below a word.
    Capacity(CapacityArgs),
    /// Blow-up cloud and density grid of a harmonic pair.
    Blowup(BlowupArgs),
    /// Hausdorff dimension lower bounds.
    Hausdorff(HausdorffArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Auto,
    Exact,
    Float,
}

impl From<ModeArg> for ModeRequest {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Auto => ModeRequest::Auto,
            ModeArg::Exact => ModeRequest::Exact,
            ModeArg::Float => ModeRequest::Float,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct RenormArgs {
    #[arg(long)]
    pub dim: usize,
    #[arg(long)]
    pub level: usize,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SpecArgs {
    /// Gasket specification (JSON).
    #[arg(long)]
    pub spec: PathBuf,
    /// Maximum number of words per depth.
    #[arg(long, default_value_t = gasketlab::gasket::DEFAULT_WORD_BUDGET)]
    pub budget: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct ModeArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    pub mode: ModeArg,
    /// Largest problem size solved exactly in auto mode.
    #[arg(long, default_value_t = 50_000)]
    pub exact_threshold: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct WordsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub spec: SpecArgs,
    #[arg(long)]
    pub depth: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct DimEstimateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub spec: SpecArgs,
    #[arg(long)]
    pub depth: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub eps: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub delta: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub mode: ModeArgs,
    /// Per-cell CSV of the final depth.
    #[arg(long)]
    pub cells_csv: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CornerArgs {
    /// Corner-chain length N; defaults to the smallest N with decay factor c.
    #[arg(long)]
    pub corner_depth: Option<usize>,
    /// Decay factor c as p/q; defaults to 1/(2(d+1)).
    #[arg(long)]
    pub decay: Option<String>,
    #[arg(long, default_value_t = 40)]
    pub max_corner_depth: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyA3Args {
    #[command(flatten)]
    #[serde(flatten)]
    pub spec: SpecArgs,
    /// Depth of the sampled words.
    #[arg(long)]
    pub depth: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub corner: CornerArgs,
    /// Harmonic functions per word.
    #[arg(long, default_value_t = 64)]
    pub samples: usize,
    #[arg(long, default_value_t = 16)]
    pub max_words: usize,
    #[arg(long, default_value_t = 8)]
    pub points: usize,
    #[arg(long, default_value_t = 1)]
    pub refinement: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub mode: ModeArgs,
    /// Per-sample CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CapacityArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub spec: SpecArgs,
    /// Base word, e.g. "2^2.1^3"; empty for the whole gasket.
    #[arg(long, default_value = "")]
    pub word: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub corner: CornerArgs,
    #[arg(long, default_value_t = 2)]
    pub refinement: usize,
    /// Vertex id in the depth-N network below the word; omitted for the
    /// inner-set capacity.
    #[arg(long)]
    pub vertex: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub mode: ModeArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct BlowupArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub spec: SpecArgs,
    #[arg(long, default_value = "")]
    pub word: String,
    /// Depth of the subcells below the word.
    #[arg(long)]
    pub depth: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub corner: CornerArgs,
    #[arg(long, default_value_t = 1)]
    pub refinement: usize,
    /// Boundary data of the pair as "a,b,c;x,y,z" (entries p/q or decimal);
    /// defaults to the first two standard basis directions.
    #[arg(long)]
    pub basis: Option<String>,
    #[arg(long, default_value_t = 64)]
    pub resolution: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub mode: ModeArgs,
    #[arg(long)]
    pub cloud_csv: Option<PathBuf>,
    #[arg(long)]
    pub grid_csv: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct HausdorffArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
