//! Command-line definitions and dispatch.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use becr_core::audio::{CqtConfig, StftConfig, WindowKind};
use becr_core::becr::{check, evaluate, BecrConfig, DEFAULT_EPSILON, DEFAULT_LAMBDA};
use becr_core::dispersion::{dispersion_report, DEFAULT_K, DEFAULT_M};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench;
use crate::embeddings::read_embeddings;
use crate::error::{CliError, CliResult};
use crate::report::{BecrSummary, ReportFile};
use crate::spectrogram::{self, SpectrogramMeta, SpectrogramParams};
use crate::wav::{load_wav, WavError};

/// Gradient-check failure threshold for `becr --grad-check`.
pub const GRAD_CHECK_LIMIT: f64 = 1e-4;

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "BECR_THREADS";

#[derive(Debug, Parser)]
#[command(name = "becr", version, about = "Embedding covariance regularization and dispersion tools")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dispersion metrics of an embedding CSV as a JSON report.
    Metrics(MetricsArgs),
    /// Gini index, penalty and regularized loss of an embedding CSV.
    Becr(BecrArgs),
    /// STFT, mel or constant-Q spectrogram of a WAV file as CSV.
    Spectrogram(SpectrogramArgs),
    /// Times the eigendecomposition, direct trace and Gram-trick Gini paths.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    pub input: PathBuf,
    /// Number of k-means clusters for the F-test and Calinski-Harabasz score.
    #[arg(short, long, default_value_t = DEFAULT_K)]
    pub k: usize,
    /// Leading eigenvalues in the variance ratio.
    #[arg(short, long, default_value_t = DEFAULT_M)]
    pub m: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Skip the first line of the CSV.
    #[arg(long)]
    pub header: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BecrArgs {
    pub input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
    /// Task loss the penalty is combined with.
    #[arg(long, default_value_t = 1.0)]
    pub vanilla_loss: f64,
    /// Compare the analytic gradient with central finite differences.
    #[arg(long)]
    pub grad_check: bool,
    #[arg(long)]
    pub header: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Stft,
    Mel,
    Cqt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WindowArg {
    Hann,
    Rectangular,
}

impl From<WindowArg> for WindowKind {
    fn from(w: WindowArg) -> Self {
        match w {
            WindowArg::Hann => WindowKind::Hann,
            WindowArg::Rectangular => WindowKind::Rectangular,
        }
    }
}

#[derive(Debug, Args)]
pub struct SpectrogramArgs {
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Stft)]
    pub mode: Mode,
    /// STFT window length in samples (power of two).
    #[arg(long, default_value_t = 1024)]
    pub window_size: usize,
    #[arg(long, default_value_t = 256)]
    pub hop: usize,
    #[arg(long, value_enum, default_value_t = WindowArg::Hann)]
    pub window: WindowArg,
    #[arg(long, default_value_t = 64)]
    pub n_mels: usize,
    #[arg(long, default_value_t = 0.0)]
    pub f_lo: f64,
    /// Upper mel edge in Hz; defaults to half the sample rate.
    #[arg(long)]
    pub f_hi: Option<f64>,
    #[arg(long, default_value_t = 32.70)]
    pub f_min: f64,
    #[arg(long, default_value_t = 12)]
    pub bins_per_octave: usize,
    #[arg(long, default_value_t = 84)]
    pub n_bins: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write a JSON sidecar with axis and hop metadata.
    #[arg(long)]
    pub meta: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Embedding dimensions to time.
    #[arg(long, value_delimiter = ',', default_values_t = [8usize, 64, 256, 768])]
    pub dims: Vec<usize>,
    #[arg(short, long, default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON output path; the text table always goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs a parsed command on a pool sized by [`THREADS_ENV`].
pub fn run(cli: Cli) -> CliResult<()> {
    let pool = thread_pool(std::env::var(THREADS_ENV).ok().as_deref())?;
    pool.install(|| match cli.command {
        Command::Metrics(a) => metrics(&a),
        Command::Becr(a) => becr(&a),
        Command::Spectrogram(a) => spectrogram(&a),
        Command::Bench(a) => bench_cmd(&a),
    })
}

fn thread_pool(setting: Option<&str>) -> CliResult<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(raw) = setting {
        let n: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker threads: {e}")))
}

fn load_batch(path: &Path, header: bool) -> CliResult<becr_core::linalg::EmbeddingBatch> {
    read_embeddings(path, header).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, body: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, body).map_err(|e| CliError::io(path, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(body.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::io("<stdout>", e))
        }
    }
}

fn with_newline(mut s: String) -> String {
    s.push('\n');
    s
}

pub fn metrics(args: &MetricsArgs) -> CliResult<()> {
    let batch = load_batch(&args.input, args.header)?;
    let report = dispersion_report(&batch, args.k, args.m, args.seed).map_err(CliError::from_params)?;
    let file = ReportFile::from_report(&report, args.input.display().to_string(), args.seed);
    emit(args.out.as_deref(), &with_newline(file.to_json()))
}

pub fn becr(args: &BecrArgs) -> CliResult<()> {
    let config = BecrConfig::new(args.epsilon, args.lambda).map_err(CliError::from_params)?;
    if !(args.vanilla_loss.is_finite() && args.vanilla_loss >= 0.0) {
        return Err(CliError::Usage(format!(
            "vanilla loss must be finite and nonnegative, got {}",
            args.vanilla_loss
        )));
    }
    let batch = load_batch(&args.input, args.header)?;
    let result = evaluate(&batch, &config, args.vanilla_loss).map_err(CliError::from_data)?;
    let grad_err = if args.grad_check {
        Some(check::gradient_check(&batch, &config).map_err(CliError::from_data)?)
    } else {
        None
    };
    let summary = BecrSummary {
        gini: result.gini,
        penalty: result.penalty,
        total_loss: result.total_loss,
        epsilon: config.epsilon(),
        lambda: config.lambda(),
        vanilla_loss: result.vanilla_loss,
        grad_check_max_rel_error: grad_err,
    };
    let body = serde_json::to_string_pretty(&summary).expect("summary serializes");
    emit(args.out.as_deref(), &with_newline(body))?;
    match grad_err {
        Some(e) if !(e <= GRAD_CHECK_LIMIT) => Err(CliError::Consistency(format!(
            "gradient check failed: max relative error {e:e} exceeds {GRAD_CHECK_LIMIT:e}"
        ))),
        _ => Ok(()),
    }
}

impl SpectrogramArgs {
    pub fn params(&self) -> CliResult<SpectrogramParams> {
        let p = CliError::from_params;
        let stft = || StftConfig::new(self.window_size, self.hop, self.window.into()).map_err(p);
        Ok(match self.mode {
            Mode::Stft => SpectrogramParams::Stft(stft()?),
            Mode::Mel => SpectrogramParams::Mel {
                stft: stft()?,
                n_mels: self.n_mels,
                f_lo: self.f_lo,
                f_hi: self.f_hi,
            },
            Mode::Cqt => SpectrogramParams::Cqt(
                CqtConfig::new(self.f_min, self.bins_per_octave, self.n_bins, self.window.into()).map_err(p)?,
            ),
        })
    }
}

pub fn spectrogram(args: &SpectrogramArgs) -> CliResult<()> {
    let params = args.params()?;
    let audio = load_wav(&args.input).map_err(|e| match e {
        WavError::UnsupportedFormat(_) | WavError::Parse(_) => {
            CliError::Input(format!("{}: {e}", args.input.display()))
        }
    })?;
    let spec = spectrogram::compute(&audio, &params)?;
    match &args.out {
        Some(path) => {
            let file = File::create(path).map_err(|e| CliError::io(path, e))?;
            spectrogram::write_csv(&spec, BufWriter::new(file)).map_err(|e| CliError::io(path, e))?;
        }
        None => spectrogram::write_csv(&spec, std::io::stdout().lock())
            .map_err(|e| CliError::io("<stdout>", e))?,
    }
    if let Some(path) = &args.meta {
        let meta = SpectrogramMeta::new(&spec, &params);
        let body = serde_json::to_string_pretty(&meta).expect("meta serializes");
        std::fs::write(path, with_newline(body)).map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}

pub fn bench_cmd(args: &BenchArgs) -> CliResult<()> {
    let report = bench::run(&args.dims, args.n, args.repeats, args.seed)?;
    emit(None, &report.to_table())?;
    if let Some(path) = &args.out {
        let body = serde_json::to_string_pretty(&report).expect("bench report serializes");
        std::fs::write(path, with_newline(body)).map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}
