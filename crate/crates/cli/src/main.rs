mod commands;
mod kernel_spec;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use kernel_spec::KernelSpec;

/// Bilateral distribution compression pipeline.
#[derive(Parser, Debug)]
#[command(name = "bdc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a synthetic dataset.
    Generate(GenerateArgs),
    /// Train a linear or MLP autoencoder.
    TrainAe(TrainArgs),
    /// Build a latent compressed set from data and a trained model.
    Compress(CompressArgs),
    /// Score a compressed set against the data.
    Evaluate(EvaluateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Dataset {
    GaussianMixture,
    SwissRoll,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Projection {
    Linear,
    Tanh,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub dataset: Dataset,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Map the generated features into this many dimensions.
    #[arg(long)]
    pub ambient_dim: Option<usize>,
    #[arg(long, value_enum, default_value_t = Projection::Linear)]
    pub projection: Projection,
    /// Hidden width of the tanh projection network.
    #[arg(long, default_value_t = 100)]
    pub projection_hidden: usize,
    /// Standard deviation of the Swiss-roll response noise.
    #[arg(long, default_value_t = bdc::data::SWISS_ROLL_NOISE_SD)]
    pub noise_sd: f64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Arch {
    Linear,
    Mlp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Init {
    Pca,
    Gaussian,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub arch: Arch,
    #[arg(long)]
    pub latent_dim: usize,
    #[arg(long, default_value_t = 3)]
    pub epochs: usize,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-2)]
    pub lr: f64,
    /// `name[:lengthscale|:median]` for the ambient kernel.
    #[arg(long, default_value = "gaussian:median")]
    pub kernel: KernelSpec,
    /// Kernel on responses when `--labelled` is set.
    #[arg(long, default_value = "gaussian:median")]
    pub response_kernel: KernelSpec,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Init::Pca)]
    pub init: Init,
    /// Comma-separated hidden widths of the MLP encoder.
    #[arg(long, value_parser = parse_widths, default_value = "64")]
    pub hidden: Widths,
    /// Train on the joint feature-response discrepancy.
    #[arg(long)]
    pub labelled: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ResponseModeArg {
    Continuous,
    OneHot,
}

#[derive(Args, Debug)]
pub struct CompressArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 10)]
    pub candidates: usize,
    #[arg(long, default_value_t = 1000)]
    pub max_steps: usize,
    #[arg(long, default_value_t = 1e-2)]
    pub lr: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub grad_tol: f64,
    /// Latent kernel; `median` is computed on the encoded data.
    #[arg(long, default_value = "gaussian:median")]
    pub kernel: KernelSpec,
    #[arg(long, default_value = "gaussian:median")]
    pub response_kernel: KernelSpec,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub labelled: bool,
    #[arg(long, value_enum, default_value_t = ResponseModeArg::Continuous)]
    pub response_mode: ResponseModeArg,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub compressed: PathBuf,
    /// Ambient kernel; `median` is computed on the data.
    #[arg(long, default_value = "gaussian:median")]
    pub kernel: KernelSpec,
    /// Latent kernel when `--pullback` is absent.
    #[arg(long, default_value = "gaussian:median")]
    pub latent_kernel: KernelSpec,
    /// Use the decoder pull-back of the ambient kernel in latent space.
    #[arg(long)]
    pub pullback: bool,
    /// Mixture parameter file for exact population scoring.
    #[arg(long)]
    pub exact_mixture: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Widths(pub Vec<usize>);

fn parse_widths(s: &str) -> Result<Widths, String> {
    if s.trim().is_empty() {
        return Ok(Widths(Vec::new()));
    }
    s.split(',')
        .map(|t| match t.trim().parse::<usize>() {
            Ok(w) if w > 0 => Ok(w),
            _ => Err(format!("`{t}` is not a positive width")),
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Widths)
}

/// Marks failures caused by invalid user configuration.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<bdc::Error>() {
        Some(bdc::Error::InvalidArgument(_)) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => commands::generate(&a),
        Command::TrainAe(a) => commands::train_ae(&a),
        Command::Compress(a) => commands::compress(&a),
        Command::Evaluate(a) => commands::evaluate(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn widths() {
        assert_eq!(parse_widths("8,4").unwrap(), Widths(vec![8, 4]));
        assert!(parse_widths("3,,4").is_err());
        assert!(parse_widths("0").is_err());
    }

    #[test]
    fn exit_codes() {
        let usage = anyhow::Error::new(UsageError("x".into()));
        assert_eq!(exit_code(&usage), 2);
        let bad = anyhow::Error::new(bdc::Error::InvalidArgument("x".into()));
        assert_eq!(exit_code(&bad), 2);
        let io = anyhow::Error::new(bdc::Error::Io(std::io::Error::other("x")));
        assert_eq!(exit_code(&io), 1);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
