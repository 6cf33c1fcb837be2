mod commands;
mod records;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Multi-sensor visual grounding runtime: camera, radar and a text prompt
/// in; boxes and a mask out.
#[derive(Debug, Parser)]
#[command(name = "nanomvg", version, arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the model on one image/radar/prompt triple.
    Infer(InferArgs),
    /// Collapse the mask-head multi-branch blocks of an archive.
    FuseRep(FuseArgs),
    /// Score prediction files against ground truth.
    Eval(EvalArgs),
    /// Energy-normalised performance from a trace.
    Mept(MeptArgs),
    /// Check the runtime against the brute-force references.
    Selftest(SelftestArgs),
    /// Write a seeded archive and a matching synthetic scene.
    GenFixtures(GenArgs),
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Key-value run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Weight archive.
    #[arg(long)]
    weights: PathBuf,
    #[arg(long)]
    topk: Option<usize>,
    #[arg(long)]
    score_thresh: Option<f32>,
    #[arg(long)]
    mask_thresh: Option<f32>,
    /// Softmax-normalise the fusion similarity.
    #[arg(long)]
    attention_normalize: bool,
    /// Fuse the mask-head blocks before running.
    #[arg(long, conflicts_with = "train_mode")]
    fused: bool,
    /// Require multi-branch mask-head weights.
    #[arg(long)]
    train_mode: bool,
    /// Vocabulary file, one token per line; defaults to the built-in one.
    #[arg(long)]
    vocab: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct InferArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// RGB raster (PPM/PGM).
    #[arg(long)]
    image: PathBuf,
    /// Radar planes: `.rf32` raw planar floats or a PPM.
    #[arg(long)]
    radar: PathBuf,
    /// Text file holding the prompt.
    #[arg(long)]
    prompt: PathBuf,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct FuseArgs {
    input: PathBuf,
    output: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Predicted box records, one file per query.
    #[arg(long = "pred")]
    preds: Vec<PathBuf>,
    /// Ground-truth box records, paired with `--pred` in order.
    #[arg(long = "gt")]
    gts: Vec<PathBuf>,
    #[arg(long = "pred-mask")]
    pred_masks: Vec<PathBuf>,
    #[arg(long = "gt-mask")]
    gt_masks: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct MeptArgs {
    /// CSV with `sample_id,energy_trained,energy_untrained`.
    #[arg(long)]
    trace: PathBuf,
    /// Performance values to average.
    #[arg(long = "perf", required = true)]
    perf: Vec<f64>,
    /// Evaluation count; defaults to the number of rows.
    #[arg(long)]
    tau: Option<usize>,
}

#[derive(Debug, Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InitArg {
    Random,
    Zero,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Input side in pixels; multiple of 32.
    #[arg(long, default_value_t = 640)]
    size: usize,
    #[arg(long, value_enum, default_value = "random")]
    init: InitArg,
    /// Base configuration; `input_size` is replaced by `--size`.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match cli.command {
        Command::Infer(a) => commands::infer(a),
        Command::FuseRep(a) => commands::fuse_rep(a),
        Command::Eval(a) => commands::eval(a),
        Command::Mept(a) => commands::mept(a),
        Command::Selftest(a) => selftest::run(a.seed),
        Command::GenFixtures(a) => commands::gen_fixtures(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
