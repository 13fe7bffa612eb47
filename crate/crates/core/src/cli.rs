//! Command line front-end.
//!
//! Every subcommand writes its artifacts plus a `manifest.json` recording the
//! resolved configuration, input and output paths and SHA-256 checksums.
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 I/O error.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::cooccur::{build_matrix, build_vocab, read_sentences, Vocabulary};
use crate::embed::{top_k, write_neighbors, EmbeddingView, ViewSource};
use crate::error::{Error, ErrorClass, Result};
use crate::io::{load_model, save_model, sha256_file};
use crate::model::Link;
use crate::simulate::{generate, make_init, InitSetting, SimConfig, SimSeeds};
use crate::sparse::SparseCountMatrix;
use crate::trainer::{fit, FitConfig, Init, LrSchedule, ShapeMode, SweepOrder};

#[derive(Debug, Parser)]
#[command(name = "sazig", version, about = "Zero-inflated Gamma matrix factorization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a synthetic matrix, its true parameters and an initial state.
    Simulate(SimulateArgs),
    /// Fit a model to a matrix.
    Fit(FitArgs),
    /// Build a co-occurrence matrix and vocabulary from text.
    Cooccur(CooccurArgs),
    /// List the nearest neighbors of a token.
    Similar(SimilarArgs),
    /// Write fitted vectors as a TSV table.
    Export(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SettingArg {
    /// True values except the column vectors.
    #[value(name = "1")]
    One,
    /// All values random.
    #[value(name = "2")]
    Two,
}

#[derive(Debug, clap::Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 300)]
    pub n: usize,
    #[arg(long, default_value_t = 50)]
    pub d: usize,
    #[arg(long, default_value_t = 4.0, allow_negative_numbers = true)]
    pub shape: f64,
    /// Initial state written to init.model.
    #[arg(long, value_enum, default_value = "1")]
    pub setting: SettingArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LinkArg {
    Log,
    Canonical,
}

impl From<LinkArg> for Link {
    fn from(l: LinkArg) -> Self {
        match l {
            LinkArg::Log => Link::Log,
            LinkArg::Canonical => Link::Canonical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScheduleArg {
    None,
    PowerQuarter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepArg {
    Interleaved,
    RowsThenColumns,
}

#[derive(Debug, clap::Args)]
pub struct FitArgs {
    /// Matrix in triples-v1 format.
    #[arg(long)]
    pub matrix: PathBuf,
    /// Link function [default: the checkpoint's link, else log].
    #[arg(long, value_enum)]
    pub link: Option<LinkArg>,
    #[arg(long, default_value_t = 0.5)]
    pub lr: f64,
    #[arg(long, value_enum, default_value = "power-quarter")]
    pub lr_schedule: ScheduleArg,
    /// Fisher steps per index per iteration.
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    #[arg(long, default_value_t = 60)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub epsilon: f64,
    /// `random` or a sazig-model-v1 checkpoint.
    #[arg(long, default_value = "random")]
    pub init: String,
    /// Latent dimension for a random initialization.
    #[arg(long, default_value_t = 10)]
    pub d: usize,
    /// `estimate`, `reestimate`, `init` or a fixed positive value
    /// [default: `init` with a checkpoint, else `estimate`].
    #[arg(long)]
    pub shape: Option<String>,
    #[arg(long, value_enum, default_value = "interleaved")]
    pub sweep_order: SweepArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Workers for the read-only evaluation passes.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct CooccurArgs {
    /// One sentence per line, whitespace-separated tokens.
    #[arg(long)]
    pub text: PathBuf,
    #[arg(long, default_value_t = 300)]
    pub vocab_size: usize,
    #[arg(long, default_value_t = crate::cooccur::DEFAULT_WINDOW)]
    pub window: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ViewArg {
    Row,
    Col,
    Sum,
}

impl From<ViewArg> for ViewSource {
    fn from(v: ViewArg) -> Self {
        match v {
            ViewArg::Row => ViewSource::Row,
            ViewArg::Col => ViewSource::Col,
            ViewArg::Sum => ViewSource::Sum,
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct SimilarArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    #[arg(long)]
    pub query: String,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, value_enum, default_value = "row")]
    pub view: ViewArg,
    /// Write the table here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Label lines with tokens instead of indices.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "row")]
    pub view: ViewArg,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` and runs the subcommand, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e.class() {
        ErrorClass::Validation => 2,
        ErrorClass::Runtime => 3,
        ErrorClass::Io => 4,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Fit(a) => cmd_fit(&a),
        Command::Cooccur(a) => cmd_cooccur(&a),
        Command::Similar(a) => cmd_similar(&a),
        Command::Export(a) => cmd_export(&a),
    }
}

struct Manifest {
    subcommand: &'static str,
    config: Value,
    seed: Option<u64>,
    inputs: Vec<PathBuf>,
    /// Written files; recorded by file name so runs into different
    /// directories produce identical manifests.
    outputs: Vec<PathBuf>,
}

impl Manifest {
    fn write_to(&self, path: &Path) -> Result<()> {
        let mut inputs = serde_json::Map::new();
        for p in &self.inputs {
            inputs.insert(p.display().to_string(), Value::String(sha256_file(p)?));
        }
        let mut outputs = serde_json::Map::new();
        for p in &self.outputs {
            let name = p
                .file_name()
                .map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned());
            outputs.insert(name, Value::String(sha256_file(p)?));
        }
        let doc = json!({
            "format": "sazig-manifest-v1",
            "subcommand": self.subcommand,
            "version": env!("CARGO_PKG_VERSION"),
            "seed": self.seed,
            "config": self.config,
            "inputs": inputs,
            "outputs": outputs,
        });
        let mut text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Config(e.to_string()))?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    fn write(&self, dir: &Path) -> Result<()> {
        self.write_to(&dir.join("manifest.json"))
    }
}

/// `<file>.manifest.json` next to a single output file.
fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    path.with_file_name(name)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn read_matrix(path: &Path) -> Result<SparseCountMatrix> {
    SparseCountMatrix::read_triples(BufReader::new(File::open(path)?))
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("config types serialize")
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let config = SimConfig {
        n: a.n,
        d: a.d,
        shape: a.shape,
        seeds: SimSeeds::from_base(a.seed),
        ..SimConfig::default()
    };
    config.validate()?;
    let setting = match a.setting {
        SettingArg::One => InitSetting::TrueExceptWtilde,
        SettingArg::Two => InitSetting::AllRandom,
    };
    let (y, truth) = generate(&config)?;
    let init = make_init(setting, &truth, &config)?;

    fs::create_dir_all(&a.out)?;
    let matrix = a.out.join("matrix.tsv");
    let truth_path = a.out.join("truth.model");
    let init_path = a.out.join("init.model");
    let mut w = create(&matrix)?;
    y.write_triples(&mut w)?;
    w.flush()?;
    save_model(&truth, &truth_path)?;
    save_model(&init, &init_path)?;

    Manifest {
        subcommand: "simulate",
        config: json!({ "simulation": to_value(&config), "setting": to_value(&setting) }),
        seed: Some(a.seed),
        inputs: vec![],
        outputs: vec![matrix, truth_path, init_path],
    }
    .write(&a.out)
}

fn parse_shape(raw: Option<&str>, from_checkpoint: bool) -> Result<ShapeMode> {
    match raw {
        None if from_checkpoint => Ok(ShapeMode::FromInit),
        None | Some("estimate") => Ok(ShapeMode::EstimateOnce),
        Some("reestimate") => Ok(ShapeMode::Reestimate),
        Some("init") => Ok(ShapeMode::FromInit),
        Some(v) => v
            .parse::<f64>()
            .map(ShapeMode::Fixed)
            .map_err(|_| Error::Config(format!("bad --shape '{v}'"))),
    }
}

fn cmd_fit(a: &FitArgs) -> Result<()> {
    let y = read_matrix(&a.matrix)?;
    let checkpoint = (a.init != "random").then(|| PathBuf::from(&a.init));
    let (init, default_link) = match &checkpoint {
        Some(p) => {
            let state = load_model(p)?;
            let link = state.link;
            (Init::State(state), link)
        }
        None => (Init::Random { d: a.d }, Link::Log),
    };
    let shape_mode = parse_shape(a.shape.as_deref(), checkpoint.is_some())?;
    if shape_mode == ShapeMode::FromInit && checkpoint.is_none() {
        return Err(Error::Config(
            "--shape init needs a checkpoint given with --init".into(),
        ));
    }
    let config = FitConfig {
        link: a.link.map_or(default_link, Link::from),
        max_iterations: a.max_iter,
        inner_epochs: a.epochs,
        lr: a.lr,
        lr_schedule: match a.lr_schedule {
            ScheduleArg::None => LrSchedule::None,
            ScheduleArg::PowerQuarter => LrSchedule::PowerQuarter,
        },
        epsilon: a.epsilon,
        shape_mode,
        sweep_order: match a.sweep_order {
            SweepArg::Interleaved => SweepOrder::Interleaved,
            SweepArg::RowsThenColumns => SweepOrder::RowsThenColumns,
        },
        seed: a.seed,
        threads: a.threads.max(1),
        ..FitConfig::default()
    };
    if a.threads == 0 {
        return Err(Error::Config("--threads must be at least 1".into()));
    }
    let result = fit(&y, &config, init)?;

    fs::create_dir_all(&a.out)?;
    let model = a.out.join("model.model");
    let trace = a.out.join("trace.csv");
    let diagnostics = a.out.join("diagnostics.json");
    save_model(&result.state, &model)?;
    let mut w = create(&trace)?;
    result.trace.write_csv(&mut w)?;
    w.flush()?;
    let diag = json!({
        "initial_loss": result.initial_loss,
        "final_loss": result.final_loss(),
        "iterations": result.trace.len(),
        "converged": result.converged,
        "shape": result.state.shape,
        "separation": to_value(&result.reports),
    });
    let mut text = serde_json::to_string_pretty(&diag).map_err(|e| Error::Config(e.to_string()))?;
    text.push('\n');
    fs::write(&diagnostics, text)?;

    let mut inputs = vec![a.matrix.clone()];
    inputs.extend(checkpoint);
    Manifest {
        subcommand: "fit",
        config: json!({
            "fit": to_value(&config),
            "init": a.init,
            "d": a.d,
        }),
        seed: Some(a.seed),
        inputs,
        outputs: vec![model, trace, diagnostics],
    }
    .write(&a.out)
}

fn cmd_cooccur(a: &CooccurArgs) -> Result<()> {
    let sentences = read_sentences(BufReader::new(File::open(&a.text)?))?;
    let vocab = build_vocab(&sentences, a.vocab_size)?;
    let y = build_matrix(&sentences, &vocab, a.window)?;
    if vocab.len() < a.vocab_size {
        eprintln!(
            "note: only {} distinct tokens; vocabulary size is {}",
            vocab.len(),
            vocab.len()
        );
    }
    fs::create_dir_all(&a.out)?;
    let matrix = a.out.join("matrix.tsv");
    let vocab_path = a.out.join("vocab.tsv");
    let mut w = create(&matrix)?;
    y.write_triples(&mut w)?;
    w.flush()?;
    let mut w = create(&vocab_path)?;
    vocab.write_tsv(&mut w)?;
    w.flush()?;
    Manifest {
        subcommand: "cooccur",
        config: json!({
            "vocab_size": a.vocab_size,
            "vocab_size_actual": vocab.len(),
            "window": a.window,
        }),
        seed: None,
        inputs: vec![a.text.clone()],
        outputs: vec![matrix, vocab_path],
    }
    .write(&a.out)
}

fn read_vocab(path: &Path) -> Result<Vocabulary> {
    Vocabulary::read_tsv(BufReader::new(File::open(path)?))
}

/// Vocabulary tokens within edit distance 2 of `query`, closest first.
pub fn suggestions(vocab: &Vocabulary, query: &str) -> Vec<String> {
    let mut near: Vec<(usize, &String)> = vocab
        .tokens()
        .iter()
        .map(|t| (strsim::levenshtein(query, t), t))
        .filter(|(d, _)| *d <= 2)
        .collect();
    near.sort();
    near.into_iter().map(|(_, t)| t.clone()).collect()
}

fn cmd_similar(a: &SimilarArgs) -> Result<()> {
    let state = load_model(&a.model)?;
    let vocab = read_vocab(&a.vocab)?;
    let view = EmbeddingView::from_state(&state, a.view.into())?;
    if view.len() != vocab.len() {
        return Err(Error::DimensionMismatch {
            expected: vocab.len(),
            found: view.len(),
        });
    }
    let Some(index) = vocab.index_of(&a.query) else {
        let near = suggestions(&vocab, &a.query);
        let hint = if near.is_empty() {
            "no close tokens".to_string()
        } else {
            format!("close tokens: {}", near.join(", "))
        };
        return Err(Error::Config(format!(
            "'{}' is not in the vocabulary ({hint})",
            a.query
        )));
    };
    let neighbors = top_k(&view, index, a.k)?;
    match &a.out {
        Some(p) => {
            let mut w = create(p)?;
            write_neighbors(&neighbors, Some(vocab.tokens()), &mut w)?;
            w.flush()?;
        }
        None => write_neighbors(&neighbors, Some(vocab.tokens()), std::io::stdout().lock())?,
    }
    if let Some(p) = &a.out {
        Manifest {
            subcommand: "similar",
            config: json!({ "query": a.query, "k": a.k, "view": ViewSource::from(a.view).to_string() }),
            seed: None,
            inputs: vec![a.model.clone(), a.vocab.clone()],
            outputs: vec![p.clone()],
        }
        .write_to(&sidecar(p))?;
    }
    Ok(())
}

fn cmd_export(a: &ExportArgs) -> Result<()> {
    let state = load_model(&a.model)?;
    let view = EmbeddingView::from_state(&state, a.view.into())?;
    let vocab = a.vocab.as_deref().map(read_vocab).transpose()?;
    if let Some(v) = &vocab {
        if v.len() != view.len() {
            return Err(Error::DimensionMismatch {
                expected: v.len(),
                found: view.len(),
            });
        }
    }
    let mut w = create(&a.out)?;
    view.write_tsv(vocab.as_ref().map(|v| v.tokens()), &mut w)?;
    w.flush()?;
    let mut inputs = vec![a.model.clone()];
    inputs.extend(a.vocab.clone());
    Manifest {
        subcommand: "export",
        config: json!({ "view": ViewSource::from(a.view).to_string() }),
        seed: None,
        inputs,
        outputs: vec![a.out.clone()],
    }
    .write_to(&sidecar(&a.out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_flag() {
        assert_eq!(parse_shape(None, true).unwrap(), ShapeMode::FromInit);
        assert_eq!(parse_shape(None, false).unwrap(), ShapeMode::EstimateOnce);
        assert_eq!(parse_shape(Some("2.5"), false).unwrap(), ShapeMode::Fixed(2.5));
        assert!(parse_shape(Some("big"), false).is_err());
    }

    #[test]
    fn suggestions_within_two_edits() {
        let v = Vocabulary::from_entries(vec![("house".into(), 3), ("mouse".into(), 2), ("car".into(), 1)]).unwrap();
        assert_eq!(suggestions(&v, "hose"), vec!["house".to_string(), "mouse".to_string()]);
        assert!(suggestions(&v, "zzzzzz").is_empty());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
