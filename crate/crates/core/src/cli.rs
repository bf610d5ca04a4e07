//! Command-line front end.
//!
//! Exit codes: 0 success, 1 internal failure, 2 bad input or configuration.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evaluation::report;
use crate::io;
use crate::pipeline::{
    encode_frame, load_frames, plot_csv, run_detection, train_from_frames, FrameSize,
    PipelineConfig, PredictionFile,
};
use crate::similarity::compare_maps;
use crate::windowing::{required_frames, WindowConfig};

/// `HxW` pair such as `4x4` or `5x5`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub first: usize,
    pub second: usize,
}

impl FromStr for Dims {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (a, b) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("expected AxB, got {s:?}"))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("{t:?} is not a positive integer"))
        };
        Ok(Dims {
            first: parse(a)?,
            second: parse(b)?,
        })
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "seadsc",
    version,
    about = "Unsupervised dynamic scene-change detection"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a patch codebook to a directory of frames.
    TrainCodebook(TrainArgs),
    /// Quantize every frame into a code map.
    Encode(EncodeArgs),
    /// Score windows, cluster them and write a prediction file.
    Detect(DetectArgs),
    /// Compare a prediction file with ground truth.
    Evaluate(EvaluateArgs),
    /// Print the grid similarity of two code maps.
    ScorePair(ScorePairArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Pipeline configuration JSON; explicit flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub frames: PathBuf,
    /// Patch size as HxW.
    #[arg(long)]
    pub patch: Option<Dims>,
    #[arg(long)]
    pub codebook_size: Option<usize>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    /// Fit-and-pad frames to WxH before patching, e.g. 960x600.
    #[arg(long)]
    pub resize: Option<Dims>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub frames: PathBuf,
    #[arg(long)]
    pub codebook: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub patch: Option<Dims>,
    #[arg(long)]
    pub resize: Option<Dims>,
    #[command(flatten)]
    pub common: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct SimilarityArgs {
    /// Grid as ROWSxCOLS.
    #[arg(long)]
    pub grid: Option<Dims>,
    #[arg(long)]
    pub n_top: Option<usize>,
    #[arg(long)]
    pub delta_sim: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub maps: PathBuf,
    /// Window duration in seconds, converted with --fps.
    #[arg(long, conflicts_with = "window_frames")]
    pub window_sec: Option<f64>,
    #[arg(long)]
    pub window_frames: Option<usize>,
    #[arg(long)]
    pub fps: Option<f64>,
    #[arg(long)]
    pub skip: Option<usize>,
    /// Defaults to the window length (no overlap).
    #[arg(long)]
    pub stride_frames: Option<usize>,
    #[command(flatten)]
    pub similarity: SimilarityArgs,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Z-score the (mean, std) axes before clustering.
    #[arg(long)]
    pub standardize: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write window_start,window_end,mean,std,label rows to this file.
    #[arg(long)]
    pub emit_plot_csv: Option<PathBuf>,
    #[command(flatten)]
    pub common: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScorePairArgs {
    #[arg(long)]
    pub map_a: PathBuf,
    #[arg(long)]
    pub map_b: PathBuf,
    #[command(flatten)]
    pub similarity: SimilarityArgs,
}

fn base_config(common: &ConfigArgs) -> Result<PipelineConfig> {
    let mut cfg = match &common.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.set_seed(seed);
    }
    Ok(cfg)
}

fn apply_patch_resize(cfg: &mut PipelineConfig, patch: Option<Dims>, resize: Option<Dims>) {
    if let Some(p) = patch {
        cfg.encoder.patch_height = p.first;
        cfg.encoder.patch_width = p.second;
    }
    if let Some(r) = resize {
        cfg.resize = Some(FrameSize {
            width: r.first,
            height: r.second,
        });
    }
}

fn apply_similarity(cfg: &mut PipelineConfig, args: &SimilarityArgs) {
    if let Some(g) = args.grid {
        cfg.similarity.grid_rows = g.first;
        cfg.similarity.grid_cols = g.second;
    }
    if let Some(n) = args.n_top {
        cfg.similarity.n_top = n;
    }
    if let Some(d) = args.delta_sim {
        cfg.similarity.delta_sim = d;
    }
}

fn path_string(p: &Path) -> Option<String> {
    Some(p.to_string_lossy().into_owned())
}

fn train(args: &TrainArgs) -> Result<()> {
    let mut cfg = base_config(&args.common)?;
    apply_patch_resize(&mut cfg, args.patch, args.resize);
    if let Some(n) = args.codebook_size {
        cfg.codebook.size = n;
    }
    if let Some(n) = args.max_iters {
        cfg.codebook.max_iters = n;
    }
    if let Some(t) = args.rel_tol {
        cfg.codebook.rel_tol = t;
    }
    cfg.validate()?;

    let frames: Vec<_> = load_frames(&args.frames, cfg.resize)?
        .into_iter()
        .map(|(_, f)| f)
        .collect();
    let trained = train_from_frames(&frames, &cfg)?;
    for (i, d) in trained.distortion.iter().enumerate() {
        println!("iter {i:>3}  distortion {d:.6e}");
    }
    io::write_codebook(&args.out, &trained.codebook)?;
    println!(
        "wrote {} entries of dimension {} to {} ({})",
        trained.codebook.n_entries(),
        trained.codebook.dim(),
        args.out.display(),
        if trained.converged {
            "converged"
        } else {
            "iteration cap reached"
        }
    );
    Ok(())
}

fn encode(args: &EncodeArgs) -> Result<()> {
    let mut cfg = base_config(&args.common)?;
    apply_patch_resize(&mut cfg, args.patch, args.resize);
    cfg.validate()?;
    let codebook = io::read_codebook(&args.codebook)?;
    let files = io::list_numbered(&args.frames, &["pgm", "ppm"])?;
    if files.is_empty() {
        return Err(Error::Data(format!(
            "no .pgm or .ppm frames in {}",
            args.frames.display()
        )));
    }
    std::fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;
    files.par_iter().try_for_each(|f| {
        let frame = crate::pipeline::prepare_frame(io::read_frame(&f.path)?, cfg.resize)?;
        let map = encode_frame(&frame, &cfg.encoder, &codebook)
            .map_err(|e| Error::Shape(format!("{}: {e}", f.path.display())))?;
        io::write_code_map(&args.out_dir.join(format!("{}.sdcm", f.stem)), &map)
    })?;
    println!(
        "encoded {} frames into {}",
        files.len(),
        args.out_dir.display()
    );
    Ok(())
}

fn detect_cmd(args: &DetectArgs) -> Result<()> {
    let mut cfg = base_config(&args.common)?;
    let fps = args.fps.unwrap_or(cfg.window.fps);
    let skip = args.skip.unwrap_or(cfg.window.skip);
    // without an explicit length the configured duration is kept
    let seconds = args
        .window_sec
        .unwrap_or(cfg.window.window_len as f64 / cfg.window.fps);
    let window_len = match args.window_frames {
        Some(l) => l,
        None => WindowConfig::from_seconds(seconds, fps, skip, None)?.window_len,
    };
    let stride_default = if window_len == cfg.window.window_len {
        cfg.window.stride
    } else {
        window_len
    };
    cfg.window = WindowConfig {
        window_len,
        stride: args.stride_frames.unwrap_or(stride_default),
        skip,
        fps,
    };
    apply_similarity(&mut cfg, &args.similarity);
    if let Some(n) = args.max_iters {
        cfg.detector.max_iters = n;
    }
    if args.standardize {
        cfg.detector.standardize = true;
    }
    cfg.paths.maps = path_string(&args.maps);
    cfg.paths.prediction = path_string(&args.out);
    cfg.validate()?;

    let files = io::list_numbered(&args.maps, &["sdcm"])?;
    let n_frames = files.len();
    let needed = required_frames(n_frames, &cfg.window);
    if needed.is_empty() {
        return Err(Error::Data(format!(
            "no complete windows: {n_frames} code maps in {} but a window needs {}",
            args.maps.display(),
            cfg.window.window_len
        )));
    }
    let loaded: Vec<(usize, crate::quantizer::CodeIndexMap)> = needed
        .par_iter()
        .map(|&i| Ok((i, io::read_code_map(&files[i].path)?)))
        .collect::<Result<_>>()?;
    let reference = &loaded[0];
    if let Some((i, m)) = loaded
        .iter()
        .find(|(_, m)| m.shape() != reference.1.shape())
    {
        return Err(Error::Shape(format!(
            "{} is {}x{} but {} is {}x{}",
            files[*i].path.display(),
            m.height(),
            m.width(),
            files[reference.0].path.display(),
            reference.1.height(),
            reference.1.width()
        )));
    }
    let maps: std::collections::BTreeMap<_, _> = loaded.into_iter().collect();

    let output = run_detection(&maps, n_frames, &cfg)?;
    let prediction = PredictionFile::new(&output, &cfg);
    prediction.write(&args.out)?;
    if let Some(path) = &args.emit_plot_csv {
        io::write_atomic(path, plot_csv(&output)?.as_bytes())?;
    }

    let changed = prediction
        .windows
        .iter()
        .filter(|w| w.label == crate::label::Label::Changed)
        .count();
    if prediction.degenerate {
        eprintln!("warning: degenerate clustering, all windows share the same statistics");
    }
    println!(
        "windows: {} total, {} changed, {} not_changed; wrote {}",
        prediction.windows.len(),
        changed,
        prediction.windows.len() - changed,
        args.out.display()
    );
    Ok(())
}

fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let prediction = PredictionFile::read(&args.pred)?;
    let predicted = prediction.frame_labels()?;
    let truth = io::read_ground_truth(&args.gt)?;
    let result = report(&truth, &predicted)?;
    if let Some(path) = &args.report {
        let json = serde_json::to_string_pretty(&result)? + "\n";
        io::write_atomic(path, json.as_bytes())?;
    }
    print!("{result}");
    Ok(())
}

fn score_pair(args: &ScorePairArgs) -> Result<()> {
    let mut cfg = PipelineConfig::default();
    apply_similarity(&mut cfg, &args.similarity);
    cfg.similarity.validate()?;
    let a = io::read_code_map(&args.map_a)?;
    let b = io::read_code_map(&args.map_b)?;
    let breakdown = compare_maps(&a, &b, &cfg.similarity)?;
    println!(
        "score {:.4} ({}/{} cells)",
        breakdown.score(),
        breakdown.similar_cells(),
        breakdown.similar.len()
    );
    for row in breakdown.similar.chunks(breakdown.grid_cols) {
        let line: Vec<&str> = row.iter().map(|&s| if s { "1" } else { "0" }).collect();
        println!("{}", line.join(" "));
    }
    Ok(())
}

fn configure_threads() {
    if let Some(n) = std::env::var("SEADSC_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        // a pool may already exist when called repeatedly in-process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    configure_threads();
    match &cli.command {
        Command::TrainCodebook(a) => train(a),
        Command::Encode(a) => encode(a),
        Command::Detect(a) => detect_cmd(a),
        Command::Evaluate(a) => evaluate(a),
        Command::ScorePair(a) => score_pair(a),
    }
}

/// Parses `args`, runs the command and maps the outcome to an exit code.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match std::panic::catch_unwind(|| execute(&cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(_) => ExitCode::from(1),
    }
}
