//! End-to-end flow: frames to codebook, frames to code maps, code maps to
//! window labels, and the prediction document tying them together.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::{detect, frames_from_windows, Detection, DetectorConfig, Point};
use crate::error::{Error, Result};
use crate::io::{self, NumberedFile};
use crate::label::Label;
use crate::quantizer::{
    extract_features, quantize, train_codebook, CodeIndexMap, Codebook, EncoderConfig, Frame,
    LossConfig, TrainConfig, TrainedCodebook,
};
use crate::similarity::SimilarityParams;
use crate::windowing::{score_windows, MapSource, WindowConfig, WindowScore};

pub const TOOL_NAME: &str = "seadsc";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameSize {
    pub width: usize,
    pub height: usize,
}

/// Lloyd settings for codebook training; the seed comes from the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodebookSettings {
    pub size: usize,
    pub max_iters: usize,
    pub rel_tol: f64,
}

impl Default for CodebookSettings {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            size: t.n_entries,
            max_iters: t.max_iters,
            rel_tol: t.rel_tol,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    pub frames: Option<String>,
    pub codebook: Option<String>,
    pub maps: Option<String>,
    pub prediction: Option<String>,
}

/// Every tunable of the pipeline. Serialized verbatim into prediction files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub encoder: EncoderConfig,
    /// Fit-and-pad every frame to this size before encoding.
    pub resize: Option<FrameSize>,
    pub codebook: CodebookSettings,
    pub loss: LossConfig,
    pub similarity: SimilarityParams,
    pub window: WindowConfig,
    pub detector: DetectorConfig,
    pub paths: PathsConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            encoder: EncoderConfig::default(),
            resize: None,
            codebook: CodebookSettings::default(),
            loss: LossConfig::default(),
            similarity: SimilarityParams::default(),
            window: WindowConfig::default(),
            detector: DetectorConfig::default(),
            paths: PathsConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.encoder.validate()?;
        self.train_config().validate()?;
        self.loss.validate()?;
        self.similarity.validate()?;
        self.window.validate()?;
        self.detector.validate()?;
        if self.detector.seed != self.seed {
            return Err(Error::Config(format!(
                "detector.seed ({}) must equal seed ({})",
                self.detector.seed, self.seed
            )));
        }
        if let Some(size) = self.resize {
            if size.width == 0 || size.height == 0 {
                return Err(Error::Config(format!(
                    "resize target must be non-empty, got {}x{}",
                    size.width, size.height
                )));
            }
        }
        Ok(())
    }

    /// Sets the pipeline seed and the detector seed together.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.detector.seed = seed;
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            n_entries: self.codebook.size,
            seed: self.seed,
            max_iters: self.codebook.max_iters,
            rel_tol: self.codebook.rel_tol,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Applies the optional resize to a decoded frame.
pub fn prepare_frame(frame: Frame, resize: Option<FrameSize>) -> Result<Frame> {
    match resize {
        Some(size) => io::resize_pad(&frame, size.width, size.height),
        None => Ok(frame),
    }
}

/// Reads every `.pgm`/`.ppm` in `dir` in frame-number order.
pub fn load_frames(dir: &Path, resize: Option<FrameSize>) -> Result<Vec<(NumberedFile, Frame)>> {
    let files = io::list_numbered(dir, &["pgm", "ppm"])?;
    if files.is_empty() {
        return Err(Error::Data(format!(
            "no .pgm or .ppm frames in {}",
            dir.display()
        )));
    }
    files
        .into_par_iter()
        .map(|f| {
            let frame = prepare_frame(io::read_frame(&f.path)?, resize)?;
            Ok((f, frame))
        })
        .collect()
}

/// Fits a codebook to the patches of all `frames`.
pub fn train_from_frames(frames: &[Frame], cfg: &PipelineConfig) -> Result<TrainedCodebook> {
    let first = frames
        .first()
        .ok_or_else(|| Error::Data("no frames to train on".into()))?;
    let mut data = Vec::new();
    let mut dim = 0;
    for (i, frame) in frames.iter().enumerate() {
        if frame.channels() != first.channels() {
            return Err(Error::Shape(format!(
                "frame {i} has {} channels but frame 0 has {}",
                frame.channels(),
                first.channels()
            )));
        }
        let features = extract_features(frame, &cfg.encoder)?;
        dim = features.dim();
        data.extend_from_slice(features.as_slice());
    }
    train_codebook(&data, dim, &cfg.train_config())
}

pub fn encode_frame(
    frame: &Frame,
    encoder: &EncoderConfig,
    codebook: &Codebook,
) -> Result<CodeIndexMap> {
    let dim = encoder.feature_dim(frame.channels());
    if dim != codebook.dim() {
        return Err(Error::Shape(format!(
            "codebook dimension {} does not match patch {}x{}x{} = {dim}",
            codebook.dim(),
            encoder.patch_height,
            encoder.patch_width,
            frame.channels()
        )));
    }
    quantize(&extract_features(frame, encoder)?, codebook)
}

/// Window statistics, their clustering and the per-frame projection.
#[derive(Debug, Clone)]
pub struct DetectionOutput {
    pub n_frames: usize,
    pub scores: Vec<WindowScore>,
    pub detection: Detection,
    pub frame_labels: Vec<Label>,
}

pub fn run_detection<M: MapSource + ?Sized>(
    maps: &M,
    n_frames: usize,
    cfg: &PipelineConfig,
) -> Result<DetectionOutput> {
    cfg.validate()?;
    let scores = score_windows(maps, n_frames, &cfg.window, &cfg.similarity)?;
    if scores.is_empty() {
        return Err(Error::Data(format!(
            "no complete windows: {n_frames} frames is shorter than the {}-frame window",
            cfg.window.window_len
        )));
    }
    let detection = if scores.len() == 1 {
        // one window cannot be clustered; it is compared with nothing
        single_window(&scores[0])
    } else {
        detect(&scores, &cfg.detector)?
    };
    let frame_labels = frames_from_windows(&detection.windows, n_frames);
    Ok(DetectionOutput {
        n_frames,
        scores,
        detection,
        frame_labels,
    })
}

fn single_window(score: &WindowScore) -> Detection {
    log::warn!("only one complete window; treating clusters as degenerate");
    let point = score.point();
    let fit = crate::detector::KMeansFit {
        centroids: [point, point],
        assignments: vec![0],
        inertia: vec![0.0],
        converged: true,
        degenerate: true,
    };
    let names = crate::detector::name_clusters(&fit.centroids);
    let windows = vec![crate::detector::WindowLabel {
        span: score.span,
        label: names[0],
        cluster: 0,
        distance_to_centroid: 0.0,
    }];
    Detection {
        fit,
        names,
        windows,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedWindow {
    pub start: usize,
    pub end: usize,
    pub mean: f64,
    pub std: f64,
    pub cluster: usize,
    pub label: Label,
}

/// A run of identically labelled frames, `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRun {
    pub start: usize,
    pub end: usize,
    pub label: Label,
}

pub fn run_length_encode(labels: &[Label]) -> Vec<LabelRun> {
    let mut runs: Vec<LabelRun> = Vec::new();
    for (i, &label) in labels.iter().enumerate() {
        match runs.last_mut() {
            Some(run) if run.label == label => run.end = i + 1,
            _ => runs.push(LabelRun {
                start: i,
                end: i + 1,
                label,
            }),
        }
    }
    runs
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub centroid: Point,
    pub label: Label,
}

/// The JSON document written by `detect`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionFile {
    pub tool: String,
    pub version: String,
    /// Seconds since the Unix epoch; the only field that varies between
    /// identical runs.
    pub generated_at: u64,
    pub seed: u64,
    pub config: PipelineConfig,
    pub n_frames: usize,
    pub degenerate: bool,
    pub clusters: Vec<ClusterSummary>,
    pub windows: Vec<PredictedWindow>,
    pub frames: Vec<LabelRun>,
}

impl PredictionFile {
    pub fn new(output: &DetectionOutput, config: &PipelineConfig) -> Self {
        let det = &output.detection;
        let windows = output
            .scores
            .iter()
            .zip(&det.windows)
            .map(|(s, w)| PredictedWindow {
                start: s.span.start,
                end: s.span.end,
                mean: s.mean,
                std: s.std,
                cluster: w.cluster,
                label: w.label,
            })
            .collect();
        let clusters = det
            .fit
            .centroids
            .iter()
            .zip(det.names)
            .map(|(&centroid, label)| ClusterSummary { centroid, label })
            .collect();
        let generated_at = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        Self {
            tool: TOOL_NAME.to_owned(),
            version: TOOL_VERSION.to_owned(),
            generated_at,
            seed: config.seed,
            config: config.clone(),
            n_frames: output.n_frames,
            degenerate: det.fit.degenerate,
            clusters,
            windows,
            frames: run_length_encode(&output.frame_labels),
        }
    }

    /// Per-frame labels decoded from the run-length list, checking that the
    /// runs tile `[0, n_frames)`.
    pub fn frame_labels(&self) -> Result<Vec<Label>> {
        let mut labels = Vec::with_capacity(self.n_frames);
        for run in &self.frames {
            if run.start != labels.len() || run.end <= run.start {
                return Err(Error::Data(format!(
                    "frame runs are not contiguous at {}..{}",
                    run.start, run.end
                )));
            }
            labels.resize(run.end, run.label);
        }
        if labels.len() != self.n_frames {
            return Err(Error::Data(format!(
                "frame runs cover {} frames but n_frames is {}",
                labels.len(),
                self.n_frames
            )));
        }
        Ok(labels)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let pred: Self = serde_json::from_str(&text)?;
        pred.config.validate()?;
        if pred.windows.windows(2).any(|w| w[0].start > w[1].start) {
            return Err(Error::Data(
                "prediction windows are not sorted by start".into(),
            ));
        }
        Ok(pred)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        io::write_atomic(path, self.to_json()?.as_bytes())
    }
}

/// `window_start,window_end,mean,std,label` rows for plotting.
pub fn plot_csv(output: &DetectionOutput) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["window_start", "window_end", "mean", "std", "label"])?;
    for (s, l) in output.scores.iter().zip(&output.detection.windows) {
        w.write_record([
            s.span.start.to_string(),
            s.span.end.to_string(),
            s.mean.to_string(),
            s.std.to_string(),
            l.label.to_string(),
        ])?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Data(format!("csv buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
