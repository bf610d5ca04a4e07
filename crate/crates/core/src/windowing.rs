//! Fixed-length windows over a frame sequence and their similarity statistics.
//!
//! Inside a window of `l` frames only every `s`-th frame is kept, and each kept
//! frame `i` from the first half is compared with frame `i + l/2`. The window is
//! summarized by the mean and population standard deviation of those scores.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantizer::CodeIndexMap;
use crate::similarity::{map_similarity, SimilarityParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    /// Frames per window (`l`), even.
    pub window_len: usize,
    /// Frames between consecutive window starts.
    pub stride: usize,
    /// Keep one frame out of every `skip`.
    pub skip: usize,
    pub fps: f64,
}

impl Default for WindowConfig {
    /// Ten-second windows at 12 fps, every fourth frame, no overlap.
    fn default() -> Self {
        Self {
            window_len: 120,
            stride: 120,
            skip: 4,
            fps: 12.0,
        }
    }
}

impl WindowConfig {
    /// Window length in frames from a duration in seconds, rounded to the
    /// nearest frame. `stride` defaults to the window length.
    pub fn from_seconds(
        window_seconds: f64,
        fps: f64,
        skip: usize,
        stride: Option<usize>,
    ) -> Result<Self> {
        if !(fps > 0.0 && fps.is_finite()) {
            return Err(Error::Config(format!("fps must be positive, got {fps}")));
        }
        if !(window_seconds > 0.0 && window_seconds.is_finite()) {
            return Err(Error::Config(format!(
                "window duration must be positive, got {window_seconds}"
            )));
        }
        let window_len = (window_seconds * fps).round() as usize;
        let cfg = Self {
            window_len,
            stride: stride.unwrap_or(window_len),
            skip,
            fps,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn half(&self) -> usize {
        self.window_len / 2
    }

    /// Number of compared frame pairs in every window.
    pub fn pairs_per_window(&self) -> usize {
        self.half() / self.skip
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.window_len;
        if l < 2 || !l.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "window length must be even and >= 2, got {l}"
            )));
        }
        if self.skip == 0 || self.skip > l / 2 || !(l / 2).is_multiple_of(self.skip) {
            return Err(Error::Config(format!(
                "skip must divide half the window ({}) and be >= 1, got {}",
                l / 2,
                self.skip
            )));
        }
        if self.stride == 0 || self.stride > l {
            return Err(Error::Config(format!(
                "stride must be in [1, {l}], got {}",
                self.stride
            )));
        }
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return Err(Error::Config(format!(
                "fps must be positive, got {}",
                self.fps
            )));
        }
        Ok(())
    }
}

/// Half-open frame range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    pub fn contains(&self, frame: usize) -> bool {
        (self.start..self.end).contains(&frame)
    }
}

/// Every full window `[k*stride, k*stride + l)` inside `n_frames`; a trailing
/// partial window is dropped.
pub fn enumerate_windows(n_frames: usize, cfg: &WindowConfig) -> Vec<Span> {
    let spans: Vec<Span> = (0..)
        .map(|k| k * cfg.stride)
        .take_while(|start| start + cfg.window_len <= n_frames)
        .map(|start| Span {
            start,
            end: start + cfg.window_len,
        })
        .collect();
    let covered = spans.last().map_or(0, |s| s.end);
    if covered < n_frames {
        log::warn!(
            "frames {covered}..{n_frames} do not fill a {}-frame window and are not scored",
            cfg.window_len
        );
    }
    spans
}

/// Frame pairs `(start + j*s, start + j*s + l/2)` for `j = 0 .. l/(2s)`.
pub fn window_pairs(span: Span, cfg: &WindowConfig) -> Vec<(usize, usize)> {
    debug_assert_eq!(span.len(), cfg.window_len);
    let half = cfg.half();
    (0..cfg.pairs_per_window())
        .map(|j| {
            let i = span.start + j * cfg.skip;
            (i, i + half)
        })
        .collect()
}

/// Random access to per-frame code maps.
pub trait MapSource: Sync {
    fn code_map(&self, frame: usize) -> Option<&CodeIndexMap>;
}

impl MapSource for [CodeIndexMap] {
    fn code_map(&self, frame: usize) -> Option<&CodeIndexMap> {
        self.get(frame)
    }
}

impl MapSource for Vec<CodeIndexMap> {
    fn code_map(&self, frame: usize) -> Option<&CodeIndexMap> {
        self.get(frame)
    }
}

impl MapSource for BTreeMap<usize, CodeIndexMap> {
    fn code_map(&self, frame: usize) -> Option<&CodeIndexMap> {
        self.get(&frame)
    }
}

impl MapSource for HashMap<usize, CodeIndexMap> {
    fn code_map(&self, frame: usize) -> Option<&CodeIndexMap> {
        self.get(&frame)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowScore {
    pub span: Span,
    pub mean: f64,
    pub std: f64,
    pub pair_scores: Vec<f64>,
}

impl WindowScore {
    pub fn point(&self) -> [f64; 2] {
        [self.mean, self.std]
    }
}

/// Arithmetic mean and population standard deviation; `(0, 0)` when empty.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    // offset from the first value so constant input gives exactly (v, 0)
    let origin = values[0];
    let mean = origin + values.iter().map(|v| v - origin).sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn score_window<M: MapSource + ?Sized>(
    maps: &M,
    span: Span,
    cfg: &WindowConfig,
    params: &SimilarityParams,
) -> Result<WindowScore> {
    if span.len() != cfg.window_len {
        return Err(Error::Shape(format!(
            "span {}..{} does not have the window length {}",
            span.start, span.end, cfg.window_len
        )));
    }
    let lookup = |frame: usize| {
        maps.code_map(frame)
            .ok_or_else(|| Error::Data(format!("no code map for frame {frame}")))
    };
    let pair_scores = window_pairs(span, cfg)
        .into_iter()
        .map(|(a, b)| map_similarity(lookup(a)?, lookup(b)?, params))
        .collect::<Result<Vec<f64>>>()?;
    let (mean, std) = mean_std(&pair_scores);
    Ok(WindowScore {
        span,
        mean,
        std,
        pair_scores,
    })
}

/// Scores every window of a sequence, ordered by window start.
pub fn score_windows<M: MapSource + ?Sized>(
    maps: &M,
    n_frames: usize,
    cfg: &WindowConfig,
    params: &SimilarityParams,
) -> Result<Vec<WindowScore>> {
    cfg.validate()?;
    params.validate()?;
    enumerate_windows(n_frames, cfg)
        .into_par_iter()
        .map(|span| score_window(maps, span, cfg, params))
        .collect()
}

/// Frame indices whose code maps are read when scoring `n_frames` frames.
pub fn required_frames(n_frames: usize, cfg: &WindowConfig) -> Vec<usize> {
    let mut frames: Vec<usize> = enumerate_windows(n_frames, cfg)
        .into_iter()
        .flat_map(|span| window_pairs(span, cfg))
        .flat_map(|(a, b)| [a, b])
        .collect();
    frames.sort_unstable();
    frames.dedup();
    frames
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(window_len: usize, stride: usize, skip: usize) -> WindowConfig {
        WindowConfig {
            window_len,
            stride,
            skip,
            fps: 12.0,
        }
    }

    fn spans(pairs: &[(usize, usize)]) -> Vec<Span> {
        pairs
            .iter()
            .map(|&(start, end)| Span { start, end })
            .collect()
    }

    #[test]
    fn windows_tile_exactly() {
        assert_eq!(
            enumerate_windows(360, &cfg(120, 120, 4)),
            spans(&[(0, 120), (120, 240), (240, 360)])
        );
        assert!(enumerate_windows(119, &cfg(120, 120, 4)).is_empty());
        assert_eq!(
            enumerate_windows(300, &cfg(120, 60, 4)),
            spans(&[(0, 120), (60, 180), (120, 240), (180, 300)])
        );
    }

    #[test]
    fn pairs_for_default_config() {
        let c = WindowConfig::default();
        let pairs = window_pairs(Span { start: 0, end: 120 }, &c);
        assert_eq!(pairs.len(), 15);
        assert_eq!(pairs[0], (0, 60));
        assert_eq!(pairs[1], (4, 64));
        assert_eq!(pairs[14], (56, 116));
    }

    #[test]
    fn pairs_small_windows() {
        assert_eq!(
            window_pairs(Span { start: 10, end: 12 }, &cfg(2, 2, 1)),
            vec![(10, 11)]
        );
        assert_eq!(
            window_pairs(Span { start: 0, end: 8 }, &cfg(8, 8, 2)),
            vec![(0, 4), (2, 6)]
        );
    }

    #[test]
    fn config_validation() {
        assert!(cfg(121, 121, 1).validate().is_err());
        assert!(cfg(120, 120, 7).validate().is_err());
        assert!(cfg(120, 121, 4).validate().is_err());
        assert!(cfg(120, 0, 4).validate().is_err());
        assert!(cfg(8, 8, 4).validate().is_ok());
        assert!(cfg(8, 8, 0).validate().is_err());
    }

    #[test]
    fn seconds_to_frames() {
        let c = WindowConfig::from_seconds(10.0, 12.0, 4, None).unwrap();
        assert_eq!((c.window_len, c.stride), (120, 120));
        let c = WindowConfig::from_seconds(10.0, 29.97, 1, Some(50)).unwrap();
        assert_eq!((c.window_len, c.stride), (300, 50));
        assert!(WindowConfig::from_seconds(10.0, 0.0, 4, None).is_err());
    }

    #[test]
    fn mean_std_examples() {
        assert_eq!(mean_std(&[0.8; 15]), (0.8, 0.0));
        assert_eq!(mean_std(&[0.0, 1.0]), (0.5, 0.5));
        assert_eq!(mean_std(&[0.4]), (0.4, 0.0));
    }

    #[test]
    fn required_frames_are_the_paired_ones() {
        let frames = required_frames(20, &cfg(8, 8, 2));
        assert_eq!(frames, vec![0, 2, 4, 6, 8, 10, 12, 14]);
    }

    #[test]
    fn missing_map_names_frame() {
        let m = CodeIndexMap::new(1, 1, 4, vec![0]).unwrap();
        let mut maps = BTreeMap::new();
        maps.insert(0usize, m.clone());
        maps.insert(1usize, m);
        let err = score_window(
            &maps,
            Span { start: 0, end: 4 },
            &cfg(4, 4, 1),
            &SimilarityParams {
                grid_rows: 1,
                grid_cols: 1,
                n_top: 1,
                delta_sim: 1,
            },
        )
        .unwrap_err();
        assert!(err.to_string().contains("frame 2"), "{err}");
    }
}
