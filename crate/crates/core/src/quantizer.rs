//! Frame projection onto a discrete codebook.
//!
//! Frames are cut into non-overlapping patches, each patch is flattened into a
//! feature vector and replaced by the index of its nearest codebook entry. The
//! resulting [`CodeIndexMap`] is the representation every later stage works on.
//!
//! Codebooks start from a small symmetric uniform distribution and can be fit
//! to patch data with Lloyd iteration, which minimizes the squared
//! reconstruction error when codes live in patch-pixel space. The losses of a
//! vector-quantized autoencoder are evaluated as plain values; stop-gradient
//! only matters for differentiation and has no effect here.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest codebook whose indices still fit the on-disk `u16` code maps.
pub const MAX_CODEBOOK_ENTRIES: usize = 1 << 16;

/// An image with channel-interleaved, row-major pixels normalized to `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    channels: usize,
    pixels: Vec<f32>,
}

impl Frame {
    pub fn new(width: usize, height: usize, channels: usize, pixels: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Shape(format!("empty frame {width}x{height}")));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::Shape(format!(
                "frames have 1 or 3 channels, got {channels}"
            )));
        }
        let expected = width * height * channels;
        if pixels.len() != expected {
            return Err(Error::Shape(format!(
                "pixel buffer holds {} values, expected {width}x{height}x{channels} = {expected}",
                pixels.len()
            )));
        }
        if let Some(pos) = pixels.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "non-finite pixel value at offset {pos}"
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            pixels,
        })
    }

    /// A frame with every component set to `value`.
    pub fn filled(width: usize, height: usize, channels: usize, value: f32) -> Result<Self> {
        Self::new(
            width,
            height,
            channels,
            vec![value; width * height * channels],
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f32> {
        self.pixels
    }

    pub fn get(&self, row: usize, col: usize, channel: usize) -> f32 {
        self.pixels[(row * self.width + col) * self.channels + channel]
    }

    fn same_shape(&self, other: &Frame) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }
}

/// Patch geometry of the deterministic patch encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncoderConfig {
    pub patch_height: usize,
    pub patch_width: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            patch_height: 4,
            patch_width: 4,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patch_height == 0 || self.patch_width == 0 {
            return Err(Error::Config(format!(
                "patch dimensions must be >= 1, got {}x{}",
                self.patch_height, self.patch_width
            )));
        }
        Ok(())
    }

    pub fn feature_dim(&self, channels: usize) -> usize {
        self.patch_height * self.patch_width * channels
    }
}

/// Feature vectors laid out on a `rows x cols` spatial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGrid {
    rows: usize,
    cols: usize,
    dim: usize,
    data: Vec<f32>,
}

impl FeatureGrid {
    pub fn new(rows: usize, cols: usize, dim: usize, data: Vec<f32>) -> Result<Self> {
        if dim == 0 || data.len() != rows * cols * dim {
            return Err(Error::Shape(format!(
                "feature buffer of {} values does not match {rows}x{cols} vectors of dim {dim}",
                data.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            dim,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn vector(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vectors(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }
}

/// `n_entries` code vectors of dimension `dim`, stored entry-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    n_entries: usize,
    dim: usize,
    seed: u64,
    entries: Vec<f32>,
}

impl Codebook {
    pub fn new(n_entries: usize, dim: usize, seed: u64, entries: Vec<f32>) -> Result<Self> {
        check_codebook_size(n_entries, dim)?;
        if entries.len() != n_entries * dim {
            return Err(Error::Shape(format!(
                "codebook buffer holds {} values, expected {n_entries}x{dim}",
                entries.len()
            )));
        }
        if let Some(pos) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::Corruption(format!(
                "non-finite codebook component at offset {pos}"
            )));
        }
        Ok(Self {
            n_entries,
            dim,
            seed,
            entries,
        })
    }

    pub fn n_entries(&self) -> usize {
        self.n_entries
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn entry(&self, index: usize) -> &[f32] {
        &self.entries[index * self.dim..(index + 1) * self.dim]
    }

    pub fn entries(&self) -> impl Iterator<Item = &[f32]> {
        self.entries.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.entries
    }

    /// Index and squared distance of the nearest entry; ties go to the lowest index.
    pub fn nearest(&self, v: &[f32]) -> (usize, f64) {
        debug_assert_eq!(v.len(), self.dim);
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for (k, e) in self.entries().enumerate() {
            let d = squared_distance(v, e);
            if d < best_dist {
                best = k;
                best_dist = d;
            }
        }
        (best, best_dist)
    }

    /// Concatenated code vectors selected by `map`, in map order.
    pub fn gather(&self, map: &CodeIndexMap) -> Result<Vec<f32>> {
        self.check_map(map)?;
        let mut out = Vec::with_capacity(map.len() * self.dim);
        for &idx in map.indices() {
            out.extend_from_slice(self.entry(idx as usize));
        }
        Ok(out)
    }

    fn check_map(&self, map: &CodeIndexMap) -> Result<()> {
        if let Some((pos, &idx)) = map
            .indices()
            .iter()
            .enumerate()
            .find(|(_, &i)| i as usize >= self.n_entries)
        {
            return Err(Error::Corruption(format!(
                "code index {idx} at position {pos} is out of range for a codebook of {} entries",
                self.n_entries
            )));
        }
        Ok(())
    }
}

fn check_codebook_size(n_entries: usize, dim: usize) -> Result<()> {
    if !(2..=MAX_CODEBOOK_ENTRIES).contains(&n_entries) {
        return Err(Error::Config(format!(
            "codebook size must be in [2, {MAX_CODEBOOK_ENTRIES}], got {n_entries}"
        )));
    }
    if dim == 0 {
        return Err(Error::Config("codebook dimension must be >= 1".into()));
    }
    Ok(())
}

/// Grid of code indices produced by quantizing one frame.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CodeIndexMap {
    height: usize,
    width: usize,
    n_entries: usize,
    indices: Vec<u16>,
}

impl CodeIndexMap {
    pub fn new(height: usize, width: usize, n_entries: usize, indices: Vec<u16>) -> Result<Self> {
        if indices.len() != height * width {
            return Err(Error::Shape(format!(
                "code map holds {} indices, expected {height}x{width}",
                indices.len()
            )));
        }
        if n_entries == 0 || n_entries > MAX_CODEBOOK_ENTRIES {
            return Err(Error::Corruption(format!(
                "code map references a codebook of {n_entries} entries"
            )));
        }
        if let Some((pos, &idx)) = indices
            .iter()
            .enumerate()
            .find(|(_, &i)| i as usize >= n_entries)
        {
            return Err(Error::Corruption(format!(
                "code index {idx} at position {pos} is not below n_entries {n_entries}"
            )));
        }
        Ok(Self {
            height,
            width,
            n_entries,
            indices,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn n_entries(&self) -> usize {
        self.n_entries
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[u16] {
        &self.indices
    }

    pub fn get(&self, row: usize, col: usize) -> u16 {
        self.indices[row * self.width + col]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }
}

/// Commitment weight of the vector-quantization loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossConfig {
    pub beta: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self { beta: 0.25 }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::Config(format!(
                "beta must be >= 0, got {}",
                self.beta
            )));
        }
        Ok(())
    }
}

/// Draws a codebook with every component i.i.d. uniform on `(-1/n, 1/n)`.
pub fn init_codebook(n_entries: usize, dim: usize, seed: u64) -> Result<Codebook> {
    check_codebook_size(n_entries, dim)?;
    let half_width = 1.0 / n_entries as f64;
    let bound = half_width as f32;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries = (0..n_entries * dim)
        .map(|_| loop {
            let u: f64 = rng.gen();
            let v = ((2.0 * u - 1.0) * half_width) as f32;
            // open interval, including after rounding to f32
            if v.abs() < bound {
                break v;
            }
        })
        .collect();
    Codebook::new(n_entries, dim, seed, entries)
}

/// Cuts `frame` into non-overlapping patches and flattens each one in
/// (row, col, channel) order.
pub fn extract_features(frame: &Frame, cfg: &EncoderConfig) -> Result<FeatureGrid> {
    cfg.validate()?;
    let (ph, pw) = (cfg.patch_height, cfg.patch_width);
    if !frame.height.is_multiple_of(ph) || !frame.width.is_multiple_of(pw) {
        return Err(Error::Shape(format!(
            "frame {}x{} (height x width) is not divisible by patch {ph}x{pw}",
            frame.height, frame.width
        )));
    }
    let rows = frame.height / ph;
    let cols = frame.width / pw;
    let c = frame.channels;
    let dim = cfg.feature_dim(c);
    let mut data = Vec::with_capacity(rows * cols * dim);
    for pr in 0..rows {
        for pc in 0..cols {
            for r in pr * ph..(pr + 1) * ph {
                let start = (r * frame.width + pc * pw) * c;
                data.extend_from_slice(&frame.pixels[start..start + pw * c]);
            }
        }
    }
    FeatureGrid::new(rows, cols, dim, data)
}

/// Replaces every feature vector with the index of its nearest codebook entry.
pub fn quantize(features: &FeatureGrid, codebook: &Codebook) -> Result<CodeIndexMap> {
    if features.dim != codebook.dim {
        return Err(Error::Shape(format!(
            "feature dimension {} does not match codebook dimension {}",
            features.dim, codebook.dim
        )));
    }
    let indices = features
        .data
        .par_chunks_exact(features.dim)
        .map(|v| codebook.nearest(v).0 as u16)
        .collect();
    CodeIndexMap::new(features.rows, features.cols, codebook.n_entries, indices)
}

/// Tiles the selected code vectors back into a frame, one patch per code.
pub fn reconstruct(map: &CodeIndexMap, codebook: &Codebook, cfg: &EncoderConfig) -> Result<Frame> {
    cfg.validate()?;
    let (ph, pw) = (cfg.patch_height, cfg.patch_width);
    let area = ph * pw;
    if !codebook.dim.is_multiple_of(area) {
        return Err(Error::Shape(format!(
            "codebook dimension {} is not a multiple of patch area {ph}x{pw}",
            codebook.dim
        )));
    }
    let channels = codebook.dim / area;
    codebook.check_map(map)?;
    let height = map.height * ph;
    let width = map.width * pw;
    let mut pixels = vec![0.0f32; height * width * channels];
    for pr in 0..map.height {
        for pc in 0..map.width {
            let code = codebook.entry(map.get(pr, pc) as usize);
            for (dr, row) in code.chunks_exact(pw * channels).enumerate() {
                let start = ((pr * ph + dr) * width + pc * pw) * channels;
                pixels[start..start + pw * channels].copy_from_slice(row);
            }
        }
    }
    Frame::new(width, height, channels, pixels)
}

/// Squared L2 distance between a frame and its reconstruction, summed over
/// all components.
pub fn reconstruction_loss(x: &Frame, x_hat: &Frame) -> Result<f64> {
    if !x.same_shape(x_hat) {
        return Err(Error::Shape(format!(
            "cannot compare {}x{}x{} frame with {}x{}x{} reconstruction",
            x.width, x.height, x.channels, x_hat.width, x_hat.height, x_hat.channels
        )));
    }
    Ok(squared_distance(&x.pixels, &x_hat.pixels))
}

/// Codebook term plus `beta`-weighted commitment term. Both terms share the
/// same value because stop-gradient is the identity in the forward pass.
pub fn vq_loss(encoder_out: &[f32], selected_codes: &[f32], cfg: &LossConfig) -> Result<f64> {
    cfg.validate()?;
    if encoder_out.len() != selected_codes.len() {
        return Err(Error::Shape(format!(
            "encoder output has {} values but selected codes have {}",
            encoder_out.len(),
            selected_codes.len()
        )));
    }
    let codebook_term = squared_distance(encoder_out, selected_codes);
    let commitment_term = squared_distance(selected_codes, encoder_out);
    Ok(codebook_term + cfg.beta * commitment_term)
}

pub fn total_loss(
    x: &Frame,
    x_hat: &Frame,
    encoder_out: &[f32],
    selected_codes: &[f32],
    cfg: &LossConfig,
) -> Result<f64> {
    Ok(reconstruction_loss(x, x_hat)? + vq_loss(encoder_out, selected_codes, cfg)?)
}

pub(crate) fn squared_distance(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&p, &q)| {
            let d = p as f64 - q as f64;
            d * d
        })
        .sum()
}

/// Lloyd training parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub n_entries: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub rel_tol: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            n_entries: 512,
            seed: 42,
            max_iters: 100,
            rel_tol: 1e-6,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be >= 1".into()));
        }
        if !(self.rel_tol >= 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::Config(format!(
                "rel_tol must be a finite value >= 0, got {}",
                self.rel_tol
            )));
        }
        check_codebook_size(self.n_entries, 1)
    }
}

#[derive(Debug, Clone)]
pub struct TrainedCodebook {
    pub codebook: Codebook,
    /// Total squared quantization error of the training vectors, one value per
    /// assignment step. The last value belongs to the returned codebook.
    pub distortion: Vec<f64>,
    pub converged: bool,
}

/// Fits a codebook to `vectors` (row-major, `dim` values each) by Lloyd
/// iteration starting from [`init_codebook`].
///
/// Clusters that lose all their points are reseeded to the vectors farthest
/// from their updated centroid, so the entry count never shrinks.
pub fn train_codebook(vectors: &[f32], dim: usize, cfg: &TrainConfig) -> Result<TrainedCodebook> {
    cfg.validate()?;
    if dim == 0 || !vectors.len().is_multiple_of(dim) {
        return Err(Error::Shape(format!(
            "training buffer of {} values is not a whole number of {dim}-dim vectors",
            vectors.len()
        )));
    }
    if vectors.is_empty() {
        return Err(Error::Data("no training vectors".into()));
    }
    if let Some(pos) = vectors.iter().position(|v| !v.is_finite()) {
        return Err(Error::Data(format!(
            "non-finite training value at offset {pos}"
        )));
    }
    let n_points = vectors.len() / dim;
    let k = cfg.n_entries;
    if n_points < k {
        log::warn!("training on {n_points} vectors for a codebook of {k} entries");
    }

    let mut codebook = init_codebook(k, dim, cfg.seed)?;
    let mut distortion = Vec::new();
    let mut converged = false;

    for iter in 0..cfg.max_iters {
        let assignment: Vec<(usize, f64)> = vectors
            .par_chunks_exact(dim)
            .map(|v| codebook.nearest(v))
            .collect();
        let total: f64 = assignment.iter().map(|&(_, d)| d).sum();
        let previous = distortion.last().copied();
        distortion.push(total);

        if total == 0.0 {
            converged = true;
            break;
        }
        if let Some(prev) = previous {
            if prev - total <= cfg.rel_tol * prev {
                converged = true;
                break;
            }
        }
        if iter + 1 == cfg.max_iters {
            break;
        }
        codebook = lloyd_update(vectors, dim, &assignment, &codebook);
    }

    Ok(TrainedCodebook {
        codebook,
        distortion,
        converged,
    })
}

fn lloyd_update(
    vectors: &[f32],
    dim: usize,
    assignment: &[(usize, f64)],
    current: &Codebook,
) -> Codebook {
    let k = current.n_entries;
    let mut sums = vec![0.0f64; k * dim];
    let mut counts = vec![0usize; k];
    for (v, &(cluster, _)) in vectors.chunks_exact(dim).zip(assignment) {
        counts[cluster] += 1;
        for (s, &x) in sums[cluster * dim..(cluster + 1) * dim].iter_mut().zip(v) {
            *s += x as f64;
        }
    }

    let mut entries = current.entries.clone();
    let mut empty = Vec::new();
    for c in 0..k {
        if counts[c] == 0 {
            empty.push(c);
            continue;
        }
        let n = counts[c] as f64;
        for (e, s) in entries[c * dim..(c + 1) * dim]
            .iter_mut()
            .zip(&sums[c * dim..(c + 1) * dim])
        {
            *e = (s / n) as f32;
        }
    }

    if !empty.is_empty() {
        let spread: Vec<f64> = vectors
            .par_chunks_exact(dim)
            .zip(assignment.par_iter())
            .map(|(v, &(c, _))| squared_distance(v, &entries[c * dim..(c + 1) * dim]))
            .collect();
        let mut order: Vec<usize> = (0..spread.len()).collect();
        order.sort_by(|&a, &b| spread[b].total_cmp(&spread[a]).then(a.cmp(&b)));

        let mut chosen: Vec<usize> = Vec::with_capacity(empty.len());
        let mut candidates = order.iter().copied();
        for &c in &empty {
            let pick = candidates.by_ref().find(|&p| {
                let v = &vectors[p * dim..(p + 1) * dim];
                chosen
                    .iter()
                    .all(|&q| &vectors[q * dim..(q + 1) * dim] != v)
            });
            // fewer distinct vectors than entries: reuse the farthest point
            let p = pick.unwrap_or(order[0]);
            chosen.push(p);
            entries[c * dim..(c + 1) * dim].copy_from_slice(&vectors[p * dim..(p + 1) * dim]);
        }
    }

    Codebook {
        n_entries: k,
        dim,
        seed: current.seed,
        entries,
    }
}
