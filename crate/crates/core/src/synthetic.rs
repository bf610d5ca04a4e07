//! Seeded synthetic sequences with a known change point.
//!
//! The static part repeats one textured frame. The changing part scrolls a
//! wide mosaic of flat-toned blocks across the frame, so frames half a window
//! apart share almost no content.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::label::Label;
use crate::quantizer::Frame;

/// Frames plus the label that generated each of them.
#[derive(Debug, Clone)]
pub struct SyntheticVideo {
    pub frames: Vec<Frame>,
    pub labels: Vec<Label>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    /// Side of the square mosaic blocks, in pixels.
    pub block: usize,
    /// Number of distinct gray levels in the mosaics.
    pub tones: usize,
    /// Horizontal scroll of the moving mosaic per frame, in pixels.
    pub speed: usize,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            width: 80,
            height: 60,
            block: 4,
            tones: 16,
            speed: 4,
        }
    }
}

fn tone(level: usize, tones: usize) -> f32 {
    if tones <= 1 {
        return 0.0;
    }
    (-0.9 + 1.8 * level as f64 / (tones - 1) as f64) as f32
}

/// A `cols x rows` grid of random tone levels.
fn mosaic(cols: usize, rows: usize, tones: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    (0..cols * rows).map(|_| rng.gen_range(0..tones)).collect()
}

fn render(spec: &SceneSpec, levels: &[usize], mosaic_cols: usize, offset: usize) -> Result<Frame> {
    let mut pixels = Vec::with_capacity(spec.width * spec.height);
    for r in 0..spec.height {
        let br = r / spec.block;
        for c in 0..spec.width {
            let bc = (c + offset) / spec.block % mosaic_cols;
            pixels.push(tone(levels[br * mosaic_cols + bc], spec.tones));
        }
    }
    Frame::new(spec.width, spec.height, 1, pixels)
}

/// `n_static` identical frames followed by `n_moving` frames of a scrolling
/// mosaic, grayscale.
pub fn static_then_moving(
    n_static: usize,
    n_moving: usize,
    spec: &SceneSpec,
    seed: u64,
) -> Result<SyntheticVideo> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = spec.height.div_ceil(spec.block);
    let static_cols = spec.width.div_ceil(spec.block);
    let background = mosaic(static_cols, rows, spec.tones, &mut rng);
    let still = render(spec, &background, static_cols, 0)?;

    let travel = spec.width + spec.speed * n_moving;
    let moving_cols = travel.div_ceil(spec.block);
    let scene = mosaic(moving_cols, rows, spec.tones, &mut rng);

    let mut frames = vec![still; n_static];
    let mut labels = vec![Label::NotChanged; n_static];
    for t in 0..n_moving {
        frames.push(render(spec, &scene, moving_cols, t * spec.speed)?);
        labels.push(Label::Changed);
    }
    Ok(SyntheticVideo { frames, labels })
}

/// Frames that alternate between two flat tones, left and right halves.
pub fn two_tone_frames(
    n: usize,
    width: usize,
    height: usize,
    dark: f32,
    light: f32,
) -> Result<Vec<Frame>> {
    let frame = Frame::new(
        width,
        height,
        1,
        (0..width * height)
            .map(|i| if i % width < width / 2 { dark } else { light })
            .collect(),
    )?;
    Ok(vec![frame; n])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_labels() {
        let v = static_then_moving(3, 4, &SceneSpec::default(), 1).unwrap();
        assert_eq!(v.frames.len(), 7);
        assert_eq!(v.labels[..3], [Label::NotChanged; 3]);
        assert_eq!(v.labels[3..], [Label::Changed; 4]);
        assert_eq!(v.frames[0], v.frames[2]);
        assert_ne!(v.frames[3], v.frames[4]);
        // one frame later the mosaic has moved `speed` pixels left
        assert_eq!(v.frames[3].get(10, 4, 0), v.frames[4].get(10, 0, 0));
    }

    #[test]
    fn seeded() {
        let a = static_then_moving(1, 2, &SceneSpec::default(), 9).unwrap();
        let b = static_then_moving(1, 2, &SceneSpec::default(), 9).unwrap();
        assert_eq!(a.frames, b.frames);
    }
}
