//! Pair scores and window statistics over a sequence of code maps.
//!
//!   cargo run --example window_scoring

use seadsc::pipeline::{encode_frame, train_from_frames, PipelineConfig};
use seadsc::similarity::SimilarityParams;
use seadsc::synthetic::{static_then_moving, SceneSpec};
use seadsc::windowing::{score_windows, window_pairs, WindowConfig};

fn main() -> seadsc::Result<()> {
    let video = static_then_moving(120, 120, &SceneSpec::default(), 5)?;
    let mut cfg = PipelineConfig::default();
    cfg.codebook.size = 16;
    let codebook = train_from_frames(&video.frames, &cfg)?.codebook;
    let maps = video
        .frames
        .iter()
        .map(|f| encode_frame(f, &cfg.encoder, &codebook))
        .collect::<seadsc::Result<Vec<_>>>()?;

    let windows = WindowConfig::default();
    let scores = score_windows(&maps, maps.len(), &windows, &SimilarityParams::default())?;
    for w in &scores {
        println!(
            "window {}..{}: mean {:.3}, std {:.3}",
            w.span.start, w.span.end, w.mean, w.std
        );
        for ((i, j), s) in window_pairs(w.span, &windows).iter().zip(&w.pair_scores) {
            print!("  ({i},{j})={s:.2}");
        }
        println!();
    }
    Ok(())
}
