//! Full pipeline on a generated sequence with a known change point.
//!
//! 120 static frames are followed by 240 frames of a scrolling block mosaic.
//! A 16-entry codebook is trained on the frames, every frame is quantized,
//! windows are scored and clustered, and the per-frame labels are compared
//! with the generating segmentation.
//!
//!   cargo run --release --example end_to_end

use seadsc::evaluation::report;
use seadsc::pipeline::{encode_frame, run_detection, train_from_frames, PipelineConfig};
use seadsc::synthetic::{static_then_moving, SceneSpec};

fn main() -> seadsc::Result<()> {
    let video = static_then_moving(120, 240, &SceneSpec::default(), 42)?;

    let mut cfg = PipelineConfig::default();
    cfg.codebook.size = 16;

    let trained = train_from_frames(&video.frames, &cfg)?;
    println!(
        "codebook: {} entries, {} Lloyd steps, distortion {:.3} -> {:.3}",
        trained.codebook.n_entries(),
        trained.distortion.len(),
        trained.distortion[0],
        trained.distortion.last().unwrap()
    );

    let maps = video
        .frames
        .iter()
        .map(|f| encode_frame(f, &cfg.encoder, &trained.codebook))
        .collect::<seadsc::Result<Vec<_>>>()?;
    println!(
        "code maps: {} of {}x{}",
        maps.len(),
        maps[0].height(),
        maps[0].width()
    );

    let output = run_detection(&maps, maps.len(), &cfg)?;
    println!(
        "\n{:>6} {:>6} {:>8} {:>8}  label",
        "start", "end", "mean", "std"
    );
    for (score, window) in output.scores.iter().zip(&output.detection.windows) {
        println!(
            "{:>6} {:>6} {:>8.4} {:>8.4}  {}",
            score.span.start, score.span.end, score.mean, score.std, window.label
        );
    }

    let result = report(&video.labels, &output.frame_labels)?;
    println!("\n{result}");
    Ok(())
}
