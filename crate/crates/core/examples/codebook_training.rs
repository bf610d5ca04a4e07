//! Lloyd training of a patch codebook on generated frames.
//!
//!   cargo run --example codebook_training

use seadsc::quantizer::{extract_features, train_codebook, EncoderConfig, TrainConfig};
use seadsc::synthetic::{static_then_moving, SceneSpec};

fn main() -> seadsc::Result<()> {
    let video = static_then_moving(4, 12, &SceneSpec::default(), 3)?;
    let encoder = EncoderConfig::default();

    let mut vectors = Vec::new();
    for frame in &video.frames {
        vectors.extend_from_slice(extract_features(frame, &encoder)?.as_slice());
    }
    let dim = encoder.feature_dim(1);
    println!("{} patch vectors of dimension {dim}", vectors.len() / dim);

    for n_entries in [4, 16, 64] {
        let cfg = TrainConfig {
            n_entries,
            ..TrainConfig::default()
        };
        let trained = train_codebook(&vectors, dim, &cfg)?;
        println!(
            "N_e = {n_entries:>3}: {:>3} steps, distortion {:>10.3} -> {:>8.3}{}",
            trained.distortion.len(),
            trained.distortion[0],
            trained.distortion.last().unwrap(),
            if trained.converged { "" } else { " (cap)" }
        );
    }
    Ok(())
}
