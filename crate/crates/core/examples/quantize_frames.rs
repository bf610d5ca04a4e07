//! Quantize one frame, rebuild it from its codes and report the losses.
//!
//!   cargo run --example quantize_frames

use seadsc::quantizer::{
    extract_features, init_codebook, quantize, reconstruct, reconstruction_loss, total_loss,
    train_codebook, vq_loss, EncoderConfig, LossConfig, TrainConfig,
};
use seadsc::synthetic::{static_then_moving, SceneSpec};

fn main() -> seadsc::Result<()> {
    let frame = static_then_moving(1, 0, &SceneSpec::default(), 11)?
        .frames
        .remove(0);
    let encoder = EncoderConfig::default();
    let features = extract_features(&frame, &encoder)?;
    let loss_cfg = LossConfig::default();

    let untrained = init_codebook(16, features.dim(), 11)?;
    let trained = train_codebook(
        features.as_slice(),
        features.dim(),
        &TrainConfig {
            n_entries: 16,
            seed: 11,
            ..TrainConfig::default()
        },
    )?
    .codebook;

    for (name, codebook) in [("initial", &untrained), ("trained", &trained)] {
        let map = quantize(&features, codebook)?;
        let x_hat = reconstruct(&map, codebook, &encoder)?;
        let selected = codebook.gather(&map)?;
        println!(
            "{name}: {} codes in use, L_re {:.3}, L_vq {:.3}, total {:.3}",
            distinct(map.indices()),
            reconstruction_loss(&frame, &x_hat)?,
            vq_loss(features.as_slice(), &selected, &loss_cfg)?,
            total_loss(&frame, &x_hat, features.as_slice(), &selected, &loss_cfg)?,
        );
    }

    let map = quantize(&features, &trained)?;
    println!("\ncode map {}x{}:", map.height(), map.width());
    for r in 0..map.height() {
        let row: Vec<String> = (0..map.width())
            .map(|c| format!("{:>2}", map.get(r, c)))
            .collect();
        println!("{}", row.join(" "));
    }
    Ok(())
}

fn distinct(codes: &[u16]) -> usize {
    let mut seen = codes.to_vec();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}
