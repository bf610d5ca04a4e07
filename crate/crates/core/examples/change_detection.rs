//! Two-cluster labeling of window statistics, without any frames.
//!
//! Each point is a window's (mean, std) of pair similarities. The cluster with
//! the higher mean is named not_changed.
//!
//!   cargo run --example change_detection

use seadsc::detector::detect;
use seadsc::detector::{frames_from_windows, kmeans_fit, name_clusters, DetectorConfig};
use seadsc::windowing::{Span, WindowScore};
use seadsc::Label;

fn main() -> seadsc::Result<()> {
    let stats = [
        (0.96, 0.03),
        (0.92, 0.05),
        (0.41, 0.17),
        (0.35, 0.21),
        (0.88, 0.06),
        (0.30, 0.12),
    ];
    let scores: Vec<WindowScore> = stats
        .iter()
        .enumerate()
        .map(|(k, &(mean, std))| WindowScore {
            span: Span {
                start: k * 120,
                end: (k + 1) * 120,
            },
            mean,
            std,
            pair_scores: Vec::new(),
        })
        .collect();

    let cfg = DetectorConfig::default();
    let points: Vec<[f64; 2]> = scores.iter().map(WindowScore::point).collect();
    let fit = kmeans_fit(&points, &cfg)?;
    let names = name_clusters(&fit.centroids);
    for (c, name) in fit.centroids.iter().zip(names) {
        println!("centroid ({:.3}, {:.3}) -> {name}", c[0], c[1]);
    }
    println!("inertia trace {:?}", fit.inertia);

    let detection = detect(&scores, &cfg)?;
    for w in &detection.windows {
        println!("{:>4}..{:<4} {}", w.span.start, w.span.end, w.label);
    }

    let frames = frames_from_windows(&detection.windows, 760);
    println!(
        "{} frames, {} changed; frames 720..760 follow the last window ({})",
        frames.len(),
        frames.iter().filter(|&&l| l == Label::Changed).count(),
        frames[759]
    );
    Ok(())
}
