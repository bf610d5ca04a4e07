//! Two-cluster K-means over window `(mean, std)` points and label projection.
//!
//! The cluster whose centroid has the higher mean similarity is the
//! not-changed class. Window labels are spread back onto frames so they can be
//! compared with per-frame annotations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::Label;
use crate::windowing::{Span, WindowScore};

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    /// Always 2: changed and not changed.
    pub k: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub rel_tol: f64,
    /// Z-score both axes before clustering. Off by default.
    #[serde(default)]
    pub standardize: bool,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            k: 2,
            seed: 42,
            max_iters: 300,
            rel_tol: 1e-9,
            standardize: false,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k != 2 {
            return Err(Error::Config(format!("k must be 2, got {}", self.k)));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be >= 1".into()));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::Config(format!(
                "rel_tol must be positive, got {}",
                self.rel_tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub centroids: [Point; 2],
    pub assignments: Vec<usize>,
    /// Within-cluster sum of squares after each assignment step.
    pub inertia: Vec<f64>,
    pub converged: bool,
    /// Every input point was identical; both centroids sit on that point.
    pub degenerate: bool,
}

fn dist2(a: &Point, b: &Point) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Per-axis `(mean, scale)`; zero-spread axes keep a scale of 1.
fn axis_stats(points: &[Point]) -> [(f64, f64); 2] {
    let n = points.len() as f64;
    let mut out = [(0.0, 1.0); 2];
    for (axis, stat) in out.iter_mut().enumerate() {
        let mean = points.iter().map(|p| p[axis]).sum::<f64>() / n;
        let var = points.iter().map(|p| (p[axis] - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        *stat = (mean, if sd > 0.0 { sd } else { 1.0 });
    }
    out
}

fn assign(points: &[Point], centroids: &[Point; 2]) -> (Vec<usize>, f64) {
    let mut inertia = 0.0;
    let assignments = points
        .iter()
        .map(|p| {
            let d0 = dist2(p, &centroids[0]);
            let d1 = dist2(p, &centroids[1]);
            if d1 < d0 {
                inertia += d1;
                1
            } else {
                inertia += d0;
                0
            }
        })
        .collect();
    (assignments, inertia)
}

fn seed_plus_plus(points: &[Point], rng: &mut ChaCha8Rng) -> [Point; 2] {
    let first = points[rng.gen_range(0..points.len())];
    let weights: Vec<f64> = points.iter().map(|p| dist2(p, &first)).collect();
    let total: f64 = weights.iter().sum();
    let target = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut second = None;
    for (p, w) in points.iter().zip(&weights) {
        acc += w;
        if acc > target {
            second = Some(*p);
            break;
        }
    }
    // rounding can leave target == total; fall back to the farthest point
    let second = second.unwrap_or_else(|| {
        let far = weights
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .unwrap_or(0);
        points[far]
    });
    [first, second]
}

fn update(points: &[Point], assignments: &[usize], previous: &[Point; 2]) -> [Point; 2] {
    let mut sums = [[0.0f64; 2]; 2];
    let mut counts = [0usize; 2];
    for (p, &c) in points.iter().zip(assignments) {
        counts[c] += 1;
        sums[c][0] += p[0];
        sums[c][1] += p[1];
    }
    let mut next = *previous;
    for c in 0..2 {
        if counts[c] > 0 {
            let n = counts[c] as f64;
            next[c] = [sums[c][0] / n, sums[c][1] / n];
        }
    }
    for c in 0..2 {
        if counts[c] == 0 {
            let far = points
                .iter()
                .zip(assignments)
                .map(|(p, &a)| dist2(p, &next[a]))
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
                .map(|(i, _)| i)
                .unwrap_or(0);
            next[c] = points[far];
        }
    }
    next
}

/// Lloyd iteration from seeded k-means++ initialization.
///
/// Stops at an assignment fixpoint, when the relative inertia decrease drops
/// below `rel_tol`, or after `max_iters` assignment steps.
pub fn kmeans_fit(points: &[Point], cfg: &DetectorConfig) -> Result<KMeansFit> {
    cfg.validate()?;
    if points.len() < 2 {
        return Err(Error::Data(format!(
            "clustering needs at least 2 windows, got {}",
            points.len()
        )));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Data(
            "window statistics contain non-finite values".into(),
        ));
    }

    if points.iter().all(|p| p == &points[0]) {
        log::warn!("all window statistics are identical; clusters are degenerate");
        return Ok(KMeansFit {
            centroids: [points[0], points[0]],
            assignments: vec![0; points.len()],
            inertia: vec![0.0],
            converged: true,
            degenerate: true,
        });
    }

    let stats = cfg.standardize.then(|| axis_stats(points));
    let work: Vec<Point> = match stats {
        Some(s) => points
            .iter()
            .map(|p| [(p[0] - s[0].0) / s[0].1, (p[1] - s[1].0) / s[1].1])
            .collect(),
        None => points.to_vec(),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut centroids = seed_plus_plus(&work, &mut rng);
    let mut inertia: Vec<f64> = Vec::new();
    let mut previous: Option<Vec<usize>> = None;
    let mut converged = false;
    let mut assignments = Vec::new();

    for iter in 0..cfg.max_iters {
        let (current, total) = assign(&work, &centroids);
        let last = inertia.last().copied();
        inertia.push(total);
        assignments = current;

        if previous.as_ref() == Some(&assignments) || total == 0.0 {
            converged = true;
            break;
        }
        if let Some(prev) = last {
            if prev - total <= cfg.rel_tol * prev {
                converged = true;
                break;
            }
        }
        if iter + 1 == cfg.max_iters {
            break;
        }
        centroids = update(&work, &assignments, &centroids);
        previous = Some(assignments.clone());
    }

    if let Some(s) = stats {
        for c in centroids.iter_mut() {
            *c = [c[0] * s[0].1 + s[0].0, c[1] * s[1].1 + s[1].0];
        }
    }

    Ok(KMeansFit {
        centroids,
        assignments,
        inertia,
        converged,
        degenerate: false,
    })
}

/// Labels for cluster 0 and cluster 1. The higher-mean centroid is
/// not-changed; equal means fall to the lower std, then to cluster 0.
pub fn name_clusters(centroids: &[Point; 2]) -> [Label; 2] {
    let [a, b] = centroids;
    let first_is_static = match a[0].total_cmp(&b[0]) {
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Equal => a[1] <= b[1],
    };
    if first_is_static {
        [Label::NotChanged, Label::Changed]
    } else {
        [Label::Changed, Label::NotChanged]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowLabel {
    pub span: Span,
    pub label: Label,
    pub cluster: usize,
    pub distance_to_centroid: f64,
}

#[derive(Debug, Clone)]
pub struct Detection {
    pub fit: KMeansFit,
    pub names: [Label; 2],
    pub windows: Vec<WindowLabel>,
}

/// Clusters the windows of one sequence and labels each of them.
pub fn detect(scores: &[WindowScore], cfg: &DetectorConfig) -> Result<Detection> {
    let points: Vec<Point> = scores.iter().map(WindowScore::point).collect();
    let fit = kmeans_fit(&points, cfg)?;
    let names = name_clusters(&fit.centroids);
    let windows = scores
        .iter()
        .zip(&points)
        .zip(&fit.assignments)
        .map(|((s, p), &c)| WindowLabel {
            span: s.span,
            label: names[c],
            cluster: c,
            distance_to_centroid: dist2(p, &fit.centroids[c]).sqrt(),
        })
        .collect();
    Ok(Detection {
        fit,
        names,
        windows,
    })
}

/// One fit over the windows of several sequences; labels come back per sequence.
pub fn detect_corpus(
    videos: &[Vec<WindowScore>],
    cfg: &DetectorConfig,
) -> Result<(Detection, Vec<Vec<WindowLabel>>)> {
    let all: Vec<WindowScore> = videos.iter().flatten().cloned().collect();
    let detection = detect(&all, cfg)?;
    let mut rest = detection.windows.as_slice();
    let mut per_video = Vec::with_capacity(videos.len());
    for v in videos {
        let (head, tail) = rest.split_at(v.len());
        per_video.push(head.to_vec());
        rest = tail;
    }
    Ok((detection, per_video))
}

/// Per-frame labels from window labels.
///
/// A frame covered by several windows takes the majority label, with ties
/// going to changed. Frames after the last window inherit its label; with no
/// windows at all every frame is changed.
pub fn frames_from_windows(window_labels: &[WindowLabel], n_frames: usize) -> Vec<Label> {
    let mut changed = vec![0usize; n_frames];
    let mut not_changed = vec![0usize; n_frames];
    for w in window_labels {
        let counts = match w.label {
            Label::Changed => &mut changed,
            Label::NotChanged => &mut not_changed,
        };
        for c in &mut counts[w.span.start.min(n_frames)..w.span.end.min(n_frames)] {
            *c += 1;
        }
    }
    let last = window_labels.iter().max_by_key(|w| w.span.start);
    (0..n_frames)
        .map(|f| match (changed[f], not_changed[f]) {
            (0, 0) => last.map_or(Label::Changed, |w| w.label),
            (c, n) if n > c => Label::NotChanged,
            _ => Label::Changed,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wl(start: usize, end: usize, label: Label) -> WindowLabel {
        WindowLabel {
            span: Span { start, end },
            label,
            cluster: 0,
            distance_to_centroid: 0.0,
        }
    }

    /// Smallest-SSE split into two non-empty groups by enumeration.
    fn best_partition(points: &[Point]) -> Vec<usize> {
        let n = points.len();
        let mut best = (f64::INFINITY, 0u32);
        for mask in 1u32..(1 << n) - 1 {
            let mut sse = 0.0;
            for g in 0..2 {
                let members: Vec<&Point> = points
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| ((mask >> i) & 1) as usize == g)
                    .map(|(_, p)| p)
                    .collect();
                let m = members.len() as f64;
                let c = [
                    members.iter().map(|p| p[0]).sum::<f64>() / m,
                    members.iter().map(|p| p[1]).sum::<f64>() / m,
                ];
                sse += members.iter().map(|p| dist2(p, &c)).sum::<f64>();
            }
            if sse < best.0 {
                best = (sse, mask);
            }
        }
        (0..n).map(|i| ((best.1 >> i) & 1) as usize).collect()
    }

    #[test]
    fn two_tight_groups() {
        let mut points = vec![[0.9, 0.02]; 5];
        points.extend(vec![[0.3, 0.2]; 5]);
        let fit = kmeans_fit(&points, &DetectorConfig::default()).unwrap();
        let oracle = best_partition(&points);
        // same partition up to relabeling
        let same = fit.assignments == oracle;
        let flipped = fit.assignments.iter().zip(&oracle).all(|(a, b)| a != b);
        assert!(same || flipped, "{:?} vs {oracle:?}", fit.assignments);
        let mut c = fit.centroids.to_vec();
        c.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert_eq!(c, vec![[0.3, 0.2], [0.9, 0.02]]);
        assert!(!fit.degenerate && fit.converged);
    }

    #[test]
    fn identical_points_are_degenerate() {
        let fit = kmeans_fit(&[[0.5, 0.1]; 4], &DetectorConfig::default()).unwrap();
        assert!(fit.degenerate);
        assert_eq!(fit.centroids, [[0.5, 0.1], [0.5, 0.1]]);
        assert_eq!(
            name_clusters(&fit.centroids)[fit.assignments[0]],
            Label::NotChanged
        );
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(
            kmeans_fit(&[[0.5, 0.1]], &DetectorConfig::default()),
            Err(Error::Data(_))
        ));
        let bad = DetectorConfig {
            k: 3,
            ..DetectorConfig::default()
        };
        assert!(matches!(
            kmeans_fit(&[[0.0, 0.0]; 3], &bad),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn standardized_fit_reports_original_units() {
        let mut points = vec![[0.9, 0.02]; 3];
        points.extend(vec![[0.3, 0.2]; 3]);
        let cfg = DetectorConfig {
            standardize: true,
            ..DetectorConfig::default()
        };
        let fit = kmeans_fit(&points, &cfg).unwrap();
        let mut c = fit.centroids.to_vec();
        c.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert!((c[0][0] - 0.3).abs() < 1e-12 && (c[0][1] - 0.2).abs() < 1e-12);
        assert!((c[1][0] - 0.9).abs() < 1e-12 && (c[1][1] - 0.02).abs() < 1e-12);
    }

    #[test]
    fn naming_rules() {
        assert_eq!(
            name_clusters(&[[0.9, 0.4], [0.3, 0.0]]),
            [Label::NotChanged, Label::Changed]
        );
        assert_eq!(
            name_clusters(&[[0.3, 0.0], [0.9, 0.4]]),
            [Label::Changed, Label::NotChanged]
        );
        assert_eq!(
            name_clusters(&[[0.5, 0.3], [0.5, 0.1]]),
            [Label::Changed, Label::NotChanged]
        );
    }

    #[test]
    fn disjoint_windows_project_directly() {
        use Label::*;
        let labels = [
            wl(0, 120, Changed),
            wl(120, 240, NotChanged),
            wl(240, 360, Changed),
        ];
        let frames = frames_from_windows(&labels, 360);
        assert!(frames[..120].iter().all(|&l| l == Changed));
        assert!(frames[120..240].iter().all(|&l| l == NotChanged));
        assert!(frames[240..].iter().all(|&l| l == Changed));
    }

    #[test]
    fn overlap_tie_goes_to_changed() {
        use Label::*;
        let labels = [
            wl(0, 120, NotChanged),
            wl(60, 180, Changed),
            wl(120, 240, NotChanged),
        ];
        let frames = frames_from_windows(&labels, 240);
        assert_eq!(frames[30], NotChanged);
        assert_eq!(frames[90], Changed);
        assert_eq!(frames[150], Changed);
        assert_eq!(frames[200], NotChanged);
    }

    #[test]
    fn tail_and_empty() {
        use Label::*;
        let labels = [
            wl(0, 120, Changed),
            wl(120, 240, Changed),
            wl(240, 360, NotChanged),
        ];
        let frames = frames_from_windows(&labels[..2], 250);
        assert!(frames[240..].iter().all(|&l| l == Changed));
        let frames = frames_from_windows(&[wl(0, 120, NotChanged)], 130);
        assert!(frames[120..].iter().all(|&l| l == NotChanged));
        assert!(frames_from_windows(&[], 5).iter().all(|&l| l == Changed));
    }

    #[test]
    fn corpus_split_follows_video_lengths() {
        let score = |start: usize, mean: f64| WindowScore {
            span: Span {
                start,
                end: start + 120,
            },
            mean,
            std: 0.0,
            pair_scores: vec![],
        };
        let videos = vec![vec![score(0, 1.0), score(120, 0.2)], vec![score(0, 0.25)]];
        let (det, per_video) = detect_corpus(&videos, &DetectorConfig::default()).unwrap();
        assert_eq!(det.windows.len(), 3);
        assert_eq!(per_video[0].len(), 2);
        assert_eq!(per_video[1][0].label, Label::Changed);
        assert_eq!(per_video[0][0].label, Label::NotChanged);
    }
}
