//! Independent reference implementations used as test oracles.
//!
//! Nothing here calls into the code paths it checks; each function recomputes
//! its result from raw slices with the most direct algorithm available.

#![allow(dead_code, clippy::too_many_arguments)]

use std::collections::{HashMap, HashSet};

use rand::Rng;
use seadsc::quantizer::CodeIndexMap;

/// Grid similarity by explicit histogramming of every cell.
///
/// Returns the number of similar cells.
pub fn brute_force_similar_cells(
    u: &[u16],
    v: &[u16],
    height: usize,
    width: usize,
    grid_rows: usize,
    grid_cols: usize,
    n_top: usize,
    delta_sim: usize,
) -> usize {
    let ch = height / grid_rows;
    let cw = width / grid_cols;
    let mut similar = 0;
    for gr in 0..grid_rows {
        for gc in 0..grid_cols {
            let collect = |m: &[u16]| {
                let mut cell = Vec::new();
                for r in gr * ch..(gr + 1) * ch {
                    for c in gc * cw..(gc + 1) * cw {
                        cell.push(m[r * width + c]);
                    }
                }
                cell
            };
            let top_u = brute_force_top(&collect(u), n_top);
            let top_v = brute_force_top(&collect(v), n_top);
            let set_u: HashSet<u16> = top_u.iter().map(|t| t.0).collect();
            let set_v: HashSet<u16> = top_v.iter().map(|t| t.0).collect();
            if set_u.intersection(&set_v).count() >= delta_sim {
                similar += 1;
            }
        }
    }
    similar
}

/// Full histogram sorted by (count desc, code asc), truncated to `n_top`.
pub fn brute_force_top(codes: &[u16], n_top: usize) -> Vec<(u16, usize)> {
    let mut counts: HashMap<u16, usize> = HashMap::new();
    for &c in codes {
        *counts.entry(c).or_default() += 1;
    }
    let mut all: Vec<(u16, usize)> = counts.into_iter().collect();
    all.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    all.into_iter().take(n_top).collect()
}

/// Nearest entry by listing every distance, then taking the first minimum.
pub fn exhaustive_nearest(entries: &[f32], dim: usize, v: &[f32]) -> usize {
    let mut distances = Vec::new();
    for e in entries.chunks(dim) {
        let mut d = 0.0f64;
        for i in 0..dim {
            let diff = v[i] as f64 - e[i] as f64;
            d += diff * diff;
        }
        distances.push(d);
    }
    let min = distances.iter().cloned().fold(f64::INFINITY, f64::min);
    distances.iter().position(|&d| d == min).unwrap()
}

pub fn sum_of_squares(a: &[f32], b: &[f32]) -> f64 {
    let mut total = 0.0f64;
    for i in 0..a.len() {
        let d = a[i] as f64 - b[i] as f64;
        total += d * d;
    }
    total
}

/// Textbook two-pass mean and population standard deviation.
pub fn two_pass_mean_std(values: &[f64]) -> (f64, f64) {
    let mut sum = 0.0;
    for v in values {
        sum += v;
    }
    let mean = sum / values.len() as f64;
    let mut sq = 0.0;
    for v in values {
        sq += (v - mean) * (v - mean);
    }
    (mean, (sq / values.len() as f64).sqrt())
}

pub fn random_map<R: Rng>(rng: &mut R, height: usize, width: usize, n_codes: u16) -> CodeIndexMap {
    let indices = (0..height * width)
        .map(|_| rng.gen_range(0..n_codes))
        .collect();
    CodeIndexMap::new(height, width, n_codes as usize, indices).unwrap()
}

/// True when `trace` never rises by more than `rel` of the previous value.
pub fn non_increasing(trace: &[f64], rel: f64) -> bool {
    trace.windows(2).all(|w| w[1] <= w[0] + rel * w[0].abs())
}
