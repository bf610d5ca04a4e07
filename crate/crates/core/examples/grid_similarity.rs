//! Cell-by-cell comparison of two code maps under both parameter presets.
//!
//!   cargo run --example grid_similarity

use seadsc::quantizer::CodeIndexMap;
use seadsc::similarity::{compare_maps, SimilarityParams};

fn main() -> seadsc::Result<()> {
    // 20x20 maps; the lower half of `b` drifts to a different palette
    let a = CodeIndexMap::new(
        20,
        20,
        64,
        (0..400).map(|i| ((i / 7) % 12) as u16).collect(),
    )?;
    let b = CodeIndexMap::new(
        20,
        20,
        64,
        (0..400)
            .map(|i| {
                let code = ((i / 7) % 12) as u16;
                if i >= 240 {
                    code + 30
                } else {
                    code
                }
            })
            .collect(),
    )?;

    for (name, params) in [
        ("default", SimilarityParams::default()),
        ("alternate", SimilarityParams::alternate()),
    ] {
        let breakdown = compare_maps(&a, &b, &params)?;
        println!(
            "{name} (n_top {}, delta_sim {}): score {:.2}",
            params.n_top,
            params.delta_sim,
            breakdown.score()
        );
        for (flags, overlaps) in breakdown
            .similar
            .chunks(params.grid_cols)
            .zip(breakdown.overlaps.chunks(params.grid_cols))
        {
            let cells: Vec<String> = flags
                .iter()
                .zip(overlaps)
                .map(|(&s, o)| format!("{}{o}", if s { '+' } else { '.' }))
                .collect();
            println!("  {}", cells.join(" "));
        }
    }
    Ok(())
}
