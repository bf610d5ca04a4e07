//! Frame, codebook and code-map files on disk.
//!
//!   cargo run --example frame_io

use seadsc::io::{self, read_frame, resize_pad, write_frame, TARGET_HEIGHT, TARGET_WIDTH};
use seadsc::pipeline::encode_frame;
use seadsc::quantizer::{init_codebook, EncoderConfig};
use seadsc::synthetic::{static_then_moving, SceneSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tmp = tempfile::tempdir()?;
    let dir = tmp.path();

    let frame = static_then_moving(1, 0, &SceneSpec::default(), 1)?
        .frames
        .remove(0);
    let pgm = dir.join("000000.pgm");
    write_frame(&pgm, &frame)?;
    let back = read_frame(&pgm)?;
    let max_err = frame
        .pixels()
        .iter()
        .zip(back.pixels())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f32, f32::max);
    println!(
        "{}: {}x{}x{}, max 8-bit round-off {max_err:.4}",
        pgm.display(),
        back.width(),
        back.height(),
        back.channels()
    );

    let full = resize_pad(&back, TARGET_WIDTH, TARGET_HEIGHT)?;
    println!(
        "fit and padded to {}x{}x{}",
        full.width(),
        full.height(),
        full.channels()
    );

    let encoder = EncoderConfig::default();
    let codebook = init_codebook(512, encoder.feature_dim(3), 42)?;
    let map = encode_frame(&full, &encoder, &codebook)?;

    let cb_path = dir.join("codebook.sdcb");
    let map_path = dir.join("000000.sdcm");
    io::write_codebook(&cb_path, &codebook)?;
    io::write_code_map(&map_path, &map)?;
    for path in [&cb_path, &map_path] {
        let len = std::fs::metadata(path)?.len();
        println!("{}: {len} bytes", path.display());
    }
    assert_eq!(io::read_code_map(&map_path)?, map);
    assert_eq!(io::read_codebook(&cb_path)?.as_slice(), codebook.as_slice());
    println!(
        "code map {}x{} read back unchanged",
        map.height(),
        map.width()
    );
    Ok(())
}
