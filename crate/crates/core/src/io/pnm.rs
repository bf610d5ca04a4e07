//! Binary PGM (P5) and PPM (P6) frames with 8-bit samples.

use std::path::Path;

use crate::error::{Error, Result};
use crate::quantizer::Frame;

pub const TARGET_WIDTH: usize = 960;
pub const TARGET_HEIGHT: usize = 600;
pub const TARGET_CHANNELS: usize = 3;

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_separators(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<(usize, usize)> {
        self.skip_separators();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::format(start, format!("expected {what}")));
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii digits");
        let value = text
            .parse::<usize>()
            .map_err(|_| Error::format(start, format!("{what} {text} is out of range")))?;
        Ok((value, start))
    }
}

/// Decodes a P5/P6 image and normalizes samples to `(v/255 - 0.5) / 0.5`.
pub fn decode_pnm(bytes: &[u8]) -> Result<Frame> {
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        Some([b'P', d]) if d.is_ascii_digit() => {
            return Err(Error::format(
                0,
                format!(
                    "unsupported format P{}; only binary P5 and P6 are read",
                    *d as char
                ),
            ))
        }
        _ => return Err(Error::format(0, "not a PGM/PPM file")),
    };
    let mut cur = Cursor { bytes, pos: 2 };
    if !cur
        .bytes
        .get(2)
        .is_some_and(|b| b.is_ascii_whitespace() || *b == b'#')
    {
        return Err(Error::format(2, "expected whitespace after magic number"));
    }
    let (width, w_at) = cur.number("width")?;
    let (height, _) = cur.number("height")?;
    let (maxval, m_at) = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::format(w_at, format!("empty image {width}x{height}")));
    }
    if maxval != 255 {
        return Err(Error::format(
            m_at,
            format!("unsupported maxval {maxval}; only 255 is read"),
        ));
    }
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => {
            return Err(Error::format(
                cur.pos,
                "expected a single whitespace before raster",
            ))
        }
    }
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Error::format(w_at, "image dimensions overflow"))?;
    let raster = &bytes[cur.pos..];
    if raster.len() < expected {
        return Err(Error::format(
            bytes.len(),
            format!(
                "truncated raster: expected {expected} bytes, found {}",
                raster.len()
            ),
        ));
    }
    let pixels = raster[..expected]
        .iter()
        .map(|&v| ((v as f64 / 255.0 - 0.5) / 0.5) as f32)
        .collect();
    Frame::new(width, height, channels, pixels)
}

/// Inverse of [`decode_pnm`]; values are clamped to `[-1, 1]` and rounded.
pub fn encode_pnm(frame: &Frame) -> Vec<u8> {
    let magic = if frame.channels() == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", frame.width(), frame.height()).into_bytes();
    out.extend(frame.pixels().iter().map(|&v| {
        let unit = (v as f64).clamp(-1.0, 1.0) * 0.5 + 0.5;
        (unit * 255.0).round() as u8
    }));
    out
}

pub fn read_frame(path: &Path) -> Result<Frame> {
    let bytes = super::read_bytes(path)?;
    decode_pnm(&bytes).map_err(|e| match e {
        Error::Format { offset, message } => Error::Format {
            offset,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

pub fn write_frame(path: &Path, frame: &Frame) -> Result<()> {
    super::write_atomic(path, &encode_pnm(frame))
}

/// Fits `frame` inside `width x height` with nearest-neighbour scaling that
/// keeps the aspect ratio, then pads symmetrically with 0.0 (mid gray after
/// normalization). Grayscale input is replicated to three channels.
pub fn resize_pad(frame: &Frame, width: usize, height: usize) -> Result<Frame> {
    if width == 0 || height == 0 {
        return Err(Error::Config(format!(
            "empty resize target {width}x{height}"
        )));
    }
    let (w, h) = (frame.width(), frame.height());
    // compare w/h with width/height without rounding
    let (new_w, new_h) = if w * height >= h * width {
        let scaled = (h * width + w / 2) / w;
        (width, scaled.clamp(1, height))
    } else {
        let scaled = (w * height + h / 2) / h;
        (scaled.clamp(1, width), height)
    };
    let top = (height - new_h) / 2;
    let left = (width - new_w) / 2;
    let src_c = frame.channels();
    let mut pixels = vec![0.0f32; width * height * TARGET_CHANNELS];
    for r in 0..new_h {
        let sr = r * h / new_h;
        for c in 0..new_w {
            let sc = c * w / new_w;
            let dst = ((top + r) * width + left + c) * TARGET_CHANNELS;
            for ch in 0..TARGET_CHANNELS {
                pixels[dst + ch] = frame.get(sr, sc, if src_c == 1 { 0 } else { ch });
            }
        }
    }
    Frame::new(width, height, TARGET_CHANNELS, pixels)
}
