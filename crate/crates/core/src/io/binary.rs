//! `SDCB` codebook and `SDCM` code-map files.
//!
//! ```text
//! SDCB: "SDCB" u8 version=1 | u32 n_entries | u32 dim | u64 seed | n_entries*dim f32
//! SDCM: "SDCM" u8 version=1 | u32 height    | u32 width | u32 n_entries | height*width u16
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::quantizer::{CodeIndexMap, Codebook};

pub const CODEBOOK_MAGIC: &[u8; 4] = b"SDCB";
pub const CODE_MAP_MAGIC: &[u8; 4] = b"SDCM";
pub const FORMAT_VERSION: u8 = 1;

const CODEBOOK_HEADER_LEN: usize = 4 + 1 + 4 + 4 + 8;
pub const CODE_MAP_HEADER_LEN: usize = 4 + 1 + 4 + 4 + 4;

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        let slice = self.bytes.get(self.pos..end).ok_or_else(|| {
            Error::Corruption(format!(
                "file ends at byte {} while reading {n} bytes at offset {}",
                self.bytes.len(),
                self.pos
            ))
        })?;
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn header(&mut self, magic: &[u8; 4]) -> Result<()> {
        let found = self.take(4)?;
        if found != magic {
            return Err(Error::Corruption(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(found),
                String::from_utf8_lossy(magic)
            )));
        }
        let version = self.take(1)?[0];
        if version != FORMAT_VERSION {
            return Err(Error::Corruption(format!(
                "unsupported version {version}, expected {FORMAT_VERSION}"
            )));
        }
        Ok(())
    }
}

fn expect_len(actual: usize, header: usize, count: usize, width: usize) -> Result<()> {
    let expected = count
        .checked_mul(width)
        .and_then(|n| n.checked_add(header))
        .ok_or_else(|| Error::Corruption("declared sizes overflow".into()))?;
    if actual != expected {
        return Err(Error::Corruption(format!(
            "file is {actual} bytes but its header declares {expected}"
        )));
    }
    Ok(())
}

fn to_u32(value: usize, what: &str) -> u32 {
    u32::try_from(value).unwrap_or_else(|_| panic!("{what} {value} exceeds u32"))
}

pub fn encode_codebook(codebook: &Codebook) -> Vec<u8> {
    let mut out = Vec::with_capacity(CODEBOOK_HEADER_LEN + codebook.as_slice().len() * 4);
    out.extend_from_slice(CODEBOOK_MAGIC);
    out.push(FORMAT_VERSION);
    out.extend_from_slice(&to_u32(codebook.n_entries(), "n_entries").to_le_bytes());
    out.extend_from_slice(&to_u32(codebook.dim(), "dim").to_le_bytes());
    out.extend_from_slice(&codebook.seed().to_le_bytes());
    for v in codebook.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_codebook(bytes: &[u8]) -> Result<Codebook> {
    let mut r = Reader { bytes, pos: 0 };
    r.header(CODEBOOK_MAGIC)?;
    let n_entries = r.u32()? as usize;
    let dim = r.u32()? as usize;
    let seed = r.u64()?;
    if n_entries < 2 || dim == 0 {
        return Err(Error::Corruption(format!(
            "codebook header declares {n_entries} entries of dimension {dim}"
        )));
    }
    let count = n_entries
        .checked_mul(dim)
        .ok_or_else(|| Error::Corruption("declared sizes overflow".into()))?;
    expect_len(bytes.len(), CODEBOOK_HEADER_LEN, count, 4)?;
    let entries = r
        .take(count * 4)?
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
        .collect();
    Codebook::new(n_entries, dim, seed, entries).map_err(|e| match e {
        Error::Config(msg) | Error::Shape(msg) => Error::Corruption(msg),
        other => other,
    })
}

pub fn encode_code_map(map: &CodeIndexMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(CODE_MAP_HEADER_LEN + map.len() * 2);
    out.extend_from_slice(CODE_MAP_MAGIC);
    out.push(FORMAT_VERSION);
    out.extend_from_slice(&to_u32(map.height(), "height").to_le_bytes());
    out.extend_from_slice(&to_u32(map.width(), "width").to_le_bytes());
    out.extend_from_slice(&to_u32(map.n_entries(), "n_entries").to_le_bytes());
    for i in map.indices() {
        out.extend_from_slice(&i.to_le_bytes());
    }
    out
}

pub fn decode_code_map(bytes: &[u8]) -> Result<CodeIndexMap> {
    let mut r = Reader { bytes, pos: 0 };
    r.header(CODE_MAP_MAGIC)?;
    let height = r.u32()? as usize;
    let width = r.u32()? as usize;
    let n_entries = r.u32()? as usize;
    let count = height
        .checked_mul(width)
        .ok_or_else(|| Error::Corruption("declared sizes overflow".into()))?;
    expect_len(bytes.len(), CODE_MAP_HEADER_LEN, count, 2)?;
    let indices = r
        .take(count * 2)?
        .chunks_exact(2)
        .map(|b| u16::from_le_bytes([b[0], b[1]]))
        .collect();
    CodeIndexMap::new(height, width, n_entries, indices).map_err(|e| match e {
        Error::Shape(msg) => Error::Corruption(msg),
        other => other,
    })
}

fn with_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Corruption(msg) => Error::Corruption(format!("{}: {msg}", path.display())),
        other => other,
    }
}

pub fn read_codebook(path: &Path) -> Result<Codebook> {
    decode_codebook(&super::read_bytes(path)?).map_err(|e| with_path(path, e))
}

pub fn write_codebook(path: &Path, codebook: &Codebook) -> Result<()> {
    super::write_atomic(path, &encode_codebook(codebook))
}

pub fn read_code_map(path: &Path) -> Result<CodeIndexMap> {
    decode_code_map(&super::read_bytes(path)?).map_err(|e| with_path(path, e))
}

pub fn write_code_map(path: &Path, map: &CodeIndexMap) -> Result<()> {
    super::write_atomic(path, &encode_code_map(map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantizer::init_codebook;

    #[test]
    fn codebook_layout() {
        let cb = Codebook::new(2, 1, 0x0102_0304_0506_0708, vec![1.0, -2.5]).unwrap();
        let bytes = encode_codebook(&cb);
        assert_eq!(&bytes[..5], b"SDCB\x01");
        assert_eq!(&bytes[5..9], &[2, 0, 0, 0]);
        assert_eq!(&bytes[9..13], &[1, 0, 0, 0]);
        assert_eq!(&bytes[13..21], &[8, 7, 6, 5, 4, 3, 2, 1]);
        assert_eq!(&bytes[21..25], &1.0f32.to_le_bytes());
        assert_eq!(&bytes[25..29], &(-2.5f32).to_le_bytes());
        assert_eq!(decode_codebook(&bytes).unwrap(), cb);
    }

    #[test]
    fn full_resolution_map_payload() {
        let map = CodeIndexMap::new(150, 240, 512, vec![511; 150 * 240]).unwrap();
        let bytes = encode_code_map(&map);
        assert_eq!(bytes.len() - CODE_MAP_HEADER_LEN, 72_000);
        assert_eq!(decode_code_map(&bytes).unwrap(), map);
    }

    #[test]
    fn out_of_range_index_is_corruption() {
        let map = CodeIndexMap::new(1, 2, 1024, vec![3, 600]).unwrap();
        let mut bytes = encode_code_map(&map);
        bytes[13..17].copy_from_slice(&512u32.to_le_bytes());
        let err = decode_code_map(&bytes).unwrap_err();
        assert!(matches!(err, Error::Corruption(_)), "{err}");
        assert!(err.to_string().contains("600"));
    }

    #[test]
    fn header_damage_is_corruption() {
        let map = CodeIndexMap::new(2, 2, 4, vec![0, 1, 2, 3]).unwrap();
        let good = encode_code_map(&map);

        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            decode_code_map(&bad_magic),
            Err(Error::Corruption(_))
        ));

        let mut bad_version = good.clone();
        bad_version[4] = 2;
        assert!(matches!(
            decode_code_map(&bad_version),
            Err(Error::Corruption(_))
        ));

        assert!(matches!(
            decode_code_map(&good[..good.len() - 1]),
            Err(Error::Corruption(_))
        ));
        let mut longer = good.clone();
        longer.push(0);
        assert!(matches!(
            decode_code_map(&longer),
            Err(Error::Corruption(_))
        ));
        assert!(matches!(
            decode_code_map(&good[..3]),
            Err(Error::Corruption(_))
        ));

        let cb = init_codebook(4, 3, 1).unwrap();
        let bytes = encode_codebook(&cb);
        assert!(matches!(
            decode_codebook(&bytes[..bytes.len() - 2]),
            Err(Error::Corruption(_))
        ));
        assert!(matches!(decode_codebook(&good), Err(Error::Corruption(_))));
        let mut nan = bytes.clone();
        nan[21..25].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(decode_codebook(&nan), Err(Error::Corruption(_))));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cb = init_codebook(8, 5, 9).unwrap();
        let path = dir.path().join("cb.sdcb");
        write_codebook(&path, &cb).unwrap();
        assert_eq!(read_codebook(&path).unwrap(), cb);

        let map = CodeIndexMap::new(3, 4, 8, (0..12).map(|i| (i % 8) as u16).collect()).unwrap();
        let path = dir.path().join("0.sdcm");
        write_code_map(&path, &map).unwrap();
        assert_eq!(read_code_map(&path).unwrap(), map);
    }
}
