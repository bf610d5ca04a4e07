//! On-disk formats: portable frames, binary codebooks and code maps, ground
//! truth annotations.
//!
//! All binary formats are little-endian. Writers replace their target
//! atomically through a temporary file in the same directory.

mod binary;
mod ground_truth;
mod pnm;

use std::io::Write;
use std::path::{Path, PathBuf};

pub use binary::{
    decode_code_map, decode_codebook, encode_code_map, encode_codebook, read_code_map,
    read_codebook, write_code_map, write_codebook, CODEBOOK_MAGIC, CODE_MAP_HEADER_LEN,
    CODE_MAP_MAGIC, FORMAT_VERSION,
};
pub use ground_truth::{parse_ground_truth, read_ground_truth};
pub use pnm::{
    decode_pnm, encode_pnm, read_frame, resize_pad, write_frame, TARGET_CHANNELS, TARGET_HEIGHT,
    TARGET_WIDTH,
};

use crate::error::{Error, Result};

/// Writes `bytes` to a temporary sibling of `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

/// A file whose stem is a frame number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NumberedFile {
    pub number: u64,
    pub stem: String,
    pub path: PathBuf,
}

/// Files in `dir` with one of `extensions` (case-insensitive), ordered by the
/// numeric value of their stem. Stems must be decimal numbers.
pub fn list_numbered(dir: &Path, extensions: &[&str]) -> Result<Vec<NumberedFile>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if !path.is_file() {
            continue;
        }
        let ext = match path.extension().and_then(|e| e.to_str()) {
            Some(e) => e.to_ascii_lowercase(),
            None => continue,
        };
        if !extensions.iter().any(|x| x.eq_ignore_ascii_case(&ext)) {
            continue;
        }
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::Data(format!("{} has a non UTF-8 name", path.display())))?
            .to_owned();
        let number = stem.parse::<u64>().map_err(|_| {
            Error::Data(format!(
                "{} does not have a numeric file stem",
                path.display()
            ))
        })?;
        files.push(NumberedFile { number, stem, path });
    }
    files.sort_by(|a, b| a.number.cmp(&b.number).then_with(|| a.stem.cmp(&b.stem)));
    if let Some(w) = files.windows(2).find(|w| w[0].number == w[1].number) {
        return Err(Error::Data(format!(
            "{} and {} share frame number {}",
            w[0].path.display(),
            w[1].path.display(),
            w[0].number
        )));
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbered_listing_orders_numerically() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["10.pgm", "2.pgm", "0001.PGM", "notes.txt"] {
            std::fs::write(dir.path().join(name), b"x").unwrap();
        }
        let files = list_numbered(dir.path(), &["pgm", "ppm"]).unwrap();
        let stems: Vec<&str> = files.iter().map(|f| f.stem.as_str()).collect();
        assert_eq!(stems, vec!["0001", "2", "10"]);
    }

    #[test]
    fn numbered_listing_rejects_bad_stems() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("frame_a.pgm"), b"x").unwrap();
        assert!(matches!(
            list_numbered(dir.path(), &["pgm"]),
            Err(Error::Data(_))
        ));

        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("1.pgm"), b"x").unwrap();
        std::fs::write(dir.path().join("01.pgm"), b"x").unwrap();
        assert!(matches!(
            list_numbered(dir.path(), &["pgm"]),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.bin");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"second");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
