//! On-disk index format.
//!
//! ```text
//! "SGIX"                     4 bytes
//! version                    u32 LE (currently 1)
//! dim                        u32 LE
//! count                      u64 LE
//! count x {
//!     id_len                 u32 LE
//!     id                     UTF-8
//!     rep                    dim x f32 LE
//!     meta_len               u32 LE
//!     meta                   UTF-8
//! }
//! crc32                      u32 LE, over every preceding byte
//! ```
//!
//! Build time and config fingerprint are not part of this layout; they go to
//! a `<path>.meta` sidecar of `key=value` lines next to the index file.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::retrieval::{IndexEntry, RetrievalIndex};

pub const MAGIC: &[u8; 4] = b"SGIX";
pub const VERSION: u32 = 1;

/// Serializes `index` in the binary layout above.
pub fn encode_index(index: &RetrievalIndex) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + index.len() * (index.dim() * 4 + 16));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(index.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(index.len() as u64).to_le_bytes());
    for e in index.entries() {
        out.extend_from_slice(&(e.doc_id.len() as u32).to_le_bytes());
        out.extend_from_slice(e.doc_id.as_bytes());
        for x in &e.rep {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out.extend_from_slice(&(e.meta.len() as u32).to_le_bytes());
        out.extend_from_slice(e.meta.as_bytes());
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Corrupt("unexpected end of data".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        String::from_utf8(self.take(len)?.to_vec())
            .map_err(|_| Error::Corrupt("invalid UTF-8".into()))
    }
}

/// Parses bytes produced by [`encode_index`]. The sidecar fields are set to 0.
pub fn decode_index(bytes: &[u8]) -> Result<RetrievalIndex> {
    if bytes.len() < 4 {
        return Err(Error::ChecksumMismatch);
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    if bytes.len() < 8 + 4 {
        return Err(Error::ChecksumMismatch);
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(Error::VersionMismatch(version));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
    if crc32fast::hash(body) != stored {
        return Err(Error::ChecksumMismatch);
    }
    let mut r = Reader { buf: body, pos: 8 };
    let dim = r.u32()? as usize;
    let count = r.u64()?;
    let mut entries = Vec::new();
    for _ in 0..count {
        let doc_id = r.string()?;
        let raw = r.take(dim.checked_mul(4).ok_or_else(|| Error::Corrupt("dim overflow".into()))?)?;
        let rep = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        let meta = r.string()?;
        entries.push(IndexEntry { doc_id, rep, meta });
    }
    if r.pos != body.len() {
        return Err(Error::Corrupt("trailing bytes after entries".into()));
    }
    Ok(RetrievalIndex::from_parts(dim, entries, 0, 0))
}

/// Path of the sidecar holding build time and config fingerprint.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn save_index(index: &RetrievalIndex, path: &Path) -> Result<()> {
    fs::write(path, encode_index(index)).map_err(io_err(path))?;
    let side = sidecar_path(path);
    let text = format!(
        "created_at={}\nconfig_fingerprint={:016x}\n",
        index.created_at(),
        index.config_fingerprint()
    );
    fs::write(&side, text).map_err(io_err(&side))
}

/// Reads an index and, when present, its sidecar.
pub fn load_index(path: &Path) -> Result<RetrievalIndex> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let index = decode_index(&bytes)?;
    let side = sidecar_path(path);
    let (mut created_at, mut fingerprint) = (0, 0);
    match fs::read_to_string(&side) {
        Ok(text) => {
            for line in text.lines().filter(|l| !l.trim().is_empty()) {
                let bad = || Error::Corrupt(format!("bad sidecar line {line:?}"));
                let (k, v) = line.split_once('=').ok_or_else(bad)?;
                match k.trim() {
                    "created_at" => created_at = v.trim().parse().map_err(|_| bad())?,
                    "config_fingerprint" => {
                        fingerprint = u64::from_str_radix(v.trim(), 16).map_err(|_| bad())?
                    }
                    _ => return Err(bad()),
                }
            }
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
        Err(e) => return Err(io_err(&side)(e)),
    }
    Ok(RetrievalIndex::from_parts(
        index.dim(),
        index.entries().to_vec(),
        created_at,
        fingerprint,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::KernelConfig;
    use crate::retrieval::{build_index, IndexInput};

    fn sample() -> RetrievalIndex {
        build_index(
            vec![
                IndexInput::new("a", vec![1.0, 2.0, 3.0], "first"),
                IndexInput::new("β", vec![-1.0, 0.5, 0.0], ""),
            ],
            &KernelConfig::default(),
        )
        .unwrap()
        .with_created_at(1_700_000_000)
    }

    #[test]
    fn layout_header() {
        let bytes = encode_index(&sample());
        assert_eq!(&bytes[..4], b"SGIX");
        assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &3u32.to_le_bytes());
        assert_eq!(&bytes[12..20], &2u64.to_le_bytes());
        // 20 header + (4+1+12+4+5) + (4+2+12+4+0) + 4 crc
        assert_eq!(bytes.len(), 20 + 26 + 22 + 4);
    }

    #[test]
    fn errors() {
        let bytes = encode_index(&sample());
        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(matches!(decode_index(&bad_magic), Err(Error::BadMagic)));
        let mut bad_version = bytes.clone();
        bad_version[4] = 2;
        assert!(matches!(decode_index(&bad_version), Err(Error::VersionMismatch(2))));
        assert!(matches!(
            decode_index(&bytes[..bytes.len() - 7]),
            Err(Error::ChecksumMismatch)
        ));
        assert!(matches!(decode_index(&bytes[..2]), Err(Error::ChecksumMismatch)));
    }

    #[test]
    fn file_round_trip_with_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.sgix");
        let idx = sample();
        save_index(&idx, &path).unwrap();
        let back = load_index(&path).unwrap();
        assert_eq!(back, idx);
        fs::remove_file(sidecar_path(&path)).unwrap();
        let bare = load_index(&path).unwrap();
        assert_eq!(bare.entries(), idx.entries());
        assert_eq!(bare.config_fingerprint(), 0);
        assert!(matches!(
            load_index(&dir.path().join("missing")),
            Err(Error::Io { .. })
        ));
    }
}
