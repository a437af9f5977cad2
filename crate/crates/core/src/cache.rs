//! Binary table cache, one file per (machine digest, condition).
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! machine header   "ASLB", format u8, id_len u8, id bytes, T u32, N_max u16,
//!                  L_max u8, enum_order u8, digest u64
//! condition        bit length u16, ceil(len/8) bytes MSB-first
//! entry count      u64
//! entries          sorted by output (length, value):
//!                  output length u16, output bytes, complexity u8, witness bits u32
//! trailer          u64 digest of every preceding byte
//! ```
//!
//! Digests are the first 8 bytes of SHA-256, read big-endian.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::bits::{BitString, Program};
use crate::complexity::ComplexityTable;
use crate::error::{LabError, Result};
use crate::machine::{digest64, MachineConfig};

pub const CACHE_EXTENSION: &str = "aslb";
/// Environment variable overriding the default cache directory.
pub const CACHE_DIR_ENV: &str = "ASLAB_CACHE_DIR";

#[derive(Debug, Clone)]
pub struct TableCache {
    dir: PathBuf,
}

pub fn encode_table(config: &MachineConfig, table: &ComplexityTable) -> Vec<u8> {
    let mut out = config.header_bytes();
    let cond = table.condition();
    out.extend_from_slice(&(cond.len() as u16).to_le_bytes());
    out.extend_from_slice(&cond.to_bytes());
    out.extend_from_slice(&(table.len() as u64).to_le_bytes());
    for (x, c, w) in table.iter() {
        out.extend_from_slice(&(x.len() as u16).to_le_bytes());
        out.extend_from_slice(&x.to_bytes());
        out.push(c as u8);
        out.extend_from_slice(&w.bits().to_le_bytes());
    }
    let trailer = digest64(&out);
    out.extend_from_slice(&trailer.to_le_bytes());
    out
}

/// Decodes a cache file, checking both digests against `expected`.
pub fn decode_table(bytes: &[u8], expected: &MachineConfig, path: &Path) -> Result<ComplexityTable> {
    let corrupt = |reason: String| LabError::CacheCorrupt { path: path.to_path_buf(), reason };
    if bytes.len() < 8 {
        return Err(corrupt("file too short".into()));
    }
    let (body, trailer) = bytes.split_at(bytes.len() - 8);
    let (config, mut at, stored) = MachineConfig::parse_header(body).map_err(corrupt)?;
    if stored != config.digest() {
        return Err(corrupt("header digest does not match header fields".into()));
    }
    if stored != expected.digest() {
        return Err(LabError::CacheVersion { path: path.to_path_buf(), expected: expected.digest(), found: stored });
    }
    if u64::from_le_bytes(trailer.try_into().unwrap()) != digest64(body) {
        return Err(corrupt("body digest mismatch".into()));
    }
    let mut read = |n: usize| -> Result<&[u8]> {
        let s = body.get(at..at + n).ok_or_else(|| corrupt("truncated body".into()))?;
        at += n;
        Ok(s)
    };
    let cond_len = u16::from_le_bytes(read(2)?.try_into().unwrap()) as u32;
    let condition = BitString::from_bytes(read(cond_len.div_ceil(8) as usize)?, cond_len)?;
    let count = u64::from_le_bytes(read(8)?.try_into().unwrap());
    let mut entries = BTreeMap::new();
    let mut previous: Option<BitString> = None;
    for _ in 0..count {
        let len = u16::from_le_bytes(read(2)?.try_into().unwrap()) as u32;
        let output = BitString::from_bytes(read(len.div_ceil(8) as usize)?, len)?;
        let c = read(1)?[0] as u32;
        let bits = u32::from_le_bytes(read(4)?.try_into().unwrap());
        if c > config.l_max || (c < 32 && bits >> c != 0) {
            return Err(corrupt(format!("bad entry for {output}")));
        }
        if previous.is_some_and(|p| p >= output) {
            return Err(corrupt("entries not sorted".into()));
        }
        previous = Some(output);
        entries.insert(output, Program::new(bits, c));
    }
    if at != body.len() {
        return Err(corrupt("trailing bytes after entries".into()));
    }
    Ok(ComplexityTable::from_witnesses(condition, stored, config.l_max, entries))
}

/// Status of one file in the cache directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FileStatus {
    Ok { entries: usize, audited: usize },
    Mismatch(String),
}

impl TableCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<TableCache> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(TableCache { dir })
    }

    /// `$ASLAB_CACHE_DIR`, or `default` when unset.
    pub fn from_env(default: impl Into<PathBuf>) -> Result<TableCache> {
        match std::env::var_os(CACHE_DIR_ENV) {
            Some(dir) => TableCache::new(PathBuf::from(dir)),
            None => TableCache::new(default),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, config: &MachineConfig, condition: &BitString) -> PathBuf {
        let cond_hex: String = condition.to_bytes().iter().map(|b| format!("{b:02x}")).collect();
        self.dir.join(format!("{:016x}-{}-{}.{CACHE_EXTENSION}", config.digest(), condition.len(), cond_hex))
    }

    pub fn load(&self, config: &MachineConfig, condition: &BitString) -> Result<Option<ComplexityTable>> {
        let path = self.path_for(config, condition);
        match fs::read(&path) {
            Ok(bytes) => {
                let table = decode_table(&bytes, config, &path)?;
                if table.condition() != *condition {
                    return Err(LabError::CacheCorrupt { path, reason: "condition mismatch".into() });
                }
                Ok(Some(table))
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    pub fn store(&self, config: &MachineConfig, table: &ComplexityTable) -> Result<PathBuf> {
        let path = self.path_for(config, &table.condition());
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, encode_table(config, table))?;
        fs::rename(&tmp, &path)?;
        Ok(path)
    }

    /// Cache files in name order.
    pub fn files(&self) -> Result<Vec<PathBuf>> {
        let mut files: Vec<PathBuf> = fs::read_dir(&self.dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == CACHE_EXTENSION))
            .collect();
        files.sort();
        Ok(files)
    }

    /// Re-derives digests of every file and re-runs 1% of witnesses (at least one per file).
    pub fn verify<M: crate::machine::DescriptionMode>(&self, mode: &M) -> Result<Vec<(PathBuf, FileStatus)>> {
        let mut report = Vec::new();
        for path in self.files()? {
            let bytes = fs::read(&path)?;
            let status = match decode_table(&bytes, mode.config(), &path) {
                Ok(table) => audit(mode, &table),
                Err(e) => FileStatus::Mismatch(e.to_string()),
            };
            report.push((path, status));
        }
        Ok(report)
    }

    /// Removes every file that fails verification; returns the removed paths.
    pub fn invalidate<M: crate::machine::DescriptionMode>(&self, mode: &M) -> Result<Vec<PathBuf>> {
        let mut removed = Vec::new();
        for (path, status) in self.verify(mode)? {
            if matches!(status, FileStatus::Mismatch(_)) {
                fs::remove_file(&path)?;
                removed.push(path);
            }
        }
        Ok(removed)
    }
}

fn audit<M: crate::machine::DescriptionMode>(mode: &M, table: &ComplexityTable) -> FileStatus {
    let stride = (table.len() / 100).max(1);
    let mut audited = 0;
    for (x, c, w) in table.iter().step_by(stride) {
        if w.len() != c || mode.run(w, &table.condition()).output() != Some(x) {
            return FileStatus::Mismatch(format!("witness for {x} does not reproduce it"));
        }
        audited += 1;
    }
    FileStatus::Ok { entries: table.len(), audited }
}
