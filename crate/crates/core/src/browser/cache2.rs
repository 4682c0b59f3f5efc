//! cache2 entry files: body bytes followed by a metadata block. The last
//! four bytes of the file give the metadata start; the metadata holds chunk
//! hashes, a fixed header (fetch count, last-fetched and last-modified
//! seconds), the key string, and element pairs.

use super::{ExtractError, ExtractOptions, Extraction};
use crate::artifact::{Artifact, ArtifactKind, Category, Location, Provenance, RecoveryState};
use crate::timestamp::{normalize_timestamp, EpochKind};
use std::fs;
use std::path::Path;

/// Bytes of body covered by one chunk hash.
pub const CACHE2_CHUNK: usize = 256 * 1024;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cache2Entry {
    pub key: String,
    pub url: String,
    pub version: u32,
    pub fetch_count: u32,
    pub last_fetched: u32,
    pub last_modified: u32,
    pub body_len: usize,
}

fn be32(bytes: &[u8], off: usize) -> Option<u32> {
    bytes
        .get(off..off + 4)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()))
}

/// Parse one entry file.
pub fn parse_cache2_entry(bytes: &[u8]) -> Option<Cache2Entry> {
    if bytes.len() < 4 {
        return None;
    }
    let meta_offset = be32(bytes, bytes.len() - 4)? as usize;
    if meta_offset + 4 > bytes.len() {
        return None;
    }
    let body_len = meta_offset;
    let chunks = body_len.div_ceil(CACHE2_CHUNK);
    let header_start = meta_offset + chunks * 2;
    let version = be32(bytes, header_start)?;
    if version == 0 || version > 3 {
        return None;
    }
    let fetch_count = be32(bytes, header_start + 4)?;
    let last_fetched = be32(bytes, header_start + 8)?;
    let last_modified = be32(bytes, header_start + 12)?;
    let key_size = be32(bytes, header_start + 24)? as usize;
    // version 3 adds a flags word before the key
    let key_start = header_start + if version >= 3 { 32 } else { 28 };
    let key_bytes = bytes.get(key_start..key_start + key_size)?;
    let key = std::str::from_utf8(key_bytes).ok()?.to_string();
    // the key is tag fields joined by commas with ":<uri>" last
    let url = key
        .split(',')
        .find(|part| part.starts_with(':'))
        .map(|part| part[1..].to_string())
        .unwrap_or_else(|| key.clone());
    Some(Cache2Entry {
        key,
        url,
        version,
        fetch_count,
        last_fetched,
        last_modified,
        body_len,
    })
}

/// Extract one artifact per parseable entry under `<profile>/cache2/entries`.
pub fn extract_cache2(
    profile: &Path,
    evidence_id: &str,
    opts: &ExtractOptions,
) -> Result<Extraction, ExtractError> {
    extract_cache2_dir(&profile.join("cache2"), evidence_id, opts)
}

/// Same, for a cache directory registered directly as evidence.
pub fn extract_cache2_dir(
    cache_root: &Path,
    evidence_id: &str,
    _opts: &ExtractOptions,
) -> Result<Extraction, ExtractError> {
    let entries_dir = cache_root.join("entries");
    if !entries_dir.is_dir() {
        return Err(ExtractError::StoreAbsent(entries_dir.display().to_string()));
    }
    let mut out = Extraction::default();
    let mut files: Vec<_> = fs::read_dir(&entries_dir)?
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    for path in files {
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(err) => {
                out.warnings.push(format!("{}: {err}", path.display()));
                continue;
            }
        };
        let entry = match parse_cache2_entry(&bytes) {
            Some(e) => e,
            None => {
                out.warnings
                    .push(format!("{}: unparseable cache entry", path.display()));
                continue;
            }
        };
        let mut timestamps = Vec::new();
        for (label, secs) in [
            ("last-fetched", entry.last_fetched),
            ("last-modified", entry.last_modified),
        ] {
            if secs > 0 {
                if let Ok(t) = normalize_timestamp(secs as i64, EpochKind::UnixSeconds) {
                    timestamps.push((label.to_string(), t.at));
                }
            }
        }
        out.artifacts.push(Artifact::new(
            ArtifactKind::WebsiteContent,
            Category::CacheTemp,
            Location::FileSystem,
            RecoveryState::Live,
            entry.url.clone(),
            timestamps,
            Provenance {
                evidence_id: evidence_id.to_string(),
                source: "cache2".to_string(),
                detail: format!(
                    "entry={} fetch_count={}",
                    path.file_name().unwrap_or_default().to_string_lossy(),
                    entry.fetch_count
                ),
            },
        ));
    }
    Ok(out)
}

/// Serialize an entry in the documented layout. The writer lives here next
/// to the parser so the two stay in lockstep; the corpus generator calls it.
pub fn write_cache2_entry(key: &str, body: &[u8], fetch_count: u32, last_fetched: u32, last_modified: u32) -> Vec<u8> {
    let mut out = Vec::with_capacity(body.len() + key.len() + 64);
    out.extend_from_slice(body);
    let chunks = body.len().div_ceil(CACHE2_CHUNK);
    for i in 0..chunks {
        // chunk hash: 16-bit; content is irrelevant to the reader
        let lo = CACHE2_CHUNK * i;
        let hi = (lo + CACHE2_CHUNK).min(body.len());
        let sum: u16 = body[lo..hi].iter().fold(0u16, |a, b| a.wrapping_add(*b as u16));
        out.extend_from_slice(&sum.to_be_bytes());
    }
    out.extend_from_slice(&3u32.to_be_bytes()); // version
    out.extend_from_slice(&fetch_count.to_be_bytes());
    out.extend_from_slice(&last_fetched.to_be_bytes());
    out.extend_from_slice(&last_modified.to_be_bytes());
    out.extend_from_slice(&0u32.to_be_bytes()); // frecency
    out.extend_from_slice(&0u32.to_be_bytes()); // expiration
    out.extend_from_slice(&(key.len() as u32).to_be_bytes());
    out.extend_from_slice(&0u32.to_be_bytes()); // flags
    out.extend_from_slice(key.as_bytes());
    out.push(0);
    out.extend_from_slice(&((body.len()) as u32).to_be_bytes());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_entry() {
        let bytes = write_cache2_entry(
            ":https://hidden.example/page",
            b"<html>cache body</html>",
            7,
            1_622_505_600,
            1_622_505_000,
        );
        let entry = parse_cache2_entry(&bytes).unwrap();
        assert_eq!(entry.url, "https://hidden.example/page");
        assert_eq!(entry.fetch_count, 7);
        assert_eq!(entry.last_fetched, 1_622_505_600);
        assert_eq!(entry.body_len, 23);
    }

    #[test]
    fn truncated_entry_rejected() {
        let bytes = write_cache2_entry(":https://a.example/", b"body", 1, 1, 1);
        assert!(parse_cache2_entry(&bytes[..bytes.len() / 2]).is_none());
        assert!(parse_cache2_entry(&[]).is_none());
        assert!(parse_cache2_entry(&[0, 0, 0, 200]).is_none());
    }

    #[test]
    fn extracts_planted_entries() {
        let dir = tempfile::tempdir().unwrap();
        let entries = dir.path().join("cache2/entries");
        fs::create_dir_all(&entries).unwrap();
        for (name, url) in [("AA11", "https://one.example/"), ("BB22", "https://two.example/x")] {
            let key = format!(":{url}");
            fs::write(
                entries.join(name),
                write_cache2_entry(&key, b"payload", 1, 1_600_000_000, 1_600_000_000),
            )
            .unwrap();
        }
        // one truncated file is skipped with a warning
        fs::write(entries.join("CC33"), [0u8, 1, 2]).unwrap();
        let out = extract_cache2(dir.path(), "E001", &ExtractOptions::default()).unwrap();
        assert_eq!(out.artifacts.len(), 2);
        assert_eq!(out.warnings.len(), 1);
        let urls: Vec<&str> = out.artifacts.iter().map(|a| a.value.as_str()).collect();
        assert!(urls.contains(&"https://one.example/"));
        assert!(urls.contains(&"https://two.example/x"));
    }

    #[test]
    fn absent_dir() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            extract_cache2(dir.path(), "E001", &ExtractOptions::default()),
            Err(ExtractError::StoreAbsent(_))
        ));
    }
}
