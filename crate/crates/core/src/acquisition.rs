//! Source classification by content signature and order-of-volatility
//! scheduling. The volatility table drives the sequence in which registered
//! evidence is processed.

use crate::case::{EvidenceItem, EvidenceKind};
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// 16-byte magic at the start of every database file in the SQLite format.
pub const SQLITE_MAGIC: &[u8; 16] = b"SQLite format 3\0";
/// 4-byte magic of a Windows registry hive.
pub const REGF_MAGIC: &[u8; 4] = b"regf";

/// The order-of-volatility table, most volatile first. Levels with no
/// host-file representation (routing tables, ARP cache, ...) stay listed
/// but simply never receive evidence in this toolkit.
pub const VOLATILITY_TABLE: [(u8, &str); 10] = [
    (1, "Cache and Registers"),
    (2, "Routing tables"),
    (3, "ARP cache"),
    (4, "Process table"),
    (5, "Kernel statistics and modules"),
    (6, "Main memory (RAM)"),
    (7, "Temporary file system"),
    (8, "Secondary memory"),
    (9, "Router configuration"),
    (10, "Network topology"),
];

pub fn volatility_name(level: u8) -> Option<&'static str> {
    VOLATILITY_TABLE
        .iter()
        .find(|(l, _)| *l == level)
        .map(|(_, n)| *n)
}

/// Default volatility level for an evidence kind: RAM dumps are level 6,
/// cache/temp trees level 7, everything else secondary storage (8).
pub fn default_volatility(kind: EvidenceKind) -> u8 {
    match kind {
        EvidenceKind::MemoryDump => 6,
        EvidenceKind::CacheStore => 7,
        _ => 8,
    }
}

#[derive(Debug, Error)]
pub enum AcquisitionError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Classify a byte prefix. Memory dumps carry no reliable magic and are
/// asserted by the operator at registration, never detected here.
pub fn detect_source_kind(first_bytes: &[u8]) -> EvidenceKind {
    if first_bytes.len() < 16 {
        return EvidenceKind::OpaqueFile;
    }
    if &first_bytes[..16] == SQLITE_MAGIC {
        return EvidenceKind::SqliteStore;
    }
    if &first_bytes[..4] == REGF_MAGIC {
        return EvidenceKind::RegistryHive;
    }
    EvidenceKind::OpaqueFile
}

/// Stable ascending sort by volatility level; equal levels keep input order.
pub fn schedule_by_volatility(mut items: Vec<EvidenceItem>) -> Vec<EvidenceItem> {
    items.sort_by_key(|i| i.volatility_level);
    items
}

#[derive(Debug, Default)]
pub struct DirectoryScan {
    /// Every regular file in deterministic depth-first order with its
    /// detected kind.
    pub entries: Vec<(PathBuf, EvidenceKind)>,
    /// Directories that look like browser profiles (contain places.sqlite).
    pub profile_dirs: Vec<PathBuf>,
    /// Unreadable children, reported rather than fatal.
    pub warnings: Vec<String>,
}

/// Walk a tree depth-first in lexicographic order, classifying every
/// regular file and flagging browser profile directories.
pub fn ingest_directory(root: &Path) -> Result<DirectoryScan, AcquisitionError> {
    let mut scan = DirectoryScan::default();
    walk(root, &mut scan)?;
    Ok(scan)
}

fn walk(dir: &Path, scan: &mut DirectoryScan) -> Result<(), AcquisitionError> {
    let mut entries: Vec<_> = fs::read_dir(dir)?.collect::<Result<_, _>>()?;
    entries.sort_by_key(|e| e.file_name());
    if entries
        .iter()
        .any(|e| e.file_name() == "places.sqlite" && e.path().is_file())
    {
        scan.profile_dirs.push(dir.to_path_buf());
    }
    for entry in entries {
        let path = entry.path();
        if path.is_dir() {
            if let Err(err) = walk(&path, scan) {
                scan.warnings.push(format!("{}: {err}", path.display()));
            }
        } else if path.is_file() {
            match classify_file(&path) {
                Ok(kind) => scan.entries.push((path, kind)),
                Err(err) => scan.warnings.push(format!("{}: {err}", path.display())),
            }
        }
    }
    Ok(())
}

fn classify_file(path: &Path) -> std::io::Result<EvidenceKind> {
    let mut buf = [0u8; 16];
    let mut f = fs::File::open(path)?;
    let mut read = 0;
    while read < 16 {
        let n = f.read(&mut buf[read..])?;
        if n == 0 {
            break;
        }
        read += n;
    }
    Ok(detect_source_kind(&buf[..read]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Utc;

    fn item(id: &str, level: u8) -> EvidenceItem {
        EvidenceItem {
            evidence_id: id.to_string(),
            kind: EvidenceKind::OpaqueFile,
            path: PathBuf::from(id),
            size_bytes: 0,
            sha256: String::new(),
            acquired_at: Utc::now(),
            volatility_level: level,
        }
    }

    #[test]
    fn detect_sqlite_magic() {
        let mut bytes = Vec::from(*SQLITE_MAGIC);
        bytes.extend_from_slice(&[0u8; 84]);
        assert_eq!(detect_source_kind(&bytes), EvidenceKind::SqliteStore);
    }

    #[test]
    fn detect_regf_magic() {
        let mut bytes = Vec::from(*REGF_MAGIC);
        bytes.extend_from_slice(&[0u8; 28]);
        assert_eq!(detect_source_kind(&bytes), EvidenceKind::RegistryHive);
    }

    #[test]
    fn short_input_is_opaque() {
        assert_eq!(detect_source_kind(b"regf"), EvidenceKind::OpaqueFile);
        assert_eq!(detect_source_kind(&[1, 2, 3, 4]), EvidenceKind::OpaqueFile);
        assert_eq!(detect_source_kind(&[]), EvidenceKind::OpaqueFile);
    }

    #[test]
    fn magic_patterns_disjoint() {
        assert_ne!(&SQLITE_MAGIC[..4], &REGF_MAGIC[..]);
    }

    #[test]
    fn schedule_sorts_by_level() {
        let out = schedule_by_volatility(vec![item("ram", 6), item("cache", 1), item("disk", 8)]);
        let levels: Vec<u8> = out.iter().map(|i| i.volatility_level).collect();
        assert_eq!(levels, vec![1, 6, 8]);
    }

    #[test]
    fn schedule_empty() {
        assert!(schedule_by_volatility(vec![]).is_empty());
    }

    #[test]
    fn schedule_is_stable() {
        let out = schedule_by_volatility(vec![item("a", 8), item("b", 8)]);
        let ids: Vec<&str> = out.iter().map(|i| i.evidence_id.as_str()).collect();
        assert_eq!(ids, vec!["a", "b"]);
    }

    #[test]
    fn volatility_table_is_ascending_1_to_10() {
        for (i, (level, _)) in VOLATILITY_TABLE.iter().enumerate() {
            assert_eq!(*level as usize, i + 1);
        }
        assert_eq!(volatility_name(6), Some("Main memory (RAM)"));
        assert_eq!(volatility_name(11), None);
    }

    #[test]
    fn ingest_flags_profiles_and_classifies() {
        let dir = tempfile::tempdir().unwrap();
        let profile = dir.path().join("profile.default");
        fs::create_dir_all(&profile).unwrap();
        let mut sqlite = Vec::from(*SQLITE_MAGIC);
        sqlite.extend_from_slice(&[0u8; 100]);
        fs::write(profile.join("places.sqlite"), &sqlite).unwrap();
        fs::write(profile.join("cookies.sqlite"), &sqlite).unwrap();
        let mut hive = Vec::from(*REGF_MAGIC);
        hive.extend_from_slice(&[0u8; 32]);
        fs::write(dir.path().join("NTUSER.DAT"), &hive).unwrap();

        let scan = ingest_directory(dir.path()).unwrap();
        assert_eq!(scan.profile_dirs, vec![profile.clone()]);
        let kinds: Vec<_> = scan
            .entries
            .iter()
            .map(|(p, k)| (p.file_name().unwrap().to_str().unwrap().to_string(), *k))
            .collect();
        assert!(kinds.contains(&("places.sqlite".into(), EvidenceKind::SqliteStore)));
        assert!(kinds.contains(&("cookies.sqlite".into(), EvidenceKind::SqliteStore)));
        assert!(kinds.contains(&("NTUSER.DAT".into(), EvidenceKind::RegistryHive)));
        // deterministic across runs
        let again = ingest_directory(dir.path()).unwrap();
        assert_eq!(again.entries, scan.entries);
    }

    #[test]
    fn ingest_empty_dir() {
        let dir = tempfile::tempdir().unwrap();
        let scan = ingest_directory(dir.path()).unwrap();
        assert!(scan.entries.is_empty());
        assert!(scan.profile_dirs.is_empty());
    }
}
