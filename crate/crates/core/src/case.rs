//! Case container: evidence registry, SHA-256 integrity, and an append-only
//! chain-of-custody ledger persisted as a deterministic tab-separated
//! manifest (sorted lines, bit-exact across runs for identical inputs).

use crate::timestamp::{format_utc, parse_utc};
use chrono::{DateTime, SubsecRound, Utc};
use sha2::{Digest, Sha256};
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const MANIFEST_NAME: &str = "case.manifest";

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("case id must not be empty")]
    EmptyId,
    #[error("case {0} already exists in this workspace")]
    DuplicateCase(String),
    #[error("evidence {0} is not registered")]
    NotFound(String),
    #[error("volatility level {0} outside 1..=10")]
    InvalidVolatility(u8),
    #[error("malformed manifest line: {0}")]
    Manifest(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EvidenceKind {
    DirectoryTree,
    SqliteStore,
    RegistryHive,
    MemoryDump,
    CacheStore,
    OpaqueFile,
}

impl EvidenceKind {
    pub fn label(&self) -> &'static str {
        match self {
            EvidenceKind::DirectoryTree => "directory-tree",
            EvidenceKind::SqliteStore => "sqlite-store",
            EvidenceKind::RegistryHive => "registry-hive",
            EvidenceKind::MemoryDump => "memory-dump",
            EvidenceKind::CacheStore => "cache-store",
            EvidenceKind::OpaqueFile => "opaque-file",
        }
    }

    pub fn parse(label: &str) -> Option<Self> {
        [
            EvidenceKind::DirectoryTree,
            EvidenceKind::SqliteStore,
            EvidenceKind::RegistryHive,
            EvidenceKind::MemoryDump,
            EvidenceKind::CacheStore,
            EvidenceKind::OpaqueFile,
        ]
        .iter()
        .copied()
        .find(|k| k.label() == label)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvidenceItem {
    pub evidence_id: String,
    pub kind: EvidenceKind,
    pub path: PathBuf,
    pub size_bytes: u64,
    pub sha256: String,
    pub acquired_at: DateTime<Utc>,
    pub volatility_level: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CustodyAction {
    Acquired,
    Verified,
    Analyzed,
    Exported,
}

impl CustodyAction {
    pub fn label(&self) -> &'static str {
        match self {
            CustodyAction::Acquired => "acquired",
            CustodyAction::Verified => "verified",
            CustodyAction::Analyzed => "analyzed",
            CustodyAction::Exported => "exported",
        }
    }

    pub fn parse(label: &str) -> Option<Self> {
        [
            CustodyAction::Acquired,
            CustodyAction::Verified,
            CustodyAction::Analyzed,
            CustodyAction::Exported,
        ]
        .iter()
        .copied()
        .find(|a| a.label() == label)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CustodyRecord {
    pub evidence_id: String,
    pub action: CustodyAction,
    pub actor: String,
    pub at: DateTime<Utc>,
    pub digest_at_action: String,
}

/// Wall clock truncated to the microsecond precision the manifest stores,
/// so serialize/reload round-trips exactly.
fn now_micros() -> DateTime<Utc> {
    Utc::now().trunc_subsecs(6)
}

#[derive(Debug, Clone)]
pub struct Case {
    pub case_id: String,
    pub examiner: String,
    pub created_at: DateTime<Utc>,
    pub evidence: Vec<EvidenceItem>,
    custody_log: Vec<CustodyRecord>,
}

impl Case {
    /// Open a new empty case. Fails on an empty id; workspace-level
    /// uniqueness is enforced by [`Workspace::create_case`].
    pub fn open(case_id: &str, examiner: &str) -> Result<Case, CaseError> {
        if case_id.is_empty() {
            return Err(CaseError::EmptyId);
        }
        Ok(Case {
            case_id: case_id.to_string(),
            examiner: examiner.to_string(),
            created_at: now_micros(),
            evidence: Vec::new(),
            custody_log: Vec::new(),
        })
    }

    pub fn custody_log(&self) -> &[CustodyRecord] {
        &self.custody_log
    }

    /// Register one evidence source: hash its full content, record it, and
    /// append an `acquired` custody record.
    pub fn register_evidence(
        &mut self,
        path: &Path,
        kind: EvidenceKind,
        volatility_level: u8,
        actor: &str,
    ) -> Result<&EvidenceItem, CaseError> {
        if !(1..=10).contains(&volatility_level) {
            return Err(CaseError::InvalidVolatility(volatility_level));
        }
        let (sha256, size_bytes) = digest_source(path)?;
        let evidence_id = format!("E{:03}", self.evidence.len() + 1);
        let now = now_micros();
        self.custody_log.push(CustodyRecord {
            evidence_id: evidence_id.clone(),
            action: CustodyAction::Acquired,
            actor: actor.to_string(),
            at: now,
            digest_at_action: sha256.clone(),
        });
        self.evidence.push(EvidenceItem {
            evidence_id,
            kind,
            path: path.to_path_buf(),
            size_bytes,
            sha256,
            acquired_at: now,
            volatility_level,
        });
        Ok(self.evidence.last().unwrap())
    }

    /// Recompute the digest and compare with the registered one. A custody
    /// record is appended whether or not the content still matches.
    pub fn verify_integrity(&mut self, evidence_id: &str, actor: &str) -> Result<bool, CaseError> {
        let item = self
            .evidence
            .iter()
            .find(|e| e.evidence_id == evidence_id)
            .cloned()
            .ok_or_else(|| CaseError::NotFound(evidence_id.to_string()))?;
        let (digest, _) = digest_source(&item.path)?;
        let ok = digest == item.sha256;
        self.custody_log.push(CustodyRecord {
            evidence_id: evidence_id.to_string(),
            action: CustodyAction::Verified,
            actor: actor.to_string(),
            at: now_micros(),
            digest_at_action: digest,
        });
        Ok(ok)
    }

    /// Append an analysis or export custody record for an evidence item.
    pub fn record_action(
        &mut self,
        evidence_id: &str,
        action: CustodyAction,
        actor: &str,
    ) -> Result<(), CaseError> {
        let item = self
            .evidence
            .iter()
            .find(|e| e.evidence_id == evidence_id)
            .ok_or_else(|| CaseError::NotFound(evidence_id.to_string()))?;
        self.custody_log.push(CustodyRecord {
            evidence_id: evidence_id.to_string(),
            action,
            actor: actor.to_string(),
            at: now_micros(),
            digest_at_action: item.sha256.clone(),
        });
        Ok(())
    }

    pub fn evidence_by_id(&self, evidence_id: &str) -> Option<&EvidenceItem> {
        self.evidence.iter().find(|e| e.evidence_id == evidence_id)
    }

    /// Serialize to the manifest form: one record per line, tab-separated,
    /// sorted by (record type, timestamp, id).
    pub fn to_manifest(&self) -> String {
        let mut lines = Vec::new();
        lines.push(format!(
            "case\t{}\t{}\t{}",
            format_utc(&self.created_at),
            self.case_id,
            self.examiner
        ));
        for rec in &self.custody_log {
            lines.push(format!(
                "custody\t{}\t{}\t{}\t{}\t{}",
                format_utc(&rec.at),
                rec.evidence_id,
                rec.action.label(),
                rec.actor,
                rec.digest_at_action
            ));
        }
        for item in &self.evidence {
            lines.push(format!(
                "evidence\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                format_utc(&item.acquired_at),
                item.evidence_id,
                item.kind.label(),
                item.volatility_level,
                item.size_bytes,
                item.sha256,
                item.path.display()
            ));
        }
        lines.sort();
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }

    pub fn from_manifest(text: &str) -> Result<Case, CaseError> {
        let mut case: Option<Case> = None;
        let mut custody = Vec::new();
        let mut evidence = Vec::new();
        for line in text.lines() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let bad = || CaseError::Manifest(line.to_string());
            match fields[0] {
                "case" if fields.len() == 4 => {
                    case = Some(Case {
                        case_id: fields[2].to_string(),
                        examiner: fields[3].to_string(),
                        created_at: parse_utc(fields[1]).ok_or_else(bad)?,
                        evidence: Vec::new(),
                        custody_log: Vec::new(),
                    });
                }
                "custody" if fields.len() == 6 => custody.push(CustodyRecord {
                    at: parse_utc(fields[1]).ok_or_else(bad)?,
                    evidence_id: fields[2].to_string(),
                    action: CustodyAction::parse(fields[3]).ok_or_else(bad)?,
                    actor: fields[4].to_string(),
                    digest_at_action: fields[5].to_string(),
                }),
                "evidence" if fields.len() == 8 => evidence.push(EvidenceItem {
                    acquired_at: parse_utc(fields[1]).ok_or_else(bad)?,
                    evidence_id: fields[2].to_string(),
                    kind: EvidenceKind::parse(fields[3]).ok_or_else(bad)?,
                    volatility_level: fields[4].parse().map_err(|_| bad())?,
                    size_bytes: fields[5].parse().map_err(|_| bad())?,
                    sha256: fields[6].to_string(),
                    path: PathBuf::from(fields[7]),
                }),
                _ => return Err(bad()),
            }
        }
        let mut case = case.ok_or_else(|| CaseError::Manifest("missing case line".into()))?;
        evidence.sort_by(|a, b| a.evidence_id.cmp(&b.evidence_id));
        custody.sort_by(|a, b| (a.at, &a.evidence_id).cmp(&(b.at, &b.evidence_id)));
        case.evidence = evidence;
        case.custody_log = custody;
        Ok(case)
    }
}

/// A workspace directory holding one case manifest plus run outputs.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub root: PathBuf,
}

impl Workspace {
    pub fn at(root: &Path) -> Workspace {
        Workspace {
            root: root.to_path_buf(),
        }
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.root.join(MANIFEST_NAME)
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.root.join("reports")
    }

    /// Create a new case in this workspace; refuses to clobber an existing one.
    pub fn create_case(&self, case_id: &str, examiner: &str) -> Result<Case, CaseError> {
        if self.manifest_path().exists() {
            return Err(CaseError::DuplicateCase(case_id.to_string()));
        }
        let case = Case::open(case_id, examiner)?;
        fs::create_dir_all(&self.root)?;
        self.save(&case)?;
        Ok(case)
    }

    pub fn load(&self) -> Result<Case, CaseError> {
        let text = fs::read_to_string(self.manifest_path())?;
        Case::from_manifest(&text)
    }

    pub fn save(&self, case: &Case) -> Result<(), CaseError> {
        fs::create_dir_all(&self.root)?;
        fs::write(self.manifest_path(), case.to_manifest())?;
        Ok(())
    }
}

/// SHA-256 of a file's content, or of a directory tree in deterministic
/// form (lexicographic relative paths, each hashed as path, NUL, content).
pub fn digest_source(path: &Path) -> Result<(String, u64), CaseError> {
    let meta = fs::metadata(path)?;
    if meta.is_dir() {
        let mut hasher = Sha256::new();
        let mut total = 0u64;
        for rel in sorted_files(path)? {
            let abs = path.join(&rel);
            hasher.update(rel.to_string_lossy().replace('\\', "/").as_bytes());
            hasher.update([0u8]);
            let mut f = fs::File::open(&abs)?;
            total += copy_into(&mut f, &mut hasher)?;
        }
        Ok((hex::encode(hasher.finalize()), total))
    } else {
        let mut hasher = Sha256::new();
        let mut f = fs::File::open(path)?;
        let n = copy_into(&mut f, &mut hasher)?;
        Ok((hex::encode(hasher.finalize()), n))
    }
}

fn copy_into(reader: &mut impl Read, hasher: &mut Sha256) -> Result<u64, CaseError> {
    let mut buf = [0u8; 65536];
    let mut total = 0u64;
    loop {
        let n = reader.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
        total += n as u64;
    }
    Ok(total)
}

fn sorted_files(root: &Path) -> Result<Vec<PathBuf>, CaseError> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
        let mut entries: Vec<_> = fs::read_dir(dir)?.collect::<Result<_, _>>()?;
        entries.sort_by_key(|e| e.file_name());
        for entry in entries {
            let p = entry.path();
            if p.is_dir() {
                walk(root, &p, out)?;
            } else {
                out.push(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(root, root, &mut out)?;
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SHA256_EMPTY: &str = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855";
    const SHA256_TEST: &str = "9f86d081884c7d659a2feaa0c55ad015a3bf4f1b2b0b822cd15d6c15b0f00a08";

    #[test]
    fn open_case_is_empty() {
        let case = Case::open("C-001", "alice").unwrap();
        assert_eq!(case.evidence.len(), 0);
        assert_eq!(case.custody_log().len(), 0);
    }

    #[test]
    fn empty_case_id_rejected() {
        assert!(matches!(Case::open("", "alice"), Err(CaseError::EmptyId)));
    }

    #[test]
    fn duplicate_case_in_workspace() {
        let dir = tempfile::tempdir().unwrap();
        let ws = Workspace::at(dir.path());
        ws.create_case("C-001", "alice").unwrap();
        assert!(matches!(
            ws.create_case("C-001", "alice"),
            Err(CaseError::DuplicateCase(_))
        ));
    }

    #[test]
    fn register_empty_file_has_known_digest() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("ram.dump");
        fs::write(&f, b"").unwrap();
        let mut case = Case::open("C-001", "alice").unwrap();
        let item = case
            .register_evidence(&f, EvidenceKind::MemoryDump, 6, "alice")
            .unwrap();
        assert_eq!(item.sha256, SHA256_EMPTY);
        assert_eq!(item.size_bytes, 0);
        assert_eq!(case.custody_log().len(), 1);
        assert_eq!(case.custody_log()[0].action, CustodyAction::Acquired);
    }

    #[test]
    fn register_test_bytes_digest_matches_external_tool() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("store.db");
        fs::write(&f, b"test").unwrap();
        let mut case = Case::open("C-001", "alice").unwrap();
        let item = case
            .register_evidence(&f, EvidenceKind::SqliteStore, 8, "alice")
            .unwrap();
        assert_eq!(item.sha256, SHA256_TEST);
    }

    #[test]
    fn volatility_out_of_range() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("hive");
        fs::write(&f, b"regf").unwrap();
        let mut case = Case::open("C-001", "alice").unwrap();
        assert!(matches!(
            case.register_evidence(&f, EvidenceKind::RegistryHive, 11, "alice"),
            Err(CaseError::InvalidVolatility(11))
        ));
        assert!(matches!(
            case.register_evidence(&f, EvidenceKind::RegistryHive, 0, "alice"),
            Err(CaseError::InvalidVolatility(0))
        ));
    }

    #[test]
    fn verify_detects_tamper_and_always_appends_custody() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("a.bin");
        fs::write(&f, b"original").unwrap();
        let mut case = Case::open("C-001", "alice").unwrap();
        let id = case
            .register_evidence(&f, EvidenceKind::OpaqueFile, 8, "alice")
            .unwrap()
            .evidence_id
            .clone();
        assert!(case.verify_integrity(&id, "alice").unwrap());
        assert!(case.verify_integrity(&id, "alice").unwrap()); // idempotent result
        fs::write(&f, b"Original").unwrap(); // one byte flipped
        assert!(!case.verify_integrity(&id, "alice").unwrap());
        // acquired + 3 verifies
        assert_eq!(case.custody_log().len(), 4);
    }

    #[test]
    fn verify_unknown_id() {
        let mut case = Case::open("C-001", "alice").unwrap();
        assert!(matches!(
            case.verify_integrity("E999", "alice"),
            Err(CaseError::NotFound(_))
        ));
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("a.bin");
        fs::write(&f, b"data").unwrap();
        let mut case = Case::open("C-001", "alice").unwrap();
        let id = case
            .register_evidence(&f, EvidenceKind::OpaqueFile, 8, "alice")
            .unwrap()
            .evidence_id
            .clone();
        case.verify_integrity(&id, "alice").unwrap();
        let text = case.to_manifest();
        let reloaded = Case::from_manifest(&text).unwrap();
        assert_eq!(reloaded.custody_log(), case.custody_log());
        assert_eq!(reloaded.evidence, case.evidence);
        assert_eq!(reloaded.to_manifest(), text);
    }

    #[test]
    fn directory_digest_is_content_and_layout_sensitive() {
        let dir = tempfile::tempdir().unwrap();
        let tree = dir.path().join("tree");
        fs::create_dir_all(tree.join("sub")).unwrap();
        fs::write(tree.join("a.txt"), b"one").unwrap();
        fs::write(tree.join("sub/b.txt"), b"two").unwrap();
        let (d1, n1) = digest_source(&tree).unwrap();
        assert_eq!(n1, 6);
        let (d2, _) = digest_source(&tree).unwrap();
        assert_eq!(d1, d2);
        fs::write(tree.join("sub/b.txt"), b"TWO").unwrap();
        let (d3, _) = digest_source(&tree).unwrap();
        assert_ne!(d1, d3);
    }

    #[test]
    fn custody_log_monotone_per_item() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("a.bin");
        fs::write(&f, b"x").unwrap();
        let mut case = Case::open("C-001", "alice").unwrap();
        let id = case
            .register_evidence(&f, EvidenceKind::OpaqueFile, 8, "alice")
            .unwrap()
            .evidence_id
            .clone();
        for _ in 0..3 {
            case.verify_integrity(&id, "alice").unwrap();
        }
        let times: Vec<_> = case
            .custody_log()
            .iter()
            .filter(|r| r.evidence_id == id)
            .map(|r| r.at)
            .collect();
        assert!(times.windows(2).all(|w| w[0] <= w[1]));
    }
}
