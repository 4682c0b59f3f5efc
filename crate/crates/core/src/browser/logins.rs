//! logins.json: saved-login metadata. Encrypted username/password blobs are
//! preserved opaque and never decrypted; the presence and hostname are the
//! artifact.

use super::{ExtractError, ExtractOptions, Extraction};
use crate::artifact::{Artifact, ArtifactKind, Category, Location, Provenance, RecoveryState};
use crate::timestamp::{normalize_timestamp, EpochKind};
use serde_json::Value;
use std::fs;
use std::path::Path;

const LOGINS: &str = "logins.json";

pub fn extract_logins(
    profile: &Path,
    evidence_id: &str,
    _opts: &ExtractOptions,
) -> Result<Extraction, ExtractError> {
    let path = profile.join(LOGINS);
    if !path.exists() {
        return Err(ExtractError::StoreAbsent(path.display().to_string()));
    }
    let text = fs::read_to_string(&path)?;
    let json: Value = serde_json::from_str(&text)
        .map_err(|e| ExtractError::ParseError(LOGINS.into(), e.to_string()))?;
    let mut out = Extraction::default();
    let logins = match json.get("logins").and_then(Value::as_array) {
        Some(list) => list,
        None => return Ok(out),
    };
    for (index, entry) in logins.iter().enumerate() {
        let hostname = match entry.get("hostname").and_then(Value::as_str) {
            Some(h) if !h.is_empty() => h.to_string(),
            _ => {
                out.warnings
                    .push(format!("{LOGINS}: entry {index} has no hostname"));
                continue;
            }
        };
        let mut timestamps = Vec::new();
        for (label, field) in [
            ("created", "timeCreated"),
            ("last-used", "timeLastUsed"),
            ("password-changed", "timePasswordChanged"),
        ] {
            if let Some(ms) = entry.get(field).and_then(Value::as_i64) {
                if let Ok(t) = normalize_timestamp(ms, EpochKind::UnixMillis) {
                    timestamps.push((label.to_string(), t.at));
                }
            }
        }
        let encrypted = entry
            .get("encryptedPassword")
            .and_then(Value::as_str)
            .map(|_| "<opaque>")
            .unwrap_or("<absent>");
        out.artifacts.push(Artifact::new(
            ArtifactKind::Usernames,
            Category::SecurityLogins,
            Location::FileSystem,
            RecoveryState::Live,
            hostname,
            timestamps,
            Provenance {
                evidence_id: evidence_id.to_string(),
                source: LOGINS.to_string(),
                detail: format!("login index={index} encryptedPassword={encrypted}"),
            },
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> ExtractOptions {
        ExtractOptions::default()
    }

    #[test]
    fn absent_store() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            extract_logins(dir.path(), "E001", &opts()),
            Err(ExtractError::StoreAbsent(_))
        ));
    }

    #[test]
    fn login_entry_with_opaque_password() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join("logins.json"),
            r#"{"nextId":2,"logins":[{"id":1,"hostname":"https://market.example",
                "encryptedUsername":"MDoEEPgAAAA=","encryptedPassword":"MDIEEPgAAAA=",
                "timeCreated":1622505600000,"timeLastUsed":1625097600000}],"version":3}"#,
        )
        .unwrap();
        let out = extract_logins(dir.path(), "E001", &opts()).unwrap();
        assert_eq!(out.artifacts.len(), 1);
        let a = &out.artifacts[0];
        assert_eq!(a.kind, ArtifactKind::Usernames);
        assert_eq!(a.value, "https://market.example");
        assert_eq!(a.timestamps.len(), 2);
        // the blob itself never appears anywhere on the artifact
        assert!(!a.provenance[0].detail.contains("MDIEEP"));
        assert!(a.provenance[0].detail.contains("<opaque>"));
    }

    #[test]
    fn entry_without_timestamps() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join("logins.json"),
            r#"{"logins":[{"hostname":"https://a.example"}]}"#,
        )
        .unwrap();
        let out = extract_logins(dir.path(), "E001", &opts()).unwrap();
        assert_eq!(out.artifacts.len(), 1);
        assert!(out.artifacts[0].timestamps.is_empty());
    }

    #[test]
    fn malformed_json_is_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("logins.json"), "{not json").unwrap();
        assert!(matches!(
            extract_logins(dir.path(), "E001", &opts()),
            Err(ExtractError::ParseError(_, _))
        ));
    }
}
