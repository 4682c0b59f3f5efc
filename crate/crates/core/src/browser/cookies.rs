//! cookies.sqlite: one artifact per cookie, keyed by host and name.

use super::{
    add_lossy_flag, carved_column, longest_text, ExtractError, ExtractOptions, Extraction, Store,
    column,
};
use crate::artifact::{Artifact, ArtifactKind, Category, Location, Provenance, RecoveryState};
use crate::sqlite::TypedValue;
use crate::timestamp::{normalize_timestamp, EpochKind};
use chrono::{DateTime, Utc};
use std::path::Path;

const COOKIES: &str = "cookies.sqlite";

/// Reporting value for a cookie artifact.
pub fn cookie_value(host: &str, name: &str) -> String {
    format!("{host}|{name}")
}

fn prtime(raw: i64) -> Option<DateTime<Utc>> {
    normalize_timestamp(raw, EpochKind::PrtimeMicros)
        .ok()
        .map(|t| t.at)
}

pub fn extract_cookies(
    profile: &Path,
    evidence_id: &str,
    opts: &ExtractOptions,
) -> Result<Extraction, ExtractError> {
    let store = Store::open(&profile.join(COOKIES))?;
    let mut out = Extraction {
        warnings: store.warnings.clone(),
        ..Default::default()
    };
    if let Some((info, rows)) = store.table_rows("moz_cookies") {
        for row in rows {
            let host = column(row, info, "host")
                .and_then(|v| v.as_text().map(String::from))
                .unwrap_or_default();
            let name = column(row, info, "name")
                .and_then(|v| v.as_text().map(String::from))
                .unwrap_or_default();
            let mut timestamps = Vec::new();
            for (label, col) in [("created", "creationTime"), ("last-accessed", "lastAccessed")] {
                if let Some(raw) = column(row, info, col).and_then(|v| v.as_int()) {
                    if let Some(t) = prtime(raw) {
                        timestamps.push((label.to_string(), t));
                    }
                }
            }
            let artifact = Artifact::new(
                ArtifactKind::Cookies,
                Category::CacheTemp,
                Location::FileSystem,
                RecoveryState::Live,
                cookie_value(&host, &name),
                timestamps,
                Provenance {
                    evidence_id: evidence_id.to_string(),
                    source: COOKIES.to_string(),
                    detail: format!("moz_cookies rowid={}", row.rowid),
                },
            );
            out.artifacts.push(add_lossy_flag(artifact, row.lossy));
        }
    }
    if opts.carve {
        let (records, warnings) = store.carve(opts.threshold);
        if warnings > 0 {
            out.warnings
                .push(format!("{COOKIES}: {warnings} carve warnings"));
        }
        let info = store.tables.iter().find(|t| t.name == "moz_cookies");
        for record in &records {
            // host and name by schema position when the shape matched,
            // otherwise a best-effort reading of the text columns
            let (host, name) = match info {
                Some(info) if record.table_hint.as_deref() == Some("moz_cookies") => (
                    carved_column(record, info, "host")
                        .and_then(|v| v.as_text())
                        .map(String::from),
                    carved_column(record, info, "name")
                        .and_then(|v| v.as_text())
                        .map(String::from),
                ),
                _ => {
                    let host = record
                        .columns
                        .iter()
                        .filter_map(TypedValue::as_text)
                        .find(|s| s.contains('.') && !s.contains(' '));
                    (host.map(String::from), longest_text(&record.columns).map(String::from))
                }
            };
            let (host, name) = match (host, name) {
                (Some(h), Some(n)) => (h, n),
                _ => continue,
            };
            let mut timestamps = Vec::new();
            for value in &record.columns {
                if let Some(raw) = value.as_int() {
                    if let Ok(t) = normalize_timestamp(raw, EpochKind::PrtimeMicros) {
                        if t.in_window {
                            timestamps.push(("carved".to_string(), t.at));
                        }
                    }
                }
            }
            timestamps.truncate(2);
            out.artifacts.push(
                Artifact::new(
                    ArtifactKind::Cookies,
                    Category::CacheTemp,
                    Location::FileSystem,
                    RecoveryState::Carved,
                    cookie_value(&host, &name),
                    timestamps,
                    Provenance {
                        evidence_id: evidence_id.to_string(),
                        source: COOKIES.to_string(),
                        detail: format!(
                            "carved origin={} page={} offset={}",
                            record.origin.label(),
                            record.page,
                            record.offset
                        ),
                    },
                )
                .with_plausibility(record.plausibility),
            );
        }
    }
    Ok(out)
}
