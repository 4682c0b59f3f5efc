//! formhistory.sqlite: typed form values. Field names matching the search
//! box list classify as search queries, everything else as usage/session
//! form data.

use super::{add_lossy_flag, carved_column, column, ExtractError, ExtractOptions, Extraction, Store};
use crate::artifact::{Artifact, ArtifactKind, Category, Location, Provenance, RecoveryState};
use crate::timestamp::{normalize_timestamp, EpochKind};
use std::path::Path;

const FORMHISTORY: &str = "formhistory.sqlite";

/// Form field names treated as search boxes.
pub const SEARCH_FIELDS: [&str; 4] = ["searchbar-history", "q", "query", "search"];

pub fn is_search_field(fieldname: &str) -> bool {
    SEARCH_FIELDS
        .iter()
        .any(|f| fieldname.eq_ignore_ascii_case(f))
}

fn kind_for(fieldname: &str) -> ArtifactKind {
    if is_search_field(fieldname) {
        ArtifactKind::SearchQueries
    } else {
        ArtifactKind::UsageSession
    }
}

pub fn extract_form_history(
    profile: &Path,
    evidence_id: &str,
    opts: &ExtractOptions,
) -> Result<Extraction, ExtractError> {
    let store = Store::open(&profile.join(FORMHISTORY))?;
    let mut out = Extraction {
        warnings: store.warnings.clone(),
        ..Default::default()
    };
    if let Some((info, rows)) = store.table_rows("moz_formhistory") {
        for row in rows {
            let fieldname = column(row, info, "fieldname")
                .and_then(|v| v.as_text().map(String::from))
                .unwrap_or_default();
            let value = column(row, info, "value")
                .and_then(|v| v.as_text().map(String::from))
                .unwrap_or_default();
            let mut timestamps = Vec::new();
            for (label, col) in [("first-used", "firstUsed"), ("last-used", "lastUsed")] {
                if let Some(raw) = column(row, info, col).and_then(|v| v.as_int()) {
                    if let Ok(t) = normalize_timestamp(raw, EpochKind::PrtimeMicros) {
                        timestamps.push((label.to_string(), t.at));
                    }
                }
            }
            let artifact = Artifact::new(
                kind_for(&fieldname),
                Category::SqliteDbForm,
                Location::FileSystem,
                RecoveryState::Live,
                value,
                timestamps,
                Provenance {
                    evidence_id: evidence_id.to_string(),
                    source: FORMHISTORY.to_string(),
                    detail: format!("moz_formhistory rowid={} field={fieldname}", row.rowid),
                },
            );
            out.artifacts.push(add_lossy_flag(artifact, row.lossy));
        }
    }
    if opts.carve {
        let (records, _) = store.carve(opts.threshold);
        let info = store.tables.iter().find(|t| t.name == "moz_formhistory");
        for record in &records {
            let info = match info {
                Some(i) => i,
                None => break,
            };
            let fieldname = carved_column(record, info, "fieldname")
                .and_then(|v| v.as_text())
                .unwrap_or_default()
                .to_string();
            let value = match carved_column(record, info, "value").and_then(|v| v.as_text()) {
                Some(v) if !v.is_empty() => v.to_string(),
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
                    kind_for(&fieldname),
                    Category::SqliteDbForm,
                    Location::FileSystem,
                    RecoveryState::Carved,
                    value,
                    timestamps,
                    Provenance {
                        evidence_id: evidence_id.to_string(),
                        source: FORMHISTORY.to_string(),
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn search_field_classification() {
        assert!(is_search_field("searchbar-history"));
        assert!(is_search_field("q"));
        assert!(is_search_field("Query"));
        assert!(!is_search_field("address"));
        assert_eq!(kind_for("address"), ArtifactKind::UsageSession);
        assert_eq!(kind_for("searchbar-history"), ArtifactKind::SearchQueries);
    }
}
