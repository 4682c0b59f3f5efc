//! places.sqlite: navigation history (one artifact per visit), bookmarks,
//! and download annotations. Carved records from the store are attributed
//! to exactly one of the three kinds, so running all three extractors
//! yields each recovered record once.

use super::{
    add_lossy_flag, column, longest_text, url_text, ExtractError, ExtractOptions,
    Extraction, Store,
};
use crate::artifact::{Artifact, ArtifactKind, Category, Location, Provenance, RecoveryState};
use crate::sqlite::{CarvedRecord, TypedValue};
use crate::timestamp::{normalize_timestamp, EpochKind};
use chrono::{DateTime, Utc};
use std::collections::HashMap;
use std::path::Path;

pub(super) const PLACES: &str = "places.sqlite";

fn prtime(raw: i64) -> Option<DateTime<Utc>> {
    normalize_timestamp(raw, EpochKind::PrtimeMicros)
        .ok()
        .map(|t| t.at)
}

fn int_col(row_columns: &TypedValue) -> Option<i64> {
    row_columns.as_int()
}

/// Which artifact a carved places.sqlite record belongs to.
enum PlacesAttribution {
    Url(String),
    Download(String),
    Bookmark(String),
    Skip,
}

fn attribute(record: &CarvedRecord) -> PlacesAttribution {
    if let Some(url) = url_text(&record.columns) {
        if url.starts_with("file:") {
            return PlacesAttribution::Download(url.to_string());
        }
        return PlacesAttribution::Url(url.to_string());
    }
    match record.table_hint.as_deref() {
        Some("moz_bookmarks") => match longest_text(&record.columns) {
            Some(title) => PlacesAttribution::Bookmark(title.to_string()),
            None => PlacesAttribution::Skip,
        },
        Some("moz_places") => match longest_text(&record.columns) {
            Some(text) => PlacesAttribution::Url(text.to_string()),
            None => PlacesAttribution::Skip,
        },
        // integer-only rows (visits) and attribute tables carry no value
        _ => PlacesAttribution::Skip,
    }
}

fn carved_timestamps(record: &CarvedRecord) -> Vec<(String, DateTime<Utc>)> {
    let mut out = Vec::new();
    for value in &record.columns {
        if let Some(raw) = value.as_int() {
            if let Ok(t) = normalize_timestamp(raw, EpochKind::PrtimeMicros) {
                if t.in_window {
                    out.push(("carved".to_string(), t.at));
                }
            }
        }
    }
    out.truncate(2);
    out
}

fn carved_artifact(
    record: &CarvedRecord,
    kind: ArtifactKind,
    category: Category,
    value: String,
    evidence_id: &str,
) -> Artifact {
    Artifact::new(
        kind,
        category,
        Location::FileSystem,
        RecoveryState::Carved,
        value,
        carved_timestamps(record),
        Provenance {
            evidence_id: evidence_id.to_string(),
            source: PLACES.to_string(),
            detail: format!(
                "carved origin={} page={} offset={}",
                record.origin.label(),
                record.page,
                record.offset
            ),
        },
    )
    .with_plausibility(record.plausibility)
}

/// One artifact per visit row, value = visited URL, joined to its place.
pub fn extract_history(
    profile: &Path,
    evidence_id: &str,
    opts: &ExtractOptions,
) -> Result<Extraction, ExtractError> {
    let store = Store::open(&profile.join(PLACES))?;
    let mut out = Extraction {
        warnings: store.warnings.clone(),
        ..Default::default()
    };
    let mut urls: HashMap<i64, (String, bool)> = HashMap::new();
    if let Some((info, rows)) = store.table_rows("moz_places") {
        for row in rows {
            if let (Some(TypedValue::Int(id)), Some(url)) = (
                column(row, info, "id"),
                column(row, info, "url").and_then(|v| v.as_text().map(String::from)),
            ) {
                urls.insert(id, (url, row.lossy));
            }
        }
    }
    if let Some((info, rows)) = store.table_rows("moz_historyvisits") {
        for row in rows {
            let place_id = match column(row, info, "place_id").and_then(|v| int_col(&v)) {
                Some(id) => id,
                None => continue,
            };
            let (url, lossy) = match urls.get(&place_id) {
                Some(entry) => entry.clone(),
                None => continue,
            };
            let mut timestamps = Vec::new();
            if let Some(raw) = column(row, info, "visit_date").and_then(|v| int_col(&v)) {
                if let Some(t) = prtime(raw) {
                    timestamps.push(("visit".to_string(), t));
                }
            }
            let artifact = Artifact::new(
                ArtifactKind::Urls,
                Category::BrowsingHistory,
                Location::FileSystem,
                RecoveryState::Live,
                url,
                timestamps,
                Provenance {
                    evidence_id: evidence_id.to_string(),
                    source: PLACES.to_string(),
                    detail: format!("moz_historyvisits rowid={}", row.rowid),
                },
            );
            out.artifacts.push(add_lossy_flag(artifact, lossy || row.lossy));
        }
    }
    if opts.carve {
        let (records, warnings) = store.carve(opts.threshold);
        if warnings > 0 {
            out.warnings.push(format!("{PLACES}: {warnings} carve warnings"));
        }
        for record in &records {
            if let PlacesAttribution::Url(url) = attribute(record) {
                out.artifacts.push(carved_artifact(
                    record,
                    ArtifactKind::Urls,
                    Category::BrowsingHistory,
                    url,
                    evidence_id,
                ));
            }
        }
    }
    Ok(out)
}

/// Bookmark rows joined to their places; value = bookmarked URL.
pub fn extract_bookmarks(
    profile: &Path,
    evidence_id: &str,
    opts: &ExtractOptions,
) -> Result<Extraction, ExtractError> {
    let store = Store::open(&profile.join(PLACES))?;
    let mut out = Extraction::default();
    let mut urls: HashMap<i64, String> = HashMap::new();
    if let Some((info, rows)) = store.table_rows("moz_places") {
        for row in rows {
            if let (Some(TypedValue::Int(id)), Some(url)) = (
                column(row, info, "id"),
                column(row, info, "url").and_then(|v| v.as_text().map(String::from)),
            ) {
                urls.insert(id, url);
            }
        }
    }
    if let Some((info, rows)) = store.table_rows("moz_bookmarks") {
        for row in rows {
            // type 1 = URL bookmark; folders and separators carry no fk
            if column(row, info, "type").and_then(|v| int_col(&v)) != Some(1) {
                continue;
            }
            let fk = match column(row, info, "fk").and_then(|v| int_col(&v)) {
                Some(fk) => fk,
                None => continue,
            };
            let url = match urls.get(&fk) {
                Some(u) => u.clone(),
                None => continue,
            };
            let mut timestamps = Vec::new();
            if let Some(raw) = column(row, info, "dateAdded").and_then(|v| int_col(&v)) {
                if let Some(t) = prtime(raw) {
                    timestamps.push(("added".to_string(), t));
                }
            }
            out.artifacts.push(Artifact::new(
                ArtifactKind::Bookmarks,
                Category::BrowsingHistory,
                Location::FileSystem,
                RecoveryState::Live,
                url,
                timestamps,
                Provenance {
                    evidence_id: evidence_id.to_string(),
                    source: PLACES.to_string(),
                    detail: format!("moz_bookmarks rowid={}", row.rowid),
                },
            ));
        }
    }
    if opts.carve {
        let (records, _) = store.carve(opts.threshold);
        for record in &records {
            if let PlacesAttribution::Bookmark(title) = attribute(record) {
                out.artifacts.push(carved_artifact(
                    record,
                    ArtifactKind::Bookmarks,
                    Category::BrowsingHistory,
                    title,
                    evidence_id,
                ));
            }
        }
    }
    Ok(out)
}

/// Download annotations: destination path plus the end time recorded in the
/// sibling metadata annotation.
pub fn extract_downloads(
    profile: &Path,
    evidence_id: &str,
    opts: &ExtractOptions,
) -> Result<Extraction, ExtractError> {
    let store = Store::open(&profile.join(PLACES))?;
    let mut out = Extraction::default();
    let mut attr_names: HashMap<i64, String> = HashMap::new();
    if let Some((info, rows)) = store.table_rows("moz_anno_attributes") {
        for row in rows {
            if let (Some(TypedValue::Int(id)), Some(name)) = (
                column(row, info, "id"),
                column(row, info, "name").and_then(|v| v.as_text().map(String::from)),
            ) {
                attr_names.insert(id, name);
            }
        }
    }
    // endTime (milliseconds) from downloads/metaData JSON, keyed by place
    let mut end_times: HashMap<i64, DateTime<Utc>> = HashMap::new();
    let mut destinations: Vec<(i64, String, Option<DateTime<Utc>>, i64)> = Vec::new();
    if let Some((info, rows)) = store.table_rows("moz_annos") {
        for row in rows {
            let attr = column(row, info, "anno_attribute_id")
                .and_then(|v| int_col(&v))
                .and_then(|id| attr_names.get(&id).cloned())
                .unwrap_or_default();
            let place = column(row, info, "place_id")
                .and_then(|v| int_col(&v))
                .unwrap_or(-1);
            let content = column(row, info, "content")
                .and_then(|v| v.as_text().map(String::from))
                .unwrap_or_default();
            match attr.as_str() {
                "downloads/destinationFileURI" => {
                    let added = column(row, info, "dateAdded")
                        .and_then(|v| int_col(&v))
                        .and_then(prtime);
                    destinations.push((place, content, added, row.rowid));
                }
                "downloads/metaData" => {
                    if let Ok(json) = serde_json::from_str::<serde_json::Value>(&content) {
                        if let Some(ms) = json.get("endTime").and_then(|v| v.as_i64()) {
                            if let Ok(t) = normalize_timestamp(ms, EpochKind::UnixMillis) {
                                end_times.insert(place, t.at);
                            }
                        }
                    }
                }
                _ => {}
            }
        }
    }
    for (place, destination, added, rowid) in destinations {
        let mut timestamps = Vec::new();
        if let Some(t) = end_times.get(&place) {
            timestamps.push(("end".to_string(), *t));
        }
        if let Some(t) = added {
            timestamps.push(("added".to_string(), t));
        }
        out.artifacts.push(Artifact::new(
            ArtifactKind::DownloadFiles,
            Category::Downloads,
            Location::FileSystem,
            RecoveryState::Live,
            destination,
            timestamps,
            Provenance {
                evidence_id: evidence_id.to_string(),
                source: PLACES.to_string(),
                detail: format!("moz_annos rowid={rowid}"),
            },
        ));
    }
    if opts.carve {
        let (records, _) = store.carve(opts.threshold);
        for record in &records {
            if let PlacesAttribution::Download(path) = attribute(record) {
                out.artifacts.push(carved_artifact(
                    record,
                    ArtifactKind::DownloadFiles,
                    Category::Downloads,
                    path,
                    evidence_id,
                ));
            }
        }
    }
    Ok(out)
}
