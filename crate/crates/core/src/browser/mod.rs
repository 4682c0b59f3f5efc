//! Extraction of artifacts from Firefox-family (including TOR Browser)
//! profile directories: places/cookies/form-history databases, the logins
//! store, and cache2 entries. Each extractor yields live rows; in carving
//! mode deleted rows recovered from the stores (and their -wal/-journal
//! siblings) are attributed back to artifact kinds.

mod cache2;
mod cookies;
mod forms;
mod logins;
mod places;

pub use cache2::{extract_cache2, extract_cache2_dir, parse_cache2_entry, write_cache2_entry, Cache2Entry};
pub use cookies::{cookie_value, extract_cookies};
pub use forms::{extract_form_history, is_search_field, SEARCH_FIELDS};
pub use logins::extract_logins;
pub use places::{extract_bookmarks, extract_downloads, extract_history};

use crate::artifact::{Artifact, Flag};
use crate::sqlite::{
    carve_freelist, carve_raw, carve_unallocated, read_schema, shapes_of, walk_btree,
    CarvedRecord, Database, LiveIndex, LiveRecord, Shape, SqliteError, TableInfo, TypedValue,
};
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("store {0} is absent")]
    StoreAbsent(String),
    #[error("store {0} failed to parse: {1}")]
    ParseError(String, String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy)]
pub struct ExtractOptions {
    /// Also carve deleted rows out of the stores.
    pub carve: bool,
    /// Plausibility threshold for carved records.
    pub threshold: f64,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions {
            carve: false,
            threshold: 0.5,
        }
    }
}

#[derive(Debug, Default)]
pub struct Extraction {
    pub artifacts: Vec<Artifact>,
    pub warnings: Vec<String>,
}

/// The stores a profile directory may carry; only existing ones are listed.
#[derive(Debug, Clone)]
pub struct ProfileLayout {
    pub root: PathBuf,
    pub places: Option<PathBuf>,
    pub cookies: Option<PathBuf>,
    pub formhistory: Option<PathBuf>,
    pub logins: Option<PathBuf>,
    pub cache2: Option<PathBuf>,
    /// Profile belongs to a TOR Browser install.
    pub tor: bool,
}

pub fn detect_profile(root: &Path) -> ProfileLayout {
    let existing = |name: &str| {
        let p = root.join(name);
        p.exists().then_some(p)
    };
    let root_lower = root.to_string_lossy().to_ascii_lowercase();
    let mut tor = root_lower.contains("tor browser") || root_lower.contains("tor-browser");
    if !tor {
        if let Ok(ext) = fs::read_to_string(root.join("extensions.json")) {
            tor = ext.contains("torbutton");
        }
    }
    ProfileLayout {
        root: root.to_path_buf(),
        places: existing("places.sqlite"),
        cookies: existing("cookies.sqlite"),
        formhistory: existing("formhistory.sqlite"),
        logins: existing("logins.json"),
        cache2: existing("cache2"),
        tor,
    }
}

/// Run every extractor over a profile, tagging artifacts with the TOR flag.
/// Store-absent conditions are skipped silently; parse failures become
/// warnings rather than aborting the profile.
pub fn extract_profile(
    root: &Path,
    evidence_id: &str,
    opts: &ExtractOptions,
) -> Extraction {
    let layout = detect_profile(root);
    let mut out = Extraction::default();
    type Op = fn(&Path, &str, &ExtractOptions) -> Result<Extraction, ExtractError>;
    let ops: [(Op, &str); 7] = [
        (extract_history, "history"),
        (extract_bookmarks, "bookmarks"),
        (extract_downloads, "downloads"),
        (extract_cookies, "cookies"),
        (extract_form_history, "form history"),
        (extract_logins, "logins"),
        (extract_cache2, "cache2"),
    ];
    for (op, what) in ops {
        match op(root, evidence_id, opts) {
            Ok(mut extraction) => {
                out.artifacts.append(&mut extraction.artifacts);
                out.warnings.append(&mut extraction.warnings);
            }
            Err(ExtractError::StoreAbsent(_)) => {}
            Err(err) => out.warnings.push(format!("{}: {what}: {err}", root.display())),
        }
    }
    if layout.tor {
        for artifact in &mut out.artifacts {
            artifact.tor = true;
        }
    }
    out
}

/// An opened store: parsed image, schema, live rows per table, and the
/// live-row index used to exclude carved duplicates.
pub(crate) struct Store {
    pub db: Database,
    pub tables: Vec<TableInfo>,
    pub rows: Vec<(TableInfo, Vec<LiveRecord>)>,
    pub live: LiveIndex,
    pub shapes: Vec<Shape>,
    pub path: PathBuf,
    pub warnings: Vec<String>,
}

impl Store {
    pub fn open(path: &Path) -> Result<Store, ExtractError> {
        if !path.exists() {
            return Err(ExtractError::StoreAbsent(path.display().to_string()));
        }
        let db = Database::open(path)
            .map_err(|e| ExtractError::ParseError(path.display().to_string(), e.to_string()))?;
        let tables = read_schema(&db)
            .map_err(|e| ExtractError::ParseError(path.display().to_string(), e.to_string()))?;
        let mut rows = Vec::new();
        let mut live = LiveIndex::default();
        let mut warnings = Vec::new();
        for info in &tables {
            match walk_btree(&db, info.root_page, &info.name) {
                Ok(table_rows) => {
                    for row in &table_rows {
                        live.add_row(&row.columns);
                    }
                    rows.push((info.clone(), table_rows));
                }
                Err(err) => warnings.push(format!("{}: {}: {err}", path.display(), info.name)),
            }
        }
        let shapes = shapes_of(&tables);
        Ok(Store {
            db,
            tables,
            rows,
            live,
            shapes,
            path: path.to_path_buf(),
            warnings,
        })
    }

    pub fn table_rows(&self, name: &str) -> Option<&(TableInfo, Vec<LiveRecord>)> {
        self.rows.iter().find(|(info, _)| info.name == name)
    }

    /// Carve the store plus any -wal/-journal sibling files.
    pub fn carve(&self, threshold: f64) -> (Vec<CarvedRecord>, u32) {
        let mut records = Vec::new();
        let mut warnings = 0;
        let free = carve_freelist(&self.db, &self.live, &self.shapes, threshold);
        warnings += free.warnings;
        records.extend(free.records);
        let unalloc = carve_unallocated(&self.db, &self.live, &self.shapes, threshold);
        warnings += unalloc.warnings;
        records.extend(unalloc.records);
        for suffix in ["-wal", "-journal"] {
            let mut name = self.path.file_name().unwrap_or_default().to_os_string();
            name.push(suffix);
            let sibling = self.path.with_file_name(name);
            if let Ok(bytes) = fs::read(&sibling) {
                let raw = carve_raw(
                    &bytes,
                    self.db.header.text_encoding,
                    &self.live,
                    &self.shapes,
                    threshold,
                );
                warnings += raw.warnings;
                records.extend(raw.records);
            }
        }
        // identical (columns) recovered from several regions collapse later
        // during correlation; here only exact same-site duplicates go
        records.sort_by_key(|r| (r.page, r.offset));
        records.dedup_by(|a, b| a.page == b.page && a.offset == b.offset);
        (records, warnings)
    }
}

/// Read one column of a row by schema name, resolving the INTEGER PRIMARY
/// KEY alias to the rowid.
pub(crate) fn column<'a>(
    row: &'a LiveRecord,
    info: &TableInfo,
    name: &str,
) -> Option<TypedValue> {
    let idx = info.column_index(name)?;
    let value = row.columns.get(idx)?;
    if matches!(value, TypedValue::Null) && info.rowid_alias == Some(idx) {
        return Some(TypedValue::Int(row.rowid));
    }
    Some(value.clone())
}

/// Column of a carved record by schema name, honoring skipped leading
/// columns.
pub(crate) fn carved_column<'a>(
    record: &'a CarvedRecord,
    info: &TableInfo,
    name: &str,
) -> Option<&'a TypedValue> {
    let idx = info.column_index(name)?;
    let pos = idx.checked_sub(record.skipped_columns)?;
    record.columns.get(pos)
}

pub(crate) fn add_lossy_flag(artifact: Artifact, lossy: bool) -> Artifact {
    if lossy {
        artifact.with_flag(Flag::LossyText)
    } else {
        artifact
    }
}

pub(crate) fn longest_text(columns: &[TypedValue]) -> Option<&str> {
    columns
        .iter()
        .filter_map(|v| v.as_text())
        .filter(|s| !s.is_empty())
        .max_by_key(|s| s.len())
}

pub(crate) fn url_text(columns: &[TypedValue]) -> Option<&str> {
    columns
        .iter()
        .filter_map(|v| v.as_text())
        .find(|s| s.contains("://"))
}

impl From<SqliteError> for ExtractError {
    fn from(err: SqliteError) -> Self {
        ExtractError::ParseError("sqlite".into(), err.to_string())
    }
}
