//! The four-phase run over a case: integrity verification, acquisition
//! scheduling by volatility, per-source examination, then correlation and
//! reporting. Evidence is processed strictly in order-of-volatility
//! sequence and the run log records that order.

use crate::acquisition::{ingest_directory, schedule_by_volatility, volatility_name};
use crate::artifact::{Artifact, ArtifactKind, Category, Location, Provenance, RecoveryState};
use crate::browser::{extract_cache2_dir, extract_profile, ExtractOptions};
use crate::case::{Case, CaseError, CustodyAction, EvidenceItem, EvidenceKind};
use crate::config::Config;
use crate::correlate::{build_timeline, cross_validate, deduplicate, Timeline};
use crate::memscan::{classify_hits, scan_chunked, PatternSet};
use crate::registry::{find_tor_indicators, parse_hive, ExecutionIndicator};
use crate::report::{count_by_category, ReportTable, RunMode};
use crate::sqlite::{carve_raw, Database, LiveIndex};
use std::fs;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("case has no evidence")]
    EmptyCase,
    #[error("integrity verification failed for: {0}")]
    IntegrityFailure(String),
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Default)]
pub struct RunLog {
    pub lines: Vec<String>,
    /// Volatility levels in processing order; non-decreasing by construction.
    pub levels: Vec<u8>,
}

impl RunLog {
    fn log(&mut self, line: String) {
        self.lines.push(line);
    }
}

#[derive(Debug)]
pub struct RunOutput {
    pub artifacts: Vec<Artifact>,
    pub timeline: Timeline,
    pub table: ReportTable,
    pub log: RunLog,
    pub warnings: Vec<String>,
}

/// Execute the full pipeline over every registered evidence item.
/// Verification failures abort before any analysis.
pub fn run_case(
    case: &mut Case,
    mode: RunMode,
    config: &Config,
    actor: &str,
) -> Result<RunOutput, PipelineError> {
    if case.evidence.is_empty() {
        return Err(PipelineError::EmptyCase);
    }
    let mut log = RunLog::default();
    let mut warnings = Vec::new();

    // preservation gate: every item must still match its acquisition digest
    let mut failed = Vec::new();
    for item in case.evidence.clone() {
        match case.verify_integrity(&item.evidence_id, actor) {
            Ok(true) => {}
            Ok(false) => failed.push(item.evidence_id.clone()),
            Err(CaseError::Io(err)) => {
                failed.push(format!("{} ({err})", item.evidence_id));
            }
            Err(err) => return Err(err.into()),
        }
    }
    if !failed.is_empty() {
        return Err(PipelineError::IntegrityFailure(failed.join(", ")));
    }
    log.log("integrity verified for all evidence".to_string());

    let scheduled = schedule_by_volatility(case.evidence.clone());
    let mut artifacts = Vec::new();
    for item in &scheduled {
        log.levels.push(item.volatility_level);
        log.log(format!(
            "processing level={} ({}) evidence={} kind={} path={}",
            item.volatility_level,
            volatility_name(item.volatility_level).unwrap_or("?"),
            item.evidence_id,
            item.kind.label(),
            item.path.display()
        ));
        let mut produced = examine(item, mode, config, &mut warnings);
        artifacts.append(&mut produced);
        case.record_action(&item.evidence_id, CustodyAction::Analyzed, actor)?;
    }

    let mut merged = deduplicate(artifacts, config.dedup_bucket_secs);
    cross_validate(&mut merged);
    let timeline = build_timeline(&merged);
    let counts = count_by_category(&merged, config.threshold);
    let table = ReportTable::from_counts(&counts);
    log.log(format!(
        "correlation complete: {} artifacts, {} events, {} undated",
        merged.len(),
        timeline.events.len(),
        timeline.undated
    ));
    Ok(RunOutput {
        artifacts: merged,
        timeline,
        table,
        log,
        warnings,
    })
}

fn extract_options(mode: RunMode, config: &Config) -> ExtractOptions {
    ExtractOptions {
        carve: mode == RunMode::D2wfp,
        threshold: config.threshold,
    }
}

/// Examine one evidence item according to its kind and the run mode.
fn examine(
    item: &EvidenceItem,
    mode: RunMode,
    config: &Config,
    warnings: &mut Vec<String>,
) -> Vec<Artifact> {
    let mut artifacts = Vec::new();
    match item.kind {
        EvidenceKind::DirectoryTree => {
            examine_tree(item, mode, config, &mut artifacts, warnings);
        }
        EvidenceKind::SqliteStore => {
            examine_store(&item.path, item, mode, config, &mut artifacts, warnings);
        }
        EvidenceKind::RegistryHive => {
            if mode == RunMode::D2wfp {
                examine_hive(&item.path, item, &mut artifacts, warnings);
            }
        }
        EvidenceKind::MemoryDump => {
            if mode == RunMode::D2wfp {
                scan_bytes_file(
                    &item.path,
                    item,
                    config,
                    Location::Ram,
                    RecoveryState::MemoryResident,
                    &mut artifacts,
                    warnings,
                );
            }
        }
        EvidenceKind::CacheStore => {
            match extract_cache2_dir(&item.path, &item.evidence_id, &extract_options(mode, config))
            {
                Ok(mut extraction) => {
                    artifacts.append(&mut extraction.artifacts);
                    warnings.append(&mut extraction.warnings);
                }
                Err(err) => warnings.push(format!("{}: {err}", item.path.display())),
            }
        }
        EvidenceKind::OpaqueFile => {
            if mode == RunMode::D2wfp {
                scan_bytes_file(
                    &item.path,
                    item,
                    config,
                    Location::FileSystem,
                    RecoveryState::Carved,
                    &mut artifacts,
                    warnings,
                );
            }
        }
    }
    artifacts
}

fn examine_tree(
    item: &EvidenceItem,
    mode: RunMode,
    config: &Config,
    artifacts: &mut Vec<Artifact>,
    warnings: &mut Vec<String>,
) {
    let scan = match ingest_directory(&item.path) {
        Ok(scan) => scan,
        Err(err) => {
            warnings.push(format!("{}: {err}", item.path.display()));
            return;
        }
    };
    warnings.extend(scan.warnings.iter().cloned());
    let opts = extract_options(mode, config);
    for profile in &scan.profile_dirs {
        let mut extraction = extract_profile(profile, &item.evidence_id, &opts);
        artifacts.append(&mut extraction.artifacts);
        warnings.append(&mut extraction.warnings);
        // a cache2 tree inside the profile was already handled by the
        // profile extractor
    }
    let in_profile = |path: &Path| scan.profile_dirs.iter().any(|p| path.starts_with(p));
    for (path, kind) in &scan.entries {
        if in_profile(path) {
            continue;
        }
        match kind {
            EvidenceKind::SqliteStore => {
                examine_store(path, item, mode, config, artifacts, warnings);
            }
            EvidenceKind::RegistryHive => {
                if mode == RunMode::D2wfp {
                    examine_hive(path, item, artifacts, warnings);
                }
            }
            EvidenceKind::OpaqueFile => {
                if mode == RunMode::D2wfp {
                    scan_bytes_file(
                        path,
                        item,
                        config,
                        Location::FileSystem,
                        RecoveryState::Carved,
                        artifacts,
                        warnings,
                    );
                }
            }
            _ => {}
        }
    }
}

/// A standalone database file: the known profile stores extract through
/// their named extractors (the parent directory acts as the profile root);
/// unknown stores are carved for text in protocol mode.
fn examine_store(
    path: &Path,
    item: &EvidenceItem,
    mode: RunMode,
    config: &Config,
    artifacts: &mut Vec<Artifact>,
    warnings: &mut Vec<String>,
) {
    use crate::browser::{extract_cookies, extract_form_history};
    let opts = extract_options(mode, config);
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().to_string())
        .unwrap_or_default();
    let parent = match path.parent() {
        Some(p) => p.to_path_buf(),
        None => return,
    };
    let result = match name.as_str() {
        "places.sqlite" => {
            let mut all = crate::browser::Extraction::default();
            for op in [
                crate::browser::extract_history,
                crate::browser::extract_bookmarks,
                crate::browser::extract_downloads,
            ] {
                match op(&parent, &item.evidence_id, &opts) {
                    Ok(mut e) => {
                        all.artifacts.append(&mut e.artifacts);
                        all.warnings.append(&mut e.warnings);
                    }
                    Err(err) => all.warnings.push(format!("{name}: {err}")),
                }
            }
            Ok(all)
        }
        "cookies.sqlite" => extract_cookies(&parent, &item.evidence_id, &opts),
        "formhistory.sqlite" => extract_form_history(&parent, &item.evidence_id, &opts),
        _ => {
            if mode == RunMode::D2wfp {
                carve_unknown_store(path, item, config, artifacts, warnings);
            }
            return;
        }
    };
    match result {
        Ok(mut extraction) => {
            artifacts.append(&mut extraction.artifacts);
            warnings.append(&mut extraction.warnings);
        }
        Err(err) => warnings.push(format!("{}: {err}", path.display())),
    }
}

/// Carve an unknown database: deleted rows with readable text surface as
/// form-data artifacts.
fn carve_unknown_store(
    path: &Path,
    item: &EvidenceItem,
    config: &Config,
    artifacts: &mut Vec<Artifact>,
    warnings: &mut Vec<String>,
) {
    let db = match Database::open(path) {
        Ok(db) => db,
        Err(err) => {
            warnings.push(format!("{}: {err}", path.display()));
            return;
        }
    };
    let tables = crate::sqlite::read_schema(&db).unwrap_or_default();
    let mut live = LiveIndex::default();
    for table in &tables {
        if let Ok(rows) = crate::sqlite::walk_btree(&db, table.root_page, &table.name) {
            for row in rows {
                live.add_row(&row.columns);
            }
        }
    }
    let shapes = crate::sqlite::shapes_of(&tables);
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().to_string())
        .unwrap_or_default();
    let mut reports = vec![
        crate::sqlite::carve_freelist(&db, &live, &shapes, config.threshold),
        crate::sqlite::carve_unallocated(&db, &live, &shapes, config.threshold),
    ];
    for report in reports.drain(..) {
        for record in report.records {
            let text = record
                .columns
                .iter()
                .filter_map(|v| v.as_text())
                .filter(|s| !s.is_empty())
                .max_by_key(|s| s.len());
            let value = match text {
                Some(t) => t.to_string(),
                None => continue,
            };
            artifacts.push(
                Artifact::new(
                    ArtifactKind::UsageSession,
                    Category::SqliteDbForm,
                    Location::FileSystem,
                    RecoveryState::Carved,
                    value,
                    vec![],
                    Provenance {
                        evidence_id: item.evidence_id.clone(),
                        source: name.clone(),
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
    // sibling write-ahead and rollback journals as raw byte sources
    for suffix in ["-wal", "-journal"] {
        let mut sibling_name = path.file_name().unwrap_or_default().to_os_string();
        sibling_name.push(suffix);
        let sibling = path.with_file_name(sibling_name);
        if let Ok(bytes) = fs::read(&sibling) {
            let report = carve_raw(&bytes, db.header.text_encoding, &live, &shapes, config.threshold);
            for record in report.records {
                if let Some(text) = record.columns.iter().filter_map(|v| v.as_text()).max_by_key(|s| s.len())
                {
                    if text.is_empty() {
                        continue;
                    }
                    artifacts.push(
                        Artifact::new(
                            ArtifactKind::UsageSession,
                            Category::SqliteDbForm,
                            Location::FileSystem,
                            RecoveryState::Carved,
                            text.to_string(),
                            vec![],
                            Provenance {
                                evidence_id: item.evidence_id.clone(),
                                source: format!("{name}{suffix}"),
                                detail: format!("carved offset={}", record.offset),
                            },
                        )
                        .with_plausibility(record.plausibility),
                    );
                }
            }
        }
    }
}

fn examine_hive(
    path: &Path,
    item: &EvidenceItem,
    artifacts: &mut Vec<Artifact>,
    warnings: &mut Vec<String>,
) {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(err) => {
            warnings.push(format!("{}: {err}", path.display()));
            return;
        }
    };
    let parsed = match parse_hive(&bytes) {
        Ok(p) => p,
        Err(err) => {
            warnings.push(format!("{}: {err}", path.display()));
            return;
        }
    };
    if parsed.warnings > 0 {
        warnings.push(format!(
            "{}: {} hive cells skipped",
            path.display(),
            parsed.warnings
        ));
    }
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().to_string())
        .unwrap_or_default();
    for indicator in find_tor_indicators(&parsed.root) {
        artifacts.push(indicator_artifact(&indicator, &item.evidence_id, &name));
    }
}

/// Registry indicators surface as usage/session artifacts in the
/// user-and-system-configuration location.
pub fn indicator_artifact(
    indicator: &ExecutionIndicator,
    evidence_id: &str,
    source: &str,
) -> Artifact {
    let mut timestamps = Vec::new();
    if let Some(t) = indicator.last_run {
        timestamps.push(("last-run".to_string(), t));
    }
    Artifact::new(
        ArtifactKind::UsageSession,
        Category::SecurityLogins,
        Location::UserSystemConfig,
        RecoveryState::Live,
        indicator.program.clone(),
        timestamps,
        Provenance {
            evidence_id: evidence_id.to_string(),
            source: source.to_string(),
            detail: format!(
                "source={} key={} run_count={}",
                indicator.source.label(),
                indicator.key_path,
                indicator
                    .run_count
                    .map(|c| c.to_string())
                    .unwrap_or_else(|| "-".to_string())
            ),
        },
    )
}

fn scan_bytes_file(
    path: &Path,
    item: &EvidenceItem,
    config: &Config,
    location: Location,
    recovery: RecoveryState,
    artifacts: &mut Vec<Artifact>,
    warnings: &mut Vec<String>,
) {
    let patterns = PatternSet::new(&config.keywords, config.scan_radius);
    let mut file = match fs::File::open(path) {
        Ok(f) => f,
        Err(err) => {
            warnings.push(format!("{}: {err}", path.display()));
            return;
        }
    };
    let hits = match scan_chunked(&mut file, &patterns, config.chunk_size) {
        Ok(h) => h,
        Err(err) => {
            warnings.push(format!("{}: {err}", path.display()));
            return;
        }
    };
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().to_string())
        .unwrap_or_default();
    let mut classified = classify_hits(&hits, &item.evidence_id, &name);
    if location != Location::Ram {
        // pattern hits inside on-disk files: recovered strings, not live rows
        classified = classified
            .into_iter()
            .map(|a| {
                let mut rebuilt = Artifact::new(
                    a.kind,
                    a.category,
                    location,
                    recovery,
                    a.value.clone(),
                    a.timestamps.clone(),
                    a.provenance[0].clone(),
                );
                rebuilt.tor = a.tor;
                rebuilt
            })
            .collect();
    }
    artifacts.append(&mut classified);
}
