//! Presentation outputs: per-category counts for regular vs full-protocol
//! modes, uplift arithmetic, and report emission as a structured text
//! machine report, comma-separated tables, and a standalone HTML page.
//! Emission is byte-deterministic for identical inputs.

use crate::artifact::{Artifact, Category, Location, RecoveryState, CATEGORY_ORDER};
use crate::case::{Case, CustodyRecord};
use crate::correlate::Timeline;
use crate::timestamp::format_utc;
use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    /// Live extraction from file-system stores only.
    Regular,
    /// Live plus carved, memory-resident and configuration indicators.
    D2wfp,
}

impl RunMode {
    pub fn label(&self) -> &'static str {
        match self {
            RunMode::Regular => "regular",
            RunMode::D2wfp => "d2wfp",
        }
    }

    pub fn parse(s: &str) -> Option<RunMode> {
        match s {
            "regular" => Some(RunMode::Regular),
            "d2wfp" => Some(RunMode::D2wfp),
            _ => None,
        }
    }
}

/// Whether an artifact counts under regular automation: live rows found on
/// the file system.
pub fn counts_as_regular(artifact: &Artifact) -> bool {
    artifact.recovery_state == RecoveryState::Live && artifact.location == Location::FileSystem
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CategoryCounts {
    pub regular: u64,
    pub d2wfp: u64,
}

/// Count artifacts per category under both modes at once, excluding empty
/// or invalidated entries.
pub fn count_by_category(artifacts: &[Artifact], threshold: f64) -> [CategoryCounts; 5] {
    let mut counts = [CategoryCounts::default(); 5];
    for artifact in artifacts {
        if artifact.is_excluded(threshold) {
            continue;
        }
        let slot = &mut counts[artifact.category.index()];
        slot.d2wfp += 1;
        if counts_as_regular(artifact) {
            slot.regular += 1;
        }
    }
    counts
}

/// Uplift percentage (one decimal) and ratio (two decimals), half-even
/// rounded; undefined when the regular count is zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Uplift {
    /// Tenths of a percent.
    pub percent_tenths: Option<i64>,
    /// Hundredths.
    pub ratio_hundredths: Option<i64>,
}

impl Uplift {
    pub fn percent_display(&self) -> String {
        match self.percent_tenths {
            Some(t) => format!("{}{}.{}%", if t < 0 { "-" } else { "+" }, t.abs() / 10, t.abs() % 10),
            None => "—".to_string(),
        }
    }

    pub fn ratio_display(&self) -> String {
        match self.ratio_hundredths {
            Some(h) => format!("{}.{:02}", h / 100, h % 100),
            None => "—".to_string(),
        }
    }
}

/// Round num/den to the nearest integer, ties to even. `den` positive.
fn round_half_even(num: i128, den: i128) -> i64 {
    let q = num.div_euclid(den);
    let r = num.rem_euclid(den);
    let double = r * 2;
    let rounded = if double > den || (double == den && q % 2 != 0) {
        q + 1
    } else {
        q
    };
    rounded as i64
}

pub fn compute_uplift(regular: u64, d2wfp: u64) -> Uplift {
    if regular == 0 {
        return Uplift {
            percent_tenths: None,
            ratio_hundredths: None,
        };
    }
    let r = regular as i128;
    let d = d2wfp as i128;
    Uplift {
        percent_tenths: Some(round_half_even((d - r) * 1000, r)),
        ratio_hundredths: Some(round_half_even(d * 100, r)),
    }
}

#[derive(Debug, Clone)]
pub struct ReportRow {
    pub category: Category,
    pub regular: u64,
    pub d2wfp: u64,
    pub uplift: Uplift,
}

#[derive(Debug, Clone, Default)]
pub struct ReportTable {
    pub rows: Vec<ReportRow>,
}

impl ReportTable {
    pub fn from_counts(counts: &[CategoryCounts; 5]) -> ReportTable {
        ReportTable {
            rows: CATEGORY_ORDER
                .iter()
                .enumerate()
                .map(|(i, category)| ReportRow {
                    category: *category,
                    regular: counts[i].regular,
                    d2wfp: counts[i].d2wfp,
                    uplift: compute_uplift(counts[i].regular, counts[i].d2wfp),
                })
                .collect(),
        }
    }

    pub fn totals(&self) -> (u64, u64) {
        self.rows
            .iter()
            .fold((0, 0), |(r, d), row| (r + row.regular, d + row.d2wfp))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Csv,
    Html,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Option<ReportFormat> {
        match s {
            "txt" | "text" => Some(ReportFormat::Text),
            "csv" => Some(ReportFormat::Csv),
            "html" => Some(ReportFormat::Html),
            _ => None,
        }
    }
}

/// Custody appendix rows: the first record of each distinct
/// (evidence, action, digest) triple, so repeated idempotent runs render
/// identical appendices while any digest change still surfaces.
fn custody_summary(log: &[CustodyRecord]) -> Vec<&CustodyRecord> {
    let mut seen = BTreeSet::new();
    let mut rows = Vec::new();
    for record in log {
        let key = (
            record.evidence_id.clone(),
            record.action.label(),
            record.digest_at_action.clone(),
        );
        if seen.insert(key) {
            rows.push(record);
        }
    }
    rows.sort_by_key(|r| (format_utc(&r.at), r.evidence_id.clone(), r.action.label()));
    rows
}

pub struct ReportInputs<'a> {
    pub case: &'a Case,
    pub artifacts: &'a [Artifact],
    pub timeline: &'a Timeline,
    pub table: &'a ReportTable,
    pub mode: RunMode,
    pub threshold: f64,
}

/// Render the machine report: header block then [evidence], [categories],
/// [timeline], [custody] sections. Line-oriented, sorted, LF, UTF-8.
pub fn render_machine_report(inputs: &ReportInputs) -> String {
    let mut out = String::new();
    out.push_str("d2wfp-report 1\n");
    out.push_str(&format!("case\t{}\n", inputs.case.case_id));
    out.push_str(&format!("examiner\t{}\n", inputs.case.examiner));
    out.push_str(&format!("created\t{}\n", format_utc(&inputs.case.created_at)));
    out.push_str(&format!("mode\t{}\n", inputs.mode.label()));
    out.push_str(&format!("threshold\t{}\n", inputs.threshold));

    out.push_str("\n[evidence]\n");
    let mut evidence_lines: Vec<String> = inputs
        .case
        .evidence
        .iter()
        .map(|e| {
            format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                format_utc(&e.acquired_at),
                e.evidence_id,
                e.kind.label(),
                e.volatility_level,
                e.size_bytes,
                e.sha256,
                e.path.display()
            )
        })
        .collect();
    evidence_lines.sort();
    for line in evidence_lines {
        out.push_str(&line);
        out.push('\n');
    }

    out.push_str("\n[categories]\n");
    out.push_str("category\tregular\td2wfp\tuplift\tratio\n");
    for row in &inputs.table.rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            row.category.label(),
            row.regular,
            row.d2wfp,
            row.uplift.percent_display(),
            row.uplift.ratio_display()
        ));
    }
    let (regular_total, d2wfp_total) = inputs.table.totals();
    let total_uplift = compute_uplift(regular_total, d2wfp_total);
    out.push_str(&format!(
        "TOTAL\t{}\t{}\t{}\t{}\n",
        regular_total,
        d2wfp_total,
        total_uplift.percent_display(),
        total_uplift.ratio_display()
    ));

    out.push_str("\n[timeline]\n");
    for event in &inputs.timeline.events {
        out.push_str(&format!(
            "{}\t{}\t{}\tcorroboration={}\t{}\n",
            format_utc(&event.at),
            event.event_kind.label(),
            event.label,
            event.corroboration,
            event.artifact_ids.join(";")
        ));
    }
    out.push_str(&format!("undated\t{}\n", inputs.timeline.undated));

    out.push_str("\n[custody]\n");
    for record in custody_summary(inputs.case.custody_log()) {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            format_utc(&record.at),
            record.evidence_id,
            record.action.label(),
            record.actor,
            record.digest_at_action
        ));
    }
    out
}

/// Category table as RFC 4180 comma-separated values.
pub fn render_table_csv(table: &ReportTable) -> Vec<u8> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    writer
        .write_record(["category", "regular", "d2wfp", "uplift_percent", "ratio"])
        .unwrap();
    for row in &table.rows {
        writer
            .write_record([
                row.category.label(),
                &row.regular.to_string(),
                &row.d2wfp.to_string(),
                &row.uplift.percent_display(),
                &row.uplift.ratio_display(),
            ])
            .unwrap();
    }
    writer.into_inner().unwrap()
}

/// Full artifact listing as CSV; also the persisted form the `report`
/// command reloads.
pub fn render_artifacts_csv(artifacts: &[Artifact]) -> Vec<u8> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    writer
        .write_record([
            "artifact_id",
            "kind",
            "category",
            "location",
            "recovery",
            "value",
            "tor",
            "plausibility",
            "corroboration",
            "timestamps",
            "provenance",
            "flags",
        ])
        .unwrap();
    for a in artifacts {
        let timestamps = a
            .timestamps
            .iter()
            .map(|(label, t)| format!("{label}={}", format_utc(t)))
            .collect::<Vec<_>>()
            .join(";");
        let provenance = a
            .provenance
            .iter()
            .map(|p| format!("{}:{}:{}", p.evidence_id, p.source, p.detail.replace('\n', " ")))
            .collect::<Vec<_>>()
            .join("|");
        let flags = a
            .flags
            .iter()
            .map(|f| f.label())
            .collect::<Vec<_>>()
            .join(";");
        writer
            .write_record([
                a.artifact_id.as_str(),
                a.kind.label(),
                a.category.label(),
                a.location.label(),
                a.recovery_state.label(),
                a.value.as_str(),
                if a.tor { "1" } else { "0" },
                &a.plausibility.map(|p| format!("{p:.4}")).unwrap_or_default(),
                &a.corroboration.to_string(),
                &timestamps,
                &provenance,
                &flags,
            ])
            .unwrap();
    }
    writer.into_inner().unwrap()
}

fn html_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Standalone human-readable page; no external resource references.
pub fn render_html(inputs: &ReportInputs) -> String {
    let mut rows = String::new();
    for row in &inputs.table.rows {
        rows.push_str(&format!(
            "<tr><td>{}</td><td>{}</td><td>{}</td><td>{}</td><td>{}</td></tr>\n",
            html_escape(row.category.label()),
            row.regular,
            row.d2wfp,
            row.uplift.percent_display(),
            row.uplift.ratio_display()
        ));
    }
    let (rt, dt) = inputs.table.totals();
    let mut events = String::new();
    for event in inputs.timeline.events.iter().take(500) {
        events.push_str(&format!(
            "<tr><td>{}</td><td>{}</td><td>{}</td><td>{}</td></tr>\n",
            format_utc(&event.at),
            event.event_kind.label(),
            html_escape(&event.label),
            event.corroboration
        ));
    }
    format!(
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">\
<title>Case {case}</title>\
<style>body{{font-family:sans-serif;margin:2em}}table{{border-collapse:collapse}}\
td,th{{border:1px solid #999;padding:0.3em 0.8em}}th{{background:#eee}}</style>\
</head><body>\n<h1>Browsing-artifact report: case {case}</h1>\n\
<p>Examiner: {examiner}. Mode: {mode}. Artifacts below compare regular \
automation (live file-system rows) with the full pipeline (live, carved, \
memory-resident and configuration indicators).</p>\n\
<h2>Artifacts by category</h2>\n<table>\n\
<tr><th>Category</th><th>Regular</th><th>Full</th><th>Uplift</th><th>Ratio</th></tr>\n\
{rows}<tr><th>TOTAL</th><th>{rt}</th><th>{dt}</th><th></th><th></th></tr>\n</table>\n\
<h2>Timeline (first 500 events; {undated} undated artifacts)</h2>\n<table>\n\
<tr><th>UTC</th><th>Event</th><th>Label</th><th>Corroboration</th></tr>\n{events}</table>\n\
</body></html>\n",
        case = html_escape(&inputs.case.case_id),
        examiner = html_escape(&inputs.case.examiner),
        mode = inputs.mode.label(),
        rows = rows,
        rt = rt,
        dt = dt,
        undated = inputs.timeline.undated,
        events = events,
    )
}

/// Write the selected report formats plus the artifact listing into `dir`.
/// Returns the written paths.
pub fn emit_report(
    inputs: &ReportInputs,
    formats: &[ReportFormat],
    dir: &Path,
) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut write = |name: &str, bytes: &[u8]| -> std::io::Result<()> {
        let path = dir.join(name);
        let mut f = fs::File::create(&path)?;
        f.write_all(bytes)?;
        written.push(path);
        Ok(())
    };
    for format in formats {
        match format {
            ReportFormat::Text => write("report.txt", render_machine_report(inputs).as_bytes())?,
            ReportFormat::Csv => write("report.csv", &render_table_csv(inputs.table))?,
            ReportFormat::Html => write("report.html", render_html(inputs).as_bytes())?,
        }
    }
    write("artifacts.csv", &render_artifacts_csv(inputs.artifacts))?;
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::artifact::{ArtifactKind, Provenance};

    #[test]
    fn uplift_reproduces_published_values() {
        // browsing-history column: 1094 regular vs 1325 full
        let u = compute_uplift(1094, 1325);
        assert_eq!(u.percent_display(), "+21.1%");
        assert_eq!(u.ratio_display(), "1.21");
        // cache column after anti-forensics: 1126 vs 4681
        let u = compute_uplift(1126, 4681);
        assert_eq!(u.ratio_display(), "4.16");
        assert_eq!(u.percent_display(), "+315.7%");
        let u = compute_uplift(100, 100);
        assert_eq!(u.percent_display(), "+0.0%");
        assert_eq!(u.ratio_display(), "1.00");
    }

    #[test]
    fn uplift_undefined_when_regular_zero() {
        let u = compute_uplift(0, 5);
        assert_eq!(u.percent_display(), "—");
        assert_eq!(u.ratio_display(), "—");
    }

    #[test]
    fn half_even_rounding() {
        assert_eq!(round_half_even(5, 2), 2); // 2.5 -> 2
        assert_eq!(round_half_even(7, 2), 4); // 3.5 -> 4
        assert_eq!(round_half_even(-5, 2), -2); // -2.5 -> -2
        assert_eq!(round_half_even(3, 2), 2);
        assert_eq!(round_half_even(1, 2), 0);
    }

    fn make_artifact(
        kind: ArtifactKind,
        category: Category,
        location: Location,
        recovery: RecoveryState,
        value: &str,
    ) -> Artifact {
        Artifact::new(
            kind,
            category,
            location,
            recovery,
            value.to_string(),
            vec![],
            Provenance {
                evidence_id: "E001".into(),
                source: "s".into(),
                detail: value.into(),
            },
        )
    }

    #[test]
    fn counting_rules() {
        let artifacts = vec![
            make_artifact(
                ArtifactKind::Urls,
                Category::BrowsingHistory,
                Location::FileSystem,
                RecoveryState::Live,
                "http://a.test/",
            ),
            make_artifact(
                ArtifactKind::Urls,
                Category::BrowsingHistory,
                Location::FileSystem,
                RecoveryState::Carved,
                "http://b.test/",
            ),
            make_artifact(
                ArtifactKind::Urls,
                Category::BrowsingHistory,
                Location::Ram,
                RecoveryState::MemoryResident,
                "http://c.test/",
            ),
            make_artifact(
                ArtifactKind::Urls,
                Category::BrowsingHistory,
                Location::FileSystem,
                RecoveryState::Live,
                "", // empty value: excluded from both
            ),
        ];
        let counts = count_by_category(&artifacts, 0.5);
        assert_eq!(counts[0].regular, 1);
        assert_eq!(counts[0].d2wfp, 3);
        // superset rule per category
        for c in counts {
            assert!(c.d2wfp >= c.regular);
        }
        // one category per artifact: totals match non-excluded count
        let table = ReportTable::from_counts(&counts);
        let (_, d2wfp_total) = table.totals();
        assert_eq!(d2wfp_total, 3);
    }

    #[test]
    fn low_plausibility_carved_excluded() {
        let mut a = make_artifact(
            ArtifactKind::Urls,
            Category::BrowsingHistory,
            Location::FileSystem,
            RecoveryState::Carved,
            "junk",
        );
        a.plausibility = Some(0.3);
        let counts = count_by_category(&[a], 0.5);
        assert_eq!(counts[0].d2wfp, 0);
    }
}
