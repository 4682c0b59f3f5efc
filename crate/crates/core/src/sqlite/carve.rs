//! Deleted-record carving. Three byte populations are scanned: whole pages
//! on the freelist, freeblock chains inside live leaf pages, and the
//! unallocated gap between a page's cell-pointer array and its cell
//! content. Candidates are decoded speculatively, scored, and deduplicated
//! against live rows.
//!
//! When a cell is freed its first four bytes are overwritten by the
//! freeblock header, which usually destroys the payload-length and rowid
//! varints and sometimes the record header. The scanner therefore tries, in
//! order: a full cell, a record whose cell varints were clobbered, and a
//! headerless record with up to three leading serial types missing.

use super::btree::{leaf_local_range, PageView, PAGE_LEAF_TABLE};
use super::header::TextEncoding;
use super::record::{decode_record, serial_type_len, TypedValue};
use super::schema::TableInfo;
use super::varint::read_varint;
use super::Database;
use crate::timestamp::plausible_any_epoch;
use std::collections::HashSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CarveOrigin {
    FreelistPage,
    Freeblock,
    Unallocated,
}

impl CarveOrigin {
    pub fn label(&self) -> &'static str {
        match self {
            CarveOrigin::FreelistPage => "freelist-page",
            CarveOrigin::Freeblock => "freeblock",
            CarveOrigin::Unallocated => "unallocated",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CarvedRecord {
    pub origin: CarveOrigin,
    pub page: u32,
    pub offset: usize,
    pub columns: Vec<TypedValue>,
    /// False when leading columns or payload tails were lost.
    pub complete: bool,
    pub plausibility: f64,
    /// Table whose shape the candidate matched, when identifiable.
    pub table_hint: Option<String>,
    /// Leading columns lost to the freeblock header.
    pub skipped_columns: usize,
}

#[derive(Debug, Default)]
pub struct CarveReport {
    pub records: Vec<CarvedRecord>,
    /// Unreadable or skipped structures, counted rather than fatal.
    pub warnings: u32,
}

/// Signatures of live rows (and their column suffixes), used to exclude
/// carved duplicates of data still reachable through the B-trees.
#[derive(Debug, Default)]
pub struct LiveIndex {
    suffixes: HashSet<Vec<u8>>,
}

const MAX_SKIP: usize = 3;

impl LiveIndex {
    pub fn add_row(&mut self, columns: &[TypedValue]) {
        for skip in 0..=MAX_SKIP.min(columns.len()) {
            self.suffixes.insert(signature(skip, &columns[skip..]));
        }
    }

    pub fn contains(&self, skip: usize, columns: &[TypedValue]) -> bool {
        self.suffixes.contains(&signature(skip, columns))
    }
}

fn signature(skip: usize, columns: &[TypedValue]) -> Vec<u8> {
    let mut out = vec![skip as u8];
    for v in columns {
        v.signature(&mut out);
    }
    out
}

/// Column-count shapes the headerless decoder is allowed to assume.
#[derive(Debug, Clone)]
pub struct Shape {
    pub table: String,
    pub columns: usize,
}

pub fn shapes_of(tables: &[TableInfo]) -> Vec<Shape> {
    let mut shapes: Vec<Shape> = tables
        .iter()
        .filter(|t| t.columns.len() >= 2)
        .map(|t| Shape {
            table: t.name.clone(),
            columns: t.columns.len(),
        })
        .collect();
    shapes.sort_by(|a, b| b.columns.cmp(&a.columns));
    shapes
}

/// Fraction of evidence-bearing columns that decode cleanly: text columns
/// must be valid printable UTF-8 and timestamp-scale integers must fall in
/// the plausibility window. Small integers (flags, counters, rowid
/// references), nulls and blobs carry no evidence either way and are left
/// out of the denominator.
pub fn plausibility(columns: &[TypedValue]) -> f64 {
    const TIMESTAMP_SCALE: i64 = 100_000_000;
    let mut considered = 0u32;
    let mut good = 0u32;
    for v in columns {
        match v {
            TypedValue::Text(s) => {
                considered += 1;
                if !s.is_empty() && is_printable(s) {
                    good += 1;
                }
            }
            TypedValue::Int(i) if i.abs() >= TIMESTAMP_SCALE => {
                considered += 1;
                if plausible_any_epoch(*i) {
                    good += 1;
                }
            }
            _ => {}
        }
    }
    if considered == 0 {
        0.0
    } else {
        good as f64 / considered as f64
    }
}

fn is_printable(s: &str) -> bool {
    !s.contains('\u{fffd}')
        && s.chars()
            .all(|c| !c.is_control() || matches!(c, '\t' | '\n' | '\r'))
}

/// Outcome of offering a candidate to the result set: rejected candidates
/// may be garbage, so scanning resumes one byte further; duplicates of live
/// rows are real cells and are skipped whole.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Disposition {
    Pushed,
    LiveDuplicate,
    Rejected,
}

struct Carver<'a> {
    encoding: TextEncoding,
    usable: usize,
    live: &'a LiveIndex,
    shapes: &'a [Shape],
    threshold: f64,
}

impl<'a> Carver<'a> {
    #[allow(clippy::too_many_arguments)]
    fn push_candidate(
        &self,
        out: &mut Vec<CarvedRecord>,
        origin: CarveOrigin,
        page: u32,
        offset: usize,
        columns: Vec<TypedValue>,
        complete: bool,
        skipped: usize,
        table_hint: Option<String>,
    ) -> Disposition {
        if columns.is_empty() {
            return Disposition::Rejected;
        }
        if self.live.contains(skipped, &columns) {
            return Disposition::LiveDuplicate;
        }
        let score = plausibility(&columns);
        if score < self.threshold {
            return Disposition::Rejected;
        }
        let hint = table_hint.or_else(|| {
            let n = columns.len() + skipped;
            let mut matches = self.shapes.iter().filter(|s| s.columns == n);
            match (matches.next(), matches.next()) {
                (Some(s), None) => Some(s.table.clone()),
                _ => None,
            }
        });
        out.push(CarvedRecord {
            origin,
            page,
            offset,
            columns,
            complete,
            plausibility: score,
            table_hint: hint,
            skipped_columns: skipped,
        });
        true
    }

    /// Try a complete cell (payload-length varint, rowid varint, record) at
    /// `off`. The record must account for every payload byte.
    fn try_full_cell(&self, bytes: &[u8], off: usize, end: usize) -> Option<(Vec<TypedValue>, usize)> {
        let (payload_len, w1) = read_varint(&bytes[..end], off).ok()?;
        if payload_len < 2 || payload_len > (end - off) as u64 {
            return None;
        }
        let (_rowid, w2) = read_varint(&bytes[..end], off + w1 as usize).ok()?;
        let start = off + w1 as usize + w2 as usize;
        let stop = start + payload_len as usize;
        if stop > end {
            return None;
        }
        let payload = &bytes[start..stop];
        let columns = decode_exact(payload, self.encoding)?;
        Some((columns, stop - off))
    }

    /// Record whose two leading cell varints were clobbered but whose header
    /// survived: a record header starting right at `off`.
    fn try_record_with_header(&self, bytes: &[u8], off: usize, end: usize) -> Option<Vec<TypedValue>> {
        let region = &bytes[off..end];
        let (header_len, w) = read_varint(region, 0).ok()?;
        if header_len < 2 || header_len as usize > region.len() || w != 1 {
            return None;
        }
        let (columns, _) = decode_record(region, self.encoding).ok()?;
        if columns.len() < 2 {
            return None;
        }
        // demand a known shape: without the length varint there is no
        // internal cross-check, so the column count must be meaningful
        self.shapes
            .iter()
            .find(|s| s.columns == columns.len())
            .map(|_| columns)
    }

    /// Headerless decode: assume `skip` leading serial types were lost and
    /// the remaining ones begin at `off`.
    fn try_headerless(
        &self,
        bytes: &[u8],
        off: usize,
        end: usize,
        shape: &Shape,
        skip: usize,
    ) -> Option<Vec<TypedValue>> {
        let want = shape.columns.checked_sub(skip)?;
        if want < 2 {
            return None;
        }
        let region = &bytes[off..end];
        let mut serial_types = Vec::with_capacity(want);
        let mut pos = 0usize;
        for _ in 0..want {
            let (st, w) = read_varint(region, pos).ok()?;
            serial_type_len(st)?;
            serial_types.push(st);
            pos += w as usize;
        }
        let mut columns = Vec::with_capacity(want);
        for st in serial_types {
            let len = serial_type_len(st)? as usize;
            let body = region.get(pos..pos + len)?;
            let (value, _) = super::record::decode_body(st, body, self.encoding);
            columns.push(value);
            pos += len;
        }
        Some(columns)
    }

    fn sliding_scan(
        &self,
        out: &mut Vec<CarvedRecord>,
        bytes: &[u8],
        from: usize,
        end: usize,
        origin: CarveOrigin,
        page: u32,
    ) {
        let mut off = from;
        while off + 2 < end {
            if let Some((columns, consumed)) = self.try_full_cell(bytes, off, end) {
                if self.push_candidate(out, origin, page, off, columns, true, 0, None) {
                    off += consumed;
                    continue;
                }
                // a valid cell that was live-duplicate or low-scoring still
                // occupies its bytes
                off += consumed;
                continue;
            }
            off += 1;
        }
    }
}

fn decode_exact(payload: &[u8], encoding: TextEncoding) -> Option<Vec<TypedValue>> {
    let (header_len, w) = read_varint(payload, 0).ok()?;
    let header_len = header_len as usize;
    if header_len < w as usize || header_len > payload.len() {
        return None;
    }
    let mut pos = w as usize;
    let mut body = 0u64;
    while pos < header_len {
        let (st, stw) = read_varint(payload, pos).ok()?;
        body += serial_type_len(st)?;
        pos += stw as usize;
    }
    if pos != header_len || header_len as u64 + body != payload.len() as u64 {
        return None;
    }
    decode_record(payload, encoding).ok().map(|(v, _)| v)
}

/// Collect every page number on the freelist: trunk pages and their leaves.
fn freelist_pages(db: &Database) -> (Vec<(u32, bool)>, u32) {
    let mut pages = Vec::new();
    let mut warnings = 0;
    let mut seen = HashSet::new();
    let mut trunk = db.header.freelist_head;
    while trunk != 0 && seen.insert(trunk) {
        let bytes = match db.page(trunk) {
            Ok(b) => b,
            Err(_) => {
                warnings += 1;
                break;
            }
        };
        pages.push((trunk, true));
        let next = u32::from_be_bytes(bytes[0..4].try_into().unwrap());
        let count = u32::from_be_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let max = (bytes.len() - 8) / 4;
        if count > max {
            warnings += 1;
        }
        for i in 0..count.min(max) {
            let leaf = u32::from_be_bytes(bytes[8 + i * 4..12 + i * 4].try_into().unwrap());
            if leaf != 0 && seen.insert(leaf) {
                pages.push((leaf, false));
            }
        }
        trunk = next;
    }
    (pages, warnings)
}

/// Carve records out of freelist pages. Leaf freelist pages keep their old
/// page image, so a page that still parses as a table leaf is decoded
/// through its own cell pointers; anything else is byte-scanned.
pub fn carve_freelist(
    db: &Database,
    live: &LiveIndex,
    shapes: &[Shape],
    threshold: f64,
) -> CarveReport {
    let carver = Carver {
        encoding: db.header.text_encoding,
        usable: db.usable_size(),
        live,
        shapes,
        threshold,
    };
    let mut report = CarveReport::default();
    let (pages, warnings) = freelist_pages(db);
    report.warnings += warnings;
    for (page_no, is_trunk) in pages {
        let bytes = match db.page(page_no) {
            Ok(b) => b,
            Err(_) => {
                report.warnings += 1;
                continue;
            }
        };
        let end = carver.usable.min(bytes.len());
        if is_trunk {
            // the trunk header overwrote the page start; scan what remains
            let count = u32::from_be_bytes(bytes[4..8].try_into().unwrap()) as usize;
            let from = (8 + count.saturating_mul(4)).min(end);
            carver.sliding_scan(
                &mut report.records,
                bytes,
                from,
                end,
                CarveOrigin::FreelistPage,
                page_no,
            );
            continue;
        }
        match PageView::parse(bytes, page_no) {
            Ok(view) if view.looks_like_table_leaf() => {
                decode_leaf_cells(&carver, &view, page_no, &mut report);
            }
            _ => carver.sliding_scan(
                &mut report.records,
                bytes,
                0,
                end,
                CarveOrigin::FreelistPage,
                page_no,
            ),
        }
    }
    report
}

/// Decode the cells of a freelist page that still carries an intact leaf
/// image. Spilled payloads are truncated to their local part because the
/// overflow pages may have been reused.
fn decode_leaf_cells(carver: &Carver, view: &PageView, page_no: u32, report: &mut CarveReport) {
    let bytes = view.bytes;
    let (_, max_local) = leaf_local_range(carver.usable);
    for i in 0..view.cell_count as usize {
        let off = match view.cell_pointer(i) {
            Ok(o) if o < bytes.len() => o,
            _ => {
                report.warnings += 1;
                continue;
            }
        };
        let parsed = (|| {
            let (payload_len, w1) = read_varint(bytes, off).ok()?;
            let (_rowid, w2) = read_varint(bytes, off + w1 as usize).ok()?;
            let start = off + w1 as usize + w2 as usize;
            let payload_len = payload_len as usize;
            let local = if payload_len <= max_local {
                payload_len
            } else {
                let (min_local, _) = leaf_local_range(carver.usable);
                let k = min_local + (payload_len - min_local) % (carver.usable - 4);
                if k <= max_local {
                    k
                } else {
                    min_local
                }
            }
            .min(bytes.len().saturating_sub(start));
            let payload = bytes.get(start..start + local)?;
            let complete = local == payload_len;
            let columns = if complete {
                decode_exact(payload, carver.encoding)?
            } else {
                decode_prefix(payload, carver.encoding)?
            };
            Some((columns, complete))
        })();
        match parsed {
            Some((columns, complete)) => {
                carver.push_candidate(
                    &mut report.records,
                    CarveOrigin::FreelistPage,
                    page_no,
                    off,
                    columns,
                    complete,
                    0,
                    None,
                );
            }
            None => report.warnings += 1,
        }
    }
    // the page's own freeblocks and gap may hold even older records
    carve_page_slack(carver, view, page_no, report);
}

/// Decode as many leading columns as the available payload prefix allows.
fn decode_prefix(payload: &[u8], encoding: TextEncoding) -> Option<Vec<TypedValue>> {
    let (header_len, w) = read_varint(payload, 0).ok()?;
    let header_len = header_len as usize;
    if header_len < w as usize || header_len > payload.len() {
        return None;
    }
    let mut pos = w as usize;
    let mut serial_types = Vec::new();
    while pos < header_len {
        let (st, stw) = read_varint(payload, pos).ok()?;
        serial_type_len(st)?;
        serial_types.push(st);
        pos += stw as usize;
    }
    if pos != header_len {
        return None;
    }
    let mut columns = Vec::new();
    let mut body = header_len;
    for st in serial_types {
        let len = serial_type_len(st)? as usize;
        match payload.get(body..body + len) {
            Some(bytes) => {
                let (value, _) = super::record::decode_body(st, bytes, encoding);
                columns.push(value);
                body += len;
            }
            None => break,
        }
    }
    if columns.is_empty() {
        None
    } else {
        Some(columns)
    }
}

/// Carve the unallocated gap and freeblock chains of every live table-leaf
/// page (freelist pages are handled by [`carve_freelist`]).
pub fn carve_unallocated(
    db: &Database,
    live: &LiveIndex,
    shapes: &[Shape],
    threshold: f64,
) -> CarveReport {
    let carver = Carver {
        encoding: db.header.text_encoding,
        usable: db.usable_size(),
        live,
        shapes,
        threshold,
    };
    let mut report = CarveReport::default();
    let (freelist, _) = freelist_pages(db);
    let on_freelist: HashSet<u32> = freelist.iter().map(|(p, _)| *p).collect();
    for page_no in 1..=db.page_count {
        if on_freelist.contains(&page_no) {
            continue;
        }
        let bytes = match db.page(page_no) {
            Ok(b) => b,
            Err(_) => {
                report.warnings += 1;
                continue;
            }
        };
        if bytes[if page_no == 1 { 100 } else { 0 }] != PAGE_LEAF_TABLE {
            continue;
        }
        if let Ok(view) = PageView::parse(bytes, page_no) {
            if view.looks_like_table_leaf() {
                carve_page_slack(&carver, &view, page_no, &mut report);
            }
        }
    }
    report
}

fn carve_page_slack(carver: &Carver, view: &PageView, page_no: u32, report: &mut CarveReport) {
    let bytes = view.bytes;
    let end = carver.usable.min(bytes.len());
    // gap between the cell pointer array and the cell content area
    let gap_start = view.pointers_end;
    let gap_end = (view.content_start as usize).min(end);
    if gap_start < gap_end {
        carver.sliding_scan(
            &mut report.records,
            bytes,
            gap_start,
            gap_end,
            CarveOrigin::Unallocated,
            page_no,
        );
    }
    // freeblock chain: first two bytes of each freeblock point at the next
    let mut fb = view.first_freeblock as usize;
    let mut hops = 0;
    while fb != 0 && fb + 4 <= end && hops < 1024 {
        hops += 1;
        let next = u16::from_be_bytes([bytes[fb], bytes[fb + 1]]) as usize;
        let size = u16::from_be_bytes([bytes[fb + 2], bytes[fb + 3]]) as usize;
        let fb_end = (fb + size.max(4)).min(end);
        carve_freeblock(carver, bytes, fb, fb_end, page_no, report);
        if next <= fb {
            break;
        }
        fb = next;
    }
}

fn carve_freeblock(
    carver: &Carver,
    bytes: &[u8],
    fb: usize,
    fb_end: usize,
    page_no: u32,
    report: &mut CarveReport,
) {
    let start = fb + 4;
    if start >= fb_end {
        return;
    }
    // coalesced freeblocks keep their second and later cells fully intact
    let before = report.records.len();
    carver.sliding_scan(
        &mut report.records,
        bytes,
        start,
        fb_end,
        CarveOrigin::Freeblock,
        page_no,
    );
    let found_at_start = report.records[before..].iter().any(|r| r.offset == start);
    if found_at_start {
        return;
    }
    // head cell: its cell varints were clobbered by the freeblock header
    if let Some(columns) = carver.try_record_with_header(bytes, start, fb_end) {
        carver.push_candidate(
            &mut report.records,
            CarveOrigin::Freeblock,
            page_no,
            start,
            columns,
            true,
            0,
            None,
        );
        return;
    }
    for shape in carver.shapes {
        for skip in 0..=MAX_SKIP {
            if let Some(columns) = carver.try_headerless(bytes, start, fb_end, shape, skip) {
                let complete = skip == 0;
                if carver.push_candidate(
                    &mut report.records,
                    CarveOrigin::Freeblock,
                    page_no,
                    start,
                    columns,
                    complete,
                    skip,
                    Some(shape.table.clone()),
                ) {
                    return;
                }
            }
        }
    }
}

/// Scan an arbitrary byte stream (WAL, rollback journal) for intact cells.
pub fn carve_raw(
    bytes: &[u8],
    encoding: TextEncoding,
    live: &LiveIndex,
    shapes: &[Shape],
    threshold: f64,
) -> CarveReport {
    let carver = Carver {
        encoding,
        usable: bytes.len(),
        live,
        shapes,
        threshold,
    };
    let mut report = CarveReport::default();
    carver.sliding_scan(
        &mut report.records,
        bytes,
        0,
        bytes.len(),
        CarveOrigin::Unallocated,
        0,
    );
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plausibility_counts_text_and_timestamps() {
        let cols = vec![
            TypedValue::Null,
            TypedValue::Text("http://example.test/x".into()),
            TypedValue::Int(1_623_456_789_000_000), // microseconds, plausible
            TypedValue::Int(3),                     // small flag: neutral
            TypedValue::Int(987_654_321_000),       // timestamp-scale but out of window? (ms ~2001: in window)
        ];
        // url text + two timestamp-scale ints, all clean
        assert!((plausibility(&cols) - 1.0).abs() < 1e-9);
        let with_garbage = vec![
            TypedValue::Text("http://example.test/x".into()),
            TypedValue::Text("\u{fffd}binary".into()),
        ];
        assert!((plausibility(&with_garbage) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn plausibility_empty_and_null_only() {
        assert_eq!(plausibility(&[]), 0.0);
        assert_eq!(plausibility(&[TypedValue::Null, TypedValue::Null]), 0.0);
    }

    #[test]
    fn plausibility_monotone_in_good_text_columns() {
        let base = vec![
            TypedValue::Text("title".into()),
            TypedValue::Int(7),
            TypedValue::Blob(vec![1, 2]),
        ];
        let mut better = base.clone();
        better[1] = TypedValue::Text("readable".into());
        assert!(plausibility(&better) >= plausibility(&base));
    }

    #[test]
    fn garbage_text_scores_zero() {
        let cols = vec![TypedValue::Text("\u{fffd}\u{fffd}ab".into())];
        assert_eq!(plausibility(&cols), 0.0);
    }

    #[test]
    fn live_index_suffix_matching() {
        let mut idx = LiveIndex::default();
        let row = vec![
            TypedValue::Null,
            TypedValue::Text("http://a.test/".into()),
            TypedValue::Int(5),
        ];
        idx.add_row(&row);
        assert!(idx.contains(0, &row));
        assert!(idx.contains(1, &row[1..]));
        assert!(!idx.contains(0, &row[1..]));
        assert!(!idx.contains(1, &[TypedValue::Text("http://b.test/".into()), TypedValue::Int(5)]));
    }
}
