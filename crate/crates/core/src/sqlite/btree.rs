//! Table B-tree traversal: interior (0x05) and leaf (0x0d) pages, overflow
//! chains, records in rowid order.

use super::record::{decode_record, TypedValue};
use super::varint::read_varint;
use super::{Database, SqliteError, OVERFLOW_CHAIN_CAP};
use std::collections::HashSet;

pub const PAGE_INTERIOR_INDEX: u8 = 0x02;
pub const PAGE_INTERIOR_TABLE: u8 = 0x05;
pub const PAGE_LEAF_TABLE: u8 = 0x0d;

#[derive(Debug, Clone, PartialEq)]
pub struct LiveRecord {
    pub table_name: String,
    pub rowid: i64,
    pub columns: Vec<TypedValue>,
    pub page: u32,
    pub cell_offset: u16,
    pub lossy: bool,
}

/// Parsed page header plus derived offsets.
pub(super) struct PageView<'a> {
    pub bytes: &'a [u8],
    pub page_type: u8,
    pub first_freeblock: u16,
    pub cell_count: u16,
    pub content_start: u32,
    pub right_child: u32,
    pub header_len: usize,
    /// Offset of the first byte after the cell pointer array.
    pub pointers_end: usize,
}

impl<'a> PageView<'a> {
    pub fn parse(bytes: &'a [u8], number: u32) -> Result<PageView<'a>, SqliteError> {
        // page 1 carries the 100-byte database header first
        let base = if number == 1 { 100 } else { 0 };
        if bytes.len() < base + 8 {
            return Err(SqliteError::Truncated(bytes.len()));
        }
        let page_type = bytes[base];
        let interior = page_type == PAGE_INTERIOR_TABLE || page_type == PAGE_INTERIOR_INDEX;
        let header_len = base + if interior { 12 } else { 8 };
        if bytes.len() < header_len {
            return Err(SqliteError::Truncated(bytes.len()));
        }
        let first_freeblock = u16::from_be_bytes([bytes[base + 1], bytes[base + 2]]);
        let cell_count = u16::from_be_bytes([bytes[base + 3], bytes[base + 4]]);
        let raw_start = u16::from_be_bytes([bytes[base + 5], bytes[base + 6]]);
        let content_start = if raw_start == 0 { 65536 } else { raw_start as u32 };
        let right_child = if interior {
            u32::from_be_bytes(bytes[base + 8..base + 12].try_into().unwrap())
        } else {
            0
        };
        Ok(PageView {
            bytes,

            page_type,
            first_freeblock,
            cell_count,
            content_start,
            right_child,
            header_len,
            pointers_end: header_len + cell_count as usize * 2,
        })
    }

    pub fn cell_pointer(&self, index: usize) -> Result<usize, SqliteError> {
        let off = self.header_len + index * 2;
        let ptr = self
            .bytes
            .get(off..off + 2)
            .ok_or(SqliteError::Truncated(off))?;
        Ok(u16::from_be_bytes([ptr[0], ptr[1]]) as usize)
    }

    pub fn looks_like_table_leaf(&self) -> bool {
        self.page_type == PAGE_LEAF_TABLE
            && self.pointers_end <= self.bytes.len()
            && (self.content_start as usize) <= self.bytes.len()
            && (self.cell_count == 0 || self.content_start as usize >= self.pointers_end)
    }
}

/// Maximum local payload on a table leaf before overflow kicks in.
pub(super) fn leaf_local_range(usable: usize) -> (usize, usize) {
    let max_local = usable - 35;
    let min_local = (usable - 12) * 32 / 255 - 23;
    (min_local, max_local)
}

/// Assemble a cell's full payload, following its overflow chain if any.
/// Returns the payload and the cell's total on-page byte length.
pub(super) fn read_cell_payload(
    db: &Database,
    page_bytes: &[u8],
    cell_start: usize,
    payload_len: u64,
    after_varints: usize,
) -> Result<(Vec<u8>, usize), SqliteError> {
    let usable = db.usable_size();
    let (min_local, max_local) = leaf_local_range(usable);
    let payload_len = payload_len as usize;
    if payload_len <= max_local {
        let end = after_varints + payload_len;
        let body = page_bytes
            .get(after_varints..end)
            .ok_or(SqliteError::Truncated(after_varints))?;
        return Ok((body.to_vec(), end - cell_start));
    }
    // spilled payload: K = minLocal + (P - minLocal) % (usable - 4)
    let k = min_local + (payload_len - min_local) % (usable - 4);
    let local = if k <= max_local { k } else { min_local };
    let mut payload = Vec::with_capacity(payload_len);
    let local_end = after_varints + local;
    payload.extend_from_slice(
        page_bytes
            .get(after_varints..local_end)
            .ok_or(SqliteError::Truncated(after_varints))?,
    );
    let ptr_bytes = page_bytes
        .get(local_end..local_end + 4)
        .ok_or(SqliteError::Truncated(local_end))?;
    let mut next = u32::from_be_bytes(ptr_bytes.try_into().unwrap());
    let mut hops = 0;
    while next != 0 && payload.len() < payload_len {
        hops += 1;
        if hops > OVERFLOW_CHAIN_CAP {
            return Err(SqliteError::Malformed("overflow chain too long"));
        }
        let page = db.page(next)?;
        next = u32::from_be_bytes(page[..4].try_into().unwrap());
        let take = (payload_len - payload.len()).min(usable - 4);
        payload.extend_from_slice(&page[4..4 + take]);
    }
    if payload.len() != payload_len {
        return Err(SqliteError::Malformed("overflow chain short"));
    }
    Ok((payload, local_end + 4 - cell_start))
}

/// Depth-first walk of a table B-tree, yielding records in rowid order.
pub fn walk_btree(
    db: &Database,
    root_page: u32,
    table_name: &str,
) -> Result<Vec<LiveRecord>, SqliteError> {
    let mut records = Vec::new();
    let mut visited = HashSet::new();
    walk_page(db, root_page, table_name, &mut visited, &mut records)?;
    Ok(records)
}

fn walk_page(
    db: &Database,
    page_no: u32,
    table_name: &str,
    visited: &mut HashSet<u32>,
    out: &mut Vec<LiveRecord>,
) -> Result<(), SqliteError> {
    if !visited.insert(page_no) {
        return Err(SqliteError::CorruptTree(page_no));
    }
    let bytes = db.page(page_no)?;
    let view = PageView::parse(bytes, page_no)?;
    match view.page_type {
        PAGE_INTERIOR_TABLE => {
            for i in 0..view.cell_count as usize {
                let off = view.cell_pointer(i)?;
                let child = u32::from_be_bytes(
                    bytes
                        .get(off..off + 4)
                        .ok_or(SqliteError::Truncated(off))?
                        .try_into()
                        .unwrap(),
                );
                walk_page(db, child, table_name, visited, out)?;
            }
            walk_page(db, view.right_child, table_name, visited, out)?;
        }
        PAGE_LEAF_TABLE => {
            for i in 0..view.cell_count as usize {
                let off = view.cell_pointer(i)?;
                let (payload_len, w1) = read_varint(bytes, off)?;
                let (rowid, w2) = read_varint(bytes, off + w1 as usize)?;
                let after = off + w1 as usize + w2 as usize;
                let (payload, _) = read_cell_payload(db, bytes, off, payload_len, after)?;
                let (columns, lossy) = decode_record(&payload, db.header.text_encoding)?;
                out.push(LiveRecord {
                    table_name: table_name.to_string(),
                    rowid: rowid as i64,
                    columns,
                    page: page_no,
                    cell_offset: off as u16,
                    lossy,
                });
            }
        }
        other => return Err(SqliteError::CorruptPage(other, page_no)),
    }
    Ok(())
}
