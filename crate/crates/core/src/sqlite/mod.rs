//! Reader for database files in the SQLite on-disk format: live B-tree
//! record extraction plus carving of deleted records out of freelist pages,
//! intra-page freeblocks and unallocated page regions. No SQL layer; the
//! file is treated as an immutable byte image.

mod btree;
mod carve;
mod header;
mod record;
mod schema;
mod varint;

pub use btree::{walk_btree, LiveRecord};
pub use carve::{
    carve_freelist, carve_raw, carve_unallocated, plausibility, shapes_of, CarveOrigin,
    CarveReport, CarvedRecord, LiveIndex, Shape,
};
pub use header::{DbHeader, TextEncoding};
pub use record::{decode_record, TypedValue};
pub use schema::{parse_create_table, read_schema, TableInfo};
pub use varint::{read_varint, varint_len};

use std::path::Path;
use thiserror::Error;

/// Overflow chains longer than this are treated as corrupt.
pub const OVERFLOW_CHAIN_CAP: usize = 1024;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SqliteError {
    #[error("not a database in the SQLite file format")]
    NotSqlite,
    #[error("corrupt database header: {0}")]
    CorruptHeader(&'static str),
    #[error("truncated input at offset {0}")]
    Truncated(usize),
    #[error("malformed record: {0}")]
    Malformed(&'static str),
    #[error("cycle detected in btree at page {0}")]
    CorruptTree(u32),
    #[error("bad page type 0x{0:02x} on page {1}")]
    CorruptPage(u8, u32),
    #[error("page {0} out of bounds")]
    PageOutOfBounds(u32),
    #[error("io: {0}")]
    Io(String),
}

/// An immutable byte image of one database file.
pub struct Database {
    bytes: Vec<u8>,
    pub header: DbHeader,
    /// Page count actually backed by the file (the header field may be stale).
    pub page_count: u32,
}

impl Database {
    pub fn from_bytes(bytes: Vec<u8>) -> Result<Database, SqliteError> {
        let header = header::parse_header(&bytes)?;
        let by_len = (bytes.len() / header.page_size as usize) as u32;
        let page_count = if header.page_count == 0 {
            by_len
        } else {
            header.page_count.min(by_len)
        };
        Ok(Database {
            bytes,
            header,
            page_count,
        })
    }

    pub fn open(path: &Path) -> Result<Database, SqliteError> {
        let bytes = std::fs::read(path).map_err(|e| SqliteError::Io(e.to_string()))?;
        Database::from_bytes(bytes)
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    /// Usable bytes per page (page size minus the reserved region).
    pub fn usable_size(&self) -> usize {
        self.header.page_size as usize - self.header.reserved_per_page as usize
    }

    /// One-based page access.
    pub fn page(&self, number: u32) -> Result<&[u8], SqliteError> {
        if number == 0 || number > self.page_count {
            return Err(SqliteError::PageOutOfBounds(number));
        }
        let ps = self.header.page_size as usize;
        let start = (number as usize - 1) * ps;
        self.bytes
            .get(start..start + ps)
            .ok_or(SqliteError::PageOutOfBounds(number))
    }
}
