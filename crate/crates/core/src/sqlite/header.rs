//! The 100-byte database header.

use super::SqliteError;
use crate::acquisition::SQLITE_MAGIC;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TextEncoding {
    Utf8,
    Utf16Le,
    Utf16Be,
}

#[derive(Debug, Clone, Copy)]
pub struct DbHeader {
    /// Bytes per page; the on-disk value 1 encodes 65536.
    pub page_size: u32,
    /// Reserved bytes at the end of every page.
    pub reserved_per_page: u8,
    /// In-header database size in pages (may be stale in old files).
    pub page_count: u32,
    /// First freelist trunk page, 0 when the freelist is empty.
    pub freelist_head: u32,
    /// Number of freelist pages.
    pub freelist_count: u32,
    pub text_encoding: TextEncoding,
}

fn be32(bytes: &[u8], off: usize) -> u32 {
    u32::from_be_bytes(bytes[off..off + 4].try_into().unwrap())
}

/// Decode and validate the header fields this toolkit relies on.
pub fn parse_header(bytes: &[u8]) -> Result<DbHeader, SqliteError> {
    if bytes.len() < 100 {
        return Err(SqliteError::Truncated(bytes.len()));
    }
    if &bytes[..16] != SQLITE_MAGIC {
        return Err(SqliteError::NotSqlite);
    }
    let raw_page_size = u16::from_be_bytes([bytes[16], bytes[17]]);
    let page_size: u32 = match raw_page_size {
        1 => 65536,
        n if n >= 512 && n.is_power_of_two() => n as u32,
        _ => return Err(SqliteError::CorruptHeader("page size")),
    };
    let reserved_per_page = bytes[20];
    if page_size - (reserved_per_page as u32) < 480 {
        return Err(SqliteError::CorruptHeader("usable size"));
    }
    let page_count = be32(bytes, 28);
    let freelist_head = be32(bytes, 32);
    let freelist_count = be32(bytes, 36);
    if page_count != 0 && freelist_head > page_count {
        return Err(SqliteError::CorruptHeader("freelist head"));
    }
    let text_encoding = match be32(bytes, 56) {
        // 0 occurs in files whose schema was never written
        0 | 1 => TextEncoding::Utf8,
        2 => TextEncoding::Utf16Le,
        3 => TextEncoding::Utf16Be,
        _ => return Err(SqliteError::CorruptHeader("text encoding")),
    };
    Ok(DbHeader {
        page_size,
        reserved_per_page,
        page_count,
        freelist_head,
        freelist_count,
        text_encoding,
    })
}
