//! regf on-disk structures: base block, hbin cells, nk/vk records and the
//! lf/lh/li/ri subkey lists. Malformed cells are skipped with a warning
//! count; only an unreachable root is fatal.

use crate::acquisition::REGF_MAGIC;
use crate::timestamp::{filetime_to_utc, NormalizedTime};
use std::collections::HashSet;
use thiserror::Error;

/// First hbin starts here; all cell offsets are relative to it.
const HBIN_BASE: usize = 4096;
/// Value data larger than this is truncated and flagged.
const VALUE_DATA_CAP: usize = 1 << 20;
const NO_OFFSET: u32 = 0xffff_ffff;

#[derive(Debug, Error)]
pub enum HiveError {
    #[error("not a registry hive (bad magic)")]
    NotHive,
    #[error("root key unreachable: {0}")]
    CorruptHive(&'static str),
}

#[derive(Debug, Clone)]
pub struct HiveValue {
    pub name: String,
    pub value_type: u32,
    pub data: Vec<u8>,
    /// Set when data was cut at the size cap or stored in an unsupported
    /// big-data cell.
    pub truncated: bool,
}

impl HiveValue {
    /// Decode REG_SZ / REG_EXPAND_SZ data (UTF-16LE, NUL-terminated).
    pub fn as_string(&self) -> Option<String> {
        if self.value_type != 1 && self.value_type != 2 {
            return None;
        }
        let units: Vec<u16> = self
            .data
            .chunks_exact(2)
            .map(|p| u16::from_le_bytes([p[0], p[1]]))
            .take_while(|u| *u != 0)
            .collect();
        String::from_utf16(&units).ok()
    }
}

#[derive(Debug, Clone)]
pub struct HiveKey {
    pub name: String,
    /// Backslash-joined name chain from the root.
    pub path: String,
    pub last_written: Option<NormalizedTime>,
    pub values: Vec<HiveValue>,
    pub subkeys: Vec<HiveKey>,
}

impl HiveKey {
    pub fn walk<'a>(&'a self, visit: &mut impl FnMut(&'a HiveKey)) {
        visit(self);
        for sub in &self.subkeys {
            sub.walk(visit);
        }
    }

    pub fn find(&self, path_suffix: &str) -> Option<&HiveKey> {
        let mut found = None;
        let needle = path_suffix.to_ascii_lowercase();
        self.walk(&mut |key| {
            if found.is_none() && key.path.to_ascii_lowercase().ends_with(&needle) {
                found = Some(key);
            }
        });
        found
    }

    pub fn value(&self, name: &str) -> Option<&HiveValue> {
        self.values.iter().find(|v| v.name.eq_ignore_ascii_case(name))
    }
}

#[derive(Debug)]
pub struct HiveParse {
    pub root: HiveKey,
    pub warnings: u32,
}

struct Reader<'a> {
    bytes: &'a [u8],
    warnings: u32,
    visited: HashSet<u32>,
}

impl<'a> Reader<'a> {
    /// Payload of the cell at an hbin-relative offset.
    fn cell(&self, offset: u32) -> Option<&'a [u8]> {
        if offset == NO_OFFSET {
            return None;
        }
        let start = HBIN_BASE.checked_add(offset as usize)?;
        let size_bytes = self.bytes.get(start..start + 4)?;
        let size = i32::from_le_bytes(size_bytes.try_into().unwrap());
        let len = size.unsigned_abs() as usize;
        if len < 4 {
            return None;
        }
        self.bytes.get(start + 4..start + len)
    }

    fn read_key(&mut self, offset: u32, parent_path: &str, depth: u32) -> Option<HiveKey> {
        if depth > 512 || !self.visited.insert(offset) {
            self.warnings += 1;
            return None;
        }
        let cell = self.cell(offset)?;
        if cell.len() < 76 || &cell[..2] != b"nk" {
            return None;
        }
        let flags = u16::from_le_bytes([cell[2], cell[3]]);
        let ticks = u64::from_le_bytes(cell[4..12].try_into().unwrap());
        let subkey_count = u32::from_le_bytes(cell[20..24].try_into().unwrap());
        let subkey_list = u32::from_le_bytes(cell[28..32].try_into().unwrap());
        let value_count = u32::from_le_bytes(cell[36..40].try_into().unwrap());
        let value_list = u32::from_le_bytes(cell[40..44].try_into().unwrap());
        let name_len = u16::from_le_bytes(cell[72..74].try_into().unwrap()) as usize;
        let name_bytes = cell.get(76..76 + name_len)?;
        let name = if flags & 0x20 != 0 {
            // KEY_COMP_NAME: Latin-1 single bytes
            name_bytes.iter().map(|b| *b as char).collect()
        } else {
            let units: Vec<u16> = name_bytes
                .chunks_exact(2)
                .map(|p| u16::from_le_bytes([p[0], p[1]]))
                .collect();
            String::from_utf16_lossy(&units)
        };
        let path = if parent_path.is_empty() {
            name.clone()
        } else {
            format!("{parent_path}\\{name}")
        };

        let mut values = Vec::new();
        if value_count > 0 {
            match self.cell(value_list) {
                Some(list) => {
                    let n = (value_count as usize).min(list.len() / 4);
                    if n < value_count as usize {
                        self.warnings += 1;
                    }
                    for i in 0..n {
                        let off = u32::from_le_bytes(list[i * 4..i * 4 + 4].try_into().unwrap());
                        match self.read_value(off) {
                            Some(v) => values.push(v),
                            None => self.warnings += 1,
                        }
                    }
                }
                None => self.warnings += 1,
            }
        }

        let mut subkeys = Vec::new();
        if subkey_count > 0 {
            let mut offsets = Vec::new();
            self.collect_subkey_offsets(subkey_list, &mut offsets, 0);
            for off in offsets {
                match self.read_key(off, &path, depth + 1) {
                    Some(k) => subkeys.push(k),
                    None => self.warnings += 1,
                }
            }
        }

        Some(HiveKey {
            name,
            path,
            last_written: filetime_to_utc(ticks).ok(),
            values,
            subkeys,
        })
    }

    fn collect_subkey_offsets(&mut self, list_offset: u32, out: &mut Vec<u32>, depth: u32) {
        if depth > 16 {
            self.warnings += 1;
            return;
        }
        let cell = match self.cell(list_offset) {
            Some(c) if c.len() >= 4 => c,
            _ => {
                self.warnings += 1;
                return;
            }
        };
        let count = u16::from_le_bytes([cell[2], cell[3]]) as usize;
        match &cell[..2] {
            b"lf" | b"lh" => {
                for i in 0..count {
                    let base = 4 + i * 8;
                    match cell.get(base..base + 4) {
                        Some(b) => out.push(u32::from_le_bytes(b.try_into().unwrap())),
                        None => self.warnings += 1,
                    }
                }
            }
            b"li" => {
                for i in 0..count {
                    let base = 4 + i * 4;
                    match cell.get(base..base + 4) {
                        Some(b) => out.push(u32::from_le_bytes(b.try_into().unwrap())),
                        None => self.warnings += 1,
                    }
                }
            }
            b"ri" => {
                for i in 0..count {
                    let base = 4 + i * 4;
                    match cell.get(base..base + 4) {
                        Some(b) => {
                            let sub = u32::from_le_bytes(b.try_into().unwrap());
                            self.collect_subkey_offsets(sub, out, depth + 1);
                        }
                        None => self.warnings += 1,
                    }
                }
            }
            _ => self.warnings += 1,
        }
    }

    fn read_value(&mut self, offset: u32) -> Option<HiveValue> {
        let cell = self.cell(offset)?;
        if cell.len() < 20 || &cell[..2] != b"vk" {
            return None;
        }
        let name_len = u16::from_le_bytes([cell[2], cell[3]]) as usize;
        let raw_size = u32::from_le_bytes(cell[4..8].try_into().unwrap());
        let data_offset = u32::from_le_bytes(cell[8..12].try_into().unwrap());
        let value_type = u32::from_le_bytes(cell[12..16].try_into().unwrap());
        let flags = u16::from_le_bytes([cell[16], cell[17]]);
        let name = if name_len == 0 {
            String::new()
        } else {
            let name_bytes = cell.get(20..20 + name_len)?;
            if flags & 0x01 != 0 {
                name_bytes.iter().map(|b| *b as char).collect()
            } else {
                let units: Vec<u16> = name_bytes
                    .chunks_exact(2)
                    .map(|p| u16::from_le_bytes([p[0], p[1]]))
                    .collect();
                String::from_utf16_lossy(&units)
            }
        };
        let mut truncated = false;
        let data = if raw_size & 0x8000_0000 != 0 {
            // data stored inline in the offset field
            let len = (raw_size & 0x7fff_ffff) as usize;
            if len > 4 {
                truncated = true;
            }
            cell[8..12][..len.min(4)].to_vec()
        } else {
            let len = raw_size as usize;
            match self.cell(data_offset) {
                Some(data_cell) if data_cell.len() >= 2 && &data_cell[..2] == b"db" => {
                    // big-data cells are out of scope; keep the value, drop the data
                    truncated = true;
                    Vec::new()
                }
                Some(data_cell) => {
                    let take = len.min(data_cell.len()).min(VALUE_DATA_CAP);
                    if take < len {
                        truncated = true;
                    }
                    data_cell[..take].to_vec()
                }
                None => {
                    if len > 0 {
                        truncated = true;
                    }
                    Vec::new()
                }
            }
        };
        Some(HiveValue {
            name,
            value_type,
            data,
            truncated,
        })
    }
}

/// Parse a hive image into its key tree.
pub fn parse_hive(bytes: &[u8]) -> Result<HiveParse, HiveError> {
    if bytes.len() < 4 || &bytes[..4] != REGF_MAGIC {
        return Err(HiveError::NotHive);
    }
    if bytes.len() < HBIN_BASE + 32 {
        return Err(HiveError::CorruptHive("no hbin space"));
    }
    let root_offset = u32::from_le_bytes(
        bytes
            .get(36..40)
            .ok_or(HiveError::CorruptHive("short base block"))?
            .try_into()
            .unwrap(),
    );
    let mut reader = Reader {
        bytes,
        warnings: 0,
        visited: HashSet::new(),
    };
    let root = reader
        .read_key(root_offset, "", 0)
        .ok_or(HiveError::CorruptHive("root nk"))?;
    Ok(HiveParse {
        root,
        warnings: reader.warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrong_magic_is_not_hive() {
        assert!(matches!(parse_hive(b"SQLi"), Err(HiveError::NotHive)));
        assert!(matches!(parse_hive(b""), Err(HiveError::NotHive)));
    }

    #[test]
    fn truncated_base_block() {
        let mut bytes = Vec::from(*REGF_MAGIC);
        bytes.extend_from_slice(&[0u8; 64]);
        assert!(matches!(
            parse_hive(&bytes),
            Err(HiveError::CorruptHive(_))
        ));
    }
}
