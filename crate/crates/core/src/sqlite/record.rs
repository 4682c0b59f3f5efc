//! Record (row payload) decoding: a header of serial types followed by the
//! column bodies.

use super::header::TextEncoding;
use super::varint::read_varint;
use super::SqliteError;

#[derive(Debug, Clone, PartialEq)]
pub enum TypedValue {
    Null,
    Int(i64),
    Float(f64),
    Text(String),
    Blob(Vec<u8>),
}

impl TypedValue {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            TypedValue::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            TypedValue::Text(s) => Some(s),
            _ => None,
        }
    }

    /// Stable byte form used for live/carved equality checks.
    pub fn signature(&self, out: &mut Vec<u8>) {
        match self {
            TypedValue::Null => out.push(b'n'),
            TypedValue::Int(v) => {
                out.push(b'i');
                out.extend_from_slice(&v.to_be_bytes());
            }
            TypedValue::Float(v) => {
                out.push(b'f');
                out.extend_from_slice(&v.to_be_bytes());
            }
            TypedValue::Text(s) => {
                out.push(b't');
                out.extend_from_slice(&(s.len() as u64).to_be_bytes());
                out.extend_from_slice(s.as_bytes());
            }
            TypedValue::Blob(b) => {
                out.push(b'b');
                out.extend_from_slice(&(b.len() as u64).to_be_bytes());
                out.extend_from_slice(b);
            }
        }
    }
}

/// Byte length of a serial type's body; `None` for the reserved types 10/11.
pub fn serial_type_len(serial_type: u64) -> Option<u64> {
    match serial_type {
        0 | 8 | 9 => Some(0),
        1 => Some(1),
        2 => Some(2),
        3 => Some(3),
        4 => Some(4),
        5 => Some(6),
        6 | 7 => Some(8),
        10 | 11 => None,
        n if n >= 12 => Some((n - 12) / 2),
        _ => None,
    }
}

fn signed_be(bytes: &[u8]) -> i64 {
    let mut v: i64 = if bytes[0] & 0x80 != 0 { -1 } else { 0 };
    for b in bytes {
        v = (v << 8) | (*b as i64 & 0xff);
    }
    v
}

pub fn decode_text(bytes: &[u8], encoding: TextEncoding) -> (String, bool) {
    match encoding {
        TextEncoding::Utf8 => match std::str::from_utf8(bytes) {
            Ok(s) => (s.to_string(), false),
            Err(_) => (String::from_utf8_lossy(bytes).into_owned(), true),
        },
        TextEncoding::Utf16Le | TextEncoding::Utf16Be => {
            let mut units = Vec::with_capacity(bytes.len() / 2);
            for pair in bytes.chunks_exact(2) {
                units.push(match encoding {
                    TextEncoding::Utf16Le => u16::from_le_bytes([pair[0], pair[1]]),
                    _ => u16::from_be_bytes([pair[0], pair[1]]),
                });
            }
            let lossy = bytes.len() % 2 != 0;
            match String::from_utf16(&units) {
                Ok(s) => (s, lossy),
                Err(_) => (String::from_utf16_lossy(&units), true),
            }
        }
    }
}

pub(super) fn decode_body(serial_type: u64, body: &[u8], encoding: TextEncoding) -> (TypedValue, bool) {
    match serial_type {
        0 => (TypedValue::Null, false),
        1..=6 => (TypedValue::Int(signed_be(body)), false),
        7 => (
            TypedValue::Float(f64::from_be_bytes(body.try_into().unwrap())),
            false,
        ),
        8 => (TypedValue::Int(0), false),
        9 => (TypedValue::Int(1), false),
        n if n >= 13 && n % 2 == 1 => {
            let (s, lossy) = decode_text(body, encoding);
            (TypedValue::Text(s), lossy)
        }
        n if n >= 12 => (TypedValue::Blob(body.to_vec()), false),
        _ => (TypedValue::Null, false),
    }
}

/// Decode a full record payload. Returns the values plus a lossy-text flag.
pub fn decode_record(
    payload: &[u8],
    encoding: TextEncoding,
) -> Result<(Vec<TypedValue>, bool), SqliteError> {
    let (header_len, w) = read_varint(payload, 0)?;
    let header_len = header_len as usize;
    if header_len < w as usize || header_len > payload.len() {
        return Err(SqliteError::Malformed("record header length"));
    }
    let mut serial_types = Vec::new();
    let mut off = w as usize;
    while off < header_len {
        let (st, stw) = read_varint(payload, off)?;
        serial_types.push(st);
        off += stw as usize;
    }
    if off != header_len {
        return Err(SqliteError::Malformed("record header overrun"));
    }
    let mut values = Vec::with_capacity(serial_types.len());
    let mut lossy = false;
    let mut body = header_len;
    for st in serial_types {
        let len = serial_type_len(st).ok_or(SqliteError::Malformed("reserved serial type"))?
            as usize;
        let bytes = payload
            .get(body..body + len)
            .ok_or(SqliteError::Malformed("serial types exceed payload"))?;
        let (value, l) = decode_body(st, bytes, encoding);
        lossy |= l;
        values.push(value);
        body += len;
    }
    Ok((values, lossy))
}

#[cfg(test)]
mod tests {
    use super::*;

    const UTF8: TextEncoding = TextEncoding::Utf8;

    #[test]
    fn literal_zero_uses_serial_type_8() {
        // engine dump of a one-row table storing literal 0: record is [02 08]
        let (vals, _) = decode_record(&[0x02, 0x08], UTF8).unwrap();
        assert_eq!(vals, vec![TypedValue::Int(0)]);
    }

    #[test]
    fn serial_type_0_is_null() {
        let (vals, _) = decode_record(&[0x02, 0x00], UTF8).unwrap();
        assert_eq!(vals, vec![TypedValue::Null]);
    }

    #[test]
    fn text_tor_is_serial_type_19() {
        // engine dump: payload [02 13 74 6f 72]
        let (vals, lossy) = decode_record(&[0x02, 0x13, 0x74, 0x6f, 0x72], UTF8).unwrap();
        assert_eq!(vals, vec![TypedValue::Text("tor".into())]);
        assert!(!lossy);
        assert_eq!(serial_type_len(19), Some(3));
    }

    #[test]
    fn two_byte_int_and_float() {
        // engine dumps: 1000 -> [02 02 03 e8]; 1.5 -> [02 07 3f f8 ..]
        let (vals, _) = decode_record(&[0x02, 0x02, 0x03, 0xe8], UTF8).unwrap();
        assert_eq!(vals, vec![TypedValue::Int(1000)]);
        let mut payload = vec![0x02, 0x07];
        payload.extend_from_slice(&1.5f64.to_be_bytes());
        let (vals, _) = decode_record(&payload, UTF8).unwrap();
        assert_eq!(vals, vec![TypedValue::Float(1.5)]);
    }

    #[test]
    fn negative_ints_sign_extend() {
        let (vals, _) = decode_record(&[0x02, 0x01, 0xff], UTF8).unwrap();
        assert_eq!(vals, vec![TypedValue::Int(-1)]);
        let (vals, _) = decode_record(&[0x02, 0x03, 0xff, 0xfe, 0x00], UTF8).unwrap();
        assert_eq!(vals, vec![TypedValue::Int(-512)]);
    }

    #[test]
    fn body_shorter_than_serial_types_is_malformed() {
        assert_eq!(
            decode_record(&[0x02, 0x13, 0x74], UTF8).unwrap_err(),
            SqliteError::Malformed("serial types exceed payload")
        );
    }

    #[test]
    fn lossy_text_flagged() {
        let (vals, lossy) = decode_record(&[0x02, 0x15, 0xff, 0xfe, 0x41, 0x42], UTF8).unwrap();
        assert!(lossy);
        assert!(matches!(&vals[0], TypedValue::Text(_)));
    }

    #[test]
    fn utf16le_text() {
        let mut payload = vec![0x02, 25]; // 6-byte text: (25 - 13) / 2
        payload.extend_from_slice(&[0x74, 0x00, 0x6f, 0x00, 0x72, 0x00]);
        let (vals, lossy) = decode_record(&payload, TextEncoding::Utf16Le).unwrap();
        assert_eq!(vals, vec![TypedValue::Text("tor".into())]);
        assert!(!lossy);
    }

    #[test]
    fn empty_record() {
        let (vals, _) = decode_record(&[0x01], UTF8).unwrap();
        assert!(vals.is_empty());
    }
}
